#include "atmgad/config.hpp"

#include <algorithm>

#include "atmgad/error.hpp"

namespace atmgad {

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
    if (!ok) throw ValidationError(where + ": unknown key '" + it.key() + "'");
  }
}

namespace {

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type (" + std::string(it->type_name()) + ")");
  }
}

}  // namespace

Json to_json(const GCNConfig& c) {
  return {{"layers", c.layers}, {"hidden_dim", c.hidden_dim}, {"out_dim", c.out_dim}, {"dropout", c.dropout}};
}

Json to_json(const HeadConfig& c) {
  return {{"window_hidden", c.window_hidden},
          {"classifier_hidden", c.classifier_hidden},
          {"catalog_mode", to_string(c.catalog_mode)}};
}

Json to_json(const ModelConfig& c) {
  return {{"gcn", to_json(c.gcn)}, {"head", to_json(c.head)}, {"ablation", to_string(c.ablation)}};
}

Json to_json(const TrainConfig& c) {
  Json j = {{"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"optimizer", c.optimizer},
            {"refresh_interval", c.refresh_interval},
            {"seed", c.seed},
            {"ablation", to_string(c.ablation)},
            {"class_weighting", c.class_weighting},
            {"window_slack", c.window_slack},
            {"instance_cap", c.instance_cap},
            {"jobs", c.jobs}};
  j["delta_fixed"] = c.delta_fixed ? Json(*c.delta_fixed) : Json(nullptr);
  j["delta_scope"] = c.delta_scope ? Json(*c.delta_scope) : Json(nullptr);
  return j;
}

Json to_json(const EvalMetrics& m) {
  return {{"auc", m.auc}, {"auprc", m.auprc}, {"accuracy", m.accuracy}, {"num_nodes", m.num_nodes}};
}

Json to_json(const DeltaStats& s) {
  return {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"mean_fraud", s.mean_fraud}, {"mean_normal", s.mean_normal}};
}

Json to_json(const MetricsReport& r) {
  Json stats = Json::array();
  for (const auto& s : r.delta_stats) stats.push_back(to_json(s));
  return {{"test", to_json(r.test)},     {"train", to_json(r.train)},   {"loss_curve", r.loss_curve},
          {"delta_stats", stats},        {"refreshes", r.refreshes},    {"seconds", r.seconds}};
}

GCNConfig gcn_config_from_json(const Json& j, const std::string& where) {
  require_keys(j, {"layers", "hidden_dim", "out_dim", "dropout"}, where);
  GCNConfig c;
  read(j, "layers", c.layers, where);
  read(j, "hidden_dim", c.hidden_dim, where);
  read(j, "out_dim", c.out_dim, where);
  read(j, "dropout", c.dropout, where);
  c.validate();
  return c;
}

HeadConfig head_config_from_json(const Json& j, const std::string& where) {
  require_keys(j, {"window_hidden", "classifier_hidden", "catalog_mode"}, where);
  HeadConfig c;
  read(j, "window_hidden", c.window_hidden, where);
  read(j, "classifier_hidden", c.classifier_hidden, where);
  std::string mode = to_string(c.catalog_mode);
  read(j, "catalog_mode", mode, where);
  c.catalog_mode = catalog_mode_from_string(mode);
  if (c.window_hidden <= 0 || c.classifier_hidden <= 0) throw ValidationError(where + ": hidden sizes must be positive");
  return c;
}

ModelConfig model_config_from_json(const Json& j, const std::string& where) {
  require_keys(j, {"gcn", "head", "ablation"}, where);
  ModelConfig c;
  if (j.contains("gcn")) c.gcn = gcn_config_from_json(j["gcn"], where + ".gcn");
  if (j.contains("head")) c.head = head_config_from_json(j["head"], where + ".head");
  std::string ab = to_string(c.ablation);
  read(j, "ablation", ab, where);
  c.ablation = ablation_from_string(ab);
  return c;
}

TrainConfig train_config_from_json(const Json& j, const std::string& where) {
  require_keys(j,
               {"epochs", "learning_rate", "beta1", "beta2", "adam_eps", "optimizer", "refresh_interval", "seed",
                "ablation", "delta_fixed", "delta_scope", "class_weighting", "window_slack", "instance_cap", "jobs"},
               where);
  TrainConfig c;
  read(j, "epochs", c.epochs, where);
  read(j, "learning_rate", c.learning_rate, where);
  read(j, "beta1", c.beta1, where);
  read(j, "beta2", c.beta2, where);
  read(j, "adam_eps", c.adam_eps, where);
  read(j, "optimizer", c.optimizer, where);
  read(j, "refresh_interval", c.refresh_interval, where);
  read(j, "seed", c.seed, where);
  std::string ab = to_string(c.ablation);
  read(j, "ablation", ab, where);
  c.ablation = ablation_from_string(ab);
  if (auto it = j.find("delta_fixed"); it != j.end() && !it->is_null()) {
    double d = 0.0;
    read(j, "delta_fixed", d, where);
    c.delta_fixed = d;
  }
  if (auto it = j.find("delta_scope"); it != j.end() && !it->is_null()) {
    double d = 0.0;
    read(j, "delta_scope", d, where);
    c.delta_scope = d;
  }
  read(j, "class_weighting", c.class_weighting, where);
  read(j, "window_slack", c.window_slack, where);
  read(j, "instance_cap", c.instance_cap, where);
  read(j, "jobs", c.jobs, where);
  c.validate();
  return c;
}

}  // namespace atmgad
