#include "atmgad/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "atmgad/config.hpp"
#include "atmgad/error.hpp"
#include "atmgad/metrics.hpp"

namespace atmgad {

using diff::Tape;
using diff::Tensor;

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train.epochs must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("train.learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("train: Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("train.adam_eps must be positive");
  if (optimizer != "adam") throw ValidationError("train.optimizer: only 'adam' is supported, got '" + optimizer + "'");
  if (refresh_interval < 0) throw ValidationError("train.refresh_interval must be >= 0 (0 = extract once)");
  if (delta_fixed && !(*delta_fixed > 0.0)) throw ValidationError("train.delta_fixed must be positive");
  if (delta_scope && !(*delta_scope > 0.0)) throw ValidationError("train.delta_scope must be positive");
  if (!(window_slack >= 1.0)) throw ValidationError("train.window_slack must be >= 1");
  if (jobs == 0) throw ValidationError("train.jobs must be positive");
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto value = params_[i].data();
    auto grad = params_[i].grad();
    for (std::size_t j = 0; j < value.size(); ++j) {
      double g = grad[j];
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      value[j] -= lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

// ---------------------------------------------------------------------------

DeltaStats delta_stats(std::span<const double> deltas, std::span<const std::int8_t> labels) {
  DeltaStats s;
  if (deltas.empty()) return s;
  s.min = *std::min_element(deltas.begin(), deltas.end());
  s.max = *std::max_element(deltas.begin(), deltas.end());
  double total = 0.0, fraud = 0.0, normal = 0.0;
  std::size_t nf = 0, nn = 0;
  for (std::size_t v = 0; v < deltas.size(); ++v) {
    total += deltas[v];
    if (v < labels.size() && labels[v] == 1) {
      fraud += deltas[v];
      ++nf;
    } else if (v < labels.size() && labels[v] == 0) {
      normal += deltas[v];
      ++nn;
    }
  }
  s.mean = total / static_cast<double>(deltas.size());
  s.mean_fraud = nf ? fraud / static_cast<double>(nf) : 0.0;
  s.mean_normal = nn ? normal / static_cast<double>(nn) : 0.0;
  return s;
}

namespace {

double effective_tau(const TransactionGraph& g) { return std::max(1.0, static_cast<double>(g.tau_max())); }

double extraction_window(const AblationFlags& f, double delta, double fixed, double tau, double slack) {
  return f.adaptive ? std::min(tau, slack * delta) : std::min(tau, fixed);
}

std::vector<double> targets_of(const TransactionGraph& g, std::span<const NodeId> nodes, const char* what) {
  std::vector<double> y;
  y.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (v >= g.num_nodes()) throw ValidationError(std::string(what) + ": node " + std::to_string(v) + " out of range");
    if (!g.is_labeled(v)) throw ValidationError(std::string(what) + ": node " + std::to_string(v) + " is unlabeled");
    y.push_back(g.labels()[v]);
  }
  return y;
}

std::vector<NodeId> sorted_unique(std::span<const NodeId> nodes) {
  std::vector<NodeId> out(nodes.begin(), nodes.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EvalMetrics score(std::span<const double> probs, std::span<const double> targets) {
  std::vector<std::int8_t> y(targets.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::int8_t>(targets[i]);
  EvalMetrics m;
  m.num_nodes = probs.size();
  m.auc = auc(probs, y);
  m.auprc = auprc(probs, y);
  m.accuracy = accuracy(probs, y);
  return m;
}

std::vector<double> probabilities(const Tensor& logits) {
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logits.data()[i]);
  return p;
}

}  // namespace

TrainResult train(const TransactionGraph& g, const SplitSpec& split, const ModelConfig& model_config,
                  const TrainConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  if (g.feature_dim() == 0) throw ValidationError("train: graph has no node features");
  if (split.train_ids.empty()) throw ValidationError("train: empty training split");
  const auto train_y = targets_of(g, split.train_ids, "train split");
  const auto test_y = targets_of(g, split.test_ids, "test split");

  ModelConfig mc = model_config;
  mc.ablation = config.ablation;
  ModelState state{AtmGadModel(g.feature_dim(), mc, config.seed), config};
  const AtmGadModel& model = state.model;
  const auto flags = model.flags();
  const double tau = config.delta_scope ? std::min(effective_tau(g), *config.delta_scope) : effective_tau(g);
  state.tau_max = tau;
  state.fixed_delta = std::min(tau, config.delta_fixed.value_or(tau / 2.0));

  Tensor features(g.features());
  const SparseMatrix a_hat = normalized_adjacency(g);
  const ModelInputs in{features, a_hat, tau, state.fixed_delta};

  const std::vector<NodeId> focal = g.labeled_nodes();
  state.extraction_windows.assign(g.num_nodes(), 0.0);
  BuildIndexOptions index_opts{config.instance_cap, config.jobs, 0};
  MotifIndex index;
  MotifBatch batch = make_empty_batch(split.train_ids);
  auto refresh = [&](const std::vector<double>& deltas) {
    for (NodeId v : focal)
      state.extraction_windows[v] = extraction_window(flags, deltas[v], state.fixed_delta, tau, config.window_slack);
    index = build_index(g, state.extraction_windows, focal, model.catalog(), index_opts);
    batch = make_motif_batch(index, g, split.train_ids);
  };
  if (flags.motifs) refresh(model.compute_deltas(in));
  state.indexed_nodes = flags.motifs ? focal : std::vector<NodeId>{};

  double pos_weight = 1.0;
  if (config.class_weighting) {
    double pos = 0.0;
    for (double y : train_y) pos += y;
    if (pos > 0.0 && pos < static_cast<double>(train_y.size()))
      pos_weight = (static_cast<double>(train_y.size()) - pos) / pos;
  }

  MetricsReport report;
  std::mt19937_64 dropout_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  Adam opt(model.parameters(), config.learning_rate, config.beta1, config.beta2, config.adam_eps);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (flags.adaptive && config.refresh_interval > 0 && epoch > 0 && epoch % config.refresh_interval == 0) {
      refresh(model.compute_deltas(in));
      ++report.refreshes;
    }
    Tape tape;
    double loss_value = 0.0;
    try {
      ForwardResult r = model.forward(tape, in, batch, true, &dropout_rng);
      Tensor loss = tape.bce_with_logits(r.logits, train_y, pos_weight);
      loss_value = loss.item();
      if (flags.adaptive) {
        auto d = r.deltas.data();
        for (std::size_t v = 0; v < d.size(); ++v)
          if (!(d[v] > 0.0 && d[v] < tau))
            throw NumericError("window bound violated at node " + std::to_string(v) + ": delta=" +
                               std::to_string(d[v]) + ", tau_max=" + std::to_string(tau));
        report.delta_stats.push_back(delta_stats(d, g.labels()));
      }
      tape.backward(loss);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) + ": " + e.what());
    }
    opt.step();
    opt.zero_grad();
    report.loss_curve.push_back(loss_value);
  }

  state.deltas = flags.motifs ? model.compute_deltas(in) : std::vector<double>{};

  auto eval_nodes = [&](std::span<const NodeId> nodes, std::span<const double> y) {
    Tape tape;
    MotifBatch b = flags.motifs ? make_motif_batch(index, g, nodes) : make_empty_batch(nodes);
    return score(probabilities(model.forward(tape, in, b, false, nullptr).logits), y);
  };
  report.train = eval_nodes(split.train_ids, train_y);
  if (!split.test_ids.empty()) report.test = eval_nodes(split.test_ids, test_y);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(state), std::move(report)};
}

std::vector<double> predict(const ModelState& state, const TransactionGraph& g, std::span<const NodeId> nodes) {
  const AtmGadModel& model = state.model;
  const auto flags = model.flags();
  if (g.feature_dim() != model.input_dim())
    throw ValidationError("model expects " + std::to_string(model.input_dim()) + " features, graph has " +
                          std::to_string(g.feature_dim()));
  if (flags.motifs && state.deltas.size() != g.num_nodes())
    throw ValidationError("model was trained on a graph with " + std::to_string(state.deltas.size()) +
                          " nodes, this graph has " + std::to_string(g.num_nodes()));
  for (NodeId v : nodes)
    if (v >= g.num_nodes()) throw ValidationError("predict: node " + std::to_string(v) + " out of range");

  Tensor features(g.features());
  const SparseMatrix a_hat = normalized_adjacency(g);
  const ModelInputs in{features, a_hat, state.tau_max, state.fixed_delta};
  MotifBatch batch = make_empty_batch(nodes);
  if (flags.motifs) {
    std::vector<double> windows = state.extraction_windows;
    windows.resize(g.num_nodes(), 0.0);
    const auto focal = sorted_unique(nodes);
    for (NodeId v : focal)
      if (windows[v] <= 0.0)
        windows[v] = extraction_window(flags, state.deltas[v], state.fixed_delta, state.tau_max,
                                       state.train_config.window_slack);
    BuildIndexOptions opts{state.train_config.instance_cap, state.train_config.jobs, 0};
    MotifIndex index = build_index(g, windows, focal, model.catalog(), opts);
    batch = make_motif_batch(index, g, nodes);
  }
  Tape tape;
  return probabilities(model.forward(tape, in, batch, false, nullptr).logits);
}

EvalMetrics evaluate(const ModelState& state, const TransactionGraph& g, std::span<const NodeId> nodes) {
  const auto y = targets_of(g, nodes, "evaluate");
  return score(predict(state, g, nodes), y);
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCheckpointFormat = "atmgad-model";

std::string checkpoint_metadata(const ModelState& s) {
  const auto& cat = s.model.catalog();
  Json j = {{"format", kCheckpointFormat},
            {"input_dim", s.model.input_dim()},
            {"model", to_json(s.model.config())},
            {"train", to_json(s.train_config)},
            {"catalog", {{"mode", to_string(cat.mode())}, {"size", cat.size()}}},
            {"schedule",
             {{"refresh_interval", s.train_config.refresh_interval},
              {"window_slack", s.train_config.window_slack},
              {"instance_cap", s.train_config.instance_cap}}},
            {"window_input", "backbone embedding h_v"},
            {"tau_max", s.tau_max},
            {"fixed_delta", s.fixed_delta},
            {"deltas", s.deltas},
            {"extraction_windows", s.extraction_windows},
            {"indexed_nodes", s.indexed_nodes}};
  return j.dump();
}

}  // namespace

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  auto params = state.model.named_parameters();
  diff::save_tensors(out, params, checkpoint_metadata(state));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  Json meta;
  try {
    meta = Json::parse(diff::read_checkpoint_metadata(in));
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  if (meta.value("format", "") != kCheckpointFormat) throw FormatError(path.string() + ": not a model checkpoint");
  try {
    ModelConfig mc = model_config_from_json(meta.at("model"));
    TrainConfig tc = train_config_from_json(meta.at("train"));
    const auto& cat = build_catalog(catalog_mode_from_string(meta.at("catalog").at("mode").get<std::string>()));
    if (cat.mode() != mc.head.catalog_mode || meta.at("catalog").at("size").get<std::size_t>() != cat.size())
      throw FormatError(path.string() + ": checkpoint/catalog mismatch (checkpoint has " +
                        std::to_string(meta.at("catalog").at("size").get<std::size_t>()) + " types, catalog " +
                        to_string(cat.mode()) + " has " + std::to_string(cat.size()) + ")");
    ModelState s{AtmGadModel(meta.at("input_dim").get<std::size_t>(), mc, 0), tc};
    s.tau_max = meta.at("tau_max").get<double>();
    s.fixed_delta = meta.at("fixed_delta").get<double>();
    s.deltas = meta.at("deltas").get<std::vector<double>>();
    s.extraction_windows = meta.at("extraction_windows").get<std::vector<double>>();
    s.indexed_nodes = meta.at("indexed_nodes").get<std::vector<NodeId>>();
    in.clear();
    in.seekg(0);
    auto params = s.model.named_parameters();
    diff::load_tensors(in, params);
    return s;
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint metadata: " + e.what());
  }
}

}  // namespace atmgad
