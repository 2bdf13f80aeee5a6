#pragma once

#include <initializer_list>
#include <string>

#include "atmgad/gcn.hpp"
#include "atmgad/model.hpp"
#include "atmgad/train.hpp"
#include "json.hpp"

namespace atmgad {

using Json = nlohmann::json;

Json to_json(const GCNConfig& c);
Json to_json(const HeadConfig& c);
Json to_json(const ModelConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const EvalMetrics& m);
Json to_json(const DeltaStats& s);
Json to_json(const MetricsReport& r);

// Strict readers: missing keys keep their defaults, unknown keys and type
// mismatches throw ValidationError naming `where`.
GCNConfig gcn_config_from_json(const Json& j, const std::string& where = "model.gcn");
HeadConfig head_config_from_json(const Json& j, const std::string& where = "model.head");
ModelConfig model_config_from_json(const Json& j, const std::string& where = "model");
TrainConfig train_config_from_json(const Json& j, const std::string& where = "train");

// Throws ValidationError if `j` is not an object or has keys outside `allowed`.
void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace atmgad
