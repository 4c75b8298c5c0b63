#include <algorithm>

#include "tspulse/cli.hpp"
#include "tspulse/error.hpp"
#include "tspulse/model.hpp"

namespace tspulse::cli {

using nlohmann::json;

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"pretrain", "finetune-classify", "impute",     "detect",
                                             "embed",    "search-bench",      "sensitivity", "synth-gen"};
  return c;
}

json default_config(const std::string& command) {
  json d = {{"seed", 0}, {"threads", 1}, {"out", "tspulse_out"}, {"kernels", "auto"}};
  if (command != "synth-gen") d["checkpoint"] = "";
  if (command == "pretrain") d["model"] = json::object();
  if (command == "pretrain") {
    d.update({{"preset", "unified"}, {"data", ""}, {"n", 2000}, {"epochs", 20}, {"batch_size", 64}, {"lr", 1e-3},
              {"mask_kind", ""}, {"ratio_lo", 0.15}, {"ratio_hi", 0.55}, {"eval_fraction", 0.1}});
  } else if (command == "finetune-classify") {
    d.update({{"data", ""}, {"test_data", ""}, {"channels", 1}, {"missing", ""}, {"head", "tslens"},
              {"activation", "softmax"}, {"expansion", 1}, {"d_proj", 1}, {"mask_ratio", 0.3}, {"epochs", 20},
              {"batch_size", 16}, {"lr", 1e-3}, {"val_fraction", 0.1}, {"patience", 5}});
  } else if (command == "impute") {
    d.update({{"data", ""}, {"layout", "wide"}, {"missing", "NA"}, {"method", "tspulse"}, {"mask_kind", "hybrid"},
              {"ratio", 0.0}});
  } else if (command == "detect") {
    d.update({{"data", ""}, {"layout", "wide"}, {"missing", ""}, {"head", "ensemble"}, {"window", 0}, {"tune", ""},
              {"label_column", "label"}});
  } else if (command == "embed") {
    d.update({{"data", ""}, {"view", "register"}, {"index", false}});
  } else if (command == "search-bench") {
    d.update({{"data", ""}, {"strengths", json::array({0, 10, 20, 30, 40, 50})}, {"k", 3}});
  } else if (command == "sensitivity") {
    d.update({{"samples", 64}, {"pairs", 2000}});
  } else if (command == "synth-gen") {
    d.update({{"kind", "search"}, {"n", 1680}, {"length", 512}, {"split", "train"}});
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return d;
}

namespace {

bool same_kind(const json& def, const json& v) {
  if (def.is_number_integer() || def.is_number_unsigned()) return v.is_number_integer() || v.is_number_unsigned();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_array()) return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
  if (def.is_object()) return v.is_object();
  return false;
}

void merge_into(json& cfg, const json& src, const char* origin) {
  if (src.is_null()) return;
  if (!src.is_object()) throw ConfigError(std::string(origin) + " must be a key/value object");
  for (const auto& [k, v] : src.items()) {
    if (!cfg.contains(k)) throw ConfigError("unknown key '" + k + "' in " + origin);
    if (!same_kind(cfg[k], v)) {
      throw ConfigError("key '" + k + "' in " + origin + " has the wrong type (expected " +
                        std::string(cfg[k].type_name()) + ")");
    }
    if (k == "model") cfg[k].update(v);
    else cfg[k] = v;
  }
}

}  // namespace

json resolve_config(const std::string& command, const json& file, const json& flags) {
  json cfg = default_config(command);
  merge_into(cfg, file, "config file");
  merge_into(cfg, flags, "command line");
  if (cfg.contains("model")) {
    try {
      const ModelConfig m = ModelConfig::from_json(cfg["model"]);
      m.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
  }
  if (cfg["threads"].get<long long>() < 1) throw ConfigError("key 'threads' must be at least 1");
  if (cfg["seed"].get<long long>() < 0) throw ConfigError("key 'seed' must be non-negative");
  return cfg;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
      dynamic_cast<const UsageError*>(&e))
    return kExitConfig;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const CapabilityError*>(&e))
    return kExitData;
  return kExitFailure;
}

}  // namespace tspulse::cli
