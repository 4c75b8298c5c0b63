#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "tspulse/cli.hpp"
#include "tspulse/error.hpp"
#include "tspulse/model.hpp"

namespace tspulse::cli {

using nlohmann::json;

namespace {

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Converts flag text into the JSON type of the default value.
json flag_value(const std::string& key, const json& def, const std::string& text) {
  try {
    if (def.is_string()) return text;
    if (def.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("");
    }
    if (def.is_array()) {
      json arr = json::array();
      std::stringstream ss(text);
      for (std::string part; std::getline(ss, part, ',');) arr.push_back(json::parse(part));
      return arr;
    }
    json v = json::parse(text);
    if (!v.is_number()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("flag --" + dashed(key) + ": cannot read '" + text + "' as " + def.type_name());
  }
}

struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, std::string> model_values;
  std::string config_path;
};

json read_config_file(const std::string& path, const std::string& command) {
  if (path.empty()) return nullptr;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  // A file may hold one section per command alongside shared keys.
  if (j.is_object()) {
    json flat = json::object();
    for (const auto& [k, v] : j.items()) {
      if (std::find(commands().begin(), commands().end(), k) != commands().end()) continue;
      flat[k] = v;
    }
    if (j.contains(command)) flat.update(j[command]);
    return flat;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-series embedding model: pre-training and diagnostics."};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::map<std::string, FlagSet> flags;
  const json model_defaults = ModelConfig().to_json();
  for (const std::string& cmd : commands()) {
    static const std::map<std::string, std::string> about = {
        {"pretrain", "pre-train a model on a corpus CSV or generated windows"},
        {"finetune-classify", "fine-tune a classifier on labeled samples"},
        {"impute", "fill missing values with the model or a baseline"},
        {"detect", "score every step of a series for anomalies"},
        {"embed", "export embeddings and optionally a search index"},
        {"search-bench", "run the similarity-search benchmark"},
        {"sensitivity", "measure embedding distortion under mask, noise and phase"},
        {"synth-gen", "write a synthetic corpus CSV"}};
    CLI::App* sub = app.add_subcommand(cmd, about.at(cmd));
    FlagSet& fs = flags[cmd];
    sub->add_option("--config", fs.config_path, "JSON configuration file");
    const json defs = default_config(cmd);
    for (const auto& [k, v] : defs.items()) {
      if (k == "model") continue;
      std::string desc = "default: " + v.dump();
      sub->add_option("--" + dashed(k), fs.values[k], desc);
      if (k == "strengths") sub->add_option("--strength", fs.values["strengths"], "alias of --strengths");
    }
    if (defs.contains("model"))
      for (const auto& [k, v] : model_defaults.items())
        sub->add_option("--model-" + dashed(k), fs.model_values[k], "model " + k + " (default: " + v.dump() + ")");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  const FlagSet& fs = flags[cmd];
  try {
    const json defs = default_config(cmd);
    json over = json::object();
    for (const auto& [k, text] : fs.values) {
      const bool given = sub->count("--" + dashed(k)) > 0 || (k == "strengths" && sub->count("--strength") > 0);
      if (given) over[k] = flag_value(k, defs[k], text);
    }
    for (const auto& [k, text] : fs.model_values)
      if (sub->count("--model-" + dashed(k)) > 0) over["model"][k] = flag_value("model-" + k, model_defaults[k], text);
    const json cfg = resolve_config(cmd, read_config_file(fs.config_path, cmd), over);
    run_command(cmd, cfg, std::cerr);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "tspulse " << cmd << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace tspulse::cli
