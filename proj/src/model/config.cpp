#include <set>

#include "tspulse/error.hpp"
#include "tspulse/model.hpp"

namespace tspulse {

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(patch_len > 0, "patch_len must be positive");
  need(context > 0 && context % patch_len == 0,
       "context " + std::to_string(context) + " is not a multiple of patch_len " +
           std::to_string(patch_len));
  need(context % 2 == 0, "context must be even");
  need(d_model > 0, "d_model must be positive");
  need(registers > 0, "registers must be positive");
  need(pred_len > 0, "pred_len must be positive");
  need(expansion > 0, "expansion must be positive");
  need(decoder_layers <= backbone_layers || backbone_layers == 0,
       "decoder_layers must not exceed backbone_layers");
  need(head_width() > 0 && head_width() <= d_model, "head_dim must be in [1, d_model]");
  need(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  need(head_dropout >= 0.0 && head_dropout < 1.0, "head_dropout must be in [0, 1)");
  need(gate_activation == "softmax" || gate_activation == "sigmoid",
       "gate_activation must be softmax or sigmoid, got '" + gate_activation + "'");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"context", context},
          {"patch_len", patch_len},
          {"d_model", d_model},
          {"registers", registers},
          {"pred_len", pred_len},
          {"backbone_layers", backbone_layers},
          {"decoder_layers", decoder_layers},
          {"expansion", expansion},
          {"head_dim", head_dim},
          {"dropout", dropout},
          {"head_dropout", head_dropout},
          {"gate_activation", gate_activation}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be an object");
  ModelConfig c;
  static const std::set<std::string> known{
      "context", "patch_len", "d_model", "registers", "pred_len", "backbone_layers",
      "decoder_layers", "expansion", "head_dim", "dropout", "head_dropout", "gate_activation"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown model config key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("model config key '") + key + "' has the wrong type");
    }
  };
  get("context", c.context);
  get("patch_len", c.patch_len);
  get("d_model", c.d_model);
  get("registers", c.registers);
  get("pred_len", c.pred_len);
  get("backbone_layers", c.backbone_layers);
  get("decoder_layers", c.decoder_layers);
  get("expansion", c.expansion);
  get("head_dim", c.head_dim);
  get("dropout", c.dropout);
  get("head_dropout", c.head_dropout);
  get("gate_activation", c.gate_activation);
  c.validate();
  return c;
}

}  // namespace tspulse
