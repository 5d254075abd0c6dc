#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "seaice/errors.hpp"

namespace seaice {

struct ModelConfig {
  int in_channels = 3;
  int num_classes = 5;
  int encoder_stages = 3;
  /// ASPP branch and projection width. 160 keeps the whole network near
  /// 4.1M trainable parameters; 256 would give ~5.0M.
  int aspp_channels = 160;
  /// First rate is the 1x1 branch, the rest are 3x3 dilated branches.
  std::vector<int> aspp_rates = {1, 6, 12, 18};
  std::string pretrained_encoder;
  /// Reflection-pad inputs to the output stride and crop logits back.
  bool pad_to_stride = true;

  void validate() const {
    if (in_channels <= 0 || num_classes <= 1) throw ConfigError("model: bad channel counts");
    if (encoder_stages < 1 || encoder_stages > 4) throw ConfigError("model.encoder_stages must be in 1..4");
    if (aspp_channels <= 0) throw ConfigError("model.aspp_channels must be positive");
    if (aspp_rates.size() < 2) throw ConfigError("model.aspp_rates needs at least two rates");
    for (int r : aspp_rates) {
      if (r <= 0) throw ConfigError("model.aspp_rates must be positive");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"in_channels", c.in_channels},     {"num_classes", c.num_classes},
          {"encoder_stages", c.encoder_stages}, {"aspp_channels", c.aspp_channels},
          {"aspp_rates", c.aspp_rates},       {"pretrained_encoder", c.pretrained_encoder},
          {"pad_to_stride", c.pad_to_stride}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.encoder_stages = j.at("encoder_stages").get<int>();
  c.aspp_channels = j.at("aspp_channels").get<int>();
  c.aspp_rates = j.at("aspp_rates").get<std::vector<int>>();
  c.pretrained_encoder = j.value("pretrained_encoder", "");
  c.pad_to_stride = j.value("pad_to_stride", true);
  c.validate();
  return c;
}

}  // namespace seaice
