#pragma once

// Truncated ResNet18 encoder + ASPP decoder. Module names under `encoder`
// follow torchvision's resnet18 state dict (conv1, bn1, layer1.0.conv1, ...),
// so an exported torchvision checkpoint maps onto the encoder name for name.

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seaice/errors.hpp"
#include "seaice/model_config.hpp"
#include "seaice/tensor_archive.hpp"

namespace seaice {

namespace tnn = torch::nn;

struct BasicBlockImpl : tnn::Module {
  BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride) {
    conv1 = register_module(
        "conv1", tnn::Conv2d(tnn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false)));
    bn1 = register_module("bn1", tnn::BatchNorm2d(out));
    conv2 = register_module("conv2",
                            tnn::Conv2d(tnn::Conv2dOptions(out, out, 3).padding(1).bias(false)));
    bn2 = register_module("bn2", tnn::BatchNorm2d(out));
    if (stride != 1 || in != out) {
      downsample = register_module(
          "downsample",
          tnn::Sequential(tnn::Conv2d(tnn::Conv2dOptions(in, out, 1).stride(stride).bias(false)),
                          tnn::BatchNorm2d(out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = bn2(conv2(y));
    return torch::relu(y + (downsample.is_empty() ? x : downsample->forward(x)));
  }

  tnn::Conv2d conv1{nullptr}, conv2{nullptr};
  tnn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  tnn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

/// ResNet18 stem followed by the first `stages` residual stages.
struct ResNetEncoderImpl : tnn::Module {
  static constexpr std::int64_t kWidths[] = {64, 128, 256, 512};

  ResNetEncoderImpl(std::int64_t in_channels, int stages) {
    conv1 = register_module(
        "conv1",
        tnn::Conv2d(tnn::Conv2dOptions(in_channels, 64, 7).stride(2).padding(3).bias(false)));
    bn1 = register_module("bn1", tnn::BatchNorm2d(64));
    std::int64_t in = 64;
    for (int s = 0; s < stages; ++s) {
      const std::int64_t w = kWidths[s];
      auto layer = tnn::Sequential(BasicBlock(in, w, s == 0 ? 1 : 2), BasicBlock(w, w, 1));
      layers.push_back(register_module("layer" + std::to_string(s + 1), layer));
      in = w;
    }
    out_channels = in;
    output_stride = std::int64_t{1} << (stages + 1);
  }

  torch::Tensor forward(torch::Tensor x) {
    x = torch::relu(bn1(conv1(x)));
    x = torch::max_pool2d(x, 3, 2, 1);
    for (auto& layer : layers) x = layer->forward(x);
    return x;
  }

  tnn::Conv2d conv1{nullptr};
  tnn::BatchNorm2d bn1{nullptr};
  std::vector<tnn::Sequential> layers;
  std::int64_t out_channels = 0;
  std::int64_t output_stride = 0;
};
TORCH_MODULE(ResNetEncoder);

inline tnn::Sequential conv_bn_relu(std::int64_t in, std::int64_t out, std::int64_t kernel,
                                    std::int64_t dilation = 1) {
  const std::int64_t padding = kernel == 1 ? 0 : dilation;
  return tnn::Sequential(
      tnn::Conv2d(tnn::Conv2dOptions(in, out, kernel).padding(padding).dilation(dilation).bias(false)),
      tnn::BatchNorm2d(out), tnn::ReLU());
}

/// Atrous spatial pyramid pooling: a 1x1 branch, one dilated 3x3 branch per
/// remaining rate and an image-pooling branch, concatenated and projected.
struct AsppImpl : tnn::Module {
  AsppImpl(std::int64_t in, std::int64_t out, const std::vector<int>& rates) {
    for (std::size_t i = 0; i < rates.size(); ++i) {
      auto branch = i == 0 ? conv_bn_relu(in, out, 1) : conv_bn_relu(in, out, 3, rates[i]);
      branches.push_back(register_module("branch" + std::to_string(i), branch));
    }
    pool = register_module("pool", conv_bn_relu(in, out, 1));
    project = register_module(
        "project", conv_bn_relu(out * static_cast<std::int64_t>(rates.size() + 1), out, 1));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    std::vector<torch::Tensor> outs;
    outs.reserve(branches.size() + 1);
    for (auto& b : branches) outs.push_back(b->forward(x));
    auto pooled = pool->forward(torch::adaptive_avg_pool2d(x, {1, 1}));
    outs.push_back(pooled.expand({-1, -1, x.size(2), x.size(3)}));
    return project->forward(torch::cat(outs, 1));
  }

  std::vector<tnn::Sequential> branches;
  tnn::Sequential pool{nullptr};
  tnn::Sequential project{nullptr};
};
TORCH_MODULE(Aspp);

struct SegmentationNetImpl : tnn::Module {
  explicit SegmentationNetImpl(ModelConfig cfg) : config(std::move(cfg)) {
    config.validate();
    encoder = register_module("encoder", ResNetEncoder(config.in_channels, config.encoder_stages));
    aspp = register_module("aspp", Aspp(encoder->out_channels, config.aspp_channels, config.aspp_rates));
    classifier = register_module(
        "classifier", tnn::Conv2d(tnn::Conv2dOptions(config.aspp_channels, config.num_classes, 1)));
  }

  std::int64_t output_stride() const noexcept { return encoder->output_stride; }

  /// [B, C, H, W] -> [B, K, H, W] logits. Sides that are not a multiple of
  /// the output stride are reflection-padded and the logits cropped back.
  torch::Tensor forward(torch::Tensor x) {
    if (x.dim() != 4 || x.size(1) != config.in_channels) {
      throw Error("model input must be [B, " + std::to_string(config.in_channels) + ", H, W]");
    }
    const auto h = x.size(2);
    const auto w = x.size(3);
    const auto s = output_stride();
    const auto pad_h = (s - h % s) % s;
    const auto pad_w = (s - w % s) % s;
    if (pad_h || pad_w) {
      if (!config.pad_to_stride) {
        throw Error("input " + std::to_string(h) + "x" + std::to_string(w) +
                    " is not a multiple of the output stride " + std::to_string(s));
      }
      namespace F = torch::nn::functional;
      const bool reflect = pad_h < h && pad_w < w;
      F::PadFuncOptions pad({0, pad_w, 0, pad_h});
      if (reflect) {
        pad.mode(torch::kReflect);
      } else {
        pad.mode(torch::kReplicate);
      }
      x = F::pad(x, pad);
    }
    auto logits = classifier(aspp(encoder(x)));
    namespace F = torch::nn::functional;
    logits = F::interpolate(logits, F::InterpolateFuncOptions()
                                        .size(std::vector<std::int64_t>{x.size(2), x.size(3)})
                                        .mode(torch::kBilinear)
                                        .align_corners(false));
    if (pad_h || pad_w) logits = logits.slice(2, 0, h).slice(3, 0, w);
    return logits;
  }

  ModelConfig config;
  ResNetEncoder encoder{nullptr};
  Aspp aspp{nullptr};
  tnn::Conv2d classifier{nullptr};
};
TORCH_MODULE(SegmentationNet);

inline std::int64_t count_trainable_parameters(tnn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) n += p.numel();
  }
  return n;
}

inline void init_weights(tnn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& m : module.modules(/*include_self=*/true)) {
    if (auto* conv = m->as<tnn::Conv2d>()) {
      tnn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
      if (conv->bias.defined()) tnn::init::zeros_(conv->bias);
    } else if (auto* bn = m->as<tnn::BatchNorm2d>()) {
      tnn::init::ones_(bn->weight);
      tnn::init::zeros_(bn->bias);
    }
  }
}

// ---------------------------------------------------------------------------
// Weight archives

using NamedTensors = std::map<std::string, torch::Tensor>;

/// Parameters and floating-point buffers (BatchNorm running statistics).
inline NamedTensors state_tensors(tnn::Module& module) {
  NamedTensors out;
  for (const auto& p : module.named_parameters()) out.emplace(p.key(), p.value());
  for (const auto& b : module.named_buffers()) {
    if (b.value().is_floating_point()) out.emplace(b.key(), b.value());
  }
  return out;
}

inline NamedTensors snapshot_state(tnn::Module& module) {
  NamedTensors out;
  for (auto& [name, t] : state_tensors(module)) out.emplace(name, t.detach().clone());
  return out;
}

inline void restore_state(tnn::Module& module, const NamedTensors& state) {
  torch::NoGradGuard guard;
  for (auto& [name, t] : state_tensors(module)) t.copy_(state.at(name));
}

inline ArchiveTensor to_archive_tensor(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  ArchiveTensor out;
  out.shape.assign(c.sizes().begin(), c.sizes().end());
  out.values.assign(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
  return out;
}

inline TensorArchive to_archive(tnn::Module& module) {
  TensorArchive archive;
  for (auto& [name, t] : state_tensors(module)) archive.emplace(name, to_archive_tensor(t));
  return archive;
}

inline void copy_from_archive(torch::Tensor& dst, const ArchiveTensor& src, const std::string& name) {
  if (std::vector<std::int64_t>(dst.sizes().begin(), dst.sizes().end()) != src.shape) {
    throw IncompatibleCheckpoint("tensor " + name + " has shape " +
                                 c10::str(c10::IntArrayRef(src.shape)) + " but the model expects " +
                                 c10::str(dst.sizes()));
  }
  torch::NoGradGuard guard;
  auto tmp = torch::from_blob(const_cast<float*>(src.values.data()), dst.sizes(), torch::kFloat32);
  dst.copy_(tmp);
}

/// Loads every model tensor from the archive; missing names or shape
/// mismatches are errors.
inline void load_archive(tnn::Module& module, const TensorArchive& archive) {
  for (auto& [name, t] : state_tensors(module)) {
    auto it = archive.find(name);
    if (it == archive.end()) throw IncompatibleCheckpoint("weight archive lacks tensor " + name);
    copy_from_archive(t, it->second, name);
  }
}

/// Loads encoder weights stored under torchvision resnet18 names. Extra
/// entries (layer4, fc) are ignored.
inline void load_pretrained_encoder(SegmentationNetImpl& net, const TensorArchive& archive) {
  for (auto& [name, t] : state_tensors(*net.encoder)) {
    auto it = archive.find(name);
    if (it == archive.end()) throw IncompatibleCheckpoint("pretrained encoder lacks tensor " + name);
    copy_from_archive(t, it->second, name);
  }
}

/// Fresh model: encoder from the configured archive if any, otherwise
/// random; decoder always random. Initialisation depends only on `seed`.
inline SegmentationNet build_model(const ModelConfig& config, std::uint64_t seed) {
  torch::manual_seed(seed);
  SegmentationNet net(config);
  init_weights(*net);
  {
    // Small classifier weights start every class near uniform probability.
    torch::NoGradGuard guard;
    tnn::init::normal_(net->classifier->weight, 0.0, 0.01);
  }
  if (!config.pretrained_encoder.empty()) {
    load_pretrained_encoder(*net, read_archive(config.pretrained_encoder));
  }
  return net;
}

// ---------------------------------------------------------------------------
// Checkpoints: weights.bin + checkpoint.json

inline constexpr const char* kWeightsFile = "weights.bin";
inline constexpr const char* kCheckpointFile = "checkpoint.json";

struct CheckpointMeta {
  ModelConfig model;
  nlohmann::json training = nlohmann::json::object();
  int epoch = 0;
  double val_loss = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json history = nlohmann::json::array();
};

inline void save_checkpoint(const std::filesystem::path& dir, SegmentationNetImpl& net,
                            const CheckpointMeta& meta) {
  std::filesystem::create_directories(dir);
  write_archive((dir / kWeightsFile).string(), to_archive(net));
  nlohmann::json sidecar = {
      {"model_config", to_json(meta.model)},
      {"training_config", meta.training},
      {"epoch", meta.epoch},
      {"val_loss", meta.val_loss},
      {"seed", meta.seed},
      {"metric_history", meta.history},
      {"batchnorm_statistics", "updated during training"},
      {"weights", kWeightsFile},
  };
  std::ofstream out(dir / kCheckpointFile);
  if (!out) throw Error((dir / kCheckpointFile).string() + ": cannot write");
  out << sidecar.dump(2) << '\n';
}

struct LoadedCheckpoint {
  SegmentationNet net{nullptr};
  CheckpointMeta meta;
};

/// Accepts the checkpoint directory or its checkpoint.json.
inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto sidecar_path = std::filesystem::is_directory(path) ? path / kCheckpointFile : path;
  std::ifstream in(sidecar_path);
  if (!in) throw IncompatibleCheckpoint(sidecar_path.string() + ": cannot open checkpoint");
  LoadedCheckpoint out;
  try {
    nlohmann::json j;
    in >> j;
    out.meta.model = model_config_from_json(j.at("model_config"));
    out.meta.training = j.value("training_config", nlohmann::json::object());
    out.meta.epoch = j.value("epoch", 0);
    out.meta.val_loss = j.value("val_loss", 0.0);
    out.meta.seed = j.value("seed", std::uint64_t{0});
    out.meta.history = j.value("metric_history", nlohmann::json::array());
    auto weights = sidecar_path.parent_path() / j.value("weights", std::string(kWeightsFile));
    auto config = out.meta.model;
    config.pretrained_encoder.clear();
    out.net = SegmentationNet(config);
    load_archive(*out.net, read_archive(weights.string()));
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpoint(sidecar_path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IncompatibleCheckpoint(sidecar_path.string() + ": " + e.what());
  }
  out.net->eval();
  return out;
}

}  // namespace seaice
