#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "cheapnvs/warp_oracle.hpp"

namespace cheapnvs::model {

enum class DecoderKind { flow, mask, inpaint };

std::string to_string(DecoderKind d);
DecoderKind parse_decoder(const std::string& name);

/// Comma-separated decoder names, "none" for the empty set.
std::set<DecoderKind> parse_skip_targets(const std::string& list);
std::string format_skip_targets(const std::set<DecoderKind>& targets);

struct ModelConfig {
  int base_channels = 16;
  int encoder_stages = 4;  // each halves the resolution
  int expand_ratio = 4;    // inverted-residual expansion
  int extrinsics_hidden = 64;
  int extrinsics_out = 256;
  std::set<DecoderKind> skip_targets{DecoderKind::mask, DecoderKind::inpaint};
  double flow_scale = 32.0;  // max |offset| in pixels
  /// Initial mask logit (head weights start at zero): everything visible.
  double mask_init_logit = 8.0;

  void validate() const;

  /// Output channels of encoder stage `stage` (0-based).
  int encoder_channels(int stage) const { return base_channels * (stage + 1); }
  int encoder_out_channels() const { return encoder_channels(encoder_stages - 1); }
  int latent_channels() const { return encoder_out_channels() + extrinsics_out; }
  int spatial_multiple() const { return 1 << encoder_stages; }

  /// "key=value" lines.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

struct EncoderOutput {
  torch::Tensor features;            // B x C_enc x H/2^s x W/2^s
  std::vector<torch::Tensor> skips;  // stage outputs, H/2 ... H/2^s
};

/// Shared embedding F: RGBD features with the pose embedding broadcast over
/// every spatial location and concatenated along channels.
struct Latent {
  torch::Tensor features;
  std::vector<torch::Tensor> skips;
};

struct Prediction {
  torch::Tensor shift;        // B x 2 x H x W, pixels
  torch::Tensor mask_logits;  // B x 1 x H x W
  torch::Tensor mask;         // sigmoid(mask_logits)
  torch::Tensor inpaint;      // B x 3 x H x W in [0, 1]
};

class InvertedResidualImpl : public torch::nn::Module {
 public:
  InvertedResidualImpl(int in_channels, int out_channels, int stride, int expand_ratio);
  torch::Tensor forward(const torch::Tensor& x);

  std::int64_t macs(std::int64_t h, std::int64_t w) const;  // at input resolution

 private:
  torch::nn::Conv2d expand_{nullptr};
  torch::nn::Conv2d depthwise_{nullptr};
  torch::nn::Conv2d project_{nullptr};
  int in_ = 0, hidden_ = 0, out_ = 0, stride_ = 1;
  bool residual_ = false;
};
TORCH_MODULE(InvertedResidual);

/// Scaled-down MobileNetV2-style stack over RGB + normalised depth.
class RgbdEncoderImpl : public torch::nn::Module {
 public:
  explicit RgbdEncoderImpl(const ModelConfig& cfg);
  EncoderOutput forward(const torch::Tensor& rgbd);
  std::int64_t macs(std::int64_t h, std::int64_t w) const;

 private:
  torch::nn::Conv2d stem_{nullptr};
  std::vector<InvertedResidual> down_;
  std::vector<InvertedResidual> refine_;
  int base_ = 0;
};
TORCH_MODULE(RgbdEncoder);

/// Two-layer MLP: 12 -> hidden -> out, ReLU in between, linear output.
class ExtrinsicsEncoderImpl : public torch::nn::Module {
 public:
  explicit ExtrinsicsEncoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& pose12);
  std::int64_t macs() const;

 private:
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
};
TORCH_MODULE(ExtrinsicsEncoder);

/// Blocks of (optional skip concat, bilinear x2 upsample, 3x3 conv, ELU),
/// then a 3x3 head conv. Returns the raw head output.
class DecoderImpl : public torch::nn::Module {
 public:
  DecoderImpl(const ModelConfig& cfg, int out_channels, bool use_skips);
  torch::Tensor forward(const Latent& latent);

  bool uses_skips() const { return use_skips_; }
  /// Input channel count of every block conv, in order.
  std::vector<std::int64_t> block_input_channels() const;
  torch::nn::Conv2d& head() { return head_; }
  std::int64_t macs(std::int64_t h, std::int64_t w) const;  // at full output resolution

 private:
  std::vector<torch::nn::Conv2d> blocks_;
  torch::nn::Conv2d head_{nullptr};
  bool use_skips_ = false;
  int stages_ = 0;
};
TORCH_MODULE(Decoder);

/// Depth channel fed to the encoder: log1p(d / median(d)), per sample.
torch::Tensor normalize_depth(const torch::Tensor& depth);

class CheapNvsNetImpl : public torch::nn::Module {
 public:
  explicit CheapNvsNetImpl(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  /// rgb B x 3 x H x W, depth B x 1 x H x W. H and W must be multiples of
  /// 2^encoder_stages (ShapeError otherwise).
  EncoderOutput encode_rgbd(const torch::Tensor& rgb, const torch::Tensor& depth);
  torch::Tensor encode_extrinsics(const torch::Tensor& pose12);
  Latent fuse_latent(const EncoderOutput& rgbd, const torch::Tensor& pose_embedding) const;

  torch::Tensor decode_flow(const Latent& f);         // tanh-bounded, pixels
  torch::Tensor decode_mask_logits(const Latent& f);  // pre-sigmoid
  torch::Tensor decode_inpaint(const Latent& f);      // sigmoid

  Latent encode(const torch::Tensor& rgb, const torch::Tensor& depth, const torch::Tensor& pose12);

  /// One encoder pass each, then the three decoders on the shared latent.
  /// With `concurrent_decoders` the decoders run on separate threads.
  Prediction forward(const torch::Tensor& rgb, const torch::Tensor& depth, const torch::Tensor& pose12,
                     bool concurrent_decoders = false);
  Prediction decode_all(const Latent& f, bool concurrent_decoders = false);

  DecoderImpl& decoder(DecoderKind which);
  std::vector<torch::Tensor> decoder_parameters(DecoderKind which);

  std::int64_t encoder_calls() const { return encoder_calls_.load(); }
  void reset_encoder_calls() { encoder_calls_.store(0); }

  std::int64_t parameter_count() const;
  /// Analytic multiply-accumulate count of one forward pass at h x w.
  std::int64_t multiply_accumulates(std::int64_t h, std::int64_t w) const;

 private:
  ModelConfig cfg_;
  RgbdEncoder rgbd_encoder_{nullptr};
  ExtrinsicsEncoder pose_encoder_{nullptr};
  Decoder flow_{nullptr};
  Decoder mask_{nullptr};
  Decoder inpaint_{nullptr};
  std::atomic<std::int64_t> encoder_calls_{0};
};
TORCH_MODULE(CheapNvsNet);

/// Per-frame outputs as images.
struct ViewPrediction {
  ShiftMap shift;    // H x W x 2
  Image mask;        // H x W x 1, soft
  Image inpaint;     // H x W x 3
  Image warped;      // grid_sample(source, shift)
  Image synthesized; // blended target view
};

/// Configured network plus checkpoint I/O.
class ModelBundle {
 public:
  /// Parameters are initialised from `seed`.
  explicit ModelBundle(const ModelConfig& cfg, std::uint64_t seed = 0);

  CheapNvsNet& net() { return net_; }
  const ModelConfig& config() const { return cfg_; }

  /// Checkpoint: "CNVS1", u32 config length, config text, u32 tensor count,
  /// then per tensor u32 name length, name, u64 numel, float32 data.
  void save(const std::filesystem::path& path) const;
  static ModelBundle load(const std::filesystem::path& path);

  /// Inference on one frame. Inputs whose size is not a multiple of
  /// 2^encoder_stages are edge-padded and the outputs cropped back.
  ViewPrediction predict(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                         bool concurrent_decoders = false);

 private:
  ModelConfig cfg_;
  CheapNvsNet net_{nullptr};
};

/// Pads B x C x H x W to multiples of `multiple` by edge replication.
torch::Tensor pad_to_multiple(const torch::Tensor& x, int multiple);

}  // namespace cheapnvs::model
