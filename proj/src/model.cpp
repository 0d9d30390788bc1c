#include "cheapnvs/model.hpp"

#include <cstring>
#include <fstream>
#include <future>
#include <sstream>

#include "cheapnvs/compositor_tensor.hpp"
#include "cheapnvs/errors.hpp"
#include "cheapnvs/tensor_image.hpp"

namespace cheapnvs::model {

namespace F = torch::nn::functional;
namespace nn = torch::nn;

std::string to_string(DecoderKind d) {
  switch (d) {
    case DecoderKind::flow: return "flow";
    case DecoderKind::mask: return "mask";
    case DecoderKind::inpaint: return "inpaint";
  }
  return "?";
}

DecoderKind parse_decoder(const std::string& name) {
  if (name == "flow") return DecoderKind::flow;
  if (name == "mask") return DecoderKind::mask;
  if (name == "inpaint") return DecoderKind::inpaint;
  throw ValidationError("unknown decoder '" + name + "' (expected flow|mask|inpaint)");
}

std::set<DecoderKind> parse_skip_targets(const std::string& list) {
  std::set<DecoderKind> out;
  if (list.empty() || list == "none") return out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(parse_decoder(item));
  }
  return out;
}

std::string format_skip_targets(const std::set<DecoderKind>& targets) {
  if (targets.empty()) return "none";
  std::string out;
  for (auto d : targets) {
    if (!out.empty()) out += ',';
    out += to_string(d);
  }
  return out;
}

void ModelConfig::validate() const {
  if (base_channels < 1) throw ValidationError("model: base_channels must be >= 1");
  if (encoder_stages < 1) throw ValidationError("model: encoder_stages must be >= 1");
  if (expand_ratio < 1) throw ValidationError("model: expand_ratio must be >= 1");
  if (extrinsics_hidden < 1 || extrinsics_out < 1) throw ValidationError("model: extrinsics widths must be > 0");
  if (!(flow_scale > 0.0)) throw ValidationError("model: flow_scale must be > 0");
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "base_channels=" << base_channels << '\n'
      << "encoder_stages=" << encoder_stages << '\n'
      << "expand_ratio=" << expand_ratio << '\n'
      << "extrinsics_hidden=" << extrinsics_hidden << '\n'
      << "extrinsics_out=" << extrinsics_out << '\n'
      << "skip_targets=" << format_skip_targets(skip_targets) << '\n'
      << "flow_scale=" << flow_scale << '\n'
      << "mask_init_logit=" << mask_init_logit << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig cfg;
  for (const auto& [key, value] : kv) {
    try {
      if (key == "base_channels") cfg.base_channels = std::stoi(value);
      else if (key == "encoder_stages") cfg.encoder_stages = std::stoi(value);
      else if (key == "expand_ratio") cfg.expand_ratio = std::stoi(value);
      else if (key == "extrinsics_hidden") cfg.extrinsics_hidden = std::stoi(value);
      else if (key == "extrinsics_out") cfg.extrinsics_out = std::stoi(value);
      else if (key == "skip_targets") cfg.skip_targets = parse_skip_targets(value);
      else if (key == "flow_scale") cfg.flow_scale = std::stod(value);
      else if (key == "mask_init_logit") cfg.mask_init_logit = std::stod(value);
      else throw ValidationError("model config: unknown key '" + key + "'");
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ValidationError*>(&e) != nullptr) throw;
      throw ValidationError("model config: bad value for '" + key + "': " + value);
    }
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("model config: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return from_map(kv);
}

// ---------------------------------------------------------------------------

InvertedResidualImpl::InvertedResidualImpl(int in_channels, int out_channels, int stride, int expand_ratio)
    : in_(in_channels), hidden_(in_channels * expand_ratio), out_(out_channels), stride_(stride) {
  expand_ = register_module("expand", nn::Conv2d(nn::Conv2dOptions(in_, hidden_, 1)));
  depthwise_ = register_module(
      "depthwise", nn::Conv2d(nn::Conv2dOptions(hidden_, hidden_, 3).stride(stride).padding(1).groups(hidden_)));
  project_ = register_module("project", nn::Conv2d(nn::Conv2dOptions(hidden_, out_, 1)));
  residual_ = stride == 1 && in_ == out_;
}

torch::Tensor InvertedResidualImpl::forward(const torch::Tensor& x) {
  auto y = F::relu6(expand_(x));
  y = F::relu6(depthwise_(y));
  y = project_(y);
  return residual_ ? x + y : y;
}

std::int64_t InvertedResidualImpl::macs(std::int64_t h, std::int64_t w) const {
  const std::int64_t oh = (h + stride_ - 1) / stride_;
  const std::int64_t ow = (w + stride_ - 1) / stride_;
  return h * w * in_ * hidden_ + oh * ow * hidden_ * 9 + oh * ow * hidden_ * out_;
}

RgbdEncoderImpl::RgbdEncoderImpl(const ModelConfig& cfg) : base_(cfg.base_channels) {
  stem_ = register_module("stem", nn::Conv2d(nn::Conv2dOptions(4, base_, 3).padding(1)));
  int prev = base_;
  for (int s = 0; s < cfg.encoder_stages; ++s) {
    const int ch = cfg.encoder_channels(s);
    down_.push_back(register_module("down" + std::to_string(s), InvertedResidual(prev, ch, 2, cfg.expand_ratio)));
    refine_.push_back(register_module("refine" + std::to_string(s), InvertedResidual(ch, ch, 1, cfg.expand_ratio)));
    prev = ch;
  }
}

EncoderOutput RgbdEncoderImpl::forward(const torch::Tensor& rgbd) {
  EncoderOutput out;
  auto x = F::relu6(stem_(rgbd));
  for (std::size_t s = 0; s < down_.size(); ++s) {
    x = refine_[s](down_[s](x));
    out.skips.push_back(x);
  }
  out.features = x;
  return out;
}

std::int64_t RgbdEncoderImpl::macs(std::int64_t h, std::int64_t w) const {
  std::int64_t total = h * w * 4 * base_ * 9;
  for (std::size_t s = 0; s < down_.size(); ++s) {
    total += down_[s]->macs(h, w);
    h = (h + 1) / 2;
    w = (w + 1) / 2;
    total += refine_[s]->macs(h, w);
  }
  return total;
}

ExtrinsicsEncoderImpl::ExtrinsicsEncoderImpl(const ModelConfig& cfg) {
  fc1_ = register_module("fc1", nn::Linear(12, cfg.extrinsics_hidden));
  fc2_ = register_module("fc2", nn::Linear(cfg.extrinsics_hidden, cfg.extrinsics_out));
}

torch::Tensor ExtrinsicsEncoderImpl::forward(const torch::Tensor& pose12) {
  return fc2_(F::relu(fc1_(pose12)));
}

std::int64_t ExtrinsicsEncoderImpl::macs() const {
  return fc1_->options.in_features() * fc1_->options.out_features() +
         fc2_->options.in_features() * fc2_->options.out_features();
}

DecoderImpl::DecoderImpl(const ModelConfig& cfg, int out_channels, bool use_skips)
    : use_skips_(use_skips), stages_(cfg.encoder_stages) {
  int prev = cfg.latent_channels();
  for (int j = 0; j < stages_; ++j) {
    const int skip_stage = stages_ - 1 - j;
    const int in = prev + (use_skips ? cfg.encoder_channels(skip_stage) : 0);
    const int out = cfg.encoder_channels(skip_stage);
    blocks_.push_back(
        register_module("block" + std::to_string(j), nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1))));
    prev = out;
  }
  head_ = register_module("head", nn::Conv2d(nn::Conv2dOptions(prev, out_channels, 3).padding(1)));
}

torch::Tensor DecoderImpl::forward(const Latent& latent) {
  auto x = latent.features;
  for (int j = 0; j < stages_; ++j) {
    if (use_skips_) x = torch::cat({x, latent.skips[stages_ - 1 - j]}, 1);
    x = F::interpolate(x, F::InterpolateFuncOptions()
                              .scale_factor(std::vector<double>{2.0, 2.0})
                              .mode(torch::kBilinear)
                              .align_corners(false));
    x = F::elu(blocks_[j](x));
  }
  return head_(x);
}

std::vector<std::int64_t> DecoderImpl::block_input_channels() const {
  std::vector<std::int64_t> out;
  for (const auto& b : blocks_) out.push_back(b->options.in_channels());
  return out;
}

std::int64_t DecoderImpl::macs(std::int64_t h, std::int64_t w) const {
  std::int64_t total = 0;
  for (int j = 0; j < stages_; ++j) {
    const std::int64_t div = std::int64_t{1} << (stages_ - 1 - j);
    const auto& o = blocks_[j]->options;
    total += (h / div) * (w / div) * o.in_channels() * o.out_channels() * 9;
  }
  const auto& o = head_->options;
  return total + h * w * o.in_channels() * o.out_channels() * 9;
}

torch::Tensor normalize_depth(const torch::Tensor& depth) {
  const auto b = depth.size(0);
  const auto med = std::get<0>(depth.reshape({b, -1}).median(1)).view({b, 1, 1, 1});
  return torch::log1p(depth / med);
}

CheapNvsNetImpl::CheapNvsNetImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  rgbd_encoder_ = register_module("rgbd_encoder", RgbdEncoder(cfg_));
  pose_encoder_ = register_module("pose_encoder", ExtrinsicsEncoder(cfg_));
  const auto& skips = cfg_.skip_targets;
  flow_ = register_module("flow_decoder", Decoder(cfg_, 2, skips.contains(DecoderKind::flow)));
  mask_ = register_module("mask_decoder", Decoder(cfg_, 1, skips.contains(DecoderKind::mask)));
  inpaint_ = register_module("inpaint_decoder", Decoder(cfg_, 3, skips.contains(DecoderKind::inpaint)));

  torch::NoGradGuard no_grad;
  // Zero flow head: identity warp at initialisation.
  flow_->head()->weight.zero_();
  flow_->head()->bias.zero_();
  mask_->head()->weight.zero_();
  mask_->head()->bias.fill_(cfg_.mask_init_logit);
}

EncoderOutput CheapNvsNetImpl::encode_rgbd(const torch::Tensor& rgb, const torch::Tensor& depth) {
  if (rgb.dim() != 4 || rgb.size(1) != 3 || depth.dim() != 4 || depth.size(1) != 1 ||
      rgb.size(0) != depth.size(0) || rgb.size(2) != depth.size(2) || rgb.size(3) != depth.size(3)) {
    throw ShapeError("encode_rgbd: expected rgb B x 3 x H x W and depth B x 1 x H x W");
  }
  const auto m = cfg_.spatial_multiple();
  if (rgb.size(2) % m != 0 || rgb.size(3) % m != 0) {
    throw ShapeError("encode_rgbd: H and W must be divisible by " + std::to_string(m));
  }
  encoder_calls_.fetch_add(1);
  return rgbd_encoder_(torch::cat({rgb, normalize_depth(depth)}, 1));
}

torch::Tensor CheapNvsNetImpl::encode_extrinsics(const torch::Tensor& pose12) {
  if (pose12.dim() != 2 || pose12.size(1) != 12) throw ShapeError("encode_extrinsics: expected B x 12");
  return pose_encoder_(pose12);
}

Latent CheapNvsNetImpl::fuse_latent(const EncoderOutput& rgbd, const torch::Tensor& pose_embedding) const {
  const auto& feat = rgbd.features;
  if (pose_embedding.dim() != 2 || pose_embedding.size(0) != feat.size(0)) {
    throw ShapeError("fuse_latent: pose embedding must be B x D with matching batch");
  }
  auto broadcast = pose_embedding.view({pose_embedding.size(0), pose_embedding.size(1), 1, 1})
                       .expand({-1, -1, feat.size(2), feat.size(3)});
  return {torch::cat({feat, broadcast}, 1), rgbd.skips};
}

torch::Tensor CheapNvsNetImpl::decode_flow(const Latent& f) { return torch::tanh(flow_(f)) * cfg_.flow_scale; }

torch::Tensor CheapNvsNetImpl::decode_mask_logits(const Latent& f) { return mask_(f); }

torch::Tensor CheapNvsNetImpl::decode_inpaint(const Latent& f) { return torch::sigmoid(inpaint_(f)); }

Latent CheapNvsNetImpl::encode(const torch::Tensor& rgb, const torch::Tensor& depth, const torch::Tensor& pose12) {
  return fuse_latent(encode_rgbd(rgb, depth), encode_extrinsics(pose12));
}

Prediction CheapNvsNetImpl::decode_all(const Latent& f, bool concurrent_decoders) {
  Prediction p;
  if (concurrent_decoders) {
    const bool grad = torch::GradMode::is_enabled();
    auto launch = [grad](auto fn) {
      return std::async(std::launch::async, [grad, fn] {
        torch::AutoGradMode mode(grad);
        return fn();
      });
    };
    auto flow = launch([&] { return decode_flow(f); });
    auto mask = launch([&] { return decode_mask_logits(f); });
    auto inpaint = launch([&] { return decode_inpaint(f); });
    p.shift = flow.get();
    p.mask_logits = mask.get();
    p.inpaint = inpaint.get();
  } else {
    p.shift = decode_flow(f);
    p.mask_logits = decode_mask_logits(f);
    p.inpaint = decode_inpaint(f);
  }
  p.mask = torch::sigmoid(p.mask_logits);
  return p;
}

Prediction CheapNvsNetImpl::forward(const torch::Tensor& rgb, const torch::Tensor& depth, const torch::Tensor& pose12,
                                    bool concurrent_decoders) {
  return decode_all(encode(rgb, depth, pose12), concurrent_decoders);
}

DecoderImpl& CheapNvsNetImpl::decoder(DecoderKind which) {
  switch (which) {
    case DecoderKind::flow: return *flow_;
    case DecoderKind::mask: return *mask_;
    case DecoderKind::inpaint: return *inpaint_;
  }
  throw ValidationError("bad decoder kind");
}

std::vector<torch::Tensor> CheapNvsNetImpl::decoder_parameters(DecoderKind which) {
  return decoder(which).parameters();
}

std::int64_t CheapNvsNetImpl::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

std::int64_t CheapNvsNetImpl::multiply_accumulates(std::int64_t h, std::int64_t w) const {
  return rgbd_encoder_->macs(h, w) + pose_encoder_->macs() + flow_->macs(h, w) + mask_->macs(h, w) +
         inpaint_->macs(h, w);
}

// ---------------------------------------------------------------------------

torch::Tensor pad_to_multiple(const torch::Tensor& x, int multiple) {
  const auto h = x.size(2);
  const auto w = x.size(3);
  const auto ph = (multiple - h % multiple) % multiple;
  const auto pw = (multiple - w % multiple) % multiple;
  if (ph == 0 && pw == 0) return x;
  return F::pad(x, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReplicate));
}

ModelBundle::ModelBundle(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  torch::manual_seed(seed);
  net_ = CheapNvsNet(cfg_);
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError(path.string(), "truncated checkpoint");
  return v;
}

std::string read_string(std::istream& in, std::uint32_t n, const std::filesystem::path& path) {
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw IoError(path.string(), "truncated checkpoint");
  return s;
}

constexpr char kCheckpointMagic[5] = {'C', 'N', 'V', 'S', '1'};

}  // namespace

void ModelBundle::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open checkpoint for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::string cfg = cfg_.to_text();
  write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto params = net_->named_parameters(true);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& item : params) {
    const auto t = item.value().detach().to(torch::kCPU, torch::kFloat32).contiguous();
    write_u32(out, static_cast<std::uint32_t>(item.key().size()));
    out.write(item.key().data(), static_cast<std::streamsize>(item.key().size()));
    write_u64(out, static_cast<std::uint64_t>(t.numel()));
    out.write(reinterpret_cast<const char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * 4));
  }
  if (!out) throw IoError(path.string(), "checkpoint write failed");
}

ModelBundle ModelBundle::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open checkpoint");
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError(path.string(), "not a CNVS1 checkpoint");
  }
  const auto cfg_len = read_pod<std::uint32_t>(in, path);
  ModelBundle bundle(ModelConfig::from_text(read_string(in, cfg_len, path)));
  auto params = bundle.net_->named_parameters(true);
  const auto count = read_pod<std::uint32_t>(in, path);
  if (count != params.size()) throw IoError(path.string(), "parameter count does not match config");
  torch::NoGradGuard no_grad;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = read_string(in, read_pod<std::uint32_t>(in, path), path);
    const auto numel = read_pod<std::uint64_t>(in, path);
    auto* slot = params.find(name);
    if (slot == nullptr) throw IoError(path.string(), "unknown parameter '" + name + "'");
    if (static_cast<std::uint64_t>(slot->numel()) != numel) {
      throw IoError(path.string(), "size mismatch for parameter '" + name + "'");
    }
    std::vector<float> buf(numel);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(numel * 4))) {
      throw IoError(path.string(), "truncated checkpoint");
    }
    slot->copy_(torch::from_blob(buf.data(), slot->sizes(), torch::kFloat32));
  }
  return bundle;
}

ViewPrediction ModelBundle::predict(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                                    bool concurrent_decoders) {
  frame.validate();
  torch::NoGradGuard no_grad;
  const int h = frame.height();
  const int w = frame.width();
  const auto rgb = to_tensor(frame.rgb);
  const auto depth = to_tensor(frame.depth);
  const int m = cfg_.spatial_multiple();
  auto pred = net_->forward(pad_to_multiple(rgb, m), pad_to_multiple(depth, m), pose_tensor(pose),
                            concurrent_decoders);
  auto crop = [&](const torch::Tensor& t) { return t.slice(2, 0, h).slice(3, 0, w); };
  const auto shift = crop(pred.shift);
  const auto mask = crop(pred.mask);
  const auto inpaint = crop(pred.inpaint);
  const auto warped = compositor::grid_sample(rgb, shift);
  ViewPrediction out;
  out.shift = to_image(shift);
  out.mask = to_image(mask);
  out.inpaint = to_image(inpaint);
  out.warped = to_image(warped);
  out.synthesized = to_image(compositor::blend(warped, mask, inpaint));
  return out;
}

}  // namespace cheapnvs::model
