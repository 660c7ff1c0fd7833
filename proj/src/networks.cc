// Copyright 2026 The Flowse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flowse/networks.h"

#include <cmath>
#include <set>

#include "flowse/hash.h"

namespace flowse {

namespace F = torch::nn::functional;

const char* SizeVariantName(SizeVariant v) {
  switch (v) {
    case SizeVariant::kSmall: return "small";
    case SizeVariant::kMedium: return "medium";
    case SizeVariant::kLarge: return "large";
  }
  return "?";
}

SizeVariant ParseSizeVariant(const std::string& s) {
  if (s == "small") return SizeVariant::kSmall;
  if (s == "medium") return SizeVariant::kMedium;
  if (s == "large") return SizeVariant::kLarge;
  throw ConfigError("model.size_variant: expected small, medium or large, got '" + s + "'");
}

ModelConfig ModelConfig::ForVariant(SizeVariant variant, int base_channels) {
  ModelConfig cfg;
  cfg.size_variant = variant;
  cfg.base_channels = base_channels;
  cfg.duplicate_convs = variant == SizeVariant::kLarge;
  cfg.level4_inner_blocks = variant == SizeVariant::kSmall ? 2 : 4;
  return cfg;
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("model." + field + ": " + why);
  };
  if (levels != 4) fail("levels", "must be 4");
  if (base_channels < 2 || base_channels % 2 != 0)
    fail("base_channels", "must be an even number >= 2");
  if (static_cast<int>(channel_multipliers.size()) != levels)
    fail("channel_multipliers", "needs one entry per level");
  for (int m : channel_multipliers)
    if (m < 1) fail("channel_multipliers", "entries must be >= 1");
  std::set<int> seen;
  for (int l : attention_levels) {
    if (l < 0 || l > levels)
      fail("attention_levels", "entries must lie in [0, " + std::to_string(levels) + "]");
    if (!seen.insert(l).second) fail("attention_levels", "duplicate entry");
  }
  if (conditioning_dim < 1) fail("conditioning_dim", "must be >= 1");
  if (side_info_dim < 1) fail("side_info_dim", "must be >= 1");
  if (level4_inner_blocks < 1) fail("level4_inner_blocks", "must be >= 1");
  const ModelConfig canonical = ForVariant(size_variant, base_channels);
  if (duplicate_convs != canonical.duplicate_convs)
    fail("duplicate_convs", std::string("must be ") +
                                (canonical.duplicate_convs ? "true" : "false") + " for " +
                                SizeVariantName(size_variant));
  if (level4_inner_blocks != canonical.level4_inner_blocks)
    fail("level4_inner_blocks", "must be " + std::to_string(canonical.level4_inner_blocks) +
                                    " for " + SizeVariantName(size_variant));
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"size_variant", SizeVariantName(size_variant)},
          {"base_channels", base_channels},
          {"channel_multipliers", channel_multipliers},
          {"levels", levels},
          {"attention_levels", attention_levels},
          {"conditioning_dim", conditioning_dim},
          {"side_info_dim", side_info_dim},
          {"duplicate_convs", duplicate_convs},
          {"level4_inner_blocks", level4_inner_blocks},
          {"pad_input", pad_input}};
}

std::string ModelConfig::Digest() const { return Hex64(Fnv1a64(ToJson().dump())); }

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  ModelConfig cfg;
  try {
    if (j.contains("size_variant")) {
      cfg = ForVariant(ParseSizeVariant(j.at("size_variant").get<std::string>()));
    }
    for (const auto& [key, value] : j.items()) {
      if (key == "size_variant") continue;
      else if (key == "base_channels") cfg.base_channels = value.get<int>();
      else if (key == "channel_multipliers") cfg.channel_multipliers = value.get<std::vector<int>>();
      else if (key == "levels") cfg.levels = value.get<int>();
      else if (key == "attention_levels") cfg.attention_levels = value.get<std::vector<int>>();
      else if (key == "conditioning_dim") cfg.conditioning_dim = value.get<int>();
      else if (key == "side_info_dim") cfg.side_info_dim = value.get<int>();
      else if (key == "duplicate_convs") cfg.duplicate_convs = value.get<bool>();
      else if (key == "level4_inner_blocks") cfg.level4_inner_blocks = value.get<int>();
      else if (key == "pad_input") cfg.pad_input = value.get<bool>();
      else throw ConfigError("model." + key + ": unknown key");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

int NormGroups(int channels) {
  for (int g : {8, 4, 2})
    if (channels % g == 0 && channels / g >= 2) return g;
  return 1;
}

namespace {

// Uniform variance scaling over the average of fan-in and fan-out.
void VarianceScaling(torch::Tensor w, double scale = 1.0) {
  torch::NoGradGuard guard;
  int64_t receptive = 1;
  for (int64_t d = 2; d < w.dim(); ++d) receptive *= w.size(d);
  const double fan_in = static_cast<double>(w.size(1) * receptive);
  const double fan_out = static_cast<double>(w.size(0) * receptive);
  const double bound = std::sqrt(3.0 * scale / ((fan_in + fan_out) / 2.0));
  w.uniform_(-bound, bound);
}

torch::nn::Conv2d MakeConv2d(int in, int out, int k, bool zero = false) {
  auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).padding(k / 2));
  torch::NoGradGuard guard;
  if (zero) conv->weight.zero_();
  else VarianceScaling(conv->weight);
  conv->bias.zero_();
  return conv;
}

torch::nn::Linear MakeLinear(int in, int out) {
  auto lin = torch::nn::Linear(in, out);
  torch::NoGradGuard guard;
  VarianceScaling(lin->weight);
  lin->bias.zero_();
  return lin;
}

torch::nn::Conv1d MakeConv1d(int in, int out, int k) {
  auto conv = torch::nn::Conv1d(torch::nn::Conv1dOptions(in, out, k));
  torch::NoGradGuard guard;
  VarianceScaling(conv->weight);
  conv->bias.zero_();
  return conv;
}

torch::nn::GroupNorm MakeNorm(int channels) {
  return torch::nn::GroupNorm(torch::nn::GroupNormOptions(NormGroups(channels), channels));
}

// Replicate-pads or truncates (B, frames, D) to the requested frame count.
torch::Tensor FitFrames(const torch::Tensor& emb, int64_t frames) {
  const int64_t have = emb.size(1);
  if (have == frames) return emb;
  if (have > frames) return emb.narrow(1, 0, frames);
  auto last = emb.narrow(1, have - 1, 1).expand({emb.size(0), frames - have, emb.size(2)});
  return torch::cat({emb, last}, 1);
}

}  // namespace

torch::Tensor SinusoidalTimeFeatures(const torch::Tensor& t, int dim) {
  const int half = dim / 2;
  auto idx = torch::arange(half, t.options());
  auto freqs = torch::exp(idx * (-std::log(10000.0) / std::max(half - 1, 1)));
  auto args = (t * 1000.0).unsqueeze(1) * freqs.unsqueeze(0);
  return torch::cat({torch::sin(args), torch::cos(args)}, 1);
}

torch::Tensor InterpolateFrames(const torch::Tensor& emb, int64_t frames) {
  if (emb.size(1) == frames) return emb;
  auto x = emb.transpose(1, 2);
  x = F::interpolate(x, F::InterpolateFuncOptions()
                            .size(std::vector<int64_t>{frames})
                            .mode(torch::kLinear)
                            .align_corners(false));
  return x.transpose(1, 2);
}

ResBlockImpl::ResBlockImpl(int in_channels, int out_channels, int time_dim,
                           bool duplicate_conv) {
  norm1_ = register_module("norm1", MakeNorm(in_channels));
  conv1_ = register_module("conv1", MakeConv2d(in_channels, out_channels, 3));
  if (time_dim > 0) time_proj_ = register_module("time_proj", MakeLinear(time_dim, out_channels));
  if (duplicate_conv) {
    norm2_ = register_module("norm2", MakeNorm(out_channels));
    conv2_ = register_module("conv2", MakeConv2d(out_channels, out_channels, 3));
  }
  if (in_channels != out_channels)
    skip_ = register_module("skip", MakeConv2d(in_channels, out_channels, 1));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& temb) {
  auto h = conv1_(F::silu(norm1_(x)));
  if (time_proj_) h = h + time_proj_(F::silu(temb)).unsqueeze(-1).unsqueeze(-1);
  if (conv2_) h = conv2_(F::silu(norm2_(h)));
  auto s = skip_ ? skip_(x) : x;
  return (s + h) * M_SQRT1_2;
}

CrossAttentionImpl::CrossAttentionImpl(int channels, int cond_dim) {
  norm_ = register_module("norm", MakeNorm(channels));
  query_ = register_module("query", MakeConv2d(channels, channels, 1));
  key_ = register_module("key", MakeLinear(cond_dim, channels));
  value_ = register_module("value", MakeLinear(cond_dim, channels));
  out_ = register_module("out", MakeConv2d(channels, channels, 1));
  // softplus(slope) = 1 at initialization.
  slope_ = register_parameter("slope", torch::full({1}, std::log(std::exp(1.0) - 1.0)));
}

torch::Tensor CrossAttentionImpl::forward(const torch::Tensor& h, const torch::Tensor& emb) {
  const int64_t c = h.size(1);
  const int64_t frames = h.size(3);
  auto q = query_(norm_(h)).permute({0, 2, 3, 1});  // B F T C
  auto k = key_(emb).unsqueeze(1);                   // B 1 T C
  auto v = value_(emb).unsqueeze(1);
  auto scores = torch::matmul(q, k.transpose(-1, -2)) / std::sqrt(static_cast<double>(c));
  auto pos = torch::arange(frames, h.options());
  auto dist = (pos.unsqueeze(1) - pos.unsqueeze(0)).abs();
  scores = scores - F::softplus(slope_) * dist;
  auto attn = torch::softmax(scores, -1);
  auto out = torch::matmul(attn, v).permute({0, 3, 1, 2});
  return h + out_(out);
}

ConditioningEncoderImpl::ConditioningEncoderImpl(int side_dim, int cond_dim) {
  conv0_ = register_module("conv0", MakeConv1d(side_dim, cond_dim, 3));
  conv1_ = register_module("conv1", MakeConv1d(cond_dim, cond_dim, 1));
}

torch::Tensor ConditioningEncoderImpl::forward(const torch::Tensor& side_info) {
  auto x = side_info.transpose(1, 2);
  x = F::pad(x, F::PadFuncOptions({1, 1}).mode(torch::kReplicate));
  x = conv1_(F::silu(conv0_(x)));
  return x.transpose(1, 2);
}

UNetImpl::UNetImpl(const ModelConfig& cfg, int in_channels, int out_channels, bool use_time,
                   std::string name)
    : cfg_(cfg), use_time_(use_time), name_(std::move(name)) {
  cfg_.Validate();
  const int b = cfg_.base_channels;
  const int tdim = use_time ? cfg_.time_embedding_dim() : 0;
  const bool dup = cfg_.duplicate_convs;
  // One extra input channel carries the frequency coordinate.
  conv_in_ = register_module("conv_in", MakeConv2d(in_channels + 1, b, 3));
  if (use_time) {
    time0_ = register_module("time0", MakeLinear(b, tdim));
    time1_ = register_module("time1", MakeLinear(tdim, tdim));
  }
  down_ = register_module("down", torch::nn::ModuleList());
  int cur = b;
  for (int l = 0; l < cfg_.levels; ++l) {
    down_->push_back(ResBlock(cur, cfg_.channels(l), tdim, dup));
    cur = cfg_.channels(l);
    CrossAttention attn{nullptr};
    if (HasAttention(l))
      attn = register_module("down_attn" + std::to_string(l),
                             CrossAttention(cur, cfg_.conditioning_dim));
    down_attention_.push_back(attn);
  }
  bottleneck_ = register_module("bottleneck", torch::nn::ModuleList());
  for (int i = 0; i < cfg_.level4_inner_blocks; ++i)
    bottleneck_->push_back(ResBlock(cur, cur, tdim, dup));
  if (HasAttention(cfg_.levels))
    bottleneck_attention_ = register_module("bottleneck_attn",
                                            CrossAttention(cur, cfg_.conditioning_dim));
  up_ = register_module("up", torch::nn::ModuleList());
  for (int l = cfg_.levels - 1; l >= 0; --l) {
    up_->push_back(ResBlock(cur + cfg_.channels(l), cfg_.channels(l), tdim, dup));
    cur = cfg_.channels(l);
  }
  norm_out_ = register_module("norm_out", MakeNorm(cur));
  conv_out_ = register_module("conv_out", MakeConv2d(cur, out_channels, 3, /*zero=*/true));
}

bool UNetImpl::HasAttention(int level) const {
  for (int l : cfg_.attention_levels)
    if (l == level) return true;
  return false;
}

void UNetImpl::CheckFinite(const torch::Tensor& h, const char* where) const {
  if (check_finite_ && !torch::isfinite(h).all().item<bool>())
    throw NonFiniteError(name_ + "." + where);
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x, const torch::Tensor& t,
                                const torch::Tensor& emb) {
  TORCH_CHECK(x.dim() == 4, name_, ": expected (B, C, F, T) input, got ", x.sizes());
  const int64_t bins = x.size(2), frames = x.size(3);
  const int64_t m = int64_t{1} << cfg_.levels;
  const int64_t pad_f = (m - bins % m) % m, pad_t = (m - frames % m) % m;
  if ((pad_f || pad_t) && !cfg_.pad_input)
    throw std::invalid_argument(name_ + ": input " + std::to_string(bins) + "x" +
                                std::to_string(frames) + " not divisible by " +
                                std::to_string(m) + " and padding is disabled");
  auto h = (pad_f || pad_t) ? F::pad(x, F::PadFuncOptions({0, pad_t, 0, pad_f})) : x;
  const int64_t tp = frames + pad_t, fp = bins + pad_f;

  auto coord = torch::linspace(-1.0, 1.0, fp, x.options()).view({1, 1, fp, 1});
  h = torch::cat({h, coord.expand({x.size(0), 1, fp, tp})}, 1);
  h = conv_in_(h);

  torch::Tensor temb;
  if (use_time_) {
    TORCH_CHECK(t.defined(), name_, ": time input required");
    temb = time1_(F::silu(time0_(SinusoidalTimeFeatures(t.to(x.dtype()), cfg_.base_channels))));
  }
  torch::Tensor cond;
  const bool any_attention = !cfg_.attention_levels.empty();
  if (any_attention) {
    TORCH_CHECK(emb.defined(), name_, ": conditioning embedding required");
    cond = FitFrames(emb, tp / kSideInfoDecimation);
  }

  std::vector<torch::Tensor> skips;
  static const char* kDownNames[] = {"down0", "down1", "down2", "down3", "down4", "down5"};
  for (int l = 0; l < cfg_.levels; ++l) {
    h = down_[l]->as<ResBlock>()->forward(h, temb);
    if (down_attention_[l]) h = down_attention_[l]->forward(h, InterpolateFrames(cond, h.size(3)));
    CheckFinite(h, kDownNames[l]);
    skips.push_back(h);
    h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(2));
  }
  for (size_t i = 0; i < bottleneck_->size(); ++i) {
    h = bottleneck_[i]->as<ResBlock>()->forward(h, temb);
    if (i == 0 && bottleneck_attention_)
      h = bottleneck_attention_->forward(h, InterpolateFrames(cond, h.size(3)));
  }
  CheckFinite(h, "bottleneck");
  static const char* kUpNames[] = {"up0", "up1", "up2", "up3", "up4", "up5"};
  for (int i = 0; i < cfg_.levels; ++i) {
    const int l = cfg_.levels - 1 - i;
    h = F::interpolate(h, F::InterpolateFuncOptions()
                              .scale_factor(std::vector<double>{2.0, 2.0})
                              .mode(torch::kNearest));
    h = torch::cat({h, skips[l]}, 1);
    h = up_[i]->as<ResBlock>()->forward(h, temb);
    CheckFinite(h, kUpNames[l]);
  }
  h = conv_out_(F::silu(norm_out_(h)));
  CheckFinite(h, "conv_out");
  if (pad_f || pad_t) h = h.narrow(2, 0, bins).narrow(3, 0, frames);
  return h;
}

TwoStageModelImpl::TwoStageModelImpl(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.Validate();
  torch::manual_seed(init_seed);
  encoder_ = register_module("encoder",
                             ConditioningEncoder(cfg_.side_info_dim, cfg_.conditioning_dim));
  predictor_ = register_module("predictor", UNet(cfg_, 2, 2, /*use_time=*/false, "predictor"));
  refiner_ = register_module("refiner", UNet(cfg_, 2, 2, /*use_time=*/true, "refiner"));
}

torch::Tensor TwoStageModelImpl::Encode(const torch::Tensor& side_info) {
  return encoder_(side_info);
}

torch::Tensor TwoStageModelImpl::Predict(const torch::Tensor& y, const torch::Tensor& emb) {
  return y + predictor_(y, torch::Tensor(), emb);
}

torch::Tensor TwoStageModelImpl::VectorField(const torch::Tensor& x, const torch::Tensor& t,
                                             const torch::Tensor& emb) {
  return refiner_(x, t, emb);
}

int64_t ParameterCount(const torch::nn::Module& m) {
  int64_t n = 0;
  for (const auto& p : m.parameters()) n += p.numel();
  return n;
}

NamedTensors NamedParameters(const torch::nn::Module& m) {
  NamedTensors out;
  for (const auto& item : m.named_parameters()) out.emplace_back(item.key(), item.value());
  return out;
}

torch::Tensor TfToTensor(const TFRepresentation& tf) {
  auto out = torch::empty({2, tf.num_bins, tf.num_frames}, torch::kFloat);
  float* re = out.data_ptr<float>();
  float* im = re + static_cast<size_t>(tf.num_bins) * tf.num_frames;
  for (size_t i = 0; i < tf.data.size(); ++i) {
    re[i] = static_cast<float>(tf.data[i].real());
    im[i] = static_cast<float>(tf.data[i].imag());
  }
  return out;
}

void TensorToTf(const torch::Tensor& t, TFRepresentation* tf) {
  auto c = t.detach().to(torch::kDouble).contiguous();
  if (c.dim() != 3 || c.size(0) != 2 || c.size(1) != tf->num_bins || c.size(2) != tf->num_frames)
    throw std::invalid_argument("tensor shape does not match TF representation");
  const double* re = c.data_ptr<double>();
  const double* im = re + tf->data.size();
  for (size_t i = 0; i < tf->data.size(); ++i) tf->data[i] = {re[i], im[i]};
}

torch::Tensor SideInfoToTensor(const SideInfo& info) {
  auto out = torch::empty({info.frames, info.dim}, torch::kFloat);
  std::copy(info.values.begin(), info.values.end(), out.data_ptr<float>());
  return out;
}

}  // namespace flowse
