// Copyright 2026 The Twinfill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS-IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twinfill/generator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace F = torch::nn::functional;

namespace {

constexpr int64_t kTextureInputs = 3;
constexpr int64_t kStructureInputs = 2;
constexpr double kLeakySlope = 0.2;

int64_t scaled(double scale, int64_t channels) {
  return std::max<int64_t>(1, std::llround(scale * static_cast<double>(channels)));
}

int64_t encoder_width(const GeneratorConfig& c, double scale, int64_t level) {
  const int64_t nominal = c.base_channels << level;
  return std::min(scaled(scale, nominal), scaled(scale, c.max_channels));
}

int64_t pconv_params(int64_t in, int64_t out, int64_t k, bool bias) {
  return out * in * k * k + (bias ? out : 0);
}

int64_t conv_params(int64_t in, int64_t out, int64_t k) { return out * in * k * k + out; }

int64_t count_with_scale(const GeneratorConfig& c, double scale) {
  const int64_t levels = c.levels;
  auto enc = [&](int64_t l) { return encoder_width(c, scale, l); };
  auto stream = [&](int64_t own_inputs, int64_t other_inputs, bool borrow) {
    int64_t total = 0;
    for (int64_t l = 0; l < levels; ++l) {
      const bool norm = c.batch_norm && l > 0;
      const int64_t in = l == 0 ? own_inputs : enc(l - 1);
      total += pconv_params(in, enc(l), GeneratorConfig::encoder_kernel(l), !norm);
      if (norm) total += 2 * enc(l);
    }
    for (int64_t l = levels - 1; l >= 0; --l) {
      const bool norm = c.batch_norm && l > 0;
      int64_t in = enc(l) + (l > 0 ? enc(l - 1) : own_inputs);
      if (borrow) in += l > 0 ? enc(l - 1) : other_inputs;
      const int64_t out = l > 0 ? enc(l - 1) : c.feature_channels;
      total += pconv_params(in, out, 3, !norm);
      if (norm) total += 2 * out;
    }
    return total;
  };

  int64_t total = 0;
  if (c.two_stream) {
    total += stream(kTextureInputs, kStructureInputs, c.cross_borrow);
    total += stream(kStructureInputs, kTextureInputs, c.cross_borrow);
  } else {
    total += stream(kTextureInputs + kStructureInputs, 0, false);
  }
  const int64_t f = c.feature_channels;
  const int64_t d = 2 * f;
  auto head = [&](int64_t out) { return 2 * conv_params(f, f, 3) + conv_params(f, out, 1); };
  total += head(3) + head(1);
  if (c.use_bigff) total += 2 * conv_params(d, f, 3) + 2;
  if (c.use_cfa) {
    total += conv_params(d, d, 3);  // down
    if (c.multiscale_cfa) {
      total += 4 * conv_params(d, d, 3) + conv_params(d, d, 3) + conv_params(d, 4, 1);
    }
    total += d * d * 16 + d;       // deconv
    total += conv_params(2 * d, d, 1);
  }
  total += conv_params(d, f, 3) + conv_params(f, 3, 1);
  return total;
}

torch::nn::ModuleList build_encoder(const GeneratorConfig& c, int64_t inputs) {
  torch::nn::ModuleList list;
  for (int64_t l = 0; l < c.levels; ++l) {
    const int64_t in = l == 0 ? inputs : c.encoder_channels(l - 1);
    list->push_back(EncoderStage(in, c.encoder_channels(l), GeneratorConfig::encoder_kernel(l),
                                 c.batch_norm && l > 0));
  }
  return list;
}

// Stored deepest-first: element 0 decodes level levels-1.
torch::nn::ModuleList build_decoder(const GeneratorConfig& c, int64_t own_inputs,
                                    int64_t other_inputs, bool borrow) {
  torch::nn::ModuleList list;
  for (int64_t l = c.levels - 1; l >= 0; --l) {
    int64_t in = c.encoder_channels(l) + (l > 0 ? c.encoder_channels(l - 1) : own_inputs);
    if (borrow) in += l > 0 ? c.encoder_channels(l - 1) : other_inputs;
    const int64_t out = l > 0 ? c.encoder_channels(l - 1) : c.feature_channels;
    list->push_back(DecoderStage(in, out, c.batch_norm && l > 0));
  }
  return list;
}

torch::Tensor upsample(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kNearest));
}

// Runs one decoder; `other` is empty when the stream does not borrow.
torch::Tensor run_decoder(torch::nn::ModuleList& decoder, int64_t levels,
                          const std::vector<torch::Tensor>& own_skips,
                          const std::vector<torch::Tensor>& own_masks,
                          const torch::Tensor& own_input,
                          const std::vector<torch::Tensor>* other_skips,
                          const std::vector<torch::Tensor>* other_masks,
                          const torch::Tensor& other_input, const torch::Tensor& input_mask,
                          std::vector<torch::Tensor>* decoder_masks) {
  auto x = own_skips[levels - 1];
  auto m = own_masks[levels - 1];
  for (int64_t step = 0; step < levels; ++step) {
    const int64_t l = levels - 1 - step;
    std::vector<torch::Tensor> parts{upsample(x)};
    auto mask = upsample(m);
    parts.push_back(l > 0 ? own_skips[l - 1] : own_input);
    mask = torch::max(mask, l > 0 ? own_masks[l - 1] : input_mask);
    if (other_skips != nullptr) {
      parts.push_back(l > 0 ? (*other_skips)[l - 1] : other_input);
      mask = torch::max(mask, l > 0 ? (*other_masks)[l - 1] : input_mask);
    }
    auto out = decoder[step]->as<DecoderStage>()->forward(torch::cat(parts, 1), mask);
    x = out.features;
    m = out.mask;
    if (decoder_masks != nullptr) decoder_masks->push_back(m);
  }
  return x;
}

}  // namespace

GeneratorConfig GeneratorConfig::for_size(int64_t size) {
  GeneratorConfig c;
  c.image_size = size;
  const int64_t log2 = std::bit_width(static_cast<uint64_t>(std::max<int64_t>(size, 1))) - 1;
  c.levels = std::clamp<int64_t>(log2 - 1, 3, 7);
  return c;
}

void GeneratorConfig::validate() const {
  if (levels < 3) throw InvalidConfig("model.levels must be >= 3");
  if (levels > 30 || (int64_t{1} << levels) > image_size) {
    throw InvalidConfig("model.levels too deep: 2^levels must not exceed model.image_size");
  }
  if (image_size % (int64_t{1} << levels) != 0) {
    throw InvalidConfig("model.image_size must be divisible by 2^levels");
  }
  if (base_channels < 1 || max_channels < base_channels || feature_channels < 1) {
    throw InvalidConfig("model channel widths must be positive with max >= base");
  }
  if (width_scale < 0.0) throw InvalidConfig("model.width_scale must be >= 0");
}

double GeneratorConfig::resolved_width_scale() const {
  if (width_scale > 0.0) return width_scale;
  return two_stream ? 1.0 : matched_single_stream_scale(*this);
}

int64_t GeneratorConfig::encoder_channels(int64_t level) const {
  return encoder_width(*this, resolved_width_scale(), level);
}

int64_t GeneratorConfig::encoder_kernel(int64_t level) {
  return level == 0 ? 7 : level == 1 ? 5 : 3;
}

int64_t count_parameters(const GeneratorConfig& config) {
  return count_with_scale(config, config.resolved_width_scale());
}

double matched_single_stream_scale(const GeneratorConfig& config) {
  GeneratorConfig two = config;
  two.two_stream = true;
  two.width_scale = 1.0;
  const auto target = static_cast<double>(count_with_scale(two, 1.0));
  GeneratorConfig one = config;
  one.two_stream = false;
  double best_scale = 1.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) {
    const double scale = 1.0 + i * 0.0005;
    const double gap = std::abs(static_cast<double>(count_with_scale(one, scale)) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_scale = scale;
    }
  }
  return best_scale;
}

GeneratorInputs GeneratorInputs::from(const Batch& batch) {
  return {batch.image_in, batch.edge_in, batch.gray_in, batch.mask};
}

GeneratorInputs GeneratorInputs::from(const Sample& sample) {
  return {sample.image_in.unsqueeze(0), sample.edge_in.unsqueeze(0),
          sample.gray_in.unsqueeze(0), sample.mask.unsqueeze(0)};
}

EncoderStageImpl::EncoderStageImpl(int64_t in, int64_t out, int64_t kernel, bool use_norm) {
  PartialConvSpec spec{in, out, kernel, 2, kernel / 2, 1, !use_norm};
  conv = register_module("conv", PartialConv2d(spec));
  if (use_norm) norm = register_module("norm", torch::nn::BatchNorm2d(out));
}

MaskedFeatures EncoderStageImpl::forward(const torch::Tensor& x, const torch::Tensor& m) {
  auto out = conv->forward(x, m);
  if (norm) out.features = norm->forward(out.features);
  out.features = F::leaky_relu(out.features, F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
  return out;
}

DecoderStageImpl::DecoderStageImpl(int64_t in, int64_t out, bool use_norm) {
  PartialConvSpec spec{in, out, 3, 1, 1, 1, !use_norm};
  conv = register_module("conv", PartialConv2d(spec));
  if (use_norm) norm = register_module("norm", torch::nn::BatchNorm2d(out));
}

MaskedFeatures DecoderStageImpl::forward(const torch::Tensor& x, const torch::Tensor& m) {
  auto out = conv->forward(x, m);
  if (norm) out.features = norm->forward(out.features);
  out.features = torch::relu(out.features);
  return out;
}

ProjectionHeadImpl::ProjectionHeadImpl(int64_t channels, int64_t out_channels) {
  using torch::nn::Conv2dOptions;
  res1 = register_module("res1", torch::nn::Conv2d(Conv2dOptions(channels, channels, 3).padding(1)));
  res2 = register_module("res2", torch::nn::Conv2d(Conv2dOptions(channels, channels, 3).padding(1)));
  project = register_module("project", torch::nn::Conv2d(Conv2dOptions(channels, out_channels, 1)));
}

torch::Tensor ProjectionHeadImpl::forward(const torch::Tensor& x) {
  auto residual = x + res2->forward(torch::relu(res1->forward(x)));
  return project->forward(residual);
}

InpaintGeneratorImpl::InpaintGeneratorImpl(GeneratorConfig config) : config_(config) {
  config_.validate();
  config_.width_scale = config_.resolved_width_scale();
  const auto& c = config_;
  const int64_t f = c.feature_channels;
  if (c.two_stream) {
    texture_encoder = register_module("texture_encoder", build_encoder(c, kTextureInputs));
    structure_encoder = register_module("structure_encoder", build_encoder(c, kStructureInputs));
    texture_decoder = register_module(
        "texture_decoder", build_decoder(c, kTextureInputs, kStructureInputs, c.cross_borrow));
    structure_decoder = register_module(
        "structure_decoder", build_decoder(c, kStructureInputs, kTextureInputs, c.cross_borrow));
  } else {
    texture_encoder = register_module("texture_encoder",
                                      build_encoder(c, kTextureInputs + kStructureInputs));
    structure_encoder = register_module("structure_encoder", torch::nn::ModuleList());
    texture_decoder = register_module(
        "texture_decoder", build_decoder(c, kTextureInputs + kStructureInputs, 0, false));
    structure_decoder = register_module("structure_decoder", torch::nn::ModuleList());
  }
  texture_head = register_module("texture_head", ProjectionHead(f, 3));
  structure_head = register_module("structure_head", ProjectionHead(f, 1));
  if (c.use_bigff) fusion = register_module("fusion", BiGFF(f));
  if (c.use_cfa) {
    aggregation = register_module("aggregation", ContextualAggregation(2 * f, c.multiscale_cfa));
  }
  using torch::nn::Conv2dOptions;
  output_hidden =
      register_module("output_hidden", torch::nn::Conv2d(Conv2dOptions(2 * f, f, 3).padding(1)));
  output_rgb = register_module("output_rgb", torch::nn::Conv2d(Conv2dOptions(f, 3, 1)));
}

StreamFeatures InpaintGeneratorImpl::encode(const GeneratorInputs& in) {
  const auto& c = config_;
  if (in.image_in.dim() != 4 || in.image_in.size(1) != 3 || in.mask.dim() != 4 ||
      in.mask.size(1) != 1 || in.edge_in.size(1) != 1 || in.gray_in.size(1) != 1) {
    throw InvalidInput("generator: expected (B,3,H,W) image and (B,1,H,W) edge/gray/mask");
  }
  const int64_t h = in.image_in.size(2);
  const int64_t w = in.image_in.size(3);
  const int64_t step = int64_t{1} << c.levels;
  if (h % step != 0 || w % step != 0) {
    throw InvalidInput("generator: resolution " + std::to_string(h) + "x" + std::to_string(w) +
                       " not divisible by 2^levels = " + std::to_string(step));
  }

  StreamFeatures s;
  s.input_mask = in.mask;
  auto run = [&](torch::nn::ModuleList& encoder, torch::Tensor x,
                 std::vector<torch::Tensor>& skips, std::vector<torch::Tensor>& masks) {
    auto m = in.mask;
    for (std::size_t l = 0; l < encoder->size(); ++l) {
      auto out = encoder[l]->as<EncoderStage>()->forward(x, m);
      x = out.features;
      m = out.mask;
      skips.push_back(x);
      masks.push_back(m);
    }
  };
  if (c.two_stream) {
    s.texture_input = in.image_in;
    s.structure_input = torch::cat({in.edge_in, in.gray_in}, 1);
    run(texture_encoder, s.texture_input, s.texture_skips, s.masks_per_level);
    run(structure_encoder, s.structure_input, s.structure_skips, s.structure_masks);
  } else {
    s.texture_input = torch::cat({in.image_in, in.edge_in, in.gray_in}, 1);
    s.structure_input = s.texture_input;
    run(texture_encoder, s.texture_input, s.texture_skips, s.masks_per_level);
    s.structure_skips = s.texture_skips;
    s.structure_masks = s.masks_per_level;
  }
  return s;
}

void InpaintGeneratorImpl::decode(StreamFeatures& s) {
  const int64_t levels = config_.levels;
  if (static_cast<int64_t>(s.texture_skips.size()) != levels) {
    throw InvalidInput("generator: decode called before encode");
  }
  s.decoder_masks.clear();
  if (!config_.two_stream) {
    s.texture_features = run_decoder(texture_decoder, levels, s.texture_skips,
                                     s.masks_per_level, s.texture_input, nullptr, nullptr,
                                     torch::Tensor(), s.input_mask, &s.decoder_masks);
    s.structure_features = s.texture_features;
    return;
  }
  const bool borrow = config_.cross_borrow;
  s.texture_features = run_decoder(
      texture_decoder, levels, s.texture_skips, s.masks_per_level, s.texture_input,
      borrow ? &s.structure_skips : nullptr, borrow ? &s.structure_masks : nullptr,
      s.structure_input, s.input_mask, &s.decoder_masks);
  s.structure_features = run_decoder(
      structure_decoder, levels, s.structure_skips, s.structure_masks, s.structure_input,
      borrow ? &s.texture_skips : nullptr, borrow ? &s.masks_per_level : nullptr,
      s.texture_input, s.input_mask, nullptr);
}

HeadOutputs InpaintGeneratorImpl::project_heads(const torch::Tensor& texture,
                                                const torch::Tensor& structure) {
  return {torch::sigmoid(texture_head->forward(texture)), structure_head->forward(structure)};
}

GeneratorOutput InpaintGeneratorImpl::forward(const GeneratorInputs& inputs) {
  GeneratorOutput out;
  out.features = encode(inputs);
  decode(out.features);
  const auto& ft = out.features.texture_features;
  const auto& fs = out.features.structure_features;
  out.heads = project_heads(ft, fs);
  out.fused = fusion ? fusion->forward(ft, fs) : torch::cat({fs, ft}, 1);
  auto tail = aggregation ? aggregation->forward(out.fused) : out.fused;
  auto hidden = F::leaky_relu(output_hidden->forward(tail),
                              F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
  out.image = torch::sigmoid(output_rgb->forward(hidden));
  out.edge = torch::sigmoid(out.heads.edge_logits);
  return out;
}

std::vector<torch::nn::BatchNorm2d> InpaintGeneratorImpl::batch_norms() const {
  std::vector<torch::nn::BatchNorm2d> out;
  for (const auto& m : modules(/*include_self=*/false)) {
    if (auto bn = std::dynamic_pointer_cast<torch::nn::BatchNorm2dImpl>(m)) {
      out.emplace_back(bn);
    }
  }
  return out;
}

void InpaintGeneratorImpl::freeze_batch_norm(bool frozen) {
  bn_frozen_ = frozen;
  for (auto& bn : batch_norms()) {
    for (auto& p : bn->parameters()) p.set_requires_grad(!frozen);
  }
  train(is_training());
}

void InpaintGeneratorImpl::train(bool on) {
  torch::nn::Module::train(on);
  if (bn_frozen_) {
    for (auto& bn : batch_norms()) bn->eval();
  }
}

torch::Tensor composite(const torch::Tensor& output, const torch::Tensor& image_in,
                        const torch::Tensor& mask) {
  return image_in + (1.0 - mask) * output;
}

torch::Tensor composite(const torch::Tensor& output, const Sample& sample) {
  return composite(output, sample.image_in, sample.mask);
}

Generated generate(InpaintGenerator& generator, const Sample& sample) {
  torch::NoGradGuard no_grad;
  const bool was_training = generator->is_training();
  if (was_training) generator->eval();
  const auto dtype = generator->parameters().front().scalar_type();
  auto in = GeneratorInputs::from(sample);
  in = {in.image_in.to(dtype), in.edge_in.to(dtype), in.gray_in.to(dtype), in.mask.to(dtype)};
  auto out = generator->forward(in);
  if (was_training) generator->train();
  return {out.image.squeeze(0).to(torch::kFloat32), out.edge.squeeze(0).to(torch::kFloat32)};
}

}  // namespace twinfill
