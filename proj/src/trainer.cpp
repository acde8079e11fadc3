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

#include "twinfill/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace {

constexpr const char* kGeneratorPrefix = "generator/";
constexpr const char* kDiscriminatorPrefix = "discriminator/";
constexpr const char* kGeneratorAdam = "adam_generator/";
constexpr const char* kDiscriminatorAdam = "adam_discriminator/";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void set_lr(torch::optim::Adam& optimizer, double lr) {
  for (auto& group : optimizer.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

std::unique_ptr<torch::optim::Adam> make_adam(std::vector<torch::Tensor> params, double lr,
                                              const TrainConfig& t) {
  return std::make_unique<torch::optim::Adam>(
      std::move(params), torch::optim::AdamOptions(lr).betas({t.beta1, t.beta2}));
}

// Parameters and buffers of a module under a common prefix, in a stable order.
std::vector<std::pair<std::string, torch::Tensor>> module_tensors(const torch::nn::Module& m,
                                                                  const std::string& prefix) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : m.named_parameters()) out.emplace_back(prefix + item.key(), item.value());
  for (const auto& item : m.named_buffers()) out.emplace_back(prefix + item.key(), item.value());
  return out;
}

void add_adam_state(TensorArchive& archive, const torch::optim::Adam& optimizer,
                    const torch::nn::Module& m, const std::string& prefix) {
  const auto& state = optimizer.state();
  for (const auto& item : m.named_parameters()) {
    const auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    archive.add(prefix + item.key() + "/step", torch::tensor(s.step(), torch::kInt64));
    archive.add(prefix + item.key() + "/exp_avg", s.exp_avg());
    archive.add(prefix + item.key() + "/exp_avg_sq", s.exp_avg_sq());
  }
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

void require_finite(const torch::Tensor& loss, const char* name, int64_t iteration,
                    const std::map<std::string, double>& context) {
  const double v = loss.item<double>();
  if (std::isfinite(v)) return;
  nlohmann::json dump = {{"iteration", iteration}, {"term", name}, {"value", std::to_string(v)}};
  for (const auto& [k, x] : context) dump["terms"][k] = std::isfinite(x) ? nlohmann::json(x)
                                                                         : nlohmann::json(std::to_string(x));
  throw NumericError("non-finite " + std::string(name) + " loss: " + dump.dump());
}

void copy_into(torch::Tensor& dst, const torch::Tensor& src) {
  torch::NoGradGuard no_grad;
  dst.copy_(src);
}

// Shape/dtype check for every entry of `expected` against the archive.
void check_layout(const TensorArchive& archive,
                  const std::vector<std::pair<std::string, torch::Tensor>>& expected) {
  for (const auto& [name, tensor] : expected) {
    const auto* t = archive.find(name);
    if (t == nullptr) throw CheckpointError("checkpoint lacks tensor '" + name + "'");
    if (t->sizes() != tensor.sizes() || t->scalar_type() != tensor.scalar_type()) {
      throw CheckpointError("checkpoint tensor '" + name + "' has a different shape or dtype");
    }
  }
}

RunConfig config_from_meta(const nlohmann::json& meta) {
  if (meta.value("kind", "") != "twinfill-checkpoint") {
    throw CheckpointError("archive is not a twinfill checkpoint");
  }
  const auto version = meta.value("checkpoint_version", int64_t{-1});
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  RunConfig config;
  try {
    config.merge_text(meta.at("config").get<std::string>());
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint config unreadable: ") + e.what());
  }
  return config;
}

}  // namespace

nlohmann::json StepRecord::to_json() const {
  return {{"iteration", iteration},
          {"phase", to_string(phase)},
          {"lr_generator", lr_generator},
          {"lr_discriminator", lr_discriminator},
          {"loss_rec", rec},
          {"loss_perc", perc},
          {"loss_style", style},
          {"loss_adv_generator", adv_generator},
          {"loss_adv_discriminator", adv_discriminator},
          {"loss_inter", inter},
          {"loss_total", total},
          {"hole_l1", hole_l1},
          {"hole_percent", hole_percent},
          {"known_percent", known_percent}};
}

double hole_l1(const torch::Tensor& output, const torch::Tensor& target,
               const torch::Tensor& mask) {
  torch::NoGradGuard no_grad;
  const auto hole = (1.0 - mask.to(torch::kDouble)).expand_as(output);
  const double count = hole.sum().item<double>();
  if (count <= 0.0) return 0.0;
  const auto diff = (output.to(torch::kDouble) - target.to(torch::kDouble)).abs();
  return (diff * hole).sum().item<double>() / count;
}

Trainer::Trainer(RunConfig config, std::shared_ptr<FeatureExtractor> extractor)
    : config_(std::move(config)), extractor_(std::move(extractor)) {
  config_.model = config_.generator();
  config_.validate();
  if (!extractor_) extractor_ = make_feature_extractor(config_.vgg_weights, config_.extractor_seed);
  torch::manual_seed(config_.train.seed);
  generator_ = InpaintGenerator(config_.model);
  discriminator_ = Discriminator(config_.disc);
  generator_->train();
  discriminator_->train();
  g_optimizer_ = make_adam(generator_->parameters(), config_.train.generator_lr(), config_.train);
  d_optimizer_ =
      make_adam(discriminator_->parameters(), config_.train.discriminator_lr(), config_.train);
  set_phase(config_.train.phase);
}

void Trainer::set_phase(Phase phase) {
  config_.train.phase = phase;
  generator_->freeze_batch_norm(phase == Phase::kFinetune);
  apply_learning_rates();
}

void Trainer::apply_learning_rates() {
  set_lr(*g_optimizer_, config_.train.generator_lr());
  set_lr(*d_optimizer_, config_.train.discriminator_lr());
}

std::vector<std::size_t> Trainer::batch_indices(std::uint64_t seed, int64_t iteration,
                                                int64_t batch_size, std::size_t n) {
  if (n == 0) throw InvalidInput("empty dataset");
  std::vector<std::size_t> out;
  std::vector<std::size_t> perm;
  std::uint64_t perm_epoch = ~std::uint64_t{0};
  for (int64_t j = 0; j < batch_size; ++j) {
    const auto pos = static_cast<std::uint64_t>(iteration * batch_size + j);
    const std::uint64_t epoch = pos / n;
    if (epoch != perm_epoch) {
      perm.resize(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(epoch)));
      for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
      perm_epoch = epoch;
    }
    out.push_back(perm[pos % n]);
  }
  return out;
}

Batch Trainer::batch_for(std::span<const Sample> data, int64_t iteration) const {
  const auto idx = batch_indices(config_.train.seed, iteration, config_.train.batch_size, data.size());
  return collate(data, idx);
}

StepRecord Trainer::step(const Batch& input) {
  const auto dtype = generator_->parameters().front().scalar_type();
  const Batch batch = input.to(dtype);
  const auto& t = config_.train;
  const auto& w = config_.loss;
  generator_->train();
  discriminator_->train();
  const auto saved_buffers = snapshot_buffers();

  StepRecord rec;
  rec.iteration = iteration_ + 1;
  rec.phase = t.phase;
  rec.lr_generator = t.generator_lr();
  rec.lr_discriminator = t.discriminator_lr();

  auto out = generator_->forward(GeneratorInputs::from(batch));
  const auto comp = composite(out.image, batch.image_in, batch.mask);
  const DiscriminatorInputs real{batch.image_gt, batch.edge_gt, batch.gray_gt};
  const DiscriminatorInputs fake{comp, out.edge, to_grayscale(comp)};

  LossTerms terms;
  terms.rec = reconstruction_loss(out.image, batch.image_gt);
  terms.perc = perceptual_loss(out.image, batch.image_gt, *extractor_);
  terms.style = style_loss(out.image, batch.image_gt, *extractor_);
  terms.inter = intermediate_loss(out.heads, batch.edge_gt, batch.image_gt);
  if (w.adv > 0.0) {
    for (auto& p : discriminator_->parameters()) p.set_requires_grad(false);
    terms.adv = generator_adversarial_loss(discriminator_->forward(fake.image, fake.edge, fake.gray));
    for (auto& p : discriminator_->parameters()) p.set_requires_grad(true);
  } else {
    terms.adv = torch::zeros({}, out.image.options());
  }
  const auto total = joint_loss(terms, w);

  torch::Tensor d_loss;
  if (t.train_discriminator) {
    const auto real_scores = discriminator_->forward(real.image, real.edge, real.gray);
    const auto fake_scores = discriminator_->forward(fake.image.detach(), fake.edge.detach(),
                                                     fake.gray.detach());
    d_loss = discriminator_loss(real_scores, fake_scores);
    rec.adv_discriminator = d_loss.item<double>();
  }

  rec.rec = terms.rec.item<double>();
  rec.perc = terms.perc.item<double>();
  rec.style = terms.style.item<double>();
  rec.adv_generator = terms.adv.item<double>();
  rec.inter = terms.inter.item<double>();
  rec.total = total.item<double>();
  rec.hole_l1 = hole_l1(out.image.detach(), batch.image_gt, batch.mask);
  rec.hole_percent = 100.0 * (1.0 - batch.mask.to(torch::kDouble).mean().item<double>());
  rec.known_percent = 100.0 - rec.hole_percent;

  if (t.nan_guard) {
    try {
      require_finite(total, "generator", rec.iteration,
                     {{"rec", rec.rec}, {"perc", rec.perc}, {"style", rec.style},
                      {"adv", rec.adv_generator}, {"inter", rec.inter}});
      if (d_loss.defined()) require_finite(d_loss, "discriminator", rec.iteration, {});
    } catch (const NumericError&) {
      restore_buffers(saved_buffers);
      throw;
    }
  }

  g_optimizer_->zero_grad();
  total.backward();
  if (t.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(generator_->parameters(), t.grad_clip);
  g_optimizer_->step();

  if (d_loss.defined()) {
    d_optimizer_->zero_grad();
    d_loss.backward();
    if (t.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(discriminator_->parameters(), t.grad_clip);
    d_optimizer_->step();
  }

  ++iteration_;
  return rec;
}

std::vector<torch::Tensor> Trainer::snapshot_buffers() const {
  torch::NoGradGuard no_grad;
  std::vector<torch::Tensor> out;
  for (const auto& b : generator_->buffers()) out.push_back(b.clone());
  for (const auto& b : discriminator_->buffers()) out.push_back(b.clone());
  return out;
}

void Trainer::restore_buffers(const std::vector<torch::Tensor>& saved) {
  torch::NoGradGuard no_grad;
  std::size_t i = 0;
  for (auto& b : generator_->buffers()) b.copy_(saved[i++]);
  for (auto& b : discriminator_->buffers()) b.copy_(saved[i++]);
}

void Trainer::fit(std::span<const Sample> data, const FitOptions& options) {
  const auto& t = config_.train;
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);
  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::app);
    if (!log) throw IoError("cannot open log " + options.log_path.string());
  }
  auto save = [&](const std::string& name) {
    const auto path = options.checkpoint_dir / name;
    save_checkpoint(path);
    std::filesystem::copy_file(path, options.checkpoint_dir / "latest.twf",
                               std::filesystem::copy_options::overwrite_existing);
  };

  while (iteration_ < t.max_iters) {
    StepRecord rec;
    try {
      rec = step(batch_for(data, iteration_));
    } catch (const NumericError& e) {
      const std::string last =
          last_checkpoint_.empty() ? std::string("none") : last_checkpoint_.string();
      if (!options.checkpoint_dir.empty()) {
        std::ofstream dump(options.checkpoint_dir / "diagnostics.json");
        dump << nlohmann::json{{"error", e.what()}, {"last_good_checkpoint", last}}.dump(2) << "\n";
      }
      throw NumericError(std::string(e.what()) + "; last good checkpoint: " + last);
    }
    if (log.is_open() && rec.iteration % t.log_every == 0) log << rec.to_json().dump() << "\n";
    if (options.on_step) options.on_step(rec);
    if (!options.checkpoint_dir.empty() && t.checkpoint_every > 0 &&
        iteration_ % t.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_%08lld.twf", static_cast<long long>(iteration_));
      save(name);
    }
  }
  if (!options.checkpoint_dir.empty()) save("final.twf");
}

TensorArchive Trainer::checkpoint() const {
  TensorArchive archive;
  archive.meta = {{"kind", "twinfill-checkpoint"},
                  {"checkpoint_version", kCheckpointVersion},
                  {"iteration", iteration_},
                  {"phase", to_string(config_.train.phase)},
                  {"config", config_.to_text()}};
  for (const auto& [name, tensor] : module_tensors(*generator_, kGeneratorPrefix)) {
    archive.add(name, tensor);
  }
  for (const auto& [name, tensor] : module_tensors(*discriminator_, kDiscriminatorPrefix)) {
    archive.add(name, tensor);
  }
  add_adam_state(archive, *g_optimizer_, *generator_, kGeneratorAdam);
  add_adam_state(archive, *d_optimizer_, *discriminator_, kDiscriminatorAdam);
  return archive;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  write_archive(path, checkpoint());
  last_checkpoint_ = path;
}

void Trainer::restore(const TensorArchive& archive) {
  const RunConfig stored = config_from_meta(archive.meta);
  const auto iteration = archive.meta.value("iteration", int64_t{-1});
  if (iteration < 0) throw CheckpointError("checkpoint lacks an iteration counter");
  const Phase phase = parse_phase(archive.meta.value("phase", std::string()));
  if (stored.model.levels != config_.model.levels ||
      stored.model.image_size != config_.model.image_size) {
    throw CheckpointError("checkpoint was trained with a different model layout");
  }

  const auto g_tensors = module_tensors(*generator_, kGeneratorPrefix);
  const auto d_tensors = module_tensors(*discriminator_, kDiscriminatorPrefix);
  check_layout(archive, g_tensors);
  check_layout(archive, d_tensors);

  struct AdamEntry {
    torch::optim::Adam* optimizer;
    torch::Tensor param;
    int64_t step;
    torch::Tensor exp_avg, exp_avg_sq;
  };
  std::vector<AdamEntry> adam;
  std::set<std::string> known;
  for (const auto& [name, tensor] : g_tensors) known.insert(name);
  for (const auto& [name, tensor] : d_tensors) known.insert(name);
  auto collect = [&](torch::optim::Adam& opt, const torch::nn::Module& m, const std::string& prefix) {
    for (const auto& item : m.named_parameters()) {
      const std::string base = prefix + item.key();
      const auto* step = archive.find(base + "/step");
      const auto* avg = archive.find(base + "/exp_avg");
      const auto* avg_sq = archive.find(base + "/exp_avg_sq");
      if (step == nullptr && avg == nullptr && avg_sq == nullptr) continue;
      if (step == nullptr || avg == nullptr || avg_sq == nullptr || step->numel() != 1 ||
          step->scalar_type() != torch::kInt64 || avg->sizes() != item.value().sizes() ||
          avg_sq->sizes() != item.value().sizes() ||
          avg->scalar_type() != item.value().scalar_type() ||
          avg_sq->scalar_type() != item.value().scalar_type()) {
        throw CheckpointError("checkpoint optimizer state for '" + item.key() + "' is malformed");
      }
      adam.push_back({&opt, item.value(), step->item<int64_t>(), *avg, *avg_sq});
      known.insert(base + "/step");
      known.insert(base + "/exp_avg");
      known.insert(base + "/exp_avg_sq");
    }
  };
  collect(*g_optimizer_, *generator_, kGeneratorAdam);
  collect(*d_optimizer_, *discriminator_, kDiscriminatorAdam);
  for (const auto& t : archive.tensors) {
    if (!known.contains(t.name)) throw CheckpointError("checkpoint has unexpected tensor '" + t.name + "'");
  }

  // Everything validated; mutate from here on.
  for (auto& [name, tensor] : g_tensors) copy_into(const_cast<torch::Tensor&>(tensor), *archive.find(name));
  for (auto& [name, tensor] : d_tensors) copy_into(const_cast<torch::Tensor&>(tensor), *archive.find(name));
  g_optimizer_->state().clear();
  d_optimizer_->state().clear();
  for (auto& e : adam) {
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(e.step);
    s->exp_avg(e.exp_avg.clone());
    s->exp_avg_sq(e.exp_avg_sq.clone());
    e.optimizer->state()[e.param.unsafeGetTensorImpl()] = std::move(s);
  }
  iteration_ = iteration;
  set_phase(phase);
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(const std::filesystem::path& path,
                                                  std::shared_ptr<FeatureExtractor> extractor) {
  const auto archive = read_archive(path);
  auto trainer = std::make_unique<Trainer>(config_from_meta(archive.meta), std::move(extractor));
  trainer->restore(archive);
  trainer->last_checkpoint_ = path;
  return trainer;
}

InpaintGenerator load_generator(const TensorArchive& archive, RunConfig* config_out) {
  RunConfig config = config_from_meta(archive.meta);
  config.model = config.generator();
  InpaintGenerator generator(config.model);
  const auto tensors = module_tensors(*generator, kGeneratorPrefix);
  check_layout(archive, tensors);
  for (const auto& [name, tensor] : tensors) {
    copy_into(const_cast<torch::Tensor&>(tensor), *archive.find(name));
  }
  generator->eval();
  if (config_out != nullptr) *config_out = std::move(config);
  return generator;
}

MetricTable evaluate(InpaintGenerator& generator, std::span<const Sample> data) {
  MetricTable table;
  for (const auto& sample : data) {
    const auto out = generate(generator, sample);
    table.add(composite(out.image, sample), sample.image_gt, sample.mask);
  }
  return table;
}

MetricTable evaluate_predictions(std::span<const torch::Tensor> predictions,
                                 std::span<const Sample> data, bool composite_known) {
  if (predictions.size() != data.size()) {
    throw InvalidInput("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                       std::to_string(data.size()) + " samples");
  }
  MetricTable table;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    if (predictions[i].sizes() != s.image_gt.sizes()) {
      throw InvalidInput("evaluate: prediction " + std::to_string(i) + " has the wrong shape");
    }
    const auto pred = predictions[i].to(torch::kFloat32);
    table.add(composite_known ? composite(pred, s) : pred, s.image_gt, s.mask);
  }
  return table;
}

}  // namespace twinfill
