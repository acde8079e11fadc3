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

// Command-line driver: train, eval, infer, synth-data, serve.
//
// Exit codes: 0 ok, 2 usage or config error, 3 I/O or input error,
// 4 numeric failure, 1 anything else.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "twinfill/config.hpp"
#include "twinfill/datapipe.hpp"
#include "twinfill/errors.hpp"
#include "twinfill/image_io.hpp"
#include "twinfill/inference.hpp"
#include "twinfill/service.hpp"
#include "twinfill/trainer.hpp"

namespace fs = std::filesystem;
using namespace twinfill;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

InpaintService* g_service = nullptr;

fs::path default_checkpoint_dir() {
  if (const char* env = std::getenv("TWINFILL_CHECKPOINT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "checkpoints";
}

RunConfig build_config(const std::string& file, const std::vector<std::string>& overrides) {
  RunConfig config;
  if (!file.empty()) config.merge_file(file);
  config.apply_overrides(overrides);
  return config;
}

std::vector<fs::path> list_paths(const std::string& where) {
  const fs::path p(where);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p)) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  }
  return read_manifest(p);
}

// Synthetic set when data.images is empty, files otherwise.
std::vector<Sample> load_samples(const RunConfig& config) {
  const auto& d = config.data;
  const int size = static_cast<int>(config.model.image_size);
  if (d.images.empty()) {
    return synth_dataset(static_cast<int>(d.synthetic_samples), size, d.mask_seed, d.edge_params());
  }
  const auto images = list_paths(d.images);
  if (d.masks.empty()) {
    return load_dataset(images, SyntheticMaskSource(d.mask_seed), size, d.edge_params());
  }
  return load_dataset(images, MaskFileSource(list_paths(d.masks)), size, d.edge_params());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::string resume;
  int64_t max_iters = -1;
};

int run_train(const TrainArgs& a) {
  const fs::path out = a.out.empty() ? default_checkpoint_dir() : fs::path(a.out);
  std::unique_ptr<Trainer> trainer;
  if (!a.resume.empty()) {
    trainer = Trainer::load_checkpoint(a.resume);
  } else {
    trainer = std::make_unique<Trainer>(build_config(a.config, a.overrides));
  }
  if (a.max_iters >= 0) trainer->set_max_iters(a.max_iters);
  const auto data = load_samples(trainer->config());
  fs::create_directories(out);
  write_text(out / "run.cfg", trainer->config().to_text());
  FitOptions options;
  options.checkpoint_dir = out;
  options.log_path = out / "metrics.jsonl";
  options.on_step = [&](const StepRecord& r) {
    if (r.iteration % trainer->config().train.log_every == 0) {
      std::cout << "iter " << r.iteration << " total " << r.total << " rec " << r.rec
                << " hole_l1 " << r.hole_l1 << "\n";
    }
  };
  trainer->fit(data, options);
  std::cout << "checkpoint " << (out / "final.twf").string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string predictions;
  std::string json_out;
};

int run_eval(const EvalArgs& a) {
  RunConfig config = build_config(a.config, a.overrides);
  MetricTable table;
  if (!a.predictions.empty()) {
    std::vector<torch::Tensor> preds;
    for (const auto& p : list_paths(a.predictions)) preds.push_back(read_image(p));
    if (preds.empty()) throw InvalidInput("no predictions in " + a.predictions);
    if (preds.front().size(1) != preds.front().size(2)) {
      throw InvalidInput("predictions must be square");
    }
    config.model.image_size = preds.front().size(1);
    config.validate();
    const auto data = load_samples(config);
    table = evaluate_predictions(preds, data);
  } else {
    const auto bundle = ModelBundle::load(a.checkpoint);
    config.model = bundle->config.model;
    config.validate();
    const auto data = load_samples(config);
    table = evaluate(bundle->generator, data);
  }
  std::cout << table.to_text();
  if (!a.json_out.empty()) write_text(a.json_out, table.to_json().dump(2) + "\n");
  return 0;
}

struct InferArgs {
  std::string checkpoint;
  std::string image;
  std::string mask;
  std::string out;
  int64_t target_size = 0;
};

int run_infer(const InferArgs& a) {
  const auto bundle = ModelBundle::load(a.checkpoint);
  const auto image = decode_mat8(read_file_bytes(a.image), false);
  const auto mask = decode_mat8(read_file_bytes(a.mask), true);
  const auto result = inpaint(*bundle, image, mask, a.target_size);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_bytes(out / "composite.png", encode_png_mat(result.composite));
  write_bytes(out / "output.png", encode_png_mat(result.raw_output));
  write_bytes(out / "edge.png", encode_png_mat(result.edge));
  write_text(out / "meta.json", result.metadata(*bundle).dump(2) + "\n");
  std::cout << "mask ratio " << result.mask_ratio_percent << "%, wrote " << out.string() << "\n";
  return 0;
}

struct SynthArgs {
  std::string out;
  int n = 64;
  int size = 32;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a) {
  const auto samples = synth_dataset(a.n, a.size, a.seed);
  write_dataset(a.out, samples);
  std::cout << "wrote " << samples.size() << " samples to " << a.out << "\n";
  return 0;
}

struct ServeArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string checkpoint;
};

int run_serve(const ServeArgs& a) {
  const RunConfig config = build_config(a.config, a.overrides);
  InpaintService service(config.serve);
  fs::path checkpoint = a.checkpoint;
  if (checkpoint.empty()) checkpoint = default_checkpoint_dir() / "latest.twf";
  service.load_model_async(checkpoint);
  g_service = &service;
  std::signal(SIGINT, [](int) { if (g_service) g_service->stop(); });
  std::signal(SIGTERM, [](int) { if (g_service) g_service->stop(); });
  std::cout << "serving on " << config.serve.host << ":" << config.serve.port << std::endl;
  service.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  at::set_num_threads(1);
  CLI::App app{"Two-stream texture/structure image inpainting"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train or resume a model");
  train_cmd->add_option("-c,--config", train.config, "key = value config file");
  train_cmd->add_option("--set", train.overrides, "Override, e.g. --set train.seed=3");
  train_cmd->add_option("-o,--out", train.out, "Checkpoint directory");
  train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
  train_cmd->add_option("--max-iters", train.max_iters, "Overrides train.max_iters");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Per-bucket PSNR/SSIM table");
  eval_cmd->add_option("-c,--config", eval.config, "key = value config file");
  eval_cmd->add_option("--set", eval.overrides, "Override, e.g. --set data.images=list.txt");
  auto* eval_ckpt = eval_cmd->add_option("--checkpoint", eval.checkpoint, "Model checkpoint");
  auto* eval_pred = eval_cmd->add_option("--predictions", eval.predictions,
                                         "Directory or manifest of predicted images");
  eval_ckpt->excludes(eval_pred);
  eval_cmd->add_option("--json", eval.json_out, "Write the table as JSON");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Inpaint one image");
  infer_cmd->add_option("--checkpoint", infer.checkpoint)->required();
  infer_cmd->add_option("--image", infer.image)->required();
  infer_cmd->add_option("--mask", infer.mask, "8-bit PNG, 255 = known")->required();
  infer_cmd->add_option("-o,--out", infer.out)->required();
  infer_cmd->add_option("--target-size", infer.target_size, "Network resolution (0: training size)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-data", "Write a procedural texture dataset");
  synth_cmd->add_option("-o,--out", synth.out)->required();
  synth_cmd->add_option("-n,--n", synth.n)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--size", synth.size)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP inference service");
  serve_cmd->add_option("-c,--config", serve.config, "key = value config file");
  serve_cmd->add_option("--set", serve.overrides, "Override, e.g. --set serve.port=9000");
  serve_cmd->add_option("--checkpoint", serve.checkpoint);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) {
      if (eval.checkpoint.empty() && eval.predictions.empty()) {
        throw InvalidConfig("eval needs --checkpoint or --predictions");
      }
      return run_eval(eval);
    }
    if (*infer_cmd) return run_infer(infer);
    if (*synth_cmd) return run_synth(synth);
    if (*serve_cmd) return run_serve(serve);
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
