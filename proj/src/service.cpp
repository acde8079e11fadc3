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

#include "twinfill/service.hpp"

#include <algorithm>
#include <cstdio>

#include <httplib.h>
#include <openssl/evp.h>
#include <torch/torch.h>

#include "twinfill/errors.hpp"
#include "twinfill/image_io.hpp"

namespace twinfill {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw InvalidInput("base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw InvalidInput("invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace {

HttpReply json_reply(int status, const nlohmann::json& body) {
  return {status, "application/json", body.dump()};
}

HttpReply error_reply(int status, const std::string& message) {
  return json_reply(status, {{"error", message}});
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

struct InpaintService::Server {
  httplib::Server http;
};

InpaintService::InpaintService(ServeConfig config)
    : config_(std::move(config)), server_(std::make_unique<Server>()),
      started_(std::chrono::steady_clock::now()) {
  config_.validate();
  auto& http = server_->http;
  const int workers = config_.workers;
  http.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<size_t>(workers)); };
  // PNG of 4 MP RGB is at most ~12 MB raw; leave room for both parts.
  http.set_payload_max_length(static_cast<size_t>(config_.max_pixels) * 8 + (1u << 20));

  const auto origins = config_.cors_list();
  http.set_post_routing_handler([origins](const httplib::Request& req, httplib::Response& res) {
    const auto origin = req.get_header_value("Origin");
    if (origin.empty()) return;
    const bool any = std::find(origins.begin(), origins.end(), "*") != origins.end();
    if (any || std::find(origins.begin(), origins.end(), origin) != origins.end()) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
    }
  });
  http.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });

  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  http.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  http.Post("/v1/inpaint", [this, send](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      send(res, error_reply(400, "expected multipart/form-data with image and mask parts"));
      return;
    }
    if (!req.has_file("image") || !req.has_file("mask")) {
      send(res, error_reply(400, "missing 'image' or 'mask' part"));
      return;
    }
    bool return_edges = true;
    int64_t target_size = 0;
    if (req.has_file("return_edges")) {
      const auto v = req.get_file_value("return_edges").content;
      return_edges = !(v == "false" || v == "0" || v == "no");
    }
    if (req.has_file("target_size")) {
      try {
        target_size = std::stoll(req.get_file_value("target_size").content);
      } catch (const std::exception&) {
        send(res, error_reply(400, "target_size must be an integer"));
        return;
      }
    }
    send(res, inpaint(as_bytes(req.get_file_value("image").content),
                      as_bytes(req.get_file_value("mask").content), return_edges, target_size));
  });
}

InpaintService::~InpaintService() {
  stop();
  if (loader_.joinable()) loader_.join();
}

void InpaintService::set_model(std::shared_ptr<const ModelBundle> bundle) {
  std::lock_guard lock(mutex_);
  bundle_ = std::move(bundle);
  load_error_.clear();
}

void InpaintService::load_model_async(const std::filesystem::path& checkpoint) {
  if (loader_.joinable()) loader_.join();
  loader_ = std::thread([this, checkpoint] {
    try {
      set_model(ModelBundle::load(checkpoint));
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex_);
      load_error_ = e.what();
    }
  });
}

std::shared_ptr<const ModelBundle> InpaintService::model() const {
  std::lock_guard lock(mutex_);
  return bundle_;
}

bool InpaintService::ready() const { return model() != nullptr; }

int InpaintService::start() {
  auto& http = server_->http;
  int port = config_.port;
  if (port == 0) {
    port = http.bind_to_any_port(config_.host);
  } else if (!http.bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  listener_ = std::thread([&http] { http.listen_after_bind(); });
  http.wait_until_ready();
  return port;
}

void InpaintService::run() {
  if (!server_->http.listen(config_.host, config_.port)) {
    throw IoError("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
  }
}

void InpaintService::stop() {
  server_->http.stop();
  if (listener_.joinable()) listener_.join();
}

HttpReply InpaintService::health() const {
  const auto bundle = model();
  const double uptime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  if (!bundle) {
    std::lock_guard lock(mutex_);
    nlohmann::json body = {{"status", load_error_.empty() ? "loading" : "error"},
                           {"uptime_seconds", uptime}};
    if (!load_error_.empty()) body["error"] = load_error_;
    return json_reply(503, body);
  }
  return json_reply(200, {{"status", "ok"},
                          {"model_version", bundle->model_version},
                          {"checkpoint_sha256", bundle->checkpoint_sha256},
                          {"model_size", bundle->config.model.image_size},
                          {"uptime_seconds", uptime}});
}

HttpReply InpaintService::inpaint(std::span<const std::uint8_t> image,
                                  std::span<const std::uint8_t> mask, bool return_edges,
                                  int64_t target_size) const {
  const auto bundle = model();
  if (!bundle) return error_reply(503, "model is still loading");
  const auto started = std::chrono::steady_clock::now();
  cv::Mat rgb, gray;
  try {
    rgb = decode_mat8(image, false);
    gray = decode_mat8(mask, true);
  } catch (const Error& e) {
    return error_reply(400, e.what());
  }
  const int64_t pixels = static_cast<int64_t>(rgb.rows) * rgb.cols;
  if (pixels > config_.max_pixels) {
    return error_reply(413, "image has " + std::to_string(pixels) + " pixels, limit is " +
                                std::to_string(config_.max_pixels));
  }
  if (target_size == 0 && config_.target_size > 0) target_size = config_.target_size;

  InpaintResult result;
  try {
    torch::NoGradGuard no_grad;
    result = twinfill::inpaint(*bundle, rgb, gray, target_size);
  } catch (const InvalidInput& e) {
    return error_reply(400, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
  auto body = result.metadata(*bundle);
  body["composite_png"] = base64_encode(encode_png_mat(result.composite));
  body["output_png"] = base64_encode(encode_png_mat(result.raw_output));
  if (return_edges) body["edge_png"] = base64_encode(encode_png_mat(result.edge));
  body["latency_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return json_reply(200, body);
}

}  // namespace twinfill
