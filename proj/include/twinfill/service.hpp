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

#ifndef TWINFILL_SERVICE_HPP_
#define TWINFILL_SERVICE_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "twinfill/config.hpp"
#include "twinfill/inference.hpp"

namespace twinfill {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// HTTP front end:
//   POST /v1/inpaint  multipart: image, mask (PNG/JPEG), optional
//                     return_edges (true|false), target_size (int)
//   GET  /v1/health
// Replies are JSON; images travel as base64 PNG fields.
class InpaintService {
 public:
  explicit InpaintService(ServeConfig config);
  ~InpaintService();

  InpaintService(const InpaintService&) = delete;
  InpaintService& operator=(const InpaintService&) = delete;

  void set_model(std::shared_ptr<const ModelBundle> bundle);
  // Loads on a worker thread; /v1/health answers 503 until it finishes.
  void load_model_async(const std::filesystem::path& checkpoint);
  bool ready() const;

  // Binds (port 0 picks a free one) and serves on a background thread.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();

  HttpReply inpaint(std::span<const std::uint8_t> image, std::span<const std::uint8_t> mask,
                    bool return_edges, int64_t target_size) const;
  HttpReply health() const;

  const ServeConfig& config() const { return config_; }

 private:
  struct Server;

  std::shared_ptr<const ModelBundle> model() const;

  ServeConfig config_;
  std::unique_ptr<Server> server_;
  mutable std::mutex mutex_;
  std::shared_ptr<const ModelBundle> bundle_;
  std::string load_error_;
  std::thread loader_;
  std::thread listener_;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace twinfill

#endif  // TWINFILL_SERVICE_HPP_
