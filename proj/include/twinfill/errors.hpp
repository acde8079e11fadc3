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

#ifndef TWINFILL_ERRORS_HPP_
#define TWINFILL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace twinfill {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape, channel count or value-domain violations.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Bad configuration values or unknown config keys.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// Unreadable or unwritable files, undecodable images.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or version-mismatched archives.
class CheckpointError : public IoError {
 public:
  using IoError::IoError;
};

// Non-finite losses during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace twinfill

#endif  // TWINFILL_ERRORS_HPP_
