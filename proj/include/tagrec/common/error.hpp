// Copyright 2026 The tagrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TAGREC_COMMON_ERROR_HPP_
#define TAGREC_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace tagrec {

// Base of every error thrown by the library. Callers that only need a
// message can catch this; the subclasses carry a stable `kind()` used for
// CLI exit reporting and HTTP status mapping.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class RangeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "range"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

class NotFoundError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "not_found"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

// Structured output could not be recovered. The raw model text is kept so
// it can be routed into the judge buffer for inspection.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }
  const char* kind() const noexcept override { return "parse"; }

 private:
  std::string raw_;
};

// Retries against the provider were exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "transport"; }
};

// The provider answered but refused or returned no usable content.
class ContentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "content"; }
};

class TrainingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "training"; }
};

}  // namespace tagrec

#endif  // TAGREC_COMMON_ERROR_HPP_
