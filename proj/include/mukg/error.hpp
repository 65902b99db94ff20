// Copyright 2026 The mukg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mukg {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Invalid user configuration (unknown key, type mismatch, bad task/model pair).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset content violates a structural precondition.
class DataError : public Error {
 public:
  using Error::Error;
};

// A sampler exhausted its retry budget.
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Non-finite value encountered in a numerical kernel.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Checkpoint / embedding file is unreadable, truncated or has the wrong magic.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mukg
