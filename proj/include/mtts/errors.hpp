// Copyright 2026  mtts authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MTTS_ERRORS_HPP_
#define MTTS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mtts {

// Error taxonomy shared by the library and the CLI. Every failure surfaced
// to a user maps to exactly one category so tools can branch on it.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& msg)
      : std::runtime_error(msg), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

// Bad or contradictory configuration (config files, unknown keys, bad dims).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config-error", msg) {}
};

// Filesystem and format failures: missing files, bad magic, checksum
// mismatches, truncated tensors, version mismatches.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io-error", msg) {}
};

// Violated preconditions on otherwise well-formed inputs: unknown symbols,
// capacity overflow, shape mismatches, unregistered speakers.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg)
      : Error("validation-error", msg) {}
};

// Runtime numerical failures: degenerate attention, non-finite losses.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg)
      : Error("numeric-error", msg) {}
};

}  // namespace mtts

#endif  // MTTS_ERRORS_HPP_
