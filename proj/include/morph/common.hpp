/**
 * Copyright 2026 The Morph Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MORPH_COMMON_HPP
#define MORPH_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace morph {

using NodeId = std::uint32_t;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Layer shapes or feature dimensions disagree between two operands.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A layer's L2 norm is too small for cosine similarity to be meaningful.
class DegenerateLayer : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InsufficientPeers : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyCandidateSet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration validation failure. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string &what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string &field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace morph

#endif  // MORPH_COMMON_HPP
