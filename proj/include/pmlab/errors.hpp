/*
 * Copyright 2026 The pmlab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmlab {

// Invalid world, model, policy or experiment parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad call-site input, e.g. a feature vector of the wrong dimension.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Least-squares fit failed (rank deficient design without ridge).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when one replication of a Monte Carlo loop fails; carries the index.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(std::size_t replication, const std::string& what)
      : std::runtime_error("replication " + std::to_string(replication) +
                           ": " + what),
        replication_(replication) {}

  std::size_t replication() const noexcept { return replication_; }

 private:
  std::size_t replication_;
};

}  // namespace pmlab
