// Copyright 2026 The QShield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// The trusted core: holds the enclave share, the access policy and the core
// key pairs, and exposes them only through boundary frames (see protocol.hpp).
// Every call is serialized; nothing inside is reachable by reference.

#include <memory>
#include <optional>
#include <string>

#include "qshield/protocol.hpp"

namespace qshield::core {

struct Options {
  // Simulates a modified build: the core reports this digest instead of its
  // genuine measurement.
  std::optional<Digest> measurement_override;
};

class TrustedCore {
 public:
  explicit TrustedCore(Options options = {});
  ~TrustedCore();
  TrustedCore(const TrustedCore&) = delete;
  TrustedCore& operator=(const TrustedCore&) = delete;

  // One boundary call: a request frame in, a response frame out. Errors are
  // returned as error frames, never thrown.
  Bytes call(ByteView request);
  proto::Transport transport();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// A distributed-mode worker implementing exactly one operator.
class WorkerCore {
 public:
  WorkerCore(std::string worker_id, std::string op_name, Options options = {});
  ~WorkerCore();
  WorkerCore(const WorkerCore&) = delete;
  WorkerCore& operator=(const WorkerCore&) = delete;

  Bytes call(ByteView request);
  proto::Transport transport();

  const std::string& worker_id() const;
  const std::string& op_name() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline std::string worker_role(std::string_view op_name) { return "worker/" + std::string(op_name); }

}  // namespace qshield::core
