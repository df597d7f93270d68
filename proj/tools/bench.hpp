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

// Timing sweeps behind `qshield bench`: operator invocations through the
// trusted core boundary, and sharing::decrypt over a single ciphertext.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace qshield::bench {

struct OperatorTiming {
  std::string op;      // projection | selection | aggregation | join
  std::size_t n = 0;   // documents per input collection
  double median_ms = 0;
  double min_ms = 0;
};

inline const std::vector<std::string> kAllOperators = {"projection", "selection", "aggregation", "join"};

// One core per size holding two collections of n documents; each listed
// operator is invoked `reps` times inside a single session.
std::vector<OperatorTiming> operators(const std::vector<std::size_t>& sizes, int reps, std::uint32_t seed = 1,
                                      const std::vector<std::string>& ops = kAllOperators);

struct DecryptTiming {
  std::size_t bytes = 0;
  double median_ms = 0;
  double min_ms = 0;
};

std::vector<DecryptTiming> decrypt(const std::vector<std::size_t>& sizes, int reps);

void write_csv(std::ostream& out, const std::vector<OperatorTiming>& rows);
void write_csv(std::ostream& out, const std::vector<DecryptTiming>& rows);

}  // namespace qshield::bench
