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

#include <stdexcept>
#include <string>
#include <string_view>

namespace qshield {

// Every failure surfaced by the library carries one of these codes. The
// trusted boundary transports the code (not the C++ type) across frames, so
// the numbering is part of the wire format.
enum class ErrorCode : unsigned char {
  kArgument = 1,
  kConfiguration = 2,
  kContext = 3,
  kAuthorization = 4,
  kIntegrity = 5,
  kSchema = 6,
  kPredicate = 7,
  kType = 8,
  kEmptyAggregate = 9,
  kSyntax = 10,
  kSemantic = 11,
  kState = 12,
  kEndurance = 13,
  kReplay = 14,
  kToken = 15,
  kChannel = 16,
  kNotFound = 17,
  kAttestation = 18,
  kProof = 19,
  kFormat = 20,
  kInternal = 21,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qshield
