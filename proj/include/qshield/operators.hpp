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

// Plan-level operator application over state payloads. The trusted core
// runs one of these per invocation; evaluate() runs a whole plan in the
// clear and is what tests and benchmarks compare against.

#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qshield/document.hpp"
#include "qshield/query.hpp"

namespace qshield::ops {

// Decrypted authorized collections as recovered by unlock, sorted by cid.
struct Dataset {
  std::vector<data::Collection> collections;

  const data::Collection* find(const Digest& cid) const;
  bool operator==(const Dataset&) const = default;
};

using Payload = std::variant<Dataset, data::Collection, data::Value>;

// {"dataset":[...]} | {"collection":{...}} | {"value":v}
nlohmann::json payload_to_json(const Payload& p);
Payload payload_from_json(const nlohmann::json& j);
std::string canonical(const Payload& p);
Digest payload_digest(const Payload& p);

// Arity or input-kind violations throw kState; malformed params kFormat;
// operator failures propagate from the document model.
Payload apply(std::string_view op_name, const nlohmann::json& params,
              const std::vector<const Payload*>& inputs);

Payload evaluate(const query::QueryPlan& plan, const Dataset& data);

}  // namespace qshield::ops
