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

#include "qshield/operators.hpp"

#include <algorithm>
#include <map>

#include "qshield/error.hpp"

namespace qshield::ops {

using nlohmann::json;

const data::Collection* Dataset::find(const Digest& cid) const {
  for (const auto& c : collections) {
    if (c.cid == cid) return &c;
  }
  return nullptr;
}

json payload_to_json(const Payload& p) {
  if (const auto* d = std::get_if<Dataset>(&p)) {
    json list = json::array();
    for (const auto& c : d->collections) list.push_back(c.to_json());
    return {{"dataset", std::move(list)}};
  }
  if (const auto* c = std::get_if<data::Collection>(&p)) return {{"collection", c->to_json()}};
  return {{"value", data::value_to_json(std::get<data::Value>(p))}};
}

Payload payload_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) fail(ErrorCode::kFormat, "malformed state payload");
  if (j.contains("dataset")) {
    Dataset d;
    for (const auto& c : j.at("dataset")) d.collections.push_back(data::Collection::from_json(c));
    return d;
  }
  if (j.contains("collection")) return data::Collection::from_json(j.at("collection"));
  if (j.contains("value")) return data::value_from_json(j.at("value"));
  fail(ErrorCode::kFormat, "malformed state payload");
}

std::string canonical(const Payload& p) { return payload_to_json(p).dump(); }

Digest payload_digest(const Payload& p) { return hash(canonical(p)); }

namespace {

const data::Collection& input_collection(const json& params, const Payload& in) {
  if (const auto* c = std::get_if<data::Collection>(&in)) return *c;
  if (const auto* d = std::get_if<Dataset>(&in)) {
    if (!params.contains("from")) fail(ErrorCode::kState, "operator on unlocked data needs a source collection");
    const data::Collection* c = d->find(Digest::from_hex(params.at("from").get<std::string>()));
    if (c == nullptr) fail(ErrorCode::kState, "source collection was not unlocked");
    return *c;
  }
  fail(ErrorCode::kState, "operator input is a scalar");
}

void expect_arity(std::string_view op, const std::vector<const Payload*>& inputs, std::size_t n) {
  if (inputs.size() != n) {
    fail(ErrorCode::kState, std::string(op) + " takes " + std::to_string(n) + " input(s), got " +
                                std::to_string(inputs.size()));
  }
}

}  // namespace

Payload apply(std::string_view op, const json& params, const std::vector<const Payload*>& inputs) {
  try {
    if (op == query::kProjection) {
      expect_arity(op, inputs, 1);
      return data::project(input_collection(params, *inputs[0]),
                           params.at("attrs").get<std::vector<std::string>>());
    }
    if (op == query::kSelection) {
      expect_arity(op, inputs, 1);
      return data::select(input_collection(params, *inputs[0]),
                          data::Predicate::from_json(params.at("predicate")));
    }
    if (op == query::kAggregation) {
      expect_arity(op, inputs, 1);
      return data::aggregate(input_collection(params, *inputs[0]),
                             data::aggregate_from_name(params.at("fn").get<std::string>()),
                             params.at("attr").get<std::string>());
    }
    if (op == query::kJoin) {
      expect_arity(op, inputs, 2);
      const auto* left = std::get_if<data::Collection>(inputs[0]);
      const auto* right = std::get_if<data::Collection>(inputs[1]);
      if (left == nullptr || right == nullptr) fail(ErrorCode::kState, "join inputs must be collections");
      return data::join(*left, *right, data::Predicate::from_json(params.at("predicate")));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed operator parameters: ") + e.what());
  }
  fail(ErrorCode::kState, "unknown operator '" + std::string(op) + "'");
}

Payload evaluate(const query::QueryPlan& plan, const Dataset& data) {
  const Payload root = data;
  std::map<int, Payload> results;
  for (int id : plan.schedule()) {
    const auto& node = plan.node(id);
    std::vector<const Payload*> inputs;
    for (int in : node.inputs) inputs.push_back(plan.node(in).is_source() ? &root : &results.at(in));
    results.emplace(id, apply(node.op_name, node.params, inputs));
  }
  return results.at(plan.sink);
}

}  // namespace qshield::ops
