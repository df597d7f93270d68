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

#include "qshield/host.hpp"

#include <fstream>

#include "qshield/document.hpp"
#include "qshield/error.hpp"

namespace qshield::host {

namespace fs = std::filesystem;
using proto::Frame;
using proto::Op;

namespace {

constexpr std::string_view kChunkMagic = "QSCF1";

Frame call_verb(const proto::Transport& t, Verb verb, json args = json::object(), std::vector<Bytes> blobs = {}) {
  Frame req{static_cast<std::uint8_t>(verb), std::move(args), std::move(blobs)};
  Frame reply = Frame::decode(t(req.encode()));
  reply.check();
  return reply;
}

std::string chunk_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chunk-%05zu.bin", index);
  return buf;
}

void write_file(const fs::path& path, ByteView data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorCode::kInternal, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFormat, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

// ---- store ------------------------------------------------------------------

EncryptedStore::EncryptedStore(std::optional<fs::path> root, std::size_t chunk_size)
    : root_(std::move(root)), chunk_size_(chunk_size) {
  if (chunk_size_ == 0) fail(ErrorCode::kArgument, "chunk size must be >= 1");
  if (root_) {
    fs::create_directories(*root_);
    load();
  }
}

void EncryptedStore::create(query::CollectionInfo info) {
  std::sort(info.schema.begin(), info.schema.end());
  std::lock_guard lock(mu_);
  auto it = entries_.find(info.cid);
  if (it != entries_.end()) {
    const auto& have = it->second.info;
    if (have.name == info.name && have.schema == info.schema) return;
    fail(ErrorCode::kArgument, "collection id already in use");
  }
  for (const auto& [_, e] : entries_) {
    if (e.info.name == info.name) fail(ErrorCode::kArgument, "collection name '" + info.name + "' already in use");
  }
  Entry& e = entries_[info.cid];
  e.info = std::move(info);
  flush(e, 0);
}

bool EncryptedStore::store(const Digest& cid, const Digest& did, Bytes ct) {
  std::vector<StoredDoc> one;
  one.push_back({did, std::move(ct)});
  return store_batch(cid, std::move(one)) == 1;
}

std::size_t EncryptedStore::store_batch(const Digest& cid, std::vector<StoredDoc> docs) {
  for (const auto& d : docs) {
    if (hash(d.ct) != d.did) fail(ErrorCode::kIntegrity, "document id " + d.did.short_hex() + " is not H(ct)");
  }
  std::lock_guard lock(mu_);
  auto it = entries_.find(cid);
  if (it == entries_.end()) fail(ErrorCode::kNotFound, "unknown collection " + cid.short_hex());
  Entry& e = it->second;
  const std::size_t first_new = e.docs.size();
  for (auto& d : docs) {
    if (e.by_did.contains(d.did)) continue;
    e.by_did.emplace(d.did, e.docs.size());
    e.docs.push_back(std::move(d));
  }
  std::size_t added = e.docs.size() - first_new;
  if (added > 0) flush(e, first_new);
  return added;
}

std::vector<StoredDoc> EncryptedStore::documents(const Digest& cid) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(cid);
  if (it == entries_.end()) fail(ErrorCode::kNotFound, "unknown collection " + cid.short_hex());
  return it->second.docs;
}

std::optional<query::CollectionInfo> EncryptedStore::find(const Digest& cid) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(cid);
  if (it == entries_.end()) return std::nullopt;
  return it->second.info;
}

std::optional<query::CollectionInfo> EncryptedStore::find(std::string_view name) const {
  std::lock_guard lock(mu_);
  for (const auto& [_, e] : entries_) {
    if (e.info.name == name) return e.info;
  }
  return std::nullopt;
}

query::Catalog EncryptedStore::catalog() const {
  std::lock_guard lock(mu_);
  query::Catalog c;
  for (const auto& [_, e] : entries_) c.add(e.info);
  return c;
}

void EncryptedStore::flush(const Entry& e, std::size_t first_new) const {
  if (!root_) return;
  fs::path dir = *root_ / e.info.cid.hex();
  fs::create_directories(dir);
  std::vector<std::size_t> sizes = data::chunk_sizes(e.docs.size(), chunk_size_);
  for (std::size_t f = first_new / chunk_size_; f < sizes.size(); ++f) {
    Bytes out(kChunkMagic.begin(), kChunkMagic.end());
    put_u32(out, static_cast<std::uint32_t>(sizes[f]));
    for (std::size_t i = f * chunk_size_; i < f * chunk_size_ + sizes[f]; ++i) {
      put_u32(out, static_cast<std::uint32_t>(e.docs[i].ct.size()));
      out.insert(out.end(), e.docs[i].ct.begin(), e.docs[i].ct.end());
    }
    write_file(dir / chunk_file_name(f + 1), out);
  }
  json dids = json::array();
  for (const auto& d : e.docs) dids.push_back(d.did.hex());
  json manifest = {{"header",
                    {{"cid", e.info.cid.hex()},
                     {"name", e.info.name},
                     {"schema", e.info.schema},
                     {"count", e.docs.size()},
                     {"chunk_size", chunk_size_},
                     {"files", sizes.size()}}},
                   {"dids", std::move(dids)}};
  write_file(dir / "manifest.json", as_bytes(manifest.dump(2)));
}

void EncryptedStore::load() {
  for (const auto& dir : fs::directory_iterator(*root_)) {
    if (!dir.is_directory() || !fs::exists(dir.path() / "manifest.json")) continue;
    Bytes raw = read_file(dir.path() / "manifest.json");
    json m = json::parse(raw.begin(), raw.end(), nullptr, false);
    if (m.is_discarded()) fail(ErrorCode::kFormat, "corrupt manifest in " + dir.path().string());
    try {
      const json& h = m.at("header");
      Entry e;
      e.info = {h.at("name").get<std::string>(), Digest::from_hex(h.at("cid").get<std::string>()),
                h.at("schema").get<data::Schema>()};
      const std::size_t s = h.at("chunk_size").get<std::size_t>();
      const std::size_t count = h.at("count").get<std::size_t>();
      std::vector<std::size_t> sizes = data::chunk_sizes(count, s);
      if (sizes.size() != h.at("files").get<std::size_t>()) fail(ErrorCode::kFormat, "manifest file count mismatch");
      for (std::size_t f = 0; f < sizes.size(); ++f) {
        Bytes file = read_file(dir.path() / chunk_file_name(f + 1));
        ByteReader in(file);
        in.expect_magic(kChunkMagic);
        if (in.u32() != sizes[f]) fail(ErrorCode::kFormat, "chunk size does not match manifest");
        for (std::size_t i = 0; i < sizes[f]; ++i) {
          std::uint32_t n = in.u32();
          Bytes ct = in.take_bytes(n);
          Digest did = hash(ct);
          e.by_did.emplace(did, e.docs.size());
          e.docs.push_back({did, std::move(ct)});
        }
        in.expect_done();
      }
      const json& dids = m.at("dids");
      if (dids.size() != e.docs.size()) fail(ErrorCode::kFormat, "manifest lists a different number of documents");
      for (std::size_t i = 0; i < e.docs.size(); ++i) {
        if (Digest::from_hex(dids[i].get<std::string>()) != e.docs[i].did) {
          fail(ErrorCode::kIntegrity, "stored ciphertext does not match its document id");
        }
      }
      Digest cid = e.info.cid;
      entries_.emplace(cid, std::move(e));
      // Files written with another chunk size are rewritten with ours.
      if (s != chunk_size_) flush(entries_.at(cid), 0);
    } catch (const json::exception&) {
      fail(ErrorCode::kFormat, "malformed manifest in " + dir.path().string());
    }
  }
}

// ---- service ----------------------------------------------------------------

HostService::HostService(proto::Transport core, EncryptedStore& store) : core_(std::move(core)), store_(store) {}

const client::CoreKeys& HostService::start(unsigned lambda) {
  keys_ = client::init_core(core_, lambda);
  return *keys_;
}

const client::CoreKeys& HostService::keys() const {
  if (!keys_) fail(ErrorCode::kState, "service not started");
  return *keys_;
}

void HostService::attach_workers(std::vector<WorkerSpec> workers) {
  std::lock_guard lock(query_mu_);
  workers_.clear();
  distributed_ = false;
  for (const auto& w : workers) {
    Frame challenge = proto::call(core_, Op::kWorkerChallenge, {{"worker_id", w.worker_id}});
    try {
      proto::call(w.transport, Op::kInit);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kState) throw;
    }
    Frame quote = proto::call(w.transport, Op::kAttest,
                              {{"nonce", challenge.args.at("nonce")}, {"party_kx_pub", challenge.args.at("party_kx_pub")}});
    Frame admitted = proto::call(core_, Op::kAdmitWorker,
                                 {{"worker_id", w.worker_id}, {"op_name", w.op_name}, {"quote", quote.args.at("quote")}},
                                 {quote.blobs.at(0)});
    proto::call(w.transport, Op::kInstallKey, {{"channel_id", admitted.args.at("channel_id")}},
                {admitted.blobs.at(0)});
  }
  workers_ = std::move(workers);
  distributed_ = !workers_.empty();
}

void HostService::set_distributed(bool on) {
  if (on && workers_.empty()) fail(ErrorCode::kState, "no attested workers");
  distributed_ = on;
}

query::QueryPlan HostService::compile(const std::string& q) const {
  query::Ast ast = query::parse(q);
  for (const std::string* name : {&ast.from, ast.join ? &ast.join->collection : nullptr}) {
    if (name != nullptr && !store_.find(*name)) fail(ErrorCode::kNotFound, "no collection named '" + *name + "'");
  }
  return query::plan(ast, store_.catalog());
}

std::uint64_t HostService::unlock(const query::QueryPlan& plan, const Bytes& token) {
  json headers = json::array();
  std::vector<Bytes> blobs{token};
  for (const auto& n : plan.nodes) {
    if (!n.is_source()) continue;
    Digest cid = Digest::from_hex(n.params.at("cid").get<std::string>());
    auto info = store_.find(cid);
    if (!info) fail(ErrorCode::kNotFound, "unknown collection " + cid.short_hex());
    std::vector<StoredDoc> docs = store_.documents(cid);
    headers.push_back({{"cid", cid.hex()}, {"name", info->name}, {"schema", info->schema}, {"count", docs.size()}});
    for (auto& d : docs) blobs.push_back(std::move(d.ct));
  }
  Frame reply = proto::call(core_, Op::kUnlock, {{"collections", std::move(headers)}}, std::move(blobs));
  return reply.args.at("s_id").get<std::uint64_t>();
}

std::uint64_t HostService::invoke(const Invocation& inv, const std::vector<std::uint64_t>& inputs) {
  if (!distributed_) {
    Frame reply = proto::call(core_, Op::kExecOperator,
                              {{"f_name", inv.f_name}, {"f_params", inv.f_params}, {"inputs", inputs}});
    return reply.args.at("s_id").get<std::uint64_t>();
  }
  std::vector<const WorkerSpec*> able;
  for (const auto& w : workers_) {
    if (w.op_name == inv.f_name) able.push_back(&w);
  }
  if (able.empty()) fail(ErrorCode::kState, "no worker implements " + inv.f_name);
  const WorkerSpec& w = *able[rotation_[inv.f_name]++ % able.size()];
  Frame job = proto::call(core_, Op::kDispatch,
                          {{"worker_id", w.worker_id}, {"f_name", inv.f_name}, {"f_params", inv.f_params},
                           {"inputs", inputs}});
  Frame result = proto::call(w.transport, Op::kRunJob, json::object(), {job.blobs.at(0)});
  Frame rec = proto::call(core_, Op::kRecord, {{"job_id", job.args.at("job_id")}}, {result.blobs.at(0)});
  placement_.push_back({inv.node, w.worker_id, w.node_id});
  return rec.args.at("s_id").get<std::uint64_t>();
}

void HostService::abort_session() noexcept {
  try {
    proto::call(core_, Op::kAbort);
  } catch (...) {
  }
}

proto::Envelope HostService::run(const query::QueryPlan& plan, const Bytes& token,
                                 std::vector<Invocation> invocations, std::optional<std::uint64_t> final_state) {
  std::lock_guard lock(query_mu_);
  placement_.clear();
  rotation_.clear();
  unlock(plan, token);
  try {
    std::map<int, std::uint64_t> done;
    std::uint64_t last = 0;
    for (const auto& inv : invocations) {
      std::vector<std::uint64_t> inputs;
      if (inv.raw_inputs) {
        inputs = *inv.raw_inputs;
      } else {
        for (int in : inv.inputs) {
          auto it = done.find(in);
          // Inputs that have not been produced (sources, or producers moved
          // later by a script) are fed the unlocked data.
          inputs.push_back(it == done.end() ? 0 : it->second);
        }
      }
      last = invoke(inv, inputs);
      done[inv.node] = last;
    }
    std::uint64_t target = final_state ? *final_state : (done.contains(plan.sink) ? done.at(plan.sink) : last);
    Frame reply = proto::call(core_, Op::kFinalize, {{"s_id", target}});
    return proto::Envelope::parse(reply.blobs.at(0));
  } catch (...) {
    abort_session();
    throw;
  }
}

proto::Envelope HostService::handle_query(const std::string& q, const Bytes& token) {
  return handle_query_adversarial(q, token, json::object());
}

proto::Envelope HostService::handle_query_adversarial(const std::string& q, const Bytes& token, const json& script) {
  query::QueryPlan plan = compile(q);
  std::vector<Invocation> invs;
  for (int id : plan.schedule()) {
    const auto& n = plan.node(id);
    invs.push_back({id, n.op_name, n.params, n.inputs, std::nullopt});
  }
  std::optional<std::uint64_t> final_state;
  int next_node = static_cast<int>(plan.nodes.size());

  auto at = [&](const json& m, const char* key) -> std::size_t {
    std::size_t i = m.at(key).get<std::size_t>();
    if (i >= invs.size()) fail(ErrorCode::kArgument, std::string("script index '") + key + "' out of range");
    return i;
  };
  for (const auto& m : script.value("mutations", json::array())) {
    std::string op = m.at("op").get<std::string>();
    if (op == "reorder") {
      std::swap(invs[at(m, "a")], invs[at(m, "b")]);
    } else if (op == "swap_params") {
      std::swap(invs[at(m, "a")].f_params, invs[at(m, "b")].f_params);
    } else if (op == "substitute") {
      invs[at(m, "index")].f_params = m.at("params");
    } else if (op == "insert") {
      std::size_t pos = std::min(m.at("index").get<std::size_t>(), invs.size());
      Invocation inv{next_node++, m.at("f_name").get<std::string>(), m.at("f_params"),
                     m.value("inputs", std::vector<int>{}), std::nullopt};
      invs.insert(invs.begin() + static_cast<std::ptrdiff_t>(pos), std::move(inv));
    } else if (op == "duplicate") {
      std::size_t i = at(m, "index");
      Invocation copy = invs[i];
      copy.node = next_node++;
      invs.insert(invs.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(copy));
    } else if (op == "drop") {
      std::size_t i = at(m, "index");
      Invocation gone = invs[i];
      invs.erase(invs.begin() + static_cast<std::ptrdiff_t>(i));
      int replacement = gone.inputs.empty() ? 0 : gone.inputs[0];
      for (auto& inv : invs) {
        std::replace(inv.inputs.begin(), inv.inputs.end(), gone.node, replacement);
      }
      if (plan.sink == gone.node) plan.sink = replacement;
    } else if (op == "raw_inputs") {
      invs[at(m, "index")].raw_inputs = m.at("s_ids").get<std::vector<std::uint64_t>>();
    } else if (op == "finalize") {
      final_state = m.at("s_id").get<std::uint64_t>();
    } else {
      fail(ErrorCode::kArgument, "unknown script mutation '" + op + "'");
    }
  }
  return run(plan, token, std::move(invs), final_state);
}

proto::Transport HostService::transport() {
  return [this](ByteView req) { return handle(req); };
}

Bytes HostService::handle(ByteView request) {
  try {
    Frame req = Frame::decode(request);
    auto verb = static_cast<Verb>(req.code);
    if (verb == Verb::kAttest || verb == Verb::kPolicyUpdate) {
      if (req.blobs.size() != 1 || req.blobs[0].size() < 5) fail(ErrorCode::kFormat, "relay needs one core frame");
      auto inner = static_cast<Op>(req.blobs[0][4]);
      bool allowed = verb == Verb::kAttest ? (inner == Op::kAttest || inner == Op::kStatus)
                                           : (inner == Op::kProvision || inner == Op::kUpdatePolicy);
      if (!allowed) fail(ErrorCode::kArgument, "opcode not relayed by this verb");
      return core_(req.blobs[0]);
    }
    return serve(req).encode();
  } catch (const Error& e) {
    return Frame::error(e).encode();
  } catch (const json::exception&) {
    return Frame::error(Error(ErrorCode::kFormat, "malformed request arguments")).encode();
  } catch (const std::exception& e) {
    return Frame::error(Error(ErrorCode::kInternal, e.what())).encode();
  }
}

Frame HostService::serve(const Frame& req) {
  switch (static_cast<Verb>(req.code)) {
    case Verb::kInfo: {
      Frame status = proto::call(core_, Op::kStatus);
      json out = keys().to_json();
      out["replay_floor"] = status.args.at("replay_floor");
      out["distributed"] = distributed_;
      out["workers"] = workers_.size();
      return Frame::ok(std::move(out));
    }
    case Verb::kCatalog: return Frame::ok({{"catalog", store_.catalog().to_json()}});
    case Verb::kCreateCollection: {
      store_.create({req.args.at("name").get<std::string>(), Digest::from_hex(req.args.at("cid").get<std::string>()),
                     req.args.at("schema").get<data::Schema>()});
      return Frame::ok();
    }
    case Verb::kUpload: {
      const json& dids = req.args.at("dids");
      if (dids.size() != req.blobs.size()) fail(ErrorCode::kFormat, "one document id per ciphertext");
      std::vector<StoredDoc> docs;
      for (std::size_t i = 0; i < req.blobs.size(); ++i) {
        docs.push_back({Digest::from_hex(dids[i].get<std::string>()), req.blobs[i]});
      }
      std::size_t added = store_.store_batch(Digest::from_hex(req.args.at("cid").get<std::string>()), std::move(docs));
      return Frame::ok({{"stored", added}});
    }
    case Verb::kQuery: {
      if (req.blobs.size() != 1) fail(ErrorCode::kFormat, "query needs a token");
      proto::Envelope env = handle_query(req.args.at("q").get<std::string>(), req.blobs[0]);
      return Frame::ok(json::object(), {env.serialize()});
    }
    case Verb::kAttack: {
      if (req.blobs.size() != 1) fail(ErrorCode::kFormat, "query needs a token");
      proto::Envelope env =
          handle_query_adversarial(req.args.at("q").get<std::string>(), req.blobs[0], req.args.at("script"));
      return Frame::ok(json::object(), {env.serialize()});
    }
    default: break;
  }
  fail(ErrorCode::kArgument, "unknown service verb " + std::to_string(req.code));
}

// ---- client stub ------------------------------------------------------------

json ServiceClient::info() const { return call_verb(t_, Verb::kInfo).args; }

client::CoreKeys ServiceClient::keys() const { return client::CoreKeys::from_json(info()); }

std::int64_t ServiceClient::replay_floor() const { return info().at("replay_floor").get<std::int64_t>(); }

query::Catalog ServiceClient::catalog() const {
  return query::Catalog::from_json(call_verb(t_, Verb::kCatalog).args.at("catalog"));
}

void ServiceClient::create_collection(const client::CollectionMeta& meta) const {
  call_verb(t_, Verb::kCreateCollection, {{"cid", meta.cid.hex()}, {"name", meta.name}, {"schema", meta.schema}});
}

std::size_t ServiceClient::upload(const Digest& cid, const std::vector<client::EncryptedDocument>& docs) const {
  json dids = json::array();
  std::vector<Bytes> blobs;
  for (const auto& d : docs) {
    if (d.cid != cid) fail(ErrorCode::kArgument, "document belongs to another collection");
    dids.push_back(d.did.hex());
    blobs.push_back(d.ct);
  }
  Frame reply = call_verb(t_, Verb::kUpload, {{"cid", cid.hex()}, {"dids", std::move(dids)}}, std::move(blobs));
  return reply.args.at("stored").get<std::size_t>();
}

proto::Envelope ServiceClient::query(const std::string& q, const Bytes& token) const {
  Frame reply = call_verb(t_, Verb::kQuery, {{"q", q}}, {token});
  return proto::Envelope::parse(reply.blobs.at(0));
}

proto::Envelope ServiceClient::attack(const std::string& q, const Bytes& token, const json& script) const {
  Frame reply = call_verb(t_, Verb::kAttack, {{"q", q}, {"script", script}}, {token});
  return proto::Envelope::parse(reply.blobs.at(0));
}

proto::Transport ServiceClient::owner_relay() const {
  proto::Transport t = t_;
  return [t](ByteView frame) -> Bytes {
    if (frame.size() < 5) fail(ErrorCode::kFormat, "short frame");
    auto op = static_cast<Op>(frame[4]);
    Verb verb = (op == Op::kAttest || op == Op::kStatus) ? Verb::kAttest : Verb::kPolicyUpdate;
    Frame req{static_cast<std::uint8_t>(verb), json::object(), {Bytes(frame.begin(), frame.end())}};
    return t(req.encode());
  };
}

}  // namespace qshield::host
