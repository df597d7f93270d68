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

#include "qshield/core.hpp"

#include <map>
#include <mutex>
#include <set>

#include "qshield/operators.hpp"
#include "qshield/policy.hpp"
#include "qshield/query.hpp"

namespace qshield::core {

using nlohmann::json;
using proto::Frame;
using proto::Op;

namespace {

constexpr std::string_view kProvisionPurpose = "qshield/provision/v1";
constexpr std::string_view kPolicyPurpose = "qshield/policy/v1";
constexpr std::string_view kAckPurpose = "qshield/ack/v1";
constexpr std::string_view kWorkerKeyPurpose = "qshield/worker-key/v1";
constexpr std::string_view kJobPurpose = "qshield/job/v1";
constexpr std::string_view kJobResultPurpose = "qshield/job-result/v1";

bool is_operator(std::string_view f) {
  return f == query::kProjection || f == query::kSelection || f == query::kAggregation || f == query::kJoin;
}

// Runs a handler and turns every failure into an error frame. Messages of
// non-domain exceptions are dropped: they may quote payload bytes.
template <typename Fn>
Bytes guarded(Fn&& fn) {
  try {
    return fn().encode();
  } catch (const Error& e) {
    return Frame::error(e).encode();
  } catch (const json::exception&) {
    return Frame::error(Error(ErrorCode::kFormat, "malformed request arguments")).encode();
  } catch (const std::exception&) {
    return Frame::error(Error(ErrorCode::kInternal, "internal error")).encode();
  }
}

struct Channel {
  crypto::SymmetricKey key;
};

struct State {
  proto::StateRecord record;
  std::optional<ops::Payload> payload;
};

struct Job {
  std::string worker_id;
  std::string f_name;
  json f_params;
  std::vector<std::uint64_t> inputs;
};

struct Session {
  std::vector<State> states;
  std::uint64_t budget = 0;
  crypto::SymmetricKey user_key;
  bool finalized = false;
  std::map<std::string, Job> outstanding;

  bool active() const { return !finalized; }
};

struct PendingWorker {
  Bytes nonce;
  crypto::KxKeyPair kx;
};

struct AdmittedWorker {
  std::string op_name;
};

std::string fresh_id() { return to_hex(random_bytes(16)); }

}  // namespace

struct TrustedCore::Impl {
  std::mutex mu;
  Digest measurement;

  bool initialized = false;
  crypto::PkeKeyPair pke;
  crypto::SigningKeyPair sig;
  std::map<std::string, Channel> channels;
  std::optional<std::string> owner_channel;

  std::optional<sharing::EnclaveShare> sk_a;
  Policy pol;
  std::uint64_t last_seq = 0;
  Digest last_request;
  Bytes last_ack;

  std::int64_t replay_floor = -1;
  std::optional<Session> session;

  std::optional<crypto::SymmetricKey> worker_key;
  std::map<std::string, PendingWorker> pending_workers;
  std::map<std::string, AdmittedWorker> workers;

  explicit Impl(const Options& o) : measurement(o.measurement_override.value_or(proto::measurement("core"))) {}

  Frame dispatch(const Frame& req) {
    auto op = static_cast<Op>(req.code);
    if (op != Op::kInit && op != Op::kStatus && !initialized) fail(ErrorCode::kState, "core not initialized");
    switch (op) {
      case Op::kInit: return init(req);
      case Op::kAttest: return attest(req);
      case Op::kStatus: return status();
      case Op::kProvision: return provision(req);
      case Op::kUpdatePolicy: return update_policy(req);
      case Op::kUnlock: return unlock(req);
      case Op::kExecOperator: return exec_operator(req);
      case Op::kFinalize: return finalize(req);
      case Op::kAbort: return abort_session();
      case Op::kWorkerChallenge: return worker_challenge(req);
      case Op::kAdmitWorker: return admit_worker(req);
      case Op::kDispatch: return dispatch_job(req);
      case Op::kRecord: return record_job(req);
      default: break;
    }
    fail(ErrorCode::kArgument, "unknown opcode " + std::to_string(req.code));
  }

  // ---- setup ----------------------------------------------------------------

  Frame init(const Frame& req) {
    if (initialized) fail(ErrorCode::kState, "core already initialized");
    unsigned lambda = req.args.value("lambda", 128u);
    if (lambda == 0 || lambda > sharing::kMaxSecurityBits) {
      fail(ErrorCode::kConfiguration, "unsupported security level " + std::to_string(lambda));
    }
    pke = crypto::PkeKeyPair::generate();
    sig = crypto::SigningKeyPair::generate();
    initialized = true;
    return Frame::ok({{"pke_pub", to_hex(pke.public_key)},
                      {"sig_pub", to_hex(sig.public_key)},
                      {"measurement", measurement.hex()}});
  }

  Frame status() const {
    json s = {{"initialized", initialized},
              {"provisioned", sk_a.has_value()},
              {"replay_floor", replay_floor},
              {"measurement", measurement.hex()},
              {"workers", workers.size()}};
    if (initialized) {
      s["pke_pub"] = to_hex(pke.public_key);
      s["sig_pub"] = to_hex(sig.public_key);
    }
    if (session) {
      s["session"] = {{"finalized", session->finalized},
                      {"budget", session->budget},
                      {"states", session->states.size()}};
    }
    return Frame::ok(std::move(s));
  }

  Frame attest(const Frame& req) {
    Bytes nonce = from_hex(req.args.at("nonce").get<std::string>());
    Bytes party = from_hex(req.args.at("party_kx_pub").get<std::string>());
    if (nonce.size() < 16) fail(ErrorCode::kAttestation, "attestation nonce too short");
    crypto::KxKeyPair kx = crypto::KxKeyPair::generate();
    Channel ch{crypto::kx_responder_key(kx, party)};
    proto::Quote q{"core", measurement, fresh_id(), kx.public_key, party, nonce, sig.public_key};
    std::string text = q.to_json().dump();
    channels.emplace(q.channel_id, std::move(ch));
    return Frame::ok({{"quote", text}}, {sig.sign(as_bytes(text))});
  }

  const Channel& owner(const std::string& channel_id) {
    auto it = channels.find(channel_id);
    if (it == channels.end()) fail(ErrorCode::kChannel, "unknown channel");
    if (owner_channel && *owner_channel != channel_id) {
      fail(ErrorCode::kAuthorization, "channel is not the owner channel");
    }
    return it->second;
  }

  // Sequencing for owner messages: strictly increasing, except that an exact
  // retransmission of the last message gets the cached ack back.
  std::optional<Frame> check_sequence(std::uint64_t seq, const Digest& request) {
    if (seq == last_seq && seq != 0 && request == last_request) return Frame::ok({{"replayed", true}}, {last_ack});
    if (seq <= last_seq) fail(ErrorCode::kReplay, "stale owner message sequence number");
    return std::nullopt;
  }

  Frame acknowledge(const Channel& ch, const std::string& channel_id, std::uint64_t seq,
                    const Digest& request, json extra) {
    extra["seq"] = seq;
    extra["policy_digest"] = pol.digest().hex();
    extra["entries"] = pol.size();
    last_seq = seq;
    last_request = request;
    last_ack = proto::channel_seal(ch.key, kAckPurpose, channel_id, extra);
    return Frame::ok({{"replayed", false}}, {last_ack});
  }

  Frame provision(const Frame& req) {
    std::string channel_id = req.args.at("channel_id").get<std::string>();
    const Channel& ch = owner(channel_id);
    if (req.blobs.size() != 1) fail(ErrorCode::kFormat, "provision takes one payload");
    json body = proto::channel_open(ch.key, kProvisionPurpose, channel_id, req.blobs[0]);
    std::uint64_t seq = body.at("seq").get<std::uint64_t>();
    Digest request = hash(req.blobs[0]);
    if (auto cached = check_sequence(seq, request)) return *cached;

    Bytes share_bytes = from_hex(body.at("enclave_share").get<std::string>());
    sharing::EnclaveShare share = sharing::EnclaveShare::parse(share_bytes);
    wipe(share_bytes);
    Policy next = Policy::from_json(body.at("policy"));

    bool retained = sk_a.has_value();
    if (!retained) sk_a = std::move(share);
    pol = std::move(next);
    owner_channel = channel_id;
    return acknowledge(ch, channel_id, seq, request, {{"share_retained", retained}});
  }

  Frame update_policy(const Frame& req) {
    if (!sk_a) fail(ErrorCode::kState, "core not provisioned");
    std::string channel_id = req.args.at("channel_id").get<std::string>();
    const Channel& ch = owner(channel_id);
    if (req.blobs.size() != 1) fail(ErrorCode::kFormat, "policy update takes one payload");
    json body = proto::channel_open(ch.key, kPolicyPurpose, channel_id, req.blobs[0]);
    std::uint64_t seq = body.at("seq").get<std::uint64_t>();
    Digest request = hash(req.blobs[0]);
    if (auto cached = check_sequence(seq, request)) return *cached;

    std::string op = body.at("op").get<std::string>();
    Digest uid = Digest::from_hex(body.at("uid").get<std::string>());
    Policy::CidSet cids;
    for (const auto& c : body.value("cids", json::array())) cids.insert(Digest::from_hex(c.get<std::string>()));

    Policy next = pol;
    if (op == "add") {
      next.add(uid, std::move(cids));
    } else if (op == "remove") {
      next.remove(uid);
    } else if (op == "modify") {
      next.modify(uid, std::move(cids));
    } else if (op == "grant") {
      for (const auto& c : cids) next.grant(uid, c);
    } else {
      fail(ErrorCode::kArgument, "unknown policy operation '" + op + "'");
    }
    pol = std::move(next);
    return acknowledge(ch, channel_id, seq, request, {{"op", op}});
  }

  // ---- query session -----------------------------------------------------------

  Frame unlock(const Frame& req) {
    if (!sk_a) fail(ErrorCode::kState, "core not provisioned");
    if (session && session->active()) fail(ErrorCode::kState, "a query session is already in progress");
    if (req.blobs.empty()) fail(ErrorCode::kFormat, "unlock needs a query token");

    struct Header {
      Digest cid;
      std::string name;
      data::Schema schema;
      std::size_t count;
    };
    std::vector<Header> headers;
    std::set<Digest> seen;
    std::vector<sharing::TaggedCiphertext> cts;
    std::size_t blob = 1;
    for (const auto& h : req.args.at("collections")) {
      Header hd{Digest::from_hex(h.at("cid").get<std::string>()), h.at("name").get<std::string>(),
                h.at("schema").get<data::Schema>(), h.at("count").get<std::size_t>()};
      if (!seen.insert(hd.cid).second) fail(ErrorCode::kFormat, "collection listed twice");
      if (req.blobs.size() - blob < hd.count) fail(ErrorCode::kFormat, "fewer ciphertexts than announced");
      Bytes ad = proto::document_ad(hd.cid, hd.name);
      for (std::size_t i = 0; i < hd.count; ++i) {
        cts.push_back({hd.cid, ad, crypto::Ciphertext::parse(req.blobs[blob++])});
      }
      headers.push_back(std::move(hd));
    }
    if (blob != req.blobs.size()) fail(ErrorCode::kFormat, "more ciphertexts than announced");

    proto::TokenContents tk = proto::open_token(pke, req.blobs[0]);
    if (static_cast<std::int64_t>(tk.counter) <= replay_floor) {
      fail(ErrorCode::kReplay, "token counter " + std::to_string(tk.counter) + " is not above " +
                                   std::to_string(replay_floor));
    }
    replay_floor = static_cast<std::int64_t>(tk.counter);

    std::vector<sharing::AuthorizedPlaintext> msgs = sharing::decrypt(pol, *sk_a, tk.share, cts);

    ops::Dataset ds;
    for (const auto& hd : headers) {
      std::vector<data::Document> docs;
      for (const auto& m : msgs) {
        if (m.cid != hd.cid) continue;
        json j = json::parse(m.plaintext.view().begin(), m.plaintext.view().end(), nullptr, false);
        if (j.is_discarded()) fail(ErrorCode::kFormat, "document plaintext is not JSON");
        docs.push_back(data::Document::from_json(j));
      }
      ds.collections.push_back(data::Collection::make(hd.cid, hd.name, std::move(docs), hd.schema));
    }
    std::sort(ds.collections.begin(), ds.collections.end(),
              [](const auto& a, const auto& b) { return a.cid < b.cid; });

    Session s;
    s.budget = tk.omega;
    s.user_key = tk.share.result_key();
    State s0;
    s0.record = {0, {}, "unlock", {{"counter", tk.counter}}, ops::payload_digest(ds), tk.omega};
    s0.payload = std::move(ds);
    s.states.push_back(std::move(s0));
    session = std::move(s);
    return Frame::ok({{"s_id", 0}, {"budget", tk.omega}});
  }

  Session& active_session() {
    if (!session || !session->active()) fail(ErrorCode::kState, "no active query session");
    return *session;
  }

  std::vector<std::uint64_t> input_ids(const json& j, const Session& s) {
    std::vector<std::uint64_t> ids = j.get<std::vector<std::uint64_t>>();
    for (auto id : ids) {
      if (id >= s.states.size() || !s.states[id].payload) fail(ErrorCode::kState, "unknown state " + std::to_string(id));
    }
    return ids;
  }

  std::uint64_t append_state(Session& s, std::string f_name, json f_params, std::vector<std::uint64_t> inputs,
                             ops::Payload payload) {
    s.budget -= 1;
    State st;
    st.record = {s.states.size(), std::move(inputs), std::move(f_name), std::move(f_params),
                 ops::payload_digest(payload), s.budget};
    st.payload = std::move(payload);
    s.states.push_back(std::move(st));
    return s.states.back().record.s_id;
  }

  Frame exec_operator(const Frame& req) {
    Session& s = active_session();
    if (s.budget == 0) fail(ErrorCode::kEndurance, "endurance budget exhausted");
    std::string f_name = req.args.at("f_name").get<std::string>();
    if (!is_operator(f_name)) fail(ErrorCode::kState, "unknown operator '" + f_name + "'");
    json f_params = req.args.at("f_params");
    std::vector<std::uint64_t> inputs = input_ids(req.args.at("inputs"), s);
    std::vector<const ops::Payload*> in;
    for (auto id : inputs) in.push_back(&*s.states[id].payload);
    ops::Payload out = ops::apply(f_name, f_params, in);
    std::uint64_t id = append_state(s, std::move(f_name), std::move(f_params), std::move(inputs), std::move(out));
    return Frame::ok({{"s_id", id}});
  }

  Frame finalize(const Frame& req) {
    Session& s = active_session();
    std::uint64_t id = req.args.at("s_id").get<std::uint64_t>();
    if (id >= s.states.size()) fail(ErrorCode::kState, "unknown state " + std::to_string(id));

    proto::Envelope env;
    std::string plain = ops::canonical(*s.states[id].payload);
    env.result = crypto::seal(s.user_key, as_bytes(plain), as_bytes(proto::kResultPurpose));
    wipe(std::span<std::uint8_t>(reinterpret_cast<std::uint8_t*>(plain.data()), plain.size()));
    std::vector<proto::StateRecord> records;
    for (const auto& st : s.states) records.push_back(st.record);
    env.tp = proto::encode_trace(std::move(records));
    env.sig = sig.sign(as_bytes(env.tp));

    s.budget = 0;
    for (auto& st : s.states) st.payload.reset();
    s.user_key.wipe();
    s.outstanding.clear();
    s.finalized = true;
    return Frame::ok({{"states", s.states.size()}}, {env.serialize()});
  }

  Frame abort_session() {
    bool aborted = session && session->active();
    if (aborted) {
      session->user_key.wipe();
      session.reset();
    }
    return Frame::ok({{"aborted", aborted}});
  }

  // ---- distributed mode --------------------------------------------------------

  Frame worker_challenge(const Frame& req) {
    std::string worker_id = req.args.at("worker_id").get<std::string>();
    PendingWorker p{random_bytes(32), crypto::KxKeyPair::generate()};
    json out = {{"nonce", to_hex(p.nonce)}, {"party_kx_pub", to_hex(p.kx.public_key)}};
    pending_workers.insert_or_assign(worker_id, std::move(p));
    return Frame::ok(std::move(out));
  }

  Frame admit_worker(const Frame& req) {
    std::string worker_id = req.args.at("worker_id").get<std::string>();
    std::string op_name = req.args.at("op_name").get<std::string>();
    if (!is_operator(op_name)) fail(ErrorCode::kArgument, "unknown operator '" + op_name + "'");
    auto it = pending_workers.find(worker_id);
    if (it == pending_workers.end()) fail(ErrorCode::kState, "no attestation challenge for worker");
    PendingWorker p = std::move(it->second);
    pending_workers.erase(it);
    if (req.blobs.size() != 1) fail(ErrorCode::kFormat, "admission takes one signature");

    proto::SignedQuote sq{req.args.at("quote").get<std::string>(), req.blobs[0]};
    proto::Quote q = proto::verify_quote(sq, {}, proto::measurement(worker_role(op_name)), p.nonce,
                                         p.kx.public_key);
    if (q.role != worker_role(op_name)) fail(ErrorCode::kAttestation, "worker reports a different role");
    crypto::SymmetricKey pairwise = crypto::kx_initiator_key(p.kx, q.core_kx_pub);
    if (!worker_key) worker_key = crypto::SymmetricKey::generate();
    Bytes wrapped = proto::channel_seal(pairwise, kWorkerKeyPurpose, q.channel_id,
                                        {{"k_w", to_hex(worker_key->view())}, {"worker_id", worker_id}});
    workers.insert_or_assign(worker_id, AdmittedWorker{op_name});
    return Frame::ok({{"channel_id", q.channel_id}}, {std::move(wrapped)});
  }

  Frame dispatch_job(const Frame& req) {
    Session& s = active_session();
    std::string worker_id = req.args.at("worker_id").get<std::string>();
    auto w = workers.find(worker_id);
    if (w == workers.end() || !worker_key) fail(ErrorCode::kAttestation, "worker has not been attested");
    std::string f_name = req.args.at("f_name").get<std::string>();
    if (w->second.op_name != f_name) fail(ErrorCode::kState, "worker does not implement " + f_name);
    if (s.budget <= s.outstanding.size()) fail(ErrorCode::kEndurance, "endurance budget exhausted");
    std::vector<std::uint64_t> inputs = input_ids(req.args.at("inputs"), s);

    Job job{worker_id, f_name, req.args.at("f_params"), inputs};
    std::string job_id = fresh_id();
    json payloads = json::array();
    for (auto id : inputs) payloads.push_back(ops::payload_to_json(*s.states[id].payload));
    Bytes sealed = proto::channel_seal(
        *worker_key, kJobPurpose, worker_id,
        {{"job_id", job_id}, {"f_name", f_name}, {"f_params", job.f_params}, {"inputs", std::move(payloads)}});
    s.outstanding.emplace(job_id, std::move(job));
    return Frame::ok({{"job_id", job_id}}, {std::move(sealed)});
  }

  Frame record_job(const Frame& req) {
    Session& s = active_session();
    std::string job_id = req.args.at("job_id").get<std::string>();
    auto it = s.outstanding.find(job_id);
    if (it == s.outstanding.end()) fail(ErrorCode::kState, "no outstanding job " + job_id);
    if (req.blobs.size() != 1) fail(ErrorCode::kFormat, "record takes one result");
    json body;
    try {
      body = proto::channel_open(*worker_key, kJobResultPurpose, it->second.worker_id, req.blobs[0]);
    } catch (const Error&) {
      abort_session();
      fail(ErrorCode::kChannel, "worker result failed authentication; session aborted");
    }
    if (body.at("job_id").get<std::string>() != job_id) fail(ErrorCode::kState, "result answers another job");
    if (s.budget == 0) fail(ErrorCode::kEndurance, "endurance budget exhausted");
    Job job = std::move(it->second);
    s.outstanding.erase(it);
    ops::Payload payload = ops::payload_from_json(body.at("payload"));
    std::uint64_t id = append_state(s, job.f_name, job.f_params, job.inputs, std::move(payload));
    return Frame::ok({{"s_id", id}});
  }
};

TrustedCore::TrustedCore(Options options) : impl_(std::make_unique<Impl>(options)) {}
TrustedCore::~TrustedCore() = default;

Bytes TrustedCore::call(ByteView request) {
  std::lock_guard lock(impl_->mu);
  return guarded([&] { return impl_->dispatch(Frame::decode(request)); });
}

proto::Transport TrustedCore::transport() {
  return [this](ByteView req) { return call(req); };
}

// ---- worker --------------------------------------------------------------------

struct WorkerCore::Impl {
  std::mutex mu;
  std::string worker_id;
  std::string op_name;
  Digest measurement;
  bool initialized = false;
  crypto::SigningKeyPair sig;
  std::map<std::string, crypto::SymmetricKey> channels;
  std::optional<crypto::SymmetricKey> worker_key;

  Impl(std::string id, std::string op, const Options& o)
      : worker_id(std::move(id)),
        op_name(std::move(op)),
        measurement(o.measurement_override.value_or(proto::measurement(worker_role(op_name)))) {}

  Frame dispatch(const Frame& req) {
    auto op = static_cast<Op>(req.code);
    if (op == Op::kInit) {
      if (initialized) fail(ErrorCode::kState, "worker already initialized");
      sig = crypto::SigningKeyPair::generate();
      initialized = true;
      return Frame::ok({{"sig_pub", to_hex(sig.public_key)}, {"measurement", measurement.hex()}, {"op_name", op_name}});
    }
    if (op == Op::kStatus) {
      return Frame::ok({{"initialized", initialized}, {"op_name", op_name}, {"keyed", worker_key.has_value()},
                        {"measurement", measurement.hex()}});
    }
    if (!initialized) fail(ErrorCode::kState, "worker not initialized");
    switch (op) {
      case Op::kAttest: {
        Bytes nonce = from_hex(req.args.at("nonce").get<std::string>());
        Bytes party = from_hex(req.args.at("party_kx_pub").get<std::string>());
        crypto::KxKeyPair kx = crypto::KxKeyPair::generate();
        proto::Quote q{worker_role(op_name), measurement, fresh_id(), kx.public_key, party, nonce, sig.public_key};
        std::string text = q.to_json().dump();
        channels.insert_or_assign(q.channel_id, crypto::kx_responder_key(kx, party));
        return Frame::ok({{"quote", text}}, {sig.sign(as_bytes(text))});
      }
      case Op::kInstallKey: {
        std::string channel_id = req.args.at("channel_id").get<std::string>();
        auto it = channels.find(channel_id);
        if (it == channels.end() || req.blobs.size() != 1) fail(ErrorCode::kChannel, "unknown channel");
        json body = proto::channel_open(it->second, kWorkerKeyPurpose, channel_id, req.blobs[0]);
        if (body.at("worker_id").get<std::string>() != worker_id) fail(ErrorCode::kChannel, "key meant for another worker");
        Bytes raw = from_hex(body.at("k_w").get<std::string>());
        worker_key = crypto::SymmetricKey(raw);
        wipe(raw);
        return Frame::ok();
      }
      case Op::kRunJob: {
        if (!worker_key) fail(ErrorCode::kState, "worker has no communication key");
        if (req.blobs.size() != 1) fail(ErrorCode::kFormat, "job takes one payload");
        json job = proto::channel_open(*worker_key, kJobPurpose, worker_id, req.blobs[0]);
        std::string f_name = job.at("f_name").get<std::string>();
        if (f_name != op_name) fail(ErrorCode::kState, "worker implements " + op_name + ", not " + f_name);
        std::vector<ops::Payload> inputs;
        for (const auto& p : job.at("inputs")) inputs.push_back(ops::payload_from_json(p));
        std::vector<const ops::Payload*> in;
        for (const auto& p : inputs) in.push_back(&p);
        ops::Payload out = ops::apply(f_name, job.at("f_params"), in);
        Bytes sealed = proto::channel_seal(*worker_key, kJobResultPurpose, worker_id,
                                           {{"job_id", job.at("job_id")}, {"payload", ops::payload_to_json(out)}});
        return Frame::ok(json::object(), {std::move(sealed)});
      }
      default: break;
    }
    fail(ErrorCode::kArgument, "unknown opcode " + std::to_string(req.code));
  }
};

WorkerCore::WorkerCore(std::string worker_id, std::string op_name, Options options)
    : impl_(std::make_unique<Impl>(std::move(worker_id), std::move(op_name), options)) {}
WorkerCore::~WorkerCore() = default;

Bytes WorkerCore::call(ByteView request) {
  std::lock_guard lock(impl_->mu);
  return guarded([&] { return impl_->dispatch(Frame::decode(request)); });
}

proto::Transport WorkerCore::transport() {
  return [this](ByteView req) { return call(req); };
}

const std::string& WorkerCore::worker_id() const { return impl_->worker_id; }
const std::string& WorkerCore::op_name() const { return impl_->op_name; }

}  // namespace qshield::core
