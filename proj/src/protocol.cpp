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

#include "qshield/protocol.hpp"

#include <algorithm>

namespace qshield::proto {

namespace {

constexpr std::string_view kTokenMagic = "QSTK1";
constexpr std::string_view kEnvelopeMagic = "QSEV1";
constexpr std::uint32_t kMaxFrame = 1u << 30;

void put_blob(Bytes& out, ByteView b) {
  put_u32(out, static_cast<std::uint32_t>(b.size()));
  out.insert(out.end(), b.begin(), b.end());
}

Bytes read_blob(ByteReader& in) {
  std::uint32_t n = in.u32();
  return in.take_bytes(n);
}

}  // namespace

Bytes Frame::encode() const {
  std::string text = args.dump();
  Bytes body;
  body.push_back(code);
  put_blob(body, as_bytes(text));
  put_u32(body, static_cast<std::uint32_t>(blobs.size()));
  for (const auto& b : blobs) put_blob(body, b);
  Bytes out;
  out.reserve(body.size() + 4);
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Frame Frame::decode(ByteView wire) {
  ByteReader in(wire);
  std::uint32_t len = in.u32();
  if (len > kMaxFrame || len != in.remaining()) fail(ErrorCode::kFormat, "frame length mismatch");
  Frame f;
  f.code = in.u8();
  Bytes text = read_blob(in);
  f.args = json::parse(text.begin(), text.end(), nullptr, false);
  if (f.args.is_discarded() || !f.args.is_object()) fail(ErrorCode::kFormat, "frame arguments are not a JSON object");
  std::uint32_t count = in.u32();
  if (count > in.remaining() / 4) fail(ErrorCode::kFormat, "frame blob count exceeds frame");
  f.blobs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) f.blobs.push_back(read_blob(in));
  in.expect_done();
  return f;
}

Frame Frame::request(Op op, json args, std::vector<Bytes> blobs) {
  return {static_cast<std::uint8_t>(op), std::move(args), std::move(blobs)};
}

Frame Frame::ok(json args, std::vector<Bytes> blobs) { return {0, std::move(args), std::move(blobs)}; }

Frame Frame::error(const Error& e) {
  return {static_cast<std::uint8_t>(e.code()),
          {{"error", std::string(error_code_name(e.code()))}, {"message", e.what()}},
          {}};
}

const Frame& Frame::check() const {
  if (!is_error()) return *this;
  auto code = static_cast<ErrorCode>(this->code);
  if (error_code_name(code) == "unknown") code = ErrorCode::kInternal;
  fail(code, args.value("message", std::string("error response")));
}

Frame call(const Transport& t, Op op, json args, std::vector<Bytes> blobs) {
  Bytes reply = t(Frame::request(op, std::move(args), std::move(blobs)).encode());
  Frame f = Frame::decode(reply);
  f.check();
  return f;
}

// ---- measurement ------------------------------------------------------------

#ifndef QSHIELD_CORE_DIGEST
#define QSHIELD_CORE_DIGEST "unversioned"
#endif

Digest measurement(std::string_view role) {
  std::string identity = std::string(role) + "|" + QSHIELD_CORE_DIGEST;
  return hash_tagged("qshield/measurement/v1", as_bytes(identity));
}

// ---- tokens -----------------------------------------------------------------

Bytes seal_token(ByteView pke_pub, const TokenContents& tk) {
  Bytes plain(kTokenMagic.begin(), kTokenMagic.end());
  Bytes share = tk.share.serialize();
  put_blob(plain, share);
  put_u32(plain, tk.omega);
  put_u64(plain, tk.counter);
  Bytes out = crypto::pke_encrypt(pke_pub, plain);
  wipe(plain);
  return out;
}

TokenContents open_token(const crypto::PkeKeyPair& pair, ByteView token) {
  Bytes plain;
  try {
    plain = crypto::pke_decrypt(pair, token);
  } catch (const Error&) {
    fail(ErrorCode::kToken, "query token does not open under the core key");
  }
  try {
    ByteReader in(plain);
    in.expect_magic(kTokenMagic);
    TokenContents tk;
    Bytes share = read_blob(in);
    tk.share = sharing::UserShare::parse(share);
    tk.omega = in.u32();
    tk.counter = in.u64();
    in.expect_done();
    wipe(plain);
    if (tk.counter > static_cast<std::uint64_t>(INT64_MAX)) fail(ErrorCode::kToken, "token counter out of range");
    return tk;
  } catch (const Error& e) {
    wipe(plain);
    if (e.code() == ErrorCode::kToken) throw;
    fail(ErrorCode::kToken, "malformed query token");
  }
}

Bytes document_ad(const Digest& cid, std::string_view collection_name) {
  std::string ad = "qshield/doc/v1|" + cid.hex() + "|";
  ad.append(collection_name);
  return to_bytes(ad);
}

// ---- channels ---------------------------------------------------------------

namespace {

Bytes channel_ad(std::string_view purpose, std::string_view channel_id) {
  Bytes ad(purpose.begin(), purpose.end());
  ad.push_back('|');
  ad.insert(ad.end(), channel_id.begin(), channel_id.end());
  return ad;
}

}  // namespace

Bytes channel_seal(const crypto::SymmetricKey& key, std::string_view purpose,
                   std::string_view channel_id, const json& body) {
  std::string text = body.dump();
  Bytes out = crypto::seal(key, as_bytes(text), channel_ad(purpose, channel_id));
  wipe(std::span<std::uint8_t>(reinterpret_cast<std::uint8_t*>(text.data()), text.size()));
  return out;
}

json channel_open(const crypto::SymmetricKey& key, std::string_view purpose,
                  std::string_view channel_id, ByteView wire) {
  Bytes plain;
  try {
    plain = crypto::open(key, wire, channel_ad(purpose, channel_id));
  } catch (const Error&) {
    fail(ErrorCode::kChannel, "channel message failed authentication");
  }
  json body = json::parse(plain.begin(), plain.end(), nullptr, false);
  wipe(plain);
  if (body.is_discarded()) fail(ErrorCode::kChannel, "channel message is not JSON");
  return body;
}

json Quote::to_json() const {
  return {{"role", role},
          {"measurement", measurement.hex()},
          {"channel_id", channel_id},
          {"core_kx_pub", to_hex(core_kx_pub)},
          {"party_kx_pub", to_hex(party_kx_pub)},
          {"nonce", to_hex(nonce)},
          {"sig_pub", to_hex(sig_pub)}};
}

Quote Quote::from_json(const json& j) {
  try {
    Quote q;
    q.role = j.at("role").get<std::string>();
    q.measurement = Digest::from_hex(j.at("measurement").get<std::string>());
    q.channel_id = j.at("channel_id").get<std::string>();
    q.core_kx_pub = from_hex(j.at("core_kx_pub").get<std::string>());
    q.party_kx_pub = from_hex(j.at("party_kx_pub").get<std::string>());
    q.nonce = from_hex(j.at("nonce").get<std::string>());
    q.sig_pub = from_hex(j.at("sig_pub").get<std::string>());
    return q;
  } catch (const json::exception&) {
    fail(ErrorCode::kAttestation, "malformed quote");
  }
}

Quote verify_quote(const SignedQuote& sq, ByteView sig_pub, const Digest& expected_measurement,
                   ByteView nonce, ByteView party_kx_pub) {
  json j = json::parse(sq.text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::kAttestation, "quote is not JSON");
  Quote q;
  try {
    q = Quote::from_json(j);
  } catch (const Error&) {
    fail(ErrorCode::kAttestation, "malformed quote");
  }
  ByteView key = sig_pub.empty() ? ByteView(q.sig_pub) : sig_pub;
  if (!crypto::verify_signature(key, as_bytes(sq.text), sq.sig)) {
    fail(ErrorCode::kAttestation, "quote signature does not verify");
  }
  if (!sig_pub.empty() && !std::equal(sig_pub.begin(), sig_pub.end(), q.sig_pub.begin(), q.sig_pub.end())) {
    fail(ErrorCode::kAttestation, "quote names a different signing key");
  }
  if (q.measurement != expected_measurement) {
    fail(ErrorCode::kAttestation, "measurement " + q.measurement.short_hex() + " does not match expected " +
                                      expected_measurement.short_hex());
  }
  if (!equal_ct(q.nonce, nonce)) fail(ErrorCode::kAttestation, "quote answers a different challenge");
  if (!equal_ct(q.party_kx_pub, party_kx_pub)) fail(ErrorCode::kAttestation, "quote binds a different party key");
  return q;
}

// ---- trust proof ------------------------------------------------------------

std::string encode_trace(std::vector<StateRecord> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.s_id < b.s_id; });
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json func;
    func["f_name"] = r.f_name;
    func["f_params"] = nlohmann::ordered_json::parse(r.f_params.dump());
    nlohmann::ordered_json rec;
    rec["s_id"] = r.s_id;
    rec["p_states"] = r.p_states;
    rec["func"] = std::move(func);
    rec["s_db_digest"] = r.s_db_digest.hex();
    rec["w"] = r.w;
    out.push_back(std::move(rec));
  }
  return out.dump();
}

std::vector<StateRecord> decode_trace(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) fail(ErrorCode::kProof, "trust proof is not a JSON array");
  std::vector<StateRecord> out;
  try {
    for (const auto& rec : j) {
      StateRecord r;
      r.s_id = rec.at("s_id").get<std::uint64_t>();
      r.p_states = rec.at("p_states").get<std::vector<std::uint64_t>>();
      r.f_name = rec.at("func").at("f_name").get<std::string>();
      r.f_params = rec.at("func").at("f_params");
      r.s_db_digest = Digest::from_hex(rec.at("s_db_digest").get<std::string>());
      r.w = rec.at("w").get<std::uint64_t>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception&) {
    fail(ErrorCode::kProof, "malformed trust proof record");
  } catch (const Error&) {
    fail(ErrorCode::kProof, "malformed trust proof record");
  }
  return out;
}

Bytes Envelope::serialize() const {
  Bytes out(kEnvelopeMagic.begin(), kEnvelopeMagic.end());
  put_blob(out, as_bytes(tp));
  put_blob(out, result);
  put_blob(out, sig);
  return out;
}

Envelope Envelope::parse(ByteView wire) {
  ByteReader in(wire);
  in.expect_magic(kEnvelopeMagic);
  Envelope e;
  e.tp = to_string(read_blob(in));
  e.result = read_blob(in);
  e.sig = read_blob(in);
  in.expect_done();
  return e;
}

}  // namespace qshield::proto
