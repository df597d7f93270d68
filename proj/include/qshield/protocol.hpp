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

// Wire formats shared by the trusted core, the host and the clients:
// boundary frames, query tokens, attestation quotes, channel messages,
// trust-proof records and response envelopes.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qshield/bytes.hpp"
#include "qshield/crypto.hpp"
#include "qshield/error.hpp"
#include "qshield/sharing.hpp"

namespace qshield::proto {

using nlohmann::json;

// Boundary call opcodes. Responses reuse the frame layout with the code
// byte holding 0 for success or an ErrorCode.
enum class Op : std::uint8_t {
  kInit = 0x01,
  kProvision = 0x02,
  kUpdatePolicy = 0x03,
  kAttest = 0x04,
  kStatus = 0x05,
  kUnlock = 0x10,
  kExecOperator = 0x11,
  kFinalize = 0x12,
  kDispatch = 0x13,
  kRecord = 0x14,
  kAbort = 0x15,
  kWorkerChallenge = 0x20,
  kAdmitWorker = 0x21,
  kInstallKey = 0x22,
  kRunJob = 0x23,
};

// u32 body length | u8 code | u32 json length | canonical JSON |
// u32 blob count | (u32 length | bytes)*
struct Frame {
  std::uint8_t code = 0;
  json args = json::object();
  std::vector<Bytes> blobs;

  Bytes encode() const;
  static Frame decode(ByteView wire);

  static Frame request(Op op, json args = json::object(), std::vector<Bytes> blobs = {});
  static Frame ok(json args = json::object(), std::vector<Bytes> blobs = {});
  static Frame error(const Error& e);

  bool is_error() const { return code != 0; }
  // Rethrows an error response as the Error it carries.
  const Frame& check() const;
};

using Transport = std::function<Bytes(ByteView)>;

// Sends one request frame and returns the checked response.
Frame call(const Transport& t, Op op, json args = json::object(), std::vector<Bytes> blobs = {});

// ---- measurement ------------------------------------------------------------

// Digest of the trusted-core build for the given role ("core" or
// "worker/<operator>").
Digest measurement(std::string_view role);

// ---- tokens -----------------------------------------------------------------

struct TokenContents {
  sharing::UserShare share;
  std::uint32_t omega = 0;
  std::uint64_t counter = 0;
};

Bytes seal_token(ByteView pke_pub, const TokenContents& tk);
// Throws kToken when the token does not open or parse.
TokenContents open_token(const crypto::PkeKeyPair& pair, ByteView token);

// Associated data binding a document ciphertext to its collection.
Bytes document_ad(const Digest& cid, std::string_view collection_name);

// ---- channels ---------------------------------------------------------------

// AEAD of canonical JSON under a channel key; the purpose and channel id are
// bound as associated data. open() throws kChannel.
Bytes channel_seal(const crypto::SymmetricKey& key, std::string_view purpose,
                   std::string_view channel_id, const json& body);
json channel_open(const crypto::SymmetricKey& key, std::string_view purpose,
                  std::string_view channel_id, ByteView wire);

struct Quote {
  std::string role;
  Digest measurement;
  std::string channel_id;
  Bytes core_kx_pub;
  Bytes party_kx_pub;
  Bytes nonce;
  Bytes sig_pub;

  json to_json() const;
  static Quote from_json(const json& j);
};

struct SignedQuote {
  std::string text;  // canonical JSON of the Quote
  Bytes sig;
};

// Checks signature, measurement, nonce and the party key echo. An empty
// sig_pub means the key embedded in the quote is used. Throws kAttestation.
Quote verify_quote(const SignedQuote& sq, ByteView sig_pub, const Digest& expected_measurement,
                   ByteView nonce, ByteView party_kx_pub);

// ---- trust proof ------------------------------------------------------------

struct StateRecord {
  std::uint64_t s_id = 0;
  std::vector<std::uint64_t> p_states;
  std::string f_name;
  json f_params = json::object();
  Digest s_db_digest;
  std::uint64_t w = 0;

  bool operator==(const StateRecord&) const = default;
};

// JSON array sorted by s_id, fields in the order
// (s_id, p_states, func{f_name, f_params}, s_db_digest, w).
std::string encode_trace(std::vector<StateRecord> records);
// Throws kProof when the text is not a well-formed trace.
std::vector<StateRecord> decode_trace(std::string_view text);

struct Envelope {
  Bytes result;     // AEAD under the user's result key
  std::string tp;   // canonical trace
  Bytes sig;        // signature over tp's UTF-8 bytes

  // "QSEV1" | u32 | tp | u32 | result | u32 | sig
  Bytes serialize() const;
  static Envelope parse(ByteView wire);
};

inline constexpr std::string_view kResultPurpose = "qshield/result/v1";

}  // namespace qshield::proto
