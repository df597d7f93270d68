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

#include "qshield/bytes.hpp"

#include <sodium.h>

#include "qshield/error.hpp"
#include "sodium_init.hpp"

namespace qshield {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kArgument: return "argument";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kContext: return "context";
    case ErrorCode::kAuthorization: return "authorization";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kPredicate: return "predicate";
    case ErrorCode::kType: return "type";
    case ErrorCode::kEmptyAggregate: return "empty-aggregate";
    case ErrorCode::kSyntax: return "syntax";
    case ErrorCode::kSemantic: return "semantic";
    case ErrorCode::kState: return "state";
    case ErrorCode::kEndurance: return "endurance";
    case ErrorCode::kReplay: return "replay";
    case ErrorCode::kToken: return "token";
    case ErrorCode::kChannel: return "channel";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kAttestation: return "attestation";
    case ErrorCode::kProof: return "proof";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

std::string Digest::hex() const { return to_hex(bytes); }

Digest Digest::from_hex(std::string_view hex) {
  Bytes raw = qshield::from_hex(hex);
  if (raw.size() != 32) fail(ErrorCode::kFormat, "digest must be 32 bytes");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

Digest hash(ByteView data) {
  detail::ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Digest hash(std::string_view text) { return hash(as_bytes(text)); }

Digest hash_tagged(std::string_view tag, ByteView data) {
  detail::ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(tag.data()), tag.size());
  crypto_hash_sha256_update(&st, data.data(), data.size());
  Digest d;
  crypto_hash_sha256_final(&st, d.bytes.data());
  return d;
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) fail(ErrorCode::kFormat, "odd-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(ErrorCode::kFormat, "invalid hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

Bytes random_bytes(std::size_t n) {
  detail::ensure_sodium();
  Bytes out(n);
  randombytes_buf(out.data(), out.size());
  return out;
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() {
  auto b = take(4);
  return std::uint32_t{b[0]} << 24 | std::uint32_t{b[1]} << 16 | std::uint32_t{b[2]} << 8 | b[3];
}

std::uint64_t ByteReader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (auto x : b) v = v << 8 | x;
  return v;
}

ByteView ByteReader::take(std::size_t n) {
  if (remaining() < n) fail(ErrorCode::kFormat, "truncated input");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

Bytes ByteReader::take_bytes(std::size_t n) {
  auto v = take(n);
  return Bytes(v.begin(), v.end());
}

void ByteReader::expect_magic(std::string_view magic) {
  auto got = take(magic.size());
  if (!std::equal(got.begin(), got.end(), magic.begin())) {
    fail(ErrorCode::kFormat, "bad magic, expected " + std::string(magic));
  }
}

void ByteReader::expect_done() const {
  if (!done()) fail(ErrorCode::kFormat, "trailing bytes");
}

bool equal_ct(ByteView a, ByteView b) {
  detail::ensure_sodium();
  return a.size() == b.size() && sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

void wipe(std::span<std::uint8_t> data) { sodium_memzero(data.data(), data.size()); }

}  // namespace qshield
