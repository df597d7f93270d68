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

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qshield {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// 256-bit hash value. Used for document ids, collection ids, user ids and
// every digest that ends up in a trust proof.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;

  std::string hex() const;
  // First eight hex characters; used where a short stable tag is needed.
  std::string short_hex() const { return hex().substr(0, 8); }
  static Digest from_hex(std::string_view hex);
  ByteView view() const { return bytes; }
};

// SHA-256.
Digest hash(ByteView data);
Digest hash(std::string_view text);
// SHA-256 over a domain tag followed by the data.
Digest hash_tagged(std::string_view tag, ByteView data);

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

Bytes random_bytes(std::size_t n);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}
inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}
inline std::string to_string(ByteView b) {
  return std::string(b.begin(), b.end());
}

// Big-endian fixed-width integer helpers for the binary formats.
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);

// Sequential reader over a byte buffer; throws kFormat on truncation.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView take(std::size_t n);
  Bytes take_bytes(std::size_t n);
  void expect_magic(std::string_view magic);
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_done() const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

// Constant-time comparison and best-effort erasure (libsodium).
bool equal_ct(ByteView a, ByteView b);
void wipe(std::span<std::uint8_t> data);

}  // namespace qshield
