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

// Symmetric AEAD, public-key encryption, signatures and key agreement used by
// the protocols. All primitives come from libsodium:
//   AEAD       XChaCha20-Poly1305 (256-bit key, 192-bit random nonce)
//   PKE        sealed box (X25519 key encapsulation + XSalsa20-Poly1305)
//   signature  Ed25519
//   key agree  X25519 + BLAKE2b (crypto_kx)

#include <array>
#include <cstdint>

#include "qshield/bytes.hpp"

namespace qshield::crypto {

// Byte buffer that is zeroed when it goes out of scope.
class SecretBytes {
 public:
  SecretBytes() = default;
  explicit SecretBytes(Bytes b) : data_(std::move(b)) {}
  SecretBytes(const SecretBytes&) = default;
  SecretBytes& operator=(const SecretBytes& o);
  SecretBytes(SecretBytes&& o) noexcept : data_(std::move(o.data_)) { o.data_.clear(); }
  SecretBytes& operator=(SecretBytes&& o) noexcept;
  ~SecretBytes() { clear(); }

  ByteView view() const { return data_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  void clear();

 private:
  Bytes data_;
};

class SymmetricKey {
 public:
  static constexpr std::size_t kSize = 32;

  SymmetricKey() = default;
  explicit SymmetricKey(ByteView raw);
  static SymmetricKey generate();
  static SymmetricKey from_digest(const Digest& d) { return SymmetricKey(d.view()); }

  SymmetricKey(const SymmetricKey&) = default;
  SymmetricKey& operator=(const SymmetricKey&) = default;
  ~SymmetricKey() { wipe(); }

  ByteView view() const { return key_; }
  void wipe();
  bool is_zero() const;

  // Constant time.
  friend bool operator==(const SymmetricKey& a, const SymmetricKey& b);

 private:
  std::array<std::uint8_t, kSize> key_{};
};

struct Ciphertext {
  static constexpr std::size_t kNonceSize = 24;
  static constexpr std::size_t kTagSize = 16;

  std::array<std::uint8_t, kNonceSize> nonce{};
  Bytes body;
  std::array<std::uint8_t, kTagSize> tag{};

  // nonce || body || tag
  Bytes serialize() const;
  static Ciphertext parse(ByteView wire);

  bool operator==(const Ciphertext&) const = default;
};

Ciphertext aead_encrypt(const SymmetricKey& key, ByteView msg, ByteView ad = {});
// Throws kIntegrity when authentication fails.
Bytes aead_decrypt(const SymmetricKey& key, const Ciphertext& ct, ByteView ad = {});

// Serialized-form conveniences.
Bytes seal(const SymmetricKey& key, ByteView msg, ByteView ad = {});
Bytes open(const SymmetricKey& key, ByteView wire, ByteView ad = {});

struct PkeKeyPair {
  Bytes public_key;
  SecretBytes secret_key;

  static PkeKeyPair generate();
};

Bytes pke_encrypt(ByteView public_key, ByteView msg);
// Throws kIntegrity when the ciphertext does not open under the pair.
Bytes pke_decrypt(const PkeKeyPair& pair, ByteView ct);

struct SigningKeyPair {
  Bytes public_key;
  SecretBytes secret_key;

  static SigningKeyPair generate();
  Bytes sign(ByteView msg) const;
};

bool verify_signature(ByteView public_key, ByteView msg, ByteView signature);

struct KxKeyPair {
  Bytes public_key;
  SecretBytes secret_key;

  static KxKeyPair generate();
};

// Both ends of an X25519 exchange derive the same 256-bit session key.
SymmetricKey kx_initiator_key(const KxKeyPair& self, ByteView responder_public);
SymmetricKey kx_responder_key(const KxKeyPair& self, ByteView initiator_public);

}  // namespace qshield::crypto
