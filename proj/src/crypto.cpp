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

#include "qshield/crypto.hpp"

#include <sodium.h>

#include <algorithm>

#include "qshield/error.hpp"
#include "sodium_init.hpp"

namespace qshield::crypto {

SecretBytes& SecretBytes::operator=(const SecretBytes& o) {
  if (this != &o) {
    clear();
    data_ = o.data_;
  }
  return *this;
}

SecretBytes& SecretBytes::operator=(SecretBytes&& o) noexcept {
  if (this != &o) {
    clear();
    data_ = std::move(o.data_);
    o.data_.clear();
  }
  return *this;
}

void SecretBytes::clear() {
  if (!data_.empty()) sodium_memzero(data_.data(), data_.size());
  data_.clear();
}

SymmetricKey::SymmetricKey(ByteView raw) {
  if (raw.size() != kSize) fail(ErrorCode::kArgument, "symmetric key must be 32 bytes");
  std::copy(raw.begin(), raw.end(), key_.begin());
}

SymmetricKey SymmetricKey::generate() {
  detail::ensure_sodium();
  SymmetricKey k;
  randombytes_buf(k.key_.data(), k.key_.size());
  return k;
}

void SymmetricKey::wipe() { sodium_memzero(key_.data(), key_.size()); }

bool SymmetricKey::is_zero() const { return sodium_is_zero(key_.data(), key_.size()) == 1; }

bool operator==(const SymmetricKey& a, const SymmetricKey& b) {
  return sodium_memcmp(a.key_.data(), b.key_.data(), SymmetricKey::kSize) == 0;
}

Bytes Ciphertext::serialize() const {
  Bytes out;
  out.reserve(nonce.size() + body.size() + tag.size());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), body.begin(), body.end());
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

Ciphertext Ciphertext::parse(ByteView wire) {
  if (wire.size() < kNonceSize + kTagSize) fail(ErrorCode::kFormat, "ciphertext too short");
  Ciphertext ct;
  std::copy_n(wire.begin(), kNonceSize, ct.nonce.begin());
  ct.body.assign(wire.begin() + kNonceSize, wire.end() - kTagSize);
  std::copy(wire.end() - kTagSize, wire.end(), ct.tag.begin());
  return ct;
}

Ciphertext aead_encrypt(const SymmetricKey& key, ByteView msg, ByteView ad) {
  detail::ensure_sodium();
  Ciphertext ct;
  randombytes_buf(ct.nonce.data(), ct.nonce.size());
  ct.body.resize(msg.size());
  crypto_aead_xchacha20poly1305_ietf_encrypt_detached(
      ct.body.data(), ct.tag.data(), nullptr, msg.data(), msg.size(), ad.data(), ad.size(),
      nullptr, ct.nonce.data(), key.view().data());
  return ct;
}

Bytes aead_decrypt(const SymmetricKey& key, const Ciphertext& ct, ByteView ad) {
  detail::ensure_sodium();
  Bytes msg(ct.body.size());
  int rc = crypto_aead_xchacha20poly1305_ietf_decrypt_detached(
      msg.data(), nullptr, ct.body.data(), ct.body.size(), ct.tag.data(), ad.data(), ad.size(),
      ct.nonce.data(), key.view().data());
  if (rc != 0) fail(ErrorCode::kIntegrity, "authenticated decryption failed");
  return msg;
}

Bytes seal(const SymmetricKey& key, ByteView msg, ByteView ad) {
  return aead_encrypt(key, msg, ad).serialize();
}

Bytes open(const SymmetricKey& key, ByteView wire, ByteView ad) {
  return aead_decrypt(key, Ciphertext::parse(wire), ad);
}

PkeKeyPair PkeKeyPair::generate() {
  detail::ensure_sodium();
  Bytes pk(crypto_box_PUBLICKEYBYTES), sk(crypto_box_SECRETKEYBYTES);
  crypto_box_keypair(pk.data(), sk.data());
  return {std::move(pk), SecretBytes(std::move(sk))};
}

Bytes pke_encrypt(ByteView public_key, ByteView msg) {
  detail::ensure_sodium();
  if (public_key.size() != crypto_box_PUBLICKEYBYTES) {
    fail(ErrorCode::kArgument, "bad encryption public key length");
  }
  Bytes out(msg.size() + crypto_box_SEALBYTES);
  crypto_box_seal(out.data(), msg.data(), msg.size(), public_key.data());
  return out;
}

Bytes pke_decrypt(const PkeKeyPair& pair, ByteView ct) {
  detail::ensure_sodium();
  if (ct.size() < crypto_box_SEALBYTES) fail(ErrorCode::kIntegrity, "sealed box too short");
  Bytes out(ct.size() - crypto_box_SEALBYTES);
  if (crypto_box_seal_open(out.data(), ct.data(), ct.size(), pair.public_key.data(),
                           pair.secret_key.view().data()) != 0) {
    fail(ErrorCode::kIntegrity, "sealed box failed to open");
  }
  return out;
}

SigningKeyPair SigningKeyPair::generate() {
  detail::ensure_sodium();
  Bytes pk(crypto_sign_PUBLICKEYBYTES), sk(crypto_sign_SECRETKEYBYTES);
  crypto_sign_keypair(pk.data(), sk.data());
  return {std::move(pk), SecretBytes(std::move(sk))};
}

Bytes SigningKeyPair::sign(ByteView msg) const {
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), secret_key.view().data());
  return sig;
}

bool verify_signature(ByteView public_key, ByteView msg, ByteView signature) {
  detail::ensure_sodium();
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES) {
    return false;
  }
  return crypto_sign_verify_detached(signature.data(), msg.data(), msg.size(),
                                     public_key.data()) == 0;
}

KxKeyPair KxKeyPair::generate() {
  detail::ensure_sodium();
  Bytes pk(crypto_kx_PUBLICKEYBYTES), sk(crypto_kx_SECRETKEYBYTES);
  crypto_kx_keypair(pk.data(), sk.data());
  return {std::move(pk), SecretBytes(std::move(sk))};
}

namespace {

constexpr std::string_view kChannelTag = "qshield/channel/v1";

// rx/tx are swapped between the two ends; the key hashes them in initiator
// order so both sides agree.
SymmetricKey combine(const std::uint8_t* first, const std::uint8_t* second) {
  Bytes buf(first, first + crypto_kx_SESSIONKEYBYTES);
  buf.insert(buf.end(), second, second + crypto_kx_SESSIONKEYBYTES);
  SymmetricKey key = SymmetricKey::from_digest(hash_tagged(kChannelTag, buf));
  sodium_memzero(buf.data(), buf.size());
  return key;
}

}  // namespace

SymmetricKey kx_initiator_key(const KxKeyPair& self, ByteView responder_public) {
  detail::ensure_sodium();
  if (responder_public.size() != crypto_kx_PUBLICKEYBYTES) {
    fail(ErrorCode::kChannel, "bad key-exchange public key");
  }
  std::uint8_t rx[crypto_kx_SESSIONKEYBYTES], tx[crypto_kx_SESSIONKEYBYTES];
  if (crypto_kx_client_session_keys(rx, tx, self.public_key.data(), self.secret_key.view().data(),
                                    responder_public.data()) != 0) {
    fail(ErrorCode::kChannel, "key exchange rejected peer key");
  }
  SymmetricKey key = combine(tx, rx);
  sodium_memzero(rx, sizeof rx);
  sodium_memzero(tx, sizeof tx);
  return key;
}

SymmetricKey kx_responder_key(const KxKeyPair& self, ByteView initiator_public) {
  detail::ensure_sodium();
  if (initiator_public.size() != crypto_kx_PUBLICKEYBYTES) {
    fail(ErrorCode::kChannel, "bad key-exchange public key");
  }
  std::uint8_t rx[crypto_kx_SESSIONKEYBYTES], tx[crypto_kx_SESSIONKEYBYTES];
  if (crypto_kx_server_session_keys(rx, tx, self.public_key.data(), self.secret_key.view().data(),
                                    initiator_public.data()) != 0) {
    fail(ErrorCode::kChannel, "key exchange rejected peer key");
  }
  SymmetricKey key = combine(rx, tx);
  sodium_memzero(rx, sizeof rx);
  sodium_memzero(tx, sizeof tx);
  return key;
}

}  // namespace qshield::crypto
