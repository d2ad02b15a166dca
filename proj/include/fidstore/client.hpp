#pragma once

#include <cstdint>
#include <mutex>
#include <string_view>

#include "fidstore/aead.hpp"
#include "fidstore/bytes.hpp"

namespace fidstore {

// Client-side ciphertext crossing the untrusted domain: nonce || tag || body.
struct ClientEnvelope {
  Nonce nonce{};
  Tag tag{};
  Bytes ciphertext;

  std::size_t wire_size() const noexcept { return kAeadOverhead + ciphertext.size(); }
  Bytes serialize() const;
  static ClientEnvelope parse(ByteView wire);

  friend bool operator==(const ClientEnvelope&, const ClientEnvelope&) = default;
};

// Encrypts with a fresh random nonce per message under a key shared with the
// privacy zone (provisioned after attestation, outside this library).
class EnvelopeCipher {
 public:
  explicit EnvelopeCipher(const AeadKey& key) : aead_(key) {}

  ClientEnvelope encrypt(ByteView plaintext);
  // Throws AuthFailure when the envelope was altered.
  Bytes decrypt(const ClientEnvelope& env);

 private:
  std::mutex mu_;
  AesGcm aead_;
};

class ClientSession {
 public:
  explicit ClientSession(const AeadKey& key) : cipher_(key) {}

  ClientEnvelope encrypt(ByteView plaintext) { return cipher_.encrypt(plaintext); }
  Bytes decrypt(const ClientEnvelope& env) { return cipher_.decrypt(env); }

  ClientEnvelope encrypt_int(std::int64_t v);
  std::int64_t decrypt_int(const ClientEnvelope& env);
  ClientEnvelope encrypt_text(std::string_view text, std::size_t padded_width);
  // `padded_width` must match the width used at encryption (0 = unpadded).
  std::string decrypt_text(const ClientEnvelope& env, std::size_t padded_width);

 private:
  EnvelopeCipher cipher_;
};

}  // namespace fidstore
