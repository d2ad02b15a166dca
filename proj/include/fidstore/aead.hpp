#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "fidstore/bytes.hpp"

typedef struct evp_cipher_ctx_st EVP_CIPHER_CTX;

namespace fidstore {

inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;
inline constexpr std::size_t kAeadOverhead = kNonceBytes + kTagBytes;  // 28

using AeadKey = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, kNonceBytes>;
using Tag = std::array<std::uint8_t, kTagBytes>;

// AES-256-GCM with the key schedule computed once. Not thread-safe; owners
// serialize access.
class AesGcm {
 public:
  explicit AesGcm(const AeadKey& key);
  ~AesGcm();
  AesGcm(const AesGcm&) = delete;
  AesGcm& operator=(const AesGcm&) = delete;
  AesGcm(AesGcm&& other) noexcept;
  AesGcm& operator=(AesGcm&& other) noexcept;

  // ciphertext.size() must equal plaintext.size().
  void seal(const Nonce& nonce, ByteView aad, ByteView plaintext, std::span<std::uint8_t> ciphertext,
            Tag& tag);
  // Returns false when the tag does not verify; plaintext is then unspecified.
  [[nodiscard]] bool open(const Nonce& nonce, ByteView aad, ByteView ciphertext, const Tag& tag,
                          std::span<std::uint8_t> plaintext);

 private:
  EVP_CIPHER_CTX* enc_ = nullptr;
  EVP_CIPHER_CTX* dec_ = nullptr;
};

void random_bytes(std::span<std::uint8_t> out);
AeadKey random_key();
// Deterministic key for simulations and tests (SHA-256 of a label and seed).
AeadKey derive_key(std::string_view label, std::uint64_t seed);

}  // namespace fidstore
