#include "fidstore/aead.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <string>

namespace fidstore {

namespace {

EVP_CIPHER_CTX* make_ctx(const AeadKey& key, bool encrypt) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) fail(Errc::IoFailure, "EVP_CIPHER_CTX_new");
  const int ok = encrypt ? EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(), nullptr)
                         : EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(), nullptr);
  if (ok != 1 || EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) != 1) {
    EVP_CIPHER_CTX_free(ctx);
    fail(Errc::IoFailure, "AES-GCM init");
  }
  return ctx;
}

}  // namespace

AesGcm::AesGcm(const AeadKey& key) : enc_(make_ctx(key, true)), dec_(make_ctx(key, false)) {}

AesGcm::~AesGcm() {
  EVP_CIPHER_CTX_free(enc_);
  EVP_CIPHER_CTX_free(dec_);
}

AesGcm::AesGcm(AesGcm&& other) noexcept : enc_(other.enc_), dec_(other.dec_) {
  other.enc_ = nullptr;
  other.dec_ = nullptr;
}

AesGcm& AesGcm::operator=(AesGcm&& other) noexcept {
  if (this != &other) {
    EVP_CIPHER_CTX_free(enc_);
    EVP_CIPHER_CTX_free(dec_);
    enc_ = other.enc_;
    dec_ = other.dec_;
    other.enc_ = nullptr;
    other.dec_ = nullptr;
  }
  return *this;
}

void AesGcm::seal(const Nonce& nonce, ByteView aad, ByteView plaintext,
                  std::span<std::uint8_t> ciphertext, Tag& tag) {
  int len = 0;
  if (EVP_EncryptInit_ex(enc_, nullptr, nullptr, nullptr, nonce.data()) != 1)
    fail(Errc::IoFailure, "AES-GCM set nonce");
  if (!aad.empty() &&
      EVP_EncryptUpdate(enc_, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
    fail(Errc::IoFailure, "AES-GCM aad");
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(enc_, ciphertext.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    fail(Errc::IoFailure, "AES-GCM encrypt");
  if (EVP_EncryptFinal_ex(enc_, ciphertext.data() + plaintext.size(), &len) != 1)
    fail(Errc::IoFailure, "AES-GCM final");
  if (EVP_CIPHER_CTX_ctrl(enc_, EVP_CTRL_GCM_GET_TAG, kTagBytes, tag.data()) != 1)
    fail(Errc::IoFailure, "AES-GCM get tag");
}

bool AesGcm::open(const Nonce& nonce, ByteView aad, ByteView ciphertext, const Tag& tag,
                  std::span<std::uint8_t> plaintext) {
  int len = 0;
  if (EVP_DecryptInit_ex(dec_, nullptr, nullptr, nullptr, nonce.data()) != 1) return false;
  if (!aad.empty() &&
      EVP_DecryptUpdate(dec_, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
    return false;
  if (!ciphertext.empty() &&
      EVP_DecryptUpdate(dec_, plaintext.data(), &len, ciphertext.data(),
                        static_cast<int>(ciphertext.size())) != 1)
    return false;
  if (EVP_CIPHER_CTX_ctrl(dec_, EVP_CTRL_GCM_SET_TAG, kTagBytes,
                          const_cast<std::uint8_t*>(tag.data())) != 1)
    return false;
  return EVP_DecryptFinal_ex(dec_, plaintext.data() + ciphertext.size(), &len) == 1;
}

void random_bytes(std::span<std::uint8_t> out) {
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
    fail(Errc::IoFailure, "RAND_bytes");
}

AeadKey random_key() {
  AeadKey k;
  random_bytes(k);
  return k;
}

AeadKey derive_key(std::string_view label, std::uint64_t seed) {
  std::string material(label);
  for (int i = 0; i < 8; ++i) material.push_back(static_cast<char>(seed >> (8 * i)));
  AeadKey k;
  SHA256(reinterpret_cast<const unsigned char*>(material.data()), material.size(), k.data());
  return k;
}

}  // namespace fidstore
