#include "fidstore/client.hpp"

#include <algorithm>

#include "fidstore/values.hpp"

namespace fidstore {

Bytes ClientEnvelope::serialize() const {
  Bytes out;
  out.reserve(wire_size());
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), tag.begin(), tag.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  return out;
}

ClientEnvelope ClientEnvelope::parse(ByteView wire) {
  if (wire.size() < kAeadOverhead) fail(Errc::AuthFailure, "envelope shorter than overhead");
  ClientEnvelope env;
  std::copy_n(wire.begin(), kNonceBytes, env.nonce.begin());
  std::copy_n(wire.begin() + kNonceBytes, kTagBytes, env.tag.begin());
  env.ciphertext.assign(wire.begin() + kAeadOverhead, wire.end());
  return env;
}

ClientEnvelope EnvelopeCipher::encrypt(ByteView plaintext) {
  ClientEnvelope env;
  random_bytes(env.nonce);
  env.ciphertext.resize(plaintext.size());
  std::lock_guard lock(mu_);
  aead_.seal(env.nonce, {}, plaintext, env.ciphertext, env.tag);
  return env;
}

Bytes EnvelopeCipher::decrypt(const ClientEnvelope& env) {
  Bytes out(env.ciphertext.size());
  std::lock_guard lock(mu_);
  if (!aead_.open(env.nonce, {}, env.ciphertext, env.tag, out))
    fail(Errc::AuthFailure, "envelope does not authenticate");
  return out;
}

ClientEnvelope ClientSession::encrypt_int(std::int64_t v) { return encrypt(encode_int64(v)); }

std::int64_t ClientSession::decrypt_int(const ClientEnvelope& env) {
  auto v = decode_int64(decrypt(env));
  if (!v) fail(Errc::TypeMismatch, "envelope does not hold an Int64");
  return *v;
}

ClientEnvelope ClientSession::encrypt_text(std::string_view text, std::size_t padded_width) {
  const auto raw = to_bytes(text);
  return encrypt(padded_width == 0 ? raw : pad_value(raw, padded_width));
}

std::string ClientSession::decrypt_text(const ClientEnvelope& env, std::size_t padded_width) {
  const auto plain = decrypt(env);
  return to_string(padded_width == 0 ? plain : unpad_value(plain));
}

}  // namespace fidstore
