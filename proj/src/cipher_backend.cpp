#include "fidstore/cipher_backend.hpp"

#include "fidstore/values.hpp"

namespace fidstore {

CipherBackend::CipherBackend(const AeadKey& client_key, const AeadKey& storage_key)
    : client_(client_key), client_cipher_(client_key), storage_(storage_key) {}

Bytes CipherBackend::open_client(const ClientEnvelope& env) {
  ++decrypts_;
  return client_cipher_.decrypt(env);
}

ClientEnvelope CipherBackend::seal_client(ByteView plain) {
  ++encrypts_;
  return client_cipher_.encrypt(plain);
}

Bytes CipherBackend::open_stored(const ClientEnvelope& env) {
  ++decrypts_;
  return storage_.decrypt(env);
}

ClientEnvelope CipherBackend::seal_stored(ByteView plain) {
  ++encrypts_;
  return storage_.encrypt(plain);
}

std::map<std::uint64_t, CipherBackend::Row>* CipherBackend::table_rows(std::uint32_t table) {
  if (table >= tables_.size()) fail(Errc::UnknownTable, "cipher backend table");
  return &tables_[table];
}

std::optional<std::uint64_t> CipherBackend::row_of(std::uint32_t table, std::uint64_t key) const {
  if (table >= keys_.size()) return std::nullopt;
  auto it = keys_[table].find(key);
  if (it == keys_[table].end()) return std::nullopt;
  return it->second;
}

std::uint64_t CipherBackend::insert(std::uint32_t table, std::uint64_t key, const ClientEnvelope& k,
                                    const ClientEnvelope& c) {
  auto* rows = table_rows(table);
  Row r;
  r.key = key;
  r.k = seal_stored(open_client(k));
  r.c = seal_stored(open_client(c));
  const auto id = next_row_++;
  (*rows)[id] = std::move(r);
  keys_[table][key] = id;
  return id;
}

std::optional<ClientEnvelope> CipherBackend::point_select(std::uint32_t table, std::uint64_t key) {
  auto* rows = table_rows(table);
  const auto id = row_of(table, key);
  if (!id) return std::nullopt;
  return seal_client(open_stored(rows->at(*id).c));
}

std::vector<ClientEnvelope> CipherBackend::range_scan(std::uint32_t table, std::uint64_t key, std::uint64_t span) {
  auto* rows = table_rows(table);
  std::vector<ClientEnvelope> out;
  const auto lo = row_of(table, key);
  if (!lo) return out;
  for (auto it = rows->lower_bound(*lo); it != rows->end() && it->first < *lo + span; ++it)
    out.push_back(seal_client(open_stored(it->second.c)));
  return out;
}

std::optional<ClientEnvelope> CipherBackend::range_sum(std::uint32_t table, std::uint64_t key, std::uint64_t span) {
  auto* rows = table_rows(table);
  const auto lo = row_of(table, key);
  if (!lo) return std::nullopt;
  std::int64_t acc = 0;
  for (auto it = rows->lower_bound(*lo); it != rows->end() && it->first < *lo + span; ++it)
    acc += decode_int64(open_stored(it->second.k)).value_or(0);
  return seal_client(encode_int64(acc));
}

bool CipherBackend::update_index(std::uint32_t table, std::uint64_t key, const ClientEnvelope& delta) {
  auto* rows = table_rows(table);
  const auto id = row_of(table, key);
  if (!id) return false;
  Row& r = rows->at(*id);
  const auto k = decode_int64(open_stored(r.k)).value_or(0);
  const auto d = decode_int64(open_client(delta)).value_or(0);
  r.k = seal_stored(encode_int64(k + d));
  return true;
}

bool CipherBackend::update_non_index(std::uint32_t table, std::uint64_t key, const ClientEnvelope& c) {
  auto* rows = table_rows(table);
  const auto id = row_of(table, key);
  if (!id) return false;
  rows->at(*id).c = seal_stored(open_client(c));
  return true;
}

void CipherBackend::remove(std::uint32_t table, std::uint64_t key) {
  auto* rows = table_rows(table);
  if (const auto id = row_of(table, key)) {
    rows->erase(*id);
    keys_[table].erase(key);
  }
}

std::uint64_t CipherBackend::sensitive_bytes() const {
  std::uint64_t n = 0;
  for (const auto& t : tables_)
    for (const auto& [id, r] : t) n += r.k.wire_size() + r.c.wire_size();
  return n;
}

void CipherBackend::load(const WorkloadSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  for (std::uint32_t t = 0; t < spec.tables; ++t) {
    tables_.emplace_back();
    keys_.emplace_back();
    const auto table = static_cast<std::uint32_t>(tables_.size() - 1);
    for (std::uint64_t key = 1; key <= spec.rows_per_table; ++key) {
      const auto k = static_cast<std::int64_t>(rng() % 1000000);
      insert(table, key, client_.encrypt_int(k), client_.encrypt_text(make_c_text(key, rng), pad_width_));
    }
  }
}

CipherReport CipherBackend::run_workload(std::uint64_t seed, const WorkloadSpec& spec) {
  load(spec, seed);
  const auto enc0 = encrypts_;
  const auto dec0 = decrypts_;
  CipherReport rep;
  WorkloadGenerator gen(spec, seed);
  auto check = [&](const ClientEnvelope& env, std::uint64_t key) {
    ++rep.reveals;
    if (c_text_key(client_.decrypt_text(env, pad_width_)) != key) ++rep.content_mismatches;
  };
  while (rep.statements < spec.duration_ops) {
    for (const auto& st : gen.next_txn()) {
      if (rep.statements >= spec.duration_ops) break;
      ++rep.statements;
      switch (st.kind) {
        case StmtKind::PointSelect:
          ++rep.point_selects;
          if (auto env = point_select(st.table, st.key)) check(*env, st.key);
          break;
        case StmtKind::RangeScan: {
          const auto envs = range_scan(st.table, st.key, st.span);
          rep.reveals += envs.size();
          break;
        }
        case StmtKind::RangeSum:
          if (auto env = range_sum(st.table, st.key, st.span)) {
            ++rep.reveals;
            client_.decrypt_int(*env);
          }
          break;
        case StmtKind::UpdateIndex:
          update_index(st.table, st.key, client_.encrypt_int(st.value));
          break;
        case StmtKind::UpdateNonIndex:
          update_non_index(st.table, st.key, client_.encrypt_text(st.text, pad_width_));
          break;
        case StmtKind::DeleteInsert:
          remove(st.table, st.key);
          [[fallthrough]];
        case StmtKind::Insert:
          insert(st.table, st.key, client_.encrypt_int(st.value), client_.encrypt_text(st.text, pad_width_));
          break;
        case StmtKind::SelectWhere: {
          const auto bound = decode_int64(open_client(client_.encrypt_int(st.value))).value_or(0);
          std::uint64_t hits = 0;
          for (const auto& [id, r] : *table_rows(st.table))
            if (decode_int64(open_stored(r.k)).value_or(0) > bound) ++hits;
          (void)hits;
          break;
        }
      }
    }
  }
  rep.encrypts = encrypts_ - enc0;
  rep.decrypts = decrypts_ - dec0;
  return rep;
}

}  // namespace fidstore
