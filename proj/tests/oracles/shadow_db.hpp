#pragma once

// Plaintext reference engine. Each row keeps its committed history as
// (commit timestamp, value or tombstone); a transaction reads the history at
// its snapshot, overlaid with its own pending writes. The first writer of a
// row holds it until commit or abort; a later writer, or a writer whose
// snapshot predates the row's last commit, conflicts.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace oracle {

using ShadowValue = std::variant<std::int64_t, std::string>;
using ShadowRow = std::vector<ShadowValue>;

class ShadowDb {
 public:
  std::size_t create_table() {
    tables_.emplace_back();
    return tables_.size() - 1;
  }

  void begin(std::uint64_t txn) { txns_[txn] = Txn{clock_, {}}; }

  std::string insert(std::uint64_t txn, std::size_t table, std::uint64_t row, ShadowRow values) {
    auto& t = tables_.at(table);
    if (t.count(row) || owners_.count({table, row})) return "DuplicateRow";
    t[row];
    txns_.at(txn).writes[{table, row}] = std::move(values);
    owners_[{table, row}] = txn;
    return {};
  }

  std::string update(std::uint64_t txn, std::size_t table, std::uint64_t row, ShadowRow values) {
    return write(txn, table, row, std::move(values));
  }

  std::string remove(std::uint64_t txn, std::size_t table, std::uint64_t row) {
    return write(txn, table, row, std::nullopt);
  }

  std::optional<ShadowRow> read(std::uint64_t txn, std::size_t table, std::uint64_t row) const {
    const Txn& tx = txns_.at(txn);
    auto w = tx.writes.find({table, row});
    if (w != tx.writes.end()) return w->second;
    const auto& t = tables_.at(table);
    auto it = t.find(row);
    if (it == t.end()) return std::nullopt;
    std::optional<ShadowRow> v;
    for (const auto& [ts, val] : it->second)
      if (ts <= tx.snapshot) v = val;
    return v;
  }

  std::vector<std::pair<std::uint64_t, ShadowRow>> scan(std::uint64_t txn, std::size_t table, std::uint64_t lo,
                                                        std::uint64_t hi) const {
    std::vector<std::pair<std::uint64_t, ShadowRow>> out;
    for (const auto& [row, hist] : tables_.at(table)) {
      if (row < lo || row > hi) continue;
      if (auto v = read(txn, table, row)) out.emplace_back(row, *v);
    }
    return out;
  }

  void commit(std::uint64_t txn) {
    Txn& tx = txns_.at(txn);
    if (!tx.writes.empty()) {
      ++clock_;
      for (auto& [key, val] : tx.writes) tables_[key.first][key.second].emplace_back(clock_, val);
    }
    finish(txn);
  }

  void abort(std::uint64_t txn) {
    Txn& tx = txns_.at(txn);
    for (const auto& [key, val] : tx.writes) {
      auto& t = tables_[key.first];
      auto it = t.find(key.second);
      if (it != t.end() && it->second.empty()) t.erase(it);
    }
    finish(txn);
  }

  // Latest committed state.
  std::map<std::uint64_t, ShadowRow> committed(std::size_t table) const {
    std::map<std::uint64_t, ShadowRow> out;
    for (const auto& [row, hist] : tables_.at(table))
      if (!hist.empty() && hist.back().second) out[row] = *hist.back().second;
    return out;
  }

 private:
  struct Txn {
    std::uint64_t snapshot = 0;
    std::map<std::pair<std::size_t, std::uint64_t>, std::optional<ShadowRow>> writes;
  };
  using History = std::vector<std::pair<std::uint64_t, std::optional<ShadowRow>>>;

  std::string write(std::uint64_t txn, std::size_t table, std::uint64_t row, std::optional<ShadowRow> v) {
    if (!read(txn, table, row)) return "RowNotVisible";
    auto owner = owners_.find({table, row});
    if (owner != owners_.end() && owner->second != txn) return "WriteConflict";
    const auto& hist = tables_.at(table).at(row);
    if (!hist.empty() && hist.back().first > txns_.at(txn).snapshot) return "WriteConflict";
    txns_.at(txn).writes[{table, row}] = std::move(v);
    owners_[{table, row}] = txn;
    return {};
  }

  void finish(std::uint64_t txn) {
    for (const auto& [key, val] : txns_.at(txn).writes) owners_.erase(key);
    txns_.erase(txn);
  }

  std::vector<std::map<std::uint64_t, History>> tables_;
  std::map<std::uint64_t, Txn> txns_;
  std::map<std::pair<std::size_t, std::uint64_t>, std::uint64_t> owners_;
  std::uint64_t clock_ = 0;
};

}  // namespace oracle
