#include "doctest.h"

#include "fidstore/zone_sim.hpp"
#include "shadow_run.hpp"

using namespace fidstore;

namespace {

Schema kv_schema() { return {{"id", ColumnType::PlainInt}, {"v", ColumnType::SensitiveInt}}; }

struct Db {
  ZoneSim sim;
  std::uint32_t t = sim.db().create_table("kv", kv_schema());

  IntegrityDb& db() { return sim.db(); }
  std::vector<Param> row(std::int64_t id, std::int64_t v) { return {id, sim.client().encrypt_int(v)}; }
  std::int64_t reveal(TxnId txn, Fid f) { return sim.client().decrypt_int(db().reveal(txn, {f})[0]); }
};

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::ProtocolError;
}

}  // namespace

TEST_CASE("sum over 1..1000 and over an empty table") {
  Db d;
  auto txn = d.db().begin();
  CHECK(d.reveal(txn, d.db().sum(txn, d.t, 1)) == 0);
  d.db().commit(txn);
  txn = d.db().begin();
  for (int i = 1; i <= 1000; ++i) d.db().insert_row(txn, d.t, d.row(i, i));
  d.db().commit(txn);
  txn = d.db().begin();
  CHECK(d.reveal(txn, d.db().sum(txn, d.t, 1)) == 500500);
  CHECK(d.reveal(txn, d.db().sum_range(txn, d.t, 1, 0, 9)) == 55);
  d.db().commit(txn);
}

TEST_CASE("predicate and single row") {
  Db d;
  auto txn = d.db().begin();
  const auto r = d.db().insert_row(txn, d.t, d.row(1, 5));
  d.db().commit(txn);
  txn = d.db().begin();
  CHECK(d.db().select_where(txn, d.t, 1, OpCode::CmpLt, d.sim.client().encrypt_int(6)).size() == 1);
  CHECK(d.db().select_where(txn, d.t, 1, OpCode::CmpGt, d.sim.client().encrypt_int(6)).empty());
  const auto got = d.db().get_row(txn, d.t, r);
  REQUIRE(got);
  CHECK(d.reveal(txn, std::get<Fid>(got->cells[1])) == 5);
  CHECK(code_of([&] { d.db().select_where(txn, d.t, 0, OpCode::CmpLt, d.sim.client().encrypt_int(6)); }) ==
        Errc::SchemaMismatch);
  d.db().commit(txn);
}

TEST_CASE("schema checks on sensitive columns") {
  Db d;
  const auto txn = d.db().begin();
  CHECK(code_of([&] { d.db().insert_row(txn, d.t, {std::int64_t{1}, std::int64_t{2}}); }) == Errc::SchemaMismatch);
  CHECK(code_of([&] { d.db().insert_row(txn, d.t, {std::int64_t{1}}); }) == Errc::SchemaMismatch);
  const auto tt = d.db().create_table("txt", {{"c", ColumnType::SensitiveBytes}});
  CHECK(code_of([&] { d.db().insert_row(txn, tt, {d.sim.client().encrypt_text("short", 0)}); }) ==
        Errc::SchemaMismatch);
  d.db().insert_row(txn, tt, {d.sim.client().encrypt_text("short", d.db().config().pad_width)});
  d.db().commit(txn);
}

TEST_CASE("snapshot isolation and first updater wins") {
  Db d;
  auto t0 = d.db().begin();
  const auto r = d.db().insert_row(t0, d.t, d.row(1, 1));
  auto other = d.db().begin();
  CHECK_FALSE(d.db().get_row(other, d.t, r));
  d.db().commit(t0);
  CHECK_FALSE(d.db().get_row(other, d.t, r));
  d.db().commit(other);

  const auto a = d.db().begin();
  const auto b = d.db().begin();
  d.db().update_row(a, d.t, r, d.row(1, 2));
  CHECK(code_of([&] { d.db().update_row(b, d.t, r, d.row(1, 3)); }) == Errc::WriteConflict);
  CHECK(d.db().state(b) == TxnState::Active);
  d.db().commit(a);
  CHECK(code_of([&] { d.db().update_row(b, d.t, r, d.row(1, 3)); }) == Errc::WriteConflict);
  CHECK(d.reveal(b, std::get<Fid>(d.db().get_row(b, d.t, r)->cells[1])) == 1);
  d.db().abort(b);
  CHECK(code_of([&] { d.db().abort(b); }) == Errc::TxnNotActive);

  const auto c = d.db().begin();
  CHECK(d.reveal(c, std::get<Fid>(d.db().get_row(c, d.t, r)->cells[1])) == 2);
  d.db().commit(c);
}

TEST_CASE("operator errors abort the transaction") {
  Db d;
  const auto txn = d.db().begin();
  const auto big = d.db().ingest(txn, d.sim.client().encrypt_int(INT64_MAX));
  const auto one = d.db().ingest(txn, d.sim.client().encrypt_int(1));
  CHECK(code_of([&] { d.db().exec(txn, {OpCode::Add, ValueType::Int64, {big, one}, false}); }) == Errc::Overflow);
  CHECK(d.db().state(txn) == TxnState::Aborted);
}

TEST_CASE("vacuum and orphan gc reclaim superseded and unreferenced fids") {
  Db d;
  auto txn = d.db().begin();
  const auto r1 = d.db().insert_row(txn, d.t, d.row(1, 1));
  const auto r2 = d.db().insert_row(txn, d.t, d.row(2, 2));
  d.db().commit(txn);
  const auto live_before = d.sim.privacy().store().live_permanent_fids().size();

  txn = d.db().begin();
  d.db().update_row(txn, d.t, r1, d.row(1, 10));
  d.db().delete_row(txn, d.t, r2);
  d.db().commit(txn);
  CHECK(d.sim.privacy().store().live_permanent_fids().size() == live_before + 1);
  CHECK(d.db().vacuum(d.t) == 2);
  CHECK(d.sim.privacy().store().live_permanent_fids().size() == live_before - 1);
  CHECK(d.db().vacuum(d.t) == 0);

  txn = d.db().begin();
  d.db().insert_row(txn, d.t, d.row(3, 3));
  d.db().abort(txn);
  CHECK(d.db().pending_reclaim() == 1);
  CHECK(d.db().vacuum(d.t) == 1);

  // An orphan: a permanent FID that no row references.
  const auto q = d.db().begin();
  const auto tmp = d.sim.proxy().ingest(q, d.sim.client().encrypt_int(99));
  d.sim.proxy().promote(q, {tmp}, d.db().partition(d.t));
  CHECK(code_of([&] { d.db().orphan_gc(); }) == Errc::NotQuiescent);
  d.db().commit(q);
  CHECK(d.db().orphan_gc() == 1);
  CHECK(d.db().orphan_gc() == 0);
  CHECK(d.sim.check_invariant().holds);
}

TEST_CASE("commit ordering") {
  Db d;
  d.db().clear_events();
  const auto txn = d.db().begin();
  d.db().insert_row(txn, d.t, d.row(1, 1));
  d.db().commit(txn);
  const auto ev = d.db().events();
  using K = ProtocolEvent::Kind;
  REQUIRE(ev.size() == 4);
  CHECK(ev[0].kind == K::Prepare);
  CHECK(ev[1].kind == K::PrivacyFlushed);
  CHECK(ev[2].kind == K::DbCommitDurable);
  CHECK(ev[3].kind == K::Committed);

  d.db().clear_events();
  const auto ro = d.db().begin();
  d.db().scan(ro, d.t);
  d.db().commit(ro);
  REQUIRE(d.db().events().size() == 1);
  CHECK(d.db().events()[0].kind == K::Committed);
}

TEST_CASE("recovery keeps committed rows and moves txn ids forward") {
  Db d;
  auto txn = d.db().begin();
  const auto r = d.db().insert_row(txn, d.t, d.row(1, 7));
  d.db().commit(txn);
  const auto committed = txn;
  const auto pending = d.db().begin();
  d.db().insert_row(pending, d.t, d.row(2, 8));

  d.sim.inject_crash(CrashPoint::standard(CrashKind::AfterDbCommit));
  const auto rep = d.sim.recover_all();
  CHECK(rep.db.committed_txns == 1);
  CHECK(rep.invariant.violations == 0);
  txn = d.db().begin();
  CHECK(txn > committed);
  CHECK_FALSE(d.db().get_row(txn, d.t, r + 1));
  CHECK(d.db().scan(txn, d.t).size() == 1);
  CHECK(d.reveal(txn, std::get<Fid>(d.db().get_row(txn, d.t, r)->cells[1])) == 7);
  d.db().commit(txn);
}

TEST_CASE("shadow equivalence, small mixed workload") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto st = shadowrun::run(seed, 600);
    INFO(st.first_mismatch);
    CHECK(st.mismatches == 0);
    CHECK(st.final_equal);
    CHECK(st.commits > 0);
    CHECK(st.errors > 0);
  }
}
