#include "doctest.h"

#include "fidstore/zone_sim.hpp"

using namespace fidstore;

namespace {

WorkloadSpec small(Mode mode = Mode::ReadWrite) {
  WorkloadSpec s;
  s.mode = mode;
  s.rows_per_table = 200;
  s.duration_ops = 2000;
  s.maintenance_every = 250;
  return s;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::ProtocolError;
}

TxnPlan plan(std::uint64_t key, const std::string& text) {
  return {Stmt{StmtKind::PointSelect, 0, key, 0, 0, {}},
          Stmt{StmtKind::UpdateNonIndex, 0, key, 0, 0, text},
          Stmt{StmtKind::Insert, 0, 1000 + key, 0, 5, text}};
}

}  // namespace

TEST_CASE("runs are deterministic per seed") {
  ZoneSim a, b, c;
  const auto ra = a.run_workload(11, small());
  const auto rb = b.run_workload(11, small());
  const auto rc = c.run_workload(12, small());
  CHECK(ra.trace_digest == rb.trace_digest);
  CHECK(ra.to_json() == rb.to_json());
  CHECK(ra.trace_digest != rc.trace_digest);
  CHECK(ra.content_mismatches == 0);
  CHECK(ra.final_invariant.holds);
  CHECK(ra.txns_committed > 0);
}

TEST_CASE("recover without a crash") {
  ZoneSim sim;
  CHECK(code_of([&] { sim.recover_all(); }) == Errc::NoCrashPending);
}

TEST_CASE("privacy-only crash pauses the integrity zone") {
  ZoneSim sim;
  sim.load(small(), 3);
  const auto txn = sim.db().begin();
  CrashPoint p;
  p.target = CrashTarget::PrivacyZone;
  sim.inject_crash(p);
  CHECK(sim.privacy_down());
  CHECK(code_of([&] { sim.db().ingest(txn, sim.client().encrypt_int(1)); }) == Errc::PrivacyZoneUnavailable);
  const auto rep = sim.recover_all();
  CHECK(rep.integrity_paused);
  CHECK(rep.privacy_replayed);
  CHECK_FALSE(rep.integrity_replayed);
  CHECK(rep.invariant.holds);
  CHECK(sim.db().state(txn) == TxnState::Aborted);
}

TEST_CASE("crash between privacy flush and db commit leaves collectable orphans") {
  ZoneSim sim;
  const auto rep = sim.run_workload(5, small(), CrashPoint::standard(CrashKind::AfterPrivacyFlushBeforeDbCommit));
  REQUIRE(rep.crash_fired);
  REQUIRE(rep.recovery);
  CHECK(rep.recovery->integrity_replayed);
  CHECK_FALSE(rep.recovery->privacy_replayed);
  CHECK(rep.orphans_pre_gc > 0);
  CHECK(rep.orphans_post_gc == 0);
  CHECK(rep.recovery->invariant.violations == 0);
  CHECK(rep.final_invariant.holds);
}

TEST_CASE("every crash kind recovers with the invariant intact") {
  for (auto kind : kAllCrashKinds) {
    ZoneSim sim;
    auto point = CrashPoint::standard(kind, kind == CrashKind::DuringOrphanGc ? 1 : 2, 3000);
    if (kind == CrashKind::RandomByte) point.occurrence = 500;
    const auto rep = sim.run_workload(9, small(), point);
    INFO(crash_kind_name(kind));
    CHECK(rep.crash_fired);
    CHECK(rep.final_invariant.holds);
    CHECK(rep.content_mismatches == 0);
  }
}

TEST_CASE("invariant detector flags a dangling fid") {
  ZoneSim sim;
  sim.load(small(), 1);
  REQUIRE(sim.check_invariant().holds);
  const auto refs = sim.db().visible_refs();
  REQUIRE_FALSE(refs.empty());
  sim.privacy().store().remove(refs.front().fid);
  const auto inv = sim.check_invariant();
  CHECK_FALSE(inv.holds);
  CHECK(inv.violations == 1);
  REQUIRE(inv.dangling.size() == 1);
  CHECK(inv.dangling[0] == refs.front().fid);
}

TEST_CASE("trace indistinguishability") {
  const std::vector<TxnPlan> a{plan(3, "alpha"), plan(7, "beta")};
  const std::vector<TxnPlan> b{plan(3, "gamma"), plan(7, "delta")};
  CHECK(trace_indistinguishability(a, b));
  std::vector<TxnPlan> c = a;
  c[1][0].kind = StmtKind::RangeScan;
  CHECK(code_of([&] { trace_indistinguishability(a, c); }) == Errc::StructureMismatch);
  std::vector<TxnPlan> d = a;
  d.pop_back();
  CHECK(code_of([&] { trace_indistinguishability(a, d); }) == Errc::StructureMismatch);
}
