#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "model_store.hpp"
#include "prefix_replay.hpp"
#include "shadow_db.hpp"

using namespace oracle;

TEST_CASE("model store: fresh offsets count from zero") {
  ModelStore m;
  const auto p = m.create(false, 4);
  CHECK(m.put(p, "abcd").fid == 0);
  CHECK(m.put(p, "efgh").fid == 1);
  const auto q = m.create(true, 0);
  CHECK(m.put(q, "x").fid == (1ULL << 48));
}

TEST_CASE("model store: delete then put reuses the offset") {
  ModelStore m;
  const auto p = m.create(true, 0);
  const auto a = m.put(p, "one").fid;
  m.put(p, "two");
  CHECK(m.remove(a).error.empty());
  CHECK(m.remove(a).error == "NotLive");
  CHECK_FALSE(m.get(a));
  CHECK(m.put(p, "three").fid == a);
  CHECK(m.alloc_counter(p) == 2);
  CHECK(m.fresh() == 2);
  CHECK(m.reused() == 1);
}

TEST_CASE("model store: free list is LIFO") {
  ModelStore m;
  const auto p = m.create(true, 0);
  const auto a = m.put(p, "a").fid;
  const auto b = m.put(p, "b").fid;
  m.remove(a);
  m.remove(b);
  CHECK(m.put(p, "c").fid == b);
  CHECK(m.put(p, "d").fid == a);
}

TEST_CASE("model store: lifetime rules") {
  ModelStore m;
  const auto t = m.create(false, 0);
  const auto p = m.create(true, 0);
  const auto f = m.put(t, "secret").fid;
  const auto g = m.promote(f, p);
  CHECK(g.error.empty());
  CHECK(*m.get(g.fid) == "secret");
  CHECK(*m.get(f) == "secret");
  CHECK(m.promote(g.fid, p).error == "WrongPartitionKind");
  CHECK(m.drop(t).count == 1);
  CHECK_FALSE(m.get(f));
  CHECK(m.drop(p).error == "WrongPartitionKind");
  CHECK(m.put(t, "again").fid == m.fid_of(t, 0));
  CHECK(m.put(p, std::string(5000, 'x')).error == "ValueTooLarge");
  const auto w = m.create(true, 4);
  CHECK(m.put(w, "abc").error == "WidthMismatch");
}

TEST_CASE("prefix replay: states per prefix") {
  PrefixReplay r;
  r.create(0, 0);
  r.put(1, "a");
  r.put(2, "b");
  r.remove(1);
  CHECK(r.state(0).empty());
  CHECK(r.state(1).at(0).live.empty());
  CHECK(r.state(3).at(0).live.size() == 2);
  CHECK(r.state(3).at(0).alloc == 3);
  const auto last = r.state(4);
  CHECK(last.at(0).live.size() == 1);
  CHECK(last.at(0).alloc == 3);
  CHECK(r.match(last, 0) == 4);
  CHECK(r.match(r.state(2), 0) == 2);
  CHECK(r.match(r.state(2), 3) == -1);
}

TEST_CASE("shadow db: empty and single row") {
  ShadowDb db;
  const auto t = db.create_table();
  db.begin(1);
  CHECK(db.scan(1, t, 0, UINT64_MAX).empty());
  CHECK(db.insert(1, t, 0, {std::int64_t{7}, std::string("x")}).empty());
  CHECK(db.scan(1, t, 0, UINT64_MAX).size() == 1);
  db.commit(1);
  CHECK(db.committed(t).at(0) == ShadowRow{std::int64_t{7}, std::string("x")});
}

TEST_CASE("shadow db: snapshot isolation") {
  ShadowDb db;
  const auto t = db.create_table();
  db.begin(1);
  db.insert(1, t, 0, {std::int64_t{1}});
  db.commit(1);

  db.begin(2);
  db.begin(3);
  CHECK(db.update(2, t, 0, {std::int64_t{2}}).empty());
  CHECK(db.update(3, t, 0, {std::int64_t{3}}) == "WriteConflict");
  CHECK(std::get<std::int64_t>((*db.read(3, t, 0))[0]) == 1);
  db.commit(2);
  CHECK(std::get<std::int64_t>((*db.read(3, t, 0))[0]) == 1);
  CHECK(db.update(3, t, 0, {std::int64_t{3}}) == "WriteConflict");
  db.abort(3);

  db.begin(4);
  db.begin(5);
  db.insert(4, t, 1, {std::int64_t{9}});
  CHECK(db.update(5, t, 1, {std::int64_t{9}}) == "RowNotVisible");
  CHECK(db.remove(4, t, 0).empty());
  CHECK_FALSE(db.read(4, t, 0));
  CHECK(db.update(4, t, 0, {std::int64_t{5}}) == "RowNotVisible");
  db.abort(4);
  CHECK(db.committed(t).size() == 1);
  CHECK(db.read(5, t, 0));
  db.commit(5);
}
