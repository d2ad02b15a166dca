#include "doctest.h"

#include <numeric>

#include "fidstore/channel.hpp"
#include "fidstore/privacy_proxy.hpp"
#include "fidstore/proxy_client.hpp"
#include "fidstore/trace.hpp"
#include "fidstore/vfs.hpp"

using namespace fidstore;

namespace {

const AeadKey kKey = derive_key("client", 1);

struct Rig {
  SimVfs disk;
  AdversaryTrace trace;
  PrivacyZone zone{disk, StoreConfig{}, kKey, &trace};
  Channel channel{&trace};
  ProxyClient client{channel, &trace};
  ClientSession session{kKey};

  Rig() {
    channel.connect([this](ByteView req) { return zone.handle(req); });
  }

  Fid ingest_int(std::uint64_t q, std::int64_t v) { return client.ingest(q, session.encrypt_int(v)); }
  std::int64_t reveal_int(std::uint64_t q, Fid f) { return session.decrypt_int(client.reveal(q, f)); }
};

OperatorRequest op(OpCode c, std::vector<Fid> operands, bool chain = false) {
  return OperatorRequest{c, ValueType::Int64, std::move(operands), chain};
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

}  // namespace

TEST_CASE("ingest then reveal") {
  Rig r;
  const auto f = r.ingest_int(1, 42);
  CHECK(r.reveal_int(1, f) == 42);
  const auto g = r.client.ingest(1, r.session.encrypt(to_bytes("hello")));
  CHECK(to_string(r.session.decrypt(r.client.reveal(1, g))) == "hello");
}

TEST_CASE("tampered envelope is rejected") {
  Rig r;
  auto env = r.session.encrypt_int(5);
  env.ciphertext[0] ^= 1;
  CHECK(code_of([&] { r.client.ingest(1, env); }) == Errc::AuthFailure);
}

TEST_CASE("arithmetic and comparison") {
  Rig r;
  const auto a = r.ingest_int(1, 3);
  const auto b = r.ingest_int(1, 4);
  const auto sum = r.client.exec(1, op(OpCode::Add, {a, b}));
  CHECK(sum.kind == OperatorResponse::Kind::NewFid);
  CHECK(r.reveal_int(1, sum.fid) == 7);
  const auto lt = r.client.exec(1, op(OpCode::CmpLt, {a, b}));
  CHECK(lt.kind == OperatorResponse::Kind::PlainBool);
  CHECK(lt.value);
  CHECK_FALSE(r.client.exec(1, op(OpCode::CmpGt, {a, b})).value);
}

TEST_CASE("aggregate over 1..100") {
  Rig r;
  std::vector<Fid> fids;
  for (int i = 1; i <= 100; ++i) fids.push_back(r.ingest_int(1, i));
  const auto s = r.client.exec(1, op(OpCode::SumAgg, fids));
  CHECK(r.reveal_int(1, s.fid) == 5050);
  const auto empty = r.client.exec(1, op(OpCode::SumAgg, {}));
  CHECK(r.reveal_int(1, empty.fid) == 0);
}

TEST_CASE("batching: round trips, empty batch, sequential equivalence") {
  Rig r;
  std::vector<Fid> xs;
  for (int i = 0; i < 512; ++i) xs.push_back(r.ingest_int(1, i));
  std::vector<OperatorRequest> reqs;
  for (int i = 0; i + 1 < 512; ++i) reqs.push_back(op(OpCode::Add, {xs[i], xs[i + 1]}));
  reqs.push_back(op(OpCode::Div, {xs[1], xs[0]}));

  r.channel.reset_counters();
  const auto batched = r.client.exec_batch(7, reqs);
  CHECK(r.channel.counters().round_trips == 2);

  r.channel.reset_counters();
  CHECK(r.client.exec_batch(7, {}).empty());
  CHECK(r.channel.counters().round_trips == 0);

  r.client.set_batch_size(1);
  const auto seq = r.client.exec_batch(8, reqs);
  REQUIRE(seq.size() == batched.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].ok() == batched[i].ok());
    if (!seq[i].ok()) {
      CHECK(seq[i].error == batched[i].error);
      continue;
    }
    CHECK(r.reveal_int(8, seq[i].response->fid) == r.reveal_int(7, batched[i].response->fid));
  }
  CHECK_FALSE(batched.back().ok());
  CHECK(batched.back().error == Errc::DivideByZero);
}

TEST_CASE("chained running sum across message boundaries") {
  Rig r;
  r.client.set_batch_size(16);
  std::vector<Fid> xs;
  for (int i = 1; i <= 100; ++i) xs.push_back(r.ingest_int(1, i));
  std::vector<OperatorRequest> reqs{op(OpCode::SumAgg, {xs[0]})};
  for (int i = 1; i < 100; ++i) reqs.push_back(op(OpCode::SumAgg, {Fid{}, xs[i]}, true));
  const auto out = r.client.exec_batch(1, reqs);
  CHECK(r.reveal_int(1, out.back().response->fid) == 5050);
}

TEST_CASE("operator errors") {
  Rig r;
  const auto zero = r.ingest_int(1, 0);
  const auto one = r.ingest_int(1, 1);
  const auto big = r.ingest_int(1, INT64_MAX);
  CHECK(code_of([&] { r.client.exec(1, op(OpCode::Div, {one, zero})); }) == Errc::DivideByZero);
  CHECK(code_of([&] { r.client.exec(1, op(OpCode::Add, {big, one})); }) == Errc::Overflow);
  r.client.end_query(1);
  CHECK(code_of([&] { r.client.exec(2, op(OpCode::Add, {one, one})); }) == Errc::NotLive);
}

TEST_CASE("end_query drops the temporary partition and is idempotent") {
  Rig r;
  const auto f = r.ingest_int(3, 9);
  CHECK(r.zone.proxy().active_queries() == 1);
  r.client.end_query(3);
  r.client.end_query(3);
  CHECK(r.zone.proxy().active_queries() == 0);
  CHECK_FALSE(r.zone.store().is_live(f));
}

TEST_CASE("plaintext never reaches the trace or the channel") {
  Rig r;
  Bytes seen;
  r.channel.set_tap([&](ByteView b) { seen.insert(seen.end(), b.begin(), b.end()); });
  const std::string sentinel = "SENTINEL-0xDEADBEEF-plaintext";
  const auto f = r.client.ingest(1, r.session.encrypt(to_bytes(sentinel)));
  r.zone.store().flush_log();
  CHECK(to_string(r.session.decrypt(r.client.reveal(1, f))) == sentinel);
  CHECK_FALSE(contains_subsequence(seen, to_bytes(sentinel)));
  CHECK(r.trace.to_jsonl().find(sentinel) == std::string::npos);
}
