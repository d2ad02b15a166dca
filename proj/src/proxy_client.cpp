#include "fidstore/proxy_client.hpp"

#include <algorithm>

#include "fidstore/trace.hpp"

namespace fidstore {

Bytes ProxyClient::call(MsgKind kind, std::uint64_t query_id, ByteView payload) {
  const Bytes response = channel_.call(encode_request(kind, query_id, payload));
  return unwrap_response(response);
}

void ProxyClient::observe(const std::vector<Fid>& fids) {
  if (!trace_) return;
  for (auto f : fids) trace_->fid(f);
}

std::vector<Fid> ProxyClient::ingest(std::uint64_t query_id, const std::vector<ClientEnvelope>& envs,
                                     std::optional<std::uint32_t> target) {
  Bytes payload;
  ByteWriter w(payload);
  w.u8(target ? 1 : 0);
  if (target) w.u32(*target);
  w.u32(static_cast<std::uint32_t>(envs.size()));
  for (const auto& e : envs) w.blob(e.serialize());
  const Bytes resp = call(MsgKind::Ingest, query_id, payload);
  ByteReader r(resp);
  auto fids = get_fids(r);
  observe(fids);
  return fids;
}

Fid ProxyClient::ingest(std::uint64_t query_id, const ClientEnvelope& env,
                        std::optional<std::uint32_t> target) {
  return ingest(query_id, std::vector<ClientEnvelope>{env}, target).at(0);
}

std::vector<ClientEnvelope> ProxyClient::reveal(std::uint64_t query_id, const std::vector<Fid>& fids) {
  Bytes payload;
  ByteWriter w(payload);
  put_fids(w, fids);
  observe(fids);
  const Bytes resp = call(MsgKind::Reveal, query_id, payload);
  ByteReader r(resp);
  const auto n = r.u32();
  std::vector<ClientEnvelope> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(ClientEnvelope::parse(r.blob()));
  return out;
}

ClientEnvelope ProxyClient::reveal(std::uint64_t query_id, Fid fid) {
  return reveal(query_id, std::vector<Fid>{fid}).at(0);
}

std::vector<OpOutcome> ProxyClient::exec_batch(std::uint64_t query_id, std::vector<OperatorRequest> reqs) {
  std::vector<OpOutcome> out;
  out.reserve(reqs.size());
  for (std::size_t begin = 0; begin < reqs.size(); begin += batch_size_) {
    const std::size_t end = std::min(reqs.size(), begin + batch_size_);
    if (reqs[begin].chain_prev && begin > 0) {
      const OpOutcome& prev = out.back();
      if (prev.ok() && prev.response->kind == OperatorResponse::Kind::NewFid &&
          !reqs[begin].operands.empty())
        reqs[begin].operands[0] = prev.response->fid;
    }
    Bytes payload;
    ByteWriter w(payload);
    w.u32(static_cast<std::uint32_t>(end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      put_op_request(w, reqs[i]);
      if (trace_) {
        trace_->op_kind(static_cast<std::uint8_t>(reqs[i].op));
        observe(reqs[i].operands);
      }
    }
    const Bytes resp = call(MsgKind::ExecBatch, query_id, payload);
    ByteReader r(resp);
    const auto n = r.u32();
    if (n != end - begin) fail(Errc::ProtocolError, "batch response size mismatch");
    for (std::uint32_t i = 0; i < n; ++i) {
      OpOutcome o = get_outcome(r);
      if (trace_ && o.ok()) {
        if (o.response->kind == OperatorResponse::Kind::PlainBool)
          trace_->cmp_bool(o.response->value);
        else
          trace_->fid(o.response->fid);
      }
      out.push_back(std::move(o));
    }
  }
  return out;
}

OperatorResponse ProxyClient::exec(std::uint64_t query_id, const OperatorRequest& req) {
  auto out = exec_batch(query_id, {req});
  if (!out.at(0).ok()) fail(out[0].error, std::string(op_name(req.op)));
  return *out[0].response;
}

std::vector<Fid> ProxyClient::promote(std::uint64_t query_id, const std::vector<Fid>& temp_fids,
                                      std::uint32_t perm_partition) {
  Bytes payload;
  ByteWriter w(payload);
  w.u32(perm_partition);
  put_fids(w, temp_fids);
  observe(temp_fids);
  const Bytes resp = call(MsgKind::Promote, query_id, payload);
  ByteReader r(resp);
  auto fids = get_fids(r);
  observe(fids);
  return fids;
}

std::uint64_t ProxyClient::delete_batch(const std::vector<Fid>& fids) {
  std::uint64_t deleted = 0;
  for (std::size_t begin = 0; begin < fids.size(); begin += batch_size_) {
    const std::vector<Fid> chunk(fids.begin() + static_cast<std::ptrdiff_t>(begin),
                                 fids.begin() + static_cast<std::ptrdiff_t>(std::min(fids.size(), begin + batch_size_)));
    Bytes payload;
    ByteWriter w(payload);
    put_fids(w, chunk);
    observe(chunk);
    const Bytes resp = call(MsgKind::DeleteBatch, 0, payload);
    deleted += ByteReader(resp).u64();
  }
  return deleted;
}

std::uint64_t ProxyClient::flush_log(std::uint64_t query_id) {
  const Bytes resp = call(MsgKind::FlushLog, query_id, {});
  return ByteReader(resp).u64();
}

std::uint32_t ProxyClient::create_partition(PartitionKind kind, ValueLayout layout) {
  Bytes payload;
  ByteWriter w(payload);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u8(static_cast<std::uint8_t>(layout.kind));
  w.u32(layout.width);
  const Bytes resp = call(MsgKind::CreatePartition, 0, payload);
  return ByteReader(resp).u32();
}

void ProxyClient::end_query(std::uint64_t query_id) { call(MsgKind::EndQuery, query_id, {}); }

void ProxyClient::prefetch(std::uint32_t partition) {
  Bytes payload;
  ByteWriter(payload).u32(partition);
  call(MsgKind::Prefetch, 0, payload);
}

std::vector<bool> ProxyClient::probe_live(const std::vector<Fid>& fids) {
  Bytes payload;
  ByteWriter w(payload);
  put_fids(w, fids);
  observe(fids);
  const Bytes resp = call(MsgKind::ProbeLive, 0, payload);
  ByteReader r(resp);
  const auto n = r.u32();
  std::vector<bool> out(n);
  for (std::uint32_t i = 0; i < n; ++i) out[i] = r.u8() != 0;
  return out;
}

std::vector<Fid> ProxyClient::list_live() {
  const Bytes resp = call(MsgKind::ListLive, 0, {});
  ByteReader r(resp);
  auto fids = get_fids(r);
  observe(fids);
  return fids;
}

std::uint64_t ProxyClient::reset_temporaries() {
  const Bytes resp = call(MsgKind::ResetTemporaries, 0, {});
  return ByteReader(resp).u64();
}

}  // namespace fidstore
