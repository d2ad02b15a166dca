#include "fidstore/messages.hpp"

namespace fidstore {

std::string_view msg_kind_name(MsgKind k) noexcept {
  switch (k) {
    case MsgKind::Ingest: return "Ingest";
    case MsgKind::Reveal: return "Reveal";
    case MsgKind::ExecBatch: return "ExecBatch";
    case MsgKind::Promote: return "Promote";
    case MsgKind::DeleteBatch: return "DeleteBatch";
    case MsgKind::FlushLog: return "FlushLog";
    case MsgKind::CreatePartition: return "CreatePartition";
    case MsgKind::EndQuery: return "EndQuery";
    case MsgKind::Prefetch: return "Prefetch";
    case MsgKind::ProbeLive: return "ProbeLive";
    case MsgKind::ListLive: return "ListLive";
    case MsgKind::ResetTemporaries: return "ResetTemporaries";
  }
  return "Unknown";
}

Bytes encode_request(MsgKind kind, std::uint64_t query_id, ByteView payload) {
  Bytes out;
  out.reserve(9 + payload.size());
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u64(query_id);
  w.raw(payload);
  return out;
}

Request decode_request(ByteView wire) {
  ByteReader r(wire);
  Request req;
  const auto kind = r.u8();
  if (kind < 1 || kind > static_cast<std::uint8_t>(MsgKind::ResetTemporaries))
    fail(Errc::ProtocolError, "unknown message kind " + std::to_string(kind));
  req.kind = static_cast<MsgKind>(kind);
  req.query_id = r.u64();
  auto rest = r.raw(r.remaining());
  req.payload.assign(rest.begin(), rest.end());
  return req;
}

Bytes ok_response(ByteView payload) {
  Bytes out;
  out.reserve(1 + payload.size());
  out.push_back(0);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes error_response(Errc code, const std::string& detail) {
  Bytes out;
  ByteWriter w(out);
  w.u8(1);
  w.u8(static_cast<std::uint8_t>(code));
  w.str(detail);
  return out;
}

Bytes unwrap_response(ByteView wire) {
  ByteReader r(wire);
  const auto status = r.u8();
  if (status == 0) {
    auto rest = r.raw(r.remaining());
    return Bytes(rest.begin(), rest.end());
  }
  if (status != 1) fail(Errc::ProtocolError, "bad response status");
  const auto code = static_cast<Errc>(r.u8());
  auto text = r.str();
  const auto prefix = std::string(errc_name(code)) + ": ";
  if (text.starts_with(prefix)) text.erase(0, prefix.size());
  fail(code, text);
}

void put_fids(ByteWriter& w, const std::vector<Fid>& fids) {
  w.u32(static_cast<std::uint32_t>(fids.size()));
  for (auto f : fids) w.u64(f.raw);
}

std::vector<Fid> get_fids(ByteReader& r) {
  const auto n = r.u32();
  if (n > r.remaining() / 8) fail(Errc::ProtocolError, "fid list longer than message");
  std::vector<Fid> out(n);
  for (auto& f : out) f.raw = r.u64();
  return out;
}

void put_op_request(ByteWriter& w, const OperatorRequest& req) {
  w.u8(static_cast<std::uint8_t>(req.op));
  w.u8(static_cast<std::uint8_t>(req.value_type));
  w.u8(req.chain_prev ? 1 : 0);
  put_fids(w, req.operands);
}

OperatorRequest get_op_request(ByteReader& r) {
  OperatorRequest req;
  const auto op = r.u8();
  if (op < 1 || op > static_cast<std::uint8_t>(OpCode::AvgAgg))
    fail(Errc::ProtocolError, "unknown operator");
  req.op = static_cast<OpCode>(op);
  const auto type = r.u8();
  if (type > static_cast<std::uint8_t>(ValueType::Bytes)) fail(Errc::ProtocolError, "unknown type");
  req.value_type = static_cast<ValueType>(type);
  req.chain_prev = r.u8() != 0;
  req.operands = get_fids(r);
  return req;
}

void put_outcome(ByteWriter& w, const OpOutcome& o) {
  if (!o.ok()) {
    w.u8(1);
    w.u8(static_cast<std::uint8_t>(o.error));
    return;
  }
  w.u8(0);
  w.u8(static_cast<std::uint8_t>(o.response->kind));
  if (o.response->kind == OperatorResponse::Kind::NewFid)
    w.u64(o.response->fid.raw);
  else
    w.u8(o.response->value ? 1 : 0);
}

OpOutcome get_outcome(ByteReader& r) {
  OpOutcome o;
  if (r.u8() != 0) {
    o.error = static_cast<Errc>(r.u8());
    return o;
  }
  const auto kind = r.u8();
  if (kind == 0)
    o.response = OperatorResponse::new_fid(Fid{r.u64()});
  else
    o.response = OperatorResponse::plain_bool(r.u8() != 0);
  return o;
}

}  // namespace fidstore
