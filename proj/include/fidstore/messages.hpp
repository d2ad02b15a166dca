#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fidstore/bytes.hpp"
#include "fidstore/client.hpp"
#include "fidstore/fid.hpp"
#include "fidstore/operators.hpp"
#include "fidstore/store_types.hpp"

namespace fidstore {

// Cross-zone request: {u8 msg_kind, u64 query_id, payload}.
// Response: {u8 status, payload} where status 0 = ok and 1 = error
// followed by {u8 errc, str detail}. FIDs travel as u64 little-endian,
// booleans as u8.
enum class MsgKind : std::uint8_t {
  Ingest = 1,
  Reveal = 2,
  ExecBatch = 3,
  Promote = 4,
  DeleteBatch = 5,
  FlushLog = 6,
  CreatePartition = 7,
  EndQuery = 8,
  Prefetch = 9,
  ProbeLive = 10,
  ListLive = 11,
  ResetTemporaries = 12,
};

std::string_view msg_kind_name(MsgKind k) noexcept;

struct Request {
  MsgKind kind = MsgKind::FlushLog;
  std::uint64_t query_id = 0;
  Bytes payload;
};

Bytes encode_request(MsgKind kind, std::uint64_t query_id, ByteView payload);
Request decode_request(ByteView wire);

Bytes ok_response(ByteView payload);
Bytes error_response(Errc code, const std::string& detail);
// Returns the payload of an ok response; raises the carried error otherwise.
Bytes unwrap_response(ByteView wire);

void put_fids(ByteWriter& w, const std::vector<Fid>& fids);
std::vector<Fid> get_fids(ByteReader& r);

void put_op_request(ByteWriter& w, const OperatorRequest& req);
OperatorRequest get_op_request(ByteReader& r);
void put_outcome(ByteWriter& w, const OpOutcome& o);
OpOutcome get_outcome(ByteReader& r);

}  // namespace fidstore
