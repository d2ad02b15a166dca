#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fidstore/error.hpp"
#include "fidstore/fid.hpp"
#include "fidstore/values.hpp"

namespace fidstore {

enum class OpCode : std::uint8_t {
  Add = 1,
  Sub = 2,
  Mul = 3,
  Div = 4,
  Mod = 5,
  CmpLt = 6,
  CmpEq = 7,
  CmpGt = 8,
  SumAgg = 9,
  MinAgg = 10,
  MaxAgg = 11,
  AvgAgg = 12,
};

std::string_view op_name(OpCode op) noexcept;
bool is_comparison(OpCode op) noexcept;
bool is_aggregate(OpCode op) noexcept;

struct OperatorRequest {
  OpCode op = OpCode::Add;
  ValueType value_type = ValueType::Int64;
  std::vector<Fid> operands;
  // Replace operands[0] with the result of the previous request in the same
  // batch. Lets a running aggregate stream through one round trip.
  bool chain_prev = false;

  friend bool operator==(const OperatorRequest&, const OperatorRequest&) = default;
};

struct OperatorResponse {
  enum class Kind : std::uint8_t { NewFid = 0, PlainBool = 1 };

  Kind kind = Kind::NewFid;
  Fid fid{};
  bool value = false;

  static OperatorResponse new_fid(Fid f) { return {Kind::NewFid, f, false}; }
  static OperatorResponse plain_bool(bool b) { return {Kind::PlainBool, Fid{}, b}; }

  friend bool operator==(const OperatorResponse&, const OperatorResponse&) = default;
};

// One positional batch entry: either a response or the error it raised.
struct OpOutcome {
  std::optional<OperatorResponse> response;
  Errc error = Errc::ProtocolError;

  bool ok() const noexcept { return response.has_value(); }
  friend bool operator==(const OpOutcome& a, const OpOutcome& b) {
    return a.response == b.response && (a.ok() || a.error == b.error);
  }
};

// Plaintext evaluation over decoded operands. Arithmetic and aggregates
// return the encoded result; comparisons return a bool.
struct Evaluated {
  std::optional<Bytes> value;
  bool flag = false;
};
Evaluated evaluate(OpCode op, ValueType type, const std::vector<Bytes>& operands);

}  // namespace fidstore
