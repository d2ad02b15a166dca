#include "fidstore/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fidstore {

std::string_view op_name(OpCode op) noexcept {
  switch (op) {
    case OpCode::Add: return "Add";
    case OpCode::Sub: return "Sub";
    case OpCode::Mul: return "Mul";
    case OpCode::Div: return "Div";
    case OpCode::Mod: return "Mod";
    case OpCode::CmpLt: return "CmpLt";
    case OpCode::CmpEq: return "CmpEq";
    case OpCode::CmpGt: return "CmpGt";
    case OpCode::SumAgg: return "SumAgg";
    case OpCode::MinAgg: return "MinAgg";
    case OpCode::MaxAgg: return "MaxAgg";
    case OpCode::AvgAgg: return "AvgAgg";
  }
  return "Unknown";
}

bool is_comparison(OpCode op) noexcept {
  return op == OpCode::CmpLt || op == OpCode::CmpEq || op == OpCode::CmpGt;
}

bool is_aggregate(OpCode op) noexcept {
  return op == OpCode::SumAgg || op == OpCode::MinAgg || op == OpCode::MaxAgg ||
         op == OpCode::AvgAgg;
}

namespace {

std::int64_t as_int(const Bytes& b) {
  auto v = decode_int64(b);
  if (!v) fail(Errc::TypeMismatch, "operand is not an Int64");
  return *v;
}

double as_float(const Bytes& b) {
  auto v = decode_float64(b);
  if (!v) fail(Errc::TypeMismatch, "operand is not a Float64");
  return *v;
}

std::int64_t int_binary(OpCode op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  switch (op) {
    case OpCode::Add:
      if (__builtin_add_overflow(a, b, &r)) fail(Errc::Overflow, "Int64 add");
      return r;
    case OpCode::Sub:
      if (__builtin_sub_overflow(a, b, &r)) fail(Errc::Overflow, "Int64 sub");
      return r;
    case OpCode::Mul:
      if (__builtin_mul_overflow(a, b, &r)) fail(Errc::Overflow, "Int64 mul");
      return r;
    case OpCode::Div:
    case OpCode::Mod:
      if (b == 0) fail(Errc::DivideByZero);
      if (a == std::numeric_limits<std::int64_t>::min() && b == -1)
        fail(Errc::Overflow, "Int64 division");
      return op == OpCode::Div ? a / b : a % b;
    default:
      fail(Errc::InvalidArgument, "not a binary arithmetic op");
  }
}

double float_binary(OpCode op, double a, double b) {
  switch (op) {
    case OpCode::Add: return a + b;
    case OpCode::Sub: return a - b;
    case OpCode::Mul: return a * b;
    case OpCode::Div:
      if (b == 0.0) fail(Errc::DivideByZero);
      return a / b;
    case OpCode::Mod:
      if (b == 0.0) fail(Errc::DivideByZero);
      return std::fmod(a, b);
    default:
      fail(Errc::InvalidArgument, "not a binary arithmetic op");
  }
}

// -1, 0, 1
int compare(ValueType type, const Bytes& a, const Bytes& b) {
  switch (type) {
    case ValueType::Int64: {
      const auto x = as_int(a), y = as_int(b);
      return (x > y) - (x < y);
    }
    case ValueType::Float64: {
      const auto x = as_float(a), y = as_float(b);
      return (x > y) - (x < y);
    }
    case ValueType::Bytes: {
      const auto c = std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end());
      return (c > 0) - (c < 0);
    }
  }
  return 0;
}

}  // namespace

Evaluated evaluate(OpCode op, ValueType type, const std::vector<Bytes>& xs) {
  Evaluated out;
  if (is_comparison(op)) {
    if (xs.size() != 2) fail(Errc::InvalidArgument, "comparison takes two operands");
    const int c = compare(type, xs[0], xs[1]);
    out.flag = op == OpCode::CmpLt ? c < 0 : op == OpCode::CmpEq ? c == 0 : c > 0;
    return out;
  }
  if (!is_aggregate(op)) {
    if (xs.size() != 2) fail(Errc::InvalidArgument, "binary op takes two operands");
    if (type == ValueType::Int64)
      out.value = encode_int64(int_binary(op, as_int(xs[0]), as_int(xs[1])));
    else if (type == ValueType::Float64)
      out.value = encode_float64(float_binary(op, as_float(xs[0]), as_float(xs[1])));
    else
      fail(Errc::TypeMismatch, "arithmetic over Bytes");
    return out;
  }

  if (op == OpCode::MinAgg || op == OpCode::MaxAgg) {
    if (xs.empty()) fail(Errc::InvalidArgument, "aggregate over no operands");
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      const int c = compare(type, xs[i], xs[best]);
      if (op == OpCode::MinAgg ? c < 0 : c > 0) best = i;
    }
    out.value = xs[best];
    return out;
  }
  if (type == ValueType::Bytes) fail(Errc::TypeMismatch, "arithmetic over Bytes");
  if (op == OpCode::AvgAgg && xs.empty()) fail(Errc::InvalidArgument, "average over no operands");

  if (type == ValueType::Int64) {
    std::int64_t sum = 0;
    long double wide = 0;
    for (const auto& x : xs) {
      const auto v = as_int(x);
      wide += v;
      if (op == OpCode::SumAgg && __builtin_add_overflow(sum, v, &sum))
        fail(Errc::Overflow, "Int64 sum");
    }
    if (op == OpCode::SumAgg)
      out.value = encode_int64(sum);
    else
      out.value = encode_float64(static_cast<double>(wide / static_cast<long double>(xs.size())));
    return out;
  }
  double sum = 0;
  for (const auto& x : xs) sum += as_float(x);
  out.value = encode_float64(op == OpCode::SumAgg ? sum : sum / static_cast<double>(xs.size()));
  return out;
}

}  // namespace fidstore
