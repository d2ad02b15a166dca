#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fidstore {

// Every failure surfaced by the library carries one of these codes. Absent
// values are reported through std::optional, never through an error.
enum class Errc {
  OutOfRange,
  InvalidArgument,
  UnknownPartition,
  ValueTooLarge,
  WidthMismatch,
  PartitionFull,
  NotLive,
  WrongPartitionKind,
  PartitionSpaceExhausted,
  LogClosed,
  IoFailure,
  CorruptLog,
  AuthFailure,
  StaleBlock,
  TypeMismatch,
  DivideByZero,
  Overflow,
  SchemaMismatch,
  RowNotVisible,
  WriteConflict,
  TxnNotActive,
  UnknownTable,
  PrivacyZoneUnavailable,
  NoCrashPending,
  StructureMismatch,
  NotQuiescent,
  ProtocolError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& detail = {});

}  // namespace fidstore
