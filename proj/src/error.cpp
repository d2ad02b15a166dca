#include "fidstore/error.hpp"

namespace fidstore {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownPartition: return "UnknownPartition";
    case Errc::ValueTooLarge: return "ValueTooLarge";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::PartitionFull: return "PartitionFull";
    case Errc::NotLive: return "NotLive";
    case Errc::WrongPartitionKind: return "WrongPartitionKind";
    case Errc::PartitionSpaceExhausted: return "PartitionSpaceExhausted";
    case Errc::LogClosed: return "LogClosed";
    case Errc::IoFailure: return "IoFailure";
    case Errc::CorruptLog: return "CorruptLog";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::StaleBlock: return "StaleBlock";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::DivideByZero: return "DivideByZero";
    case Errc::Overflow: return "Overflow";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::RowNotVisible: return "RowNotVisible";
    case Errc::WriteConflict: return "WriteConflict";
    case Errc::TxnNotActive: return "TxnNotActive";
    case Errc::UnknownTable: return "UnknownTable";
    case Errc::PrivacyZoneUnavailable: return "PrivacyZoneUnavailable";
    case Errc::NoCrashPending: return "NoCrashPending";
    case Errc::StructureMismatch: return "StructureMismatch";
    case Errc::NotQuiescent: return "NotQuiescent";
    case Errc::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(detail.empty() ? std::string(errc_name(code))
                                        : std::string(errc_name(code)) + ": " + detail),
      code_(code) {}

void fail(Errc code, const std::string& detail) { throw Error(code, detail); }

}  // namespace fidstore
