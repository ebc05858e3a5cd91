#include "sc2tools/error.hpp"

namespace sc2tools {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::Truncated: return "Truncated";
    case Errc::BadTableSize: return "BadTableSize";
    case Errc::BadVersion: return "BadVersion";
    case Errc::NotFound: return "NotFound";
    case Errc::UnsupportedCompression: return "UnsupportedCompression";
    case Errc::CorruptSector: return "CorruptSector";
    case Errc::NameCollision: return "NameCollision";
    case Errc::UnknownTag: return "UnknownTag";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::Overflow: return "Overflow";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::AnonymizerUnavailable: return "AnonymizerUnavailable";
    case Errc::EmptyNickname: return "EmptyNickname";
    case Errc::CorruptJournal: return "CorruptJournal";
    case Errc::OutputNotWritable: return "OutputNotWritable";
    case Errc::OutputNotEmpty: return "OutputNotEmpty";
    case Errc::NameExists: return "NameExists";
    case Errc::Conflict: return "Conflict";
    case Errc::NotAnObject: return "NotAnObject";
    case Errc::MissingCounterpart: return "MissingCounterpart";
    case Errc::FetchFailed: return "FetchFailed";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::ParseError: return "ParseError";
    case Errc::NotADirectory: return "NotADirectory";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& subject, const std::string& detail) {
  std::string msg(to_string(code));
  if (!subject.empty()) msg += "(" + subject + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(Errc code, std::string subject, const std::string& detail)
    : std::runtime_error(format_message(code, subject, detail)),
      code_(code),
      subject_(std::move(subject)) {}

}  // namespace sc2tools
