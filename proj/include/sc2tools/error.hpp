#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sc2tools {

/// Failure taxonomy shared by every module. The names returned by
/// to_string() are stable and appear verbatim in processed_failed.log.
enum class Errc {
  // mpq
  BadMagic,
  Truncated,
  BadTableSize,
  BadVersion,
  NotFound,
  UnsupportedCompression,
  CorruptSector,
  NameCollision,
  // versioned codec / replay schema
  UnknownTag,
  TrailingBytes,
  Overflow,
  InvalidValue,
  DepthExceeded,
  SchemaMismatch,
  // anonymizer
  AnonymizerUnavailable,
  EmptyNickname,
  CorruptJournal,
  // dataset preparation
  OutputNotWritable,
  OutputNotEmpty,
  NameExists,
  Conflict,
  NotAnObject,
  MissingCounterpart,
  FetchFailed,
  ChecksumMismatch,
  InvalidConfig,
  // dataset access
  SchemaViolation,
  ParseError,
  NotADirectory,
  Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject = {}, const std::string& detail = {});

  Errc code() const noexcept { return code_; }
  /// The entity the error is about: a field path, file name, URL, key list.
  const std::string& subject() const noexcept { return subject_; }

 private:
  Errc code_;
  std::string subject_;
};

}  // namespace sc2tools
