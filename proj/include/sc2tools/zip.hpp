#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sc2tools/bytes.hpp"

// Deterministic zip archives: entries in lexicographic order, fixed DOS
// timestamp (1980-01-01 00:00), raw deflate, no extra fields. Repeated
// runs over the same tree produce identical bytes.
namespace sc2tools::zip {

struct Entry {
  std::string name;  ///< '/'-separated; directories end with '/'
  Bytes data;
  bool is_directory() const { return !name.empty() && name.back() == '/'; }
};

/// Zips the contents of `dir` (entries relative to it, no top-level
/// prefix). Empty directories are kept. Errors: OutputNotWritable, Io.
void zip_directory(const std::filesystem::path& dir, const std::filesystem::path& zip_path);

/// Errors: ParseError (structure), ChecksumMismatch (CRC),
/// UnsupportedCompression, InvalidValue (unsafe entry name).
std::vector<Entry> read_zip(ByteView data);

/// Extracts into `dir`, creating it. Same errors as read_zip().
void unzip(const std::filesystem::path& zip_path, const std::filesystem::path& dir);

}  // namespace sc2tools::zip
