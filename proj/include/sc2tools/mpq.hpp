#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sc2tools/bytes.hpp"

namespace sc2tools::mpq {

inline constexpr std::uint32_t kArchiveMagic = 0x1A51504D;   // "MPQ\x1A"
inline constexpr std::uint32_t kUserDataMagic = 0x1B51504D;  // "MPQ\x1B"
inline constexpr std::uint32_t kArchiveHeaderSize = 32;
inline constexpr std::uint32_t kUserDataHeaderSize = 16;
inline constexpr std::uint32_t kHashEntrySize = 16;
inline constexpr std::uint32_t kBlockEntrySize = 16;

inline constexpr std::uint32_t kHashEmpty = 0xFFFFFFFF;
inline constexpr std::uint32_t kHashDeleted = 0xFFFFFFFE;

inline constexpr std::uint32_t kFileImplode = 0x00000100;
inline constexpr std::uint32_t kFileCompress = 0x00000200;
inline constexpr std::uint32_t kFileEncrypted = 0x00010000;
inline constexpr std::uint32_t kFileFixKey = 0x00020000;
inline constexpr std::uint32_t kFileSingleUnit = 0x01000000;
inline constexpr std::uint32_t kFileExists = 0x80000000;

// Per-sector compression mask byte.
inline constexpr std::uint8_t kCompressionZlib = 0x02;
inline constexpr std::uint8_t kCompressionBzip2 = 0x10;

inline constexpr std::string_view kListFile = "(listfile)";

enum class HashKind : std::uint32_t { TableIndex = 0, NameA = 1, NameB = 2, FileKey = 3 };

/// Crypt-table string hash. Case-insensitive; '/' and '\' are equivalent.
std::uint32_t hash_string(std::string_view name, HashKind kind);

/// Encrypt / decrypt a run of little-endian 32-bit words in place.
/// Trailing bytes that do not form a full word are left untouched.
void encrypt_block(std::span<std::uint8_t> data, std::uint32_t key);
void decrypt_block(std::span<std::uint8_t> data, std::uint32_t key);

/// Key used for an encrypted file: hash of its base name, optionally
/// adjusted by block offset and size when the fix-key flag is set.
std::uint32_t file_key(std::string_view name, std::uint32_t block_offset,
                       std::uint32_t uncompressed_size, std::uint32_t flags);

struct UserDataHeader {
  std::uint32_t magic = kUserDataMagic;
  std::uint32_t user_data_max_size = 0;
  std::uint32_t archive_header_offset = 0;
  Bytes content;
};

struct ArchiveHeader {
  std::uint32_t magic = kArchiveMagic;
  std::uint32_t header_size = kArchiveHeaderSize;
  std::uint32_t archive_size = 0;
  std::uint16_t format_version = 0;
  std::uint16_t sector_size_shift = 3;
  std::uint32_t hash_table_offset = 0;
  std::uint32_t block_table_offset = 0;
  std::uint32_t hash_table_count = 0;
  std::uint32_t block_table_count = 0;

  std::uint32_t sector_size() const { return 512u << sector_size_shift; }
};

struct HashTableEntry {
  std::uint32_t name_hash_a = 0;
  std::uint32_t name_hash_b = 0;
  std::uint16_t locale = 0;
  std::uint16_t platform = 0;
  std::uint32_t block_index = kHashEmpty;
};

struct BlockTableEntry {
  std::uint32_t file_offset = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t uncompressed_size = 0;
  std::uint32_t flags = 0;

  bool exists() const { return flags & kFileExists; }
  bool compressed() const { return flags & kFileCompress; }
  bool encrypted() const { return flags & kFileEncrypted; }
  bool single_unit() const { return flags & kFileSingleUnit; }
};

/// A parsed archive. Owns a copy of the file bytes and is immutable after
/// open_archive(), so concurrent extract_file() calls are safe.
class MpqArchive {
 public:
  const std::optional<UserDataHeader>& user_data() const { return user_data_; }
  const ArchiveHeader& header() const { return header_; }
  const std::vector<HashTableEntry>& hash_table() const { return hash_table_; }
  const std::vector<BlockTableEntry>& block_table() const { return block_table_; }

  /// Block table entry for `name`, or nullopt.
  std::optional<BlockTableEntry> find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  /// Number of hash entries that resolve to an existing block.
  std::size_t stored_file_count() const;

 private:
  friend MpqArchive open_archive(ByteView data);
  friend Bytes extract_file(const MpqArchive& archive, std::string_view name);

  Bytes data_;
  std::size_t archive_offset_ = 0;
  std::optional<UserDataHeader> user_data_;
  ArchiveHeader header_;
  std::vector<HashTableEntry> hash_table_;
  std::vector<BlockTableEntry> block_table_;
};

/// Errors: BadMagic, Truncated, BadTableSize, BadVersion.
MpqArchive open_archive(ByteView data);

/// Errors: NotFound, UnsupportedCompression, CorruptSector, Truncated.
Bytes extract_file(const MpqArchive& archive, std::string_view name);

/// Names from "(listfile)", deduplicated and sorted. NotFound if absent.
std::vector<std::string> list_files(const MpqArchive& archive);

struct BuildOptions {
  bool compress = false;
  bool encrypt = false;
  /// When set, a user-data header carrying these bytes precedes the archive.
  std::optional<Bytes> user_data;
};

/// Fixture writer: format-version-1 archive, single-unit blocks, plus a
/// generated "(listfile)" when `files` is non-empty. Errors: NameCollision.
Bytes build_archive(const std::map<std::string, Bytes>& files, const BuildOptions& options = {});

}  // namespace sc2tools::mpq
