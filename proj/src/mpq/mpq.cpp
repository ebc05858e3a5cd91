#include "sc2tools/mpq.hpp"

#include <zlib.h>

#include <algorithm>
#include <set>

#include "sc2tools/error.hpp"

namespace sc2tools::mpq {

namespace {

using CryptTable = std::array<std::uint32_t, 0x500>;

constexpr CryptTable make_crypt_table() {
  CryptTable table{};
  std::uint32_t seed = 0x00100001;
  for (std::uint32_t i = 0; i < 0x100; ++i) {
    for (std::uint32_t idx = i, round = 0; round < 5; ++round, idx += 0x100) {
      seed = (seed * 125 + 3) % 0x2AAAAB;
      const std::uint32_t hi = (seed & 0xFFFF) << 16;
      seed = (seed * 125 + 3) % 0x2AAAAB;
      const std::uint32_t lo = seed & 0xFFFF;
      table[idx] = hi | lo;
    }
  }
  return table;
}

constexpr CryptTable kCryptTable = make_crypt_table();

char normalize_char(char c) {
  if (c == '/') return '\\';
  if (c >= 'a' && c <= 'z') return static_cast<char>(c - 'a' + 'A');
  return c;
}

std::string normalize_name(std::string_view name) {
  std::string out(name);
  std::transform(out.begin(), out.end(), out.begin(), normalize_char);
  return out;
}

std::uint32_t hash_table_key() {
  static const std::uint32_t key = hash_string("(hash table)", HashKind::FileKey);
  return key;
}

std::uint32_t block_table_key() {
  static const std::uint32_t key = hash_string("(block table)", HashKind::FileKey);
  return key;
}

bool is_power_of_two(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

Bytes inflate_sector(ByteView sector, std::size_t expected) {
  if (sector.empty()) throw Error(Errc::CorruptSector, {}, "empty compressed sector");
  const std::uint8_t method = sector[0];
  const ByteView body = sector.subspan(1);
  if (method == 0) {
    if (body.size() != expected) throw Error(Errc::CorruptSector, {}, "raw sector size mismatch");
    return Bytes(body.begin(), body.end());
  }
  if (method != kCompressionZlib) {
    throw Error(Errc::UnsupportedCompression, {},
                "compression mask 0x" + to_hex(ByteView(&sector[0], 1)));
  }
  Bytes out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &out_len, body.data(), static_cast<uLong>(body.size()));
  if (rc != Z_OK || out_len != expected) {
    throw Error(Errc::CorruptSector, {}, "deflate stream invalid or size mismatch");
  }
  return out;
}

std::vector<std::uint8_t> read_table(ByteView data, std::size_t offset, std::uint32_t count,
                                     std::uint32_t key) {
  const std::uint64_t size = std::uint64_t{count} * 16;
  if (offset > data.size() || size > data.size() - offset) {
    throw Error(Errc::Truncated, {}, "table exceeds file bounds");
  }
  Bytes table(data.begin() + static_cast<std::ptrdiff_t>(offset),
              data.begin() + static_cast<std::ptrdiff_t>(offset + size));
  decrypt_block(table, key);
  return table;
}

}  // namespace

std::uint32_t hash_string(std::string_view name, HashKind kind) {
  std::uint32_t seed1 = 0x7FED7FED;
  std::uint32_t seed2 = 0xEEEEEEEE;
  const std::uint32_t offset = static_cast<std::uint32_t>(kind) << 8;
  for (char raw : name) {
    const auto ch = static_cast<std::uint8_t>(normalize_char(raw));
    seed1 = kCryptTable[offset + ch] ^ (seed1 + seed2);
    seed2 = ch + seed1 + seed2 + (seed2 << 5) + 3;
  }
  return seed1;
}

void encrypt_block(std::span<std::uint8_t> data, std::uint32_t key) {
  std::uint32_t seed = 0xEEEEEEEE;
  for (std::size_t i = 0; i + 4 <= data.size(); i += 4) {
    seed += kCryptTable[0x400 + (key & 0xFF)];
    const std::uint32_t plain = load_le32(&data[i]);
    store_le32(&data[i], plain ^ (key + seed));
    key = ((~key << 0x15) + 0x11111111) | (key >> 0x0B);
    seed = plain + seed + (seed << 5) + 3;
  }
}

void decrypt_block(std::span<std::uint8_t> data, std::uint32_t key) {
  std::uint32_t seed = 0xEEEEEEEE;
  for (std::size_t i = 0; i + 4 <= data.size(); i += 4) {
    seed += kCryptTable[0x400 + (key & 0xFF)];
    const std::uint32_t plain = load_le32(&data[i]) ^ (key + seed);
    store_le32(&data[i], plain);
    key = ((~key << 0x15) + 0x11111111) | (key >> 0x0B);
    seed = plain + seed + (seed << 5) + 3;
  }
}

std::uint32_t file_key(std::string_view name, std::uint32_t block_offset,
                       std::uint32_t uncompressed_size, std::uint32_t flags) {
  const auto sep = name.find_last_of("\\/");
  const std::string_view base = sep == std::string_view::npos ? name : name.substr(sep + 1);
  std::uint32_t key = hash_string(base, HashKind::FileKey);
  if (flags & kFileFixKey) key = (key + block_offset) ^ uncompressed_size;
  return key;
}

std::optional<BlockTableEntry> MpqArchive::find(std::string_view name) const {
  if (hash_table_.empty()) return std::nullopt;
  const std::uint32_t mask = static_cast<std::uint32_t>(hash_table_.size()) - 1;
  const std::uint32_t start = hash_string(name, HashKind::TableIndex) & mask;
  const std::uint32_t a = hash_string(name, HashKind::NameA);
  const std::uint32_t b = hash_string(name, HashKind::NameB);
  for (std::uint32_t i = 0; i <= mask; ++i) {
    const HashTableEntry& e = hash_table_[(start + i) & mask];
    if (e.block_index == kHashEmpty) break;
    if (e.block_index == kHashDeleted) continue;
    if (e.name_hash_a == a && e.name_hash_b == b && e.block_index < block_table_.size()) {
      const BlockTableEntry& block = block_table_[e.block_index];
      if (block.exists()) return block;
    }
  }
  return std::nullopt;
}

std::size_t MpqArchive::stored_file_count() const {
  return static_cast<std::size_t>(std::count_if(
      hash_table_.begin(), hash_table_.end(), [&](const HashTableEntry& e) {
        return e.block_index < block_table_.size() && block_table_[e.block_index].exists();
      }));
}

MpqArchive open_archive(ByteView data) {
  if (data.size() < 4) throw Error(Errc::Truncated, {}, "shorter than a signature");

  MpqArchive archive;
  std::size_t offset = 0;
  std::uint32_t magic = load_le32(data.data());

  if (magic == kUserDataMagic) {
    if (data.size() < kUserDataHeaderSize) throw Error(Errc::Truncated, {}, "user-data header");
    UserDataHeader ud;
    ud.user_data_max_size = load_le32(&data[4]);
    ud.archive_header_offset = load_le32(&data[8]);
    const std::uint32_t content_size = load_le32(&data[12]);
    if (content_size > ud.user_data_max_size) {
      throw Error(Errc::InvalidValue, {}, "user-data content exceeds declared maximum");
    }
    if (content_size > data.size() - kUserDataHeaderSize) {
      throw Error(Errc::Truncated, {}, "user-data content");
    }
    ud.content.assign(data.begin() + kUserDataHeaderSize,
                      data.begin() + kUserDataHeaderSize + content_size);
    offset = ud.archive_header_offset;
    if (offset > data.size() - 4) throw Error(Errc::Truncated, {}, "archive header offset");
    magic = load_le32(&data[offset]);
    archive.user_data_ = std::move(ud);
  }

  if (magic != kArchiveMagic) throw Error(Errc::BadMagic);
  if (data.size() - offset < kArchiveHeaderSize) throw Error(Errc::Truncated, {}, "archive header");

  const std::uint8_t* p = &data[offset];
  ArchiveHeader& h = archive.header_;
  h.magic = magic;
  h.header_size = load_le32(p + 4);
  h.archive_size = load_le32(p + 8);
  h.format_version = load_le16(p + 12);
  h.sector_size_shift = load_le16(p + 14);
  h.hash_table_offset = load_le32(p + 16);
  h.block_table_offset = load_le32(p + 20);
  h.hash_table_count = load_le32(p + 24);
  h.block_table_count = load_le32(p + 28);

  if (h.format_version != 0 || h.header_size != kArchiveHeaderSize) {
    throw Error(Errc::BadVersion, {}, "format version " + std::to_string(h.format_version));
  }
  if (!is_power_of_two(h.hash_table_count)) {
    throw Error(Errc::BadTableSize, {}, std::to_string(h.hash_table_count) + " hash entries");
  }
  if (h.sector_size_shift > 20) throw Error(Errc::BadVersion, {}, "sector size shift");

  const Bytes hashes = read_table(data, offset + h.hash_table_offset, h.hash_table_count,
                                  hash_table_key());
  const Bytes blocks = read_table(data, offset + h.block_table_offset, h.block_table_count,
                                  block_table_key());

  archive.hash_table_.resize(h.hash_table_count);
  for (std::size_t i = 0; i < archive.hash_table_.size(); ++i) {
    const std::uint8_t* e = &hashes[i * kHashEntrySize];
    archive.hash_table_[i] = {load_le32(e), load_le32(e + 4), load_le16(e + 8),
                              load_le16(e + 10), load_le32(e + 12)};
  }
  archive.block_table_.resize(h.block_table_count);
  for (std::size_t i = 0; i < archive.block_table_.size(); ++i) {
    const std::uint8_t* e = &blocks[i * kBlockEntrySize];
    archive.block_table_[i] = {load_le32(e), load_le32(e + 4), load_le32(e + 8), load_le32(e + 12)};
  }

  archive.data_.assign(data.begin(), data.end());
  archive.archive_offset_ = offset;
  return archive;
}

Bytes extract_file(const MpqArchive& archive, std::string_view name) {
  const auto found = archive.find(name);
  if (!found) throw Error(Errc::NotFound, std::string(name));
  const BlockTableEntry& block = *found;

  if (block.flags & kFileImplode) throw Error(Errc::UnsupportedCompression, std::string(name), "implode");

  const ByteView data(archive.data_);
  const std::uint64_t begin = std::uint64_t{archive.archive_offset_} + block.file_offset;
  if (begin > data.size() || block.compressed_size > data.size() - begin) {
    throw Error(Errc::Truncated, std::string(name), "block exceeds file bounds");
  }
  const ByteView stored = data.subspan(static_cast<std::size_t>(begin), block.compressed_size);
  const std::uint32_t key =
      block.encrypted() ? file_key(name, block.file_offset, block.uncompressed_size, block.flags) : 0;
  const std::size_t usize = block.uncompressed_size;

  if (block.single_unit()) {
    Bytes buf(stored.begin(), stored.end());
    if (block.encrypted()) decrypt_block(buf, key);
    if (block.compressed() && buf.size() < usize) return inflate_sector(buf, usize);
    if (buf.size() != usize) throw Error(Errc::CorruptSector, std::string(name), "size mismatch");
    return buf;
  }

  const std::size_t sector_size = archive.header_.sector_size();
  const std::size_t sectors = (usize + sector_size - 1) / sector_size;
  Bytes out;
  out.reserve(usize);

  if (!block.compressed()) {
    if (stored.size() < usize) throw Error(Errc::CorruptSector, std::string(name), "short block");
    for (std::size_t i = 0; i < sectors; ++i) {
      const std::size_t len = std::min(sector_size, usize - i * sector_size);
      Bytes sector(stored.begin() + static_cast<std::ptrdiff_t>(i * sector_size),
                   stored.begin() + static_cast<std::ptrdiff_t>(i * sector_size + len));
      if (block.encrypted()) decrypt_block(sector, key + static_cast<std::uint32_t>(i));
      out.insert(out.end(), sector.begin(), sector.end());
    }
    return out;
  }

  const std::size_t table_bytes = (sectors + 1) * 4;
  if (stored.size() < table_bytes) throw Error(Errc::Truncated, std::string(name), "sector table");
  Bytes table(stored.begin(), stored.begin() + static_cast<std::ptrdiff_t>(table_bytes));
  if (block.encrypted()) decrypt_block(table, key - 1);

  for (std::size_t i = 0; i < sectors; ++i) {
    const std::uint32_t from = load_le32(&table[i * 4]);
    const std::uint32_t to = load_le32(&table[(i + 1) * 4]);
    if (from > to || to > stored.size()) {
      throw Error(Errc::CorruptSector, std::string(name), "sector offset out of range");
    }
    const std::size_t expected = std::min(sector_size, usize - i * sector_size);
    Bytes sector(stored.begin() + from, stored.begin() + to);
    if (block.encrypted()) decrypt_block(sector, key + static_cast<std::uint32_t>(i));
    if (sector.size() < expected) {
      const Bytes plain = inflate_sector(sector, expected);
      out.insert(out.end(), plain.begin(), plain.end());
    } else if (sector.size() == expected) {
      out.insert(out.end(), sector.begin(), sector.end());
    } else {
      throw Error(Errc::CorruptSector, std::string(name), "sector larger than expected");
    }
  }
  return out;
}

std::vector<std::string> list_files(const MpqArchive& archive) {
  const Bytes raw = extract_file(archive, kListFile);
  std::set<std::string> names;
  std::string current;
  for (std::uint8_t c : raw) {
    if (c == '\n' || c == '\r' || c == ';') {
      if (!current.empty()) names.insert(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(c));
    }
  }
  if (!current.empty()) names.insert(std::move(current));
  return {names.begin(), names.end()};
}

Bytes build_archive(const std::map<std::string, Bytes>& files, const BuildOptions& options) {
  std::set<std::string> normalized;
  normalized.insert(normalize_name(kListFile));
  for (const auto& [name, payload] : files) {
    if (name.empty() || !normalized.insert(normalize_name(name)).second) {
      throw Error(Errc::NameCollision, name);
    }
  }

  std::vector<std::pair<std::string, Bytes>> entries(files.begin(), files.end());
  if (!entries.empty()) {
    std::string listfile;
    for (const auto& [name, payload] : files) listfile += name + "\n";
    entries.emplace_back(std::string(kListFile), to_bytes(listfile));
  }

  std::uint32_t table_count = 4;
  while (table_count < entries.size() * 2) table_count <<= 1;

  Bytes archive(kArchiveHeaderSize, 0);
  std::vector<HashTableEntry> hashes(table_count);
  std::vector<BlockTableEntry> blocks;
  blocks.reserve(entries.size());

  for (const auto& [name, payload] : entries) {
    BlockTableEntry block;
    block.file_offset = static_cast<std::uint32_t>(archive.size());
    block.uncompressed_size = static_cast<std::uint32_t>(payload.size());
    block.flags = kFileExists | kFileSingleUnit;

    Bytes stored = payload;
    if (options.compress && !payload.empty()) {
      uLongf bound = compressBound(static_cast<uLong>(payload.size()));
      Bytes packed(bound + 1);
      packed[0] = kCompressionZlib;
      if (compress2(packed.data() + 1, &bound, payload.data(), static_cast<uLong>(payload.size()),
                    Z_DEFAULT_COMPRESSION) != Z_OK) {
        throw Error(Errc::Io, name, "deflate failed");
      }
      packed.resize(bound + 1);
      if (packed.size() < payload.size()) {
        stored = std::move(packed);
        block.flags |= kFileCompress;
      }
    }
    if (options.encrypt) {
      block.flags |= kFileEncrypted;
      encrypt_block(stored, file_key(name, block.file_offset, block.uncompressed_size, block.flags));
    }
    block.compressed_size = static_cast<std::uint32_t>(stored.size());
    archive.insert(archive.end(), stored.begin(), stored.end());

    const std::uint32_t mask = table_count - 1;
    const std::uint32_t a = hash_string(name, HashKind::NameA);
    const std::uint32_t b = hash_string(name, HashKind::NameB);
    std::uint32_t slot = hash_string(name, HashKind::TableIndex) & mask;
    while (hashes[slot].block_index != kHashEmpty) {
      if (hashes[slot].name_hash_a == a && hashes[slot].name_hash_b == b) {
        throw Error(Errc::NameCollision, name, "name hashes collide");
      }
      slot = (slot + 1) & mask;
    }
    hashes[slot] = {a, b, 0, 0, static_cast<std::uint32_t>(blocks.size())};
    blocks.push_back(block);
  }

  ArchiveHeader h;
  h.hash_table_offset = static_cast<std::uint32_t>(archive.size());
  h.hash_table_count = table_count;
  Bytes table;
  for (const auto& e : hashes) {
    append_le32(table, e.name_hash_a);
    append_le32(table, e.name_hash_b);
    append_le16(table, e.locale);
    append_le16(table, e.platform);
    append_le32(table, e.block_index);
  }
  encrypt_block(table, hash_table_key());
  archive.insert(archive.end(), table.begin(), table.end());

  h.block_table_offset = static_cast<std::uint32_t>(archive.size());
  h.block_table_count = static_cast<std::uint32_t>(blocks.size());
  table.clear();
  for (const auto& e : blocks) {
    append_le32(table, e.file_offset);
    append_le32(table, e.compressed_size);
    append_le32(table, e.uncompressed_size);
    append_le32(table, e.flags);
  }
  encrypt_block(table, block_table_key());
  archive.insert(archive.end(), table.begin(), table.end());
  h.archive_size = static_cast<std::uint32_t>(archive.size());

  Bytes header;
  append_le32(header, h.magic);
  append_le32(header, h.header_size);
  append_le32(header, h.archive_size);
  append_le16(header, h.format_version);
  append_le16(header, h.sector_size_shift);
  append_le32(header, h.hash_table_offset);
  append_le32(header, h.block_table_offset);
  append_le32(header, h.hash_table_count);
  append_le32(header, h.block_table_count);
  std::copy(header.begin(), header.end(), archive.begin());

  if (!options.user_data) return archive;

  const Bytes& content = *options.user_data;
  const std::size_t used = kUserDataHeaderSize + content.size();
  const std::size_t archive_offset = (used + 511) / 512 * 512;
  Bytes out;
  out.reserve(archive_offset + archive.size());
  append_le32(out, kUserDataMagic);
  append_le32(out, static_cast<std::uint32_t>(archive_offset - kUserDataHeaderSize));
  append_le32(out, static_cast<std::uint32_t>(archive_offset));
  append_le32(out, static_cast<std::uint32_t>(content.size()));
  out.insert(out.end(), content.begin(), content.end());
  out.resize(archive_offset, 0);
  out.insert(out.end(), archive.begin(), archive.end());
  return out;
}

}  // namespace sc2tools::mpq
