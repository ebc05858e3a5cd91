#include <gtest/gtest.h>
#include <zlib.h>

#include <random>

#include "sc2tools/error.hpp"
#include "sc2tools/mpq.hpp"

namespace sc2tools::mpq {
namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::Io;
}

// Hand-assembled multi-sector archive, the layout build_archive() never
// emits. `method` overrides the compression mask of every sector.
Bytes build_sectored(std::string_view name, const Bytes& payload, bool compress, bool encrypt,
                     std::optional<std::uint8_t> method = std::nullopt) {
  constexpr std::uint16_t kShift = 0;  // 512-byte sectors
  constexpr std::size_t kSector = 512;
  const std::size_t sectors = (payload.size() + kSector - 1) / kSector;
  const std::uint32_t file_offset = kArchiveHeaderSize;
  std::uint32_t flags = kFileExists;
  if (compress) flags |= kFileCompress;
  if (encrypt) flags |= kFileEncrypted | kFileFixKey;
  const std::uint32_t key =
      file_key(name, file_offset, static_cast<std::uint32_t>(payload.size()), flags);

  Bytes block;
  std::vector<std::uint32_t> offsets;
  if (compress) block.resize((sectors + 1) * 4);
  for (std::size_t i = 0; i < sectors; ++i) {
    Bytes sector(payload.begin() + static_cast<std::ptrdiff_t>(i * kSector),
                 payload.begin() + static_cast<std::ptrdiff_t>(std::min(payload.size(), (i + 1) * kSector)));
    if (compress) {
      uLongf bound = compressBound(static_cast<uLong>(sector.size()));
      Bytes packed(bound + 1);
      packed[0] = method.value_or(kCompressionZlib);
      compress2(packed.data() + 1, &bound, sector.data(), static_cast<uLong>(sector.size()), 9);
      packed.resize(bound + 1);
      if (packed.size() < sector.size()) sector = std::move(packed);
    }
    if (encrypt) encrypt_block(sector, key + static_cast<std::uint32_t>(i));
    offsets.push_back(static_cast<std::uint32_t>(block.size()));
    block.insert(block.end(), sector.begin(), sector.end());
  }
  offsets.push_back(static_cast<std::uint32_t>(block.size()));
  if (compress) {
    Bytes table;
    for (auto o : offsets) append_le32(table, o);
    if (encrypt) encrypt_block(table, key - 1);
    std::copy(table.begin(), table.end(), block.begin());
  }

  Bytes out(kArchiveHeaderSize, 0);
  out.insert(out.end(), block.begin(), block.end());
  const auto hash_offset = static_cast<std::uint32_t>(out.size());
  Bytes hashes;
  std::vector<HashTableEntry> entries(4);
  entries[hash_string(name, HashKind::TableIndex) & 3] = {hash_string(name, HashKind::NameA),
                                                          hash_string(name, HashKind::NameB), 0, 0, 0};
  for (const auto& e : entries) {
    append_le32(hashes, e.name_hash_a);
    append_le32(hashes, e.name_hash_b);
    append_le16(hashes, 0);
    append_le16(hashes, 0);
    append_le32(hashes, e.block_index);
  }
  encrypt_block(hashes, hash_string("(hash table)", HashKind::FileKey));
  out.insert(out.end(), hashes.begin(), hashes.end());
  const auto block_offset = static_cast<std::uint32_t>(out.size());
  Bytes blocks;
  append_le32(blocks, file_offset);
  append_le32(blocks, static_cast<std::uint32_t>(block.size()));
  append_le32(blocks, static_cast<std::uint32_t>(payload.size()));
  append_le32(blocks, flags);
  encrypt_block(blocks, hash_string("(block table)", HashKind::FileKey));
  out.insert(out.end(), blocks.begin(), blocks.end());

  Bytes header;
  append_le32(header, kArchiveMagic);
  append_le32(header, kArchiveHeaderSize);
  append_le32(header, static_cast<std::uint32_t>(out.size()));
  append_le16(header, 0);
  append_le16(header, kShift);
  append_le32(header, hash_offset);
  append_le32(header, block_offset);
  append_le32(header, 4);
  append_le32(header, 1);
  std::copy(header.begin(), header.end(), out.begin());
  return out;
}

// Golden values from tests/oracles/mpq_crypt_oracle.py.
TEST(HashString, MatchesIndependentOracle) {
  EXPECT_EQ(hash_string("(listfile)", HashKind::TableIndex), 0x5F3DE859u);
  EXPECT_EQ(hash_string("(listfile)", HashKind::NameA), 0xFD657910u);
  EXPECT_EQ(hash_string("(listfile)", HashKind::NameB), 0x4E9B98A7u);
  EXPECT_EQ(hash_string("(hash table)", HashKind::FileKey), 0xC3AF3770u);
  EXPECT_EQ(hash_string("(block table)", HashKind::FileKey), 0xEC83B3A3u);
  EXPECT_EQ(hash_string("replay.details", HashKind::FileKey), 0x85FFC47Eu);
}

TEST(HashString, CaseAndSeparatorNormalization) {
  for (auto kind : {HashKind::TableIndex, HashKind::NameA, HashKind::NameB, HashKind::FileKey}) {
    EXPECT_EQ(hash_string("a", kind), hash_string("A", kind));
    EXPECT_EQ(hash_string("x/y", kind), hash_string("x\\y", kind));
    EXPECT_EQ(hash_string("Replay.Details", kind), hash_string("REPLAY.DETAILS", kind));
  }
}

TEST(Crypt, EncryptMatchesOracle) {
  Bytes words;
  for (std::uint32_t w : {0u, 1u, 2u, 3u}) append_le32(words, w);
  encrypt_block(words, 0xC3AF3770);
  EXPECT_EQ(load_le32(&words[0]), 0x863CCFCCu);
  EXPECT_EQ(load_le32(&words[4]), 0x67CD26D9u);
  EXPECT_EQ(load_le32(&words[8]), 0x60908C64u);
  EXPECT_EQ(load_le32(&words[12]), 0x16B17BD0u);
}

TEST(Crypt, DecryptInvertsEncryptForAnyKey) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto key = static_cast<std::uint32_t>(rng());
    const Bytes plain = random_bytes(rng, rng() % 257);
    Bytes buf = plain;
    encrypt_block(buf, key);
    if (plain.size() >= 4) {
      EXPECT_NE(buf, plain);
    }
    decrypt_block(buf, key);
    ASSERT_EQ(buf, plain) << "key " << key;
  }
}

TEST(Archive, EmptyRoundTrip) {
  const Bytes data = build_archive({});
  const MpqArchive a = open_archive(data);
  EXPECT_EQ(a.stored_file_count(), 0u);
  EXPECT_EQ(a.header().block_table_count, 0u);
  EXPECT_FALSE(a.user_data().has_value());
  EXPECT_EQ(error_of([&] { list_files(a); }), Errc::NotFound);
}

TEST(Archive, ZeroedMagicIsBadMagic) {
  Bytes data = build_archive({{"f", to_bytes("x")}});
  std::fill(data.begin(), data.begin() + 4, 0);
  EXPECT_EQ(error_of([&] { open_archive(data); }), Errc::BadMagic);
}

TEST(Archive, SingleFileListing) {
  const Bytes payload = to_bytes("details payload");
  const MpqArchive a = open_archive(build_archive({{"replay.details", payload}}));
  EXPECT_EQ(list_files(a), std::vector<std::string>{"replay.details"});
  EXPECT_EQ(extract_file(a, "replay.details"), payload);
  EXPECT_EQ(extract_file(a, "REPLAY.DETAILS"), payload);
}

TEST(Archive, MissingFileIsNotFound) {
  const MpqArchive a = open_archive(build_archive({{"f", to_bytes("x")}}));
  EXPECT_EQ(error_of([&] { extract_file(a, "missing"); }), Errc::NotFound);
}

TEST(Archive, ListfileSplitsAndDedups) {
  // A hand-written listfile replaces the generated one via a raw archive.
  auto with_listfile = [](std::string_view text) {
    Bytes data = build_sectored(kListFile, to_bytes(text), false, false);
    return open_archive(data);
  };
  EXPECT_EQ(list_files(with_listfile("a\nb\n")), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(list_files(with_listfile("a\na\n")), std::vector<std::string>{"a"});
  EXPECT_EQ(list_files(with_listfile("b\r\na\r\n")), (std::vector<std::string>{"a", "b"}));
}

TEST(Archive, NormalizedNameCollision) {
  EXPECT_EQ(error_of([] { build_archive({{"A", to_bytes("x")}, {"a", to_bytes("x")}}); }),
            Errc::NameCollision);
  EXPECT_EQ(error_of([] { build_archive({{"d/x", {}}, {"D\\X", {}}}); }), Errc::NameCollision);
  EXPECT_EQ(error_of([] { build_archive({{"(LISTFILE)", {}}}); }), Errc::NameCollision);
}

TEST(Archive, LargeDeflatePayloadRoundTrips) {
  std::mt19937_64 rng(42);
  Bytes payload = random_bytes(rng, 10 * 1024 * 1024);
  // Low-entropy stretch so deflate actually wins.
  std::fill(payload.begin(), payload.begin() + (4 << 20), 'z');
  const Bytes data = build_archive({{"big.bin", payload}}, {.compress = true, .encrypt = false, .user_data = {}});
  const MpqArchive a = open_archive(data);
  EXPECT_TRUE(a.find("big.bin")->compressed());
  EXPECT_LT(data.size(), payload.size());
  EXPECT_EQ(extract_file(a, "big.bin"), payload);
}

TEST(Archive, HundredFilesCompressedAndEncrypted) {
  std::mt19937_64 rng(100);
  std::map<std::string, Bytes> files;
  for (int i = 0; i < 100; ++i) {
    Bytes payload = random_bytes(rng, static_cast<std::size_t>(i) * 10 * 1024 / 99);
    if (i % 2) std::fill(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(payload.size() / 2), 0);
    files["dir/file_" + std::to_string(i) + ".dat"] = std::move(payload);
  }
  const MpqArchive a = open_archive(build_archive(files, {.compress = true, .encrypt = true, .user_data = {}}));
  EXPECT_EQ(list_files(a).size(), files.size());
  for (const auto& [name, payload] : files) {
    ASSERT_EQ(extract_file(a, name), payload) << name;
    EXPECT_TRUE(a.find(name)->encrypted());
  }
}

TEST(Archive, UserDataHeaderRoundTrip) {
  const Bytes content = to_bytes("protocol header bytes");
  const Bytes data = build_archive({{"f", to_bytes("x")}}, {.user_data = content});
  const MpqArchive a = open_archive(data);
  ASSERT_TRUE(a.user_data().has_value());
  EXPECT_EQ(a.user_data()->content, content);
  EXPECT_LE(a.user_data()->content.size(), a.user_data()->user_data_max_size);
  EXPECT_EQ(a.user_data()->archive_header_offset % 512, 0u);
  EXPECT_EQ(extract_file(a, "f"), to_bytes("x"));
}

TEST(Archive, SectoredReaderAllLayouts) {
  std::mt19937_64 rng(3);
  Bytes payload = random_bytes(rng, 512 * 5 + 77);
  std::fill(payload.begin(), payload.begin() + 1024, 'q');  // compressible sectors
  for (bool compress : {false, true}) {
    for (bool encrypt : {false, true}) {
      const MpqArchive a = open_archive(build_sectored("units\\x.bin", payload, compress, encrypt));
      EXPECT_FALSE(a.find("units/x.bin")->single_unit());
      EXPECT_EQ(extract_file(a, "units/x.bin"), payload) << compress << encrypt;
    }
  }
}

TEST(Archive, Bzip2SectorIsUnsupported) {
  Bytes payload(2048, 'b');
  const MpqArchive a = open_archive(build_sectored("f", payload, true, false, kCompressionBzip2));
  EXPECT_EQ(error_of([&] { extract_file(a, "f"); }), Errc::UnsupportedCompression);
}

TEST(Archive, CorruptDeflateStream) {
  Bytes data = build_archive({{"f", Bytes(4096, 'a')}}, {.compress = true, .encrypt = false, .user_data = {}});
  const MpqArchive clean = open_archive(data);
  const auto block = *clean.find("f");
  data[block.file_offset + 3] ^= 0xFF;
  data[block.file_offset + 4] ^= 0xFF;
  EXPECT_EQ(error_of([&] { extract_file(open_archive(data), "f"); }), Errc::CorruptSector);
}

TEST(Archive, RejectsNonPowerOfTwoTable) {
  Bytes data = build_archive({{"f", to_bytes("x")}});
  store_le32(&data[24], 3);
  EXPECT_EQ(error_of([&] { open_archive(data); }), Errc::BadTableSize);
}

TEST(Archive, RejectsOtherFormatVersions) {
  Bytes data = build_archive({{"f", to_bytes("x")}});
  data[12] = 1;
  EXPECT_EQ(error_of([&] { open_archive(data); }), Errc::BadVersion);
}

TEST(Archive, EveryTruncationYieldsTypedError) {
  std::mt19937_64 rng(9);
  const Bytes data = build_archive({{"a", random_bytes(rng, 700)}, {"b", Bytes(300, 1)}},
                                   {.compress = true, .encrypt = true, .user_data = to_bytes("hdr")});
  for (std::size_t len = 0; len < data.size(); ++len) {
    const ByteView cut(data.data(), len);
    try {
      const MpqArchive a = open_archive(cut);
      for (const char* name : {"a", "b", "(listfile)"}) {
        try {
          extract_file(a, name);
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
    }
  }
  SUCCEED();
}

}  // namespace
}  // namespace sc2tools::mpq
