#include "sc2tools/zip.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <limits>

#include "sc2tools/error.hpp"

namespace sc2tools::zip {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kMadeByUnix = (3 << 8) | 20;
constexpr std::uint16_t kFlagUtf8 = 0x0800;
constexpr std::uint16_t kStored = 0;
constexpr std::uint16_t kDeflated = 8;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
constexpr std::uint16_t kDosTime = 0;

struct Written {
  std::string name;
  std::uint16_t method;
  std::uint32_t crc;
  std::uint32_t csize;
  std::uint32_t usize;
  std::uint32_t offset;
};

Bytes deflate_raw(ByteView in) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(Errc::Io, "zlib", "deflateInit2 failed");
  }
  Bytes out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(Errc::Io, "zlib", "deflate failed");
  out.resize(zs.total_out);
  return out;
}

Bytes inflate_raw(ByteView in, std::size_t expected, const std::string& name) {
  Bytes out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) throw Error(Errc::Io, "zlib", "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) throw Error(Errc::ParseError, name, "bad deflate stream");
  return out;
}

std::uint32_t crc_of(ByteView data) {
  return static_cast<std::uint32_t>(crc32(0L, data.data(), static_cast<uInt>(data.size())));
}

std::uint32_t narrow32(std::size_t v, const std::string& what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::InvalidValue, what, "exceeds the 4 GiB zip limit");
  }
  return static_cast<std::uint32_t>(v);
}

void put_local(Bytes& out, const Written& w) {
  append_le32(out, kLocalSig);
  append_le16(out, kVersion);
  append_le16(out, kFlagUtf8);
  append_le16(out, w.method);
  append_le16(out, kDosTime);
  append_le16(out, kDosDate);
  append_le32(out, w.crc);
  append_le32(out, w.csize);
  append_le32(out, w.usize);
  append_le16(out, static_cast<std::uint16_t>(w.name.size()));
  append_le16(out, 0);
  out.insert(out.end(), w.name.begin(), w.name.end());
}

void put_central(Bytes& out, const Written& w) {
  const bool dir = w.name.back() == '/';
  append_le32(out, kCentralSig);
  append_le16(out, kMadeByUnix);
  append_le16(out, kVersion);
  append_le16(out, kFlagUtf8);
  append_le16(out, w.method);
  append_le16(out, kDosTime);
  append_le16(out, kDosDate);
  append_le32(out, w.crc);
  append_le32(out, w.csize);
  append_le32(out, w.usize);
  append_le16(out, static_cast<std::uint16_t>(w.name.size()));
  append_le16(out, 0);  // extra
  append_le16(out, 0);  // comment
  append_le16(out, 0);  // disk
  append_le16(out, 0);  // internal attrs
  append_le32(out, dir ? ((040755u << 16) | 0x10) : (0100644u << 16));
  append_le32(out, w.offset);
  out.insert(out.end(), w.name.begin(), w.name.end());
}

bool safe_name(std::string_view name) {
  if (name.empty() || name.front() == '/' || name.find('\\') != std::string_view::npos) return false;
  std::size_t pos = 0;
  while (pos <= name.size()) {
    const std::size_t end = std::min(name.find('/', pos), name.size());
    if (name.substr(pos, end - pos) == "..") return false;
    pos = end + 1;
  }
  return true;
}

}  // namespace

void zip_directory(const fs::path& dir, const fs::path& zip_path) {
  if (!fs::is_directory(dir)) throw Error(Errc::NotADirectory, dir.string());
  std::vector<std::pair<std::string, fs::path>> items;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    std::string rel = entry.path().lexically_relative(dir).generic_string();
    if (entry.is_directory()) {
      items.emplace_back(rel + "/", entry.path());
    } else if (entry.is_regular_file()) {
      items.emplace_back(std::move(rel), entry.path());
    }
  }
  std::sort(items.begin(), items.end());
  if (items.size() > 0xFFFF) throw Error(Errc::InvalidValue, dir.string(), "too many entries for zip");

  std::ofstream out(zip_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::OutputNotWritable, zip_path.string());

  std::vector<Written> written;
  std::size_t offset = 0;
  Bytes buf;
  for (const auto& [name, path] : items) {
    if (name.size() > 0xFFFF) throw Error(Errc::InvalidValue, name, "entry name too long");
    Written w{name, kStored, 0, 0, 0, narrow32(offset, zip_path.string())};
    Bytes payload;
    if (name.back() != '/') {
      const Bytes data = read_file(path);
      w.crc = crc_of(data);
      w.usize = narrow32(data.size(), name);
      payload = deflate_raw(data);
      w.method = kDeflated;
      if (payload.size() >= data.size()) {
        payload = data;
        w.method = kStored;
      }
      w.csize = narrow32(payload.size(), name);
    }
    buf.clear();
    put_local(buf, w);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    offset += buf.size() + payload.size();
    written.push_back(std::move(w));
  }

  buf.clear();
  for (const auto& w : written) put_central(buf, w);
  const std::uint32_t central_size = narrow32(buf.size(), zip_path.string());
  append_le32(buf, kEndSig);
  append_le16(buf, 0);
  append_le16(buf, 0);
  append_le16(buf, static_cast<std::uint16_t>(written.size()));
  append_le16(buf, static_cast<std::uint16_t>(written.size()));
  append_le32(buf, central_size);
  append_le32(buf, narrow32(offset, zip_path.string()));
  append_le16(buf, 0);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  out.close();
  if (!out) throw Error(Errc::OutputNotWritable, zip_path.string());
}

std::vector<Entry> read_zip(ByteView data) {
  constexpr std::size_t kEndSize = 22;
  if (data.size() < kEndSize) throw Error(Errc::ParseError, "zip", "too short");
  std::size_t end = data.size() - kEndSize;
  const std::size_t floor = data.size() > kEndSize + 0xFFFF ? data.size() - kEndSize - 0xFFFF : 0;
  while (load_le32(data.data() + end) != kEndSig) {
    if (end == floor) throw Error(Errc::ParseError, "zip", "no end of central directory");
    --end;
  }
  const std::uint16_t count = load_le16(data.data() + end + 10);
  const std::uint32_t central_size = load_le32(data.data() + end + 12);
  std::size_t pos = load_le32(data.data() + end + 16);
  if (static_cast<std::uint64_t>(pos) + central_size > end) {
    throw Error(Errc::ParseError, "zip", "central directory out of bounds");
  }

  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (pos + 46 > end || load_le32(data.data() + pos) != kCentralSig) {
      throw Error(Errc::ParseError, "zip", "bad central directory entry");
    }
    const std::uint16_t method = load_le16(data.data() + pos + 10);
    const std::uint32_t crc = load_le32(data.data() + pos + 16);
    const std::uint32_t csize = load_le32(data.data() + pos + 20);
    const std::uint32_t usize = load_le32(data.data() + pos + 24);
    const std::uint16_t name_len = load_le16(data.data() + pos + 28);
    const std::uint16_t extra_len = load_le16(data.data() + pos + 30);
    const std::uint16_t comment_len = load_le16(data.data() + pos + 32);
    const std::uint32_t local = load_le32(data.data() + pos + 42);
    if (pos + 46 + name_len > end) throw Error(Errc::ParseError, "zip", "truncated entry name");
    std::string name(reinterpret_cast<const char*>(data.data() + pos + 46), name_len);
    pos += 46 + name_len + extra_len + comment_len;

    if (!safe_name(name)) throw Error(Errc::InvalidValue, name, "unsafe zip entry name");
    if (static_cast<std::uint64_t>(local) + 30 > data.size() || load_le32(data.data() + local) != kLocalSig) {
      throw Error(Errc::ParseError, name, "bad local header");
    }
    const std::size_t body = local + 30 + load_le16(data.data() + local + 26) + load_le16(data.data() + local + 28);
    if (static_cast<std::uint64_t>(body) + csize > data.size()) throw Error(Errc::ParseError, name, "truncated data");
    const ByteView raw = data.subspan(body, csize);

    Entry e{std::move(name), {}};
    if (method == kStored) {
      e.data.assign(raw.begin(), raw.end());
    } else if (method == kDeflated) {
      e.data = inflate_raw(raw, usize, e.name);
    } else {
      throw Error(Errc::UnsupportedCompression, e.name, "zip method " + std::to_string(method));
    }
    if (e.data.size() != usize || crc_of(e.data) != crc) throw Error(Errc::ChecksumMismatch, e.name, "CRC-32");
    entries.push_back(std::move(e));
  }
  return entries;
}

void unzip(const fs::path& zip_path, const fs::path& dir) {
  const auto entries = read_zip(read_file(zip_path));
  fs::create_directories(dir);
  for (const auto& e : entries) {
    const fs::path target = dir / fs::path(e.name);
    if (e.is_directory()) {
      fs::create_directories(target);
    } else {
      fs::create_directories(target.parent_path());
      write_file(target, e.data);
    }
  }
}

}  // namespace sc2tools::zip
