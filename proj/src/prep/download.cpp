#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include "sc2tools/bytes.hpp"
#include "sc2tools/http.hpp"
#include "sc2tools/mpq.hpp"
#include "sc2tools/prep.hpp"
#include "sc2tools/protocol.hpp"

namespace sc2tools::prep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxTransfers = 4;

/// Runs fn(i) for i in [0, n) on up to kMaxTransfers threads.
template <typename Fn>
void for_each_transfer(std::size_t n, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(n, kMaxTransfers); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

bool is_hex64(const std::string& s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

/// Downloads into "<dest>.part", verifies, then renames into place.
void fetch_verified(const std::string& url, const fs::path& dest, const std::string& checksum,
                    std::optional<std::uint64_t> size) {
  fs::path part = dest;
  part += ".part";
  try {
    http::download(url, part);
  } catch (...) {
    std::error_code ec;
    fs::remove(part, ec);
    throw;
  }
  const std::uint64_t got = fs::file_size(part);
  const std::string digest = sha256_file_hex(part);
  if ((size && got != *size) || digest != checksum) {
    fs::remove(part);
    throw Error(Errc::ChecksumMismatch, dest.filename().string(),
                "expected " + checksum + ", got " + digest + " (" + std::to_string(got) + " bytes)");
  }
  fs::rename(part, dest);
}

bool already_verified(const fs::path& path, const std::string& checksum, std::optional<std::uint64_t> size) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return false;
  if (size && fs::file_size(path, ec) != *size) return false;
  return sha256_file_hex(path) == checksum;
}

}  // namespace

MapDownloadReport download_maps(const std::vector<fs::path>& replay_dirs, const fs::path& output,
                                const std::string& base_url) {
  MapDownloadReport report;
  std::set<std::string> hashes;
  for (const auto& dir : replay_dirs) {
    for (const auto& file : extract::find_replays(dir)) {
      try {
        const auto archive = mpq::open_archive(read_file(file));
        const auto details = protocol::decode_details(mpq::extract_file(archive, protocol::kDetailsMember));
        hashes.insert(details.map_hashes.begin(), details.map_hashes.end());
      } catch (const Error&) {
        ++report.undecodable_replays;
      }
    }
  }
  std::error_code ec;
  fs::create_directories(output, ec);
  if (ec) throw Error(Errc::OutputNotWritable, output.string(), ec.message());

  std::vector<std::string> missing;
  for (const auto& h : hashes) {
    if (already_verified(output / (h + ".SC2Map"), h, std::nullopt)) {
      report.present.push_back(h);
    } else {
      missing.push_back(h);
    }
  }

  std::string base = base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  std::mutex mu;
  for_each_transfer(missing.size(), [&](std::size_t i) {
    const std::string& h = missing[i];
    const std::string url = base + "/" + h + ".s2ma";
    try {
      fetch_verified(url, output / (h + ".SC2Map"), h, std::nullopt);
      std::lock_guard lock(mu);
      report.downloaded.push_back(h);
    } catch (const Error& e) {
      std::lock_guard lock(mu);
      report.failures.push_back({h, e.code(), e.what()});
    }
  });
  std::sort(report.downloaded.begin(), report.downloaded.end());
  std::sort(report.failures.begin(), report.failures.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return report;
}

std::vector<ManifestEntry> parse_manifest(const json& j) {
  const json* list = &j;
  if (j.is_object() && j.contains("replaypacks")) list = &j["replaypacks"];
  if (!list->is_array()) throw Error(Errc::InvalidConfig, "replaypacks", "expected array");
  std::vector<ManifestEntry> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& e = (*list)[i];
    const std::string at = "replaypacks[" + std::to_string(i) + "]";
    if (!e.is_object()) throw Error(Errc::InvalidConfig, at, "expected object");
    auto str = [&](const char* key) {
      if (!e.contains(key) || !e[key].is_string()) throw Error(Errc::InvalidConfig, at + "." + key, "expected string");
      return e[key].get<std::string>();
    };
    ManifestEntry m{str("name"), str("url"), str("checksum"), 0};
    std::transform(m.checksum.begin(), m.checksum.end(), m.checksum.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (!e.contains("size_bytes") || !e["size_bytes"].is_number_integer() ||
        (!e["size_bytes"].is_number_unsigned() && e["size_bytes"].get<std::int64_t>() < 0)) {
      throw Error(Errc::InvalidConfig, at + ".size_bytes", "expected unsigned integer");
    }
    m.size_bytes = e["size_bytes"].get<std::uint64_t>();
    if (m.name.empty() || m.name.find_first_of("/\\") != std::string::npos || m.name == "." || m.name == "..") {
      throw Error(Errc::InvalidConfig, at + ".name", "must be a plain file name");
    }
    if (!is_hex64(m.checksum)) throw Error(Errc::InvalidConfig, at + ".checksum", "expected 64 hex characters");
    if (!names.insert(m.name).second) throw Error(Errc::InvalidConfig, at + ".name", "duplicate name");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  const Bytes raw = read_file(path);
  try {
    return parse_manifest(json::parse(raw.begin(), raw.end()));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path.string(), e.what());
  }
}

ReplaypackDownloadReport download_replaypacks(const std::vector<ManifestEntry>& manifest, const fs::path& output) {
  ReplaypackDownloadReport report;
  std::error_code ec;
  fs::create_directories(output, ec);
  if (ec) throw Error(Errc::OutputNotWritable, output.string(), ec.message());

  std::vector<const ManifestEntry*> todo;
  for (const auto& m : manifest) {
    if (already_verified(output / (m.name + ".zip"), m.checksum, m.size_bytes)) {
      report.skipped.push_back(m.name);
    } else {
      todo.push_back(&m);
    }
  }

  std::mutex mu;
  for_each_transfer(todo.size(), [&](std::size_t i) {
    const ManifestEntry& m = *todo[i];
    {
      std::lock_guard lock(mu);
      ++report.transfers;
    }
    try {
      fetch_verified(m.url, output / (m.name + ".zip"), m.checksum, m.size_bytes);
      std::lock_guard lock(mu);
      report.verified.push_back(m.name);
    } catch (const Error& e) {
      std::error_code rm;
      if (e.code() == Errc::ChecksumMismatch) fs::remove(output / (m.name + ".zip"), rm);
      std::lock_guard lock(mu);
      report.failures.push_back({m.name, e.code() == Errc::ChecksumMismatch ? Errc::ChecksumMismatch : Errc::FetchFailed,
                                 e.what()});
    }
  });
  std::sort(report.verified.begin(), report.verified.end());
  std::sort(report.failures.begin(), report.failures.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return report;
}

}  // namespace sc2tools::prep
