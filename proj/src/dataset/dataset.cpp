#include "sc2tools/dataset.hpp"

#include <algorithm>
#include <set>

#include "sc2tools/bytes.hpp"
#include "sc2tools/error.hpp"
#include "sc2tools/zip.hpp"

namespace sc2tools::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, origin, e.what());
  }
}

std::string slurp(const fs::path& p) {
  const Bytes raw = read_file(p);
  return std::string(raw.begin(), raw.end());
}

/// Unprefixed auxiliary kind for `file`, if it is one ("X_main_log.log").
std::optional<std::string> auxiliary_kind(const std::string& file) {
  for (const auto& aux : prep::auxiliary_files()) {
    if (file == aux) return aux;
    if (file.size() > aux.size() + 1 && file.ends_with(aux) && file[file.size() - aux.size() - 1] == '_') {
      return aux;
    }
  }
  return std::nullopt;
}

std::vector<FailedEntry> parse_failed_log(const std::string& text) {
  std::vector<FailedEntry> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    FailedEntry e;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    e.path = line.substr(0, t1);
    if (t1 != std::string::npos) e.status = line.substr(t1 + 1, t2 == std::string::npos ? std::string::npos : t2 - t1 - 1);
    if (t2 != std::string::npos) e.reason = line.substr(t2 + 1);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

ReplayRecord parse_replay(std::string_view text, const std::string& origin) {
  return record_from_json(parse_json(text, origin));
}

ReplayRecord load_replay(const fs::path& path) { return parse_replay(slurp(path), path.string()); }

ReplaypackHandle ReplaypackHandle::open(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::NotADirectory, dir.string());
  ReplaypackHandle h;
  h.root_ = dir;
  h.name_ = dir.filename().string();

  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string file = e.path().filename().string();
    if (auto kind = auxiliary_kind(file)) {
      // Prefer the unprefixed file only if no prefixed copy exists.
      auto [it, inserted] = h.auxiliary_.emplace(*kind, e.path());
      if (!inserted && it->second.filename() == *kind) it->second = e.path();
      continue;
    }
    if (e.path().extension() == ".json") h.paths_.push_back(e.path());
  }
  std::sort(h.paths_.begin(), h.paths_.end());

  if (auto it = h.auxiliary_.find(std::string(extract::kSummaryFile)); it != h.auxiliary_.end()) {
    const json j = parse_json(slurp(it->second), it->second.string());
    h.summary_ = extract::summary_from_json(j);
  }
  if (auto it = h.auxiliary_.find(std::string(extract::kMappingFile)); it != h.auxiliary_.end()) {
    const json j = parse_json(slurp(it->second), it->second.string());
    if (!j.is_object()) throw Error(Errc::SchemaViolation, it->second.filename().string(), "expected object");
    prep::ProcessedMapping m;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) throw Error(Errc::SchemaViolation, it->second.filename().string() + "." + k, "expected string");
      m.emplace(k, v.get<std::string>());
    }
    h.mapping_ = std::move(m);
  }
  if (auto it = h.auxiliary_.find(std::string(extract::kFailedLogFile)); it != h.auxiliary_.end()) {
    h.failed_ = parse_failed_log(slurp(it->second));
  }
  if (h.summary_ && h.summary_->ok != h.paths_.size()) {
    h.warnings_.push_back("IntegrityWarning: summary reports ok=" + std::to_string(h.summary_->ok) + " but " +
                          std::to_string(h.paths_.size()) + " replay documents are present");
  }
  return h;
}

DatasetHandle DatasetHandle::open_local(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(Errc::NotADirectory, root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  DatasetHandle d;
  for (const auto& dir : dirs) d.packs_.push_back(ReplaypackHandle::open(dir));
  return d;
}

DatasetHandle DatasetHandle::from_manifest(const std::vector<prep::ManifestEntry>& manifest, const fs::path& cache) {
  const fs::path archives = cache / "archives";
  const fs::path extracted = cache / "extracted";
  const auto report = prep::download_replaypacks(manifest, archives);
  if (!report.failures.empty()) {
    const auto& f = report.failures.front();
    throw Error(f.code, f.name, f.message);
  }
  for (const auto& m : manifest) {
    // A stamp of the archive checksum marks a complete unpack.
    const fs::path dir = extracted / m.name;
    const fs::path stamp = extracted / (m.name + ".sha256");
    std::error_code ec;
    if (fs::exists(stamp) && slurp(stamp) == m.checksum && fs::is_directory(dir)) continue;
    fs::remove_all(dir, ec);
    fs::remove(stamp, ec);
    zip::unzip(archives / (m.name + ".zip"), dir);
    write_file(stamp, m.checksum);
  }

  DatasetHandle d;
  std::vector<std::string> names;
  for (const auto& m : manifest) names.push_back(m.name);
  std::sort(names.begin(), names.end());
  for (const auto& n : names) d.packs_.push_back(ReplaypackHandle::open(extracted / n));
  d.manifest_ = manifest;
  d.cache_ = cache;
  return d;
}

std::size_t DatasetHandle::size() const {
  std::size_t n = 0;
  for (const auto& p : packs_) n += p.size();
  return n;
}

ReplayRecord DatasetHandle::load(std::size_t i) const {
  for (const auto& p : packs_) {
    if (i < p.size()) return p.load(i);
    i -= p.size();
  }
  throw std::out_of_range("dataset index out of range");
}

DatasetHandle load_dataset(const fs::path& source, const fs::path& cache) {
  if (fs::is_directory(source)) return DatasetHandle::open_local(source);
  if (cache.empty()) throw Error(Errc::InvalidConfig, "cache", "a cache directory is required for manifests");
  return DatasetHandle::from_manifest(prep::load_manifest(source), cache);
}

}  // namespace sc2tools::dataset
