#include <algorithm>
#include <fstream>

#include "sc2tools/bytes.hpp"
#include "sc2tools/prep.hpp"
#include "sc2tools/zip.hpp"

namespace sc2tools::prep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_replay(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".sc2replay";
}

std::vector<fs::path> subdirectories(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(Errc::NotADirectory, root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(Errc::OutputNotWritable, dir.string(), ec.message());
}

json read_json(const fs::path& path) {
  const Bytes raw = read_file(path);
  try {
    return json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path.string(), e.what());
  }
}

}  // namespace

const std::vector<std::string>& auxiliary_files() {
  static const std::vector<std::string> files{
      std::string(extract::kSummaryFile), std::string(extract::kMappingFile),
      std::string(extract::kFailedLogFile), std::string(extract::kMainLogFile)};
  return files;
}

FlattenReport flatten_directory(const fs::path& input, const fs::path& output) {
  if (!fs::is_directory(input)) throw Error(Errc::NotADirectory, input.string());
  if (fs::exists(output) && !fs::is_empty(output)) throw Error(Errc::OutputNotEmpty, output.string());
  ensure_directory(output);

  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& e : fs::recursive_directory_iterator(input)) {
    if (e.is_regular_file() && is_replay(e.path())) {
      files.emplace_back(e.path().lexically_relative(input).generic_string(), e.path());
    }
  }
  std::sort(files.begin(), files.end());

  FlattenReport report;
  for (const auto& [rel, path] : files) {
    Bytes data;
    try {
      data = read_file(path);
    } catch (const Error& e) {
      report.warnings.push_back(std::string("skipped unreadable file ") + rel + ": " + e.what());
      continue;
    }
    const std::string stem = sha256_hex(data).substr(0, 16);
    const std::string ext = path.extension().string();
    std::string name = stem + ext;
    for (int k = 1; report.mapping.contains(name); ++k) name = stem + "_" + std::to_string(k) + ext;
    write_file(output / name, data);
    report.mapping.emplace(name, rel);
  }
  write_file(output / extract::kMappingFile, json(report.mapping).dump(1) + "\n");
  return report;
}

std::vector<fs::path> package_directories(const fs::path& input_root, const fs::path& output) {
  const auto dirs = subdirectories(input_root);
  ensure_directory(output);
  std::vector<fs::path> zips;
  for (const auto& dir : dirs) {
    const fs::path target = output / (dir.filename().string() + ".zip");
    zip::zip_directory(dir, target);
    zips.push_back(target);
  }
  return zips;
}

std::vector<std::string> rename_auxiliary_files(const fs::path& dir, const std::string& tournament_name) {
  if (tournament_name.empty() || tournament_name.find_first_of("/\\") != std::string::npos) {
    throw Error(Errc::InvalidConfig, "tournament_name", "must be a non-empty file name prefix");
  }
  if (!fs::is_directory(dir)) throw Error(Errc::NotADirectory, dir.string());
  std::vector<std::string> present;
  for (const auto& file : auxiliary_files()) {
    const fs::path source = dir / file;
    const std::string prefixed = tournament_name + "_" + file;
    const fs::path target = dir / prefixed;
    if (fs::exists(source)) {
      if (fs::exists(target)) {
        if (read_file(source) != read_file(target)) throw Error(Errc::NameExists, target.string());
        fs::remove(source);
      } else {
        fs::rename(source, target);
      }
    }
    if (fs::exists(target)) present.push_back(prefixed);
  }
  return present;
}

json merge_json(const json& a, const json& b) {
  if (!a.is_object()) throw Error(Errc::NotAnObject, "a");
  if (!b.is_object()) throw Error(Errc::NotAnObject, "b");
  json merged = a;
  std::vector<std::string> conflicts;
  for (const auto& [key, value] : b.items()) {
    if (auto it = merged.find(key); it != merged.end()) {
      if (*it != value) conflicts.push_back(key);
    } else {
      merged[key] = value;
    }
  }
  if (!conflicts.empty()) {
    std::string keys;
    for (const auto& k : conflicts) keys += (keys.empty() ? "" : ",") + k;
    throw Error(Errc::Conflict, keys, "conflicting values");
  }
  return merged;
}

json merge_json_files(const fs::path& a, const fs::path& b) {
  const json ja = read_json(a);
  const json jb = read_json(b);
  if (!ja.is_object()) throw Error(Errc::NotAnObject, a.string());
  if (!jb.is_object()) throw Error(Errc::NotAnObject, b.string());
  return merge_json(ja, jb);
}

CopyReport copy_processed_mapping(const fs::path& input_root, const fs::path& output_root) {
  CopyReport report;
  std::vector<std::pair<fs::path, fs::path>> plan;
  for (const auto& dir : subdirectories(input_root)) {
    const fs::path mapping = dir / extract::kMappingFile;
    if (!fs::exists(mapping)) {
      report.warnings.push_back("no " + std::string(extract::kMappingFile) + " in " + dir.filename().string());
      continue;
    }
    const fs::path counterpart = output_root / dir.filename();
    if (!fs::is_directory(counterpart)) throw Error(Errc::MissingCounterpart, dir.filename().string());
    plan.emplace_back(mapping, counterpart / extract::kMappingFile);
  }
  for (const auto& [from, to] : plan) {
    write_file(to, read_file(from));
    report.copied.push_back(to);
  }
  return report;
}

}  // namespace sc2tools::prep
