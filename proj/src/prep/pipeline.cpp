#include <algorithm>
#include <atomic>
#include <memory>
#include <thread>

#include "sc2tools/bytes.hpp"
#include "sc2tools/prep.hpp"

namespace sc2tools::prep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<fs::path> pack_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(Errc::NotADirectory, root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

PackResult run_pack(const fs::path& dir, const fs::path& output_root, const extract::ExtractionOptions& options,
                    int workers) {
  PackResult r{dir.filename().string(), std::nullopt, {}};
  try {
    r.report = extract::process_replaypack(dir, output_root / dir.filename(), options, workers);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

void clear_directory(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (ec) throw Error(Errc::OutputNotWritable, dir.string(), ec.message());
}

}  // namespace

std::vector<PackResult> process_replaypacks(const fs::path& input_root, const fs::path& output_root,
                                            const extract::ExtractionOptions& options, int workers) {
  const auto dirs = pack_dirs(input_root);
  workers = std::max(1, workers);
  std::vector<PackResult> results(dirs.size());

  if (options.anonymizer || dirs.size() <= 1 || workers == 1) {
    for (std::size_t i = 0; i < dirs.size(); ++i) results[i] = run_pack(dirs[i], output_root, options, workers);
    return results;
  }

  const int outer = std::min<int>(workers, static_cast<int>(dirs.size()));
  const int inner = std::max(1, workers / outer);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < dirs.size();) {
      results[i] = run_pack(dirs[i], output_root, options, inner);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < outer; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

PipelineConfig parse_pipeline_config(const json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "$", "expected object");
  auto path_field = [&](const char* key) -> fs::path {
    if (!j.contains(key)) throw Error(Errc::InvalidConfig, key, "missing required field");
    if (!j[key].is_string() || j[key].get<std::string>().empty()) {
      throw Error(Errc::InvalidConfig, key, "expected non-empty string");
    }
    return fs::path(j[key].get<std::string>());
  };
  PipelineConfig c;
  c.input_root = path_field("input_root");
  c.work_root = path_field("work_root");
  c.output_root = path_field("output_root");

  if (j.contains("tournament_names")) {
    const json& t = j["tournament_names"];
    if (!t.is_object()) throw Error(Errc::InvalidConfig, "tournament_names", "expected object");
    for (const auto& [pack, name] : t.items()) {
      if (!name.is_string()) throw Error(Errc::InvalidConfig, "tournament_names." + pack, "expected string");
      c.tournament_names[pack] = name.get<std::string>();
    }
  }
  if (j.contains("workers")) {
    if (!j["workers"].is_number_integer() || j["workers"].get<std::int64_t>() < 1) {
      throw Error(Errc::InvalidConfig, "workers", "expected integer >= 1");
    }
    c.workers = static_cast<int>(j["workers"].get<std::int64_t>());
  }
  for (const char* flag : {"reproducible", "resume"}) {
    if (!j.contains(flag)) continue;
    if (!j[flag].is_boolean()) throw Error(Errc::InvalidConfig, flag, "expected boolean");
    (std::string_view(flag) == "resume" ? c.resume : c.reproducible) = j[flag].get<bool>();
  }

  if (j.contains("extraction")) {
    const json& x = j["extraction"];
    if (!x.is_object()) throw Error(Errc::InvalidConfig, "extraction", "expected object");
    auto seconds = [&](const char* key) -> std::optional<std::uint32_t> {
      if (!x.contains(key)) return std::nullopt;
      if (!x[key].is_number() || x[key].get<double>() < 0) {
        throw Error(Errc::InvalidConfig, std::string("extraction.") + key, "expected seconds >= 0");
      }
      return static_cast<std::uint32_t>(x[key].get<double>() * 16.0);
    };
    c.filters.min_duration_loops = seconds("min_duration_s");
    c.filters.max_duration_loops = seconds("max_duration_s");
    if (x.contains("player_counts")) {
      if (!x["player_counts"].is_array()) throw Error(Errc::InvalidConfig, "extraction.player_counts", "expected array");
      for (const auto& n : x["player_counts"]) {
        if (!n.is_number_integer() || n.get<std::int64_t>() < 0) throw Error(Errc::InvalidConfig, "extraction.player_counts", "expected integers");
        c.filters.allowed_player_counts.insert(n.get<std::size_t>());
      }
    }
    if (x.contains("game_versions")) {
      if (!x["game_versions"].is_array()) throw Error(Errc::InvalidConfig, "extraction.game_versions", "expected array");
      for (const auto& v : x["game_versions"]) {
        if (!v.is_string()) throw Error(Errc::InvalidConfig, "extraction.game_versions", "expected strings");
        c.filters.allowed_game_versions.insert(v.get<std::string>());
      }
    }
  }

  if (j.contains("anonymizer")) {
    const json& a = j["anonymizer"];
    if (!a.is_object()) throw Error(Errc::InvalidConfig, "anonymizer", "expected object");
    if (a.contains("store") == a.contains("address")) {
      throw Error(Errc::InvalidConfig, "anonymizer", "set exactly one of 'store' or 'address'");
    }
    if (a.contains("store")) {
      if (!a["store"].is_string()) throw Error(Errc::InvalidConfig, "anonymizer.store", "expected string");
      c.anonymizer_store = fs::path(a["store"].get<std::string>());
    } else {
      if (!a["address"].is_string()) throw Error(Errc::InvalidConfig, "anonymizer.address", "expected string");
      anon::parse_bind_address(a["address"].get<std::string>());
      c.anonymizer_address = a["address"].get<std::string>();
    }
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  const Bytes raw = read_file(path);
  try {
    return parse_pipeline_config(json::parse(raw.begin(), raw.end()));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path.string(), e.what());
  }
}

PipelineReport run_pipeline(const PipelineConfig& c) {
  if (!fs::is_directory(c.input_root)) throw Error(Errc::NotADirectory, c.input_root.string());

  const fs::path flat = c.work_root / "flattened";
  const fs::path processed = c.work_root / "processed";
  const fs::path markers = c.work_root / "markers";
  const fs::path raw_out = c.output_root / "raw";
  const fs::path processed_out = c.output_root / "processed";

  if (!c.resume) {
    for (const auto& d : {flat, processed, markers, raw_out, processed_out}) clear_directory(d);
  }
  std::error_code ec;
  fs::create_directories(markers, ec);
  if (ec) throw Error(Errc::OutputNotWritable, markers.string(), ec.message());

  extract::ExtractionOptions options;
  options.filters = c.filters;
  options.clock = c.reproducible ? fixed_log_clock(std::chrono::system_clock::time_point{}) : default_log_clock();
  std::unique_ptr<anon::AnonymizationStore> store;
  std::unique_ptr<anon::AnonymizerClient> client;
  if (c.anonymizer_store) {
    store = std::make_unique<anon::AnonymizationStore>(*c.anonymizer_store);
    client = std::make_unique<anon::StoreClient>(*store);
  } else if (c.anonymizer_address) {
    client = std::make_unique<anon::HttpAnonymizerClient>(*c.anonymizer_address);
  }
  options.anonymizer = client.get();

  PipelineReport report;
  auto step = [&](const std::string& name, auto&& body) {
    const fs::path marker = markers / (name + ".done");
    if (c.resume && fs::exists(marker)) {
      report.steps_skipped.push_back(name);
      return;
    }
    body();
    write_file(marker, std::string_view{});
    report.steps_run.push_back(name);
  };

  step("flatten", [&] {
    clear_directory(flat);
    for (const auto& pack : pack_dirs(c.input_root)) flatten_directory(pack, flat / pack.filename());
    fs::create_directories(flat);
  });
  step("package_raw", [&] { report.raw_zips = package_directories(flat, raw_out); });
  step("process", [&] {
    clear_directory(processed);
    fs::create_directories(processed);
    report.packs = process_replaypacks(flat, processed, options, c.workers);
    for (const auto& p : report.packs) {
      if (!p.error.empty()) throw Error(Errc::Io, p.name, p.error);
    }
  });
  step("copy_mapping", [&] { copy_processed_mapping(flat, processed); });
  step("rename", [&] {
    for (const auto& pack : pack_dirs(processed)) {
      const std::string name = pack.filename().string();
      const auto it = c.tournament_names.find(name);
      rename_auxiliary_files(pack, it != c.tournament_names.end() ? it->second : name);
    }
  });
  step("package_processed", [&] { report.processed_zips = package_directories(processed, processed_out); });
  return report;
}

}  // namespace sc2tools::prep
