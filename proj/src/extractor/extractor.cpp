#include "sc2tools/extractor.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <ctime>

#include "sc2tools/error.hpp"
#include "sc2tools/mpq.hpp"
#include "sc2tools/protocol.hpp"

namespace sc2tools::extract {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Ok: return "Ok";
    case Status::Filtered: return "Filtered";
    case Status::Failed: return "Failed";
  }
  return "Failed";
}

namespace {

Race race_from_details(const std::string& race) {
  if (auto r = parse_race(race)) return *r;
  throw Error(Errc::SchemaMismatch, "player.race", "unknown race '" + race + "'");
}

GameResult result_from_details(std::int64_t result) {
  switch (result) {
    case 0: return GameResult::Unknown;
    case 1: return GameResult::Win;
    case 2: return GameResult::Loss;
    case 3: return GameResult::Tie;
    default: throw Error(Errc::SchemaMismatch, "player.result", "unknown result code");
  }
}

ReplayRecord build_record(const protocol::ProtocolHeader& header, const protocol::ReplayDetails& details,
                          std::vector<protocol::RawEvent> raw_events, std::string source_file) {
  ReplayRecord rec;
  rec.header = header;
  rec.map_name = details.map_name;
  rec.game_duration_loops = header.duration_loops;
  rec.game_duration_seconds = header.duration_loops / protocol::kLoopsPerSecond;
  rec.start_time_utc = protocol::filetime_to_unix(details.time_utc_filetime);
  rec.source_file = std::move(source_file);

  if (details.players.empty() || details.players.size() > 16) {
    throw Error(Errc::SchemaMismatch, "player_list", "expected 1..16 players");
  }
  for (const auto& p : details.players) {
    rec.players.push_back({p.name, race_from_details(p.race), result_from_details(p.result), 0.0});
  }

  std::vector<std::uint64_t> commands(rec.players.size(), 0);
  rec.events.reserve(raw_events.size());
  for (auto& e : raw_events) {
    if (e.loop < 0 || e.loop > header.duration_loops) {
      throw Error(Errc::SchemaMismatch, "event.loop", "outside game duration");
    }
    if (e.player < INT32_MIN || e.player > INT32_MAX) {
      throw Error(Errc::SchemaMismatch, "event.player", "out of range");
    }
    if (e.kind == protocol::kCommandEvent && e.player >= 0 &&
        static_cast<std::size_t>(e.player) < commands.size()) {
      ++commands[static_cast<std::size_t>(e.player)];
    }
    rec.events.push_back({static_cast<std::uint32_t>(e.loop), static_cast<std::int32_t>(e.player),
                          std::move(e.kind), std::move(e.payload)});
  }
  std::stable_sort(rec.events.begin(), rec.events.end(),
                   [](const GameEvent& a, const GameEvent& b) { return a.loop < b.loop; });

  const double minutes = rec.game_duration_seconds / 60.0;
  for (std::size_t i = 0; i < rec.players.size(); ++i) {
    rec.players[i].apm = minutes > 0 ? static_cast<double>(commands[i]) / minutes : 0.0;
  }
  return rec;
}

std::string date_bucket(std::int64_t unix_seconds) {
  const std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d", tm.tm_year + 1900, tm.tm_mon + 1);
  return buf;
}

/// Serves ids resolved by the sorted pre-pass.
class ResolvedClient final : public anon::AnonymizerClient {
 public:
  ResolvedClient(const std::map<std::string, std::string>& ids,
                 const std::map<std::string, std::string>& failures)
      : ids_(ids), failures_(failures) {}

  std::string anonymize(std::string_view nickname) override {
    const std::string key(nickname);
    if (auto it = ids_.find(key); it != ids_.end()) return it->second;
    const auto failure = failures_.find(key);
    throw Error(Errc::AnonymizerUnavailable, {},
                failure != failures_.end() ? failure->second : "nickname not resolved");
  }

 private:
  const std::map<std::string, std::string>& ids_;
  const std::map<std::string, std::string>& failures_;
};

void anonymize_one(ReplayResult& result, anon::AnonymizerClient& client) {
  if (result.outcome.status != Status::Ok) return;
  try {
    result.record = anonymize_record(std::move(*result.record), client);
    result.outcome.log.push_back({LogLevel::Debug, "anonymize", "nicknames replaced"});
  } catch (const Error& e) {
    result.record.reset();
    result.outcome.status = Status::Failed;
    result.outcome.reason = std::string(kReasonAnonymizer);
    result.outcome.stage = "anonymize";
    result.outcome.log.push_back({LogLevel::Error, "anonymize", e.what()});
  }
}

/// Resolves every nickname of the Ok records through `client` in sorted
/// order; returns the resolved map and per-nickname failures.
std::pair<std::map<std::string, std::string>, std::map<std::string, std::string>> resolve_nicknames(
    const std::vector<ReplayResult>& results, anon::AnonymizerClient& client) {
  std::set<std::string> names;
  for (const auto& r : results) {
    if (r.outcome.status != Status::Ok) continue;
    for (const auto& p : r.record->players) names.insert(p.nickname);
  }
  std::map<std::string, std::string> ids;
  std::map<std::string, std::string> failures;
  for (const auto& name : names) {
    try {
      ids.emplace(name, client.anonymize(name));
    } catch (const Error& e) {
      failures.emplace(name, e.what());
    }
  }
  return {std::move(ids), std::move(failures)};
}

std::string relative_name(const fs::path& file, const fs::path& base) {
  if (base.empty()) return file.filename().generic_string();
  return file.lexically_relative(base).generic_string();
}

}  // namespace

json summary_to_json(const PackageSummary& s) {
  return {{"total_replays", s.total_replays},
          {"ok", s.ok},
          {"filtered", s.filtered},
          {"failed", s.failed},
          {"histograms",
           {{"maps", s.maps},
            {"races", s.races},
            {"matchups", s.matchups},
            {"game_versions", s.game_versions},
            {"dates", s.dates}}}};
}

PackageSummary summary_from_json(const json& j) {
  auto count = [&](const json& parent, const char* key, const std::string& path) -> std::uint64_t {
    if (!parent.contains(key) || !parent[key].is_number_integer() ||
        (!parent[key].is_number_unsigned() && parent[key].get<std::int64_t>() < 0)) {
      throw Error(Errc::SchemaViolation, path, "expected unsigned integer");
    }
    return parent[key].get<std::uint64_t>();
  };
  if (!j.is_object()) throw Error(Errc::SchemaViolation, "$", "expected object");
  PackageSummary s;
  s.total_replays = count(j, "total_replays", "total_replays");
  s.ok = count(j, "ok", "ok");
  s.filtered = count(j, "filtered", "filtered");
  s.failed = count(j, "failed", "failed");
  if (s.ok + s.filtered + s.failed != s.total_replays) {
    throw Error(Errc::SchemaViolation, "total_replays", "ok + filtered + failed != total");
  }
  if (!j.contains("histograms") || !j["histograms"].is_object()) {
    throw Error(Errc::SchemaViolation, "histograms", "expected object");
  }
  const json& h = j["histograms"];
  auto histogram = [&](const char* key, std::map<std::string, std::uint64_t>& out) {
    const std::string path = std::string("histograms.") + key;
    if (!h.contains(key) || !h[key].is_object()) throw Error(Errc::SchemaViolation, path, "expected object");
    for (const auto& [k, v] : h[key].items()) out[k] = count(h[key], k.c_str(), path + "." + k);
  };
  histogram("maps", s.maps);
  histogram("races", s.races);
  histogram("matchups", s.matchups);
  histogram("game_versions", s.game_versions);
  histogram("dates", s.dates);
  return s;
}

FilterVerdict clean_replay(const ReplayRecord& record, const FilterSpec& filters) {
  if (filters.min_duration_loops && record.game_duration_loops < *filters.min_duration_loops) {
    return {std::string(kRejectDuration)};
  }
  if (filters.max_duration_loops && record.game_duration_loops > *filters.max_duration_loops) {
    return {std::string(kRejectDuration)};
  }
  if (!filters.allowed_player_counts.empty() &&
      !filters.allowed_player_counts.contains(record.players.size())) {
    return {std::string(kRejectPlayerCount)};
  }
  if (!filters.allowed_game_versions.empty() &&
      !filters.allowed_game_versions.contains(record.header.version.to_string())) {
    return {std::string(kRejectGameVersion)};
  }
  return {};
}

ReplayResult process_replay_bytes(ByteView data, std::string source_file,
                                  const ExtractionOptions& options) {
  ReplayResult result;
  ProcessingOutcome& out = result.outcome;
  out.path = source_file;
  std::string stage = "open_archive";
  try {
    const mpq::MpqArchive archive = mpq::open_archive(data);

    stage = "header";
    if (!archive.user_data()) throw Error(Errc::SchemaMismatch, "header", "no user-data header");
    const protocol::ProtocolHeader header = protocol::decode_replay_header(archive.user_data()->content);

    stage = "details";
    const protocol::ReplayDetails details =
        protocol::decode_details(mpq::extract_file(archive, protocol::kDetailsMember));

    stage = "events";
    auto events = protocol::decode_game_events(mpq::extract_file(archive, protocol::kGameEventsMember));

    stage = "validate";
    ReplayRecord record = build_record(header, details, std::move(events), std::move(source_file));
    validate_record(record);

    stage = "clean";
    const FilterVerdict verdict = clean_replay(record, options.filters);
    out.stage = stage;
    if (!verdict.keep()) {
      out.status = Status::Filtered;
      out.reason = verdict.reason;
      out.log.push_back({LogLevel::Info, stage, "filtered: " + verdict.reason});
      return result;
    }
    out.status = Status::Ok;
    out.log.push_back({LogLevel::Debug, "extract",
                       "ok: " + std::to_string(record.players.size()) + " players, " +
                           std::to_string(record.events.size()) + " events"});
    result.record = std::move(record);
  } catch (const Error& e) {
    out.status = Status::Failed;
    out.reason = std::string(to_string(e.code()));
    out.stage = stage;
    out.log.push_back({LogLevel::Error, stage, e.what()});
  } catch (const std::exception& e) {
    out.status = Status::Failed;
    out.reason = "Internal";
    out.stage = stage;
    out.log.push_back({LogLevel::Error, stage, e.what()});
  }
  return result;
}

ReplayResult process_replay(const fs::path& path, const ExtractionOptions& options) {
  Bytes data;
  try {
    data = read_file(path);
  } catch (const Error& e) {
    ReplayResult result;
    result.outcome = {path.filename().string(), Status::Failed, std::string(to_string(e.code())), "read",
                      {{LogLevel::Error, "read", e.what()}}};
    return result;
  }
  ReplayResult result = process_replay_bytes(data, path.filename().string(), options);
  if (result.outcome.status == Status::Ok && options.anonymizer) {
    anonymize_one(result, *options.anonymizer);
  }
  return result;
}

ReplayRecord anonymize_record(ReplayRecord record, anon::AnonymizerClient& client) {
  for (auto& player : record.players) player.nickname = client.anonymize(player.nickname);
  return record;
}

PackageSummary summarize(std::span<const ReplayResult> results) {
  PackageSummary s;
  for (const auto& r : results) {
    ++s.total_replays;
    switch (r.outcome.status) {
      case Status::Ok: ++s.ok; break;
      case Status::Filtered: ++s.filtered; continue;
      case Status::Failed: ++s.failed; continue;
    }
    const ReplayRecord& rec = *r.record;
    ++s.maps[rec.map_name];
    for (const auto& p : rec.players) ++s.races[std::string(to_string(p.race))];
    if (auto m = matchup(rec)) ++s.matchups[*m];
    ++s.game_versions[rec.header.version.to_string()];
    ++s.dates[date_bucket(rec.start_time_utc)];
  }
  return s;
}

std::vector<ReplayResult> extract_batch(std::span<const fs::path> files, const fs::path& base,
                                        const ExtractionOptions& options, int workers) {
  const auto n = static_cast<std::ptrdiff_t>(files.size());
  std::vector<ReplayResult> results(files.size());
  ExtractionOptions decode_only = options;
  decode_only.anonymizer = nullptr;

#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    results[idx] = process_replay(files[idx], decode_only);
    results[idx].outcome.path = relative_name(files[idx], base);
  }

  if (options.anonymizer) {
    const auto [ids, failures] = resolve_nicknames(results, *options.anonymizer);
#pragma omp parallel num_threads(std::max(1, workers))
    {
      ResolvedClient client(ids, failures);
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) anonymize_one(results[static_cast<std::size_t>(i)], client);
    }
  }
  return results;
}

std::vector<ReplayResult> extract_batch_serial(std::span<const fs::path> files, const fs::path& base,
                                               const ExtractionOptions& options) {
  std::vector<ReplayResult> results;
  results.reserve(files.size());
  ExtractionOptions decode_only = options;
  decode_only.anonymizer = nullptr;
  for (const auto& file : files) {
    results.push_back(process_replay(file, decode_only));
    results.back().outcome.path = relative_name(file, base);
  }
  if (options.anonymizer) {
    const auto [ids, failures] = resolve_nicknames(results, *options.anonymizer);
    ResolvedClient client(ids, failures);
    for (auto& r : results) anonymize_one(r, client);
  }
  return results;
}

std::vector<fs::path> find_replays(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext.size() == kReplayExtension.size() &&
        std::equal(ext.begin(), ext.end(), kReplayExtension.begin(),
                   [](char a, char b) { return std::tolower(a) == std::tolower(b); })) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string output_name(std::string_view replay_file) {
  return fs::path(replay_file).stem().string() + ".json";
}

ReplaypackReport process_replaypack(const fs::path& input, const fs::path& output,
                                    const ExtractionOptions& options, int workers) {
  if (!fs::is_directory(input)) throw Error(Errc::NotADirectory, input.string());
  std::error_code ec;
  fs::create_directories(output, ec);
  if (ec || !fs::is_directory(output)) throw Error(Errc::OutputNotWritable, output.string(), ec.message());

  StageLog log(output / kMainLogFile, options.clock);
  const std::vector<fs::path> files = find_replays(input);
  log.info("extract", "replaypack " + input.filename().string() + ": " + std::to_string(files.size()) +
                          " replay files, anonymize=" + (options.anonymizer ? "yes" : "no"));

  const std::vector<ReplayResult> results = extract_batch(files, input, options, workers);

  std::atomic<bool> write_failed{false};
  std::string failed_name;
  const auto n = static_cast<std::ptrdiff_t>(results.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(1, workers))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const ReplayResult& r = results[static_cast<std::size_t>(i)];
    if (r.outcome.status != Status::Ok) continue;
    try {
      write_file(output / output_name(r.outcome.path), dump_record(*r.record));
    } catch (const Error& e) {
      if (!write_failed.exchange(true)) {
#pragma omp critical
        failed_name = e.subject();
      }
    }
  }
  if (write_failed) throw Error(Errc::OutputNotWritable, failed_name);

  ReplaypackReport report;
  std::string failed_log;
  for (const auto& r : results) {
    for (const auto& entry : r.outcome.log) {
      log.write(entry.level, entry.stage, r.outcome.path + ": " + entry.message);
    }
    if (r.outcome.status != Status::Ok) {
      failed_log += r.outcome.path + "\t" + std::string(to_string(r.outcome.status)) + "\t" +
                    r.outcome.reason + "\n";
    }
    report.outcomes.push_back(r.outcome);
  }
  report.summary = summarize(results);

  write_file(output / kSummaryFile, summary_to_json(report.summary).dump(1) + "\n");
  write_file(output / kFailedLogFile, failed_log);
  log.info("summary", "total=" + std::to_string(report.summary.total_replays) +
                          " ok=" + std::to_string(report.summary.ok) +
                          " filtered=" + std::to_string(report.summary.filtered) +
                          " failed=" + std::to_string(report.summary.failed));
  return report;
}

}  // namespace sc2tools::extract
