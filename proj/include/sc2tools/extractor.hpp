#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sc2tools/anonymizer.hpp"
#include "sc2tools/bytes.hpp"
#include "sc2tools/log.hpp"
#include "sc2tools/record.hpp"

namespace sc2tools::extract {

inline constexpr std::string_view kReplayExtension = ".SC2Replay";
inline constexpr std::string_view kSummaryFile = "package_summary.json";
inline constexpr std::string_view kFailedLogFile = "processed_failed.log";
inline constexpr std::string_view kMainLogFile = "main_log.log";
inline constexpr std::string_view kMappingFile = "processed_mapping.json";

/// Filter rejection reasons, in evaluation order.
inline constexpr std::string_view kRejectDuration = "duration";
inline constexpr std::string_view kRejectPlayerCount = "player_count";
inline constexpr std::string_view kRejectGameVersion = "game_version";
/// Failure reason when the anonymizer cannot serve a nickname.
inline constexpr std::string_view kReasonAnonymizer = "anonymizer";

struct FilterSpec {
  std::optional<std::uint32_t> min_duration_loops;
  std::optional<std::uint32_t> max_duration_loops;
  std::set<std::size_t> allowed_player_counts;  ///< empty: any
  std::set<std::string> allowed_game_versions;  ///< "major.minor.revision.build"; empty: any
};

struct ExtractionOptions {
  FilterSpec filters;
  /// Null keeps nicknames as-is.
  anon::AnonymizerClient* anonymizer = nullptr;
  LogClock clock = default_log_clock();
};

enum class Status { Ok, Filtered, Failed };
std::string_view to_string(Status status);

struct LogEntry {
  LogLevel level = LogLevel::Info;
  std::string stage;
  std::string message;
};

struct ProcessingOutcome {
  std::string path;    ///< file name relative to the replaypack directory
  Status status = Status::Ok;
  std::string reason;  ///< error kind or filter name; empty when Ok
  std::string stage;   ///< pipeline stage that produced the outcome
  std::vector<LogEntry> log;
};

struct ReplayResult {
  ProcessingOutcome outcome;
  std::optional<ReplayRecord> record;  ///< present iff status == Ok
};

struct PackageSummary {
  std::uint64_t total_replays = 0;
  std::uint64_t ok = 0;
  std::uint64_t filtered = 0;
  std::uint64_t failed = 0;
  std::map<std::string, std::uint64_t> maps;
  std::map<std::string, std::uint64_t> races;
  std::map<std::string, std::uint64_t> matchups;
  std::map<std::string, std::uint64_t> game_versions;
  std::map<std::string, std::uint64_t> dates;  ///< "YYYY-MM" of game start

  friend bool operator==(const PackageSummary&, const PackageSummary&) = default;
};

nlohmann::json summary_to_json(const PackageSummary& summary);
/// Throws Error(SchemaViolation, field).
PackageSummary summary_from_json(const nlohmann::json& j);

/// Filter verdict: keep when `reason` is empty.
struct FilterVerdict {
  std::string reason;
  bool keep() const { return reason.empty(); }
};

/// Duration bounds, then player counts, then game versions; the first
/// failing rule names the reason.
FilterVerdict clean_replay(const ReplayRecord& record, const FilterSpec& filters);

/// Decodes one replay: open archive -> header -> details -> events ->
/// validate -> clean. Never throws; anonymization is applied by the
/// batch functions (or anonymize_record()).
ReplayResult process_replay_bytes(ByteView data, std::string source_file, const ExtractionOptions& options);
ReplayResult process_replay(const std::filesystem::path& path, const ExtractionOptions& options);

/// Replaces every nickname via `client`; other fields untouched.
/// Propagates Error(AnonymizerUnavailable).
ReplayRecord anonymize_record(ReplayRecord record, anon::AnonymizerClient& client);

/// Histograms come from Ok records only.
PackageSummary summarize(std::span<const ReplayResult> results);

/// Data-parallel batch over `workers` OpenMP threads. Results are in input
/// order. With an anonymizer, nicknames are resolved in sorted order
/// before the parallel rewrite, so ids do not depend on scheduling.
std::vector<ReplayResult> extract_batch(std::span<const std::filesystem::path> files,
                                        const std::filesystem::path& base,
                                        const ExtractionOptions& options, int workers);

/// Single-threaded reference for extract_batch().
std::vector<ReplayResult> extract_batch_serial(std::span<const std::filesystem::path> files,
                                               const std::filesystem::path& base,
                                               const ExtractionOptions& options);

/// Top-level files with the replay extension (case-insensitive), sorted.
std::vector<std::filesystem::path> find_replays(const std::filesystem::path& dir);

/// "<stem>.json" for a replay file name.
std::string output_name(std::string_view replay_file);

struct ReplaypackReport {
  PackageSummary summary;
  std::vector<ProcessingOutcome> outcomes;  ///< sorted by path
};

/// Processes every replay in `input` and writes one JSON per Ok replay
/// plus package_summary.json, processed_failed.log and main_log.log into
/// `output`. Errors: OutputNotWritable, NotADirectory.
ReplaypackReport process_replaypack(const std::filesystem::path& input,
                                    const std::filesystem::path& output,
                                    const ExtractionOptions& options, int workers);

}  // namespace sc2tools::extract
