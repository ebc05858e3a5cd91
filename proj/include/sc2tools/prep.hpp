#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sc2tools/error.hpp"
#include "sc2tools/extractor.hpp"

// Dataset preparation: flattening, packaging, renaming, merging, map and
// replaypack downloads, and the end-to-end pipeline.
namespace sc2tools::prep {

/// Output file name -> original relative path ('/' separators).
using ProcessedMapping = std::map<std::string, std::string>;

/// The auxiliary files a processed replaypack carries.
const std::vector<std::string>& auxiliary_files();

struct FlattenReport {
  ProcessedMapping mapping;
  std::vector<std::string> warnings;  ///< unreadable files, skipped
};

/// Copies every replay under `input` (recursively) into the top level of
/// `output` as "<first 16 hex of SHA-256><ext>" ("_<k>" appended when two
/// inputs share that prefix) and writes processed_mapping.json.
/// Errors: NotADirectory, OutputNotEmpty, OutputNotWritable.
FlattenReport flatten_directory(const std::filesystem::path& input, const std::filesystem::path& output);

/// One deterministic "<D>.zip" per top-level directory D of `input_root`;
/// returns the zip paths in name order. Errors: OutputNotWritable.
std::vector<std::filesystem::path> package_directories(const std::filesystem::path& input_root,
                                                       const std::filesystem::path& output);

/// Renames each auxiliary file F in `dir` to "<tournament>_F". Idempotent.
/// Returns the prefixed names now present. Errors: NameExists, InvalidConfig.
std::vector<std::string> rename_auxiliary_files(const std::filesystem::path& dir,
                                                const std::string& tournament_name);

/// Union of two JSON objects. Errors: NotAnObject, Conflict(subject lists
/// the conflicting keys, comma separated).
nlohmann::json merge_json(const nlohmann::json& a, const nlohmann::json& b);
/// File form; also ParseError.
nlohmann::json merge_json_files(const std::filesystem::path& a, const std::filesystem::path& b);

struct CopyReport {
  std::vector<std::filesystem::path> copied;
  std::vector<std::string> warnings;
};

/// Copies <input_root>/S/processed_mapping.json to <output_root>/S/ for
/// every S that has one. All counterparts are checked before anything is
/// copied. Errors: MissingCounterpart(S).
CopyReport copy_processed_mapping(const std::filesystem::path& input_root,
                                  const std::filesystem::path& output_root);

struct TransferFailure {
  std::string name;
  Errc code = Errc::FetchFailed;
  std::string message;
};

struct MapDownloadReport {
  std::vector<std::string> downloaded;  ///< map hashes fetched this run
  std::vector<std::string> present;     ///< already on disk with matching hash
  std::vector<TransferFailure> failures;
  std::size_t undecodable_replays = 0;
};

/// Collects the unique map hashes referenced by replays in `replay_dirs`
/// and fetches each missing one from "<base_url>/<hash>.s2ma" into
/// "<output>/<hash>.SC2Map". At most 4 transfers run at once.
MapDownloadReport download_maps(const std::vector<std::filesystem::path>& replay_dirs,
                                const std::filesystem::path& output, const std::string& base_url);

struct PackResult {
  std::string name;
  std::optional<extract::ReplaypackReport> report;
  std::string error;  ///< set when the replaypack as a whole failed
};

/// Runs process_replaypack() on every top-level directory of `input_root`
/// into "<output_root>/<dir>". Replaypacks run concurrently, bounded by
/// `workers`, except with an anonymizer: then they run in name order so
/// id assignment does not depend on scheduling.
std::vector<PackResult> process_replaypacks(const std::filesystem::path& input_root,
                                            const std::filesystem::path& output_root,
                                            const extract::ExtractionOptions& options, int workers);

struct ManifestEntry {
  std::string name;
  std::string url;
  std::string checksum;  ///< lowercase hex SHA-256
  std::uint64_t size_bytes = 0;
};

/// Errors: InvalidConfig(field path).
std::vector<ManifestEntry> parse_manifest(const nlohmann::json& j);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct ReplaypackDownloadReport {
  std::vector<std::string> verified;  ///< downloaded and verified this run
  std::vector<std::string> skipped;   ///< already present and verified
  std::vector<TransferFailure> failures;
  std::size_t transfers = 0;
};

/// Streams each archive to "<output>/<name>.zip" through a ".part" file
/// and verifies size and SHA-256. Mismatching downloads are deleted and
/// reported as ChecksumMismatch.
ReplaypackDownloadReport download_replaypacks(const std::vector<ManifestEntry>& manifest,
                                              const std::filesystem::path& output);

struct PipelineConfig {
  std::filesystem::path input_root;
  std::filesystem::path work_root;
  std::filesystem::path output_root;
  std::map<std::string, std::string> tournament_names;  ///< replaypack -> prefix; default: its name
  int workers = 1;
  extract::FilterSpec filters;
  std::optional<std::filesystem::path> anonymizer_store;
  std::optional<std::string> anonymizer_address;
  bool reproducible = true;  ///< pin log timestamps to the Unix epoch
  bool resume = false;       ///< skip steps whose completion marker exists
};

/// Errors: InvalidConfig(field).
PipelineConfig parse_pipeline_config(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineReport {
  std::vector<std::filesystem::path> raw_zips;
  std::vector<std::filesystem::path> processed_zips;
  std::vector<PackResult> packs;
  std::vector<std::string> steps_run;
  std::vector<std::string> steps_skipped;
};

/// flatten -> package raw -> process -> copy mapping -> rename -> package
/// processed. Raw zips go to <output_root>/raw, processed ones to
/// <output_root>/processed; staging lives under <work_root>.
PipelineReport run_pipeline(const PipelineConfig& config);

}  // namespace sc2tools::prep
