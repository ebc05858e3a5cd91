#pragma once

#include <cstddef>
#include <filesystem>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sc2tools/extractor.hpp"
#include "sc2tools/prep.hpp"
#include "sc2tools/record.hpp"

// Read side of the toolkit: single replays, replaypacks and datasets.
namespace sc2tools::dataset {

/// Errors: ParseError (not JSON), SchemaViolation(field path), Io.
ReplayRecord load_replay(const std::filesystem::path& path);
ReplayRecord parse_replay(std::string_view text, const std::string& origin = "<memory>");

struct FailedEntry {
  std::string path;
  std::string status;
  std::string reason;
};

/// Immutable view of one processed replaypack. Replay paths are indexed on
/// open and parsed on demand, in file name order.
class ReplaypackHandle {
 public:
  /// Errors: NotADirectory; ParseError / SchemaViolation for a malformed
  /// summary or mapping.
  static ReplaypackHandle open(const std::filesystem::path& dir);

  const std::string& name() const { return name_; }
  const std::filesystem::path& root() const { return root_; }
  const std::optional<extract::PackageSummary>& summary() const { return summary_; }
  const std::optional<prep::ProcessedMapping>& mapping() const { return mapping_; }
  const std::vector<FailedEntry>& failed() const { return failed_; }
  /// Auxiliary file kind (unprefixed name) -> actual path.
  const std::map<std::string, std::filesystem::path>& auxiliary() const { return auxiliary_; }
  /// Consistency problems, e.g. summary.ok != number of indexed replays.
  const std::vector<std::string>& integrity_warnings() const { return warnings_; }

  std::size_t size() const { return paths_.size(); }
  const std::vector<std::filesystem::path>& paths() const { return paths_; }
  ReplayRecord load(std::size_t i) const { return load_replay(paths_.at(i)); }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = ReplayRecord;
    using difference_type = std::ptrdiff_t;
    using pointer = void;
    using reference = ReplayRecord;

    iterator(const ReplaypackHandle* h, std::size_t i) : h_(h), i_(i) {}
    ReplayRecord operator*() const { return h_->load(i_); }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    bool operator==(const iterator& o) const { return i_ == o.i_; }

   private:
    const ReplaypackHandle* h_;
    std::size_t i_;
  };
  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, paths_.size()}; }

 private:
  std::string name_;
  std::filesystem::path root_;
  std::optional<extract::PackageSummary> summary_;
  std::optional<prep::ProcessedMapping> mapping_;
  std::vector<FailedEntry> failed_;
  std::map<std::string, std::filesystem::path> auxiliary_;
  std::vector<std::string> warnings_;
  std::vector<std::filesystem::path> paths_;
};

class DatasetHandle {
 public:
  /// One handle per subdirectory of `root`, in name order.
  static DatasetHandle open_local(const std::filesystem::path& root);
  /// Downloads and verifies every archive, unpacks it into
  /// "<cache>/extracted/<name>" and opens that tree.
  /// Errors: ChecksumMismatch / FetchFailed of the first failing entry.
  static DatasetHandle from_manifest(const std::vector<prep::ManifestEntry>& manifest,
                                     const std::filesystem::path& cache);

  const std::vector<ReplaypackHandle>& replaypacks() const { return packs_; }
  const std::optional<std::vector<prep::ManifestEntry>>& manifest() const { return manifest_; }
  const std::optional<std::filesystem::path>& cache_dir() const { return cache_; }

  std::size_t size() const;
  /// Global index across replaypacks, concatenated in name order.
  ReplayRecord load(std::size_t i) const;

  /// Calls fn(pack, record) for every record in order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& pack : packs_) {
      for (std::size_t i = 0; i < pack.size(); ++i) fn(pack, pack.load(i));
    }
  }

 private:
  std::vector<ReplaypackHandle> packs_;
  std::optional<std::vector<prep::ManifestEntry>> manifest_;
  std::optional<std::filesystem::path> cache_;
};

/// A directory is a local root; a file is read as a manifest.
DatasetHandle load_dataset(const std::filesystem::path& source, const std::filesystem::path& cache = {});

}  // namespace sc2tools::dataset
