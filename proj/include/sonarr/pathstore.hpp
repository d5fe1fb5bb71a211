#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sonarr/codec.hpp"
#include "sonarr/path.hpp"

namespace sonarr {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SortKey { Id, Availability, Confidentiality, Integrity, TotalRunTime, TraversabilityChance };

inline constexpr std::array<SortKey, 6> kAllSortKeys = {
    SortKey::Availability, SortKey::Confidentiality, SortKey::Id,
    SortKey::Integrity,    SortKey::TotalRunTime,    SortKey::TraversabilityChance};

inline constexpr std::string_view kFinalPathsTitle = "Final paths";
inline constexpr std::string_view kIndexTitle = "Index";
inline constexpr std::string_view kSummaryFileName = "summary";

std::string_view sort_key_title(SortKey key);
// Accepts the file title ("Total run time") or a slug ("total-run-time", "id").
std::optional<SortKey> parse_sort_key(std::string_view name);
// 4 for the ID key, 8 for the double-valued keys.
std::size_t sort_value_width(SortKey key);
std::size_t sort_record_size(SortKey key);
double sort_value(const MetricVector& metrics, SortKey key);

// "{Title}-{worker}.tmp"
std::filesystem::path worker_file(const std::filesystem::path& dir, std::string_view title,
                                  std::size_t worker);
// "{Title}.tmp"
std::filesystem::path merged_file(const std::filesystem::path& dir, std::string_view title);

// Number of consecutive worker final-paths files starting at worker 0.
std::size_t count_worker_files(const std::filesystem::path& dir);

// Appends final paths for one worker. The only writer of its files.
class PathFileWriter {
 public:
  PathFileWriter(const std::filesystem::path& dir, std::size_t worker);

  // Writes the current final-paths position to the index, then the record.
  // Returns that position.
  std::int64_t append(const RealityPath& path);

  std::uint64_t count() const noexcept { return rows_.size(); }
  std::int64_t bytes_written() const noexcept { return position_; }
  std::size_t worker() const noexcept { return worker_; }

  void flush();
  // Writes (value, position) records sorted by value descending, ties by
  // position ascending.
  void write_sort_file(SortKey key) const;
  void write_sort_files() const;

 private:
  struct Row {
    MetricVector metrics;
    std::int64_t position = 0;
  };

  std::filesystem::path dir_;
  std::size_t worker_;
  std::ofstream final_paths_;
  std::ofstream index_;
  std::int64_t position_ = 0;
  Bytes buffer_;
  std::vector<Row> rows_;
};

// Random access to a final-paths / index pair.
class PathFileReader {
 public:
  PathFileReader(const std::filesystem::path& final_paths, const std::filesystem::path& index);

  std::uint64_t size() const noexcept { return count_; }
  std::int64_t position(std::uint64_t n);
  // Reads the n-th appended path via the index entry at n * 8.
  RealityPath read(std::uint64_t n);
  RealityPath read_at(std::int64_t position);

 private:
  std::ifstream final_paths_;
  std::ifstream index_;
  std::uint64_t count_ = 0;
  std::int64_t final_size_ = 0;
};

PathFileReader open_worker_paths(const std::filesystem::path& dir, std::size_t worker);
PathFileReader open_merged_paths(const std::filesystem::path& dir);

// Byte offset of each worker's data within the merged final-paths file.
// Non-decreasing; equal neighbours mean an empty worker.
using OffsetTable = std::vector<std::int64_t>;

// Concatenates worker final-paths files in worker order and rewrites each
// worker's index entries with its offset.
OffsetTable merge_final_and_index(const std::filesystem::path& dir, std::size_t worker_count);

// Recovers the offsets from the worker final-paths file sizes.
OffsetTable load_offsets(const std::filesystem::path& dir, std::size_t worker_count);

struct SortRecord {
  double value = 0.0;
  std::int64_t position = 0;

  bool operator==(const SortRecord&) const = default;
};

std::vector<SortRecord> read_sort_file(const std::filesystem::path& file, SortKey key);
std::vector<std::int64_t> read_position_file(const std::filesystem::path& file);

// k-way merge of the worker sort files into the complete sort file, which
// holds only offset-adjusted positions in non-increasing key order.
void merge_sort_files(const std::filesystem::path& dir, SortKey key, const OffsetTable& offsets);

// Builds the complete sort file if it does not exist yet. Returns true when
// it had to be built.
bool ensure_sort_file(const std::filesystem::path& dir, SortKey key);

struct SortedPath {
  std::int64_t position = 0;
  double value = 0.0;
  RealityPath path;
};

// The first k paths by key, descending. k beyond the path count returns all.
std::vector<SortedPath> query_sorted(const std::filesystem::path& dir, SortKey key, std::size_t k);

// Every stored path: the merged file when present, otherwise each worker's
// file in worker order.
std::vector<RealityPath> read_all_paths(const std::filesystem::path& dir);

// Sorted canonical keys; equal sets mean equal results regardless of path IDs
// and discovery order.
std::vector<Bytes> canonical_path_set(const std::vector<RealityPath>& paths);

}  // namespace sonarr
