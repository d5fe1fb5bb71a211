#include "sonarr/pathstore.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace sonarr {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open " + file.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw StoreError("cannot open " + file.string());
  return in;
}

std::int64_t byte_size(const fs::path& file) {
  std::error_code ec;
  const auto size = fs::file_size(file, ec);
  if (ec) throw StoreError("cannot stat " + file.string() + ": " + ec.message());
  return static_cast<std::int64_t>(size);
}

void write_bytes(std::ofstream& out, const Bytes& bytes, const fs::path& file) {
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StoreError("write failed on " + file.string());
}

void encode_sort_value(ByteWriter& w, SortKey key, double value) {
  if (sort_value_width(key) == 4) {
    w.i32(static_cast<std::int32_t>(value));
  } else {
    w.f64(value);
  }
}

double read_sort_value(StreamReader& r, SortKey key) {
  return sort_value_width(key) == 4 ? static_cast<double>(r.i32()) : r.f64();
}

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    out += c == ' ' || c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

std::string_view sort_key_title(SortKey key) {
  switch (key) {
    case SortKey::Id: return "ID";
    case SortKey::Availability: return "Availability";
    case SortKey::Confidentiality: return "Confidentiality";
    case SortKey::Integrity: return "Integrity";
    case SortKey::TotalRunTime: return "Total run time";
    case SortKey::TraversabilityChance: return "Traversability chance";
  }
  return "ID";
}

std::optional<SortKey> parse_sort_key(std::string_view name) {
  const auto wanted = slug(name);
  for (SortKey key : kAllSortKeys) {
    if (slug(sort_key_title(key)) == wanted) return key;
  }
  if (wanted == "traversability" || wanted == "chance") return SortKey::TraversabilityChance;
  if (wanted == "run-time" || wanted == "runtime") return SortKey::TotalRunTime;
  return std::nullopt;
}

std::size_t sort_value_width(SortKey key) { return key == SortKey::Id ? 4 : 8; }

std::size_t sort_record_size(SortKey key) {
  return key == SortKey::Id ? wire::kIntSortRecordSize : wire::kDoubleSortRecordSize;
}

double sort_value(const MetricVector& m, SortKey key) {
  switch (key) {
    case SortKey::Id: return static_cast<double>(m.id);
    case SortKey::Availability: return m.availability;
    case SortKey::Confidentiality: return m.confidentiality;
    case SortKey::Integrity: return m.integrity;
    case SortKey::TotalRunTime: return m.total_run_time;
    case SortKey::TraversabilityChance: return m.traversability_chance;
  }
  return 0.0;
}

fs::path worker_file(const fs::path& dir, std::string_view title, std::size_t worker) {
  return dir / (std::string(title) + "-" + std::to_string(worker) + ".tmp");
}

fs::path merged_file(const fs::path& dir, std::string_view title) {
  return dir / (std::string(title) + ".tmp");
}

std::size_t count_worker_files(const fs::path& dir) {
  std::size_t n = 0;
  while (fs::exists(worker_file(dir, kFinalPathsTitle, n))) ++n;
  return n;
}

PathFileWriter::PathFileWriter(const fs::path& dir, std::size_t worker)
    : dir_(dir),
      worker_(worker),
      final_paths_(open_out(worker_file(dir, kFinalPathsTitle, worker))),
      index_(open_out(worker_file(dir, kIndexTitle, worker))) {}

std::int64_t PathFileWriter::append(const RealityPath& path) {
  const std::int64_t position = position_;
  buffer_.clear();
  ByteWriter w(buffer_);
  w.i64(position);
  write_bytes(index_, buffer_, worker_file(dir_, kIndexTitle, worker_));

  buffer_.clear();
  encode_path(w, path);
  write_bytes(final_paths_, buffer_, worker_file(dir_, kFinalPathsTitle, worker_));
  position_ += static_cast<std::int64_t>(buffer_.size());

  MetricVector metrics = path.metrics;
  metrics.id = path.id;
  rows_.push_back({metrics, position});
  return position;
}

void PathFileWriter::flush() {
  final_paths_.flush();
  index_.flush();
  if (!final_paths_ || !index_) throw StoreError("flush failed for worker " + std::to_string(worker_));
}

void PathFileWriter::write_sort_file(SortKey key) const {
  std::vector<SortRecord> records;
  records.reserve(rows_.size());
  for (const auto& row : rows_) records.push_back({sort_value(row.metrics, key), row.position});
  // Rows are already in position order, so a stable sort keeps ties ascending.
  std::stable_sort(records.begin(), records.end(),
                   [](const SortRecord& a, const SortRecord& b) { return a.value > b.value; });

  const auto file = worker_file(dir_, sort_key_title(key), worker_);
  auto out = open_out(file);
  Bytes buf;
  buf.reserve(records.size() * sort_record_size(key));
  ByteWriter w(buf);
  for (const auto& r : records) {
    encode_sort_value(w, key, r.value);
    w.i64(r.position);
  }
  write_bytes(out, buf, file);
}

void PathFileWriter::write_sort_files() const {
  for (SortKey key : kAllSortKeys) write_sort_file(key);
}

PathFileReader::PathFileReader(const fs::path& final_paths, const fs::path& index)
    : final_paths_(open_in(final_paths)), index_(open_in(index)) {
  const auto index_bytes = byte_size(index);
  if (index_bytes % static_cast<std::int64_t>(wire::kIndexEntrySize) != 0) {
    throw FormatError("index file " + index.string() + " is not a multiple of 8 bytes");
  }
  count_ = static_cast<std::uint64_t>(index_bytes) / wire::kIndexEntrySize;
  final_size_ = byte_size(final_paths);
}

std::int64_t PathFileReader::position(std::uint64_t n) {
  if (n >= count_) {
    throw StoreError("path ordinal " + std::to_string(n) + " out of range (" +
                     std::to_string(count_) + " paths)");
  }
  index_.clear();
  index_.seekg(static_cast<std::streamoff>(n * wire::kIndexEntrySize));
  StreamReader r(index_);
  return r.i64();
}

RealityPath PathFileReader::read(std::uint64_t n) { return read_at(position(n)); }

RealityPath PathFileReader::read_at(std::int64_t position) {
  if (position < 0 || position >= final_size_) {
    throw FormatError("path position " + std::to_string(position) + " outside final-paths file");
  }
  final_paths_.clear();
  final_paths_.seekg(position);
  StreamReader r(final_paths_);
  return decode_path(r);
}

PathFileReader open_worker_paths(const fs::path& dir, std::size_t worker) {
  return PathFileReader(worker_file(dir, kFinalPathsTitle, worker),
                        worker_file(dir, kIndexTitle, worker));
}

PathFileReader open_merged_paths(const fs::path& dir) {
  return PathFileReader(merged_file(dir, kFinalPathsTitle), merged_file(dir, kIndexTitle));
}

OffsetTable merge_final_and_index(const fs::path& dir, std::size_t worker_count) {
  const auto final_file = merged_file(dir, kFinalPathsTitle);
  const auto index_file = merged_file(dir, kIndexTitle);
  auto final_out = open_out(final_file);
  auto index_out = open_out(index_file);

  OffsetTable offsets;
  std::int64_t offset = 0;
  Bytes buf;
  for (std::size_t w = 0; w < worker_count; ++w) {
    offsets.push_back(offset);
    {
      auto in = open_in(worker_file(dir, kFinalPathsTitle, w));
      final_out << in.rdbuf();
    }
    // rdbuf insertion sets failbit on an empty source; that is not an error.
    final_out.clear();

    const auto index_in_file = worker_file(dir, kIndexTitle, w);
    auto index_in = open_in(index_in_file);
    const auto entries = byte_size(index_in_file) / static_cast<std::int64_t>(wire::kIndexEntrySize);
    StreamReader r(index_in);
    buf.clear();
    ByteWriter bw(buf);
    for (std::int64_t i = 0; i < entries; ++i) bw.i64(r.i64() + offset);
    write_bytes(index_out, buf, index_file);

    offset += byte_size(worker_file(dir, kFinalPathsTitle, w));
  }
  final_out.flush();
  index_out.flush();
  if (!final_out || !index_out) throw StoreError("merge failed in " + dir.string());
  return offsets;
}

OffsetTable load_offsets(const fs::path& dir, std::size_t worker_count) {
  OffsetTable offsets;
  std::int64_t offset = 0;
  for (std::size_t w = 0; w < worker_count; ++w) {
    offsets.push_back(offset);
    offset += byte_size(worker_file(dir, kFinalPathsTitle, w));
  }
  return offsets;
}

std::vector<SortRecord> read_sort_file(const fs::path& file, SortKey key) {
  const auto size = byte_size(file);
  const auto record = static_cast<std::int64_t>(sort_record_size(key));
  if (size % record != 0) throw FormatError("sort file " + file.string() + " has a partial record");
  auto in = open_in(file);
  StreamReader r(in);
  std::vector<SortRecord> out;
  out.reserve(static_cast<std::size_t>(size / record));
  for (std::int64_t i = 0; i < size / record; ++i) {
    SortRecord rec;
    rec.value = read_sort_value(r, key);
    rec.position = r.i64();
    out.push_back(rec);
  }
  return out;
}

std::vector<std::int64_t> read_position_file(const fs::path& file) {
  const auto size = byte_size(file);
  if (size % static_cast<std::int64_t>(wire::kIndexEntrySize) != 0) {
    throw FormatError("position file " + file.string() + " has a partial entry");
  }
  auto in = open_in(file);
  StreamReader r(in);
  std::vector<std::int64_t> out(static_cast<std::size_t>(size) / wire::kIndexEntrySize);
  for (auto& p : out) p = r.i64();
  return out;
}

void merge_sort_files(const fs::path& dir, SortKey key, const OffsetTable& offsets) {
  struct Stream {
    std::ifstream in;
    std::int64_t offset = 0;
    bool done = false;
  };
  std::vector<Stream> streams;
  for (std::size_t w = 0; w < offsets.size(); ++w) {
    const auto file = worker_file(dir, sort_key_title(key), w);
    if (!fs::exists(file)) throw StoreError("missing worker sort file " + file.string());
    streams.push_back({open_in(file), offsets[w], false});
  }

  const auto target = merged_file(dir, sort_key_title(key));
  auto partial = target;
  partial += ".partial";
  {
    auto out = open_out(partial);
    Bytes buf;
    ByteWriter w(buf);
    const auto width = static_cast<std::streamoff>(sort_value_width(key));
    while (true) {
      // Read every stream's next value, remembering where it started.
      std::optional<std::size_t> best;
      double best_value = 0.0;
      std::vector<std::streampos> marks(streams.size());
      for (std::size_t s = 0; s < streams.size(); ++s) {
        auto& st = streams[s];
        if (st.done) continue;
        marks[s] = st.in.tellg();
        if (st.in.peek() == std::char_traits<char>::eof()) {
          st.done = true;
          continue;
        }
        StreamReader r(st.in);
        const double value = read_sort_value(r, key);
        // Strict comparison keeps the lowest worker on ties, which is also
        // the lowest merged position.
        if (!best || value > best_value) {
          best = s;
          best_value = value;
        }
      }
      if (!best) break;
      for (std::size_t s = 0; s < streams.size(); ++s) {
        if (streams[s].done) continue;
        if (s == *best) {
          StreamReader r(streams[s].in);
          w.i64(r.i64() + streams[s].offset);
        } else {
          streams[s].in.seekg(marks[s]);
        }
      }
      (void)width;
      if (buf.size() >= (1u << 16)) {
        write_bytes(out, buf, partial);
        buf.clear();
      }
    }
    write_bytes(out, buf, partial);
    out.flush();
    if (!out) throw StoreError("write failed on " + partial.string());
  }
  fs::rename(partial, target);
}

bool ensure_sort_file(const fs::path& dir, SortKey key) {
  if (fs::exists(merged_file(dir, sort_key_title(key)))) return false;
  const auto workers = count_worker_files(dir);
  if (workers == 0) throw StoreError("no worker result files in " + dir.string());
  merge_sort_files(dir, key, load_offsets(dir, workers));
  return true;
}

std::vector<SortedPath> query_sorted(const fs::path& dir, SortKey key, std::size_t k) {
  ensure_sort_file(dir, key);
  const auto positions = read_position_file(merged_file(dir, sort_key_title(key)));
  const std::size_t n = std::min(k, positions.size());
  std::vector<SortedPath> out;
  if (n == 0) return out;

  // Sort values live only in the worker files; map merged positions back.
  const auto workers = count_worker_files(dir);
  const auto offsets = load_offsets(dir, workers);
  std::unordered_map<std::int64_t, double> values;
  for (std::size_t w = 0; w < workers; ++w) {
    for (const auto& rec : read_sort_file(worker_file(dir, sort_key_title(key), w), key)) {
      values.emplace(rec.position + offsets[w], rec.value);
    }
  }
  auto reader = open_merged_paths(dir);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SortedPath sp;
    sp.position = positions[i];
    if (auto it = values.find(sp.position); it != values.end()) sp.value = it->second;
    sp.path = reader.read_at(sp.position);
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<RealityPath> read_all_paths(const fs::path& dir) {
  std::vector<RealityPath> out;
  // Records are back to back, so a whole file decodes sequentially.
  auto drain = [&](const fs::path& file) {
    const auto size = byte_size(file);
    Bytes data(static_cast<std::size_t>(size));
    auto in = open_in(file);
    in.read(reinterpret_cast<char*>(data.data()), size);
    if (in.gcount() != size) throw StoreError("short read on " + file.string());
    ByteReader r(data);
    while (r.remaining() > 0) out.push_back(decode_path(r));
  };
  if (fs::exists(merged_file(dir, kFinalPathsTitle))) {
    drain(merged_file(dir, kFinalPathsTitle));
    return out;
  }
  const auto workers = count_worker_files(dir);
  if (workers == 0) throw StoreError("no result files in " + dir.string());
  for (std::size_t w = 0; w < workers; ++w) drain(worker_file(dir, kFinalPathsTitle, w));
  return out;
}

std::vector<Bytes> canonical_path_set(const std::vector<RealityPath>& paths) {
  std::vector<Bytes> keys;
  keys.reserve(paths.size());
  for (const auto& p : paths) keys.push_back(canonical_key(p));
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace sonarr
