#pragma once

#include <cstdint>
#include <istream>
#include <span>
#include <stdexcept>
#include <vector>

#include "sonarr/path.hpp"

// Binary layout of stored reality paths. All integers are little-endian
// two's complement, doubles are IEEE-754 binary64, booleans are one byte
// (0 or 1).
//
//   path       := i32 path_id, i32 connection_count, connection*,
//                 i32 env_count, fact*
//   connection := i32 connection_id, (entity | i32 -1) x3 (entity1, link,
//                 entity2), i32 env_count, fact*
//   entity     := i32 entity_id, i32 fact_count, fact*
//   fact       := i32 fact_id, u8 value
//
// Connection env facts are the writes made during that connection's
// assessment; path env facts are the state at finalization.
namespace sonarr {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace wire {
inline constexpr std::size_t kFactRecordSize = 5;
inline constexpr std::size_t kEntityHeaderSize = 8;
inline constexpr std::size_t kNullMarkerSize = 4;
inline constexpr std::size_t kPathHeaderSize = 8;
inline constexpr std::size_t kIndexEntrySize = 8;
inline constexpr std::size_t kIntSortRecordSize = 12;
inline constexpr std::size_t kDoubleSortRecordSize = 16;
inline constexpr std::int32_t kNullMarker = -1;
}  // namespace wire

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void i32(std::int32_t v);
  void i64(std::int64_t v);
  void f64(double v);

 private:
  Bytes& out_;
};

// Reads from an in-memory buffer. Throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint8_t u8();
  std::int32_t i32();
  std::int64_t i64();
  double f64();
  std::int32_t peek_i32() const;
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Reads straight from a stream positioned at a record.
class StreamReader {
 public:
  explicit StreamReader(std::istream& in) : in_(in) {}
  std::uint8_t u8();
  std::int32_t i32();
  std::int64_t i64();
  double f64();
  std::int32_t peek_i32();

 private:
  void read(void* dst, std::size_t n);

  std::istream& in_;
};

void encode_fact(ByteWriter& out, const FactValue& fact);
void encode_entity(ByteWriter& out, const Variant& entity);
void encode_connection(ByteWriter& out, const Connection& conn);
void encode_path(ByteWriter& out, const RealityPath& path);

Bytes encode_fact(const FactValue& fact);
Bytes encode_entity(const Variant& entity);
Bytes encode_connection(const Connection& conn);
Bytes encode_path(const RealityPath& path);

// Decoders return skeletons: only the stored fields are populated.
template <typename Reader>
FactValue decode_fact(Reader& in);
template <typename Reader>
Variant decode_entity(Reader& in, EntityKind kind);
template <typename Reader>
Connection decode_connection(Reader& in);
template <typename Reader>
RealityPath decode_path(Reader& in);

RealityPath decode_path(std::span<const std::uint8_t> bytes);
inline RealityPath decode_path(const Bytes& bytes) { return decode_path(std::span<const std::uint8_t>(bytes)); }

// Path identity independent of scheduling: the encoded record without its
// path ID.
Bytes canonical_key(const RealityPath& path);

}  // namespace sonarr
