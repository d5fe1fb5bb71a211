#include "sonarr/codec.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace sonarr {
namespace {

template <typename T>
void put_le(Bytes& out, T value) {
  using U = std::make_unsigned_t<T>;
  const auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(p[i]) << (8 * i);
  return static_cast<T>(u);
}

template <typename Reader>
std::int32_t read_count(Reader& in, const char* what) {
  const auto n = in.i32();
  if (n < 0) throw FormatError(std::string("negative ") + what + " count " + std::to_string(n));
  return n;
}

template <typename Reader>
std::optional<Variant> read_optional_entity(Reader& in, EntityKind kind) {
  const auto marker = in.peek_i32();
  if (marker == wire::kNullMarker) {
    in.i32();
    return std::nullopt;
  }
  if (marker < 0) throw FormatError("invalid entity marker " + std::to_string(marker));
  return decode_entity(in, kind);
}

void write_optional_entity(ByteWriter& out, const std::optional<Variant>& entity) {
  if (entity) {
    encode_entity(out, *entity);
  } else {
    out.i32(wire::kNullMarker);
  }
}

void encode_facts(ByteWriter& out, const std::vector<FactValue>& facts) {
  out.i32(static_cast<std::int32_t>(facts.size()));
  for (const auto& f : facts) encode_fact(out, f);
}

template <typename Reader>
std::vector<FactValue> decode_facts(Reader& in) {
  const auto n = read_count(in, "fact");
  std::vector<FactValue> facts;
  facts.reserve(static_cast<std::size_t>(std::min<std::int32_t>(n, 4096)));
  for (std::int32_t i = 0; i < n; ++i) facts.push_back(decode_fact(in));
  return facts;
}

}  // namespace

void ByteWriter::i32(std::int32_t v) { put_le(out_, v); }
void ByteWriter::i64(std::int64_t v) { put_le(out_, v); }
void ByteWriter::f64(double v) { put_le(out_, std::bit_cast<std::int64_t>(v)); }

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw FormatError("truncated record: need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::int32_t ByteReader::i32() {
  need(4);
  const auto v = get_le<std::int32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::int64_t ByteReader::i64() {
  need(8);
  const auto v = get_le<std::int64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(i64()); }

std::int32_t ByteReader::peek_i32() const {
  need(4);
  return get_le<std::int32_t>(data_.data() + pos_);
}

void StreamReader::read(void* dst, std::size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in_.gcount() != static_cast<std::streamsize>(n)) throw FormatError("truncated record in file");
}

std::uint8_t StreamReader::u8() {
  std::uint8_t v = 0;
  read(&v, 1);
  return v;
}

std::int32_t StreamReader::i32() {
  std::uint8_t buf[4];
  read(buf, 4);
  return get_le<std::int32_t>(buf);
}

std::int64_t StreamReader::i64() {
  std::uint8_t buf[8];
  read(buf, 8);
  return get_le<std::int64_t>(buf);
}

double StreamReader::f64() { return std::bit_cast<double>(i64()); }

std::int32_t StreamReader::peek_i32() {
  const auto mark = in_.tellg();
  const auto v = i32();
  in_.seekg(mark);
  return v;
}

void encode_fact(ByteWriter& out, const FactValue& fact) {
  out.i32(fact.fact);
  out.u8(fact.value ? 1 : 0);
}

void encode_entity(ByteWriter& out, const Variant& entity) {
  out.i32(entity.base_id);
  encode_facts(out, entity.facts);
}

void encode_connection(ByteWriter& out, const Connection& conn) {
  out.i32(conn.id);
  write_optional_entity(out, conn.entity1);
  write_optional_entity(out, conn.link);
  write_optional_entity(out, conn.entity2);
  encode_facts(out, conn.env_fact_changes);
}

void encode_path(ByteWriter& out, const RealityPath& path) {
  out.i32(path.id);
  out.i32(static_cast<std::int32_t>(path.connections.size()));
  for (const auto& c : path.connections) encode_connection(out, c);
  encode_facts(out, path.env_facts);
}

Bytes encode_fact(const FactValue& fact) {
  Bytes b;
  ByteWriter w(b);
  encode_fact(w, fact);
  return b;
}

Bytes encode_entity(const Variant& entity) {
  Bytes b;
  ByteWriter w(b);
  encode_entity(w, entity);
  return b;
}

Bytes encode_connection(const Connection& conn) {
  Bytes b;
  ByteWriter w(b);
  encode_connection(w, conn);
  return b;
}

Bytes encode_path(const RealityPath& path) {
  Bytes b;
  ByteWriter w(b);
  encode_path(w, path);
  return b;
}

template <typename Reader>
FactValue decode_fact(Reader& in) {
  FactValue f;
  f.fact = in.i32();
  const auto v = in.u8();
  if (v > 1) throw FormatError("invalid fact value byte " + std::to_string(v));
  f.value = v == 1;
  return f;
}

template <typename Reader>
Variant decode_entity(Reader& in, EntityKind kind) {
  Variant v;
  v.kind = kind;
  v.base_id = in.i32();
  if (v.base_id < 0) throw FormatError("negative entity ID " + std::to_string(v.base_id));
  v.facts = decode_facts(in);
  return v;
}

template <typename Reader>
Connection decode_connection(Reader& in) {
  Connection c;
  c.id = in.i32();
  c.entity1 = read_optional_entity(in, EntityKind::Container);
  c.link = read_optional_entity(in, EntityKind::Link);
  c.entity2 = read_optional_entity(in, EntityKind::Container);
  c.env_fact_changes = decode_facts(in);
  return c;
}

template <typename Reader>
RealityPath decode_path(Reader& in) {
  RealityPath p;
  p.id = in.i32();
  const auto n = read_count(in, "connection");
  p.connections.reserve(static_cast<std::size_t>(std::min<std::int32_t>(n, 4096)));
  for (std::int32_t i = 0; i < n; ++i) p.connections.push_back(decode_connection(in));
  p.env_facts = decode_facts(in);
  if (!p.connections.empty()) {
    const auto& first = p.connections.front();
    if (first.entity1) p.origin = first.entity1->base_id;
  }
  return p;
}

RealityPath decode_path(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  return decode_path(in);
}

Bytes canonical_key(const RealityPath& path) {
  Bytes b = encode_path(path);
  b.erase(b.begin(), b.begin() + 4);
  return b;
}

template FactValue decode_fact(ByteReader&);
template FactValue decode_fact(StreamReader&);
template Variant decode_entity(ByteReader&, EntityKind);
template Variant decode_entity(StreamReader&, EntityKind);
template Connection decode_connection(ByteReader&);
template Connection decode_connection(StreamReader&);
template RealityPath decode_path(ByteReader&);
template RealityPath decode_path(StreamReader&);

}  // namespace sonarr
