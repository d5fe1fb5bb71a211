#include <doctest.h>

#include <random>
#include <sstream>

#include "support.hpp"

using namespace sonarr;

namespace {

Bytes hex(std::initializer_list<int> bytes) {
  Bytes out;
  for (int b : bytes) out.push_back(static_cast<std::uint8_t>(b));
  return out;
}

}  // namespace

TEST_SUITE("codec") {
  TEST_CASE("fact records") {
    CHECK(encode_fact({7, true}) == hex({0x07, 0, 0, 0, 0x01}));
    CHECK(encode_fact({0, false}) == hex({0, 0, 0, 0, 0}));
    CHECK(encode_fact({0x01020304, false}) == hex({0x04, 0x03, 0x02, 0x01, 0}));
    CHECK(encode_fact({1, true}).size() == wire::kFactRecordSize);
  }

  TEST_CASE("entity records") {
    const Variant v{3, EntityKind::Container, {{1, true}, {2, false}}};
    const Bytes b = encode_entity(v);
    CHECK(b.size() == 18);
    CHECK(b == hex({3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 2, 0, 0, 0, 0}));
    CHECK(encode_entity(Variant{9, EntityKind::Link, {}}).size() == wire::kEntityHeaderSize);
    ByteReader r(b);
    CHECK(decode_entity(r, EntityKind::Container) == v);
    CHECK(r.remaining() == 0);
  }

  TEST_CASE("connection records use -1 for missing entities") {
    Connection fin;
    fin.id = 4;
    fin.entity1 = Variant{2, EntityKind::Container, {}};
    CHECK(encode_connection(fin) == hex({4, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0xFF, 0xFF, 0xFF, 0xFF,
                                         0xFF, 0xFF, 0xFF, 0xFF, 0, 0, 0, 0}));
    Connection empty;
    CHECK(encode_connection(empty).size() == 4 + 3 * wire::kNullMarkerSize + 4);
    Bytes b = encode_connection(fin);
    ByteReader r(b);
    CHECK(decode_connection(r) == fin);
  }

  TEST_CASE("path records") {
    RealityPath p;
    p.id = 11;
    CHECK(encode_path(p).size() == 12);
    CHECK(encode_path(p) == hex({11, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}));
  }

  TEST_CASE("round trip of random paths matches an independent encoder") {
    std::mt19937_64 rng(2024);
    support::OracleEncoder oracle;
    for (int i = 0; i < 1000; ++i) {
      const RealityPath p = support::random_path(rng);
      const Bytes b = encode_path(p);
      REQUIRE(b == oracle.path(p));
      const RealityPath back = decode_path(b);
      CHECK(back == p);
      // Stream decoding sees the same record.
      std::istringstream in(std::string(b.begin(), b.end()));
      StreamReader sr(in);
      CHECK(decode_path(sr) == p);
    }
  }

  TEST_CASE("traversal output survives the round trip") {
    const IndexedNetwork net(support::filter_model());
    TraversalConfig c = support::route(1, 2);
    c.completion_filter = parse_filter("F4:T and F5:T");
    const auto paths = support::collect(net, c);
    REQUIRE(paths.size() == 1);
    const RealityPath back = decode_path(encode_path(paths[0]));
    CHECK(back.id == paths[0].id);
    CHECK(back.env_facts == paths[0].env_facts);
    REQUIRE(back.connections.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(back.connections[i].id == paths[0].connections[i].id);
      CHECK(back.connections[i].entity1 == paths[0].connections[i].entity1);
      CHECK(back.connections[i].link == paths[0].connections[i].link);
      CHECK(back.connections[i].entity2 == paths[0].connections[i].entity2);
      CHECK(back.connections[i].env_fact_changes == paths[0].connections[i].env_fact_changes);
    }
    CHECK(back.connections[5].is_finalization());
  }

  TEST_CASE("malformed input is rejected") {
    const Bytes fact = encode_fact({1, true});
    CHECK_THROWS_AS(decode_path(Bytes(fact.begin(), fact.begin() + 3)), FormatError);
    {
      Bytes bad = hex({1, 0, 0, 0, 2});
      ByteReader r(bad);
      CHECK_THROWS_AS(decode_fact(r), FormatError);
    }
    CHECK_THROWS_AS(decode_path(hex({0, 0, 0, 0, 0xFF, 0xFF, 0xFF, 0xFF})), FormatError);
    // Entity marker -2 is neither null nor an ID.
    CHECK_THROWS_AS(decode_path(hex({0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0xFE, 0xFF, 0xFF, 0xFF})),
                    FormatError);
    RealityPath p;
    p.connections.resize(1);
    const Bytes full = encode_path(p);
    CHECK_THROWS_AS(decode_path(Bytes(full.begin(), full.end() - 1)), FormatError);
  }

  TEST_CASE("canonical key ignores the path ID") {
    std::mt19937_64 rng(5);
    RealityPath a = support::random_path(rng);
    RealityPath b = a;
    b.id = a.id + 17;
    CHECK(canonical_key(a) == canonical_key(b));
    b.env_facts.push_back({1, true});
    CHECK(canonical_key(a) != canonical_key(b));
  }
}
