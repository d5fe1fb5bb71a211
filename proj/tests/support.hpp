#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "sonarr/codec.hpp"
#include "sonarr/model_io.hpp"
#include "sonarr/traversal.hpp"

namespace support {

using namespace sonarr;

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(SONARR_FIXTURE_DIR) / name;
}

inline Network filter_model() { return load_network_file(fixture("filter_model.json")); }

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sonarr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<RealityPath> collect(const IndexedNetwork& net, const TraversalConfig& config,
                                        RunSummary* summary = nullptr) {
  std::vector<RealityPath> out;
  auto s = single_threaded_search(net, config, [&](RealityPath&& p) { out.push_back(std::move(p)); });
  if (summary != nullptr) *summary = s;
  return out;
}

inline TraversalConfig route(Id start, Id end) {
  TraversalConfig c;
  c.start = start;
  c.end = end;
  return c;
}

// Random skeleton with the fields the wire format carries; origin follows
// the decoder's rule so round trips compare equal.
inline RealityPath random_path(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto facts = [&](int max) {
    std::vector<FactValue> out(static_cast<std::size_t>(pick(0, max)));
    for (auto& f : out) f = {pick(0, 1 << 20), pick(0, 1) == 1};
    return out;
  };
  auto entity = [&](EntityKind kind) -> std::optional<Variant> {
    if (pick(0, 4) == 0) return std::nullopt;
    return Variant{pick(0, 1 << 16), kind, facts(4)};
  };
  RealityPath p;
  p.id = pick(0, 1 << 30);
  const int n = pick(0, 6);
  for (int i = 0; i < n; ++i) {
    Connection c;
    c.id = pick(0, 1000);
    c.entity1 = entity(EntityKind::Container);
    c.link = entity(EntityKind::Link);
    c.entity2 = entity(EntityKind::Container);
    c.env_fact_changes = facts(3);
    p.connections.push_back(std::move(c));
  }
  p.env_facts = facts(5);
  if (!p.connections.empty() && p.connections.front().entity1) {
    p.origin = p.connections.front().entity1->base_id;
  }
  return p;
}

// Independent byte-level encoder used as an oracle for the codec.
class OracleEncoder {
 public:
  Bytes path(const RealityPath& p) {
    out_.clear();
    word(p.id);
    word(static_cast<std::int32_t>(p.connections.size()));
    for (const auto& c : p.connections) {
      word(c.id);
      for (const auto* e : {&c.entity1, &c.link, &c.entity2}) {
        if (!e->has_value()) {
          out_.insert(out_.end(), {0xFF, 0xFF, 0xFF, 0xFF});
          continue;
        }
        word((*e)->base_id);
        fact_list((*e)->facts);
      }
      fact_list(c.env_fact_changes);
    }
    fact_list(p.env_facts);
    return out_;
  }

 private:
  void word(std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    out_.push_back(static_cast<std::uint8_t>(u));
    out_.push_back(static_cast<std::uint8_t>(u >> 8));
    out_.push_back(static_cast<std::uint8_t>(u >> 16));
    out_.push_back(static_cast<std::uint8_t>(u >> 24));
  }
  void fact_list(const std::vector<FactValue>& facts) {
    word(static_cast<std::int32_t>(facts.size()));
    for (const auto& f : facts) {
      word(f.fact);
      out_.push_back(f.value ? 1 : 0);
    }
  }

  Bytes out_;
};

// Compact text form of a path: "(1,1,2:1)(2:)" lists entity1, link, entity2
// base IDs and the fired rules of every connection.
inline std::string shape(const RealityPath& p) {
  std::string s;
  for (const auto& c : p.connections) {
    s += "(" + std::to_string(c.entity1 ? c.entity1->base_id : -1);
    if (c.link) s += "," + std::to_string(c.link->base_id);
    if (c.entity2) s += "," + std::to_string(c.entity2->base_id);
    s += ":";
    for (std::size_t i = 0; i < c.triggered_rules.size(); ++i) {
      if (i > 0) s += " ";
      s += std::to_string(c.triggered_rules[i]);
    }
    s += ")";
  }
  return s;
}

}  // namespace support
