#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geomm/model.hpp"
#include "geomm/scoring.hpp"

namespace geomm {

/// Fixed-length bit signature; node signatures are the bitwise OR of their
/// children's, so a query's bits can never be falsely absent above a match.
struct Signature {
  std::uint32_t bit_length = 0;
  std::vector<std::uint64_t> words;

  static Signature zeros(std::uint32_t bits);
  void set(std::uint32_t i);
  bool test(std::uint32_t i) const;
  Signature& operator|=(const Signature& other);  // throws on length mismatch
  bool none() const;
  bool operator==(const Signature&) const = default;
};

/// Bit j is set iff some concept with posterior >= tau maps to j. Concepts
/// map by identity when the class count fits in ell bits, else by modulo
/// folding.
Signature object_signature(const SemanticVector& sv, std::uint32_t ell,
                           double tau);

/// Bitwise OR of all inputs; an empty sequence yields the all-zero
/// signature of the given length.
Signature superimpose(std::span<const Signature> sigs, std::uint32_t ell);

/// True iff every query bit is set in the node signature.
bool signature_matches(const Signature& query, const Signature& node);

/// Default threshold: twice the uniform probability, capped below 1 so two
/// classes still produce a usable threshold.
double default_signature_threshold(std::size_t class_count);

struct GmrTreeParams {
  std::size_t fanout_min = 16;
  std::size_t fanout_max = 32;
  std::uint32_t sig_length = 64;
  double sig_threshold = 0.2;

  void validate() const;  // throws std::invalid_argument
};

struct GmrNode;

/// One slot of a node: a box, the superimposed signature of everything
/// below, and either a child node (internal) or an object id (leaf).
struct GmrEntry {
  Mbr box;
  Signature sig;
  std::unique_ptr<GmrNode> child;  // null at leaf level
  std::int64_t object_id = -1;
};

struct GmrNode {
  int level = 0;  // 0 = leaf
  std::uint64_t node_id = 0;
  std::vector<GmrEntry> entries;

  bool is_leaf() const { return level == 0; }
};

/// R-Tree with per-entry superimposed semantic signatures. Construction is
/// single-threaded; a built tree is immutable during queries and safe for
/// concurrent readers.
class GmrTree {
 public:
  explicit GmrTree(GmrTreeParams params);
  GmrTree(GmrTree&&) noexcept = default;
  GmrTree& operator=(GmrTree&&) noexcept = default;

  /// Inserts one embedded object (quadratic split on overflow). Throws on a
  /// duplicate id or a missing semantic vector.
  void insert(const GeoMultimediaObject& obj);

  /// Sort-tile-recursive packing of a validated, embedded dataset.
  /// Deterministic given input order. Throws on an empty dataset.
  static GmrTree bulk_load(const Dataset& ds, GmrTreeParams params);

  const GmrNode* root() const { return root_.get(); }
  const GmrTreeParams& params() const { return params_; }
  std::size_t size() const { return objects_.size(); }
  bool empty() const { return objects_.empty(); }
  Mbr root_box() const;  // throws when empty

  const GeoMultimediaObject* find_object(std::int64_t id) const;

  template <class Fn>
  void for_each_object(Fn&& fn) const {
    for (const auto& [id, obj] : objects_) fn(obj);
  }

  /// Structural audit: box containment, signature coverage, fanout bounds,
  /// uniform leaf depth, and exactly-once object reachability. Violations
  /// are returned as data; empty means structurally valid.
  std::vector<std::string> audit() const;

  void save(const std::string& path) const;
  static GmrTree load(const std::string& path);

 private:
  GmrTreeParams params_;
  std::unique_ptr<GmrNode> root_;
  std::unordered_map<std::int64_t, GeoMultimediaObject> objects_;
  std::uint64_t next_node_id_ = 0;

  std::unique_ptr<GmrNode> make_node(int level);
  GmrEntry make_object_entry(const GeoMultimediaObject& obj) const;
  void insert_entry(GmrEntry entry, int target_level);
  GmrEntry* choose_subtree(GmrNode& node, const Mbr& box);
  std::unique_ptr<GmrNode> split_node(GmrNode& node);
  static void refresh_entry(GmrEntry& parent_entry);
};

}  // namespace geomm
