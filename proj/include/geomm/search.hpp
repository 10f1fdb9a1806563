#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "geomm/cosmat.hpp"
#include "geomm/gmrtree.hpp"
#include "geomm/model.hpp"
#include "geomm/scoring.hpp"

namespace geomm {

struct SearchStats {
  std::size_t nodes_visited = 0;
  std::size_t objects_scored = 0;
  std::size_t signature_pruned_subtrees = 0;
  std::chrono::duration<double> elapsed{0};
  bool truncated = false;  // fewer matches than k existed
};

/// Incremental best-first nearest-neighbor traversal. Emits the ids of
/// signature-matching objects in nondecreasing Euclidean distance from the
/// query point (ties by ascending id). With signature_pruning disabled the
/// tree is walked like a plain R-Tree and the signature filter is applied
/// only to emitted objects; the emitted set is identical either way.
class NearestNeighborCursor {
 public:
  NearestNeighborCursor(const GmrTree& tree, GeoPoint query,
                        Signature query_sig, bool signature_pruning = true);

  /// Next matching object id, or nullopt when exhausted.
  std::optional<std::int64_t> next();

  /// Distance of the most recently emitted object.
  double last_distance() const { return last_distance_; }
  const SearchStats& stats() const { return stats_; }

 private:
  struct Item {
    double key;            // spatial mindist
    bool is_object;        // nodes sort before objects at equal keys
    std::int64_t tie_id;   // object id or node id
    const GmrNode* node;
    std::int64_t object_id;
  };
  struct ItemOrder {
    bool operator()(const Item& a, const Item& b) const {
      if (a.key != b.key) return a.key > b.key;  // min-heap on key
      if (a.is_object != b.is_object) return a.is_object && !b.is_object;
      return a.tie_id > b.tie_id;
    }
  };

  const GmrTree& tree_;
  GeoPoint query_;
  Signature query_sig_;
  bool prune_;
  std::priority_queue<Item, std::vector<Item>, ItemOrder> queue_;
  SearchStats stats_;
  double last_distance_ = 0.0;

  void expand(const GmrNode& node);
};

struct SearchOptions {
  bool signature_pruning = true;
};

struct SearchResult {
  std::vector<ScoredResult> results;  // score desc, distance asc, id asc
  SearchStats stats;
};

/// The distance-first search: embed the query text, hash its signature,
/// pull the k nearest signature-matching objects off the tree, score them
/// with the combined function (delta_max from the root-box corner bound),
/// and return them sorted by descending score. Returns fewer than k (with
/// stats.truncated set) when not enough objects match.
SearchResult kgmcms(const GmrTree& tree, const SemanticSpaceModel& space,
                    const Query& q, const SearchOptions& opts = {});

/// Exact top-k by combined score: best-first on score upper bounds with no
/// signature pruning, terminating once no remaining subtree can beat the
/// k-th confirmed score.
SearchResult exact_top_k(const GmrTree& tree, const SemanticSpaceModel& space,
                         const Query& q);

enum class BruteForceMode {
  PaperOrder,  // filter by signature, k nearest by distance, rank by score
  ExactScore,  // score everything, top k by score
};

enum class DeltaMaxMode {
  ScanObjects,  // exact max distance over the dataset
  RootCorners,  // corner bound of the dataset box (mirrors the index)
};

struct BruteForceOptions {
  BruteForceMode mode = BruteForceMode::ExactScore;
  DeltaMaxMode delta_max = DeltaMaxMode::RootCorners;
  // Signature parameters, used only in PaperOrder mode.
  std::uint32_t sig_length = 64;
  double sig_threshold = 0.2;
};

/// Linear-scan oracle over an embedded dataset. Deterministic; ties break
/// by (score desc, distance asc, id asc).
std::vector<ScoredResult> brute_force(const Dataset& ds,
                                      const SemanticSpaceModel& space,
                                      const Query& q,
                                      const BruteForceOptions& opts);

/// Shared result ordering: score desc, then distance asc, then id asc.
bool result_order(const ScoredResult& a, const ScoredResult& b);

}  // namespace geomm
