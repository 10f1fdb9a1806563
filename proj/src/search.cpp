#include "geomm/search.hpp"

#include <algorithm>
#include <stdexcept>

namespace geomm {

bool result_order(const ScoredResult& a, const ScoredResult& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.object_id < b.object_id;
}

NearestNeighborCursor::NearestNeighborCursor(const GmrTree& tree,
                                             GeoPoint query,
                                             Signature query_sig,
                                             bool signature_pruning)
    : tree_(tree),
      query_(query),
      query_sig_(std::move(query_sig)),
      prune_(signature_pruning) {
  if (tree_.root())
    queue_.push(Item{0.0, false,
                     static_cast<std::int64_t>(tree_.root()->node_id),
                     tree_.root(), -1});
}

void NearestNeighborCursor::expand(const GmrNode& node) {
  ++stats_.nodes_visited;
  for (const auto& e : node.entries) {
    const bool matches = signature_matches(query_sig_, e.sig);
    if (prune_ && !matches) {
      ++stats_.signature_pruned_subtrees;
      continue;
    }
    const double key = min_dist_to_mbr(query_, e.box);
    if (node.is_leaf()) {
      // In filter mode non-matching objects still travel through the queue
      // and are dropped at emission; tie_id < 0 marks them.
      if (!matches) {
        queue_.push(Item{key, true, e.object_id, nullptr, -1});
      } else {
        queue_.push(Item{key, true, e.object_id, nullptr, e.object_id});
      }
    } else {
      queue_.push(Item{key, false,
                       static_cast<std::int64_t>(e.child->node_id),
                       e.child.get(), -1});
    }
  }
}

std::optional<std::int64_t> NearestNeighborCursor::next() {
  while (!queue_.empty()) {
    const Item item = queue_.top();
    queue_.pop();
    if (!item.is_object) {
      expand(*item.node);
      continue;
    }
    if (item.object_id < 0) continue;  // filtered at emission
    last_distance_ = item.key;
    return item.object_id;
  }
  return std::nullopt;
}

namespace {

Signature query_signature(const GmrTree& tree, const SemanticVector& emb) {
  return object_signature(emb, tree.params().sig_length,
                          tree.params().sig_threshold);
}

}  // namespace

SearchResult kgmcms(const GmrTree& tree, const SemanticSpaceModel& space,
                    const Query& q, const SearchOptions& opts) {
  validate_query(q);
  const auto start = std::chrono::steady_clock::now();

  SearchResult out;
  if (tree.empty()) {
    out.stats.truncated = true;
    out.stats.elapsed = std::chrono::steady_clock::now() - start;
    return out;
  }

  const SemanticVector query_emb = embed_text(space, q.text_feature);
  const Signature query_sig = query_signature(tree, query_emb);
  const ScoringContext ctx{delta_max_upper_bound(q.location, tree.root_box()),
                           q.mu};

  NearestNeighborCursor cursor(tree, q.location, query_sig,
                               opts.signature_pruning);
  while (out.results.size() < static_cast<std::size_t>(q.k)) {
    const auto id = cursor.next();
    if (!id) break;
    const GeoMultimediaObject* obj = tree.find_object(*id);
    const double dist = cursor.last_distance();
    const double prox = distance_proximity(dist, ctx);
    const double sim = cosine_similarity(query_emb, *obj->semantic);
    out.results.push_back(
        {*id, dist, prox, sim, combined_score(prox, sim, q.mu)});
  }

  std::sort(out.results.begin(), out.results.end(), result_order);
  out.stats = cursor.stats();
  out.stats.objects_scored = out.results.size();
  out.stats.truncated = out.results.size() < static_cast<std::size_t>(q.k);
  out.stats.elapsed = std::chrono::steady_clock::now() - start;
  return out;
}

namespace {

struct ExactItem {
  double key;  // node: score upper bound; object: exact score
  bool is_object;
  std::int64_t tie_id;  // node id, or object id
  const GmrNode* node = nullptr;
  ScoredResult payload;
};

// Max-heap on key; nodes surface before objects at equal keys so every
// object with the same exact score is enqueued before any of them is
// emitted; equal-score objects order by (distance asc, id asc).
struct ExactOrder {
  bool operator()(const ExactItem& a, const ExactItem& b) const {
    if (a.key != b.key) return a.key < b.key;
    if (a.is_object != b.is_object) return a.is_object;
    if (a.is_object) {
      if (a.payload.distance != b.payload.distance)
        return a.payload.distance > b.payload.distance;
      return a.payload.object_id > b.payload.object_id;
    }
    return a.tie_id > b.tie_id;
  }
};

}  // namespace

SearchResult exact_top_k(const GmrTree& tree, const SemanticSpaceModel& space,
                         const Query& q) {
  validate_query(q);
  const auto start = std::chrono::steady_clock::now();

  SearchResult out;
  if (tree.empty()) {
    out.stats.truncated = true;
    out.stats.elapsed = std::chrono::steady_clock::now() - start;
    return out;
  }

  const SemanticVector query_emb = embed_text(space, q.text_feature);
  const ScoringContext ctx{delta_max_upper_bound(q.location, tree.root_box()),
                           q.mu};

  std::priority_queue<ExactItem, std::vector<ExactItem>, ExactOrder> queue;
  queue.push(ExactItem{
      score_upper_bound_for_node(q.location, tree.root_box(), ctx), false,
      static_cast<std::int64_t>(tree.root()->node_id), tree.root(), {}});

  while (!queue.empty() &&
         out.results.size() < static_cast<std::size_t>(q.k)) {
    const ExactItem item = queue.top();
    queue.pop();
    if (item.is_object) {
      // No remaining upper bound exceeds this exact score, so it is final.
      out.results.push_back(item.payload);
      continue;
    }
    ++out.stats.nodes_visited;
    for (const auto& e : item.node->entries) {
      if (item.node->is_leaf()) {
        const GeoMultimediaObject* obj = tree.find_object(e.object_id);
        const double dist = min_dist_to_mbr(q.location, e.box);
        const double prox = distance_proximity(dist, ctx);
        const double sim = cosine_similarity(query_emb, *obj->semantic);
        const double score = combined_score(prox, sim, q.mu);
        ++out.stats.objects_scored;
        queue.push(ExactItem{score, true, e.object_id, nullptr,
                             {e.object_id, dist, prox, sim, score}});
      } else {
        queue.push(ExactItem{
            score_upper_bound_for_node(q.location, e.box, ctx), false,
            static_cast<std::int64_t>(e.child->node_id), e.child.get(), {}});
      }
    }
  }

  out.stats.truncated = out.results.size() < static_cast<std::size_t>(q.k);
  out.stats.elapsed = std::chrono::steady_clock::now() - start;
  return out;
}

std::vector<ScoredResult> brute_force(const Dataset& ds,
                                      const SemanticSpaceModel& space,
                                      const Query& q,
                                      const BruteForceOptions& opts) {
  validate_query(q);
  const SemanticVector query_emb = embed_text(space, q.text_feature);
  const double delta_max = opts.delta_max == DeltaMaxMode::ScanObjects
                               ? delta_max_scan(q.location, ds)
                               : delta_max_upper_bound(q.location, dataset_mbr(ds));
  const ScoringContext ctx{delta_max, q.mu};

  auto score_object = [&](const GeoMultimediaObject& o) {
    const double dist = euclidean(q.location, o.location);
    const double prox = distance_proximity(dist, ctx);
    const double sim = cosine_similarity(query_emb, *o.semantic);
    return ScoredResult{o.id, dist, prox, sim, combined_score(prox, sim, q.mu)};
  };

  std::vector<ScoredResult> results;
  const std::size_t k = static_cast<std::size_t>(q.k);

  if (opts.mode == BruteForceMode::PaperOrder) {
    const Signature query_sig =
        object_signature(query_emb, opts.sig_length, opts.sig_threshold);
    struct Candidate {
      std::int64_t id;
      double dist;
      const GeoMultimediaObject* obj;
    };
    std::vector<Candidate> matching;
    for (const auto& o : ds.objects) {
      if (!o.semantic)
        throw std::invalid_argument("brute_force: object without semantic vector");
      const Signature sig =
          object_signature(*o.semantic, opts.sig_length, opts.sig_threshold);
      if (signature_matches(query_sig, sig))
        matching.push_back({o.id, euclidean(q.location, o.location), &o});
    }
    std::sort(matching.begin(), matching.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.dist != b.dist) return a.dist < b.dist;
                return a.id < b.id;
              });
    if (matching.size() > k) matching.resize(k);
    results.reserve(matching.size());
    for (const auto& c : matching) results.push_back(score_object(*c.obj));
  } else {
    results.reserve(ds.objects.size());
    for (const auto& o : ds.objects) {
      if (!o.semantic)
        throw std::invalid_argument("brute_force: object without semantic vector");
      results.push_back(score_object(o));
    }
    if (results.size() > k) {
      std::nth_element(results.begin(),
                       results.begin() + static_cast<std::ptrdiff_t>(k),
                       results.end(), result_order);
      results.resize(k);
    }
  }

  std::sort(results.begin(), results.end(), result_order);
  return results;
}

}  // namespace geomm
