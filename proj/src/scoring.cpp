#include "geomm/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geomm {

Mbr point_mbr(const GeoPoint& p) { return Mbr{p, p}; }

Mbr mbr_union(const Mbr& a, const Mbr& b) {
  return Mbr{{std::min(a.min.x, b.min.x), std::min(a.min.y, b.min.y)},
             {std::max(a.max.x, b.max.x), std::max(a.max.y, b.max.y)}};
}

Mbr dataset_mbr(const Dataset& ds) { return Mbr{ds.bbox_min, ds.bbox_max}; }

double euclidean(const GeoPoint& a, const GeoPoint& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

double delta_max_upper_bound(const GeoPoint& q, const Mbr& root) {
  const GeoPoint corners[4] = {root.min,
                               {root.min.x, root.max.y},
                               {root.max.x, root.min.y},
                               root.max};
  double best = 0.0;
  for (const auto& c : corners) best = std::max(best, euclidean(q, c));
  return best;
}

double delta_max_scan(const GeoPoint& q, const Dataset& ds) {
  double best = 0.0;
  for (const auto& o : ds.objects) best = std::max(best, euclidean(q, o.location));
  return best;
}

double distance_proximity(double delta, const ScoringContext& ctx) {
  if (delta < 0.0 || !std::isfinite(delta))
    throw std::invalid_argument("distance_proximity: delta must be finite and >= 0");
  if (delta == 0.0) return 1.0;
  if (delta > ctx.delta_max * (1.0 + 1e-9))
    throw std::invalid_argument("distance_proximity: delta exceeds context delta_max");
  return std::clamp(1.0 - delta / ctx.delta_max, 0.0, 1.0);
}

double combined_score(double dst, double sim, double mu) {
  return mu * dst + (1.0 - mu) * sim;
}

double min_dist_to_mbr(const GeoPoint& q, const Mbr& box) {
  const double dx = std::max({box.min.x - q.x, 0.0, q.x - box.max.x});
  const double dy = std::max({box.min.y - q.y, 0.0, q.y - box.max.y});
  return std::sqrt(dx * dx + dy * dy);
}

double score_upper_bound_for_node(const GeoPoint& q, const Mbr& box,
                                  const ScoringContext& ctx) {
  const double dst = distance_proximity(min_dist_to_mbr(q, box), ctx);
  return combined_score(dst, 1.0, ctx.mu);
}

}  // namespace geomm
