#pragma once

#include "geomm/model.hpp"

namespace geomm {

/// Axis-aligned minimum bounding rectangle.
struct Mbr {
  GeoPoint min;
  GeoPoint max;

  bool valid() const { return min.x <= max.x && min.y <= max.y; }
  bool contains(const GeoPoint& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  bool contains(const Mbr& inner) const {
    return inner.min.x >= min.x && inner.max.x <= max.x &&
           inner.min.y >= min.y && inner.max.y <= max.y;
  }
  double area() const { return (max.x - min.x) * (max.y - min.y); }
};

Mbr point_mbr(const GeoPoint& p);
Mbr mbr_union(const Mbr& a, const Mbr& b);
Mbr dataset_mbr(const Dataset& ds);

/// Per-query scoring parameters. delta_max normalizes distances into [0, 1];
/// it must dominate every object distance evaluated under this context.
struct ScoringContext {
  double delta_max = 1.0;
  double mu = 0.5;
};

double euclidean(const GeoPoint& a, const GeoPoint& b);

/// Max distance from q to the four corners of the root box. Dominates the
/// distance to every object inside the box, so it is a valid delta_max that
/// keeps proximity in [0, 1] without scanning the dataset.
double delta_max_upper_bound(const GeoPoint& q, const Mbr& root);

/// Exact delta_max by scanning every object (the definition); used by the
/// oracle when it is not mirroring the index's corner bound.
double delta_max_scan(const GeoPoint& q, const Dataset& ds);

/// 1 - delta/delta_max, clamped into [0, 1]. delta == 0 maps to 1 even when
/// delta_max is 0 (single co-located point). Throws std::invalid_argument
/// when delta exceeds delta_max beyond rounding slack: the context was built
/// for a different object population.
double distance_proximity(double delta, const ScoringContext& ctx);

/// mu*dst + (1-mu)*sim.
double combined_score(double dst, double sim, double mu);

/// Standard mindist: 0 inside the box, else the Euclidean distance to the
/// nearest point of the box. Lower-bounds the distance to every point in it.
double min_dist_to_mbr(const GeoPoint& q, const Mbr& box);

/// mu*proximity(mindist) + (1-mu)*1. Dominates the combined score of every
/// object inside the box, since proximity is nonincreasing in distance and
/// cosine similarity of posterior vectors never exceeds 1.
double score_upper_bound_for_node(const GeoPoint& q, const Mbr& box,
                                  const ScoringContext& ctx);

}  // namespace geomm
