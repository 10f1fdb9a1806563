#include "geomm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace geomm {

const char* modality_tag(Modality m) {
  return m == Modality::Text ? "T" : "I";
}

Modality parse_modality_tag(const std::string& tag) {
  if (tag == "T") return Modality::Text;
  if (tag == "I") return Modality::Image;
  throw std::invalid_argument("unknown modality tag '" + tag + "' (expected T or I)");
}

bool is_finite(const GeoPoint& p) {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

bool is_valid_semantic(const SemanticVector& sv, std::size_t class_count,
                       double sum_tol) {
  if (sv.size() != class_count) return false;
  double sum = 0.0;
  for (double p : sv.probabilities) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= sum_tol;
}

std::size_t argmax_class(const SemanticVector& sv) {
  if (sv.size() == 0) throw std::invalid_argument("argmax_class: empty semantic vector");
  return static_cast<std::size_t>(
      std::max_element(sv.probabilities.begin(), sv.probabilities.end()) -
      sv.probabilities.begin());
}

void validate_query(const Query& q) {
  if (q.k < 1) throw std::invalid_argument("query k must be >= 1");
  if (!(q.mu >= 0.0 && q.mu <= 1.0))
    throw std::invalid_argument("query mu must lie in [0, 1]");
  if (q.text_feature.modality != Modality::Text)
    throw std::invalid_argument("query feature must be text modality");
  if (!is_finite(q.location))
    throw std::invalid_argument("query location must be finite");
  for (double v : q.text_feature.values)
    if (!std::isfinite(v))
      throw std::invalid_argument("query feature entries must be finite");
}

Dataset make_dataset(std::vector<GeoMultimediaObject> objects,
                     std::size_t text_dim, std::size_t image_dim,
                     std::size_t class_count) {
  Dataset ds;
  ds.objects = std::move(objects);
  ds.text_dim = text_dim;
  ds.image_dim = image_dim;
  ds.class_count = class_count;
  recompute_bounding_box(ds);
  return ds;
}

void recompute_bounding_box(Dataset& ds) {
  if (ds.objects.empty()) {
    ds.bbox_min = ds.bbox_max = GeoPoint{0.0, 0.0};
    return;
  }
  GeoPoint lo{ds.objects.front().location};
  GeoPoint hi{lo};
  for (const auto& o : ds.objects) {
    lo.x = std::min(lo.x, o.location.x);
    lo.y = std::min(lo.y, o.location.y);
    hi.x = std::max(hi.x, o.location.x);
    hi.y = std::max(hi.y, o.location.y);
  }
  ds.bbox_min = lo;
  ds.bbox_max = hi;
}

std::vector<Violation> validate_dataset(const Dataset& ds) {
  std::vector<Violation> out;
  std::unordered_set<std::int64_t> seen;
  seen.reserve(ds.objects.size());

  for (const auto& o : ds.objects) {
    if (!seen.insert(o.id).second)
      out.push_back({o.id, "duplicate object id"});
    if (!is_finite(o.location))
      out.push_back({o.id, "non-finite coordinate"});

    const std::size_t want =
        o.feature.modality == Modality::Text ? ds.text_dim : ds.image_dim;
    if (o.feature.dim() != want)
      out.push_back({o.id, "feature dimension mismatch (got " +
                               std::to_string(o.feature.dim()) + ", expected " +
                               std::to_string(want) + ")"});
    for (double v : o.feature.values) {
      if (!std::isfinite(v)) {
        out.push_back({o.id, "non-finite feature entry"});
        break;
      }
    }

    if (o.semantic && !is_valid_semantic(*o.semantic, ds.class_count))
      out.push_back({o.id, "invalid semantic vector"});
    if (o.label &&
        (*o.label < 0 || static_cast<std::size_t>(*o.label) >= ds.class_count))
      out.push_back({o.id, "label out of range"});

    if (is_finite(o.location)) {
      const auto& p = o.location;
      if (p.x < ds.bbox_min.x || p.x > ds.bbox_max.x || p.y < ds.bbox_min.y ||
          p.y > ds.bbox_max.y)
        out.push_back({o.id, "location outside dataset bounding box"});
    }
  }
  return out;
}

}  // namespace geomm
