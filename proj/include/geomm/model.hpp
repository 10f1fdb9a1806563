#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace geomm {

/// Modalities carried by geo-multimedia objects. Only text and image are
/// supported; an object holds exactly one of them.
enum class Modality : std::uint8_t { Text = 0, Image = 1 };

const char* modality_tag(Modality m);                 // "T" / "I"
Modality parse_modality_tag(const std::string& tag);  // throws on anything else

/// Planar point. Coordinates are treated as plain Euclidean axes; no
/// great-circle correction is applied.
struct GeoPoint {
  double x = 0.0;
  double y = 0.0;
};

bool is_finite(const GeoPoint& p);

/// Fixed-length feature vector for one modality.
struct FeatureVector {
  Modality modality = Modality::Text;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

/// Posterior probability distribution over the shared concept classes.
/// Entries lie in [0, 1] and sum to 1 (within 1e-9).
struct SemanticVector {
  std::vector<double> probabilities;

  std::size_t size() const { return probabilities.size(); }
  double operator[](std::size_t i) const { return probabilities[i]; }
};

/// Checks the SemanticVector invariants against an expected class count.
bool is_valid_semantic(const SemanticVector& sv, std::size_t class_count,
                       double sum_tol = 1e-9);

/// Index of the most probable concept class.
std::size_t argmax_class(const SemanticVector& sv);

struct GeoMultimediaObject {
  std::int64_t id = -1;
  GeoPoint location;
  FeatureVector feature;
  std::optional<SemanticVector> semantic;  // present after embedding
  std::optional<int> label;                // present for training objects
};

/// A kNN text-to-image query: location, text feature, result count k and
/// the distance/similarity balance mu.
struct Query {
  GeoPoint location;
  FeatureVector text_feature;
  int k = 10;
  double mu = 0.5;
};

/// Throws std::invalid_argument if k < 1, mu outside [0,1], the feature is
/// not text-modality, or any coordinate is non-finite.
void validate_query(const Query& q);

struct ScoredResult {
  std::int64_t object_id = -1;
  double distance = 0.0;            // Euclidean, planar units
  double distance_proximity = 0.0;  // in [0, 1]
  double similarity = 0.0;          // cosine in the semantic space
  double score = 0.0;               // mu*proximity + (1-mu)*similarity
};

struct Dataset {
  std::vector<GeoMultimediaObject> objects;
  std::size_t text_dim = 0;
  std::size_t image_dim = 0;
  std::size_t class_count = 0;
  GeoPoint bbox_min;  // componentwise min over object locations
  GeoPoint bbox_max;  // componentwise max over object locations
};

/// Builds a dataset and computes its bounding box.
Dataset make_dataset(std::vector<GeoMultimediaObject> objects,
                     std::size_t text_dim, std::size_t image_dim,
                     std::size_t class_count);

void recompute_bounding_box(Dataset& ds);

/// One invariant breach. object_id is -1 for dataset-level problems.
struct Violation {
  std::int64_t object_id = -1;
  std::string reason;
};

/// Returns every invariant violation in the dataset: duplicate ids,
/// non-finite coordinates, feature/semantic dimension mismatches, labels
/// out of range, and a bounding box that fails to cover some location.
/// Violations are data, not errors; an empty list means the dataset is valid.
std::vector<Violation> validate_dataset(const Dataset& ds);

}  // namespace geomm
