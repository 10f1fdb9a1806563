#pragma once

// Randomized instance builders shared by the unit and acceptance suites.

#include <vector>

#include "geomm/cosmat.hpp"
#include "geomm/gmrtree.hpp"
#include "geomm/model.hpp"
#include "geomm/rng.hpp"

namespace testing_helpers {

inline geomm::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                   geomm::DetRng& rng, double scale = 1.0) {
  geomm::Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.normal(0.0, scale);
  return m;
}

/// A structurally valid semantic space with arbitrary weights. Good enough
/// for search-correctness tests, which only need valid posteriors.
inline geomm::SemanticSpaceModel random_space(geomm::DetRng& rng,
                                              std::size_t classes,
                                              std::size_t text_dim = 2,
                                              std::size_t image_dim = 3,
                                              std::size_t gamma = 2) {
  geomm::SemanticSpaceModel s;
  s.corr_proj.gamma = gamma;
  s.corr_proj.text_directions = random_matrix(gamma, text_dim, rng);
  s.corr_proj.image_directions = random_matrix(gamma, image_dim, rng);
  s.corr_proj.correlations.assign(gamma, 0.5);
  s.corr_proj.text_mean.assign(text_dim, 0.0);
  s.corr_proj.image_mean.assign(image_dim, 0.0);
  s.text_logs_tran.class_count = classes;
  s.text_logs_tran.weights = random_matrix(classes, gamma + 1, rng);
  s.image_logs_tran.class_count = classes;
  s.image_logs_tran.weights = random_matrix(classes, gamma + 1, rng);
  return s;
}

/// Random posterior. Peaked vectors put most mass on one class (so their
/// signatures carry a bit); flat ones spread it (often an all-zero
/// signature under the threshold).
inline geomm::SemanticVector random_posterior(geomm::DetRng& rng,
                                              std::size_t classes) {
  std::vector<double> p(classes);
  if (rng.uniform() < 0.7) {
    const std::size_t hot = rng.bounded(classes);
    const double mass = rng.uniform(0.5, 0.95);
    for (std::size_t c = 0; c < classes; ++c)
      p[c] = (1.0 - mass) / static_cast<double>(classes - 1);
    p[hot] = mass + (classes > 1 ? 0.0 : 0.0);
    // renormalize exactly
    double sum = 0.0;
    for (double v : p) sum += v;
    for (double& v : p) v /= sum;
  } else {
    double sum = 0.0;
    for (double& v : p) {
      v = rng.uniform(0.01, 1.0);
      sum += v;
    }
    for (double& v : p) v /= sum;
  }
  return geomm::SemanticVector{std::move(p)};
}

/// n embedded image objects with ids 0..n-1 in the unit square.
inline std::vector<geomm::GeoMultimediaObject> random_embedded_objects(
    geomm::DetRng& rng, std::size_t n, std::size_t classes,
    std::size_t image_dim = 3) {
  std::vector<geomm::GeoMultimediaObject> objs;
  objs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    geomm::GeoMultimediaObject o;
    o.id = static_cast<std::int64_t>(i);
    o.location = {rng.uniform(), rng.uniform()};
    o.feature.modality = geomm::Modality::Image;
    o.feature.values.assign(image_dim, 0.0);
    for (auto& v : o.feature.values) v = rng.normal();
    o.semantic = random_posterior(rng, classes);
    objs.push_back(std::move(o));
  }
  return objs;
}

inline geomm::Dataset random_embedded_dataset(geomm::DetRng& rng, std::size_t n,
                                              std::size_t classes,
                                              std::size_t text_dim = 2,
                                              std::size_t image_dim = 3) {
  return geomm::make_dataset(random_embedded_objects(rng, n, classes, image_dim),
                             text_dim, image_dim, classes);
}

}  // namespace testing_helpers
