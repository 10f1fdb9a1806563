#pragma once

#include <string>
#include <vector>

#include "geomm/linalg.hpp"
#include "geomm/model.hpp"

namespace geomm {

/// Fitted canonical-correlation projection. Rows of the direction matrices
/// are the canonical directions, normalized so that each direction has unit
/// variance under its modality's (ridged) covariance.
struct CorrProjModel {
  std::size_t gamma = 0;
  Matrix text_directions;            // gamma x d_T
  Matrix image_directions;           // gamma x d_I
  std::vector<double> correlations;  // length gamma, nonincreasing, in [0, 1]
  std::vector<double> text_mean;     // length d_T
  std::vector<double> image_mean;    // length d_I

  std::size_t text_dim() const { return text_mean.size(); }
  std::size_t image_dim() const { return image_mean.size(); }
};

/// Fits the top-gamma canonical direction pairs from paired rows of the two
/// feature matrices. `ridge` is added to both auto-covariance diagonals
/// before factorization. Throws std::invalid_argument on bad shapes and
/// std::runtime_error when a covariance is numerically singular even after
/// the ridge.
CorrProjModel fit_corr_proj(const Matrix& text_features,
                            const Matrix& image_features, std::size_t gamma,
                            double ridge);

/// Same, with the default per-modality ridge 1e-6 * trace(Sigma)/d.
CorrProjModel fit_corr_proj(const Matrix& text_features,
                            const Matrix& image_features, std::size_t gamma);

/// directions * (values - mean): the projection into the text subspace.
std::vector<double> project_text(const CorrProjModel& model,
                                 const FeatureVector& feature);
std::vector<double> project_image(const CorrProjModel& model,
                                  const FeatureVector& feature);

/// Multinomial logistic model over projected features. One row of weights
/// per class; the trailing column multiplies a constant-1 bias feature.
struct LogsTranModel {
  Matrix weights;  // class_count x (gamma + 1)
  std::size_t class_count = 0;

  std::size_t input_dim() const { return weights.cols == 0 ? 0 : weights.cols - 1; }
};

struct LogsTranOptions {
  double l2 = 1e-4;
  std::size_t max_iters = 5000;
  double tol = 1e-6;  // gradient max-norm stopping threshold
};

struct LogsTranFitInfo {
  std::vector<double> loss_history;  // loss after each accepted step
  double final_grad_max_norm = 0.0;
  std::size_t iterations = 0;
};

/// Full-batch gradient descent with backtracking step halving from a zero
/// initialization; deterministic given inputs. Throws on labels out of
/// range or a class with zero examples.
LogsTranModel fit_logs_tran(const Matrix& projected,
                            const std::vector<int>& labels,
                            std::size_t class_count,
                            const LogsTranOptions& opts = {},
                            LogsTranFitInfo* info = nullptr);

/// Regularized mean cross-entropy at the given weights (class_count rows,
/// one bias column appended to the projected features). The optimizer
/// descends on exactly this function.
double logs_tran_loss(const Matrix& weights, const Matrix& projected,
                      const std::vector<int>& labels, double l2);

/// Analytic gradient of logs_tran_loss, same shape as weights.
Matrix logs_tran_gradient(const Matrix& weights, const Matrix& projected,
                          const std::vector<int>& labels, double l2);

/// Softmax of weights * [projected; 1], max-stabilized.
SemanticVector to_semantic(const LogsTranModel& model,
                           const std::vector<double>& projected);

/// The full semantic space: shared projection plus one logistic
/// transformation per modality over the same class set, making the two
/// posterior spaces directly comparable.
struct SemanticSpaceModel {
  CorrProjModel corr_proj;
  LogsTranModel text_logs_tran;
  LogsTranModel image_logs_tran;
  std::vector<std::string> concept_names;  // empty = unnamed classes

  std::size_t class_count() const { return text_logs_tran.class_count; }
};

void validate_space(const SemanticSpaceModel& space);  // throws on breach

SemanticVector embed_text(const SemanticSpaceModel& space,
                          const FeatureVector& feature);
SemanticVector embed_image(const SemanticSpaceModel& space,
                           const FeatureVector& feature);

/// Cosine similarity of two same-length vectors. Throws on length mismatch
/// or an all-zero input.
double cosine_similarity(const SemanticVector& a, const SemanticVector& b);

struct CosmatOptions {
  std::size_t gamma = 16;
  double ridge = -1.0;  // negative = per-modality default
  LogsTranOptions logs;
};

/// End-to-end training: CCA on the paired rows, then one logistic model per
/// modality on its projected side, both against the same label indexing.
SemanticSpaceModel fit_semantic_space(const Matrix& text_features,
                                      const Matrix& image_features,
                                      const std::vector<int>& labels,
                                      std::size_t class_count,
                                      const CosmatOptions& opts,
                                      std::vector<std::string> concept_names = {});

/// Binary model persistence; doubles round-trip bit-exactly.
void save_model(const SemanticSpaceModel& space, const std::string& path);
SemanticSpaceModel load_model(const std::string& path);

}  // namespace geomm
