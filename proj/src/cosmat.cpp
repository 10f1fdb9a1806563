#include "geomm/cosmat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "binio.hpp"

namespace geomm {

namespace {

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> mu(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) mu[j] += m(i, j);
  for (double& v : mu) v /= static_cast<double>(m.rows);
  return mu;
}

Matrix centered(const Matrix& m, const std::vector<double>& mu) {
  Matrix c = m;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) c(i, j) -= mu[j];
  return c;
}

// (1/(n-1)) A^T B for centered A, B with matching row counts.
Matrix covariance(const Matrix& a, const Matrix& b) {
  Matrix c = multiply(transpose(a), b);
  const double scale = 1.0 / static_cast<double>(a.rows - 1);
  for (double& v : c.data) v *= scale;
  return c;
}

double trace(const Matrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows, m.cols); ++i) t += m(i, i);
  return t;
}

void check_corr_proj_args(const Matrix& text, const Matrix& image,
                          std::size_t gamma) {
  if (image.rows != text.rows)
    throw std::invalid_argument(
        "fit_corr_proj: row counts differ (rows must be paired)");
  if (text.rows < 2)
    throw std::invalid_argument("fit_corr_proj: need at least 2 paired rows");
  if (gamma < 1 || gamma > std::min(text.cols, image.cols))
    throw std::invalid_argument("fit_corr_proj: gamma out of range");
}

CorrProjModel fit_corr_proj_impl(const Matrix& text_features,
                                 const Matrix& image_features,
                                 std::size_t gamma, double ridge_t,
                                 double ridge_i) {
  const std::size_t d_t = text_features.cols;
  const std::size_t d_i = image_features.cols;

  CorrProjModel model;
  model.gamma = gamma;
  model.text_mean = column_means(text_features);
  model.image_mean = column_means(image_features);

  const Matrix xc = centered(text_features, model.text_mean);
  const Matrix yc = centered(image_features, model.image_mean);

  Matrix s_tt = covariance(xc, xc);
  Matrix s_ii = covariance(yc, yc);
  const Matrix s_ti = covariance(xc, yc);
  for (std::size_t i = 0; i < d_t; ++i) s_tt(i, i) += ridge_t;
  for (std::size_t i = 0; i < d_i; ++i) s_ii(i, i) += ridge_i;

  Matrix l_t, l_i;
  try {
    l_t = cholesky(s_tt);
    l_i = cholesky(s_ii);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(
        std::string("fit_corr_proj: covariance singular after ridge: ") +
        e.what());
  }

  // Whitened cross-covariance K = L_t^{-1} S_ti L_i^{-T}; its singular
  // values are the canonical correlations and its singular vectors are the
  // canonical directions in whitened coordinates.
  const Matrix w = solve_lower(l_t, s_ti);                     // d_t x d_i
  const Matrix k = transpose(solve_lower(l_i, transpose(w)));  // d_t x d_i

  const bool text_side = d_t <= d_i;
  const Matrix sym =
      text_side ? multiply(k, transpose(k)) : multiply(transpose(k), k);
  const auto pairs = leading_symmetric_eigen(sym, gamma);

  model.text_directions = Matrix(gamma, d_t);
  model.image_directions = Matrix(gamma, d_i);
  model.correlations.resize(gamma);

  std::vector<std::vector<double>> derived_so_far;
  for (std::size_t j = 0; j < gamma; ++j) {
    const double rho = std::sqrt(std::max(pairs[j].value, 0.0));
    model.correlations[j] = rho;

    std::vector<double> u, v;  // whitened text-side / image-side directions
    if (text_side) {
      u = pairs[j].vector;
      v = matvec(transpose(k), u);
    } else {
      v = pairs[j].vector;
      u = matvec(k, v);
    }
    auto& derived = text_side ? v : u;
    double nd = 0.0;
    for (double x : derived) nd += x * x;
    nd = std::sqrt(nd);
    if (nd > 1e-12) {
      for (double& x : derived) x /= nd;
    } else {
      // Zero-correlation pair: any unit vector orthogonal to the previous
      // picks is a valid partner direction. Choose deterministically.
      const std::size_t dim = derived.size();
      for (std::size_t basis = 0; basis < dim; ++basis) {
        std::vector<double> cand(dim, 0.0);
        cand[basis] = 1.0;
        for (const auto& prev : derived_so_far) {
          double c = 0.0;
          for (std::size_t t = 0; t < dim; ++t) c += cand[t] * prev[t];
          for (std::size_t t = 0; t < dim; ++t) cand[t] -= c * prev[t];
        }
        double nc = 0.0;
        for (double x : cand) nc += x * x;
        nc = std::sqrt(nc);
        if (nc > 1e-6) {
          for (double& x : cand) x /= nc;
          derived = cand;
          break;
        }
      }
    }
    derived_so_far.push_back(derived);

    // Un-whiten: a solves L^T a = u, so a^T Sigma a = u^T u = 1.
    Matrix ucol(d_t, 1), vcol(d_i, 1);
    for (std::size_t t = 0; t < d_t; ++t) ucol(t, 0) = u[t];
    for (std::size_t t = 0; t < d_i; ++t) vcol(t, 0) = v[t];
    const Matrix a = solve_lower_transposed(l_t, ucol);
    const Matrix b = solve_lower_transposed(l_i, vcol);
    for (std::size_t t = 0; t < d_t; ++t) model.text_directions(j, t) = a(t, 0);
    for (std::size_t t = 0; t < d_i; ++t) model.image_directions(j, t) = b(t, 0);
  }

  return model;
}

}  // namespace

CorrProjModel fit_corr_proj(const Matrix& text_features,
                            const Matrix& image_features, std::size_t gamma,
                            double ridge) {
  check_corr_proj_args(text_features, image_features, gamma);
  if (ridge < 0.0) throw std::invalid_argument("fit_corr_proj: ridge must be >= 0");
  return fit_corr_proj_impl(text_features, image_features, gamma, ridge, ridge);
}

CorrProjModel fit_corr_proj(const Matrix& text_features,
                            const Matrix& image_features, std::size_t gamma) {
  check_corr_proj_args(text_features, image_features, gamma);
  const Matrix xc = centered(text_features, column_means(text_features));
  const Matrix yc = centered(image_features, column_means(image_features));
  const double ridge_t =
      1e-6 * trace(covariance(xc, xc)) / static_cast<double>(text_features.cols);
  const double ridge_i =
      1e-6 * trace(covariance(yc, yc)) / static_cast<double>(image_features.cols);
  return fit_corr_proj_impl(text_features, image_features, gamma, ridge_t,
                            ridge_i);
}

namespace {

std::vector<double> project(const Matrix& directions,
                            const std::vector<double>& mean,
                            const std::vector<double>& values) {
  std::vector<double> shifted(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) shifted[i] = values[i] - mean[i];
  return matvec(directions, shifted);
}

}  // namespace

std::vector<double> project_text(const CorrProjModel& model,
                                 const FeatureVector& feature) {
  if (feature.modality != Modality::Text)
    throw std::invalid_argument("project_text: feature is not text modality");
  if (feature.dim() != model.text_dim())
    throw std::invalid_argument("project_text: feature dimension mismatch");
  return project(model.text_directions, model.text_mean, feature.values);
}

std::vector<double> project_image(const CorrProjModel& model,
                                  const FeatureVector& feature) {
  if (feature.modality != Modality::Image)
    throw std::invalid_argument("project_image: feature is not image modality");
  if (feature.dim() != model.image_dim())
    throw std::invalid_argument("project_image: feature dimension mismatch");
  return project(model.image_directions, model.image_mean, feature.values);
}

namespace {

// Design matrix with the constant-1 bias column appended.
Matrix with_bias(const Matrix& projected) {
  Matrix x(projected.rows, projected.cols + 1);
  for (std::size_t i = 0; i < projected.rows; ++i) {
    for (std::size_t j = 0; j < projected.cols; ++j) x(i, j) = projected(i, j);
    x(i, projected.cols) = 1.0;
  }
  return x;
}

// Row-wise stabilized softmax into probs; returns mean cross-entropy.
double softmax_loss(const Matrix& logits, const std::vector<int>& labels,
                    Matrix& probs) {
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    double mx = logits(i, 0);
    for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(i, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      const double e = std::exp(logits(i, c) - mx);
      probs(i, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < logits.cols; ++c) probs(i, c) /= sum;
    loss -= std::log(std::max(probs(i, static_cast<std::size_t>(labels[i])), 1e-300));
  }
  return loss / static_cast<double>(logits.rows);
}

double l2_term(const Matrix& w, double l2) {
  double s = 0.0;
  for (double v : w.data) s += v * v;
  return 0.5 * l2 * s;
}

double loss_with_design(const Matrix& weights, const Matrix& x,
                        const std::vector<int>& labels, double l2,
                        Matrix& probs) {
  const Matrix logits = multiply(x, transpose(weights));
  return softmax_loss(logits, labels, probs) + l2_term(weights, l2);
}

Matrix gradient_with_design(const Matrix& weights, const Matrix& x,
                            const std::vector<int>& labels, double l2,
                            const Matrix& probs) {
  const std::size_t n = x.rows;
  Matrix grad(weights.rows, weights.cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < weights.rows; ++c) {
      const double delta =
          probs(i, c) - (static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0);
      if (delta == 0.0) continue;
      for (std::size_t j = 0; j < weights.cols; ++j)
        grad(c, j) += delta * x(i, j);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < weights.rows; ++c)
    for (std::size_t j = 0; j < weights.cols; ++j)
      grad(c, j) = grad(c, j) * inv_n + l2 * weights(c, j);
  return grad;
}

}  // namespace

double logs_tran_loss(const Matrix& weights, const Matrix& projected,
                      const std::vector<int>& labels, double l2) {
  if (weights.cols != projected.cols + 1)
    throw std::invalid_argument("logs_tran_loss: weight/feature width mismatch");
  const Matrix x = with_bias(projected);
  Matrix probs(projected.rows, weights.rows);
  return loss_with_design(weights, x, labels, l2, probs);
}

Matrix logs_tran_gradient(const Matrix& weights, const Matrix& projected,
                          const std::vector<int>& labels, double l2) {
  if (weights.cols != projected.cols + 1)
    throw std::invalid_argument("logs_tran_gradient: weight/feature width mismatch");
  const Matrix x = with_bias(projected);
  Matrix probs(projected.rows, weights.rows);
  loss_with_design(weights, x, labels, l2, probs);
  return gradient_with_design(weights, x, labels, l2, probs);
}

LogsTranModel fit_logs_tran(const Matrix& projected,
                            const std::vector<int>& labels,
                            std::size_t class_count,
                            const LogsTranOptions& opts,
                            LogsTranFitInfo* info) {
  const std::size_t n = projected.rows;
  const std::size_t gamma = projected.cols;
  if (class_count < 2) throw std::invalid_argument("fit_logs_tran: need >= 2 classes");
  if (labels.size() != n)
    throw std::invalid_argument("fit_logs_tran: label count != row count");
  if (n < class_count)
    throw std::invalid_argument("fit_logs_tran: fewer samples than classes");
  if (opts.l2 < 0.0) throw std::invalid_argument("fit_logs_tran: l2 must be >= 0");

  std::vector<std::size_t> per_class(class_count, 0);
  for (int lab : labels) {
    if (lab < 0 || static_cast<std::size_t>(lab) >= class_count)
      throw std::invalid_argument("fit_logs_tran: label " + std::to_string(lab) +
                                  " out of range");
    ++per_class[static_cast<std::size_t>(lab)];
  }
  for (std::size_t c = 0; c < class_count; ++c)
    if (per_class[c] == 0)
      throw std::invalid_argument("fit_logs_tran: class " + std::to_string(c) +
                                  " has zero examples");

  const Matrix x = with_bias(projected);
  Matrix w(class_count, gamma + 1);  // zero init
  Matrix probs(n, class_count);

  double loss = loss_with_design(w, x, labels, opts.l2, probs);
  if (info) {
    *info = {};
    info->loss_history.push_back(loss);
  }

  double grad_max = 0.0;
  std::size_t it = 0;
  for (; it < opts.max_iters; ++it) {
    const Matrix grad = gradient_with_design(w, x, labels, opts.l2, probs);
    grad_max = 0.0;
    for (double g : grad.data) grad_max = std::max(grad_max, std::abs(g));
    if (grad_max < opts.tol) break;

    double step = 1.0;
    bool accepted = false;
    Matrix candidate(class_count, gamma + 1);
    Matrix cand_probs(n, class_count);
    while (step > 1e-20) {
      for (std::size_t idx = 0; idx < w.data.size(); ++idx)
        candidate.data[idx] = w.data[idx] - step * grad.data[idx];
      const double cand_loss =
          loss_with_design(candidate, x, labels, opts.l2, cand_probs);
      if (cand_loss < loss) {
        w = candidate;
        probs = cand_probs;
        loss = cand_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent left at double precision
    if (info) info->loss_history.push_back(loss);
  }

  if (info) {
    info->final_grad_max_norm = grad_max;
    info->iterations = it;
  }

  LogsTranModel model;
  model.weights = std::move(w);
  model.class_count = class_count;
  return model;
}

SemanticVector to_semantic(const LogsTranModel& model,
                           const std::vector<double>& projected) {
  if (projected.size() != model.input_dim())
    throw std::invalid_argument("to_semantic: input length != model gamma");
  const std::size_t c_count = model.class_count;
  std::vector<double> logits(c_count, 0.0);
  for (std::size_t c = 0; c < c_count; ++c) {
    double s = model.weights(c, projected.size());  // bias
    for (std::size_t j = 0; j < projected.size(); ++j)
      s += model.weights(c, j) * projected[j];
    logits[c] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return SemanticVector{std::move(logits)};
}

void validate_space(const SemanticSpaceModel& space) {
  if (space.text_logs_tran.class_count != space.image_logs_tran.class_count)
    throw std::invalid_argument(
        "semantic space: text and image class counts differ");
  if (space.text_logs_tran.input_dim() != space.corr_proj.gamma ||
      space.image_logs_tran.input_dim() != space.corr_proj.gamma)
    throw std::invalid_argument(
        "semantic space: logistic input dim != projection gamma");
  if (!space.concept_names.empty() &&
      space.concept_names.size() != space.class_count())
    throw std::invalid_argument("semantic space: concept name count mismatch");
}

SemanticVector embed_text(const SemanticSpaceModel& space,
                          const FeatureVector& feature) {
  return to_semantic(space.text_logs_tran, project_text(space.corr_proj, feature));
}

SemanticVector embed_image(const SemanticSpaceModel& space,
                           const FeatureVector& feature) {
  return to_semantic(space.image_logs_tran,
                     project_image(space.corr_proj, feature));
}

double cosine_similarity(const SemanticVector& a, const SemanticVector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine_similarity: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

SemanticSpaceModel fit_semantic_space(const Matrix& text_features,
                                      const Matrix& image_features,
                                      const std::vector<int>& labels,
                                      std::size_t class_count,
                                      const CosmatOptions& opts,
                                      std::vector<std::string> concept_names) {
  SemanticSpaceModel space;
  space.corr_proj =
      opts.ridge < 0.0
          ? fit_corr_proj(text_features, image_features, opts.gamma)
          : fit_corr_proj(text_features, image_features, opts.gamma, opts.ridge);

  const std::size_t n = text_features.rows;
  Matrix text_proj(n, opts.gamma), image_proj(n, opts.gamma);
  std::vector<double> row_t(text_features.cols), row_i(image_features.cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < text_features.cols; ++j)
      row_t[j] = text_features(i, j) - space.corr_proj.text_mean[j];
    for (std::size_t j = 0; j < image_features.cols; ++j)
      row_i[j] = image_features(i, j) - space.corr_proj.image_mean[j];
    const auto pt = matvec(space.corr_proj.text_directions, row_t);
    const auto pi = matvec(space.corr_proj.image_directions, row_i);
    for (std::size_t j = 0; j < opts.gamma; ++j) {
      text_proj(i, j) = pt[j];
      image_proj(i, j) = pi[j];
    }
  }

  // Both logistic models train against the same label indexing so the two
  // posterior spaces share coordinates.
  space.text_logs_tran = fit_logs_tran(text_proj, labels, class_count, opts.logs);
  space.image_logs_tran = fit_logs_tran(image_proj, labels, class_count, opts.logs);
  space.concept_names = std::move(concept_names);
  validate_space(space);
  return space;
}

namespace {

constexpr char kModelMagic[5] = "GMSM";
constexpr std::uint32_t kModelVersion = 1;

void write_matrix(std::ostream& os, const Matrix& m) {
  binio::write_u64(os, m.rows);
  binio::write_u64(os, m.cols);
  for (double v : m.data) binio::write_f64(os, v);
}

Matrix read_matrix(std::istream& is) {
  const std::uint64_t r = binio::read_u64(is);
  const std::uint64_t c = binio::read_u64(is);
  Matrix m(r, c);
  for (double& v : m.data) v = binio::read_f64(is);
  return m;
}

}  // namespace

void save_model(const SemanticSpaceModel& space, const std::string& path) {
  auto os = binio::open_out(path);
  os.write(kModelMagic, 4);
  binio::write_u32(os, kModelVersion);
  binio::write_u64(os, space.corr_proj.gamma);
  binio::write_f64_array(os, space.corr_proj.text_mean);
  binio::write_f64_array(os, space.corr_proj.image_mean);
  write_matrix(os, space.corr_proj.text_directions);
  write_matrix(os, space.corr_proj.image_directions);
  binio::write_f64_array(os, space.corr_proj.correlations);
  binio::write_u64(os, space.text_logs_tran.class_count);
  write_matrix(os, space.text_logs_tran.weights);
  write_matrix(os, space.image_logs_tran.weights);
  binio::write_u32(os, static_cast<std::uint32_t>(space.concept_names.size()));
  for (const auto& name : space.concept_names) binio::write_string(os, name);
  if (!os) throw std::runtime_error("save_model: write failed: " + path);
}

SemanticSpaceModel load_model(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kModelMagic, "semantic space model");
  const std::uint32_t version = binio::read_u32(is);
  if (version != kModelVersion)
    throw std::runtime_error("load_model: unsupported version " +
                             std::to_string(version));
  SemanticSpaceModel space;
  space.corr_proj.gamma = binio::read_u64(is);
  space.corr_proj.text_mean = binio::read_f64_array(is);
  space.corr_proj.image_mean = binio::read_f64_array(is);
  space.corr_proj.text_directions = read_matrix(is);
  space.corr_proj.image_directions = read_matrix(is);
  space.corr_proj.correlations = binio::read_f64_array(is);
  const std::uint64_t classes = binio::read_u64(is);
  space.text_logs_tran.weights = read_matrix(is);
  space.text_logs_tran.class_count = classes;
  space.image_logs_tran.weights = read_matrix(is);
  space.image_logs_tran.class_count = classes;
  const std::uint32_t names = binio::read_u32(is);
  space.concept_names.reserve(names);
  for (std::uint32_t i = 0; i < names; ++i)
    space.concept_names.push_back(binio::read_string(is));
  validate_space(space);
  return space;
}

}  // namespace geomm
