#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bayesw/errors.hpp"
#include "bayesw/linalg.hpp"

namespace bayesw {

/// Binary neighbour indicators with a structurally zero diagonal.
/// With the symmetric flag set, every edit is mirrored so omega == omega'.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(Index n, bool symmetric = false)
      : n_(n), symmetric_(symmetric), bits_(static_cast<std::size_t>(n * n), 0),
        row_sums_(static_cast<std::size_t>(n), 0) {}

  /// Any nonzero entry counts as a link. Validates diagonal and symmetry.
  static AdjacencyMatrix from_dense(const Matrix& dense, bool symmetric) {
    if (dense.rows() != dense.cols()) throw DimensionMismatch("adjacency matrix must be square");
    AdjacencyMatrix out(dense.rows(), symmetric);
    for (Index i = 0; i < out.n_; ++i) {
      for (Index j = 0; j < out.n_; ++j) {
        const bool link = dense(i, j) != 0.0;
        if (i == j) {
          if (link) throw ValidationError("adjacency matrix must have a zero diagonal");
          continue;
        }
        if (symmetric && link != (dense(j, i) != 0.0)) {
          throw ValidationError("adjacency matrix flagged symmetric is not symmetric");
        }
        if (link) out.set_one(i, j, 1);
      }
    }
    return out;
  }

  Index n() const noexcept { return n_; }
  bool symmetric() const noexcept { return symmetric_; }

  int operator()(Index i, Index j) const { return bits_[idx(i, j)]; }
  int row_sum(Index i) const { return row_sums_[static_cast<std::size_t>(i)]; }

  /// Sets omega_ij (and omega_ji when symmetric).
  void set(Index i, Index j, int value) {
    if (i == j) throw ValidationError("cannot set a diagonal adjacency entry");
    set_one(i, j, value);
    if (symmetric_) set_one(j, i, value);
  }

  Index link_count() const {
    Index total = 0;
    for (int s : row_sums_) total += s;
    return total;
  }

  Matrix to_dense() const {
    Matrix out(n_, n_);
    for (Index i = 0; i < n_; ++i)
      for (Index j = 0; j < n_; ++j) out(i, j) = (*this)(i, j);
    return out;
  }

  bool operator==(const AdjacencyMatrix& other) const {
    return n_ == other.n_ && bits_ == other.bits_;
  }

 private:
  std::size_t idx(Index i, Index j) const { return static_cast<std::size_t>(i * n_ + j); }

  void set_one(Index i, Index j, int value) {
    auto& cell = bits_[idx(i, j)];
    const std::uint8_t v = value != 0 ? 1 : 0;
    row_sums_[static_cast<std::size_t>(i)] += static_cast<int>(v) - static_cast<int>(cell);
    cell = v;
  }

  Index n_ = 0;
  bool symmetric_ = false;
  std::vector<std::uint8_t> bits_;
  std::vector<int> row_sums_;
};

struct WeightMatrix {
  Matrix w;
  bool row_standardized = true;

  Index n() const noexcept { return w.rows(); }
};

/// Row i of W = f(omega): omega_ij / sum_j omega_ij, or zeros for an empty row.
/// Without standardization the binary row is returned as is.
inline Vector weight_row(const AdjacencyMatrix& omega, Index i, bool standardize = true) {
  Vector row(omega.n());
  const int s = omega.row_sum(i);
  const double scale = (standardize && s > 0) ? 1.0 / s : 1.0;
  for (Index j = 0; j < omega.n(); ++j) row[j] = omega(i, j) * scale;
  return row;
}

inline WeightMatrix row_standardize(const AdjacencyMatrix& omega, bool standardize = true) {
  WeightMatrix out{Matrix(omega.n(), omega.n()), standardize};
  for (Index i = 0; i < omega.n(); ++i) out.w.row(i) = weight_row(omega, i, standardize).transpose();
  return out;
}

struct ModelSpec {
  /// 0: contemporaneous W y_t. r > 0: temporal spatial lag W y_{t-r}.
  int lag = 0;
  bool row_standardize = true;
  bool symmetric_omega = false;
  bool unit_fixed_effects = true;
  bool time_fixed_effects = true;
};

/**
 * @brief Stacked balanced panel.
 *
 * Observation (unit i, period t) sits at index t * n + i, so that the spatial
 * filter acts blockwise as I_T (x) (I_N - rho W).
 */
struct PanelData {
  Index n = 0;
  Index t = 0;
  Vector y;
  std::optional<Vector> y_lag;
  Matrix x;
  Index n_covariates = 0;
  std::vector<std::string> column_names;

  Index q() const noexcept { return x.cols(); }
  Index nt() const noexcept { return n * t; }
};

/// The vector multiplied by rho (I_T (x) W): Y itself for r = 0, the lagged Y otherwise.
inline const Vector& spatial_regressor(const PanelData& data, const ModelSpec& spec) {
  if (spec.lag > 0) {
    if (!data.y_lag) throw ValidationError("lagged model requires a lagged dependent variable");
    return *data.y_lag;
  }
  return data.y;
}

/// (I_T (x) W) v for a stacked vector v.
inline Vector stacked_spatial_lag(const Matrix& w, const Vector& v, Index n, Index t) {
  Vector out(n * t);
  Eigen::Map<const Matrix> vm(v.data(), n, t);
  Eigen::Map<Matrix> om(out.data(), n, t);
  om.noalias() = w * vm;
  return out;
}

/**
 * Covariates followed by N unit dummies and T-1 time dummies (first period is
 * the reference). Without unit effects all T time dummies are kept; with
 * neither an intercept column is added.
 */
inline Matrix design_matrix(const Matrix& covariates, Index n, Index t, const ModelSpec& spec,
                            std::vector<std::string>* names = nullptr,
                            const std::vector<std::string>& covariate_names = {}) {
  if (covariates.rows() != n * t) {
    throw DimensionMismatch("covariate matrix needs n*t rows");
  }
  const Index k = covariates.cols();
  const Index unit_cols = spec.unit_fixed_effects ? n : 0;
  const Index time_start = spec.unit_fixed_effects ? 1 : 0;
  const Index time_cols = spec.time_fixed_effects ? t - time_start : 0;
  const bool intercept = !spec.unit_fixed_effects && !spec.time_fixed_effects;
  Matrix x = Matrix::Zero(n * t, k + unit_cols + time_cols + (intercept ? 1 : 0));
  x.leftCols(k) = covariates;
  std::vector<std::string> cols;
  for (Index c = 0; c < k; ++c) {
    cols.push_back(c < static_cast<Index>(covariate_names.size()) ? covariate_names[c]
                                                                  : "x" + std::to_string(c + 1));
  }
  for (Index i = 0; i < unit_cols; ++i) cols.push_back("unit_" + std::to_string(i + 1));
  for (Index p = 0; p < time_cols; ++p) cols.push_back("time_" + std::to_string(p + time_start + 1));
  if (intercept) cols.push_back("intercept");
  for (Index p = 0; p < t; ++p) {
    for (Index i = 0; i < n; ++i) {
      const Index row = p * n + i;
      if (unit_cols > 0) x(row, k + i) = 1.0;
      if (time_cols > 0 && p >= time_start) x(row, k + unit_cols + p - time_start) = 1.0;
      if (intercept) x(row, x.cols() - 1) = 1.0;
    }
  }
  if (names) *names = std::move(cols);
  return x;
}

inline bool has_full_column_rank(const Matrix& x) {
  if (x.cols() > x.rows()) return false;
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  return qr.rank() == x.cols();
}

/// Assembles a PanelData with fixed-effect dummies; throws RankDeficient on collinear X.
inline PanelData build_design(Vector y, std::optional<Vector> y_lag, const Matrix& covariates,
                              Index n, Index t, const ModelSpec& spec,
                              const std::vector<std::string>& covariate_names = {}) {
  if (n <= 0 || t <= 0) throw ValidationError("panel dimensions must be positive");
  if (y.size() != n * t) throw DimensionMismatch("y needs n*t entries");
  if (spec.lag > 0 && !y_lag) throw MissingLag("lagged model requires a lagged dependent variable");
  if (y_lag && y_lag->size() != n * t) throw DimensionMismatch("y_lag needs n*t entries");
  PanelData data;
  data.n = n;
  data.t = t;
  data.y = std::move(y);
  data.y_lag = std::move(y_lag);
  data.n_covariates = covariates.cols();
  data.x = design_matrix(covariates, n, t, spec, &data.column_names, covariate_names);
  if (!has_full_column_rank(data.x)) {
    throw RankDeficient("design matrix (covariates plus fixed effects) is not of full column rank");
  }
  return data;
}

struct ParameterState {
  Vector beta;
  double sigma2 = 1.0;
  double rho = 0.5;
  AdjacencyMatrix omega;
  /// Cached (I - rho W)^{-1} and log det; only used when the lag is 0.
  std::optional<SpatialSystemState> system;
};

/// Y - rho (I_T (x) W) L - X beta, with L = Y (r = 0) or the lagged Y.
inline Vector spatial_residuals(const PanelData& data, const ModelSpec& spec, const Matrix& w,
                                double rho, const Vector& beta) {
  Vector e = data.y - data.x * beta;
  e -= rho * stacked_spatial_lag(w, spatial_regressor(data, spec), data.n, data.t);
  return e;
}

/// Gaussian log-likelihood with the conventional NT/2 normalization.
inline double log_likelihood(const ParameterState& params, const PanelData& data,
                             const ModelSpec& spec) {
  const Matrix w = row_standardize(params.omega, spec.row_standardize).w;
  const Vector e = spatial_residuals(data, spec, w, params.rho, params.beta);
  const double nt = static_cast<double>(data.nt());
  double ll = -0.5 * nt * std::log(2.0 * std::numbers::pi * params.sigma2) -
              e.squaredNorm() / (2.0 * params.sigma2);
  if (spec.lag == 0) {
    if (!params.system) throw InconsistentState("contemporaneous model needs a cached system");
    const Matrix expected = spatial_filter(w, params.rho);
    if (params.system->n() != expected.rows() ||
        (params.system->a() - expected).cwiseAbs().maxCoeff() > 1e-8) {
      throw InconsistentState("cached system does not match (rho, W)");
    }
    ll += static_cast<double>(data.t) * params.system->log_det();
  }
  return ll;
}

}  // namespace bayesw
