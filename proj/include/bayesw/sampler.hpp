#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "bayesw/errors.hpp"
#include "bayesw/linalg.hpp"
#include "bayesw/model.hpp"
#include "bayesw/priors.hpp"
#include "bayesw/random.hpp"

namespace bayesw {

struct SamplerConfig {
  int n_draws = 5000;
  int n_burnin = 2500;
  int rho_grid_size = 200;
  std::uint64_t seed = 1;
  int refresh_interval = kDefaultRefreshInterval;
  int thin = 1;
  /// false: sigma2 rate is b + e'e as printed in the source model; true: b + e'e/2.
  bool residual_half_factor = false;
  /// Start omega from a prior draw instead of the empty matrix (plus forced links).
  bool init_omega_from_prior = false;
  /// Switches the data term off in the omega conditionals (prior-only runs).
  bool likelihood_enabled = true;
  bool identification_check = true;
  bool keep_omega_draws = false;
  /// Abort when more than this share of determinant checks in one sweep fail.
  double max_rejection_fraction = 0.5;

  void validate() const {
    if (n_draws < 0) throw ValidationError("sampler.draws must be >= 0");
    if (n_burnin < 0) throw ValidationError("sampler.burnin must be >= 0");
    if (rho_grid_size < 10) throw ValidationError("sampler.grid must be >= 10");
    if (refresh_interval < 1) throw ValidationError("sampler.refresh_interval must be >= 1");
    if (thin < 1) throw ValidationError("sampler.thin must be >= 1");
    if (!(max_rejection_fraction > 0.0 && max_rejection_fraction <= 1.0)) {
      throw ValidationError("sampler.max_rejection_fraction must lie in (0,1]");
    }
  }
};

struct PriorSpec {
  OmegaPrior omega;
  ParamPriors params;
};

struct SweepStats {
  Index visits = 0;
  Index flips = 0;
  Index determinant_checks = 0;
  Index determinant_rejections = 0;
  Index identification_rejections = 0;
};

struct RejectionCounts {
  long long proposals = 0;
  long long flips = 0;
  long long determinant = 0;
  long long identification = 0;
};

struct ChainOutput {
  Matrix beta_draws;  // draw x q
  std::vector<double> sigma2_draws;
  std::vector<double> rho_draws;
  Eigen::MatrixXi inclusion_counts;
  AdjacencyMatrix omega_last;
  Index draw_count = 0;
  std::vector<AdjacencyMatrix> omega_draws;  // only with keep_omega_draws
  RejectionCounts rejections;
};

/// diag(W^2)_k = sum_m w_km w_mk.
inline Vector w_squared_diagonal(const Matrix& w) {
  return (w.array() * w.transpose().array()).rowwise().sum();
}

/// Equal nonzero entries. The zero vector is not treated as proportional.
inline bool proportional_to_ones(const Vector& d, double rel_tol = 1e-12) {
  if (d.size() == 0) return false;
  const double scale = d.cwiseAbs().maxCoeff();
  if (scale == 0.0) return false;
  return d.maxCoeff() - d.minCoeff() <= rel_tol * scale;
}

/// Passes unless diag(W^2) is proportional to a vector of ones.
inline bool identification_check(const AdjacencyMatrix& omega, bool standardize = true) {
  return !proportional_to_ones(w_squared_diagonal(row_standardize(omega, standardize).w));
}

struct OmegaProposal {
  enum class Rejection { kNone, kDeterminant, kIdentification, kPrior };
  int current = 0;
  /// Conditional posterior probability that omega_ij = 1.
  double p_include = 0.0;
  /// log p(proposed) - log p(current); -inf when the proposal is infeasible.
  double log_odds = 0.0;
  Rejection rejection = Rejection::kNone;
  bool determinant_checked = false;
};

struct BetaPosterior {
  Vector mean;
  Matrix covariance;
};

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/**
 * @brief Gibbs sampler over (beta, sigma2, rho, omega) for one chain.
 *
 * Keeps W, Omega*L, the N x T residual matrix, diag(W^2) and (for the
 * contemporaneous model) the cached inverse of I - rho W consistent with the
 * current parameters, so that each omega proposal costs O(N + T) and an
 * accepted flip O(N^2).
 */
class GibbsSampler {
 public:
  GibbsSampler(const PanelData& data, const ModelSpec& spec, PriorSpec priors,
               SamplerConfig config, ParameterState init)
      : data_(&data), spec_(spec), priors_(std::move(priors)), config_(config) {
    config_.validate();
    priors_.params.validate();
    priors_.omega.validate();
    if (priors_.omega.n() != data.n) throw DimensionMismatch("omega prior dimension differs from panel N");
    if (spec_.lag < 0) throw ValidationError("model.lag must be >= 0");
    ymat_ = Eigen::Map<const Matrix>(data.y.data(), data.n, data.t);
    const Vector& l = spatial_regressor(data, spec_);
    lmat_ = Eigen::Map<const Matrix>(l.data(), data.n, data.t);
    xtx_ = data.x.transpose() * data.x;
    set_state(std::move(init));
  }

  const ParameterState& state() const noexcept { return state_; }
  const Matrix& weights() const noexcept { return w_; }
  const Matrix& residuals() const noexcept { return resid_; }
  double ssr() const noexcept { return ssr_; }
  const Vector& w_squared_diag() const noexcept { return diag_w2_; }
  const SamplerConfig& config() const noexcept { return config_; }
  const PriorSpec& priors() const noexcept { return priors_; }

  /// Replaces the parameters and rebuilds every cache from scratch.
  void set_state(ParameterState s) {
    if (s.omega.n() != data_->n) throw DimensionMismatch("omega dimension differs from panel N");
    if (s.omega.symmetric() != spec_.symmetric_omega) {
      throw ValidationError("omega symmetry flag differs from the model spec");
    }
    if (s.beta.size() != data_->q()) throw DimensionMismatch("beta length differs from design columns");
    if (!(s.sigma2 > 0.0)) throw OutOfSupport("sigma2 must be positive");
    if (!(s.rho > 0.0 && s.rho < 1.0)) throw OutOfSupport("rho must lie in (0,1)");
    state_ = std::move(s);
    rebuild_caches();
  }

  // --- beta ---------------------------------------------------------------

  BetaPosterior beta_posterior() const {
    const Vector v = priors_.params.beta_variances(data_->q());
    Matrix precision = xtx_ / state_.sigma2;
    precision.diagonal() += v.cwiseInverse();
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalFailure("beta posterior precision is not positive definite");
    BetaPosterior out;
    out.covariance = llt.solve(Matrix::Identity(precision.rows(), precision.cols()));
    out.mean = llt.solve(beta_rhs());
    return out;
  }

  const Vector& sample_beta(Rng& rng) {
    const Vector v = priors_.params.beta_variances(data_->q());
    Matrix precision = xtx_ / state_.sigma2;
    precision.diagonal() += v.cwiseInverse();
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalFailure("beta posterior precision is not positive definite");
    const Vector mean = llt.solve(beta_rhs());
    Vector z(mean.size());
    for (Index k = 0; k < z.size(); ++k) z[k] = standard_normal(rng);
    // precision = L L', so L'^{-1} z has covariance precision^{-1}.
    state_.beta = mean + llt.matrixU().solve(z);
    refresh_residuals();
    return state_.beta;
  }

  // --- sigma2 -------------------------------------------------------------

  /// (shape, rate) of the inverse-gamma conditional.
  std::pair<double, double> sigma2_posterior() const {
    const double shape = priors_.params.sigma2_shape + 0.5 * static_cast<double>(data_->nt());
    const double rate = priors_.params.sigma2_rate + (config_.residual_half_factor ? 0.5 * ssr_ : ssr_);
    return {shape, rate};
  }

  double sample_sigma2(Rng& rng) {
    const auto [shape, rate] = sigma2_posterior();
    const double draw = inverse_gamma(rng, shape, rate);
    if (!(draw > 0.0) || !std::isfinite(draw)) throw NumericalFailure("sigma2 draw is not a positive finite number");
    state_.sigma2 = draw;
    return draw;
  }

  // --- rho ----------------------------------------------------------------

  /// Open grid (k - 1/2)/G, k = 1..G.
  std::vector<double> rho_grid() const {
    std::vector<double> grid(static_cast<std::size_t>(config_.rho_grid_size));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      grid[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(grid.size());
    }
    return grid;
  }

  /// Unnormalized log conditional density of rho on the grid.
  std::vector<double> rho_log_density() const {
    const auto grid = rho_grid();
    std::vector<double> out(grid.size());
    const Matrix u = ymat_ - xb_;
    const double uu = u.squaredNorm();
    const double uv = (u.array() * wl_.array()).sum();
    const double vv = wl_.squaredNorm();
    const bool with_det = config_.likelihood_enabled && spec_.lag == 0;
    std::optional<SpectralLogDet> logdet;
    if (with_det) logdet.emplace(spectrum());
    const double t = static_cast<double>(data_->t);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double rho = grid[k];
      double lp = log_prior_rho(rho, priors_.params);
      if (config_.likelihood_enabled) {
        const double ssr = uu - 2.0 * rho * uv + rho * rho * vv;
        lp -= ssr / (2.0 * state_.sigma2);
        if (with_det) lp += t * (*logdet)(rho);
      }
      out[k] = lp;
    }
    return out;
  }

  /// Griddy-Gibbs draw: inverse CDF over the grid, uniform inside the chosen cell.
  double sample_rho(Rng& rng) {
    const auto logp = rho_log_density();
    const double top = *std::max_element(logp.begin(), logp.end());
    if (!std::isfinite(top)) throw DegeneratePosterior("rho conditional is -inf on the whole grid");
    std::vector<double> cdf(logp.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < logp.size(); ++k) {
      acc += std::isfinite(logp[k]) ? std::exp(logp[k] - top) : 0.0;
      cdf[k] = acc;
    }
    const double u = uniform01(rng) * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t cell = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    if (cell >= cdf.size()) cell = cdf.size() - 1;
    while (!std::isfinite(logp[cell]) && cell > 0) --cell;
    const double g = static_cast<double>(cdf.size());
    const double jittered = (static_cast<double>(cell) + uniform_open01(rng)) / g;
    const double previous = state_.rho;
    state_.rho = jittered;
    try {
      rebuild_caches();
    } catch (const SingularMatrix&) {
      // Only reachable without row-standardization; fall back to the grid point.
      state_.rho = (static_cast<double>(cell) + 0.5) / g;
      try {
        rebuild_caches();
      } catch (const SingularMatrix&) {
        state_.rho = previous;
        rebuild_caches();
      }
    }
    return state_.rho;
  }

  // --- omega --------------------------------------------------------------

  OmegaProposal evaluate_omega_entry(Index i, Index j) const {
    std::vector<RowEdit> edits;
    Vector diag_after;
    double log_det_after = 0.0;
    return evaluate(i, j, edits, diag_after, log_det_after);
  }

  /// Gibbs update of omega_ij (and omega_ji when symmetric). Returns the new value.
  int sample_omega_entry(Index i, Index j, Rng& rng, SweepStats* stats = nullptr) {
    std::vector<RowEdit> edits;
    Vector diag_after;
    double log_det_after = 0.0;
    const OmegaProposal p = evaluate(i, j, edits, diag_after, log_det_after);
    if (stats) {
      ++stats->visits;
      if (p.determinant_checked) ++stats->determinant_checks;
      if (p.rejection == OmegaProposal::Rejection::kDeterminant) ++stats->determinant_rejections;
      if (p.rejection == OmegaProposal::Rejection::kIdentification) ++stats->identification_rejections;
    }
    const int drawn = uniform01(rng) < p.p_include ? 1 : 0;
    if (drawn != p.current) {
      apply(i, j, drawn, edits, diag_after);
      if (stats) ++stats->flips;
    }
    return drawn;
  }

  /// Free entries in visiting units: (i, j) pairs, or i < j pairs when symmetric.
  std::vector<std::pair<Index, Index>> free_entries() const {
    std::vector<std::pair<Index, Index>> out;
    const Index n = data_->n;
    for (Index i = 0; i < n; ++i) {
      for (Index j = spec_.symmetric_omega ? i + 1 : 0; j < n; ++j) {
        if (priors_.omega.is_free(i, j)) out.emplace_back(i, j);
      }
    }
    return out;
  }

  /// One pass over every free entry in a fresh random order.
  SweepStats sweep_omega(Rng& rng) {
    auto entries = free_entries();
    std::shuffle(entries.begin(), entries.end(), rng);
    SweepStats stats;
    for (const auto& [i, j] : entries) sample_omega_entry(i, j, rng, &stats);
    return stats;
  }

 private:
  struct RowEdit {
    Index row = 0;
    int new_sum = 0;
    Vector w_row;     // N
    Vector ol_row;    // T, row of Omega * L
    Vector resid_row; // T
  };

  /// Eigenvalues of W; symmetric omega admits a self-adjoint similarity transform.
  SpectralLogDet spectrum() const {
    if (!spec_.symmetric_omega) return SpectralLogDet(w_);
    if (!spec_.row_standardize) return SpectralLogDet::from_symmetric(w_);
    const Index n = data_->n;
    Vector d(n);
    for (Index i = 0; i < n; ++i) {
      const int s = state_.omega.row_sum(i);
      d[i] = s > 0 ? 1.0 / std::sqrt(static_cast<double>(s)) : 0.0;
    }
    return SpectralLogDet::from_symmetric(d.asDiagonal() * state_.omega.to_dense() * d.asDiagonal());
  }

  Vector beta_rhs() const {
    Vector sy(data_->nt());
    Eigen::Map<Matrix>(sy.data(), data_->n, data_->t) = ymat_ - state_.rho * wl_;
    return data_->x.transpose() * sy / state_.sigma2;
  }

  void rebuild_caches() {
    const Matrix omega_dense = state_.omega.to_dense();
    w_ = row_standardize(state_.omega, spec_.row_standardize).w;
    ol_ = omega_dense * lmat_;
    wl_ = w_ * lmat_;
    diag_w2_ = w_squared_diagonal(w_);
    if (spec_.lag == 0) {
      state_.system = exact_factorize(spatial_filter(w_, state_.rho));
    } else {
      state_.system.reset();
    }
    refresh_residuals();
  }

  void refresh_residuals() {
    Eigen::Map<const Vector> beta(state_.beta.data(), state_.beta.size());
    Vector xb = data_->x * beta;
    xb_ = Eigen::Map<Matrix>(xb.data(), data_->n, data_->t);
    resid_ = ymat_ - state_.rho * wl_ - xb_;
    ssr_ = resid_.squaredNorm();
  }

  RowEdit make_row_edit(Index i, Index j, int value) const {
    const AdjacencyMatrix& omega = state_.omega;
    const Index n = omega.n();
    RowEdit e;
    e.row = i;
    const int change = value - omega(i, j);
    e.new_sum = omega.row_sum(i) + change;
    const double scale = (spec_.row_standardize && e.new_sum > 0) ? 1.0 / e.new_sum : 1.0;
    e.w_row.resize(n);
    for (Index m = 0; m < n; ++m) e.w_row[m] = (m == j ? value : omega(i, m)) * scale;
    e.ol_row = ol_.row(i).transpose() + static_cast<double>(change) * lmat_.row(j).transpose();
    Vector wl_row;
    if (spec_.row_standardize) {
      wl_row = e.new_sum > 0 ? Vector(e.ol_row / e.new_sum) : Vector::Zero(data_->t);
    } else {
      wl_row = e.ol_row;
    }
    e.resid_row = ymat_.row(i).transpose() - state_.rho * wl_row - xb_.row(i).transpose();
    return e;
  }

  Vector diag_after_edits(const std::vector<RowEdit>& edits) const {
    Vector d = diag_w2_;
    const Index n = d.size();
    auto edited = [&](Index k) -> const RowEdit* {
      for (const auto& e : edits)
        if (e.row == k) return &e;
      return nullptr;
    };
    for (const auto& e : edits) {
      const Index r = e.row;
      for (Index k = 0; k < n; ++k) {
        if (edited(k)) continue;
        d[k] += w_(k, r) * (e.w_row[k] - w_(r, k));
      }
    }
    for (const auto& e : edits) {
      const Index k = e.row;
      double s = 0.0;
      for (Index m = 0; m < n; ++m) {
        const RowEdit* other = edited(m);
        const double w_mk = other ? other->w_row[k] : w_(m, k);
        s += e.w_row[m] * w_mk;
      }
      d[k] = s;
    }
    return d;
  }

  OmegaProposal evaluate(Index i, Index j, std::vector<RowEdit>& edits, Vector& diag_after,
                         double& log_det_after) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    const Index n = data_->n;
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw ValidationError("omega entry index out of range or on the diagonal");
    }
    OmegaProposal out;
    const AdjacencyMatrix& omega = state_.omega;
    out.current = omega(i, j);
    const int proposed = 1 - out.current;

    const OmegaPrior& prior = priors_.omega;
    double prior_diff = omega_log_prior(omega, i, j, proposed, prior) -
                        omega_log_prior(omega, i, j, out.current, prior);
    if (spec_.symmetric_omega && prior.family == OmegaPriorFamily::kSparsity &&
        prior.symmetric_mode == SymmetricPriorMode::kBothRows) {
      prior_diff += omega_log_prior(omega, j, i, proposed, prior) -
                    omega_log_prior(omega, j, i, out.current, prior);
    }
    auto finish = [&](double log_odds) {
      out.log_odds = log_odds;
      const double p_flip = std::isnan(log_odds) ? 0.0 : logistic(log_odds);
      out.p_include = out.current == 0 ? p_flip : 1.0 - p_flip;
      return out;
    };
    if (prior_diff == kNegInf) {
      out.rejection = OmegaProposal::Rejection::kPrior;
      return finish(kNegInf);
    }

    edits.clear();
    edits.push_back(make_row_edit(i, j, proposed));
    if (spec_.symmetric_omega) edits.push_back(make_row_edit(j, i, proposed));

    diag_after = diag_after_edits(edits);
    if (config_.identification_check && proportional_to_ones(diag_after)) {
      out.rejection = OmegaProposal::Rejection::kIdentification;
      return finish(kNegInf);
    }

    double lik_diff = 0.0;
    if (spec_.lag == 0) {
      const SpatialSystemState& sys = *state_.system;
      out.determinant_checked = true;
      try {
        if (edits.size() == 1) {
          log_det_after = sys.log_det_after_row_update(i, row_delta(edits[0]));
        } else {
          log_det_after = sys.log_det_after_two_row_update(i, row_delta(edits[0]), j, row_delta(edits[1]));
        }
      } catch (const NonPositiveDeterminant&) {
        out.rejection = OmegaProposal::Rejection::kDeterminant;
        return finish(kNegInf);
      }
      lik_diff += static_cast<double>(data_->t) * (log_det_after - sys.log_det());
    }
    double ssr_diff = 0.0;
    for (const auto& e : edits) ssr_diff += e.resid_row.squaredNorm() - resid_.row(e.row).squaredNorm();
    lik_diff -= ssr_diff / (2.0 * state_.sigma2);
    return finish(config_.likelihood_enabled ? prior_diff + lik_diff : prior_diff);
  }

  /// Difference between the proposed and current row of A = I - rho W.
  Vector row_delta(const RowEdit& e) const {
    return -state_.rho * (e.w_row - w_.row(e.row).transpose());
  }

  void apply(Index i, Index j, int value, const std::vector<RowEdit>& edits, const Vector& diag_after) {
    if (spec_.lag == 0) {
      SpatialSystemState& sys = *state_.system;
      if (edits.size() == 1) {
        sys.apply_row_update(i, row_delta(edits[0]), config_.refresh_interval);
      } else {
        sys.apply_two_row_update(i, row_delta(edits[0]), j, row_delta(edits[1]), config_.refresh_interval);
      }
    }
    state_.omega.set(i, j, value);
    for (const auto& e : edits) {
      ssr_ += e.resid_row.squaredNorm() - resid_.row(e.row).squaredNorm();
      w_.row(e.row) = e.w_row.transpose();
      ol_.row(e.row) = e.ol_row.transpose();
      resid_.row(e.row) = e.resid_row.transpose();
      const double s = static_cast<double>(e.new_sum);
      if (spec_.row_standardize) {
        wl_.row(e.row) = e.new_sum > 0 ? Eigen::RowVectorXd(e.ol_row.transpose() / s)
                                       : Eigen::RowVectorXd::Zero(data_->t);
      } else {
        wl_.row(e.row) = e.ol_row.transpose();
      }
    }
    diag_w2_ = diag_after;
  }

  const PanelData* data_;
  ModelSpec spec_;
  PriorSpec priors_;
  SamplerConfig config_;
  ParameterState state_;

  Matrix ymat_;   // N x T
  Matrix lmat_;   // N x T, spatially lagged quantity
  Matrix xtx_;
  Matrix w_;
  Matrix ol_;     // Omega * L
  Matrix wl_;     // W * L
  Matrix xb_;     // X beta as N x T
  Matrix resid_;  // N x T
  double ssr_ = 0.0;
  Vector diag_w2_;
};

/// Draw of omega from its prior (free entries only; masks honoured).
inline AdjacencyMatrix draw_omega_from_prior(const OmegaPrior& prior, bool symmetric, Rng& rng) {
  const Index n = prior.n();
  AdjacencyMatrix omega(n, symmetric);
  apply_forced_links(prior, omega);
  for (Index i = 0; i < n; ++i) {
    const double row_p = prior.family == OmegaPriorFamily::kSparsity ? beta_draw(rng, prior.a, prior.b) : 0.0;
    for (Index j = symmetric ? i + 1 : 0; j < n; ++j) {
      if (!prior.is_free(i, j)) continue;
      const double p = prior.family == OmegaPriorFamily::kSparsity ? row_p : prior.inclusion(i, j);
      omega.set(i, j, uniform01(rng) < p ? 1 : 0);
    }
  }
  return omega;
}

/// Initial parameters: beta, sigma2, rho from their priors; omega empty plus forced links.
inline ParameterState initial_state(const PanelData& data, const ModelSpec& spec, const PriorSpec& priors,
                                    const SamplerConfig& config, Rng& rng) {
  ParameterState s;
  const Vector v = priors.params.beta_variances(data.q());
  s.beta.resize(data.q());
  for (Index k = 0; k < s.beta.size(); ++k) s.beta[k] = std::sqrt(v[k]) * standard_normal(rng);
  s.sigma2 = inverse_gamma(rng, priors.params.sigma2_shape, priors.params.sigma2_rate);
  if (!std::isfinite(s.sigma2)) s.sigma2 = 1e8;
  s.sigma2 = std::clamp(s.sigma2, 1e-8, 1e8);
  s.rho = std::clamp(beta_draw(rng, priors.params.rho_shape1, priors.params.rho_shape2), 1e-6, 1.0 - 1e-6);
  s.omega = AdjacencyMatrix(data.n, spec.symmetric_omega);
  apply_forced_links(priors.omega, s.omega);
  if (config.init_omega_from_prior) {
    AdjacencyMatrix drawn = draw_omega_from_prior(priors.omega, spec.symmetric_omega, rng);
    const Matrix w = row_standardize(drawn, spec.row_standardize).w;
    bool usable = true;
    if (spec.lag == 0) {
      try {
        exact_factorize(spatial_filter(w, s.rho));
      } catch (const SingularMatrix&) {
        usable = false;
      }
    }
    if (usable) s.omega = std::move(drawn);
  }
  return s;
}

/**
 * @brief Runs burn-in plus retained iterations; each iteration updates
 * beta, sigma2, rho and then sweeps omega once.
 */
inline ChainOutput run_chain(const PanelData& data, const ModelSpec& spec, const PriorSpec& priors,
                             const SamplerConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ParameterState init = initial_state(data, spec, priors, config, rng);
  GibbsSampler sampler(data, spec, priors, config, std::move(init));

  ChainOutput out;
  out.beta_draws.resize(config.n_draws, data.q());
  out.sigma2_draws.reserve(static_cast<std::size_t>(config.n_draws));
  out.rho_draws.reserve(static_cast<std::size_t>(config.n_draws));
  out.inclusion_counts = Eigen::MatrixXi::Zero(data.n, data.n);

  const long long total = static_cast<long long>(config.n_burnin) +
                          static_cast<long long>(config.n_draws) * config.thin;
  for (long long iter = 0; iter < total; ++iter) {
    sampler.sample_beta(rng);
    sampler.sample_sigma2(rng);
    sampler.sample_rho(rng);
    const SweepStats sweep = sampler.sweep_omega(rng);
    out.rejections.proposals += sweep.visits;
    out.rejections.flips += sweep.flips;
    out.rejections.determinant += sweep.determinant_rejections;
    out.rejections.identification += sweep.identification_rejections;
    if (sweep.determinant_checks > 0 &&
        static_cast<double>(sweep.determinant_rejections) >
            config.max_rejection_fraction * static_cast<double>(sweep.determinant_checks)) {
      throw NumericalFailure("more than the allowed share of omega proposals failed the determinant check");
    }
    const long long kept = iter - config.n_burnin;
    if (kept < 0 || (kept + 1) % config.thin != 0) continue;
    const ParameterState& s = sampler.state();
    out.beta_draws.row(out.draw_count) = s.beta.transpose();
    out.sigma2_draws.push_back(s.sigma2);
    out.rho_draws.push_back(s.rho);
    for (Index i = 0; i < data.n; ++i)
      for (Index j = 0; j < data.n; ++j) out.inclusion_counts(i, j) += s.omega(i, j);
    if (config.keep_omega_draws) out.omega_draws.push_back(s.omega);
    ++out.draw_count;
  }
  out.omega_last = sampler.state().omega;
  return out;
}

}  // namespace bayesw
