#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "bayesw/errors.hpp"
#include "bayesw/linalg.hpp"
#include "bayesw/model.hpp"

namespace bayesw {

enum class OmegaPriorFamily { kFixed, kSparsity };

/// How the per-row beta-binomial prior is charged when a symmetric pair flips.
enum class SymmetricPriorMode { kRowOnly, kBothRows };

/**
 * @brief Prior on the adjacency indicators.
 *
 * `inclusion` holds the Bernoulli inclusion probabilities of the fixed
 * family. In both families an entry of exactly 0 or 1 is a hard mask:
 * the indicator is pinned to that value and never sampled.
 */
struct OmegaPrior {
  OmegaPriorFamily family = OmegaPriorFamily::kFixed;
  Matrix inclusion;
  double a = 1.0;
  double b = 1.0;
  SymmetricPriorMode symmetric_mode = SymmetricPriorMode::kRowOnly;

  Index n() const noexcept { return inclusion.rows(); }

  bool is_free(Index i, Index j) const {
    if (i == j) return false;
    const double p = inclusion(i, j);
    return p > 0.0 && p < 1.0;
  }
  bool is_forced_in(Index i, Index j) const { return i != j && inclusion(i, j) >= 1.0; }

  void validate() const {
    if (inclusion.rows() != inclusion.cols()) throw ValidationError("prior inclusion matrix must be square");
    for (Index i = 0; i < n(); ++i) {
      if (inclusion(i, i) != 0.0) throw ValidationError("prior inclusion diagonal must be 0");
      for (Index j = 0; j < n(); ++j) {
        const double p = inclusion(i, j);
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("prior inclusion probabilities must lie in [0,1]");
      }
    }
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("beta-binomial hyperparameters must be positive");
  }
};

inline Matrix uniform_inclusion(Index n, double p) {
  Matrix m = Matrix::Constant(n, n, p);
  m.diagonal().setZero();
  return m;
}

inline OmegaPrior fixed_omega_prior(Index n, double p = 0.5) {
  OmegaPrior prior;
  prior.family = OmegaPriorFamily::kFixed;
  prior.inclusion = uniform_inclusion(n, p);
  prior.validate();
  return prior;
}

inline OmegaPrior sparsity_omega_prior(Index n, double a, double b) {
  OmegaPrior prior;
  prior.family = OmegaPriorFamily::kSparsity;
  prior.inclusion = uniform_inclusion(n, 0.5);
  prior.a = a;
  prior.b = b;
  prior.validate();
  return prior;
}

/// Sparsity prior with a = 1 and b chosen so the prior mean neighbour count is m.
inline OmegaPrior anchor_sparsity(double expected_neighbours, Index n) {
  const double slots = static_cast<double>(n - 1);
  if (!(expected_neighbours > 0.0) || !(expected_neighbours < slots)) {
    throw InvalidAnchor("expected neighbour count must lie in (0, n-1)");
  }
  return sparsity_omega_prior(n, 1.0, (slots - expected_neighbours) / expected_neighbours);
}

/// Hard masks pinned to one (and symmetric-only) from the inclusion matrix.
inline void apply_forced_links(const OmegaPrior& prior, AdjacencyMatrix& omega) {
  for (Index i = 0; i < prior.n(); ++i)
    for (Index j = 0; j < prior.n(); ++j) {
      if (prior.is_forced_in(i, j)) omega.set(i, j, 1);
      else if (i != j && prior.inclusion(i, j) <= 0.0) omega.set(i, j, 0);
    }
}

/**
 * Log prior mass of setting omega_ij = proposed, given the other entries of
 * row i (`others_in_row` = row sum excluding column j). Only odds between the
 * two proposals are meaningful for the sparsity family.
 */
inline double omega_log_prior(int others_in_row, Index i, Index j, int proposed,
                              const OmegaPrior& prior) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double p = prior.inclusion(i, j);
  if (p >= 1.0) return proposed == 1 ? 0.0 : kNegInf;
  if (p <= 0.0) return proposed == 0 ? 0.0 : kNegInf;
  if (prior.family == OmegaPriorFamily::kFixed) {
    return proposed == 1 ? std::log(p) : std::log1p(-p);
  }
  const double s = static_cast<double>(others_in_row + proposed);
  const double slots = static_cast<double>(prior.n() - 1);
  return std::lgamma(prior.a + s) + std::lgamma(prior.b + slots - s);
}

/// Convenience overload reading the row directly from omega.
inline double omega_log_prior(const AdjacencyMatrix& omega, Index i, Index j, int proposed,
                              const OmegaPrior& prior) {
  return omega_log_prior(omega.row_sum(i) - omega(i, j), i, j, proposed, prior);
}

struct ParamPriors {
  /// Prior variance on each beta coefficient; `beta_variance_diag` overrides when sized.
  double beta_variance = 100.0;
  Vector beta_variance_diag;
  double sigma2_shape = 0.01;
  double sigma2_rate = 0.01;
  double rho_shape1 = 1.01;
  double rho_shape2 = 1.01;

  Vector beta_variances(Index q) const {
    if (beta_variance_diag.size() > 0) {
      if (beta_variance_diag.size() != q) throw DimensionMismatch("beta prior variance has wrong length");
      return beta_variance_diag;
    }
    return Vector::Constant(q, beta_variance);
  }

  void validate() const {
    if (!(beta_variance > 0.0) || (beta_variance_diag.size() > 0 && !(beta_variance_diag.array() > 0.0).all())) {
      throw ValidationError("beta prior variance must be positive");
    }
    if (!(sigma2_shape > 0.0) || !(sigma2_rate > 0.0)) throw ValidationError("sigma2 prior parameters must be positive");
    if (!(rho_shape1 > 0.0) || !(rho_shape2 > 0.0)) throw ValidationError("rho prior shapes must be positive");
  }
};

inline double log_prior_rho(double rho, const ParamPriors& priors) {
  if (!(rho > 0.0 && rho < 1.0)) throw OutOfSupport("rho must lie in (0,1)");
  const double a = priors.rho_shape1;
  const double b = priors.rho_shape2;
  const double log_beta_fn = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return (a - 1.0) * std::log(rho) + (b - 1.0) * std::log1p(-rho) - log_beta_fn;
}

inline double log_prior_beta(const Vector& beta, const ParamPriors& priors) {
  const Vector v = priors.beta_variances(beta.size());
  double out = 0.0;
  for (Index k = 0; k < beta.size(); ++k) {
    out -= 0.5 * (std::log(2.0 * std::numbers::pi * v[k]) + beta[k] * beta[k] / v[k]);
  }
  return out;
}

inline double log_prior_sigma2(double sigma2, const ParamPriors& priors) {
  if (!(sigma2 > 0.0)) throw OutOfSupport("sigma2 must be positive");
  const double a = priors.sigma2_shape;
  const double b = priors.sigma2_rate;
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(sigma2) - b / sigma2;
}

}  // namespace bayesw
