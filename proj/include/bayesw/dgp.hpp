#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "bayesw/errors.hpp"
#include "bayesw/linalg.hpp"
#include "bayesw/model.hpp"
#include "bayesw/random.hpp"

namespace bayesw {

enum class Symmetrization { kUnion, kIntersection };

struct DgpConfig {
  Index n = 20;
  Index t = 10;
  double rho_true = 0.5;
  Vector beta_true = (Vector(2) << -1.0, 1.0).finished();
  double sigma2_true = 0.5;
  /// 0 selects max(1, round(n / 20)).
  int k_neighbours = 0;
  double perturb_fraction = 0.0;
  std::uint64_t seed = 1;
  Symmetrization symmetrization = Symmetrization::kUnion;
  /// Draw the unit and period effects from N(0,1); zero otherwise.
  bool draw_fixed_effects = true;

  int neighbours() const {
    if (k_neighbours > 0) return k_neighbours;
    return std::max(1, static_cast<int>(std::lround(static_cast<double>(n) / 20.0)));
  }

  void validate() const {
    if (n < 2 || t < 1) throw ValidationError("dgp.n must be >= 2 and dgp.t >= 1");
    if (!(rho_true > 0.0 && rho_true < 1.0)) throw ValidationError("dgp.rho must lie in (0,1)");
    if (!(sigma2_true >= 0.0)) throw ValidationError("dgp.sigma2 must be >= 0");
    if (neighbours() >= n) throw ValidationError("dgp.k must be smaller than dgp.n");
    if (!(perturb_fraction >= 0.0 && perturb_fraction < 1.0)) {
      throw ValidationError("dgp.perturb_fraction must lie in [0,1)");
    }
  }
};

/// Directed k-nearest-neighbour graph (Euclidean, ties to the lower index), then symmetrized.
inline AdjacencyMatrix knn_adjacency(const Matrix& coords, int k,
                                     Symmetrization mode = Symmetrization::kUnion) {
  const Index n = coords.rows();
  if (k < 1 || k >= n) throw ValidationError("k must lie in [1, n-1]");
  Matrix directed = Matrix::Zero(n, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) dist[j] = (coords.row(i) - coords.row(j)).squaredNorm();
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });
    int taken = 0;
    for (Index j : order) {
      if (j == i) continue;
      directed(i, j) = 1.0;
      if (++taken == k) break;
    }
  }
  Matrix sym(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      sym(i, j) = mode == Symmetrization::kUnion ? std::max(directed(i, j), directed(j, i))
                                                 : std::min(directed(i, j), directed(j, i));
    }
  return AdjacencyMatrix::from_dense(sym, /*symmetric=*/true);
}

struct KnnLayout {
  Matrix coords;  // n x 2
  AdjacencyMatrix omega;
};

/// Standard-normal planar locations and their symmetrized k-NN adjacency.
inline KnnLayout generate_knn_adjacency(const DgpConfig& config, Rng& rng) {
  config.validate();
  KnnLayout out;
  out.coords.resize(config.n, 2);
  for (Index i = 0; i < config.n; ++i) {
    out.coords(i, 0) = standard_normal(rng);
    out.coords(i, 1) = standard_normal(rng);
  }
  out.omega = knn_adjacency(out.coords, config.neighbours(), config.symmetrization);
  return out;
}

struct SimulatedPanel {
  PanelData data;
  Matrix covariates;  // nt x 2, stacked like y
  Vector mu;          // n
  Vector tau;         // t
  Vector eps;         // nt
};

/**
 * y_t = (I - rho W)^{-1} (mu + tau_t + Z_t beta + eps_t) with W the
 * row-standardized truth. Draw order: Z, mu, tau, eps.
 */
inline SimulatedPanel generate_panel(const DgpConfig& config, const AdjacencyMatrix& omega_true, Rng& rng,
                                     const ModelSpec& spec = {}) {
  config.validate();
  const Index n = config.n;
  const Index t = config.t;
  const Index k = config.beta_true.size();
  if (omega_true.n() != n) throw DimensionMismatch("true adjacency does not match dgp.n");
  SimulatedPanel out;
  out.covariates.resize(n * t, k);
  for (Index c = 0; c < k; ++c)
    for (Index r = 0; r < n * t; ++r) out.covariates(r, c) = standard_normal(rng);
  out.mu = Vector::Zero(n);
  out.tau = Vector::Zero(t);
  if (config.draw_fixed_effects) {
    for (Index i = 0; i < n; ++i) out.mu[i] = standard_normal(rng);
    for (Index p = 0; p < t; ++p) out.tau[p] = standard_normal(rng);
  }
  out.eps.resize(n * t);
  const double sd = std::sqrt(config.sigma2_true);
  for (Index r = 0; r < n * t; ++r) out.eps[r] = sd * standard_normal(rng);

  const Matrix w = row_standardize(omega_true, true).w;
  Eigen::PartialPivLU<Matrix> lu(spatial_filter(w, config.rho_true));
  Vector y(n * t);
  const Vector zb = out.covariates * config.beta_true;
  for (Index p = 0; p < t; ++p) {
    Vector rhs = out.mu + zb.segment(p * n, n) + out.eps.segment(p * n, n);
    rhs.array() += out.tau[p];
    y.segment(p * n, n) = lu.solve(rhs);
  }
  std::vector<std::string> names;
  for (Index c = 0; c < k; ++c) names.push_back("z" + std::to_string(c + 1));
  ModelSpec design_spec = spec;
  design_spec.lag = 0;
  out.data = build_design(std::move(y), std::nullopt, out.covariates, n, t, design_spec, names);
  return out;
}

/// Count of element-level (N^2) disagreements turned into an overlap share.
inline double overlap(const AdjacencyMatrix& a, const AdjacencyMatrix& b) {
  if (a.n() != b.n()) throw DimensionMismatch("overlap needs equal dimensions");
  Index agree = 0;
  for (Index i = 0; i < a.n(); ++i)
    for (Index j = 0; j < a.n(); ++j) agree += a(i, j) == b(i, j);
  return static_cast<double>(agree) / static_cast<double>(a.n() * a.n());
}

/// Overlap over free off-diagonal units: unordered pairs when both are symmetric.
inline double pair_overlap(const AdjacencyMatrix& a, const AdjacencyMatrix& b) {
  if (a.n() != b.n()) throw DimensionMismatch("overlap needs equal dimensions");
  const bool sym = a.symmetric() && b.symmetric();
  Index agree = 0;
  Index total = 0;
  for (Index i = 0; i < a.n(); ++i)
    for (Index j = sym ? i + 1 : 0; j < a.n(); ++j) {
      if (i == j) continue;
      ++total;
      agree += a(i, j) == b(i, j);
    }
  return total == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(total);
}

/**
 * Flips exactly `units` randomly chosen free units (unordered pairs when
 * omega is symmetric, single entries otherwise). Half of the flips remove
 * links and half add links where possible, so the link count is preserved.
 */
inline AdjacencyMatrix perturb_adjacency_count(const AdjacencyMatrix& omega, Index units, Rng& rng) {
  const bool sym = omega.symmetric();
  std::vector<std::pair<Index, Index>> ones;
  std::vector<std::pair<Index, Index>> zeros;
  for (Index i = 0; i < omega.n(); ++i)
    for (Index j = sym ? i + 1 : 0; j < omega.n(); ++j) {
      if (i == j) continue;
      (omega(i, j) ? ones : zeros).emplace_back(i, j);
    }
  const Index total = static_cast<Index>(ones.size() + zeros.size());
  if (units < 0 || units > total) throw ValidationError("cannot flip more units than exist");
  Index off = std::min<Index>(units / 2, static_cast<Index>(ones.size()));
  Index on = units - off;
  if (on > static_cast<Index>(zeros.size())) {
    on = static_cast<Index>(zeros.size());
    off = units - on;
  }
  std::shuffle(ones.begin(), ones.end(), rng);
  std::shuffle(zeros.begin(), zeros.end(), rng);
  AdjacencyMatrix out = omega;
  for (Index k = 0; k < off; ++k) out.set(ones[k].first, ones[k].second, 0);
  for (Index k = 0; k < on; ++k) out.set(zeros[k].first, zeros[k].second, 1);
  return out;
}

/// Flips round(fraction * N^2) elements, so overlap() with the input equals 1 - fraction
/// whenever that count is attainable (even for symmetric matrices).
inline AdjacencyMatrix perturb_adjacency(const AdjacencyMatrix& omega, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("perturbation fraction must lie in [0,1)");
  if (fraction == 0.0) return omega;
  const double elements = fraction * static_cast<double>(omega.n() * omega.n());
  const Index units = static_cast<Index>(std::llround(omega.symmetric() ? elements / 2.0 : elements));
  if (units < 1) throw ValidationError("perturbation fraction flips no element at this dimension");
  return perturb_adjacency_count(omega, units, rng);
}

}  // namespace bayesw
