#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bayesw/errors.hpp"
#include "bayesw/linalg.hpp"
#include "bayesw/model.hpp"
#include "bayesw/priors.hpp"
#include "bayesw/sampler.hpp"

namespace bayesw {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline Mask off_diagonal_mask(Index n) {
  Mask m = Mask::Constant(n, n, true);
  for (Index i = 0; i < n; ++i) m(i, i) = false;
  return m;
}

/// Entries the sampler actually estimates under `prior`.
inline Mask free_mask(const OmegaPrior& prior) {
  Mask m(prior.n(), prior.n());
  for (Index i = 0; i < prior.n(); ++i)
    for (Index j = 0; j < prior.n(); ++j) m(i, j) = prior.is_free(i, j);
  return m;
}

/// Mean over draws of the share of free entries equal to the truth.
inline double accuracy(std::span<const AdjacencyMatrix> draws, const AdjacencyMatrix& truth,
                       const Mask& free) {
  if (free.rows() != truth.n() || free.cols() != truth.n()) throw DimensionMismatch("mask does not match truth");
  const Index count = free.count();
  if (draws.empty() || count == 0) return 1.0;
  double total = 0.0;
  for (const auto& d : draws) {
    if (d.n() != truth.n()) throw DimensionMismatch("draw dimension differs from truth");
    Index hits = 0;
    for (Index i = 0; i < truth.n(); ++i)
      for (Index j = 0; j < truth.n(); ++j)
        if (free(i, j) && d(i, j) == truth(i, j)) ++hits;
    total += static_cast<double>(hits) / static_cast<double>(count);
  }
  return total / static_cast<double>(draws.size());
}

/// Same quantity from posterior inclusion frequencies (accuracy is linear in the draws).
inline double accuracy_from_inclusion(const Matrix& inclusion, const AdjacencyMatrix& truth, const Mask& free) {
  if (inclusion.rows() != truth.n() || inclusion.cols() != truth.n() || free.rows() != truth.n() ||
      free.cols() != truth.n()) {
    throw DimensionMismatch("inclusion, mask and truth must share dimensions");
  }
  const Index count = free.count();
  if (count == 0) return 1.0;
  double total = 0.0;
  for (Index i = 0; i < truth.n(); ++i)
    for (Index j = 0; j < truth.n(); ++j)
      if (free(i, j)) total += truth(i, j) ? inclusion(i, j) : 1.0 - inclusion(i, j);
  return total / static_cast<double>(count);
}

inline double rmse(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) throw DimensionMismatch("rmse needs equal lengths");
  if (estimate.size() == 0) return 0.0;
  return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(estimate.size()));
}

inline double rmse(double estimate, double truth) { return std::abs(estimate - truth); }

/// Average of per-replication RMSEs.
inline double mean_rmse(std::span<const double> per_replication) {
  if (per_replication.empty()) return 0.0;
  double s = 0.0;
  for (double v : per_replication) s += v;
  return s / static_cast<double>(per_replication.size());
}

inline Matrix inclusion_matrix(const ChainOutput& chain) {
  if (chain.draw_count == 0) throw EmptyChain("inclusion matrix of an empty chain");
  return chain.inclusion_counts.cast<double>() / static_cast<double>(chain.draw_count);
}

/// Average row sum of the inclusion matrix.
inline double avg_neighbours(const Matrix& inclusion) {
  if (inclusion.rows() == 0) return 0.0;
  return inclusion.sum() / static_cast<double>(inclusion.rows());
}

inline Vector column_means(const Matrix& draws) {
  if (draws.rows() == 0) return Vector::Zero(draws.cols());
  return draws.colwise().mean().transpose();
}

inline Vector column_sds(const Matrix& draws) {
  Vector out = Vector::Zero(draws.cols());
  if (draws.rows() < 2) return out;
  const Vector m = column_means(draws);
  for (Index c = 0; c < draws.cols(); ++c) {
    out[c] = std::sqrt((draws.col(c).array() - m[c]).square().sum() / static_cast<double>(draws.rows() - 1));
  }
  return out;
}

inline double mean_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sd_of(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

/// Variance of the sample mean by non-overlapping batch means with floor(sqrt(n)) batches.
inline double batch_means_variance(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (batches < 2) return 0.0;
  const std::size_t size = n / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) means[b] = mean_of(x.subspan(b * size, size));
  const double grand = mean_of(means);
  double s = 0.0;
  for (double m : means) s += (m - grand) * (m - grand);
  return s / static_cast<double>(batches - 1) / static_cast<double>(batches);
}

/// Geweke convergence z-score comparing the early and late segments of a chain.
inline double geweke_z(std::span<const double> draws, double first_frac = 0.1, double last_frac = 0.5) {
  if (draws.size() < 20) throw TooFewDraws("Geweke diagnostic needs at least 20 draws");
  if (!(first_frac > 0.0 && last_frac > 0.0 && first_frac + last_frac <= 1.0)) {
    throw ValidationError("Geweke window fractions must be positive and sum to at most 1");
  }
  const std::size_t n = draws.size();
  const std::size_t n_first = static_cast<std::size_t>(std::floor(first_frac * static_cast<double>(n)));
  const std::size_t n_last = static_cast<std::size_t>(std::floor(last_frac * static_cast<double>(n)));
  const auto first = draws.first(n_first);
  const auto last = draws.last(n_last);
  const double diff = mean_of(first) - mean_of(last);
  const double var = batch_means_variance(first) + batch_means_variance(last);
  if (diff == 0.0) return 0.0;
  if (!(var > 0.0)) return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  return diff / std::sqrt(var);
}

struct ReplicationRecord {
  bool ok = true;
  double rmse_beta = 0.0;
  double rmse_rho = 0.0;
  double accuracy = 0.0;
  std::string error;
};

struct McResult {
  double rmse_beta = 0.0;
  double rmse_rho = 0.0;
  double accuracy_omega = 0.0;
  Index succeeded = 0;
  Index failed = 0;
  std::vector<ReplicationRecord> replications;
};

/// Averages over successful replications, in replication order.
inline McResult aggregate(std::vector<ReplicationRecord> records) {
  McResult out;
  std::vector<double> rb, rr, acc;
  for (const auto& r : records) {
    if (!r.ok) {
      ++out.failed;
      continue;
    }
    ++out.succeeded;
    rb.push_back(r.rmse_beta);
    rr.push_back(r.rmse_rho);
    acc.push_back(r.accuracy);
  }
  out.rmse_beta = mean_rmse(rb);
  out.rmse_rho = mean_rmse(rr);
  out.accuracy_omega = mean_of(acc);
  out.replications = std::move(records);
  return out;
}

}  // namespace bayesw
