#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bayesw/errors.hpp"

namespace bayesw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr int kDefaultRefreshInterval = 64;
/// Determinants with absolute value below this are treated as singular.
inline constexpr double kMinAbsDeterminant = 1e-12;

/// log|det| together with the sign of det. sign == 0 means exactly singular.
struct LogDeterminant {
  double log_abs = 0.0;
  int sign = 1;
};

inline LogDeterminant lu_log_determinant(const Eigen::PartialPivLU<Matrix>& lu) {
  const Matrix& packed = lu.matrixLU();
  LogDeterminant out;
  out.sign = static_cast<int>(lu.permutationP().determinant());
  for (Index k = 0; k < packed.rows(); ++k) {
    const double u = packed(k, k);
    if (u == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    if (u < 0.0) out.sign = -out.sign;
    out.log_abs += std::log(std::abs(u));
  }
  return out;
}

class SpatialSystemState;
SpatialSystemState exact_factorize(const Matrix& a);

/**
 * @brief Cached inverse and log-determinant of A = I - rho W.
 *
 * Row edits of A are absorbed with the matrix determinant lemma and the
 * Sherman-Morrison formula. Every `refresh_interval` applied edits the cache
 * is rebuilt from an exact LU factorization to bound round-off drift.
 * A state with det(A) <= 0 cannot be constructed.
 */
class SpatialSystemState {
 public:
  SpatialSystemState() = default;

  Index n() const noexcept { return a_.rows(); }
  const Matrix& a() const noexcept { return a_; }
  const Matrix& a_inv() const noexcept { return a_inv_; }
  double log_det() const noexcept { return log_det_; }
  int update_count() const noexcept { return update_count_; }

  /// 1 + delta' A^{-1} e_i : ratio det(A + e_i delta') / det(A).
  double row_update_factor(Index i, const Vector& delta) const {
    check_row(i, delta);
    return 1.0 + delta.dot(a_inv_.col(i));
  }

  /// log det of A with row i replaced by (row i + delta'). Pure query.
  double log_det_after_row_update(Index i, const Vector& delta) const {
    return checked_log_det(row_update_factor(i, delta));
  }

  /// log det after editing row i then row j (i != j), evaluated iteratively
  /// without materializing the intermediate inverse. Pure query.
  double log_det_after_two_row_update(Index i, const Vector& delta_i, Index j,
                                      const Vector& delta_j) const {
    const auto [f1, f2] = two_row_factors(i, delta_i, j, delta_j);
    return checked_log_det(f1 * f2);
  }

  void apply_row_update(Index i, const Vector& delta,
                        int refresh_interval = kDefaultRefreshInterval) {
    const double factor = row_update_factor(i, delta);
    const double next_log_det = checked_log_det(factor);
    sherman_morrison(i, delta, factor);
    a_.row(i) += delta.transpose();
    log_det_ = next_log_det;
    bump(refresh_interval);
  }

  void apply_two_row_update(Index i, const Vector& delta_i, Index j, const Vector& delta_j,
                            int refresh_interval = kDefaultRefreshInterval) {
    const auto [f1, f2] = two_row_factors(i, delta_i, j, delta_j);
    const double next_log_det = checked_log_det(f1 * f2);
    sherman_morrison(i, delta_i, f1);
    a_.row(i) += delta_i.transpose();
    sherman_morrison(j, delta_j, 1.0 + delta_j.dot(a_inv_.col(j)));
    a_.row(j) += delta_j.transpose();
    log_det_ = next_log_det;
    bump(refresh_interval);
  }

  /// Rebuild inverse and log-determinant from the stored A.
  void refactorize() { *this = exact_factorize(a_); }

 private:
  friend SpatialSystemState exact_factorize(const Matrix& a);

  void check_row(Index i, const Vector& delta) const {
    if (i < 0 || i >= n() || delta.size() != n()) {
      throw DimensionMismatch("row update index or delta length does not match system size");
    }
  }

  double checked_log_det(double factor) const {
    if (!(factor > 0.0)) {
      throw NonPositiveDeterminant("rank-one edit would give a non-positive determinant");
    }
    const double next = log_det_ + std::log(factor);
    if (next < std::log(kMinAbsDeterminant)) {
      throw NonPositiveDeterminant("rank-one edit would give a numerically singular matrix");
    }
    return next;
  }

  std::pair<double, double> two_row_factors(Index i, const Vector& delta_i, Index j,
                                            const Vector& delta_j) const {
    check_row(i, delta_i);
    check_row(j, delta_j);
    if (i == j) throw DimensionMismatch("two-row update needs distinct rows");
    const double f1 = 1.0 + delta_i.dot(a_inv_.col(i));
    if (f1 == 0.0) {
      throw NonPositiveDeterminant("intermediate rank-one edit is singular");
    }
    // Column j of the inverse after the first edit.
    const double c = delta_i.dot(a_inv_.col(j)) / f1;
    const double f2 = 1.0 + delta_j.dot(a_inv_.col(j)) - c * delta_j.dot(a_inv_.col(i));
    return {f1, f2};
  }

  void sherman_morrison(Index i, const Vector& delta, double factor) {
    const Vector u = a_inv_.col(i);
    const Eigen::RowVectorXd v = delta.transpose() * a_inv_;
    a_inv_.noalias() -= (u / factor) * v;
  }

  void bump(int refresh_interval) {
    ++update_count_;
    if (refresh_interval > 0 && update_count_ >= refresh_interval) refactorize();
  }

  Matrix a_;
  Matrix a_inv_;
  double log_det_ = 0.0;
  int update_count_ = 0;
};

/// Exact LU-based state. Throws SingularMatrix unless det(a) >= 1e-12.
inline SpatialSystemState exact_factorize(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("exact_factorize needs a square matrix");
  SpatialSystemState state;
  const Index n = a.rows();
  if (n == 0) {
    state.a_ = a;
    state.a_inv_ = a;
    return state;
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  const LogDeterminant ld = lu_log_determinant(lu);
  if (ld.sign <= 0 || ld.log_abs < std::log(kMinAbsDeterminant)) {
    throw SingularMatrix("matrix has non-positive or vanishing determinant");
  }
  state.a_ = a;
  state.a_inv_ = lu.inverse();
  state.log_det_ = ld.log_abs;
  state.update_count_ = 0;
  return state;
}

/// log det(A_z) for A_z = A + e_i delta'. The state is not modified.
inline double rank_one_determinant(const SpatialSystemState& state, Index i, const Vector& delta) {
  return state.log_det_after_row_update(i, delta);
}

inline SpatialSystemState rank_one_apply(SpatialSystemState state, Index i, const Vector& delta,
                                         int refresh_interval = kDefaultRefreshInterval) {
  state.apply_row_update(i, delta, refresh_interval);
  return state;
}

/// I - rho W.
inline Matrix spatial_filter(const Matrix& w, double rho) {
  return Matrix::Identity(w.rows(), w.cols()) - rho * w;
}

/**
 * Evaluates log det(I - rho W) for many rho from one eigen-decomposition:
 * det(I - rho W) = prod_k (1 - rho lambda_k). Entries are -inf where the
 * determinant is non-positive or below the singularity floor.
 */
class SpectralLogDet {
 public:
  explicit SpectralLogDet(const Matrix& w) {
    if (w.rows() == 0) return;
    Eigen::EigenSolver<Matrix> solver(w, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
      throw NumericalFailure("eigenvalue decomposition of W did not converge");
    }
    const Eigen::VectorXcd ev = solver.eigenvalues();
    for (Index k = 0; k < ev.size(); ++k) {
      if (ev[k].imag() == 0.0) {
        real_.push_back(ev[k].real());
      } else if (ev[k].imag() > 0.0) {
        pairs_.push_back(ev[k]);
      }
    }
  }

  /// W is similar to the symmetric matrix `s` (e.g. D^{-1/2} Omega D^{-1/2}).
  static SpectralLogDet from_symmetric(const Matrix& s) {
    SpectralLogDet out;
    if (s.rows() == 0) return out;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw NumericalFailure("eigenvalue decomposition of W did not converge");
    }
    const Vector ev = solver.eigenvalues();
    out.real_.assign(ev.data(), ev.data() + ev.size());
    return out;
  }

  double operator()(double rho) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    constexpr int kChunk = 16;
    double log_abs = 0.0;
    double prod = 1.0;
    int in_chunk = 0;
    bool negative = false;
    auto push = [&](double f) {
      prod *= f;
      if (++in_chunk == kChunk) {
        log_abs += std::log(prod);
        prod = 1.0;
        in_chunk = 0;
      }
    };
    for (double lambda : real_) {
      const double f = 1.0 - rho * lambda;
      if (f == 0.0) return kNegInf;
      if (f < 0.0) negative = !negative;
      push(std::abs(f));
    }
    // A conjugate pair contributes |1 - rho lambda|^2 > 0.
    for (const auto& lambda : pairs_) {
      const double re = 1.0 - rho * lambda.real();
      const double im = rho * lambda.imag();
      push(re * re + im * im);
    }
    log_abs += std::log(prod);
    if (negative || log_abs < std::log(kMinAbsDeterminant)) return kNegInf;
    return log_abs;
  }

 private:
  SpectralLogDet() = default;

  std::vector<double> real_;
  std::vector<std::complex<double>> pairs_;
};

}  // namespace bayesw
