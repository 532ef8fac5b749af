#pragma once

#include "lowdim/core.hpp"

#include <span>
#include <vector>

namespace lowdim {

/// A single matrix position, zero-based.
struct Entry {
  int row = 0;
  int col = 0;
  friend bool operator==(const Entry&, const Entry&) = default;
  friend auto operator<=>(const Entry&, const Entry&) = default;
};

enum class Distribution { Gaussian, UniformBall };

/// Law of the measurement vectors. Radii are only used by UniformBall.
struct EnsembleLaw {
  Distribution kind = Distribution::Gaussian;
  double radius_a = 1.0;
  double radius_b = 1.0;

  static EnsembleLaw gaussian() { return {}; }
  static EnsembleLaw uniform_ball(double ra = 1.0, double rb = 1.0) {
    return {Distribution::UniformBall, ra, rb};
  }
};

/// k rank-1 functionals X -> a_i^T X b_i. The a_i are the columns of `a()`
/// (m x k) and the b_i the columns of `b()` (n x k). Immutable.
class MeasurementEnsemble {
 public:
  /// Throws DimensionError when the column counts differ or are zero.
  MeasurementEnsemble(Matrix a, Matrix b, EnsembleLaw law = {},
                      std::uint64_t seed = 0);

  int m() const { return static_cast<int>(a_.rows()); }
  int n() const { return static_cast<int>(b_.rows()); }
  int k() const { return static_cast<int>(a_.cols()); }
  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const EnsembleLaw& law() const { return law_; }
  std::uint64_t seed() const { return seed_; }

  friend bool operator==(const MeasurementEnsemble& x, const MeasurementEnsemble& y) {
    return x.a_ == y.a_ && x.b_ == y.b_;
  }

 private:
  Matrix a_;
  Matrix b_;
  EnsembleLaw law_;
  std::uint64_t seed_;
};

/// Uniform draw from the open Euclidean ball of the given radius: uniform
/// direction, radius * U^(1/dim).
Vector sample_uniform_ball(int dim, double radius, Rng& rng);

/// Standard normal vector.
Vector sample_gaussian(int dim, Rng& rng);

/// Deterministic in `seed`. Columns are drawn a_1, b_1, a_2, b_2, ...
MeasurementEnsemble sample_ensemble(int m, int n, int k, const EnsembleLaw& law,
                                    std::uint64_t seed);

/// y_i = a_i^T X b_i.
Vector apply(const MeasurementEnsemble& ensemble, const Matrix& x);

/// y_i = <A_i, X> = tr(A_i^T X).
Vector apply_general(std::span<const Matrix> measurement_matrices, const Matrix& x);

/// sum_i z_i a_i b_i^T.
Matrix adjoint(const MeasurementEnsemble& ensemble, const Vector& z);

/// The k x mn matrix of the map on row-major vec(X).
Matrix measurement_operator(const MeasurementEnsemble& ensemble);

/// Column j holds a_i[p_j] * b_i[q_j] for support entry (p_j, q_j).
/// Throws DimensionError on out-of-range or duplicate entries.
Matrix restricted_matrix(const MeasurementEnsemble& ensemble,
                         std::span<const Entry> support);

/// Frobenius inner product.
inline double inner(const Matrix& x, const Matrix& y) {
  return (x.array() * y.array()).sum();
}

}  // namespace lowdim
