#include "lowdim/measurement.hpp"

#include <cmath>
#include <set>
#include <string>

namespace lowdim {

MeasurementEnsemble::MeasurementEnsemble(Matrix a, Matrix b, EnsembleLaw law,
                                         std::uint64_t seed)
    : a_(std::move(a)), b_(std::move(b)), law_(law), seed_(seed) {
  if (a_.cols() != b_.cols()) {
    throw DimensionError("ensemble: a has " + std::to_string(a_.cols()) +
                         " columns but b has " + std::to_string(b_.cols()));
  }
  if (a_.cols() < 1 || a_.rows() < 1 || b_.rows() < 1) {
    throw DimensionError("ensemble: m, n and k must be positive");
  }
  require_finite(a_, "ensemble a");
  require_finite(b_, "ensemble b");
}

Vector sample_gaussian(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  return v;
}

Vector sample_uniform_ball(int dim, double radius, Rng& rng) {
  Vector direction;
  double norm = 0.0;
  do {
    direction = sample_gaussian(dim, rng);
    norm = direction.norm();
  } while (norm == 0.0);
  // U in (0,1): generate_canonical is [0,1), reflect to exclude 0.
  const double u = 1.0 - std::generate_canonical<double, 53>(rng);
  const double r = radius * std::pow(u, 1.0 / dim);
  Vector v = direction * (r / norm);
  // Rounding can put r * direction/norm a hair outside the closed ball.
  const double len = v.norm();
  if (len >= radius) v *= std::nextafter(radius, 0.0) / len;
  return v;
}

MeasurementEnsemble sample_ensemble(int m, int n, int k, const EnsembleLaw& law,
                                    std::uint64_t seed) {
  if (m < 1 || n < 1 || k < 1) {
    throw DimensionError("sample_ensemble: m, n, k must be positive");
  }
  Rng rng(seed);
  Matrix a(m, k);
  Matrix b(n, k);
  for (int i = 0; i < k; ++i) {
    if (law.kind == Distribution::UniformBall) {
      a.col(i) = sample_uniform_ball(m, law.radius_a, rng);
      b.col(i) = sample_uniform_ball(n, law.radius_b, rng);
    } else {
      a.col(i) = sample_gaussian(m, rng);
      b.col(i) = sample_gaussian(n, rng);
    }
  }
  return MeasurementEnsemble(std::move(a), std::move(b), law, seed);
}

Vector apply(const MeasurementEnsemble& ensemble, const Matrix& x) {
  require_shape(x, ensemble.m(), ensemble.n(), "apply");
  // Column i of (X B) is X b_i; y_i = a_i . (X b_i).
  const Matrix xb = x * ensemble.b();
  return (ensemble.a().array() * xb.array()).colwise().sum().transpose();
}

Vector apply_general(std::span<const Matrix> measurement_matrices, const Matrix& x) {
  Vector y(static_cast<Eigen::Index>(measurement_matrices.size()));
  for (std::size_t i = 0; i < measurement_matrices.size(); ++i) {
    require_shape(measurement_matrices[i], x.rows(), x.cols(), "apply_general");
    y[static_cast<Eigen::Index>(i)] = inner(measurement_matrices[i], x);
  }
  return y;
}

Matrix adjoint(const MeasurementEnsemble& ensemble, const Vector& z) {
  if (z.size() != ensemble.k()) {
    throw DimensionError("adjoint: expected vector of length " +
                         std::to_string(ensemble.k()) + ", got " +
                         std::to_string(z.size()));
  }
  return ensemble.a() * z.asDiagonal() * ensemble.b().transpose();
}

Matrix measurement_operator(const MeasurementEnsemble& ensemble) {
  const int m = ensemble.m();
  const int n = ensemble.n();
  Matrix op(ensemble.k(), m * n);
  for (int i = 0; i < ensemble.k(); ++i) {
    for (int p = 0; p < m; ++p) {
      for (int q = 0; q < n; ++q) {
        op(i, p * n + q) = ensemble.a()(p, i) * ensemble.b()(q, i);
      }
    }
  }
  return op;
}

Matrix restricted_matrix(const MeasurementEnsemble& ensemble,
                         std::span<const Entry> support) {
  if (support.empty()) throw DimensionError("restricted_matrix: empty support");
  std::set<Entry> seen;
  Matrix out(ensemble.k(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) {
    const Entry e = support[j];
    if (e.row < 0 || e.row >= ensemble.m() || e.col < 0 || e.col >= ensemble.n()) {
      throw DimensionError("restricted_matrix: entry (" + std::to_string(e.row) +
                           "," + std::to_string(e.col) + ") outside " +
                           shape_string(ensemble.m(), ensemble.n()));
    }
    if (!seen.insert(e).second) {
      throw DimensionError("restricted_matrix: duplicate entry (" +
                           std::to_string(e.row) + "," + std::to_string(e.col) + ")");
    }
    out.col(static_cast<Eigen::Index>(j)) =
        ensemble.a().row(e.row).transpose().cwiseProduct(ensemble.b().row(e.col).transpose());
  }
  return out;
}

}  // namespace lowdim
