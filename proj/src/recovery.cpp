#include "lowdim/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace lowdim {

const char* to_string(DecodeStatus status) {
  switch (status) {
    case DecodeStatus::Unique: return "unique";
    case DecodeStatus::Multiple: return "multiple";
    case DecodeStatus::NoneFound: return "none_found";
    case DecodeStatus::Underdetermined: return "underdetermined";
  }
  return "unknown";
}

namespace {

double residual_tolerance(double requested, const Vector& y) {
  return requested >= 0.0 ? requested : 1e-8 * y.norm();
}

// Adds x unless it is within the duplicate tolerance of a kept candidate.
void collapse_into(DecodeResult& result, Matrix x, double residual, double tol_dup) {
  for (const Matrix& kept : result.candidates) {
    const double tol = tol_dup >= 0.0 ? tol_dup : 1e-6 * (1.0 + kept.norm());
    if ((kept - x).norm() <= tol) return;
  }
  result.candidates.push_back(std::move(x));
  result.residuals.push_back(residual);
}

void finalize_status(DecodeResult& result) {
  switch (result.candidates.size()) {
    case 0: result.status = DecodeStatus::NoneFound; break;
    case 1: result.status = DecodeStatus::Unique; break;
    default: result.status = DecodeStatus::Multiple; break;
  }
}

std::vector<Entry> entries_of(const std::vector<int>& linear, int n) {
  std::vector<Entry> out;
  out.reserve(linear.size());
  for (int idx : linear) out.push_back({idx / n, idx % n});
  return out;
}

Vector min_norm_solve(const Matrix& a, const Vector& b) {
  return Eigen::CompleteOrthogonalDecomposition<Matrix>(a).solve(b);
}

}  // namespace

DecodeResult sparse_brute_force_decode(const MeasurementEnsemble& ensemble, const Vector& y,
                                       int s, const DecodeTolerances& tol, std::uint64_t cap) {
  if (s < 1) throw DomainError("sparse_brute_force_decode: s must be >= 1");
  if (y.size() != ensemble.k()) {
    throw DimensionError("sparse_brute_force_decode: measurement vector has length " +
                         std::to_string(y.size()) + ", expected " +
                         std::to_string(ensemble.k()));
  }
  const int mn = ensemble.m() * ensemble.n();
  if (s > mn) throw DomainError("sparse_brute_force_decode: s exceeds mn");
  const auto supports = binomial(static_cast<std::uint64_t>(mn), static_cast<std::uint64_t>(s));
  if (supports > cap) {
    throw CapacityError("sparse_brute_force_decode: " + std::to_string(supports) +
                        " supports exceed the enumeration cap " + std::to_string(cap));
  }
  DecodeResult result;
  if (ensemble.k() < s) {
    result.status = DecodeStatus::Underdetermined;
    return result;
  }
  const double tol_res = residual_tolerance(tol.residual, y);
  for_each_combination(mn, s, [&](const std::vector<int>& linear) {
    const auto support = entries_of(linear, ensemble.n());
    const Matrix a = restricted_matrix(ensemble, support);
    const Vector v = min_norm_solve(a, y);
    const double res = (a * v - y).norm();
    if (res <= tol_res) {
      Matrix x = Matrix::Zero(ensemble.m(), ensemble.n());
      for (std::size_t j = 0; j < support.size(); ++j) {
        x(support[j].row, support[j].col) = v[static_cast<Eigen::Index>(j)];
      }
      collapse_into(result, std::move(x), res, tol.duplicate);
    }
    return true;
  });
  finalize_status(result);
  return result;
}

NspResult nsp_check_sparse(const MeasurementEnsemble& ensemble, int s, std::uint64_t cap) {
  if (s < 1) throw DomainError("nsp_check_sparse: s must be >= 1");
  const int mn = ensemble.m() * ensemble.n();
  const int t = std::min(2 * s, mn);
  const auto supports = binomial(static_cast<std::uint64_t>(mn), static_cast<std::uint64_t>(t));
  if (supports > cap) {
    throw CapacityError("nsp_check_sparse: " + std::to_string(supports) +
                        " supports exceed the enumeration cap " + std::to_string(cap));
  }
  NspResult result;
  int worst = 0;
  for_each_combination(mn, t, [&](const std::vector<int>& linear) {
    const auto support = entries_of(linear, ensemble.n());
    const Matrix a = restricted_matrix(ensemble, support);
    const Vector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
    const double threshold = 1e-10 * (sv.size() > 0 ? sv[0] : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > threshold) ++rank;
    }
    const int nullity = t - rank;
    if (nullity > worst) {
      worst = nullity;
      result.witness = support;
    }
    return worst < t;  // a zero restricted matrix cannot be beaten
  });
  result.holds = worst == 0;
  return result;
}

DecodeResult lowrank_als_decode(const MeasurementEnsemble& ensemble, const Vector& y, int r,
                                const AlsOptions& options) {
  if (r < 1) throw DomainError("lowrank_als_decode: r must be >= 1");
  if (y.size() != ensemble.k()) {
    throw DimensionError("lowrank_als_decode: measurement vector has length " +
                         std::to_string(y.size()) + ", expected " +
                         std::to_string(ensemble.k()));
  }
  const int m = ensemble.m();
  const int n = ensemble.n();
  const int k = ensemble.k();
  const Matrix& a = ensemble.a();
  const Matrix& b = ensemble.b();
  const double tol_res = residual_tolerance(options.tol_res, y);

  // y_i = sum_{p,j} a_i[p] L[p,j] (R^T b_i)[j], linear in L; symmetric in R.
  const auto solve_factor = [&](const Matrix& fixed_side_vectors, const Matrix& other,
                                const Matrix& own_vectors, int rows) {
    const Matrix coeff = other.transpose() * fixed_side_vectors;  // r x k
    Matrix design(k, rows * r);
    for (int i = 0; i < k; ++i) {
      for (int p = 0; p < rows; ++p) {
        for (int j = 0; j < r; ++j) design(i, p * r + j) = own_vectors(p, i) * coeff(j, i);
      }
    }
    const Vector v = min_norm_solve(design, y);
    Matrix factor(rows, r);
    for (int p = 0; p < rows; ++p) {
      for (int j = 0; j < r; ++j) factor(p, j) = v[p * r + j];
    }
    return factor;
  };

  DecodeResult result;
  for (int restart = 0; restart < options.restarts; ++restart) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(restart)));
    Matrix left(m, r);
    Matrix right(n, r);
    for (int j = 0; j < r; ++j) {
      left.col(j) = sample_gaussian(m, rng);
      right.col(j) = sample_gaussian(n, rng);
    }
    double res = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int it = 0; it < options.iters; ++it) {
      left = solve_factor(b, right, a, m);
      right = solve_factor(a, left, b, n);
      const double next = (apply(ensemble, left * right.transpose()) - y).norm();
      stalled = (next > res * (1.0 - 1e-9)) ? stalled + 1 : 0;
      res = next;
      if (res <= tol_res || stalled >= 10) break;
    }
    if (res <= tol_res) collapse_into(result, left * right.transpose(), res, options.tol_dup);
  }
  finalize_status(result);
  return result;
}

DecodeResult generic_projected_decode(const SetDescriptor& d,
                                      const MeasurementEnsemble& ensemble, const Vector& y,
                                      const ProjectedOptions& options) {
  if (d.rows() != ensemble.m() || d.cols() != ensemble.n()) {
    throw DimensionError("generic_projected_decode: set shape " +
                         shape_string(d.rows(), d.cols()) + " does not match ensemble " +
                         shape_string(ensemble.m(), ensemble.n()));
  }
  double step = options.step;
  if (step <= 0.0) {
    const double op_norm =
        Eigen::JacobiSVD<Matrix>(measurement_operator(ensemble)).singularValues()[0];
    step = 1.0 / (op_norm * op_norm);
  }
  const double tol_res = residual_tolerance(options.tol_res, y);
  Matrix x = Matrix::Zero(ensemble.m(), ensemble.n());
  DecodeResult result;
  for (int it = 0; it < options.iters; ++it) {
    x = project(d, x - step * adjoint(ensemble, apply(ensemble, x) - y));
    const double res = (apply(ensemble, x) - y).norm();
    if (res <= tol_res) {
      result.candidates.push_back(x);
      result.residuals.push_back(res);
      break;
    }
  }
  finalize_status(result);
  return result;
}

double holder_ratio(const MeasurementEnsemble& ensemble, const Matrix& x, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("holder_ratio: beta must lie in (0,1)");
  const double norm = x.norm();
  if (norm == 0.0) throw DomainError("holder_ratio: X must be nonzero");
  return apply(ensemble, x).norm() / std::pow(norm, 1.0 / beta);
}

HolderQuotientEstimate holder_quotient(const MeasurementEnsemble& ensemble,
                                       const SetDescriptor& d, double beta,
                                       std::size_t pair_count, double amplitude,
                                       std::uint64_t seed) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("holder_quotient: beta must lie in (0,1)");
  if (pair_count < 1) throw DomainError("holder_quotient: pair_count must be positive");
  HolderQuotientEstimate est;
  est.beta = beta;
  est.sampled_min = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  const std::size_t max_skips = 100 * pair_count + 1000;
  while (est.pair_count < pair_count) {
    const Matrix u1 = sample_member(d, rng, amplitude);
    const Matrix u2 = sample_member(d, rng, amplitude);
    const Matrix diff = u1 - u2;
    if (diff.norm() == 0.0) {
      if (++est.skipped > max_skips) {
        throw DomainError("holder_quotient: the set produced no distinct pairs");
      }
      continue;
    }
    est.sampled_min = std::min(est.sampled_min, holder_ratio(ensemble, diff, beta));
    ++est.pair_count;
  }
  return est;
}

double unit_ball_volume(int dim) {
  if (dim < 0) throw DomainError("unit_ball_volume: dimension must be nonnegative");
  if (dim == 0) return 1.0;
  const double half = 0.5 * dim;
  if (dim <= 100) return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0));
}

double d_constant(int m, int n) {
  if (m < 1 || n < 1) throw DomainError("d_constant: m and n must be positive");
  return 4.0 * unit_ball_volume(n - 1) * unit_ball_volume(m - 1) /
         (unit_ball_volume(m) * unit_ball_volume(n));
}

namespace {
void require_delta_in_range(double radius, double sigma1, double delta) {
  const double limit = sigma1 * radius * radius;
  if (!(delta > 0.0) || delta > limit * (1.0 + 1e-12)) {
    throw DomainError("concentration bound: delta=" + std::to_string(delta) +
                      " outside (0, sigma1 s^2 = " + std::to_string(limit) + "]");
  }
}
}  // namespace

double concentration_bound(int m, int n, double radius, double sigma1, double delta) {
  require_delta_in_range(radius, sigma1, delta);
  const double scale = sigma1 * radius * radius;
  return delta * d_constant(m, n) / scale * (1.0 + std::log(scale / delta));
}

double product_concentration_bound(int m, int n, double radius, double sigma1, double delta,
                                   int k) {
  if (k < 1) throw DomainError("product_concentration_bound: k must be positive");
  require_delta_in_range(radius, sigma1, delta);
  const double scale = sigma1 * radius * radius;
  const double single =
      delta * std::pow(2.0, 0.5 * (m + n)) / scale * (1.0 + std::log(scale / delta));
  return std::pow(single, k);
}

ProportionInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 0.0, 1.0};
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nt;
  const double centre = (p + z2 / (2.0 * nt)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt));
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

bool ConcentrationReport::dominated() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConcentrationRow& r) {
    return r.single.upper <= r.bound_single && r.product.upper <= r.bound_product;
  });
}

ConcentrationReport concentration_verify(const Matrix& x, double radius,
                                         const std::vector<double>& delta_grid,
                                         std::size_t samples, int k, std::uint64_t seed,
                                         int threads) {
  require_finite(x, "concentration_verify");
  if (!(radius > 0.0)) throw DomainError("concentration_verify: radius must be positive");
  if (k < 1) throw DomainError("concentration_verify: k must be positive");
  if (samples < 1) throw DomainError("concentration_verify: samples must be positive");
  if (delta_grid.empty()) throw DomainError("concentration_verify: empty delta grid");
  const double sigma1 = Eigen::JacobiSVD<Matrix>(x).singularValues()[0];
  if (sigma1 == 0.0) throw DomainError("concentration_verify: X must be nonzero");

  ConcentrationReport report;
  report.m = static_cast<int>(x.rows());
  report.n = static_cast<int>(x.cols());
  report.radius = radius;
  report.sigma1 = sigma1;
  report.k = k;
  report.samples = samples;
  for (double delta : delta_grid) {
    ConcentrationRow row;
    row.delta = delta;
    row.bound_single = concentration_bound(report.m, report.n, radius, sigma1, delta);
    row.bound_product =
        product_concentration_bound(report.m, report.n, radius, sigma1, delta, k);
    report.rows.push_back(row);
  }

  constexpr std::size_t kChunk = 1 << 16;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  const std::size_t grid = delta_grid.size();
  std::vector<std::size_t> single_hits(chunks * grid, 0);
  std::vector<std::size_t> product_hits(chunks * grid, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(samples, begin + kChunk);
    for (std::size_t s = begin; s < end; ++s) {
      double first = 0.0;
      double sq = 0.0;
      for (int i = 0; i < k; ++i) {
        const Vector a = sample_uniform_ball(report.m, radius, rng);
        const Vector b = sample_uniform_ball(report.n, radius, rng);
        const double v = a.dot(x * b);
        if (i == 0) first = std::abs(v);
        sq += v * v;
      }
      const double norm = std::sqrt(sq);
      for (std::size_t g = 0; g < grid; ++g) {
        if (first <= delta_grid[g]) ++single_hits[c * grid + g];
        if (norm <= delta_grid[g]) ++product_hits[c * grid + g];
      }
    }
  });
  for (std::size_t g = 0; g < grid; ++g) {
    std::size_t single = 0;
    std::size_t product = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      single += single_hits[c * grid + g];
      product += product_hits[c * grid + g];
    }
    report.rows[g].single = wilson_interval(single, samples, kZ99);
    report.rows[g].product = wilson_interval(product, samples, kZ99);
  }
  return report;
}

}  // namespace lowdim
