#pragma once

// Decoders, exact oracles, and estimators for recovery from rank-1 measurements.

#include "lowdim/core.hpp"
#include "lowdim/measurement.hpp"
#include "lowdim/setmodel.hpp"

#include <optional>
#include <vector>

namespace lowdim {

enum class DecodeStatus { Unique, Multiple, NoneFound, Underdetermined };

const char* to_string(DecodeStatus status);

struct DecodeResult {
  std::vector<Matrix> candidates;
  std::vector<double> residuals;  ///< ||apply(X_hat) - y||_2 per candidate
  DecodeStatus status = DecodeStatus::NoneFound;
};

/// Tolerances; negative values select the defaults
/// tol_res = 1e-8 ||y||, tol_dup = 1e-6 (1 + ||X_hat||).
struct DecodeTolerances {
  double residual = -1.0;
  double duplicate = -1.0;
};

constexpr std::uint64_t kDefaultEnumerationCap = 2'000'000;

/// Exhaustive decoder over all size-s supports. Throws CapacityError when
/// binomial(mn, s) exceeds `cap`.
DecodeResult sparse_brute_force_decode(const MeasurementEnsemble& ensemble, const Vector& y,
                                       int s, const DecodeTolerances& tol = {},
                                       std::uint64_t cap = kDefaultEnumerationCap);

struct NspResult {
  bool holds = false;
  std::optional<std::vector<Entry>> witness;
};

/// Exact null-space check for s-sparse sets: every support of size
/// t = min(2s, mn) must give a full-column-rank restricted matrix (rank
/// threshold 1e-10 sigma_max). On failure the witness is the support with
/// the largest nullity, lexicographically first among ties.
NspResult nsp_check_sparse(const MeasurementEnsemble& ensemble, int s,
                           std::uint64_t cap = kDefaultEnumerationCap);

struct AlsOptions {
  int restarts = 50;
  int iters = 500;
  double tol_res = -1.0;  ///< default 1e-8 ||y||
  double tol_dup = -1.0;  ///< default 1e-6 (1 + ||X_hat||)
  std::uint64_t seed = 0;
};

/// Alternating least squares on X = L R^T with Gaussian restarts. Each half
/// step is a minimum-norm linear least-squares solve.
DecodeResult lowrank_als_decode(const MeasurementEnsemble& ensemble, const Vector& y, int r,
                                const AlsOptions& options = {});

struct ProjectedOptions {
  double step = -1.0;  ///< default 1 / ||A||_op^2
  int iters = 5000;
  double tol_res = -1.0;
};

/// X <- project(d, X - step * adjoint(apply(X) - y)) from X = 0.
DecodeResult generic_projected_decode(const SetDescriptor& d,
                                      const MeasurementEnsemble& ensemble, const Vector& y,
                                      const ProjectedOptions& options = {});

/// ||apply(X)|| / ||X||^(1/beta) for X != 0.
double holder_ratio(const MeasurementEnsemble& ensemble, const Matrix& x, double beta);

struct HolderQuotientEstimate {
  double beta = 0.0;
  double sampled_min = 0.0;
  std::size_t pair_count = 0;  ///< nonzero differences evaluated
  std::size_t skipped = 0;     ///< identical pairs (difference exactly zero)
};

/// Minimum of holder_ratio over differences U1 - U2 of members of d drawn
/// from a stream seeded by `seed`; a shorter run sees a prefix of a longer one.
HolderQuotientEstimate holder_quotient(const MeasurementEnsemble& ensemble,
                                       const SetDescriptor& d, double beta,
                                       std::size_t pair_count, double amplitude,
                                       std::uint64_t seed);

/// Volume of the unit ball in R^dim; V(0) = 1.
double unit_ball_volume(int dim);

/// 4 V(n-1) V(m-1) / (V(m) V(n)).
double d_constant(int m, int n);

/// Single-measurement small-ball bound
/// delta D_{m,n} / (sigma1 s^2) (1 + log(s^2 sigma1 / delta)),
/// valid for 0 < delta <= sigma1 s^2 (DomainError otherwise).
double concentration_bound(int m, int n, double radius, double sigma1, double delta);

/// k-measurement bound
/// (delta 2^((m+n)/2) / (sigma1 s^2) (1 + log(s^2 sigma1 / delta)))^k.
double product_concentration_bound(int m, int n, double radius, double sigma1, double delta,
                                   int k);

/// Wilson score interval for a binomial proportion.
struct ProportionInterval {
  double estimate;
  double lower;
  double upper;
};
ProportionInterval wilson_interval(std::size_t successes, std::size_t trials, double z);

/// z for a two-sided 99% interval.
constexpr double kZ99 = 2.5758293035489004;

struct ConcentrationRow {
  double delta = 0.0;
  ProportionInterval single{};
  double bound_single = 0.0;
  ProportionInterval product{};
  double bound_product = 0.0;
};

struct ConcentrationReport {
  int m = 0;
  int n = 0;
  double radius = 1.0;
  double sigma1 = 0.0;
  int k = 1;
  std::size_t samples = 0;
  std::vector<ConcentrationRow> rows;

  /// Every 99% upper confidence limit lies below its bound.
  bool dominated() const;
};

/// Monte Carlo estimates of P[|a^T X b| <= delta] and of
/// P[||(a_i^T X b_i)_{i<=k}|| <= delta] with a, b uniform on radius-s balls.
/// Samples are split into fixed-size chunks with derived seeds, so the result
/// does not depend on `threads`.
ConcentrationReport concentration_verify(const Matrix& x, double radius,
                                         const std::vector<double>& delta_grid,
                                         std::size_t samples, int k, std::uint64_t seed,
                                         int threads = 1);

}  // namespace lowdim
