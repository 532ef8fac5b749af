#include "lowdim/recovery.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lowdim;

namespace {

using SD = SetDescriptor;

struct Planted {
  Matrix x;
  MeasurementEnsemble ens;
  Vector y;
};

Planted plant(const SD& d, int k, std::uint64_t seed, EnsembleLaw law = {}) {
  Rng rng(seed);
  Matrix x = sample_member(d, rng);
  MeasurementEnsemble ens = sample_ensemble(d.rows(), d.cols(), k, law, rng());
  Vector y = apply(ens, x);
  return {std::move(x), std::move(ens), std::move(y)};
}

bool recovered(const DecodeResult& r, const Matrix& x) {
  return r.status == DecodeStatus::Unique && (r.candidates[0] - x).norm() <= 1e-6 * (1.0 + x.norm());
}

}  // namespace

TEST(BruteForce, UniqueAboveThreshold) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = plant(SD::sparse(3, 3, 1), 2, seed);
    const auto r = sparse_brute_force_decode(p.ens, p.y, 1);
    ASSERT_EQ(r.status, DecodeStatus::Unique);
    EXPECT_LE((r.candidates[0] - p.x).norm(), 1e-8);
    EXPECT_LE(r.residuals[0], 1e-8 * p.y.norm());
  }
}

TEST(BruteForce, MultipleAtThreshold) {
  const auto p = plant(SD::sparse(3, 3, 1), 1, 3);
  const auto r = sparse_brute_force_decode(p.ens, p.y, 1);
  EXPECT_EQ(r.status, DecodeStatus::Multiple);
  EXPECT_EQ(r.candidates.size(), 9u);
}

TEST(BruteForce, ZeroMeasurementsGiveZero) {
  for (int s : {1, 2, 3}) {
    const auto ens = sample_ensemble(3, 3, s + 1, EnsembleLaw::gaussian(), 40 + s);
    const auto r = sparse_brute_force_decode(ens, Vector::Zero(s + 1), s);
    ASSERT_EQ(r.status, DecodeStatus::Unique);
    EXPECT_EQ(r.candidates[0], Matrix::Zero(3, 3));
  }
}

TEST(BruteForce, UnderdeterminedAndCapacity) {
  const auto p = plant(SD::sparse(3, 3, 3), 2, 5);
  const auto r = sparse_brute_force_decode(p.ens, p.y, 3);
  EXPECT_EQ(r.status, DecodeStatus::Underdetermined);
  EXPECT_TRUE(r.candidates.empty());
  EXPECT_THROW(sparse_brute_force_decode(p.ens, p.y, 3, {}, 50), CapacityError);
  EXPECT_THROW(sparse_brute_force_decode(p.ens, Vector::Zero(3), 1), DimensionError);
}

TEST(Nsp, HoldsAboveTwiceSparsity) {
  for (int k : {3, 5}) {
    int holds = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto ens = sample_ensemble(3, 3, k, EnsembleLaw::gaussian(), seed);
      if (nsp_check_sparse(ens, 1).holds) ++holds;
    }
    EXPECT_GE(holds, 99) << "k=" << k;
  }
}

TEST(Nsp, RankBoundFailsDeterministically) {
  for (int s = 1; s <= 3; ++s) {
    for (int k = 1; k < std::min(2 * s, 9); ++k) {
      const auto ens = sample_ensemble(3, 3, k, EnsembleLaw::gaussian(), 100 * s + k);
      const auto r = nsp_check_sparse(ens, s);
      EXPECT_FALSE(r.holds);
      ASSERT_TRUE(r.witness.has_value());
      EXPECT_EQ(r.witness->size(), static_cast<std::size_t>(std::min(2 * s, 9)));
    }
  }
}

TEST(Nsp, DegenerateEnsembleWitness) {
  for (int k : {1, 3, 6}) {
    Matrix a = Matrix::Zero(2, k);
    a.row(0).setOnes();  // every a_i = e_1: the second row is never measured
    Rng rng(static_cast<std::uint64_t>(k));
    Matrix b(2, k);
    for (int i = 0; i < k; ++i) b.col(i) = sample_gaussian(2, rng);
    const MeasurementEnsemble ens(a, b);
    const auto r = nsp_check_sparse(ens, 1);
    EXPECT_FALSE(r.holds);
    ASSERT_TRUE(r.witness.has_value());
    const std::vector<Entry> want = {{1, 0}, {1, 1}};
    EXPECT_EQ(*r.witness, want);
  }
}

TEST(Nsp, Capacity) {
  const auto ens = sample_ensemble(10, 10, 5, EnsembleLaw::gaussian(), 1);
  EXPECT_THROW(nsp_check_sparse(ens, 5), CapacityError);
}

TEST(Nsp, ImpliesUniqueness) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ens = sample_ensemble(3, 3, 3, EnsembleLaw::gaussian(), 1000 + seed);
    if (!nsp_check_sparse(ens, 1).holds) continue;
    ++checked;
    Rng rng(seed);
    const Matrix x = sample_member(SD::sparse(3, 3, 1), rng);
    const auto r = sparse_brute_force_decode(ens, apply(ens, x), 1);
    EXPECT_EQ(r.status, DecodeStatus::Unique);
  }
  EXPECT_GE(checked, 95);
}

TEST(Als, FullMeasurements) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = plant(SD::low_rank(3, 3, 1), 9, seed);
    AlsOptions opt;
    opt.seed = seed;
    if (recovered(lowrank_als_decode(p.ens, p.y, 1, opt), p.x)) ++ok;
  }
  EXPECT_GE(ok, 95);
}

TEST(Als, BelowThresholdIsAmbiguous) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto p = plant(SD::low_rank(3, 3, 1), 3, seed);
    AlsOptions opt;
    opt.seed = seed;
    if (recovered(lowrank_als_decode(p.ens, p.y, 1, opt), p.x)) ++ok;
  }
  EXPECT_LE(ok, 40);
}

TEST(Als, RestartsAreDeterministic) {
  const auto p = plant(SD::low_rank(3, 3, 1), 6, 7);
  AlsOptions opt;
  opt.seed = 99;
  const auto a = lowrank_als_decode(p.ens, p.y, 1, opt);
  const auto b = lowrank_als_decode(p.ens, p.y, 1, opt);
  ASSERT_EQ(a.candidates.size(), b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) EXPECT_EQ(a.candidates[i], b.candidates[i]);
}

TEST(Projected, FixedSupportLeastSquares) {
  const std::vector<Entry> support = {{0, 0}, {1, 2}, {2, 1}};
  const SD d = SD::fixed_support(3, 3, support);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ens = sample_ensemble(3, 3, 5, EnsembleLaw::gaussian(), seed);
    Rng rng(seed + 50);
    const Vector y = sample_gaussian(5, rng);  // generic y: not exactly consistent
    const Matrix a = restricted_matrix(ens, support);
    const Vector v = a.completeOrthogonalDecomposition().solve(y);
    const double floor_res = (a * v - y).norm();
    ProjectedOptions opt;
    opt.iters = 200000;
    opt.tol_res = floor_res * (1.0 + 1e-15) + 1e-15;
    const auto r = generic_projected_decode(d, ens, y, opt);
    ASSERT_EQ(r.status, DecodeStatus::Unique);
    Matrix want = Matrix::Zero(3, 3);
    for (std::size_t j = 0; j < support.size(); ++j) want(support[j].row, support[j].col) = v(j);
    EXPECT_LE((r.candidates[0] - want).norm(), 1e-6);
  }
}

// With s = 1 the first iterate is a hard threshold of step * A^T y and the
// iteration never leaves that support, so the decoder succeeds exactly when
// the largest back-projected entry is the planted one. At k = 4 that is well
// short of certain.
TEST(Projected, SparseRecoveryFollowsFirstSupport) {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = plant(SD::sparse(3, 3, 1), 4, seed);
    Eigen::Index r = 0, c = 0;
    adjoint(p.ens, p.y).cwiseAbs().maxCoeff(&r, &c);
    const bool good = recovered(generic_projected_decode(SD::sparse(3, 3, 1), p.ens, p.y), p.x);
    EXPECT_EQ(good, p.x(r, c) != 0.0) << "seed " << seed;
    if (good) ++ok;
  }
  EXPECT_GE(ok, 25);
  EXPECT_LE(ok, 60);
}

TEST(Projected, ZeroInput) {
  const auto ens = sample_ensemble(3, 3, 4, EnsembleLaw::gaussian(), 1);
  const auto r = generic_projected_decode(SD::sparse(3, 3, 1), ens, Vector::Zero(4));
  ASSERT_EQ(r.status, DecodeStatus::Unique);
  EXPECT_EQ(r.candidates[0], Matrix::Zero(3, 3));
}

TEST(Projected, AgreesWithBruteForce) {
  int both = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto p = plant(SD::sparse(3, 3, 1), 4, 5000 + seed);
    const auto a = generic_projected_decode(SD::sparse(3, 3, 1), p.ens, p.y);
    const auto b = sparse_brute_force_decode(p.ens, p.y, 1);
    if (a.status == DecodeStatus::Unique && b.status == DecodeStatus::Unique) {
      ++both;
      EXPECT_LE((a.candidates[0] - b.candidates[0]).norm(), 1e-6);
    }
  }
  EXPECT_GE(both, 40);
}

TEST(Holder, Homogeneity) {
  const auto ens = sample_ensemble(3, 3, 10, EnsembleLaw::gaussian(), 2);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Matrix x = sample_member(SD::sparse(3, 3, 2), rng);
    for (double beta : {0.3, 0.5, 0.9}) {
      for (double c : {0.01, 0.5, 3.0, 100.0}) {
        const double lhs = holder_ratio(ens, c * x, beta);
        const double rhs = std::pow(c, 1.0 - 1.0 / beta) * holder_ratio(ens, x, beta);
        ASSERT_NEAR(lhs / rhs, 1.0, 1e-9);
      }
    }
  }
  EXPECT_THROW(holder_ratio(ens, Matrix::Zero(3, 3), 0.5), DomainError);
  EXPECT_THROW(holder_ratio(ens, Matrix::Ones(3, 3), 1.0), DomainError);
}

TEST(Holder, PrefixMonotoneAndPositive) {
  const auto ens = sample_ensemble(3, 3, 10, EnsembleLaw::gaussian(), 4);
  const SD d = SD::sparse(3, 3, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t pairs : {10u, 100u, 1000u, 10000u}) {
    const auto est = holder_quotient(ens, d, 0.3, pairs, 1.0, 77);
    EXPECT_EQ(est.pair_count, pairs);
    EXPECT_GT(est.sampled_min, 0.0);
    EXPECT_LE(est.sampled_min, prev);
    prev = est.sampled_min;
  }
}

TEST(Holder, DuplicatePairsAreSkipped) {
  const auto ens = sample_ensemble(1, 1, 2, EnsembleLaw::gaussian(), 5);
  // O(1) = {-1, +1}: half of all pairs coincide
  const auto est = holder_quotient(ens, SD::orthogonal(1), 0.5, 200, 1.0, 6);
  EXPECT_EQ(est.pair_count, 200u);
  EXPECT_GT(est.skipped, 100u);
  EXPECT_THROW(holder_quotient(ens, SD::sparse(1, 1, 0), 0.5, 10, 1.0, 6), DomainError);
}

TEST(UnitBall, Volumes) {
  EXPECT_EQ(unit_ball_volume(0), 1.0);
  EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-12);
  EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-12);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-12);
  // recurrence V(d) = 2 pi / d V(d - 2), across the log-space switch
  for (int d = 2; d <= 140; ++d) {
    EXPECT_NEAR(unit_ball_volume(d) / (2.0 * std::numbers::pi / d * unit_ball_volume(d - 2)), 1.0,
                1e-12);
  }
  EXPECT_THROW(unit_ball_volume(-1), DomainError);
}

TEST(DConstant, Bounds) {
  EXPECT_NEAR(d_constant(1, 1), 1.0, 1e-15);
  for (int m = 1; m <= 20; ++m) {
    for (int n = 1; n <= 20; ++n) {
      EXPECT_LE(d_constant(m, n), std::pow(2.0, (m + n) / 2.0)) << m << "," << n;
    }
  }
}

TEST(ConcentrationBound, EndpointAndDomain) {
  for (auto [m, n] : {std::pair{1, 1}, {2, 2}, {3, 5}}) {
    EXPECT_NEAR(concentration_bound(m, n, 1.5, 2.0, 2.0 * 1.5 * 1.5), d_constant(m, n), 1e-12);
  }
  EXPECT_NEAR(concentration_bound(2, 2, 1.0, 1.0, 0.01),
              0.01 * d_constant(2, 2) * (1.0 + std::log(100.0)), 1e-15);
  EXPECT_NEAR(product_concentration_bound(2, 2, 1.0, 1.0, 0.01, 3),
              std::pow(0.01 * 4.0 * (1.0 + std::log(100.0)), 3), 1e-15);
  EXPECT_THROW(concentration_bound(2, 2, 1.0, 1.0, 1.01), DomainError);
  EXPECT_THROW(concentration_bound(2, 2, 1.0, 1.0, 0.0), DomainError);
  EXPECT_THROW(product_concentration_bound(2, 2, 1.0, 1.0, 2.0, 3), DomainError);
}

TEST(Wilson, KnownValues) {
  const auto zero = wilson_interval(0, 100, kZ99);
  EXPECT_EQ(zero.estimate, 0.0);
  EXPECT_NEAR(zero.lower, 0.0, 1e-15);
  EXPECT_NEAR(zero.upper, kZ99 * kZ99 / (100 + kZ99 * kZ99), 1e-15);
  const auto half = wilson_interval(50, 100, 1.96);
  EXPECT_NEAR(half.lower, 0.4038, 1e-4);
  EXPECT_NEAR(half.upper, 0.5962, 1e-4);
}

TEST(Concentration, GoldenPoint) {
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = 1.0;
  const auto rep = concentration_verify(x, 1.0, {0.01}, 1'000'000, 3, 11);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.sigma1, 1.0);
  EXPECT_NEAR(rep.rows[0].bound_single, 0.01 * d_constant(2, 2) * (1.0 + std::log(100.0)), 1e-15);
  EXPECT_LE(rep.rows[0].single.upper, rep.rows[0].bound_single);
  EXPECT_TRUE(rep.dominated());
}

TEST(Concentration, BilinearHomogeneity) {
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = 1.0;
  x(1, 0) = 0.5;
  const auto a = concentration_verify(x, 1.0, {0.05}, 200'000, 2, 12);
  const auto b = concentration_verify(10.0 * x, 1.0, {0.5}, 200'000, 2, 12);
  const double width = a.rows[0].single.upper - a.rows[0].single.lower;
  EXPECT_NEAR(a.rows[0].single.estimate, b.rows[0].single.estimate, width);
}

TEST(Concentration, EndpointBelowD) {
  Matrix x = Matrix::Zero(3, 2);
  x(0, 1) = 2.0;
  const auto rep = concentration_verify(x, 1.0, {2.0}, 100'000, 1, 13);
  EXPECT_LE(rep.rows[0].single.estimate, d_constant(3, 2));
  EXPECT_THROW(concentration_verify(x, 1.0, {2.5}, 1000, 1, 13), DomainError);
  EXPECT_THROW(concentration_verify(Matrix::Zero(2, 2), 1.0, {0.1}, 1000, 1, 13), DomainError);
}

TEST(Concentration, ThreadCountDoesNotMatter) {
  Matrix x = Matrix::Identity(2, 2);
  const auto a = concentration_verify(x, 1.0, {0.01, 0.1}, 300'000, 3, 14, 1);
  const auto b = concentration_verify(x, 1.0, {0.01, 0.1}, 300'000, 3, 14, 4);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].single.estimate, b.rows[i].single.estimate);
    EXPECT_EQ(a.rows[i].product.estimate, b.rows[i].product.estimate);
  }
}
