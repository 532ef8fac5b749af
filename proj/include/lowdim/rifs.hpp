#pragma once

// Recurrent iterated function systems built from similitudes.

#include "lowdim/core.hpp"

#include <optional>
#include <vector>

namespace lowdim {

/// x -> scale * rotation * x + translation, rotation orthogonal.
struct Similitude {
  double scale = 0.0;
  Matrix rotation;
  Vector translation;

  Vector operator()(const Vector& x) const {
    return scale * (rotation * x) + translation;
  }
};

/// Row-sum violation of the transition matrix.
class RowSumError : public std::invalid_argument {
 public:
  RowSumError(int row, double sum);
  int row;
  double sum;
};

/// State `from` cannot reach state `to` in the transition graph.
class NotIrreducibleError : public std::invalid_argument {
 public:
  NotIrreducibleError(int from, int to);
  int from;
  int to;
};

class DegenerateSystemError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate(last_estimate) {}
  double last_estimate;
};

/// Connectivity pattern derived from a transition matrix.
struct Connectivity {
  Matrix c;                                ///< 0/1, c(i,j) = 1 iff p(i,j) > 0
  std::vector<std::vector<int>> index_sets; ///< I(i) = { j : c(i,j) = 1 }
};

/// Checks row-stochasticity (1e-12) and irreducibility. Throws RowSumError or
/// NotIrreducibleError naming the first violation (row order, then the
/// lexicographically first unreachable pair).
Connectivity validate(const Matrix& transition);

/// Perron root of an entrywise nonnegative square matrix. Each strongly
/// connected block is solved by shifted power iteration bracketed by
/// Collatz-Wielandt bounds; the result is the largest block root.
double spectral_radius(const Matrix& nonnegative);

class Rifs {
 public:
  /// Validates P, map shapes, orthogonality of rotations, and that every map
  /// sends the ball of radius `domain_radius` into itself.
  Rifs(int ambient_dim, double domain_radius, std::vector<Similitude> maps,
       Matrix transition);

  int ambient_dim() const { return m_; }
  double domain_radius() const { return radius_; }
  int size() const { return static_cast<int>(maps_.size()); }
  const std::vector<Similitude>& maps() const { return maps_; }
  const Matrix& transition() const { return p_; }
  const Matrix& connectivity() const { return conn_.c; }
  const std::vector<int>& index_set(int i) const {
    return conn_.index_sets[static_cast<std::size_t>(i)];
  }

  /// diag(s_1^t, ..., s_n^t) * C. For t > 0 zero scales give zero rows.
  Matrix scaled_connectivity(double t) const;

  friend bool operator==(const Rifs& x, const Rifs& y);

 private:
  int m_;
  double radius_;
  std::vector<Similitude> maps_;
  Matrix p_;
  Connectivity conn_;
};

/// The unique d > 0 with spectral_radius(S(d) C) = 1, by bracketing and
/// bisection. Throws DegenerateSystemError when rho(S(0+) C) <= 1.
double contraction_dimension(const Rifs& rifs);

/// n * contraction_dimension: the box-counting bound for the stacked attractor.
double dimension_bound(const Rifs& rifs);

struct ChainStep {
  int component;
  Vector point;
};

struct AttractorSample {
  std::vector<std::vector<Vector>> components;  ///< one cloud per map
  int burn_in = 0;
  std::uint64_t chain_seed = 0;
  std::vector<ChainStep> trace;  ///< post burn-in chain, only when requested
};

/// Recurrent chaos game. From state (i, x) the next index i' is drawn with
/// probability proportional to p(i', i) among i' with c(i', i) = 1 and
/// x' = w_{i'}(x), so x' lies in A_{i'}. Runs until every component holds
/// `points_per_component` points. Requires burn_in >= 50.
AttractorSample attractor_points(const Rifs& rifs, int points_per_component,
                                 int burn_in, std::uint64_t seed,
                                 bool record_trace = false);

/// Stacks one point of each component as the columns of an m x n matrix.
Matrix stack_components(const AttractorSample& sample, std::size_t index);

}  // namespace lowdim
