#include "lowdim/rifs.hpp"

#include "lowdim/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace lowdim {

RowSumError::RowSumError(int row, double sum)
    : std::invalid_argument("transition matrix row " + std::to_string(row) +
                            " sums to " + std::to_string(sum) + ", not 1"),
      row(row),
      sum(sum) {}

NotIrreducibleError::NotIrreducibleError(int from, int to)
    : std::invalid_argument("transition matrix is not irreducible: state " +
                            std::to_string(from) + " cannot reach state " +
                            std::to_string(to)),
      from(from),
      to(to) {}

namespace {

constexpr double kRowSumTol = 1e-12;

std::vector<bool> reachable_from(const Matrix& pattern, int start) {
  const int n = static_cast<int>(pattern.rows());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> stack{start};
  seen[static_cast<std::size_t>(start)] = true;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      if (pattern(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

// Strongly connected components of the pattern {M(i,j) > 0}.
std::vector<std::vector<int>> strong_components(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> index(static_cast<std::size_t>(n), -1);
  std::vector<int> low(static_cast<std::size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> out;
  int counter = 0;
  std::function<void(int)> visit = [&](int v) {
    const auto sv = static_cast<std::size_t>(v);
    index[sv] = low[sv] = counter++;
    stack.push_back(v);
    on_stack[sv] = true;
    for (int w = 0; w < n; ++w) {
      if (!(m(v, w) > 0.0)) continue;
      const auto sw = static_cast<std::size_t>(w);
      if (index[sw] < 0) {
        visit(w);
        low[sv] = std::min(low[sv], low[sw]);
      } else if (on_stack[sw]) {
        low[sv] = std::min(low[sv], index[sw]);
      }
    }
    if (low[sv] == index[sv]) {
      std::vector<int> comp;
      int w = -1;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[static_cast<std::size_t>(w)] = false;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[static_cast<std::size_t>(v)] < 0) visit(v);
  }
  return out;
}

// Perron root of an irreducible nonnegative block of size >= 2.
double irreducible_perron_root(const Matrix& block) {
  const Eigen::Index n = block.rows();
  const double shift = block.rowwise().sum().maxCoeff();
  Vector x = Vector::Ones(n);
  double estimate = 0.0;
  constexpr int kMaxIter = 1'000'000;
  for (int it = 0; it < kMaxIter; ++it) {
    const Vector y = block * x + shift * x;
    const Vector ratio = y.cwiseQuotient(x);
    const double lo = ratio.minCoeff();
    const double hi = ratio.maxCoeff();
    estimate = 0.5 * (lo + hi) - shift;
    if (hi - lo <= 1e-13 * std::max(estimate, 1e-300)) return estimate;
    x = y / y.maxCoeff();
  }
  throw ConvergenceError("spectral_radius: no convergence", estimate);
}

}  // namespace

Connectivity validate(const Matrix& transition) {
  const int n = static_cast<int>(transition.rows());
  if (n < 1 || transition.cols() != n) {
    throw DimensionError("transition matrix must be square and nonempty, got " +
                         shape_string(transition.rows(), transition.cols()));
  }
  if (!transition.allFinite() || transition.minCoeff() < 0.0 ||
      transition.maxCoeff() > 1.0) {
    throw DomainError("transition matrix entries must lie in [0,1]");
  }
  for (int i = 0; i < n; ++i) {
    const double sum = transition.row(i).sum();
    if (std::abs(sum - 1.0) > kRowSumTol) throw RowSumError(i, sum);
  }
  Connectivity conn;
  conn.c = (transition.array() > 0.0).cast<double>();
  conn.index_sets.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (conn.c(i, j) > 0.0) conn.index_sets[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  for (int i = 0; i < n; ++i) {
    const auto seen = reachable_from(conn.c, i);
    for (int j = 0; j < n; ++j) {
      if (!seen[static_cast<std::size_t>(j)]) throw NotIrreducibleError(i, j);
    }
  }
  return conn;
}

double spectral_radius(const Matrix& nonnegative) {
  if (nonnegative.rows() != nonnegative.cols() || nonnegative.rows() == 0) {
    throw DimensionError("spectral_radius: matrix must be square and nonempty");
  }
  if (!nonnegative.allFinite() || nonnegative.minCoeff() < 0.0) {
    throw DomainError("spectral_radius: matrix must be finite and nonnegative");
  }
  double rho = 0.0;
  for (const auto& comp : strong_components(nonnegative)) {
    if (comp.size() == 1) {
      rho = std::max(rho, nonnegative(comp[0], comp[0]));
      continue;
    }
    const auto sz = static_cast<Eigen::Index>(comp.size());
    Matrix block(sz, sz);
    for (Eigen::Index a = 0; a < sz; ++a) {
      for (Eigen::Index b = 0; b < sz; ++b) {
        block(a, b) = nonnegative(comp[static_cast<std::size_t>(a)],
                                  comp[static_cast<std::size_t>(b)]);
      }
    }
    rho = std::max(rho, irreducible_perron_root(block));
  }
  return rho;
}

Rifs::Rifs(int ambient_dim, double domain_radius, std::vector<Similitude> maps,
           Matrix transition)
    : m_(ambient_dim),
      radius_(domain_radius),
      maps_(std::move(maps)),
      p_(std::move(transition)) {
  if (m_ < 1) throw DimensionError("rifs: ambient dimension must be positive");
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw DomainError("rifs: domain radius must be positive");
  }
  if (maps_.empty()) throw DimensionError("rifs: at least one map required");
  if (p_.rows() != static_cast<Eigen::Index>(maps_.size())) {
    throw DimensionError("rifs: " + std::to_string(maps_.size()) +
                         " maps but transition matrix is " +
                         shape_string(p_.rows(), p_.cols()));
  }
  conn_ = validate(p_);
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    const Similitude& w = maps_[i];
    const std::string tag = "rifs map " + std::to_string(i);
    if (!(w.scale >= 0.0 && w.scale < 1.0)) {
      throw DomainError(tag + ": scale must lie in [0,1)");
    }
    require_shape(w.rotation, m_, m_, (tag + " rotation").c_str());
    require_shape(w.translation, m_, 1, (tag + " translation").c_str());
    require_finite(w.rotation, tag.c_str());
    require_finite(w.translation, tag.c_str());
    const double orth_err =
        (w.rotation.transpose() * w.rotation - Matrix::Identity(m_, m_)).norm();
    if (orth_err > 1e-10) throw DomainError(tag + ": rotation is not orthogonal");
    // Image of the centred ball is the ball of radius s*R around t.
    if (w.scale * radius_ + w.translation.norm() > radius_ * (1.0 + 1e-12)) {
      throw DomainError(tag + ": does not map the domain ball into itself");
    }
  }
}

Matrix Rifs::scaled_connectivity(double t) const {
  Matrix out = conn_.c;
  for (int i = 0; i < size(); ++i) {
    const double s = maps_[static_cast<std::size_t>(i)].scale;
    out.row(i) *= (s == 0.0) ? 0.0 : std::pow(s, t);
  }
  return out;
}

bool operator==(const Rifs& x, const Rifs& y) {
  if (x.m_ != y.m_ || x.radius_ != y.radius_ || x.p_ != y.p_ ||
      x.maps_.size() != y.maps_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < x.maps_.size(); ++i) {
    const auto& a = x.maps_[i];
    const auto& b = y.maps_[i];
    if (a.scale != b.scale || a.rotation != b.rotation || a.translation != b.translation) {
      return false;
    }
  }
  return true;
}

double contraction_dimension(const Rifs& rifs) {
  const auto lambda = [&](double t) { return spectral_radius(rifs.scaled_connectivity(t)); };
  const double at_zero = lambda(0.0);
  if (at_zero <= 1.0) {
    throw DegenerateSystemError(
        "contraction_dimension: spectral radius of the connectivity matrix is " +
        std::to_string(at_zero) + " <= 1, no positive dimension");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (lambda(hi) >= 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw ConvergenceError("contraction_dimension: no bracket", hi);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lambda(mid) >= 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double dimension_bound(const Rifs& rifs) {
  return rifs.size() * contraction_dimension(rifs);
}

AttractorSample attractor_points(const Rifs& rifs, int points_per_component,
                                 int burn_in, std::uint64_t seed, bool record_trace) {
  if (burn_in < 50) throw DomainError("attractor_points: burn_in must be >= 50");
  if (points_per_component < 1) {
    throw DomainError("attractor_points: points_per_component must be positive");
  }
  const int n = rifs.size();
  // Reversed chain: predecessors of state i are the i' with c(i', i) = 1.
  std::vector<std::vector<int>> predecessors(static_cast<std::size_t>(n));
  std::vector<std::discrete_distribution<int>> pick(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> weights;
    for (int ip = 0; ip < n; ++ip) {
      if (rifs.connectivity()(ip, i) > 0.0) {
        predecessors[static_cast<std::size_t>(i)].push_back(ip);
        weights.push_back(rifs.transition()(ip, i));
      }
    }
    pick[static_cast<std::size_t>(i)] =
        std::discrete_distribution<int>(weights.begin(), weights.end());
  }

  Rng rng(seed);
  AttractorSample out;
  out.burn_in = burn_in;
  out.chain_seed = seed;
  out.components.resize(static_cast<std::size_t>(n));
  for (auto& c : out.components) c.reserve(static_cast<std::size_t>(points_per_component));

  int state = std::uniform_int_distribution<int>(0, n - 1)(rng);
  Vector x = sample_uniform_ball(rifs.ambient_dim(), rifs.domain_radius(), rng);
  int filled = 0;
  const long long max_steps =
      burn_in + 10'000LL * n * static_cast<long long>(points_per_component);
  for (long long step = 0; filled < n; ++step) {
    if (step > max_steps) {
      throw ConvergenceError("attractor_points: chain failed to fill every component",
                             static_cast<double>(step));
    }
    const auto si = static_cast<std::size_t>(state);
    const int next = predecessors[si][static_cast<std::size_t>(pick[si](rng))];
    x = rifs.maps()[static_cast<std::size_t>(next)](x);
    state = next;
    if (step + 1 < burn_in) continue;
    auto& cloud = out.components[static_cast<std::size_t>(state)];
    if (record_trace) out.trace.push_back({state, x});
    if (static_cast<int>(cloud.size()) < points_per_component) {
      cloud.push_back(x);
      if (static_cast<int>(cloud.size()) == points_per_component) ++filled;
    }
  }
  return out;
}

Matrix stack_components(const AttractorSample& sample, std::size_t index) {
  if (sample.components.empty()) throw DimensionError("stack_components: empty sample");
  const auto m = sample.components.front().at(index).size();
  Matrix out(m, static_cast<Eigen::Index>(sample.components.size()));
  for (std::size_t j = 0; j < sample.components.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = sample.components[j].at(index);
  }
  return out;
}

}  // namespace lowdim
