#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lowdim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Engine used for every stochastic routine. One engine per trial / chunk,
/// seeded through derive_seed so results never depend on scheduling.
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised by config parsing; `path` is a JSON-pointer-like field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// ---------------------------------------------------------------------------
// Small utilities shared by the modules
// ---------------------------------------------------------------------------

std::string shape_string(Eigen::Index rows, Eigen::Index cols);

/// Throws DimensionError unless `x` is rows x cols.
void require_shape(const Matrix& x, Eigen::Index rows, Eigen::Index cols,
                   const char* what);

/// Throws DomainError on NaN/Inf entries.
void require_finite(const Matrix& x, const char* what);

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed and up to two
/// indices (e.g. measurement count and trial index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0);

/// Binomial coefficient saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t r);

/// Calls `visit` with every r-subset of {0,...,n-1} in lexicographic order.
/// `visit` returns false to stop early.
void for_each_combination(int n, int r,
                          const std::function<bool(const std::vector<int>&)>& visit);

/// Runs body(i) for i in [0, count) on `threads` workers. Work is handed out
/// by index, so callers that write into slot i get scheduling-independent
/// results. threads <= 1 runs inline.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace lowdim
