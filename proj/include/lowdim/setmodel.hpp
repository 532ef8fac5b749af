#pragma once

// Descriptor algebra for structured matrix sets: rectifiability calculus,
// recovery thresholds, sampling, and projections.

#include "lowdim/core.hpp"
#include "lowdim/measurement.hpp"
#include "lowdim/rifs.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lowdim {

enum class SetKind {
  Sparse,
  FixedSupport,
  LowRank,
  Orthogonal,
  UpperTriangularSparse,
  RifsAttractor,
  Union,
  MatrixProduct,
  Sum,
  Kronecker,
  MinkowskiDiff,
  GramSquare,
  BoundedBy,
};

const char* to_string(SetKind kind);

class SetDescriptor;

namespace set {
struct Sparse { int m, n, s; };
struct FixedSupport { int m, n; std::vector<Entry> support; };
struct LowRank { int m, n, r; };
struct Orthogonal { int m; };
/// At most s nonzeros, all on or above the main diagonal.
struct UpperTriangularSparse { int m, n, s; };
struct RifsAttractor { std::shared_ptr<const Rifs> rifs; };
struct Union { std::vector<SetDescriptor> children; };
/// { L R : L in left, R in right }
struct MatrixProduct { std::shared_ptr<const SetDescriptor> left, right; };
struct Sum { std::shared_ptr<const SetDescriptor> left, right; };
struct Kronecker { std::shared_ptr<const SetDescriptor> left, right; };
/// { U - V : U in left, V in right }
struct MinkowskiDiff { std::shared_ptr<const SetDescriptor> left, right; };
/// { X X^T : X in child }
struct GramSquare { std::shared_ptr<const SetDescriptor> child; };
/// child intersected with the closed Frobenius ball of the given radius
struct BoundedBy { std::shared_ptr<const SetDescriptor> child; double radius; };

using Node = std::variant<Sparse, FixedSupport, LowRank, Orthogonal, UpperTriangularSparse,
                          RifsAttractor, Union, MatrixProduct, Sum, Kronecker, MinkowskiDiff,
                          GramSquare, BoundedBy>;
}  // namespace set

/// Immutable value tree. Factories validate parameters and shape
/// compatibility and throw DimensionError.
class SetDescriptor {
 public:
  static SetDescriptor sparse(int m, int n, int s);
  static SetDescriptor fixed_support(int m, int n, std::vector<Entry> support);
  static SetDescriptor low_rank(int m, int n, int r);
  static SetDescriptor orthogonal(int m);
  static SetDescriptor upper_triangular_sparse(int m, int n, int s);
  static SetDescriptor rifs_attractor(std::shared_ptr<const Rifs> rifs);
  static SetDescriptor set_union(std::vector<SetDescriptor> children);
  static SetDescriptor product(const SetDescriptor& left, const SetDescriptor& right);
  static SetDescriptor sum(const SetDescriptor& left, const SetDescriptor& right);
  static SetDescriptor kronecker(const SetDescriptor& left, const SetDescriptor& right);
  static SetDescriptor difference(const SetDescriptor& left, const SetDescriptor& right);
  static SetDescriptor gram_square(const SetDescriptor& child);
  static SetDescriptor bounded_by(const SetDescriptor& child, double radius);

  SetKind kind() const;
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const set::Node& node() const { return *node_; }

  friend bool operator==(const SetDescriptor& x, const SetDescriptor& y);

 private:
  SetDescriptor(set::Node node, int rows, int cols);
  std::shared_ptr<const set::Node> node_;
  int rows_;
  int cols_;
};

/// Dimension information derived by the calculus. `rect_param` is empty when
/// the set is not rectifiable (fractal attractors); `minkowski_upper` is
/// empty when the set is unbounded and needs a BoundedBy restriction first.
struct DimensionReport {
  std::optional<long long> rect_param;
  bool countable_only = false;
  std::optional<double> hausdorff_upper;
  std::optional<double> minkowski_upper;
  std::vector<std::string> derivation_trace;
};

DimensionReport rect_param(const SetDescriptor& d);

class NoFiniteThresholdError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Smallest integer strictly greater than x.
long long smallest_integer_above(double x);

struct ThresholdReport {
  long long k_unique = 0;          ///< k > dim(U - U)
  long long k_probabilistic = 0;   ///< k > dim(U)
  double difference_dim = 0.0;     ///< dimension bound used for U - U
  double direct_dim = 0.0;         ///< dimension bound used for U
  double holder_difference_dim = 0.0;
  double holder_direct_dim = 0.0;
  std::vector<std::string> derivation_trace;

  /// Smallest k > dim / (1 - beta) for unique beta-Hoelder recovery.
  long long k_holder_unique(double beta) const;
  /// Same for recovery with arbitrarily small error probability.
  long long k_holder_probabilistic(double beta) const;
};

/// Throws NoFiniteThresholdError when no finite dimension bound is derivable.
ThresholdReport thresholds(const SetDescriptor& d);

/// Random member of the set. Sparse supports are uniform over the size-s
/// supports with Gaussian * amplitude entries; low-rank members are
/// amplitude * G1 G2^T; orthogonal members are sign-fixed Q factors.
Matrix sample_member(const SetDescriptor& d, Rng& rng, double amplitude = 1.0);

/// Nearest point (Frobenius) for Sparse, FixedSupport, LowRank,
/// UpperTriangularSparse and Orthogonal. Sparse ties are broken in row-major
/// order. Throws UnsupportedError for other kinds.
Matrix project(const SetDescriptor& d, const Matrix& x);

/// ||X - project(d, X)||_F; zero exactly on members.
double membership_residual(const SetDescriptor& d, const Matrix& x);

}  // namespace lowdim
