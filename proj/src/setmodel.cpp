#include "lowdim/setmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace lowdim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::shared_ptr<const SetDescriptor> share(const SetDescriptor& d) {
  return std::make_shared<const SetDescriptor>(d);
}

void require_positive_shape(int m, int n, const char* what) {
  if (m < 1 || n < 1) {
    throw DimensionError(std::string(what) + ": shape " + shape_string(m, n) +
                         " must be positive");
  }
}

void require_same_shape(const SetDescriptor& l, const SetDescriptor& r, const char* what) {
  if (l.rows() != r.rows() || l.cols() != r.cols()) {
    throw DimensionError(std::string(what) + ": shapes " + shape_string(l.rows(), l.cols()) +
                         " and " + shape_string(r.rows(), r.cols()) + " differ");
  }
}

long long upper_triangular_slots(int m, int n) {
  long long count = 0;
  for (int i = 0; i < m; ++i) count += std::max(0, n - i);
  return count;
}

}  // namespace

const char* to_string(SetKind kind) {
  switch (kind) {
    case SetKind::Sparse: return "sparse";
    case SetKind::FixedSupport: return "fixed_support";
    case SetKind::LowRank: return "low_rank";
    case SetKind::Orthogonal: return "orthogonal";
    case SetKind::UpperTriangularSparse: return "upper_triangular_sparse";
    case SetKind::RifsAttractor: return "rifs_attractor";
    case SetKind::Union: return "union";
    case SetKind::MatrixProduct: return "matrix_product";
    case SetKind::Sum: return "sum";
    case SetKind::Kronecker: return "kronecker";
    case SetKind::MinkowskiDiff: return "minkowski_diff";
    case SetKind::GramSquare: return "gram_square";
    case SetKind::BoundedBy: return "bounded_by";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

SetDescriptor::SetDescriptor(set::Node node, int rows, int cols)
    : node_(std::make_shared<const set::Node>(std::move(node))), rows_(rows), cols_(cols) {}

SetKind SetDescriptor::kind() const { return static_cast<SetKind>(node_->index()); }

SetDescriptor SetDescriptor::sparse(int m, int n, int s) {
  require_positive_shape(m, n, "sparse");
  if (s < 0 || static_cast<long long>(s) > static_cast<long long>(m) * n) {
    throw DimensionError("sparse: s=" + std::to_string(s) + " outside [0, mn]");
  }
  return {set::Sparse{m, n, s}, m, n};
}

SetDescriptor SetDescriptor::fixed_support(int m, int n, std::vector<Entry> support) {
  require_positive_shape(m, n, "fixed_support");
  std::set<Entry> seen;
  for (const Entry& e : support) {
    if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= n) {
      throw DimensionError("fixed_support: entry (" + std::to_string(e.row) + "," +
                           std::to_string(e.col) + ") outside " + shape_string(m, n));
    }
    if (!seen.insert(e).second) {
      throw DimensionError("fixed_support: duplicate entry (" + std::to_string(e.row) +
                           "," + std::to_string(e.col) + ")");
    }
  }
  return {set::FixedSupport{m, n, std::move(support)}, m, n};
}

SetDescriptor SetDescriptor::low_rank(int m, int n, int r) {
  require_positive_shape(m, n, "low_rank");
  if (r < 0 || r > std::min(m, n)) {
    throw DimensionError("low_rank: r=" + std::to_string(r) + " outside [0, min(m,n)]");
  }
  return {set::LowRank{m, n, r}, m, n};
}

SetDescriptor SetDescriptor::orthogonal(int m) {
  require_positive_shape(m, m, "orthogonal");
  return {set::Orthogonal{m}, m, m};
}

SetDescriptor SetDescriptor::upper_triangular_sparse(int m, int n, int s) {
  require_positive_shape(m, n, "upper_triangular_sparse");
  if (s < 0 || s > upper_triangular_slots(m, n)) {
    throw DimensionError("upper_triangular_sparse: s=" + std::to_string(s) +
                         " exceeds the number of upper-triangular entries");
  }
  return {set::UpperTriangularSparse{m, n, s}, m, n};
}

SetDescriptor SetDescriptor::rifs_attractor(std::shared_ptr<const Rifs> rifs) {
  if (!rifs) throw DimensionError("rifs_attractor: null system");
  const int m = rifs->ambient_dim();
  const int n = rifs->size();
  return {set::RifsAttractor{std::move(rifs)}, m, n};
}

SetDescriptor SetDescriptor::set_union(std::vector<SetDescriptor> children) {
  if (children.empty()) throw DimensionError("union: needs at least one child");
  for (const auto& c : children) require_same_shape(children.front(), c, "union");
  const int m = children.front().rows();
  const int n = children.front().cols();
  return {set::Union{std::move(children)}, m, n};
}

SetDescriptor SetDescriptor::product(const SetDescriptor& left, const SetDescriptor& right) {
  if (left.cols() != right.rows()) {
    throw DimensionError("matrix_product: inner dimensions of " +
                         shape_string(left.rows(), left.cols()) + " and " +
                         shape_string(right.rows(), right.cols()) + " do not match");
  }
  return {set::MatrixProduct{share(left), share(right)}, left.rows(), right.cols()};
}

SetDescriptor SetDescriptor::sum(const SetDescriptor& left, const SetDescriptor& right) {
  require_same_shape(left, right, "sum");
  return {set::Sum{share(left), share(right)}, left.rows(), left.cols()};
}

SetDescriptor SetDescriptor::kronecker(const SetDescriptor& left, const SetDescriptor& right) {
  return {set::Kronecker{share(left), share(right)}, left.rows() * right.rows(),
          left.cols() * right.cols()};
}

SetDescriptor SetDescriptor::difference(const SetDescriptor& left, const SetDescriptor& right) {
  require_same_shape(left, right, "minkowski_diff");
  return {set::MinkowskiDiff{share(left), share(right)}, left.rows(), left.cols()};
}

SetDescriptor SetDescriptor::gram_square(const SetDescriptor& child) {
  return {set::GramSquare{share(child)}, child.rows(), child.rows()};
}

SetDescriptor SetDescriptor::bounded_by(const SetDescriptor& child, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw DimensionError("bounded_by: radius must be positive and finite");
  }
  return {set::BoundedBy{share(child), radius}, child.rows(), child.cols()};
}

bool operator==(const SetDescriptor& x, const SetDescriptor& y) {
  if (x.node_ == y.node_) return true;
  if (x.kind() != y.kind() || x.rows_ != y.rows_ || x.cols_ != y.cols_) return false;
  return std::visit(
      overloaded{
          [&](const set::Sparse& a) {
            const auto& b = std::get<set::Sparse>(y.node());
            return a.s == b.s;
          },
          [&](const set::FixedSupport& a) {
            return a.support == std::get<set::FixedSupport>(y.node()).support;
          },
          [&](const set::LowRank& a) { return a.r == std::get<set::LowRank>(y.node()).r; },
          [&](const set::Orthogonal&) { return true; },
          [&](const set::UpperTriangularSparse& a) {
            return a.s == std::get<set::UpperTriangularSparse>(y.node()).s;
          },
          [&](const set::RifsAttractor& a) {
            return *a.rifs == *std::get<set::RifsAttractor>(y.node()).rifs;
          },
          [&](const set::Union& a) {
            return a.children == std::get<set::Union>(y.node()).children;
          },
          [&](const set::MatrixProduct& a) {
            const auto& b = std::get<set::MatrixProduct>(y.node());
            return *a.left == *b.left && *a.right == *b.right;
          },
          [&](const set::Sum& a) {
            const auto& b = std::get<set::Sum>(y.node());
            return *a.left == *b.left && *a.right == *b.right;
          },
          [&](const set::Kronecker& a) {
            const auto& b = std::get<set::Kronecker>(y.node());
            return *a.left == *b.left && *a.right == *b.right;
          },
          [&](const set::MinkowskiDiff& a) {
            const auto& b = std::get<set::MinkowskiDiff>(y.node());
            return *a.left == *b.left && *a.right == *b.right;
          },
          [&](const set::GramSquare& a) {
            return *a.child == *std::get<set::GramSquare>(y.node()).child;
          },
          [&](const set::BoundedBy& a) {
            const auto& b = std::get<set::BoundedBy>(y.node());
            return a.radius == b.radius && *a.child == *b.child;
          },
      },
      x.node());
}

// ---------------------------------------------------------------------------
// Dimension calculus
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

DimensionReport leaf(long long s, bool bounded, std::string rule) {
  DimensionReport r;
  r.rect_param = s;
  r.countable_only = !bounded;
  r.hausdorff_upper = static_cast<double>(s);
  if (bounded) r.minkowski_upper = static_cast<double>(s);
  r.derivation_trace.push_back(std::move(rule));
  return r;
}

void append_trace(DimensionReport& out, const DimensionReport& child) {
  out.derivation_trace.insert(out.derivation_trace.end(), child.derivation_trace.begin(),
                              child.derivation_trace.end());
}

// Combination rule for locally Lipschitz images of products: parameters add.
DimensionReport additive(const DimensionReport& l, const DimensionReport& r,
                         const std::string& rule) {
  DimensionReport out;
  append_trace(out, l);
  append_trace(out, r);
  if (l.rect_param && r.rect_param) out.rect_param = *l.rect_param + *r.rect_param;
  out.countable_only = l.countable_only || r.countable_only;
  if (l.minkowski_upper && r.minkowski_upper) {
    out.minkowski_upper = *l.minkowski_upper + *r.minkowski_upper;
  }
  if (out.rect_param) {
    out.hausdorff_upper = static_cast<double>(*out.rect_param);
  } else if (out.minkowski_upper) {
    out.hausdorff_upper = out.minkowski_upper;
  }
  // Bounded rectifiable sets: Minkowski dimension is bounded by the parameter.
  if (out.rect_param && !out.countable_only) {
    out.minkowski_upper = std::min(out.minkowski_upper.value_or(1e300),
                                   static_cast<double>(*out.rect_param));
  }
  std::ostringstream os;
  os << rule << ": parameters add -> "
     << (out.rect_param ? std::to_string(*out.rect_param) : std::string("not rectifiable"));
  out.derivation_trace.push_back(os.str());
  return out;
}

DimensionReport calculus(const SetDescriptor& d);

DimensionReport self_difference(const SetDescriptor& child) {
  // Set-specific identities give the tight parameter for sparse and low-rank
  // sets; everything else uses the generic doubling rule.
  if (const auto* sp = std::get_if<set::Sparse>(&child.node())) {
    const long long mn = static_cast<long long>(sp->m) * sp->n;
    const long long doubled = 2LL * sp->s;
    const long long s = std::min(doubled, mn);
    auto r = leaf(s, s == 0, "sparse difference: A_s - A_s = A_{2s}, countably " +
                                 std::to_string(s) + "-rectifiable");
    if (doubled > mn) {
      r.derivation_trace.push_back("saturated: 2s=" + std::to_string(doubled) +
                                   " exceeds mn=" + std::to_string(mn));
    }
    return r;
  }
  if (const auto* lr = std::get_if<set::LowRank>(&child.node())) {
    const int doubled = 2 * lr->r;
    const int r2 = std::min(doubled, std::min(lr->m, lr->n));
    const long long s = static_cast<long long>(lr->m + lr->n - r2) * r2;
    auto r = leaf(s, s == 0,
                  "low-rank difference: M_r - M_r = M_" + std::to_string(r2) +
                      ", countably (m+n-r')r' = " + std::to_string(s) + "-rectifiable");
    if (doubled > std::min(lr->m, lr->n)) {
      r.derivation_trace.push_back("saturated: 2r=" + std::to_string(doubled) +
                                   " exceeds min(m,n)=" +
                                   std::to_string(std::min(lr->m, lr->n)));
    }
    return r;
  }
  const DimensionReport base = calculus(child);
  DimensionReport out = base;
  if (base.rect_param) out.rect_param = 2 * *base.rect_param;
  if (base.minkowski_upper) out.minkowski_upper = 2.0 * *base.minkowski_upper;
  if (out.rect_param) {
    out.hausdorff_upper = static_cast<double>(*out.rect_param);
  } else {
    out.hausdorff_upper = out.minkowski_upper;
  }
  out.derivation_trace.push_back(
      "difference set U - U: " +
      (out.rect_param ? "(countably) " + std::to_string(*out.rect_param) + "-rectifiable"
                      : "upper box dimension at most " +
                            (out.minkowski_upper ? fmt_double(*out.minkowski_upper)
                                                 : std::string("unbounded"))));
  return out;
}

DimensionReport calculus(const SetDescriptor& d) {
  return std::visit(
      overloaded{
          [&](const set::Sparse& s) {
            return leaf(s.s, s.s == 0,
                        "sparse " + shape_string(s.m, s.n) + ": union of coordinate "
                        "subspaces, countably " + std::to_string(s.s) + "-rectifiable");
          },
          [&](const set::FixedSupport& f) {
            const auto size = static_cast<long long>(f.support.size());
            return leaf(size, size == 0,
                        "fixed support: linear subspace of dimension " + std::to_string(size));
          },
          [&](const set::LowRank& l) {
            const long long s = static_cast<long long>(l.m + l.n - l.r) * l.r;
            return leaf(s, l.r == 0,
                        "low rank " + shape_string(l.m, l.n) + " r=" + std::to_string(l.r) +
                            ": union of C1 manifolds, countably (m+n-r)r = " +
                            std::to_string(s) + "-rectifiable");
          },
          [&](const set::Orthogonal& o) {
            const long long s = static_cast<long long>(o.m) * (o.m - 1) / 2;
            return leaf(s, true,
                        "orthogonal group O(" + std::to_string(o.m) +
                            "): compact manifold, m(m-1)/2 = " + std::to_string(s) +
                            "-rectifiable");
          },
          [&](const set::UpperTriangularSparse& u) {
            return leaf(u.s, u.s == 0,
                        "upper triangular sparse: countably " + std::to_string(u.s) +
                            "-rectifiable");
          },
          [&](const set::RifsAttractor& a) {
            DimensionReport r;
            const double dim = dimension_bound(*a.rifs);
            r.countable_only = false;
            r.minkowski_upper = dim;
            r.hausdorff_upper = dim;
            r.derivation_trace.push_back(
                "rifs attractor: not rectifiable; upper box dimension <= n*d = " +
                fmt_double(dim));
            return r;
          },
          [&](const set::Union& u) {
            DimensionReport out;
            out.rect_param = 0;
            out.minkowski_upper = 0.0;
            out.hausdorff_upper = 0.0;
            for (const auto& c : u.children) {
              const auto r = calculus(c);
              append_trace(out, r);
              out.countable_only = out.countable_only || r.countable_only;
              if (out.rect_param && r.rect_param) {
                out.rect_param = std::max(*out.rect_param, *r.rect_param);
              } else {
                out.rect_param.reset();
              }
              if (out.minkowski_upper && r.minkowski_upper) {
                out.minkowski_upper = std::max(*out.minkowski_upper, *r.minkowski_upper);
              } else {
                out.minkowski_upper.reset();
              }
              if (out.hausdorff_upper && r.hausdorff_upper) {
                out.hausdorff_upper = std::max(*out.hausdorff_upper, *r.hausdorff_upper);
              } else {
                out.hausdorff_upper.reset();
              }
            }
            out.derivation_trace.push_back("union: maximum over children");
            return out;
          },
          [&](const set::MatrixProduct& p) {
            return additive(calculus(*p.left), calculus(*p.right), "matrix product");
          },
          [&](const set::Sum& p) { return additive(calculus(*p.left), calculus(*p.right), "sum"); },
          [&](const set::Kronecker& p) {
            return additive(calculus(*p.left), calculus(*p.right), "kronecker product");
          },
          [&](const set::MinkowskiDiff& p) {
            if (*p.left == *p.right) return self_difference(*p.left);
            return additive(calculus(*p.left), calculus(*p.right), "difference of sets");
          },
          [&](const set::GramSquare& g) {
            auto r = calculus(*g.child);
            r.derivation_trace.push_back("gram square X X^T: parameter preserved");
            return r;
          },
          [&](const set::BoundedBy& b) {
            auto r = calculus(*b.child);
            r.countable_only = false;
            if (r.rect_param) {
              r.minkowski_upper = static_cast<double>(*r.rect_param);
              r.hausdorff_upper = static_cast<double>(*r.rect_param);
            } else if (!r.minkowski_upper) {
              r.minkowski_upper = r.hausdorff_upper;
            }
            r.derivation_trace.push_back(
                "bounded by radius " + fmt_double(b.radius) + ": closure is " +
                (r.rect_param ? std::to_string(*r.rect_param) + "-rectifiable"
                              : std::string("compact")));
            return r;
          },
      },
      d.node());
}

}  // namespace

DimensionReport rect_param(const SetDescriptor& d) { return calculus(d); }

long long smallest_integer_above(double x) {
  // dim / (1 - beta) often lands a few ulps off an integer (0.99 is not exact)
  const double near = std::round(x);
  if (std::abs(x - near) <= 1e-9 * std::max(1.0, std::abs(x))) x = near;
  return static_cast<long long>(std::floor(x)) + 1;
}

namespace {
long long holder_k(double dim, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError("holder threshold: beta must lie in (0,1)");
  }
  return smallest_integer_above(dim / (1.0 - beta));
}
}  // namespace

long long ThresholdReport::k_holder_unique(double beta) const {
  return holder_k(holder_difference_dim, beta);
}

long long ThresholdReport::k_holder_probabilistic(double beta) const {
  return holder_k(holder_direct_dim, beta);
}

ThresholdReport thresholds(const SetDescriptor& d) {
  const DimensionReport direct = rect_param(d);
  const DimensionReport diff = rect_param(SetDescriptor::difference(d, d));
  if (!direct.hausdorff_upper || !diff.hausdorff_upper) {
    throw NoFiniteThresholdError(
        "thresholds: no finite dimension bound for this set; bound it with bounded_by");
  }
  ThresholdReport t;
  t.direct_dim = *direct.hausdorff_upper;
  t.difference_dim = *diff.hausdorff_upper;
  t.k_probabilistic = smallest_integer_above(t.direct_dim);
  t.k_unique = smallest_integer_above(t.difference_dim);
  // Hoelder thresholds apply to bounded subsets; a rectifiable set's bounded
  // subsets have closures rectifiable with the same parameter.
  t.holder_direct_dim = direct.rect_param ? static_cast<double>(*direct.rect_param)
                                          : direct.minkowski_upper.value_or(t.direct_dim);
  t.holder_difference_dim = diff.rect_param ? static_cast<double>(*diff.rect_param)
                                            : diff.minkowski_upper.value_or(t.difference_dim);
  t.derivation_trace = direct.derivation_trace;
  t.derivation_trace.push_back("unique recovery (difference set, Hausdorff bound " +
                               fmt_double(t.difference_dim) +
                               "): k >= " + std::to_string(t.k_unique));
  t.derivation_trace.push_back("zero error probability (Hausdorff bound " +
                               fmt_double(t.direct_dim) +
                               "): k >= " + std::to_string(t.k_probabilistic));
  t.derivation_trace.push_back("hoelder recovery: k > dim / (1 - beta) for bounded subsets");
  return t;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  return g;
}

// Uniform s-subset of {0..count-1} by partial Fisher-Yates, sorted.
std::vector<int> random_subset(int count, int s, Rng& rng) {
  std::vector<int> pool(static_cast<std::size_t>(count));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < s; ++i) {
    std::uniform_int_distribution<int> pick(i, count - 1);
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(s));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Entry> upper_entries(int m, int n) {
  std::vector<Entry> out;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < n; ++j) out.push_back({i, j});
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix sign_fixed_q(const Matrix& g) {
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

}  // namespace

Matrix sample_member(const SetDescriptor& d, Rng& rng, double amplitude) {
  if (!(amplitude > 0.0)) throw DomainError("sample_member: amplitude must be positive");
  return std::visit(
      overloaded{
          [&](const set::Sparse& s) -> Matrix {
            Matrix x = Matrix::Zero(s.m, s.n);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (int idx : random_subset(s.m * s.n, s.s, rng)) {
              x(idx / s.n, idx % s.n) = amplitude * normal(rng);
            }
            return x;
          },
          [&](const set::FixedSupport& f) -> Matrix {
            Matrix x = Matrix::Zero(f.m, f.n);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (const Entry& e : f.support) x(e.row, e.col) = amplitude * normal(rng);
            return x;
          },
          [&](const set::LowRank& l) -> Matrix {
            const Matrix g1 = gaussian_matrix(l.m, l.r, rng);
            const Matrix g2 = gaussian_matrix(l.n, l.r, rng);
            return amplitude * g1 * g2.transpose();
          },
          [&](const set::Orthogonal& o) -> Matrix {
            return sign_fixed_q(gaussian_matrix(o.m, o.m, rng));
          },
          [&](const set::UpperTriangularSparse& u) -> Matrix {
            const auto slots = upper_entries(u.m, u.n);
            Matrix x = Matrix::Zero(u.m, u.n);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (int idx : random_subset(static_cast<int>(slots.size()), u.s, rng)) {
              const Entry e = slots[static_cast<std::size_t>(idx)];
              x(e.row, e.col) = amplitude * normal(rng);
            }
            return x;
          },
          [&](const set::RifsAttractor& a) -> Matrix {
            const auto sample = attractor_points(*a.rifs, 1, 100, rng());
            return stack_components(sample, 0);
          },
          [&](const set::Union& u) -> Matrix {
            std::uniform_int_distribution<std::size_t> pick(0, u.children.size() - 1);
            return sample_member(u.children[pick(rng)], rng, amplitude);
          },
          [&](const set::MatrixProduct& p) -> Matrix {
            const Matrix l = sample_member(*p.left, rng, amplitude);
            return l * sample_member(*p.right, rng, amplitude);
          },
          [&](const set::Sum& p) -> Matrix {
            const Matrix l = sample_member(*p.left, rng, amplitude);
            return l + sample_member(*p.right, rng, amplitude);
          },
          [&](const set::Kronecker& p) -> Matrix {
            const Matrix l = sample_member(*p.left, rng, amplitude);
            return kron(l, sample_member(*p.right, rng, amplitude));
          },
          [&](const set::MinkowskiDiff& p) -> Matrix {
            const Matrix l = sample_member(*p.left, rng, amplitude);
            return l - sample_member(*p.right, rng, amplitude);
          },
          [&](const set::GramSquare& g) -> Matrix {
            const Matrix x = sample_member(*g.child, rng, amplitude);
            return x * x.transpose();
          },
          [&](const set::BoundedBy& b) -> Matrix {
            constexpr int kAttempts = 10'000;
            for (int i = 0; i < kAttempts; ++i) {
              Matrix x = sample_member(*b.child, rng, amplitude);
              if (x.norm() <= b.radius) return x;
            }
            throw CapacityError("sample_member: bounded_by rejection sampling exhausted; "
                                "lower the amplitude");
          },
      },
      d.node());
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

namespace {

// Keep the `keep` largest-magnitude entries among `candidates` (given in
// row-major order); stable sort breaks ties by that order.
Matrix keep_largest(const Matrix& x, std::vector<Entry> candidates, int keep) {
  std::stable_sort(candidates.begin(), candidates.end(), [&](const Entry& a, const Entry& b) {
    return std::abs(x(a.row, a.col)) > std::abs(x(b.row, b.col));
  });
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < keep && i < static_cast<int>(candidates.size()); ++i) {
    const Entry e = candidates[static_cast<std::size_t>(i)];
    out(e.row, e.col) = x(e.row, e.col);
  }
  return out;
}

std::vector<Entry> all_entries(int m, int n) {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.push_back({i, j});
  }
  return out;
}

}  // namespace

Matrix project(const SetDescriptor& d, const Matrix& x) {
  require_shape(x, d.rows(), d.cols(), "project");
  return std::visit(
      overloaded{
          [&](const set::Sparse& s) -> Matrix {
            return keep_largest(x, all_entries(s.m, s.n), s.s);
          },
          [&](const set::FixedSupport& f) -> Matrix {
            Matrix out = Matrix::Zero(f.m, f.n);
            for (const Entry& e : f.support) out(e.row, e.col) = x(e.row, e.col);
            return out;
          },
          [&](const set::LowRank& l) -> Matrix {
            Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
            return svd.matrixU().leftCols(l.r) *
                   svd.singularValues().head(l.r).asDiagonal() *
                   svd.matrixV().leftCols(l.r).transpose();
          },
          [&](const set::Orthogonal&) -> Matrix {
            Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
            return svd.matrixU() * svd.matrixV().transpose();
          },
          [&](const set::UpperTriangularSparse& u) -> Matrix {
            return keep_largest(x, upper_entries(u.m, u.n), u.s);
          },
          [&](const auto&) -> Matrix {
            throw UnsupportedError(std::string("project: unsupported set kind ") +
                                   to_string(d.kind()));
          },
      },
      d.node());
}

double membership_residual(const SetDescriptor& d, const Matrix& x) {
  return (x - project(d, x)).norm();
}

}  // namespace lowdim
