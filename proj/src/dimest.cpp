#include "lowdim/dimest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace lowdim {

PointCloud::PointCloud(int dim) : dim_(dim) {
  if (dim < 1) throw DimensionError("point cloud: dimension must be positive");
}

PointCloud::PointCloud(int dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim < 1) throw DimensionError("point cloud: dimension must be positive");
  if (coords_.size() % static_cast<std::size_t>(dim) != 0) {
    throw DimensionError("point cloud: coordinate count is not a multiple of the dimension");
  }
  for (double v : coords_) {
    if (!std::isfinite(v)) throw DomainError("point cloud: non-finite coordinate");
  }
}

PointCloud PointCloud::from_vectors(const std::vector<Vector>& points) {
  if (points.empty()) throw DimensionError("point cloud: no points");
  PointCloud cloud(static_cast<int>(points.front().size()));
  for (const auto& p : points) cloud.add(p);
  return cloud;
}

PointCloud PointCloud::from_matrices(const std::vector<Matrix>& matrices) {
  if (matrices.empty()) throw DimensionError("point cloud: no points");
  const auto rows = matrices.front().rows();
  const auto cols = matrices.front().cols();
  PointCloud cloud(static_cast<int>(rows * cols));
  std::vector<double> buf(static_cast<std::size_t>(rows * cols));
  for (const auto& x : matrices) {
    require_shape(x, rows, cols, "point cloud");
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) buf[static_cast<std::size_t>(i * cols + j)] = x(i, j);
    }
    cloud.add(buf);
  }
  return cloud;
}

void PointCloud::add(std::span<const double> point) {
  if (static_cast<int>(point.size()) != dim_) {
    throw DimensionError("point cloud: point of dimension " + std::to_string(point.size()) +
                         " added to cloud of dimension " + std::to_string(dim_));
  }
  for (double v : point) {
    if (!std::isfinite(v)) throw DomainError("point cloud: non-finite coordinate");
  }
  coords_.insert(coords_.end(), point.begin(), point.end());
}

void PointCloud::add(const Vector& point) {
  add(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
}

double PointCloud::bounding_diagonal() const {
  if (size() == 0) return 0.0;
  double sq = 0.0;
  for (int c = 0; c < dim_; ++c) {
    double lo = coords_[static_cast<std::size_t>(c)];
    double hi = lo;
    for (std::size_t i = 0; i < size(); ++i) {
      const double v = point(i)[static_cast<std::size_t>(c)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    sq += (hi - lo) * (hi - lo);
  }
  return std::sqrt(sq);
}

namespace {

constexpr int kMaxHashDims = 4;
using CellKey = std::array<long long, kMaxHashDims>;

struct CellHash {
  std::size_t operator()(const CellKey& key) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (long long v : key) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

// Coordinates with the widest spread make the most selective grid.
std::vector<int> hash_axes(const PointCloud& cloud, std::vector<double>& lows) {
  const int dim = cloud.dim();
  std::vector<double> spread(static_cast<std::size_t>(dim));
  lows.assign(static_cast<std::size_t>(dim), 0.0);
  for (int c = 0; c < dim; ++c) {
    double lo = cloud.point(0)[static_cast<std::size_t>(c)];
    double hi = lo;
    for (std::size_t i = 1; i < cloud.size(); ++i) {
      const double v = cloud.point(i)[static_cast<std::size_t>(c)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    spread[static_cast<std::size_t>(c)] = hi - lo;
    lows[static_cast<std::size_t>(c)] = lo;
  }
  std::vector<int> axes(static_cast<std::size_t>(dim));
  std::iota(axes.begin(), axes.end(), 0);
  std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) {
    return spread[static_cast<std::size_t>(a)] > spread[static_cast<std::size_t>(b)];
  });
  axes.resize(static_cast<std::size_t>(std::min(dim, kMaxHashDims)));
  return axes;
}

}  // namespace

std::size_t covering_number(const PointCloud& cloud, double delta) {
  if (!(delta > 0.0)) throw DomainError("covering_number: delta must be positive");
  const std::size_t count = cloud.size();
  if (count == 0) return 0;
  const int dim = cloud.dim();

  std::vector<double> lows;
  const std::vector<int> axes = hash_axes(cloud, lows);
  const int h = static_cast<int>(axes.size());
  auto cell_of = [&](std::size_t i) {
    CellKey key{};
    const auto p = cloud.point(i);
    for (int a = 0; a < h; ++a) {
      const auto ax = static_cast<std::size_t>(axes[static_cast<std::size_t>(a)]);
      key[static_cast<std::size_t>(a)] =
          static_cast<long long>(std::floor((p[ax] - lows[ax]) / delta));
    }
    return key;
  };

  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> cells;
  cells.reserve(count);
  for (std::size_t i = 0; i < count; ++i) cells[cell_of(i)].push_back(static_cast<std::uint32_t>(i));

  // Offsets in {-1,0,1}^h.
  std::vector<CellKey> offsets;
  const int total = static_cast<int>(std::pow(3, h));
  for (int code = 0; code < total; ++code) {
    CellKey off{};
    int c = code;
    for (int a = 0; a < h; ++a) {
      off[static_cast<std::size_t>(a)] = c % 3 - 1;
      c /= 3;
    }
    offsets.push_back(off);
  }

  const double delta_sq = delta * delta;
  std::vector<bool> covered(count, false);
  std::size_t centers = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (covered[i]) continue;
    ++centers;
    const auto center = cloud.point(i);
    const CellKey home = cell_of(i);
    for (const CellKey& off : offsets) {
      CellKey key = home;
      for (int a = 0; a < h; ++a) key[static_cast<std::size_t>(a)] += off[static_cast<std::size_t>(a)];
      const auto it = cells.find(key);
      if (it == cells.end()) continue;
      auto& members = it->second;
      // Covered points are swapped out so later scans skip them.
      for (std::size_t idx = 0; idx < members.size();) {
        const auto p = cloud.point(members[idx]);
        double sq = 0.0;
        for (int c = 0; c < dim && sq <= delta_sq; ++c) {
          const double diff = p[static_cast<std::size_t>(c)] - center[static_cast<std::size_t>(c)];
          sq += diff * diff;
        }
        if (sq <= delta_sq) {
          covered[members[idx]] = true;
          members[idx] = members.back();
          members.pop_back();
        } else {
          ++idx;
        }
      }
    }
  }
  return centers;
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
  if (points < 2) throw DomainError("geometric_grid: need at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double ratio = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i);
  grid.back() = hi;
  return grid;
}

DimensionEstimate estimate_minkowski(const PointCloud& cloud, double delta_min,
                                     double delta_max, int grid_size,
                                     const EstimateOptions& options) {
  if (cloud.size() == 0) throw DimensionError("estimate_minkowski: empty cloud");
  if (grid_size < 4) throw DomainError("estimate_minkowski: grid_size must be >= 4");
  if (!(delta_min > 0.0) || !(delta_min < delta_max)) {
    throw DomainError("estimate_minkowski: need 0 < delta_min < delta_max");
  }

  DimensionEstimate est;
  est.delta_grid = geometric_grid(delta_min, delta_max, grid_size);
  const double diagonal = cloud.bounding_diagonal();
  if (diagonal == 0.0) {
    est.counts.assign(est.delta_grid.size(), 1);
    est.used.assign(est.delta_grid.size(), true);
    est.r_squared = 1.0;
    est.accepted = true;
    return est;
  }
  if (delta_max > diagonal) {
    throw DomainError("estimate_minkowski: delta_max exceeds the cloud extent");
  }

  est.counts.resize(est.delta_grid.size());
  parallel_for(est.delta_grid.size(), options.threads, [&](std::size_t i) {
    est.counts[i] = covering_number(cloud, est.delta_grid[i]);
  });

  std::vector<double> xs;
  std::vector<double> ys;
  est.used.resize(est.counts.size());
  for (std::size_t i = 0; i < est.counts.size(); ++i) {
    est.used[i] = est.counts[i] < cloud.size();
    if (!est.used[i]) continue;
    xs.push_back(std::log(1.0 / est.delta_grid[i]));
    ys.push_back(std::log(static_cast<double>(est.counts[i])));
  }
  if (xs.size() < 2) {
    throw DomainError("estimate_minkowski: fewer than two radii above the resolution floor");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  est.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  est.accepted = est.r_squared >= options.min_r_squared;
  return est;
}

}  // namespace lowdim
