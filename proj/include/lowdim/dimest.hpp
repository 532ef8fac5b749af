#pragma once

// Covering numbers and box-counting (Minkowski) dimension estimates.

#include "lowdim/core.hpp"

#include <span>
#include <vector>

namespace lowdim {

/// Nonempty set of points in R^dim, stored row-major.
class PointCloud {
 public:
  explicit PointCloud(int dim);
  PointCloud(int dim, std::vector<double> coords);

  static PointCloud from_vectors(const std::vector<Vector>& points);
  /// Vectorizes each matrix row-major.
  static PointCloud from_matrices(const std::vector<Matrix>& matrices);

  void add(std::span<const double> point);
  void add(const Vector& point);

  int dim() const { return dim_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& coords() const { return coords_; }

  /// Diagonal of the bounding box; an upper bound on the diameter.
  double bounding_diagonal() const;

 private:
  int dim_;
  std::vector<double> coords_;
};

/// Greedy cover with centres taken from the cloud: the first uncovered point
/// (input order) becomes a centre and covers every point within distance
/// delta (inclusive). Returns the number of centres.
std::size_t covering_number(const PointCloud& cloud, double delta);

struct DimensionEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> delta_grid;
  std::vector<std::size_t> counts;
  std::vector<bool> used;  ///< false where the count hit the resolution floor
  bool accepted = false;   ///< r_squared >= min_r_squared
};

struct EstimateOptions {
  double min_r_squared = 0.98;
  int threads = 1;
};

/// Evaluates covering_number on a geometric grid of `grid_size` radii from
/// delta_min to delta_max and fits log N against log(1/delta) by least
/// squares. Radii whose count equals the cloud size are left out of the fit.
DimensionEstimate estimate_minkowski(const PointCloud& cloud, double delta_min,
                                     double delta_max, int grid_size,
                                     const EstimateOptions& options = {});

/// `points` geometrically spaced values from lo to hi inclusive.
std::vector<double> geometric_grid(double lo, double hi, int points);

}  // namespace lowdim
