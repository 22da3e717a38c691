#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "sobcomp/sampling.hpp"

namespace sobcomp {

inline constexpr int kMaxDim = 8;

// Fixed-capacity vector: chart coordinates and tangent vectors never allocate.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

// Chart coordinates. Euclidean: Cartesian. Hyperbolic: Poincare ball (norm < 1).
// Product S^1 x R^n: (angle in [0, 2pi), x_1..x_n).
using Point = Vec;

enum class ManifoldKind { Euclidean, Hyperbolic, ProductCircleEuclidean };

std::string to_string(ManifoldKind kind);

// Volume of the unit ball in R^m.
double unit_ball_volume(int m);

class ManifoldModel {
 public:
  static ManifoldModel euclidean(int m);
  static ManifoldModel hyperbolic(int m, double curvature = -1.0);
  // S^1 of the given radius times R^n; dim() is n + 1.
  static ManifoldModel product_circle(int n, double circle_radius = 1.0);
  static ManifoldModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  ManifoldKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double curvature() const { return curvature_; }
  double circle_radius() const { return circle_radius_; }
  double injectivity_radius() const;
  double ricci_lower_bound() const;
  double unit_ball_volume_infimum() const;
  std::string name() const;

  Point pole() const;
  bool is_valid(const Point& x) const;
  // Throws DomainError for points outside the chart.
  void validate(const Point& x) const;

  double distance(const Point& x, const Point& y) const;
  double distance_from_pole(const Point& x) const;

  double ball_volume(double r) const;
  double sphere_area(double r) const;

  // Point at geodesic distance r from the pole along a unit tangent direction.
  Point exp_map(const Vec& direction, double r) const;
  // Unit tangent direction at the pole pointing at x (first basis vector at the pole).
  Vec direction_from_pole(const Point& x) const;

  // Isometry taking the pole to `a`, applied to x. Callers that need a frame
  // rotate x about the pole first.
  Point transport(const Point& a, const Point& x) const;

  // Riemannian volume density with respect to Lebesgue measure in the chart.
  double volume_density(const Point& x) const;
  // The metric is diagonal in every supported chart.
  Vec metric_diagonal(const Point& x) const;

  // Bounding box of the chart region containing B(pole, r): per-coordinate lo/hi.
  void chart_box(double r, Vec& lo, Vec& hi) const;

 private:
  ManifoldModel(ManifoldKind kind, int dim, double curvature, double circle_radius);

  ManifoldKind kind_;
  int dim_;
  double curvature_;
  double circle_radius_;
  double unit_ball_volume_;
};

// Wraps an angle into [0, 2pi).
double wrap_angle(double a);
// Signed angle difference in (-pi, pi].
double angle_difference(double a, double b);

// Volume-uniform sampler on the annulus r_inner <= d(pole, x) < r_outer,
// optionally transported to another center. Consumes whole cube points.
class AnnulusSampler {
 public:
  AnnulusSampler(const ManifoldModel& M, double r_inner, double r_outer);

  std::size_t cube_dimension() const { return cube_dim_; }
  const ManifoldModel& manifold() const { return M_; }
  double r_inner() const { return r_inner_; }
  double r_outer() const { return r_outer_; }
  double volume() const { return volume_; }

  // Pole-centered sample.
  Point sample(UnitCubeSource& source) const;
  // Sample centered at `center`; `frame` (dim x dim orthogonal) rotates the
  // pole-centered sample before transport. Pass nullptr for the identity.
  Point sample_at(UnitCubeSource& source, const Point& center, const Mat* frame = nullptr) const;
  // Tangent-space representation of the pole-centered sample: unit direction and radius.
  void sample_polar(UnitCubeSource& source, Vec& direction, double& radius) const;

 private:
  double radius_from_unit(double u) const;

  ManifoldModel M_;
  double r_inner_;
  double r_outer_;
  double volume_;
  std::size_t cube_dim_;
  bool slab_rejection_ = false;
  // Hyperbolic inverse-CDF table
  std::vector<double> table_r_;
  std::vector<double> table_v_;
};

// Standard normal quantile, clamped away from 0 and 1.
double normal_quantile(double u);

}  // namespace sobcomp

namespace sobcomp {

// Rotation taking e_1 to the unit vector d, acting only in span{e_1, d}.
Mat rotation_to(const Vec& d);

// Block-diagonal frame: within each block the rotation takes the block's first
// basis vector to the block's direction at y. Blocks of size 1 get +1. For a
// single block of size 2 this is equivariant under rotations of that block.
Mat block_frame(const Vec& y, const std::vector<int>& blocks);

}  // namespace sobcomp
