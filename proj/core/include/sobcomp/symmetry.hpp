#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sobcomp/discretize.hpp"
#include "sobcomp/levelmap.hpp"
#include "sobcomp/manifold.hpp"

namespace sobcomp {

enum class GroupKind { Rotations, BlockRotations, CircleTimesRotations, SubgroupFixingAxis, Trivial };

std::string to_string(GroupKind kind);

// Acts on chart coordinates: x -> Q x for Euclidean and hyperbolic models;
// (theta, x) -> (theta + shift, Q x) on S^1 x R^n, where Q acts on the R^n part.
struct GroupElement {
  Mat Q;
  double shift = 0.0;
};

// Isometric action of a compact group, with Haar measure replaced by the
// uniform measure on a finite subgroup: cyclic C_K for SO(2) factors, the
// icosahedral rotation group for SO(3), signed permutations of determinant +1
// for SO(d), 4 <= d <= 6. Finite subgroups make T_G an exact projection.
class GroupAction {
 public:
  static GroupAction rotations(const ManifoldModel& M, int K = 64);
  static GroupAction block_rotations(const ManifoldModel& M, std::vector<int> blocks, int K = 64);
  static GroupAction circle_times_rotations(const ManifoldModel& M, int K = 64);
  static GroupAction subgroup_fixing_axis(const ManifoldModel& M, int n, int K = 64);
  static GroupAction trivial(const ManifoldModel& M);
  static GroupAction from_json(const nlohmann::json& j, const ManifoldModel& M);
  nlohmann::json to_json() const;

  GroupKind kind() const { return kind_; }
  const ManifoldModel& manifold() const { return M_; }
  std::size_t size() const { return elements_.size(); }
  int K() const { return K_; }
  const GroupElement& element(std::size_t j) const { return elements_[j]; }
  Point apply(std::size_t j, const Point& x) const;
  std::size_t inverse_index(std::size_t j) const { return inverse_[j]; }

  // A coordinate fixed by every element, if one exists.
  std::optional<int> fixed_coordinate() const;
  // A coordinate moved by the action (used to build witness families).
  int moved_coordinate() const;

 private:
  GroupAction(GroupKind kind, const ManifoldModel& M) : kind_(kind), M_(M) {}
  void finalize();

  GroupKind kind_;
  ManifoldModel M_;
  int K_ = 1;
  std::vector<int> blocks_;
  int axis_n_ = 0;
  std::vector<GroupElement> elements_;
  std::vector<std::size_t> inverse_;
};

// Finite subgroup of SO(d) used for one factor; cyclic of order K when d == 2.
std::vector<Mat> finite_rotation_subgroup(int d, int K);

// max_g d(x, g x), the diameter of the sampled orbit (the elements form a group).
double orbit_diameter(const GroupAction& G, const Point& x);
// Literal max over pairs; quadratic in the group size.
double orbit_diameter_pairwise(const GroupAction& G, const Point& x);

struct CoercivityReport {
  std::vector<double> probe_radii;
  std::vector<double> envelope;          // min sampled orbit diameter at each radius
  std::vector<double> witness_diameter;  // escaping family along a fixed axis (if any)
  std::string verdict;                   // "coercive (empirical)", "not coercive", "inconclusive"
};

CoercivityReport coercivity_verdict(const GroupAction& G, const std::vector<double>& probe_radii,
                                    std::size_t points_per_radius = 32, std::uint64_t seed = 19);

// x -> (1/K) sum_j f(g_j x), summed with a fixed pairwise tree.
ScalarField average_TG(const GroupAction& G, const ScalarField& f);

// Seeded smooth test function: a linear term plus Gaussian bumps (in chart
// coordinates) centered within `scale` of the pole.
ScalarField random_smooth_field(const ManifoldModel& M, std::uint64_t seed, double scale = 2.0, int bumps = 4);

// Polar grid on a 2-D model, aligned with the cyclic sampler so that group
// elements permute grid nodes.
struct PolarGrid {
  ManifoldModel manifold = ManifoldModel::euclidean(2);
  double max_radius = 1.0;
  int radial_nodes = 64;
  int angular_nodes = 128;

  Point node(int i, int k) const;
  double radius(int i) const;
  double cell_volume(int i) const;
};

// sum over nodes of (|grad_d f|^p + |f|^p) * cell volume, with forward
// differences in the radial and angular directions.
double polar_grid_energy(const PolarGrid& grid, const ScalarField& f, double p);

struct QuasisymmetryParams {
  std::size_t base_index = 1;  // quasiorbits are numbered from 1
  double lambda = 1.0;
};

struct QuasiorbitRatio {
  std::size_t quasiorbit = 0;  // numbered from 1
  double max_mass = 0.0;
  double min_mass = 0.0;
  double ratio = 1.0;
  double standard_error = 0.0;
  bool reliable = true;
};

struct QuasisymmetryReport {
  std::vector<QuasiorbitRatio> ratios;
  bool verdict = true;
};

// Per-quasiorbit max/min ball masses of |f|; the bound is checked as
// min >= max / lambda, allowing 3 standard errors.
QuasisymmetryReport quasisymmetry_ratio(const ScalarField& f, const Discretization& net,
                                        const QuasisymmetryParams& params, std::size_t mc_samples,
                                        std::uint64_t seed = 23, FrameField frame = {});

struct DominationReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  bool dominated = true;
};

// Checks |u| <= b f on samples of the annulus R <= d(pole, x) < window_radius.
DominationReport domination_check(const ManifoldModel& M, const ScalarField& u, const ScalarField& f, double b,
                                  double excluded_radius, double window_radius, std::size_t samples,
                                  std::uint64_t seed = 29);

struct PsiKWitness {
  std::vector<ScalarField> functions;
  std::vector<Point> centers;
  double r = 0.0;
  double orbit_bound = 0.0;  // max orbit diameter over the centers
  // Every psi_k vanishes outside B(centers[k], orbit_bound + r).
  double support_radius() const { return orbit_bound + r; }
};

// psi_k(x) = (1/K) sum_g [r - d(g x, x_k)]_+. Throws DomainError when the
// centers are not pairwise farther than 2 (R + r) apart.
PsiKWitness psi_k_witness(const GroupAction& G, const std::vector<Point>& centers, double r);

// Integral of |f|^q over B(center, radius) by Monte Carlo.
Estimate power_integral(const ManifoldModel& M, const ScalarField& f, const Point& center, double radius, double q,
                        std::size_t samples, std::uint64_t seed);

// Fraction of samples (drawn over the union of witness supports) at which two
// or more psi_k are positive.
double support_overlap_fraction(const ManifoldModel& M, const PsiKWitness& w, std::size_t samples,
                                std::uint64_t seed);

void write_grid_csv(const PolarGrid& grid, const std::vector<std::pair<std::string, ScalarField>>& fields,
                    const std::string& path);

}  // namespace sobcomp
