#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sobcomp/manifold.hpp"

namespace sobcomp {

using ScalarField = std::function<double(const Point&)>;
// Frame used when transporting pole-centered samples to a ball center.
using FrameField = std::function<Mat(const Point&)>;

struct Discretization {
  ManifoldModel manifold = ManifoldModel::euclidean(2);
  std::vector<Point> points;
  double epsilon = 1.0;
  int nu = 1;
  double domain_radius = 1.0;
  // Partition of point indices, classes in nondecreasing size. Empty if not orbital.
  std::vector<std::vector<std::size_t>> quasiorbits;
  // Finite-window stand-in for unbounded growth of quasiorbit sizes.
  bool cardinality_grows = false;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
  // quasiorbit index per point, -1 when unassigned
  std::vector<int> quasiorbit_of_points() const;
  nlohmann::json metadata() const;
};

struct NetOptions {
  std::uint64_t seed = 1;
  // 0 picks a budget from the packing bound of the window
  std::size_t candidate_budget = 0;
  std::size_t coverage_samples = 100'000;
  int max_repair_rounds = 64;
};

// Maximal epsilon-separated subset of B(pole, L), grown greedily from the pole
// over a low-discrepancy candidate stream and repaired until a sampled
// covering check finds no hole.
Discretization greedy_net(const ManifoldModel& M, double domain_radius, double epsilon, const NetOptions& opts = {});

// Wraps given points; checks separation.
Discretization net_from_points(const ManifoldModel& M, std::vector<Point> points, double epsilon, int nu,
                               double domain_radius);

// Concentric rings about the pole in a 2-D model, equally spaced in angle.
// Each ring is one quasiorbit (the pole is the first).
Discretization rotational_orbital_net(const ManifoldModel& M, double domain_radius, double epsilon);

// Label: distance from the pole rounded to multiples of `spacing`, ties to
// the smaller label.
double round_label(double value, double spacing);
std::function<double(const Point&)> pole_distance_label(const ManifoldModel& M, double spacing);

Discretization orbital_partition(const Discretization& net, const std::function<double(const Point&)>& orbit_label);

struct CoveringReport {
  std::size_t samples = 0;
  std::size_t covered = 0;
  double fraction = 1.0;
  double min_separation = 0.0;
};
// Fraction of uniform samples in B(pole, L - nu*eps) within nu*eps of a net point.
CoveringReport check_covering(const Discretization& net, std::size_t samples, std::uint64_t seed);
// Exhaustive minimum pairwise distance.
double min_pairwise_distance(const Discretization& net);

// Spatial index over a growing point set, bucketed by distance from the pole.
// Neighbour queries only visit buckets allowed by the triangle inequality.
class NetIndex {
 public:
  NetIndex(const ManifoldModel& M, const std::vector<Point>& points, double bucket_width);
  // Registers points[i]; points must already hold it.
  void add(std::size_t i);
  // Calls visit(i, d) for every indexed point with d(center, point_i) < R;
  // stops early when visit returns false.
  void for_each_within(const Point& center, double R, const std::function<bool(std::size_t, double)>& visit) const;
  std::size_t count_within(const Point& center, double R) const;
  bool any_within(const Point& center, double R) const;

 private:
  const ManifoldModel* M_;
  const std::vector<Point>* points_;
  double width_;
  std::vector<std::vector<std::size_t>> buckets_;
  std::vector<double> pole_distance_;
};

std::size_t count_in_ball(const Discretization& net, const Point& center, double R);

struct BallCountReport {
  std::size_t n_R = 0;
  std::size_t centers = 0;
  Point argmax_center;
};
// Maximum of count_in_ball over random centers drawn in the window.
BallCountReport empirical_n_R(const Discretization& net, double R, std::size_t centers, std::uint64_t seed);

struct SeparatedSelection {
  std::vector<std::size_t> indices;
  bool shortfall = false;
  std::size_t n_R = 0;
  bool cardinality_condition = false;  // #Gamma_i > j * n_R
};
SeparatedSelection select_separated(const Discretization& net, std::size_t quasiorbit_index, const Point& x,
                                    double R, std::size_t j, std::uint64_t seed = 7);

struct LocalMassProfile {
  std::vector<double> values;
  std::vector<double> standard_errors;
  double supremum = 0.0;
  std::size_t argmax = 0;
  double ball_radius = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct LocalMassOptions {
  std::size_t samples = 10'000;
  std::uint64_t seed = 11;
  // Defaults to a rotation taking e_1 to the direction of the center.
  FrameField frame;
  bool quasi_monte_carlo = true;
  unsigned threads = 0;  // 0 uses default_threads()
  // Restrict to these net indices; empty means all.
  std::vector<std::size_t> subset;
};

// Monte Carlo estimate of the integral of |u| over B(y, nu*eps) for each net
// point y. All balls reuse the same pole-centered sample set carried over by
// transport, so equal masses are reproduced exactly for invariant u.
LocalMassProfile local_mass_profile(const Discretization& net, const ScalarField& u,
                                    const LocalMassOptions& opts = {});

// Integral of |u| over B(center, r), same estimator as the profile.
std::pair<double, double> ball_mass(const ManifoldModel& M, const Point& center, double r, const ScalarField& u,
                                    std::size_t samples, std::uint64_t seed, const Mat* frame = nullptr,
                                    bool quasi_monte_carlo = true);

// Smooth radial bump exp(1 - 1/(1 - t^2)) on t < 1.
double bump_profile(double t);
// Integral of bump_profile(d(x, .)/radius) over M.
double bump_integral(const ManifoldModel& M, double radius);

// Sum over the quasiorbit of normalized bumps supported in B(x, eps/2).
ScalarField make_canonical_quasisymmetric(const Discretization& net, std::size_t quasiorbit_index);

void write_net_csv(const Discretization& net, const std::string& path);
void write_profile_csv(const LocalMassProfile& profile, const std::string& path);

}  // namespace sobcomp
