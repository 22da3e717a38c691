#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sobcomp/discretize.hpp"
#include "sobcomp/manifold.hpp"

namespace sobcomp {

enum class LevelMapKind { Radial, LpRadial, BlockRadial, QuasiRadial, BulgedCounterexample, PoleDistance };

std::string to_string(LevelMapKind kind);

// A map phi: M -> R^n evaluated in the chart of M.
class LevelMap {
 public:
  // |x| in the chart.
  static LevelMap radial(int m);
  // (sum |x_i|^ell)^(1/ell); ell may be +infinity.
  static LevelMap lp_radial(int m, double ell);
  // Block norms |x_B|_{r_B} over consecutive blocks starting at `offset`.
  // Coordinates outside the blocks are free (the levels are then unbounded).
  // A block of size 1 maps to the signed coordinate.
  static LevelMap block_radial(int m, std::vector<int> blocks, std::vector<double> exponents, int offset = 0);
  // Homogeneous distance for delta_t = diag(t^{a_i}): rho(delta_t x) = t rho(x).
  static LevelMap quasi_radial(std::vector<double> dilation_exponents);
  // r (1 + chi(r) g(r^2 theta)) on R^2, g a bump of the given height on [-pi, pi],
  // chi a smooth cutoff equal to 0 for r <= 1 and 1 for r >= 2.
  static LevelMap bulged(double height = 1.0);
  static LevelMap pole_distance(const ManifoldModel& M);
  static LevelMap from_json(const nlohmann::json& j, const ManifoldModel& M);
  nlohmann::json to_json() const;

  LevelMapKind kind() const { return kind_; }
  int source_dim() const { return m_; }
  int target_dim() const { return n_; }
  // Analytic constant where known; +infinity when only window estimates exist.
  double lipschitz_constant() const { return lipschitz_; }
  bool has_free_coordinates() const;
  double bulge_height() const { return height_; }
  const std::vector<int>& blocks() const { return blocks_; }
  const std::vector<double>& exponents() const { return exponents_; }
  int offset() const { return offset_; }
  double ell() const { return ell_; }

  Vec evaluate(const Point& x) const;
  double evaluate_scalar(const Point& x) const { return evaluate(x)[0]; }

  // True on the measure-zero set where the map is not differentiable.
  bool is_singular(const Point& x) const;
  // n x m differential in the chart: analytic where available, else central differences.
  Mat differential(const Point& x) const;
  Mat finite_difference_differential(const Point& x, double step = 1e-6) const;
  // sqrt(det(D G^{-1} D^T)) with the metric G of M; DomainError at singular points.
  double normal_jacobian(const Point& x, const ManifoldModel& M) const;

  // Pole-distance window containing {|phi - z|_inf < h}; hi is +inf when unbounded.
  void shell_radial_bounds(const Vec& z, double h, const ManifoldModel& M, double& lo, double& hi) const;
  // Known points on the level set phi = z (may be empty).
  std::vector<Point> level_hints(const Vec& z, const ManifoldModel& M) const;
  // Newton projection onto phi = z in the chart. Returns false when it fails.
  bool project_to_level(Point& x, const Vec& z, const ManifoldModel& M) const;

  // Parameters of the bulge: g(s) and the cutoff chi(r).
  double bulge_g(double s) const;
  static double smooth_cutoff(double r);

 private:
  LevelMap() = default;

  LevelMapKind kind_ = LevelMapKind::Radial;
  int m_ = 2;
  int n_ = 1;
  double ell_ = 2.0;
  std::vector<int> blocks_;
  std::vector<double> exponents_;
  int offset_ = 0;
  double height_ = 1.0;
  double lipschitz_ = 1.0;
  ManifoldModel pole_model_ = ManifoldModel::euclidean(2);
};

// Estimated sup of |phi(x) - phi(y)| / d(x, y) over sampled nearby pairs in B(pole, L).
double estimate_lipschitz(const LevelMap& phi, const ManifoldModel& M, double window_radius, std::size_t pairs,
                          std::uint64_t seed);

enum class PsiMethod { Auto, Shell, ClosedForm };
enum class ShellWindow { Tight, FullBall };

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::string method;
};

struct PsiOptions {
  PsiMethod method = PsiMethod::Auto;
  ShellWindow window = ShellWindow::Tight;
  // Caps the sampling window; required when levels are unbounded.
  double window_radius = 0.0;
  std::uint64_t seed = 3;
  bool quasi_monte_carlo = false;
};

// Coarea weight Psi(z) = vol{|phi - z|_inf < h} / (2h)^n, or the closed form.
Estimate weight_psi(const LevelMap& phi, const ManifoldModel& M, const Vec& z, double h, std::size_t samples,
                    const PsiOptions& opts = {});
double default_psi_width(const Vec& z);

struct WeightTable {
  std::vector<Vec> z;
  std::vector<double> values;
  std::vector<double> standard_errors;
  std::string method;
  double shell_width_factor = 0.01;
  std::size_t samples = 0;
};

WeightTable weight_table(const LevelMap& phi, const ManifoldModel& M, const std::vector<double>& z_grid,
                         std::size_t samples, const PsiOptions& opts = {});
void write_weight_table_csv(const WeightTable& table, const std::string& path);

// Psi-mass of phi^{-1}(z) inside B(y, r): vol(B(y,r) and shell) / (2h)^n.
// Uses the pole-centered sample set carried by the frame, so equal masses are
// reproduced exactly at symmetric centers.
Estimate local_level_mass(const LevelMap& phi, const ManifoldModel& M, const Point& y, const Vec& z, double r,
                          double h, std::size_t samples, std::uint64_t seed, const Mat* frame = nullptr,
                          bool quasi_monte_carlo = false);

// Frame field matched to the symmetry of phi (block rotations for block maps).
Mat equivariant_frame(const LevelMap& phi, const ManifoldModel& M, const Point& y);

struct LevelSampleOptions {
  std::size_t shell_samples = 20'000;
  double window_radius = 0.0;
  std::uint64_t seed = 5;
  bool include_hints = true;
};
// Points on phi = z: shell samples projected by Newton, plus hints.
std::vector<Point> sample_level_points(const LevelMap& phi, const ManifoldModel& M, const Vec& z,
                                       std::size_t count, const LevelSampleOptions& opts = {});

struct LevelOptions {
  double psi_width_factor = 0.01;   // h = factor * max(|z|, 1)
  double local_width_factor = 0.05;  // h = factor * r
  std::size_t psi_samples = 200'000;
  std::size_t mc_samples = 100'000;
  // Stage one screens every cell with mc_samples / screen_divisor samples;
  // the top_k cells are re-estimated with mc_samples and a fresh seed.
  std::size_t screen_divisor = 8;
  std::size_t top_k = 8;
  std::uint64_t seed = 17;
  unsigned threads = 0;
  double window_radius = 0.0;
  PsiMethod psi_method = PsiMethod::Auto;
};

struct SupResult {
  double value = 0.0;
  double standard_error = 0.0;
  Vec witness_z;
  Point witness_y;
  std::size_t cells = 0;
  std::vector<double> skipped_levels;
};

std::vector<double> default_level_grid(double A_radius, double r, std::size_t count);

// Approximates the sup over z in the grid and sampled y outside B(pole, A) of
// (level mass in B(y, r)) / Psi(z).
SupResult delta_r(const LevelMap& phi, const ManifoldModel& M, double A_radius, double r,
                  const std::vector<double>& z_grid, std::size_t y_samples, const LevelOptions& opts = {});

struct ThicknessResult {
  double ratio = 1.0;
  double standard_error = 0.0;
  double witness_z = 0.0;
  Point inf_point;
  Point sup_point;
  std::vector<double> per_level;
};

ThicknessResult thickness_ratio(const LevelMap& phi, const ManifoldModel& M, double A_radius, double r,
                                const std::vector<double>& z_grid, std::size_t y_per_level,
                                const LevelOptions& opts = {});

struct TestProfile {
  std::string name;
  std::function<double(double)> h;
  double support_lo = 0.0;
  double support_hi = 0.0;
  // levels at which far centers are sought
  std::vector<double> focus_levels;
};

// Smooth bumps of several widths near level `z0`, plus a wide profile.
std::vector<TestProfile> default_profile_family(double z0, double r);

struct SigmaResult {
  double sigma = 0.0;
  double standard_error = 0.0;
  std::size_t j_R = 0;
  double eps_thick = 1.0;
  double bound = 0.0;  // 1 / (eps_thick * j_R)
  Point witness_x;
  std::string witness_profile;
  std::vector<Point> chain;
};

// Scalar maps only: the denominator is a quadrature of h^q Psi over R.
SigmaResult sigma_R(const LevelMap& phi, const ManifoldModel& M, double R, double r,
                    const std::vector<TestProfile>& family, double q = 2.0, const LevelOptions& opts = {});

// Greedy maximal chain of pairwise disjoint r-balls centered on a level set,
// taken in order of distance from `seed_point`.
std::vector<Point> disjoint_ball_chain(const ManifoldModel& M, const Point& seed_point,
                                       const std::vector<Point>& level_points, double r);

struct LevelDiameterPoint {
  double distance_from_pole = 0.0;
  double diameter = 0.0;
  std::size_t level_samples = 0;
  bool low_confidence = false;
  bool touches_window = false;
};

struct LevelDiameterCurve {
  std::vector<LevelDiameterPoint> points;
  std::string verdict;  // "level-coercive (empirical)", "not level-coercive", "inconclusive"
  std::vector<double> lower_envelope;
};

LevelDiameterCurve level_diameter_curve(const LevelMap& phi, const ManifoldModel& M,
                                        const std::vector<Point>& base_points, const LevelSampleOptions& opts);

// Integral of f over B(pole, L) by volume-stratified Monte Carlo in radial shells.
Estimate integrate_over_manifold(const ManifoldModel& M, const ScalarField& f, double window_radius,
                                 std::size_t samples, std::size_t strata, std::uint64_t seed);

// Integral of h(z) Psi(z) over a uniform table grid (composite Simpson, trapezoid
// on a trailing odd panel), with the standard error propagated from the table.
Estimate coarea_quadrature(const std::function<double(double)>& h, const WeightTable& table);

enum class TrendVerdict { Vanishes, BoundedBelow, Inconclusive };
std::string to_string(TrendVerdict v);

// Vanishes: nonincreasing within 3 sigma and last/first <= 0.6.
// BoundedBelow: last/first >= 0.6 (within 3 sigma).
TrendVerdict classify_trend(const std::vector<double>& values, const std::vector<double>& errors);

struct DiagnosticsReport {
  std::string map_kind;
  std::vector<double> radii;
  std::vector<SupResult> delta;
  std::vector<SigmaResult> sigma;
  double eps_thick = 1.0;
  LevelDiameterCurve diameters;
  TrendVerdict delta_verdict = TrendVerdict::Inconclusive;
  TrendVerdict sigma_verdict = TrendVerdict::Inconclusive;
  nlohmann::json metadata;
};

nlohmann::json to_json(const DiagnosticsReport& report);

struct DiagnosticsOptions {
  double r = 1.0;
  std::size_t levels = 8;
  std::size_t y_samples = 32;
  bool sigma = true;
  double q = 2.0;
  LevelOptions level;
};

// delta_r(B(pole, R)) and sigma_R over the radii, the level-diameter curve
// through exp(e_1, R), and trend verdicts.
DiagnosticsReport run_diagnostics(const LevelMap& phi, const ManifoldModel& M, const std::vector<double>& radii,
                                  const DiagnosticsOptions& opts = {});

}  // namespace sobcomp
