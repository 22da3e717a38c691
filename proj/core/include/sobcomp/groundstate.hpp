#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sobcomp/discretize.hpp"
#include "sobcomp/levelmap.hpp"
#include "sobcomp/manifold.hpp"

namespace sobcomp {

// Exponents of the constrained problem: 1 < p < m and p < q < p* = mp / (m - p).
class SpaceParams {
 public:
  SpaceParams(double p, double q, int m);
  double p() const { return p_; }
  double q() const { return q_; }
  int m() const { return m_; }
  double critical_exponent() const { return m_ * p_ / (m_ - p_); }

 private:
  double p_;
  double q_;
  int m_;
};

// Uniform grid 0 = r_0 < ... < r_K = R_max with the coarea weight at nodes
// and midpoints, and its integral over the dual cell of each node.
struct RadialGrid {
  double dr = 0.01;
  std::vector<double> r;
  std::vector<double> psi;      // Psi(r_k)
  std::vector<double> psi_mid;  // Psi(r_k + dr/2), k < K
  // int of Psi over [r_k - dr/2, r_k + dr/2] clipped to [0, R_max] (Simpson per half cell)
  std::vector<double> volume;

  std::size_t size() const { return r.size(); }
  double r_max() const { return r.back(); }

  static std::shared_ptr<const RadialGrid> from_function(const std::function<double(double)>& psi, double r_max,
                                                         double dr);
  // Psi = area of the geodesic sphere of radius r (pole-distance map).
  static std::shared_ptr<const RadialGrid> from_manifold(const ManifoldModel& M, double r_max, double dr);
  // Linear interpolation of a tabulated weight; the table must cover [0, r_max].
  static std::shared_ptr<const RadialGrid> from_table(const WeightTable& table, double r_max, double dr);
};

struct RadialProfile {
  std::shared_ptr<const RadialGrid> grid;
  std::vector<double> f;

  // Linear interpolation; 0 beyond R_max.
  double at(double r) const;
  // DataError unless sizes match, values are finite and f_K = 0.
  void validate() const;
};

// exp(-(r - center)^2 / (2 width^2)) with the last node set to 0.
RadialProfile gaussian_profile(std::shared_ptr<const RadialGrid> grid, double center = 0.0, double width = 1.0);

// sum_k |D_k|^p Psi(r_{k+1/2}) dr + sum_k |f_k|^p V_k, with forward
// differences D_k and dual-cell volumes V_k.
double discrete_energy(const RadialProfile& f, const SpaceParams& params);
// Gradient with respect to f_0..f_K; the Dirichlet component is returned as 0.
std::vector<double> discrete_energy_gradient(const RadialProfile& f, const SpaceParams& params);
// (sum_k |f_k|^q V_k)^(1/q)
double constraint_norm(const RadialProfile& f, double q);

// Discrete Euler-Lagrange operator -(1/Psi) d_r(Psi |f'|^{p-2} f') + |f|^{p-2} f in
// finite-volume form (flux differences over V_k). Node 0 uses the Neumann cell,
// so Psi(0) = 0 is never divided by; entry K is 0.
std::vector<double> el_operator(const RadialProfile& f, const SpaceParams& params);
// L^2(Psi dr) norm of el_operator(f) - |f|^{q-2} f over nodes 0..K-1.
double el_residual(const RadialProfile& f, const SpaceParams& params);
// Same, with the right-hand side scaled by mu.
double el_residual(const RadialProfile& f, const SpaceParams& params, double mu);

struct MinimizeOptions {
  double tol = 1e-10;  // relative energy decrease over `window` iterations
  int window = 50;
  int max_iter = 20'000;
  double initial_step = 0.5;
  int max_backtracks = 60;
  // Keep every n-th iterate (0 keeps none).
  int record_every = 0;
};

struct SolverResult {
  RadialProfile u0;  // unit L^q_Psi norm
  double kappa = 0.0;
  double mu = 0.0;
  double lambda_scale = 0.0;
  RadialProfile u;  // lambda_scale * u0
  double residual_u0 = 0.0;
  double residual_u = 0.0;
  double nehari_relative = 0.0;
  double constraint_error = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy_log;
  std::vector<RadialProfile> iterates;
};

// Projected gradient on {constraint_norm = 1}: the energy gradient is
// preconditioned by the weighted H^1 matrix, projected onto the tangent space
// of the constraint, followed by |.| and renormalization. Backtracking keeps
// the energy strictly decreasing.
SolverResult minimize(const SpaceParams& params, const RadialProfile& init, const MinimizeOptions& opts = {});

// Least-squares multiplier of L(u0) against |u0|^{q-2} u0.
double fit_multiplier(const RadialProfile& u0, const SpaceParams& params);
// lambda_scale * u0 with lambda_scale = mu^{1/(q-p)}; fills u, residuals and the
// Nehari check. NumericalError when mu <= 0.
RadialProfile rescale_to_EL(SolverResult& result, const SpaceParams& params);

struct ConcentrationReport {
  std::vector<double> sup;
  std::vector<double> sup_standard_error;
  std::vector<double> argmax_radius;
  std::vector<Point> argmax;
  std::string verdict;  // "tight", "vanishing", "escaping", "inconclusive"
};

// Spotlight masses sup_y int_{B(y, nu eps)} |u|^q over net points, tracked along a sequence.
ConcentrationReport concentration_diagnostic(const std::vector<ScalarField>& sequence, const Discretization& net,
                                             double q, std::size_t samples = 4'000, std::uint64_t seed = 31);
ConcentrationReport concentration_diagnostic(const std::vector<RadialProfile>& iterates, const Discretization& net,
                                             double q, std::size_t samples = 4'000, std::uint64_t seed = 31);

struct GroundStateConfig {
  double p = 2.0;
  double q = 4.0;
  nlohmann::json manifold = {{"kind", "euclidean"}, {"dim", 3}};
  double r_max = 15.0;
  double dr = 0.01;
  double tol = 1e-10;
  int max_iter = 20'000;
  std::uint64_t seed = 1;
  double init_center = 0.0;
  double init_width = 1.0;
  // Relative amplitude of seeded noise added to the initial bump.
  double init_noise = 0.0;

  static GroundStateConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct GroundStateRun {
  GroundStateConfig config;
  SolverResult result;
};

GroundStateRun solve_ground_state(const GroundStateConfig& config);
nlohmann::json summary_json(const GroundStateRun& run);
void write_profile_csv(const SolverResult& result, const std::string& path);

}  // namespace sobcomp
