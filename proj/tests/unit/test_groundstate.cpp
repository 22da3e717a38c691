#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles/quadrature.hpp"
#include "oracles/radial_shooting.hpp"
#include "oracles/spotlight.hpp"
#include "sobcomp/errors.hpp"
#include "sobcomp/groundstate.hpp"

using namespace sobcomp;

namespace {

const SpaceParams P24(2.0, 4.0, 3);
const ManifoldModel E3 = ManifoldModel::euclidean(3);

std::shared_ptr<const RadialGrid> grid(double r_max = 15.0, double dr = 0.01) {
  return RadialGrid::from_manifold(E3, r_max, dr);
}

RadialProfile profile_of(std::shared_ptr<const RadialGrid> g, const std::function<double(double)>& f) {
  RadialProfile p;
  p.grid = g;
  for (double r : g->r) p.f.push_back(f(r));
  p.f.back() = 0.0;
  return p;
}

RadialProfile random_profile(std::shared_ptr<const RadialGrid> g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = 1.0 + 0.5 * u(rng), c = 2 * u(rng);
  return profile_of(g, [&](double r) { return std::exp(-b * r) * (1.0 + a * std::sin(c * r)) + 0.1 * u(rng); });
}

// Cancellation in a central difference of an energy of size E.
double fd_roundoff(double E, double h) { return 10 * std::numeric_limits<double>::epsilon() * E / h; }

double solve_kappa(double r_max, double dr) {
  GroundStateConfig cfg;
  cfg.r_max = r_max;
  cfg.dr = dr;
  return solve_ground_state(cfg).result.kappa;
}

}  // namespace

TEST(SpaceParams, Validation) {
  EXPECT_NO_THROW(SpaceParams(2.0, 4.0, 3));
  EXPECT_DOUBLE_EQ(SpaceParams(2.0, 4.0, 3).critical_exponent(), 6.0);
  EXPECT_THROW(SpaceParams(3.0, 4.0, 3), DomainError);
  EXPECT_THROW(SpaceParams(1.0, 2.0, 3), DomainError);
  EXPECT_THROW(SpaceParams(2.0, 6.0, 3), DomainError);
  EXPECT_THROW(SpaceParams(2.0, 2.0, 3), DomainError);
}

TEST(RadialProfile, Validation) {
  RadialProfile p = gaussian_profile(grid(2.0, 0.1));
  EXPECT_NO_THROW(p.validate());
  p.f.back() = 1.0;
  EXPECT_THROW(p.validate(), DataError);
  p.f.back() = 0.0;
  p.f[3] = NAN;
  EXPECT_THROW(p.validate(), DataError);
  p.f.pop_back();
  EXPECT_THROW(p.validate(), DataError);
  EXPECT_THROW(grid(1.0, 0.3), DomainError);
}

TEST(DiscreteEnergy, Examples) {
  const auto g = grid(5.0, 0.01);
  EXPECT_EQ(discrete_energy(profile_of(g, [](double) { return 0.0; }), P24), 0.0);
  EXPECT_EQ(constraint_norm(profile_of(g, [](double) { return 0.0; }), 4.0), 0.0);
  // constant c with a Dirichlet drop in the last cell: c^2 times the volume before R_max plus one step
  const double c = 1.5;
  const RadialProfile k = profile_of(g, [c](double) { return c; });
  const double vol = E3.ball_volume(5.0) - g->volume.back();
  const double step = c * c / (g->dr * g->dr) * g->psi_mid.back() * g->dr;
  EXPECT_NEAR(discrete_energy(k, P24), c * c * vol + step, 1e-9 * (c * c * vol + step));
}

TEST(DiscreteEnergy, ExponentialProfileMatchesQuadrature) {
  const auto g = grid(20.0, 0.01);
  const RadialProfile f = profile_of(g, [](double r) { return std::exp(-r); });
  const double E = oracle::integrate([](double r) { return 2 * std::exp(-2 * r) * 4 * M_PI * r * r; }, 0.0, 20.0);
  EXPECT_NEAR(E, 2 * M_PI, 1e-9);
  EXPECT_NEAR(discrete_energy(f, P24), E, 0.005 * E);
  const double Q = oracle::integrate([](double r) { return std::exp(-4 * r) * 4 * M_PI * r * r; }, 0.0, 20.0);
  EXPECT_NEAR(Q, M_PI / 8, 1e-9);
  EXPECT_NEAR(constraint_norm(f, 4.0), std::pow(Q, 0.25), 0.005 * std::pow(Q, 0.25));
}

TEST(DiscreteEnergy, HomogeneityAndSymmetrization) {
  std::mt19937_64 rng(3);
  const auto g = grid(6.0, 0.02);
  for (int t = 0; t < 10; ++t) {
    RadialProfile f = random_profile(g, rng);
    RadialProfile scaled = f;
    for (double& v : scaled.f) v *= 3.0;
    EXPECT_NEAR(constraint_norm(scaled, 4.0), 3.0 * constraint_norm(f, 4.0), 1e-12 * constraint_norm(scaled, 4.0));
    RadialProfile a = f;
    for (double& v : a.f) v = std::abs(v);
    EXPECT_LE(discrete_energy(a, P24), discrete_energy(f, P24));
  }
}

TEST(DiscreteEnergy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const auto g = grid(3.0, 0.05);
  for (double p : {2.0, 2.5}) {
    const SpaceParams sp(p, p + 0.5, 3);
    for (int t = 0; t < 10; ++t) {
      RadialProfile f = random_profile(g, rng);
      const std::vector<double> grad = discrete_energy_gradient(f, sp);
      const double h = 1e-6;
      for (std::size_t j = 0; j + 1 < f.f.size(); j += 7) {
        RadialProfile a = f, b = f;
        a.f[j] += h;
        b.f[j] -= h;
        const double fd = (discrete_energy(a, sp) - discrete_energy(b, sp)) / (2 * h);
        EXPECT_NEAR(grad[j], fd, 1e-5 * std::abs(fd) + fd_roundoff(discrete_energy(f, sp), h)) << "p=" << p << " j=" << j;
      }
      EXPECT_EQ(grad.back(), 0.0);
    }
  }
}

TEST(DiscreteEnergy, GradientForPThree) {
  // p = 3 needs m = 4 so that p < m
  std::mt19937_64 rng(7);
  const SpaceParams sp(3.0, 4.0, 4);
  const auto g = RadialGrid::from_manifold(ManifoldModel::euclidean(4), 3.0, 0.05);
  for (int t = 0; t < 10; ++t) {
    RadialProfile f = random_profile(g, rng);
    const std::vector<double> grad = discrete_energy_gradient(f, sp);
    for (std::size_t j = 0; j + 1 < f.f.size(); j += 5) {
      RadialProfile a = f, b = f;
      a.f[j] += 1e-6;
      b.f[j] -= 1e-6;
      const double fd = (discrete_energy(a, sp) - discrete_energy(b, sp)) / 2e-6;
      EXPECT_NEAR(grad[j], fd, 1e-5 * std::abs(fd) + fd_roundoff(discrete_energy(f, sp), 1e-6)) << "j=" << j;
    }
  }
}

TEST(ElResidual, Examples) {
  const auto g = grid(15.0, 0.01);
  EXPECT_EQ(el_residual(profile_of(g, [](double) { return 0.0; }), P24), 0.0);
  std::mt19937_64 rng(9);
  EXPECT_GT(el_residual(random_profile(g, rng), P24), 1.0);
}

TEST(ElResidual, SecondOrderOnTheShootingSolution) {
  std::vector<double> res;
  for (double dr : {0.02, 0.01, 0.005}) {
    const oracle::ShootingSolution sol = oracle::shooting_ground_state(3, dr);
    ASSERT_GE(sol.r_cut, 12.0);
    const auto g = grid(12.0, dr);
    RadialProfile u;
    u.grid = g;
    u.f.assign(sol.u.begin(), sol.u.begin() + static_cast<std::ptrdiff_t>(g->size()));
    u.f.back() = 0.0;
    // L^2(Psi dr) norm over the interior, without the Dirichlet-adjacent node where
    // the truncation jump dominates
    const std::vector<double> L = el_operator(u, P24);
    double s = 0.0;
    for (std::size_t j = 0; j + 2 < g->size(); ++j) {
      const double e = L[j] - u.f[j] * u.f[j] * u.f[j];
      s += e * e * g->volume[j];
    }
    res.push_back(std::sqrt(s));
    EXPECT_LE(res.back(), 80 * dr * dr) << "dr=" << dr;
  }
  EXPECT_NEAR(res[0] / res[1], 4.0, 0.5);
  EXPECT_NEAR(res[1] / res[2], 4.0, 0.5);
}

TEST(Minimize, ConvergesToTheShootingOracle) {
  const auto g = grid();
  MinimizeOptions o;
  o.record_every = 1;
  SolverResult r = minimize(P24, gaussian_profile(g), o);
  ASSERT_TRUE(r.converged);
  EXPECT_GT(r.kappa, 0.0);
  for (std::size_t i = 1; i < r.energy_log.size(); ++i) EXPECT_LE(r.energy_log[i], r.energy_log[i - 1]);
  for (const RadialProfile& it : r.iterates) {
    EXPECT_NEAR(constraint_norm(it, 4.0), 1.0, 1e-8);
    for (double v : it.f) EXPECT_GE(v, 0.0);
  }
  const oracle::ShootingSolution sol = oracle::shooting_ground_state(3, 0.01);
  EXPECT_NEAR(r.kappa, sol.kappa(), 0.01 * sol.kappa());

  rescale_to_EL(r, P24);
  EXPECT_NEAR(r.lambda_scale, std::sqrt(r.mu), 1e-12 * r.lambda_scale);
  EXPECT_LE(r.nehari_relative, 1e-3);
  // the rescaled profile is the solution with unit coefficient
  EXPECT_NEAR(r.u.f[0], sol.u0, 0.01 * sol.u0);
}

TEST(Minimize, RefinementAndTruncationStability) {
  GroundStateConfig cfg;
  const GroundStateRun coarse = solve_ground_state(cfg);
  cfg.dr = 0.005;
  const GroundStateRun fine = solve_ground_state(cfg);
  EXPECT_LT(std::abs(fine.result.lambda_scale / coarse.result.lambda_scale - 1.0), 0.005);
  EXPECT_LT(std::abs(solve_kappa(25.0, 0.01) / solve_kappa(15.0, 0.01) - 1.0), 0.001);
}

TEST(Minimize, OffCenterStartReachesTheSameMinimizer) {
  GroundStateConfig cfg;
  const double k0 = solve_ground_state(cfg).result.kappa;
  cfg.init_center = 3.0;
  cfg.init_noise = 0.1;
  EXPECT_NEAR(solve_ground_state(cfg).result.kappa, k0, 1e-4 * k0);
}

TEST(Minimize, HyperbolicKappaIsPositive) {
  GroundStateConfig cfg;
  cfg.manifold = ManifoldModel::hyperbolic(3).to_json();
  cfg.r_max = 10.0;
  const GroundStateRun run = solve_ground_state(cfg);
  EXPECT_TRUE(run.result.converged);
  EXPECT_GT(run.result.kappa, 0.0);
  EXPECT_LE(run.result.nehari_relative, 1e-3);
}

TEST(Rescale, DegenerateMultiplierIsRejected) {
  // <L u, |u|^{q-2} u> integrates by parts to a positive sum for every nonzero u,
  // so the multiplier fit can only break down on the zero profile
  SolverResult r;
  r.u0 = profile_of(grid(5.0, 0.05), [](double) { return 0.0; });
  EXPECT_THROW(rescale_to_EL(r, P24), NumericalError);
  r.u0 = profile_of(grid(5.0, 0.05), [](double x) { return -std::exp(-x); });
  EXPECT_GT(fit_multiplier(r.u0, P24), 0.0);
}

TEST(Config, JsonRoundTripAndErrors) {
  GroundStateConfig cfg;
  cfg.p = 2.5;
  cfg.q = 3.0;
  cfg.r_max = 12.0;
  cfg.seed = 9;
  EXPECT_EQ(GroundStateConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
  EXPECT_THROW(GroundStateConfig::from_json(nlohmann::json::array()), DataError);
  EXPECT_THROW(GroundStateConfig::from_json({{"p", "two"}}), DataError);
}

TEST(Concentration, ConvergedIteratesAreTight) {
  const ManifoldModel E3m = E3;
  MinimizeOptions o;
  o.record_every = 5;
  const SolverResult r = minimize(P24, gaussian_profile(grid(), 0.0, 2.0), o);
  NetOptions no;
  no.coverage_samples = 20'000;
  const Discretization net = greedy_net(E3m, 4.0, 1.0, no);
  const ConcentrationReport rep = concentration_diagnostic(r.iterates, net, 4.0, 2'000);
  EXPECT_EQ(rep.verdict, "tight");
  EXPECT_LE(rep.argmax_radius.back(), 2.0 * net.nu * net.epsilon);
}

TEST(Concentration, TranslatedAndSpreadingFamilies) {
  const ManifoldModel E2 = ManifoldModel::euclidean(2);
  NetOptions no;
  no.coverage_samples = 20'000;
  const Discretization net = greedy_net(E2, 14.0, 1.0, no);
  const double q = 2.0;

  std::vector<ScalarField> translated;
  for (int k = 0; k < 4; ++k) {
    const Point c = E2.exp_map(Vec::Unit(2, 0), 3.0 * k);
    translated.push_back([c](const Point& x) { return bump_profile((x - c).norm() / 0.3); });
  }
  const ConcentrationReport esc = concentration_diagnostic(translated, net, q);
  EXPECT_EQ(esc.verdict, "escaping");
  for (double s : esc.sup) EXPECT_NEAR(s, esc.sup.front(), 0.1 * esc.sup.front());

  std::vector<ScalarField> spreading;
  const std::vector<double> ks{1.0, 2.0, 4.0, 8.0};
  for (double k : ks)
    spreading.push_back([k, q](const Point& x) { return std::pow(k, -2.0 / q) * bump_profile(x.norm() / k); });
  const ConcentrationReport van = concentration_diagnostic(spreading, net, q, 8'000);
  EXPECT_EQ(van.verdict, "vanishing");
  const double R = net.nu * net.epsilon;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double oracle_sup = oracle::spreading_sup(ks[i], q, R);
    EXPECT_NEAR(van.sup[i], oracle_sup, std::max(3 * van.sup_standard_error[i], 0.05 * oracle_sup)) << "k=" << ks[i];
  }
  EXPECT_THROW(concentration_diagnostic(std::vector<ScalarField>{translated[0]}, net, q), DomainError);
}
