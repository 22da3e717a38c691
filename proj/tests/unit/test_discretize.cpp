#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles/spotlight.hpp"
#include "sobcomp/discretize.hpp"
#include "sobcomp/errors.hpp"

using namespace sobcomp;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

const Discretization& plane_net() {
  static const Discretization net = greedy_net(ManifoldModel::euclidean(2), 10.0, 1.0);
  return net;
}

Discretization circle_net(int n, double radius) {
  const ManifoldModel M = ManifoldModel::euclidean(2);
  std::vector<Point> pts;
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    pts.push_back(vec({radius * std::cos(a), radius * std::sin(a)}));
  }
  Discretization net = net_from_points(M, pts, 1.0, 1, radius + 1.0);
  return orbital_partition(net, [](const Point&) { return 0.0; });
}

}  // namespace

TEST(GreedyNet, PlaneCardinalityWithinAreaBounds) {
  const Discretization& net = plane_net();
  const double L = 10.0, eps = 1.0;
  // disjoint eps/2-balls inside B(L + eps/2); eps-balls covering B(L)
  const double packing = std::pow((L + eps / 2) / (eps / 2), 2);
  const double covering = std::pow(L / eps, 2);
  EXPECT_GE(static_cast<double>(net.size()), covering);
  EXPECT_LE(static_cast<double>(net.size()), packing);
  EXPECT_GE(min_pairwise_distance(net), eps);
}

TEST(GreedyNet, HugeSeparationGivesThePole) {
  const Discretization net = greedy_net(ManifoldModel::euclidean(2), 1.0, 2.5);
  ASSERT_EQ(net.size(), 1u);
  EXPECT_EQ(net.points[0].norm(), 0.0);
}

TEST(GreedyNet, HyperbolicNetIsLarger) {
  const Discretization h = greedy_net(ManifoldModel::hyperbolic(2), 5.0, 1.0);
  const Discretization e = greedy_net(ManifoldModel::euclidean(2), 5.0, 1.0);
  // area ratio 2 pi (cosh 5 - 1) / (25 pi) is about 5.9
  const double area_ratio = 2 * (std::cosh(5.0) - 1) / 25.0;
  EXPECT_GT(h.size(), e.size());
  EXPECT_GT(static_cast<double>(h.size()) / static_cast<double>(e.size()), 0.5 * area_ratio);
}

TEST(GreedyNet, SeparationAndCoveringOnAllModels) {
  for (const ManifoldModel& M :
       {ManifoldModel::euclidean(2), ManifoldModel::hyperbolic(2), ManifoldModel::product_circle(1),
        ManifoldModel::euclidean(3)}) {
    const Discretization net = greedy_net(M, 4.0, 1.0);
    EXPECT_GE(min_pairwise_distance(net), 1.0) << M.name();
    const CoveringReport cov = check_covering(net, 100'000, 3);
    EXPECT_GE(cov.fraction, 0.999) << M.name();
  }
}

TEST(GreedyNet, DeterministicGivenSeed) {
  NetOptions o;
  o.seed = 9;
  const Discretization a = greedy_net(ManifoldModel::euclidean(2), 5.0, 1.0, o);
  const Discretization b = greedy_net(ManifoldModel::euclidean(2), 5.0, 1.0, o);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
  EXPECT_THROW(greedy_net(ManifoldModel::euclidean(2), 5.0, 0.0), DomainError);
}

TEST(GreedyNet, BudgetExhaustionIsANumericalError) {
  NetOptions o;
  o.candidate_budget = 10;
  o.max_repair_rounds = 1;
  EXPECT_THROW(greedy_net(ManifoldModel::euclidean(2), 10.0, 1.0, o), NumericalError);
}

TEST(OrbitalPartition, ClassesSortedAndComplete) {
  const Discretization& net = plane_net();
  const Discretization orb = orbital_partition(net, pole_distance_label(net.manifold, 2 * net.epsilon));
  std::vector<int> seen(net.size(), 0);
  for (std::size_t i = 0; i < orb.quasiorbits.size(); ++i) {
    ASSERT_FALSE(orb.quasiorbits[i].empty());
    if (i > 0) EXPECT_LE(orb.quasiorbits[i - 1].size(), orb.quasiorbits[i].size());
    for (std::size_t idx : orb.quasiorbits[i]) ++seen[idx];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_TRUE(orb.cardinality_grows);
}

TEST(OrbitalPartition, SinglePointNet) {
  const Discretization net = greedy_net(ManifoldModel::euclidean(2), 1.0, 3.0);
  const Discretization orb = orbital_partition(net, pole_distance_label(net.manifold, 2.0));
  ASSERT_EQ(orb.quasiorbits.size(), 1u);
  EXPECT_EQ(orb.quasiorbits[0].size(), 1u);
  EXPECT_FALSE(orb.cardinality_grows);
}

TEST(OrbitalPartition, OuterCircleClassesAreLarger) {
  // rings of radius 10..20 with spacing 2: circumference grows linearly
  const ManifoldModel M = ManifoldModel::euclidean(2);
  std::vector<Point> pts;
  std::vector<std::size_t> expected;
  for (int k = 0; k <= 5; ++k) {
    const double rho = 10.0 + 2.0 * k;
    const int n = static_cast<int>(std::floor(2 * M_PI * rho / 1.5));
    expected.push_back(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) pts.push_back(vec({rho * std::cos(2 * M_PI * j / n), rho * std::sin(2 * M_PI * j / n)}));
  }
  const Discretization net = net_from_points(M, pts, 1.0, 1, 21.0);
  const Discretization orb = orbital_partition(net, pole_distance_label(M, 2.0));
  ASSERT_EQ(orb.quasiorbits.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(orb.quasiorbits[i].size(), expected[i]);
    const double rho = M.distance_from_pole(net.points[orb.quasiorbits[i][0]]);
    EXPECT_NEAR(rho, 10.0 + 2.0 * static_cast<double>(i), 1e-9);
  }
}

TEST(OrbitalPartition, LabelTiesGoToTheSmallerLabel) {
  EXPECT_EQ(round_label(3.0, 2.0), 2.0);
  EXPECT_EQ(round_label(1.0, 2.0), 0.0);
  EXPECT_EQ(round_label(3.01, 2.0), 4.0);
  EXPECT_EQ(round_label(2.99, 2.0), 2.0);
}

TEST(CountInBall, Examples) {
  const Discretization& net = plane_net();
  const Point y = net.points[5];
  EXPECT_EQ(count_in_ball(net, y, 0.5), 1u);
  // a point at distance > R from every net point
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8, 8);
  int found = 0;
  for (int t = 0; t < 2000 && found < 5; ++t) {
    const Point c = vec({u(rng), u(rng)});
    double dmin = 1e9;
    for (const auto& p : net.points) dmin = std::min(dmin, (p - c).norm());
    if (dmin > 0.3) {
      EXPECT_EQ(count_in_ball(net, c, 0.3), 0u);
      ++found;
    }
  }
  EXPECT_GT(found, 0);
  EXPECT_THROW(count_in_ball(net, y, 0.0), DomainError);
}

TEST(CountInBall, EmpiricalNRRespectsPackingBound) {
  const Discretization& net = plane_net();
  // disjoint 1/2-balls inside B(x, 3.5)
  const auto bound = static_cast<std::size_t>(std::pow(3.5 / 0.5, 2));
  EXPECT_EQ(bound, 49u);
  const BallCountReport rep = empirical_n_R(net, 3.0, 1000, 5);
  EXPECT_LE(rep.n_R, bound);
  EXPECT_GT(rep.n_R, 9u);
  EXPECT_EQ(count_in_ball(net, rep.argmax_center, 3.0), rep.n_R);
}

TEST(NetIndexTest, MatchesBruteForce) {
  const Discretization& net = plane_net();
  NetIndex index(net.manifold, net.points, 1.0);
  for (std::size_t i = 0; i < net.size(); ++i) index.add(i);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-11, 11), r(0.1, 4.0);
  for (int t = 0; t < 200; ++t) {
    const Point c = vec({u(rng), u(rng)});
    const double R = r(rng);
    EXPECT_EQ(index.count_within(c, R), count_in_ball(net, c, R));
  }
}

TEST(SelectSeparated, SingleElement) {
  const Discretization net = circle_net(628, 100.0);
  const SeparatedSelection s = select_separated(net, 0, net.points[17], 10.0, 1);
  ASSERT_EQ(s.indices.size(), 1u);
  EXPECT_EQ(s.indices[0], 17u);
  EXPECT_FALSE(s.shortfall);
}

TEST(SelectSeparated, CircleInstance) {
  const Discretization net = circle_net(628, 100.0);
  // arc-length pigeonhole: the circle admits floor(200 pi / 10) points pairwise > 10 apart
  EXPECT_GE(static_cast<int>(std::floor(200 * M_PI / 10)), 5);
  const SeparatedSelection s = select_separated(net, 0, net.points[0], 10.0, 5);
  ASSERT_EQ(s.indices.size(), 5u);
  EXPECT_FALSE(s.shortfall);
  EXPECT_EQ(s.indices[0], 0u);
  for (std::size_t a = 0; a < s.indices.size(); ++a)
    for (std::size_t b = a + 1; b < s.indices.size(); ++b)
      EXPECT_GT(net.manifold.distance(net.points[s.indices[a]], net.points[s.indices[b]]), 10.0);
}

TEST(SelectSeparated, ShortfallAndErrors) {
  const ManifoldModel M = ManifoldModel::euclidean(2);
  Discretization net = net_from_points(M, {vec({0, 0}), vec({1.5, 0})}, 1.0, 1, 3.0);
  net = orbital_partition(net, [](const Point&) { return 0.0; });
  const SeparatedSelection s = select_separated(net, 0, net.points[0], 2.0, 2);
  EXPECT_TRUE(s.shortfall);
  EXPECT_EQ(s.indices.size(), 1u);
  EXPECT_THROW(select_separated(net, 0, vec({5, 5}), 2.0, 2), DomainError);
  EXPECT_THROW(select_separated(net, 3, net.points[0], 2.0, 2), DomainError);
}

TEST(LocalMass, ZeroFunction) {
  LocalMassOptions o;
  o.samples = 2000;
  const LocalMassProfile prof = local_mass_profile(plane_net(), [](const Point&) { return 0.0; }, o);
  for (double v : prof.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(prof.supremum, 0.0);
}

TEST(LocalMass, IndicatorOfOneBall) {
  const Discretization& net = plane_net();
  std::size_t y0 = 0;  // the pole: deep interior
  const Point c = net.points[y0];
  const double R = net.nu * net.epsilon;
  const ManifoldModel M = net.manifold;
  LocalMassOptions o;
  o.samples = 4000;
  const LocalMassProfile prof =
      local_mass_profile(net, [&](const Point& x) { return M.distance(x, c) < R ? 1.0 : 0.0; }, o);
  EXPECT_NEAR(prof.values[y0], M.ball_volume(R), 3 * prof.standard_errors[y0] + 1e-9);
  for (std::size_t i = 0; i < net.size(); ++i) {
    EXPECT_GE(prof.values[i], 0.0);
    if (M.distance(net.points[i], c) > 2 * R) EXPECT_EQ(prof.values[i], 0.0);
  }
  EXPECT_EQ(prof.supremum, *std::max_element(prof.values.begin(), prof.values.end()));
  EXPECT_EQ(prof.values[prof.argmax], prof.supremum);
}

TEST(LocalMass, TranslatedBumpSupremumIsConstant) {
  const Discretization& net = plane_net();
  // a bump narrower than the covering slack nu*eps - rho keeps full capture
  const double rho = 0.3;
  LocalMassOptions o;
  o.samples = 10'000;
  std::vector<double> sups;
  for (int k = 0; k <= 6; ++k) {
    const Point c = vec({1.0 * k, 0.0});
    const LocalMassProfile prof =
        local_mass_profile(net, [&](const Point& x) { return oracle::bump((x - c).norm() / rho); }, o);
    // oracle: ball mass at the offset of the best net point
    const double delta = (net.points[prof.argmax] - c).norm();
    EXPECT_NEAR(prof.supremum, oracle::bump_ball_mass(rho, delta, 1.0), 3 * prof.standard_errors[prof.argmax] + 1e-3);
    sups.push_back(prof.supremum);
  }
  const auto [lo, hi] = std::minmax_element(sups.begin(), sups.end());
  EXPECT_LE(*hi / *lo, 1.1);
}

TEST(LocalMass, AdditiveOnDisjointSupports) {
  const Discretization& net = plane_net();
  const Point a = vec({-3, 0}), b = vec({4, 2});
  auto f = [&](const Point& x) { return oracle::bump((x - a).norm() / 1.5); };
  auto g = [&](const Point& x) { return 2 * oracle::bump((x - b).norm()); };
  LocalMassOptions o;
  o.samples = 3000;
  const auto pf = local_mass_profile(net, f, o), pg = local_mass_profile(net, g, o);
  const auto ps = local_mass_profile(net, [&](const Point& x) { return f(x) + g(x); }, o);
  for (std::size_t i = 0; i < net.size(); ++i) {
    const double se = std::hypot(pf.standard_errors[i], pg.standard_errors[i]);
    EXPECT_NEAR(ps.values[i], pf.values[i] + pg.values[i], 3 * se + 1e-12);
  }
}

TEST(LocalMass, NonFiniteValuesAreDataErrors) {
  LocalMassOptions o;
  o.samples = 1000;
  EXPECT_THROW(local_mass_profile(plane_net(), [](const Point&) { return std::nan(""); }, o), DataError);
}

TEST(CanonicalQuasisymmetric, BallIntegralsAreOne) {
  const ManifoldModel M = ManifoldModel::euclidean(2);
  const Discretization net = rotational_orbital_net(M, 5.0, 1.0);
  for (std::size_t q : {std::size_t{0}, std::size_t{3}}) {
    const ScalarField f = make_canonical_quasisymmetric(net, q);
    double total = 0.0;
    for (std::size_t idx : net.quasiorbits[q]) {
      const auto [v, se] = ball_mass(M, net.points[idx], 0.5 * net.epsilon, f, 20'000, 7);
      EXPECT_NEAR(v, 1.0, 3 * se + 1e-3);
      total += v;
    }
    EXPECT_NEAR(total, static_cast<double>(net.quasiorbits[q].size()), 1e-2 * net.quasiorbits[q].size());
    // the whole window holds exactly the sum
    const auto [all, se] = ball_mass(M, M.pole(), 6.0, f, 400'000, 8);
    EXPECT_NEAR(all, static_cast<double>(net.quasiorbits[q].size()), 3 * se + 1e-2);
  }
}

TEST(RotationalNet, RingsAreQuasiorbits) {
  const Discretization net = rotational_orbital_net(ManifoldModel::hyperbolic(2), 3.0, 1.0);
  EXPECT_GE(min_pairwise_distance(net), 1.0 - 1e-12);
  for (std::size_t i = 1; i < net.quasiorbits.size(); ++i)
    EXPECT_LE(net.quasiorbits[i - 1].size(), net.quasiorbits[i].size());
  EXPECT_THROW(rotational_orbital_net(ManifoldModel::euclidean(3), 3.0, 1.0), DomainError);
}

TEST(NetCsv, OneRowPerPointWithQuasiorbit) {
  const Discretization net = rotational_orbital_net(ManifoldModel::euclidean(2), 2.0, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "sobcomp_net.csv";
  write_net_csv(net, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_NE(line.find("quasiorbit"), std::string::npos);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, net.size());
  const nlohmann::json meta = net.metadata();
  EXPECT_EQ(meta.at("epsilon"), 1.0);
  EXPECT_EQ(meta.at("nu"), 2);
}
