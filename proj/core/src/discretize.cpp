#include "sobcomp/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include "sobcomp/errors.hpp"
#include "sobcomp/io.hpp"

namespace sobcomp {

namespace {

std::unique_ptr<UnitCubeSource> make_source(std::size_t dim, std::uint64_t seed, bool qmc) {
  if (qmc) return std::make_unique<SobolCubeSource>(dim, seed);
  return std::make_unique<RandomCubeSource>(dim, seed);
}

Mat default_frame(const ManifoldModel& M, const Point& y) {
  const Vec d = M.direction_from_pole(y);
  if (M.kind() == ManifoldKind::ProductCircleEuclidean) return block_frame(d, {1, M.dim() - 1});
  return rotation_to(d);
}

}  // namespace

std::vector<int> Discretization::quasiorbit_of_points() const {
  std::vector<int> label(points.size(), -1);
  for (std::size_t q = 0; q < quasiorbits.size(); ++q) {
    for (std::size_t i : quasiorbits[q]) label[i] = static_cast<int>(q);
  }
  return label;
}

nlohmann::json Discretization::metadata() const {
  std::vector<std::size_t> sizes;
  for (const auto& q : quasiorbits) sizes.push_back(q.size());
  return {{"manifold", manifold.to_json()}, {"epsilon", epsilon},          {"nu", nu},
          {"domain_radius", domain_radius}, {"points", points.size()},     {"quasiorbit_sizes", sizes},
          {"cardinality_grows", cardinality_grows}, {"seed", seed}};
}

NetIndex::NetIndex(const ManifoldModel& M, const std::vector<Point>& points, double bucket_width)
    : M_(&M), points_(&points), width_(bucket_width) {
  if (!(width_ > 0.0)) throw DomainError("NetIndex bucket width must be positive");
}

void NetIndex::add(std::size_t i) {
  const double rho = M_->distance_from_pole((*points_)[i]);
  const auto b = static_cast<std::size_t>(rho / width_);
  if (buckets_.size() <= b) buckets_.resize(b + 1);
  buckets_[b].push_back(i);
  if (pole_distance_.size() <= i) pole_distance_.resize(i + 1, 0.0);
  pole_distance_[i] = rho;
}

void NetIndex::for_each_within(const Point& center, double R,
                               const std::function<bool(std::size_t, double)>& visit) const {
  if (buckets_.empty()) return;
  const double rho = M_->distance_from_pole(center);
  const double lo = std::max(0.0, rho - R);
  const double hi = rho + R;
  const auto b0 = static_cast<std::size_t>(lo / width_);
  const std::size_t b1 = std::min(buckets_.size() - 1, static_cast<std::size_t>(hi / width_));
  for (std::size_t b = b0; b <= b1; ++b) {
    for (std::size_t i : buckets_[b]) {
      if (std::abs(pole_distance_[i] - rho) >= R) continue;
      const double d = M_->distance(center, (*points_)[i]);
      if (d < R && !visit(i, d)) return;
    }
  }
}

std::size_t NetIndex::count_within(const Point& center, double R) const {
  std::size_t n = 0;
  for_each_within(center, R, [&](std::size_t, double) {
    ++n;
    return true;
  });
  return n;
}

bool NetIndex::any_within(const Point& center, double R) const {
  bool found = false;
  for_each_within(center, R, [&](std::size_t, double) {
    found = true;
    return false;
  });
  return found;
}

Discretization greedy_net(const ManifoldModel& M, double domain_radius, double epsilon, const NetOptions& opts) {
  if (!(epsilon > 0.0)) throw DomainError("greedy_net needs epsilon > 0");
  if (!(domain_radius > 0.0)) throw DomainError("greedy_net needs domain_radius > 0");
  Discretization net;
  net.manifold = M;
  net.epsilon = epsilon;
  net.nu = 1;
  net.domain_radius = domain_radius;
  net.seed = opts.seed;
  net.points.push_back(M.pole());
  NetIndex index(M, net.points, epsilon);
  index.add(0);

  auto try_insert = [&](const Point& p) {
    if (index.any_within(p, epsilon)) return false;
    net.points.push_back(p);
    index.add(net.points.size() - 1);
    return true;
  };

  const double packing = M.ball_volume(domain_radius + 0.5 * epsilon) / M.ball_volume(0.5 * epsilon);
  const auto initial = static_cast<std::size_t>(std::max(1000.0, 8.0 * packing));
  const std::size_t budget = opts.candidate_budget > 0
                                 ? opts.candidate_budget
                                 : static_cast<std::size_t>(64.0 * packing) + 1000 +
                                       opts.coverage_samples * static_cast<std::size_t>(opts.max_repair_rounds);

  AnnulusSampler window(M, 0.0, domain_radius);
  SobolCubeSource stream(window.cube_dimension(), derive_seed(opts.seed, 0));
  std::size_t used = 0;
  for (; used < std::min(initial, budget); ++used) try_insert(window.sample(stream));

  const double inner = domain_radius - net.nu * epsilon;
  if (inner <= 0.0) return net;
  AnnulusSampler shrunk(M, 0.0, inner);
  double last_fraction = 0.0;
  for (int round = 0; round < opts.max_repair_rounds; ++round) {
    RandomCubeSource probe(shrunk.cube_dimension(), derive_seed(opts.seed, 1000 + round));
    std::size_t holes = 0;
    for (std::size_t s = 0; s < opts.coverage_samples; ++s) {
      const Point p = shrunk.sample(probe);
      if (index.any_within(p, net.nu * epsilon)) continue;
      ++holes;
      ++used;
      try_insert(p);
      if (used > budget) {
        const double frac = 1.0 - static_cast<double>(holes) / static_cast<double>(s + 1);
        throw NumericalError("greedy_net candidate budget exhausted; sampled coverage fraction " +
                             format_double(frac));
      }
    }
    last_fraction = 1.0 - static_cast<double>(holes) / static_cast<double>(opts.coverage_samples);
    if (holes == 0) return net;
  }
  throw NumericalError("greedy_net coverage repair did not converge; last coverage fraction " +
                       format_double(last_fraction));
}

Discretization net_from_points(const ManifoldModel& M, std::vector<Point> points, double epsilon, int nu,
                               double domain_radius) {
  if (!(epsilon > 0.0) || nu < 1) throw DomainError("net_from_points needs epsilon > 0 and nu >= 1");
  for (const auto& p : points) M.validate(p);
  Discretization net;
  net.manifold = M;
  net.points = std::move(points);
  net.epsilon = epsilon;
  net.nu = nu;
  net.domain_radius = domain_radius;
  const double sep = min_pairwise_distance(net);
  if (sep < epsilon * (1.0 - 1e-12)) {
    throw DomainError("points are not epsilon-separated (min distance " + format_double(sep) + ")");
  }
  return net;
}

Discretization rotational_orbital_net(const ManifoldModel& M, double domain_radius, double epsilon) {
  if (M.dim() != 2 || M.kind() == ManifoldKind::ProductCircleEuclidean) {
    throw DomainError("rotational_orbital_net needs a 2-D Euclidean or hyperbolic model");
  }
  std::vector<Point> pts{M.pole()};
  std::vector<std::vector<std::size_t>> rings{{0}};
  const int count = static_cast<int>(std::floor(domain_radius / epsilon));
  for (int k = 1; k <= count; ++k) {
    const double rho = k * epsilon;
    auto ring_point = [&](int j, int n) {
      const double a = 2.0 * std::numbers::pi * j / n;
      Vec d(2);
      d << std::cos(a), std::sin(a);
      return M.exp_map(d, rho);
    };
    const double circumference = M.sphere_area(rho);
    int n = std::max(1, static_cast<int>(std::floor(circumference / epsilon)));
    while (n > 1 && M.distance(ring_point(0, n), ring_point(1, n)) < epsilon) --n;
    std::vector<std::size_t> ring;
    for (int j = 0; j < n; ++j) {
      ring.push_back(pts.size());
      pts.push_back(ring_point(j, n));
    }
    rings.push_back(std::move(ring));
  }
  Discretization net = net_from_points(M, std::move(pts), epsilon, 2, domain_radius);
  net.quasiorbits = std::move(rings);
  std::stable_sort(net.quasiorbits.begin(), net.quasiorbits.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  net.cardinality_grows = net.quasiorbits.size() > 1 && net.quasiorbits.back().size() > net.quasiorbits.front().size();
  return net;
}

double round_label(double value, double spacing) {
  if (!(spacing > 0.0)) throw DomainError("label spacing must be positive");
  return spacing * std::ceil(value / spacing - 0.5);
}

std::function<double(const Point&)> pole_distance_label(const ManifoldModel& M, double spacing) {
  return [M, spacing](const Point& x) { return round_label(M.distance_from_pole(x), spacing); };
}

Discretization orbital_partition(const Discretization& net, const std::function<double(const Point&)>& orbit_label) {
  std::map<double, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    const double label = orbit_label(net.points[i]);
    if (!std::isfinite(label)) throw DataError("orbit label is not finite at point " + std::to_string(i));
    classes[label].push_back(i);
  }
  Discretization out = net;
  out.quasiorbits.clear();
  for (auto& [label, members] : classes) {
    if (members.empty()) throw NumericalError("orbital_partition produced an empty class");
    out.quasiorbits.push_back(std::move(members));
  }
  // map order breaks ties toward the smaller label
  std::stable_sort(out.quasiorbits.begin(), out.quasiorbits.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  out.cardinality_grows =
      out.quasiorbits.size() > 1 && out.quasiorbits.back().size() > out.quasiorbits.front().size();
  return out;
}

double min_pairwise_distance(const Discretization& net) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    for (std::size_t j = i + 1; j < net.points.size(); ++j) {
      best = std::min(best, net.manifold.distance(net.points[i], net.points[j]));
    }
  }
  return best;
}

CoveringReport check_covering(const Discretization& net, std::size_t samples, std::uint64_t seed) {
  CoveringReport rep;
  rep.min_separation = min_pairwise_distance(net);
  const double reach = net.nu * net.epsilon;
  const double inner = net.domain_radius - reach;
  if (inner <= 0.0 || samples == 0) return rep;
  NetIndex index(net.manifold, net.points, net.epsilon);
  for (std::size_t i = 0; i < net.points.size(); ++i) index.add(i);
  AnnulusSampler shrunk(net.manifold, 0.0, inner);
  RandomCubeSource src(shrunk.cube_dimension(), seed);
  for (std::size_t s = 0; s < samples; ++s) {
    if (index.any_within(shrunk.sample(src), reach)) ++rep.covered;
  }
  rep.samples = samples;
  rep.fraction = static_cast<double>(rep.covered) / static_cast<double>(samples);
  return rep;
}

std::size_t count_in_ball(const Discretization& net, const Point& center, double R) {
  if (!(R > 0.0)) throw DomainError("count_in_ball needs R > 0");
  std::size_t n = 0;
  for (const auto& p : net.points) {
    if (net.manifold.distance(center, p) < R) ++n;
  }
  return n;
}

BallCountReport empirical_n_R(const Discretization& net, double R, std::size_t centers, std::uint64_t seed) {
  BallCountReport rep;
  rep.centers = centers;
  rep.argmax_center = net.manifold.pole();
  if (net.points.empty()) return rep;
  NetIndex index(net.manifold, net.points, std::max(R, net.epsilon));
  for (std::size_t i = 0; i < net.points.size(); ++i) index.add(i);
  AnnulusSampler window(net.manifold, 0.0, net.domain_radius);
  AnnulusSampler jitter(net.manifold, 0.0, R);
  RandomCubeSource src(window.cube_dimension(), seed);
  std::mt19937_64 pick(derive_seed(seed, 1));
  for (std::size_t c = 0; c < centers; ++c) {
    // half the centers sit near net points, where crowding is worst
    Point x = (c % 2 == 0) ? window.sample(src)
                           : jitter.sample_at(src, net.points[pick() % net.points.size()]);
    const std::size_t n = index.count_within(x, R);
    if (n > rep.n_R) {
      rep.n_R = n;
      rep.argmax_center = x;
    }
  }
  return rep;
}

SeparatedSelection select_separated(const Discretization& net, std::size_t quasiorbit_index, const Point& x,
                                    double R, std::size_t j, std::uint64_t seed) {
  if (quasiorbit_index >= net.quasiorbits.size()) throw DomainError("quasiorbit index out of range");
  if (j < 1) throw DomainError("select_separated needs j >= 1");
  const auto& orbit = net.quasiorbits[quasiorbit_index];
  const ManifoldModel& M = net.manifold;
  std::size_t xi = orbit.size();
  for (std::size_t k = 0; k < orbit.size(); ++k) {
    if (M.distance(net.points[orbit[k]], x) < 1e-12) {
      xi = k;
      break;
    }
  }
  if (xi == orbit.size()) throw DomainError("x is not a point of the quasiorbit");

  SeparatedSelection sel;
  sel.n_R = empirical_n_R(net, R, 1000, seed).n_R;
  sel.cardinality_condition = orbit.size() > j * sel.n_R;
  sel.indices.push_back(orbit[xi]);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t k = 0; k < orbit.size(); ++k) {
    if (k != xi) order.emplace_back(M.distance(x, net.points[orbit[k]]), orbit[k]);
  }
  std::sort(order.begin(), order.end());
  for (const auto& [d, idx] : order) {
    if (sel.indices.size() >= j) break;
    bool ok = true;
    for (std::size_t chosen : sel.indices) {
      if (!(M.distance(net.points[chosen], net.points[idx]) > R)) {
        ok = false;
        break;
      }
    }
    if (ok) sel.indices.push_back(idx);
  }
  sel.shortfall = sel.indices.size() < j;
  return sel;
}

std::pair<double, double> ball_mass(const ManifoldModel& M, const Point& center, double r, const ScalarField& u,
                                    std::size_t samples, std::uint64_t seed, const Mat* frame,
                                    bool quasi_monte_carlo) {
  AnnulusSampler ball(M, 0.0, r);
  auto src = make_source(ball.cube_dimension(), seed, quasi_monte_carlo);
  RunningStats stats;
  std::vector<double> vals(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const Point x = ball.sample_at(*src, center, frame);
    const double v = std::abs(u(x));
    if (!std::isfinite(v)) {
      throw DataError("non-finite function value near ball center (" + format_double(center[0]) + ", ...)");
    }
    vals[s] = v;
    stats.add(v);
  }
  const double vol = ball.volume();
  return {vol * pairwise_sum(vals) / static_cast<double>(samples), vol * stats.standard_error()};
}

LocalMassProfile local_mass_profile(const Discretization& net, const ScalarField& u, const LocalMassOptions& opts) {
  LocalMassProfile prof;
  prof.ball_radius = net.nu * net.epsilon;
  prof.samples = opts.samples;
  prof.seed = opts.seed;
  std::vector<std::size_t> which = opts.subset;
  if (which.empty()) {
    which.resize(net.points.size());
    for (std::size_t i = 0; i < which.size(); ++i) which[i] = i;
  }
  prof.values.assign(net.points.size(), 0.0);
  prof.standard_errors.assign(net.points.size(), 0.0);
  const unsigned threads = opts.threads > 0 ? opts.threads : default_threads();
  parallel_for(which.size(), threads, [&](std::size_t k) {
    const std::size_t i = which[k];
    const Point& y = net.points[i];
    const Mat frame = opts.frame ? opts.frame(y) : default_frame(net.manifold, y);
    const auto [v, se] =
        ball_mass(net.manifold, y, prof.ball_radius, u, opts.samples, opts.seed, &frame, opts.quasi_monte_carlo);
    prof.values[i] = v;
    prof.standard_errors[i] = se;
  });
  if (!which.empty()) {
    prof.argmax = which.front();
    prof.supremum = prof.values[prof.argmax];
  }
  for (std::size_t i : which) {
    if (prof.values[i] > prof.supremum) {
      prof.supremum = prof.values[i];
      prof.argmax = i;
    }
  }
  return prof;
}

double bump_profile(double t) {
  const double a = std::abs(t);
  if (a >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - a * a));
}

double bump_integral(const ManifoldModel& M, double radius) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double s) { return s > 0.0 ? bump_profile(s / radius) * M.sphere_area(s) : 0.0; }, 0.0, radius, 15,
      1e-13, &err);
}

ScalarField make_canonical_quasisymmetric(const Discretization& net, std::size_t quasiorbit_index) {
  if (quasiorbit_index >= net.quasiorbits.size()) throw DomainError("quasiorbit index out of range");
  const auto& orbit = net.quasiorbits[quasiorbit_index];
  if (orbit.empty()) throw DomainError("quasiorbit is empty");
  std::vector<Point> centers;
  for (std::size_t i : orbit) centers.push_back(net.points[i]);
  const double radius = 0.5 * net.epsilon;
  const double norm = bump_integral(net.manifold, radius);
  return [M = net.manifold, centers = std::move(centers), radius, norm](const Point& y) {
    double s = 0.0;
    for (const auto& c : centers) {
      const double d = M.distance(c, y);
      if (d < radius) s += bump_profile(d / radius);
    }
    return s / norm;
  };
}

void write_net_csv(const Discretization& net, const std::string& path) {
  std::vector<std::string> header;
  for (int k = 0; k < net.manifold.dim(); ++k) header.push_back("x" + std::to_string(k));
  header.push_back("quasiorbit");
  CsvWriter csv(path, header);
  const auto label = net.quasiorbit_of_points();
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    std::vector<CsvCell> row;
    for (int k = 0; k < net.manifold.dim(); ++k) row.emplace_back(net.points[i][k]);
    row.emplace_back(static_cast<long long>(label[i]));
    csv.row(row);
  }
  csv.close();
}

void write_profile_csv(const LocalMassProfile& profile, const std::string& path) {
  CsvWriter csv(path, {"index", "mass", "stderr"});
  for (std::size_t i = 0; i < profile.values.size(); ++i) {
    csv.row({static_cast<long long>(i), profile.values[i], profile.standard_errors[i]});
  }
  csv.close();
}

}  // namespace sobcomp
