#include "sobcomp/symmetry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>

#include <Eigen/SVD>

#include "sobcomp/errors.hpp"
#include "sobcomp/io.hpp"

namespace sobcomp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat plane_rotation(double angle) {
  Mat R(2, 2);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  R << c, -s, s, c;
  return R;
}

Mat axis_rotation(Vec axis, double angle) {
  axis.normalize();
  Mat K = Mat::Zero(3, 3);
  K(0, 1) = -axis[2];
  K(0, 2) = axis[1];
  K(1, 0) = axis[2];
  K(1, 2) = -axis[0];
  K(2, 0) = -axis[1];
  K(2, 1) = axis[0];
  return Mat::Identity(3, 3) + std::sin(angle) * K + (1.0 - std::cos(angle)) * (K * K);
}

std::vector<long long> matrix_key(const Mat& Q) {
  std::vector<long long> key(static_cast<std::size_t>(Q.size()));
  for (Eigen::Index i = 0; i < Q.size(); ++i) key[static_cast<std::size_t>(i)] = std::llround(Q.data()[i] * 1e8);
  return key;
}

std::vector<Mat> cyclic_group(int K) {
  std::vector<Mat> out;
  if (K % 2 == 0) {
    // g and -g adjacent: odd functions cancel pairwise under pairwise_sum
    for (int j = 0; j < K / 2; ++j) {
      const Mat R = plane_rotation(kTwoPi * j / K);
      out.push_back(R);
      out.push_back(-R);
    }
  } else {
    for (int j = 0; j < K; ++j) out.push_back(plane_rotation(kTwoPi * j / K));
  }
  return out;
}

std::vector<Mat> icosahedral_group() {
  const double phi = std::numbers::phi;
  Vec a(3), b(3);
  a << 0.0, 1.0, phi;
  b << 1.0, 1.0, 1.0;
  const std::vector<Mat> gens = {axis_rotation(a, kTwoPi / 5.0), axis_rotation(b, kTwoPi / 3.0)};
  std::vector<Mat> out = {Mat::Identity(3, 3)};
  std::map<std::vector<long long>, std::size_t> seen;
  seen[matrix_key(out[0])] = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (const Mat& g : gens) {
      Mat h = g * out[i];
      // re-orthonormalize to keep products from drifting
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(h), Eigen::ComputeFullU | Eigen::ComputeFullV);
      h = svd.matrixU() * svd.matrixV().transpose();
      if (seen.emplace(matrix_key(h), out.size()).second) out.push_back(h);
    }
  }
  if (out.size() != 60) throw NumericalError("icosahedral closure produced " + std::to_string(out.size()) + " elements");
  return out;
}

std::vector<Mat> chiral_hyperoctahedral_group(int d) {
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Mat> all;
  do {
    int inversions = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)]) ++inversions;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      int sign = inversions % 2 == 0 ? 1 : -1;
      if (std::popcount(mask) % 2 == 1) sign = -sign;
      if (sign < 0) continue;
      Mat Q = Mat::Zero(d, d);
      for (int i = 0; i < d; ++i) Q(perm[static_cast<std::size_t>(i)], i) = (mask >> i) & 1u ? -1.0 : 1.0;
      all.push_back(Q);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (d % 2 != 0) return all;
  // -I is in the group for even d; keep g and -g adjacent
  std::map<std::vector<long long>, std::size_t> index;
  for (std::size_t i = 0; i < all.size(); ++i) index[matrix_key(all[i])] = i;
  std::vector<bool> used(all.size(), false);
  std::vector<Mat> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (used[i]) continue;
    const std::size_t j = index.at(matrix_key(-all[i]));
    used[i] = used[j] = true;
    out.push_back(all[i]);
    out.push_back(all[j]);
  }
  return out;
}

std::vector<Mat> block_product(const std::vector<std::vector<Mat>>& factors, const std::vector<int>& dims, int total,
                               int offset) {
  std::vector<Mat> out = {Mat::Identity(total, total)};
  int start = offset;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    std::vector<Mat> next;
    next.reserve(out.size() * factors[f].size());
    for (const Mat& base : out) {
      for (const Mat& g : factors[f]) {
        Mat Q = base;
        Q.block(start, start, dims[f], dims[f]) = g;
        next.push_back(Q);
      }
    }
    out = std::move(next);
    start += dims[f];
  }
  return out;
}

void require_flat_or_hyperbolic(const ManifoldModel& M, const char* what) {
  if (M.kind() == ManifoldKind::ProductCircleEuclidean)
    throw DomainError(std::string(what) + " acts on Euclidean or hyperbolic models");
}

void require_K(int K) {
  if (K < 1) throw DomainError("group sample size K must be at least 1");
}

}  // namespace

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::Rotations: return "rotations";
    case GroupKind::BlockRotations: return "block_rotations";
    case GroupKind::CircleTimesRotations: return "circle_times_rotations";
    case GroupKind::SubgroupFixingAxis: return "subgroup_fixing_axis";
    case GroupKind::Trivial: return "trivial";
  }
  return "unknown";
}

std::vector<Mat> finite_rotation_subgroup(int d, int K) {
  require_K(K);
  if (d < 1) throw DomainError("rotation group dimension must be positive");
  if (d == 1) return {Mat::Identity(1, 1)};
  if (d == 2) return cyclic_group(K);
  if (d == 3) return icosahedral_group();
  if (d <= 6) return chiral_hyperoctahedral_group(d);
  throw DomainError("no finite rotation sampler for SO(" + std::to_string(d) + ")");
}

GroupAction GroupAction::rotations(const ManifoldModel& M, int K) {
  require_flat_or_hyperbolic(M, "SO(m)");
  GroupAction G(GroupKind::Rotations, M);
  G.K_ = K;
  G.blocks_ = {M.dim()};
  for (const Mat& Q : finite_rotation_subgroup(M.dim(), K)) G.elements_.push_back({Q, 0.0});
  G.finalize();
  return G;
}

GroupAction GroupAction::block_rotations(const ManifoldModel& M, std::vector<int> blocks, int K) {
  require_flat_or_hyperbolic(M, "block rotations");
  int total = 0;
  for (int b : blocks) {
    if (b < 1) throw DomainError("block sizes must be positive");
    total += b;
  }
  if (blocks.empty() || total > M.dim()) throw DomainError("blocks must be nonempty and fit in the dimension");
  GroupAction G(GroupKind::BlockRotations, M);
  G.K_ = K;
  G.blocks_ = blocks;
  std::vector<std::vector<Mat>> factors;
  for (int b : blocks) factors.push_back(finite_rotation_subgroup(b, K));
  for (const Mat& Q : block_product(factors, blocks, M.dim(), 0)) G.elements_.push_back({Q, 0.0});
  G.finalize();
  return G;
}

GroupAction GroupAction::circle_times_rotations(const ManifoldModel& M, int K) {
  if (M.kind() != ManifoldKind::ProductCircleEuclidean) throw DomainError("S^1 x SO(n) acts on S^1 x R^n");
  require_K(K);
  const int n = M.dim() - 1;
  GroupAction G(GroupKind::CircleTimesRotations, M);
  G.K_ = K;
  G.blocks_ = {n};
  const std::vector<Mat> rot = block_product({finite_rotation_subgroup(n, K)}, {n}, M.dim(), 1);
  for (int j = 0; j < K; ++j)
    for (const Mat& Q : rot) G.elements_.push_back({Q, kTwoPi * j / K});
  G.finalize();
  return G;
}

GroupAction GroupAction::subgroup_fixing_axis(const ManifoldModel& M, int n, int K) {
  require_flat_or_hyperbolic(M, "SO(n) fixing an axis");
  if (n < 1 || n >= M.dim()) throw DomainError("SubgroupFixingAxis needs 1 <= n < m");
  GroupAction G(GroupKind::SubgroupFixingAxis, M);
  G.K_ = K;
  G.axis_n_ = n;
  G.blocks_ = {n};
  for (const Mat& Q : block_product({finite_rotation_subgroup(n, K)}, {n}, M.dim(), 0))
    G.elements_.push_back({Q, 0.0});
  G.finalize();
  return G;
}

GroupAction GroupAction::trivial(const ManifoldModel& M) {
  GroupAction G(GroupKind::Trivial, M);
  G.elements_.push_back({Mat::Identity(M.dim(), M.dim()), 0.0});
  G.finalize();
  return G;
}

GroupAction GroupAction::from_json(const nlohmann::json& j, const ManifoldModel& M) {
  if (!j.is_object() || !j.contains("kind")) throw DataError("group action JSON needs a \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const int K = j.value("K", 64);
  if (kind == "rotations") return rotations(M, K);
  if (kind == "block_rotations") {
    if (!j.contains("blocks")) throw DataError("block_rotations needs \"blocks\"");
    return block_rotations(M, j.at("blocks").get<std::vector<int>>(), K);
  }
  if (kind == "circle_times_rotations") return circle_times_rotations(M, K);
  if (kind == "subgroup_fixing_axis") return subgroup_fixing_axis(M, j.value("n", M.dim() - 1), K);
  if (kind == "trivial") return trivial(M);
  throw DataError("unknown group action kind: " + kind);
}

nlohmann::json GroupAction::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind_)}, {"K", K_}, {"size", elements_.size()}};
  if (kind_ == GroupKind::BlockRotations) j["blocks"] = blocks_;
  if (kind_ == GroupKind::SubgroupFixingAxis) j["n"] = axis_n_;
  return j;
}

void GroupAction::finalize() {
  const bool product = M_.kind() == ManifoldKind::ProductCircleEuclidean;
  std::map<std::vector<long long>, std::size_t> index;
  auto key = [&](const GroupElement& g) {
    std::vector<long long> k = matrix_key(g.Q);
    if (product) k.push_back(std::llround(wrap_angle(g.shift) * 1e8) % std::llround(kTwoPi * 1e8));
    return k;
  };
  for (std::size_t j = 0; j < elements_.size(); ++j) index[key(elements_[j])] = j;
  inverse_.resize(elements_.size());
  for (std::size_t j = 0; j < elements_.size(); ++j) {
    const GroupElement inv{elements_[j].Q.transpose(), -elements_[j].shift};
    const auto it = index.find(key(inv));
    if (it == index.end()) throw NumericalError("group sampler is not closed under inverses");
    inverse_[j] = it->second;
  }
}

Point GroupAction::apply(std::size_t j, const Point& x) const {
  const GroupElement& g = elements_[j];
  Point y = g.Q * x;
  if (M_.kind() == ManifoldKind::ProductCircleEuclidean) y[0] = wrap_angle(x[0] + g.shift);
  return y;
}

std::optional<int> GroupAction::fixed_coordinate() const {
  const int m = M_.dim();
  switch (kind_) {
    case GroupKind::Trivial: return 0;
    case GroupKind::Rotations: return m == 1 ? std::optional<int>(0) : std::nullopt;
    case GroupKind::SubgroupFixingAxis: return axis_n_;
    case GroupKind::CircleTimesRotations: return m == 2 ? std::optional<int>(1) : std::nullopt;
    case GroupKind::BlockRotations: {
      int start = 0;
      for (int b : blocks_) {
        if (b == 1) return start;
        start += b;
      }
      if (start < m) return start;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

int GroupAction::moved_coordinate() const {
  if (kind_ == GroupKind::BlockRotations) {
    int start = 0;
    for (int b : blocks_) {
      if (b >= 2) return start;
      start += b;
    }
  }
  return 0;
}

double orbit_diameter(const GroupAction& G, const Point& x) {
  const ManifoldModel& M = G.manifold();
  double best = 0.0;
  for (std::size_t j = 0; j < G.size(); ++j) best = std::max(best, M.distance(x, G.apply(j, x)));
  return best;
}

double orbit_diameter_pairwise(const GroupAction& G, const Point& x) {
  const ManifoldModel& M = G.manifold();
  std::vector<Point> orbit;
  orbit.reserve(G.size());
  for (std::size_t j = 0; j < G.size(); ++j) orbit.push_back(G.apply(j, x));
  double best = 0.0;
  for (std::size_t a = 0; a < orbit.size(); ++a)
    for (std::size_t b = a + 1; b < orbit.size(); ++b) best = std::max(best, M.distance(orbit[a], orbit[b]));
  return best;
}

CoercivityReport coercivity_verdict(const GroupAction& G, const std::vector<double>& probe_radii,
                                    std::size_t points_per_radius, std::uint64_t seed) {
  if (probe_radii.size() < 2) throw DomainError("coercivity needs at least two probe radii");
  for (std::size_t i = 1; i < probe_radii.size(); ++i)
    if (!(probe_radii[i] > probe_radii[i - 1]) || probe_radii[0] <= 0.0)
      throw DomainError("probe radii must be positive and increasing");
  const ManifoldModel& M = G.manifold();
  const int m = M.dim();
  CoercivityReport rep;
  rep.probe_radii = probe_radii;

  for (std::size_t i = 0; i < probe_radii.size(); ++i) {
    const double d = probe_radii[i];
    SobolCubeSource src(static_cast<std::size_t>(m), derive_seed(seed, i));
    std::vector<double> u(static_cast<std::size_t>(m));
    double env = std::numeric_limits<double>::infinity();
    std::size_t accepted = 0;
    for (std::size_t tries = 0; accepted < points_per_radius && tries < 64 * points_per_radius; ++tries) {
      src.next(u);
      Vec dir(m);
      for (int k = 0; k < m; ++k) dir[k] = normal_quantile(u[static_cast<std::size_t>(k)]);
      dir.normalize();
      const Point x = M.exp_map(dir, d);
      // on S^1 x R^n long angular components wrap and land closer to the pole
      if (std::abs(M.distance_from_pole(x) - d) > 1e-9 * std::max(1.0, d)) continue;
      env = std::min(env, orbit_diameter(G, x));
      ++accepted;
    }
    rep.envelope.push_back(accepted > 0 ? env : 0.0);
  }

  if (const auto fixed = G.fixed_coordinate()) {
    // points at unit distance from the fixed axis, translated along it
    Vec off = Vec::Zero(m);
    if (G.kind() != GroupKind::Trivial) off[G.moved_coordinate()] = 1.0;
    const Point offset_point = G.kind() == GroupKind::Trivial ? M.pole() : M.exp_map(off, 1.0);
    Vec axis = Vec::Zero(m);
    axis[*fixed] = 1.0;
    for (double d : probe_radii) {
      const Point base = M.exp_map(axis, d);
      rep.witness_diameter.push_back(orbit_diameter(G, M.transport(base, offset_point)));
    }
    const auto [lo, hi] = std::minmax_element(rep.witness_diameter.begin(), rep.witness_diameter.end());
    if (*hi <= *lo * (1.0 + 1e-6) + 1e-9) {
      rep.verdict = "not coercive";
      return rep;
    }
  }

  const std::vector<double>& E = rep.envelope;
  bool monotone = true;
  for (std::size_t i = 1; i < E.size(); ++i)
    if (E[i] < E[i - 1] * (1.0 - 1e-9)) monotone = false;
  const double growth = probe_radii.back() / probe_radii.front();
  if (E.front() > 0.0 && monotone && E.back() >= 0.5 * growth * E.front())
    rep.verdict = "coercive (empirical)";
  else
    rep.verdict = "inconclusive";
  return rep;
}

ScalarField average_TG(const GroupAction& G, const ScalarField& f) {
  auto group = std::make_shared<const GroupAction>(G);
  return [group, f](const Point& x) {
    std::vector<double> vals(group->size());
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = f(group->apply(j, x));
    return pairwise_sum(vals) / static_cast<double>(vals.size());
  };
}

ScalarField random_smooth_field(const ManifoldModel& M, std::uint64_t seed, double scale, int bumps) {
  if (bumps < 0 || !(scale > 0.0)) throw DomainError("random field needs bumps >= 0 and scale > 0");
  const int m = M.dim();
  RandomCubeSource src(static_cast<std::size_t>(m) + 2, seed);
  std::vector<double> u(static_cast<std::size_t>(m) + 2);
  src.next(u);
  Vec slope(m);
  for (int k = 0; k < m; ++k) slope[k] = 2.0 * u[static_cast<std::size_t>(k)] - 1.0;
  std::vector<Point> centers;
  std::vector<double> amp, width;
  for (int b = 0; b < bumps; ++b) {
    src.next(u);
    Vec dir(m);
    for (int k = 0; k < m; ++k) dir[k] = normal_quantile(u[static_cast<std::size_t>(k)]);
    dir.normalize();
    centers.push_back(M.exp_map(dir, scale * u[static_cast<std::size_t>(m)]));
    amp.push_back(4.0 * u[static_cast<std::size_t>(m) + 1] - 2.0);
    src.next(u);
    width.push_back(0.3 * scale + 0.7 * scale * u[0]);
  }
  return [slope, centers, amp, width](const Point& x) {
    double v = slope.dot(x);
    for (std::size_t b = 0; b < centers.size(); ++b)
      v += amp[b] * std::exp(-0.5 * (x - centers[b]).squaredNorm() / (width[b] * width[b]));
    return v;
  };
}

double PolarGrid::radius(int i) const { return (i + 0.5) * max_radius / radial_nodes; }

Point PolarGrid::node(int i, int k) const {
  Vec dir(2);
  const double theta = kTwoPi * k / angular_nodes;
  dir << std::cos(theta), std::sin(theta);
  return manifold.exp_map(dir, radius(i));
}

namespace {
double polar_jacobian(const ManifoldModel& M, double rho) {
  if (M.kind() == ManifoldKind::Hyperbolic) {
    const double c = std::sqrt(-M.curvature());
    return std::sinh(c * rho) / c;
  }
  return rho;
}
}  // namespace

double PolarGrid::cell_volume(int i) const {
  const double dr = max_radius / radial_nodes;
  const double dt = kTwoPi / angular_nodes;
  return dr * dt * polar_jacobian(manifold, radius(i));
}

double polar_grid_energy(const PolarGrid& grid, const ScalarField& f, double p) {
  if (grid.manifold.dim() != 2 || grid.manifold.kind() == ManifoldKind::ProductCircleEuclidean)
    throw DomainError("polar grids need a 2-D Euclidean or hyperbolic model");
  if (p < 1.0) throw DomainError("energy exponent p must be at least 1");
  if (grid.radial_nodes < 2 || grid.angular_nodes < 2) throw DomainError("polar grid too small");
  const int nr = grid.radial_nodes;
  const int nt = grid.angular_nodes;
  std::vector<double> v(static_cast<std::size_t>(nr * nt));
  for (int i = 0; i < nr; ++i)
    for (int k = 0; k < nt; ++k) v[static_cast<std::size_t>(i * nt + k)] = f(grid.node(i, k));
  auto at = [&](int i, int k) { return v[static_cast<std::size_t>(i * nt + ((k % nt) + nt) % nt)]; };
  const double dr = grid.max_radius / nr;
  const double dt = kTwoPi / nt;
  std::vector<double> terms(v.size());
  for (int i = 0; i < nr; ++i) {
    const double J = polar_jacobian(grid.manifold, grid.radius(i));
    const double vol = grid.cell_volume(i);
    for (int k = 0; k < nt; ++k) {
      const double fr = i + 1 < nr ? (at(i + 1, k) - at(i, k)) / dr : (at(i, k) - at(i - 1, k)) / dr;
      const double ft = (at(i, k + 1) - at(i, k)) / (dt * J);
      const double grad = std::hypot(fr, ft);
      terms[static_cast<std::size_t>(i * nt + k)] = (std::pow(grad, p) + std::pow(std::abs(at(i, k)), p)) * vol;
    }
  }
  return pairwise_sum(terms);
}

QuasisymmetryReport quasisymmetry_ratio(const ScalarField& f, const Discretization& net,
                                        const QuasisymmetryParams& params, std::size_t mc_samples,
                                        std::uint64_t seed, FrameField frame) {
  if (params.lambda < 1.0) throw DomainError("quasisymmetry bound lambda must be at least 1");
  if (params.base_index < 1) throw DomainError("quasiorbit base index starts at 1");
  if (net.quasiorbits.empty()) throw DomainError("net has no quasiorbits");
  QuasisymmetryReport rep;
  if (params.base_index > net.quasiorbits.size()) return rep;

  LocalMassOptions opts;
  opts.samples = mc_samples;
  opts.seed = seed;
  opts.frame = std::move(frame);
  for (std::size_t l = params.base_index - 1; l < net.quasiorbits.size(); ++l)
    opts.subset.insert(opts.subset.end(), net.quasiorbits[l].begin(), net.quasiorbits[l].end());
  const LocalMassProfile prof = local_mass_profile(net, f, opts);

  for (std::size_t l = params.base_index - 1; l < net.quasiorbits.size(); ++l) {
    QuasiorbitRatio q;
    q.quasiorbit = l + 1;
    std::size_t imax = net.quasiorbits[l].front();
    std::size_t imin = imax;
    for (std::size_t i : net.quasiorbits[l]) {
      if (prof.values[i] > prof.values[imax]) imax = i;
      if (prof.values[i] < prof.values[imin]) imin = i;
    }
    q.max_mass = prof.values[imax];
    q.min_mass = prof.values[imin];
    const double se_max = prof.standard_errors[imax];
    const double se_min = prof.standard_errors[imin];
    if (q.max_mass == 0.0) {
      q.ratio = 1.0;
    } else if (q.min_mass < 10.0 * se_min || q.min_mass <= 0.0) {
      q.reliable = false;
      q.ratio = std::numeric_limits<double>::infinity();
      q.standard_error = std::numeric_limits<double>::infinity();
    } else {
      q.ratio = q.max_mass / q.min_mass;
      q.standard_error = q.ratio * std::hypot(se_max / q.max_mass, se_min / q.min_mass);
    }
    if (!q.reliable || q.ratio - 3.0 * q.standard_error > params.lambda) rep.verdict = false;
    rep.ratios.push_back(q);
  }
  return rep;
}

DominationReport domination_check(const ManifoldModel& M, const ScalarField& u, const ScalarField& f, double b,
                                  double excluded_radius, double window_radius, std::size_t samples,
                                  std::uint64_t seed) {
  if (!(b > 0.0)) throw DomainError("domination constant b must be positive");
  if (!(window_radius > excluded_radius) || excluded_radius < 0.0)
    throw DomainError("domination window must extend past the excluded ball");
  const AnnulusSampler ann(M, excluded_radius, window_radius);
  RandomCubeSource src(ann.cube_dimension(), seed);
  DominationReport rep;
  rep.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    const Point x = ann.sample(src);
    if (std::abs(u(x)) > b * f(x)) ++rep.violations;
  }
  rep.violation_fraction = samples > 0 ? static_cast<double>(rep.violations) / static_cast<double>(samples) : 0.0;
  rep.dominated = rep.violations == 0;
  return rep;
}

PsiKWitness psi_k_witness(const GroupAction& G, const std::vector<Point>& centers, double r) {
  if (!(r > 0.0)) throw DomainError("witness radius must be positive");
  if (centers.empty()) throw DomainError("witness needs at least one center");
  const ManifoldModel& M = G.manifold();
  PsiKWitness w;
  w.r = r;
  w.centers = centers;
  for (const Point& c : centers) {
    M.validate(c);
    w.orbit_bound = std::max(w.orbit_bound, orbit_diameter(G, c));
  }
  const double spacing = 2.0 * (w.orbit_bound + r);
  for (std::size_t a = 0; a < centers.size(); ++a)
    for (std::size_t b = a + 1; b < centers.size(); ++b)
      if (!(M.distance(centers[a], centers[b]) > spacing))
        throw DomainError("witness centers " + std::to_string(a) + " and " + std::to_string(b) +
                          " are not farther than 2(R + r) = " + format_double(spacing) + " apart");
  auto group = std::make_shared<const GroupAction>(G);
  for (const Point& c : centers) {
    w.functions.push_back([group, c, r](const Point& x) {
      const ManifoldModel& Mg = group->manifold();
      std::vector<double> vals(group->size());
      for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = std::max(0.0, r - Mg.distance(group->apply(j, x), c));
      return pairwise_sum(vals) / static_cast<double>(vals.size());
    });
  }
  return w;
}

Estimate power_integral(const ManifoldModel& M, const ScalarField& f, const Point& center, double radius, double q,
                        std::size_t samples, std::uint64_t seed) {
  if (!(q > 0.0)) throw DomainError("exponent q must be positive");
  if (samples < 2) throw DomainError("power_integral needs at least two samples");
  const AnnulusSampler ball(M, 0.0, radius);
  RandomCubeSource src(ball.cube_dimension(), seed);
  std::vector<double> vals(samples);
  RunningStats stats;
  for (std::size_t s = 0; s < samples; ++s) {
    vals[s] = std::pow(std::abs(f(ball.sample_at(src, center))), q);
    stats.add(vals[s]);
  }
  const double vol = ball.volume();
  return {vol * pairwise_sum(vals) / static_cast<double>(samples), vol * stats.standard_error(), "monte-carlo"};
}

double support_overlap_fraction(const ManifoldModel& M, const PsiKWitness& w, std::size_t samples,
                                std::uint64_t seed) {
  if (samples == 0) return 0.0;
  const AnnulusSampler ball(M, 0.0, w.support_radius());
  RandomCubeSource src(ball.cube_dimension(), seed);
  std::size_t overlaps = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Point x = ball.sample_at(src, w.centers[s % w.centers.size()]);
    int positive = 0;
    for (const ScalarField& psi : w.functions)
      if (psi(x) > 0.0) ++positive;
    if (positive >= 2) ++overlaps;
  }
  return static_cast<double>(overlaps) / static_cast<double>(samples);
}

void write_grid_csv(const PolarGrid& grid, const std::vector<std::pair<std::string, ScalarField>>& fields,
                    const std::string& path) {
  std::vector<std::string> header = {"i", "k", "radius", "angle", "x0", "x1"};
  for (const auto& [name, _] : fields) header.push_back(name);
  CsvWriter out(path, header);
  for (int i = 0; i < grid.radial_nodes; ++i) {
    for (int k = 0; k < grid.angular_nodes; ++k) {
      const Point x = grid.node(i, k);
      std::vector<CsvCell> row = {static_cast<long long>(i), static_cast<long long>(k), grid.radius(i),
                                  kTwoPi * k / grid.angular_nodes, x[0], x[1]};
      for (const auto& [_, f] : fields) row.emplace_back(f(x));
      out.row(row);
    }
  }
  out.close();
}

}  // namespace sobcomp
