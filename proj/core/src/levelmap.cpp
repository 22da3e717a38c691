#include "sobcomp/levelmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/LU>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "sobcomp/errors.hpp"
#include "sobcomp/io.hpp"

namespace sobcomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::unique_ptr<UnitCubeSource> make_source(std::size_t dim, std::uint64_t seed, bool qmc) {
  if (qmc) return std::make_unique<SobolCubeSource>(dim, seed);
  return std::make_unique<RandomCubeSource>(dim, seed);
}

double lp_norm(const Eigen::Ref<const Eigen::VectorXd>& v, double ell) {
  const double mx = v.cwiseAbs().maxCoeff();
  if (std::isinf(ell) || mx == 0.0) return mx;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]) / mx, ell);
  return mx * std::pow(s, 1.0 / ell);
}

// Ratio bounds between the 2-norm and the ell-norm in dimension d:
// lo * |x|_ell <= |x|_2 <= hi * |x|_ell.
void norm_equivalence(int d, double ell, double& lo, double& hi) {
  const double inv = std::isinf(ell) ? 0.0 : 1.0 / ell;
  const double c = std::pow(static_cast<double>(d), 0.5 - inv);
  lo = std::min(1.0, c);
  hi = std::max(1.0, c);
}

double sup_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Cell {
  std::size_t level = 0;
  Point y;
  double ratio = 0.0;
  double se = 0.0;
};

}  // namespace

std::string to_string(LevelMapKind kind) {
  switch (kind) {
    case LevelMapKind::Radial: return "radial";
    case LevelMapKind::LpRadial: return "lp_radial";
    case LevelMapKind::BlockRadial: return "block_radial";
    case LevelMapKind::QuasiRadial: return "quasi_radial";
    case LevelMapKind::BulgedCounterexample: return "bulged";
    case LevelMapKind::PoleDistance: return "pole_distance";
  }
  return "unknown";
}

LevelMap LevelMap::radial(int m) {
  if (m < 2 || m > kMaxDim) throw DomainError("radial map needs 2 <= m <= 8");
  LevelMap phi;
  phi.kind_ = LevelMapKind::Radial;
  phi.m_ = m;
  phi.n_ = 1;
  phi.lipschitz_ = 1.0;
  return phi;
}

LevelMap LevelMap::lp_radial(int m, double ell) {
  if (m < 2 || m > kMaxDim) throw DomainError("lp_radial map needs 2 <= m <= 8");
  if (!(ell >= 1.0)) throw DomainError("lp_radial needs ell >= 1");
  LevelMap phi;
  phi.kind_ = LevelMapKind::LpRadial;
  phi.m_ = m;
  phi.n_ = 1;
  phi.ell_ = ell;
  double lo = 1.0;
  double hi = 1.0;
  norm_equivalence(m, ell, lo, hi);
  // |grad|_2 = |x|_{2(ell-1)}^{ell-1} / |x|_ell^{ell-1}, at most 1 for ell >= 2
  phi.lipschitz_ = ell >= 2.0 ? 1.0 : 1.0 / lo;
  return phi;
}

LevelMap LevelMap::block_radial(int m, std::vector<int> blocks, std::vector<double> exponents, int offset) {
  if (m < 2 || m > kMaxDim) throw DomainError("block_radial map needs 2 <= m <= 8");
  if (blocks.empty() || blocks.size() != exponents.size()) {
    throw DomainError("block_radial needs one exponent per block");
  }
  int total = offset;
  for (int b : blocks) {
    if (b < 1) throw DomainError("block sizes must be positive");
    total += b;
  }
  if (offset < 0 || total > m) throw DomainError("blocks exceed the source dimension");
  if (static_cast<int>(blocks.size()) >= m) throw DomainError("block_radial needs fewer blocks than dimensions");
  for (double e : exponents) {
    if (!(e >= 1.0)) throw DomainError("block exponents must be >= 1");
  }
  LevelMap phi;
  phi.kind_ = LevelMapKind::BlockRadial;
  phi.m_ = m;
  phi.n_ = static_cast<int>(blocks.size());
  phi.blocks_ = std::move(blocks);
  phi.exponents_ = std::move(exponents);
  phi.offset_ = offset;
  double l2 = 0.0;
  for (std::size_t b = 0; b < phi.blocks_.size(); ++b) {
    double lo = 1.0;
    double hi = 1.0;
    norm_equivalence(phi.blocks_[b], phi.exponents_[b], lo, hi);
    const double lb = (phi.blocks_[b] == 1 || phi.exponents_[b] >= 2.0) ? 1.0 : 1.0 / lo;
    l2 += lb * lb;
  }
  phi.lipschitz_ = std::sqrt(l2);
  return phi;
}

LevelMap LevelMap::quasi_radial(std::vector<double> dilation_exponents) {
  const int m = static_cast<int>(dilation_exponents.size());
  if (m < 2 || m > kMaxDim) throw DomainError("quasi_radial needs 2 <= m <= 8 exponents");
  for (double a : dilation_exponents) {
    if (!(a > 0.0)) throw DomainError("dilation exponents must be positive");
  }
  LevelMap phi;
  phi.kind_ = LevelMapKind::QuasiRadial;
  phi.m_ = m;
  phi.n_ = 1;
  phi.exponents_ = std::move(dilation_exponents);
  const bool isotropic = std::all_of(phi.exponents_.begin(), phi.exponents_.end(),
                                     [&](double a) { return a == phi.exponents_.front(); });
  phi.lipschitz_ = isotropic && phi.exponents_.front() == 1.0 ? 1.0 : kInf;
  return phi;
}

LevelMap LevelMap::bulged(double height) {
  if (!(height > 0.0) || !std::isfinite(height)) throw DomainError("bulge height must be positive");
  LevelMap phi;
  phi.kind_ = LevelMapKind::BulgedCounterexample;
  phi.m_ = 2;
  phi.n_ = 1;
  phi.height_ = height;
  phi.lipschitz_ = kInf;
  return phi;
}

LevelMap LevelMap::pole_distance(const ManifoldModel& M) {
  LevelMap phi;
  phi.kind_ = LevelMapKind::PoleDistance;
  phi.m_ = M.dim();
  phi.n_ = 1;
  phi.pole_model_ = M;
  phi.lipschitz_ = 1.0;
  return phi;
}

LevelMap LevelMap::from_json(const nlohmann::json& j, const ManifoldModel& M) {
  const std::string kind = j.value("kind", std::string("radial"));
  const int m = j.value("dim", M.dim());
  if (kind == "radial") return radial(m);
  if (kind == "lp_radial") {
    double ell = 2.0;
    if (j.contains("ell")) {
      ell = j.at("ell").is_string() ? kInf : j.at("ell").get<double>();
    }
    return lp_radial(m, ell);
  }
  if (kind == "block_radial") {
    return block_radial(m, j.at("blocks").get<std::vector<int>>(), j.at("exponents").get<std::vector<double>>(),
                        j.value("offset", 0));
  }
  if (kind == "quasi_radial") return quasi_radial(j.at("dilation").get<std::vector<double>>());
  if (kind == "bulged") return bulged(j.value("height", 1.0));
  if (kind == "pole_distance") return pole_distance(M);
  throw DataError("unknown map kind: " + kind);
}

nlohmann::json LevelMap::to_json() const {
  nlohmann::json j{{"kind", to_string(kind_)}, {"dim", m_}, {"target_dim", n_}};
  j["lipschitz_constant"] = std::isfinite(lipschitz_) ? nlohmann::json(lipschitz_) : nlohmann::json("unknown");
  switch (kind_) {
    case LevelMapKind::LpRadial:
      j["ell"] = std::isinf(ell_) ? nlohmann::json("inf") : nlohmann::json(ell_);
      break;
    case LevelMapKind::BlockRadial:
      j["blocks"] = blocks_;
      j["exponents"] = exponents_;
      j["offset"] = offset_;
      break;
    case LevelMapKind::QuasiRadial: j["dilation"] = exponents_; break;
    case LevelMapKind::BulgedCounterexample: j["height"] = height_; break;
    case LevelMapKind::PoleDistance: j["manifold"] = pole_model_.to_json(); break;
    default: break;
  }
  return j;
}

bool LevelMap::has_free_coordinates() const {
  if (kind_ != LevelMapKind::BlockRadial) return false;
  return offset_ + std::accumulate(blocks_.begin(), blocks_.end(), 0) < m_;
}

double LevelMap::bulge_g(double s) const { return height_ * bump_profile(s / std::numbers::pi); }

double LevelMap::smooth_cutoff(double r) {
  const double t = r - 1.0;
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

Vec LevelMap::evaluate(const Point& x) const {
  if (x.size() != m_) throw DomainError("point dimension does not match the map");
  Vec out(n_);
  switch (kind_) {
    case LevelMapKind::Radial: out[0] = x.norm(); break;
    case LevelMapKind::LpRadial: out[0] = lp_norm(x, ell_); break;
    case LevelMapKind::BlockRadial: {
      int start = offset_;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        out[static_cast<Eigen::Index>(b)] =
            blocks_[b] == 1 ? x[start] : lp_norm(x.segment(start, blocks_[b]), exponents_[b]);
        start += blocks_[b];
      }
      break;
    }
    case LevelMapKind::QuasiRadial: {
      // solve sum x_i^2 t^{-2 a_i} = 1 in tau = ln t; G is convex and
      // decreasing, and Newton from the lower bound converges monotonically
      double tau = -kInf;
      for (int i = 0; i < m_; ++i) {
        if (x[i] != 0.0) tau = std::max(tau, std::log(std::abs(x[i])) / exponents_[i]);
      }
      if (!std::isfinite(tau)) {
        out[0] = 0.0;
        break;
      }
      for (int iter = 0; iter < 100; ++iter) {
        double s = 0.0;
        double ds = 0.0;
        for (int i = 0; i < m_; ++i) {
          const double w = x[i] * x[i] * std::exp(-2.0 * exponents_[i] * tau);
          s += w;
          ds += -2.0 * exponents_[i] * w;
        }
        const double step = std::log(s) / (ds / s);
        tau -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(tau))) break;
      }
      out[0] = std::exp(tau);
      break;
    }
    case LevelMapKind::BulgedCounterexample: {
      const double r = x.norm();
      const double theta = std::atan2(x[1], x[0]);
      out[0] = r * (1.0 + smooth_cutoff(r) * bulge_g(r * r * theta));
      break;
    }
    case LevelMapKind::PoleDistance: out[0] = pole_model_.distance_from_pole(x); break;
  }
  return out;
}

bool LevelMap::is_singular(const Point& x) const {
  const double scale = x.norm();
  if (!(scale > 1e-300)) return true;
  const double tiny = 1e-12 * scale;
  auto lp_singular = [&](const Eigen::Ref<const Eigen::VectorXd>& v, double ell) {
    if (v.norm() <= tiny) return true;
    if (ell == 1.0) return (v.cwiseAbs().array() <= tiny).any();
    if (std::isinf(ell)) {
      Eigen::VectorXd a = v.cwiseAbs();
      std::sort(a.data(), a.data() + a.size(), std::greater<>());
      return a.size() > 1 && a[0] - a[1] <= tiny;
    }
    return false;
  };
  switch (kind_) {
    case LevelMapKind::LpRadial: return lp_singular(x, ell_);
    case LevelMapKind::BlockRadial: {
      int start = offset_;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (blocks_[b] > 1 && lp_singular(x.segment(start, blocks_[b]), exponents_[b])) return true;
        start += blocks_[b];
      }
      return false;
    }
    case LevelMapKind::PoleDistance: return pole_model_.distance_from_pole(x) <= 1e-300;
    default: return false;
  }
}

Mat LevelMap::finite_difference_differential(const Point& x, double step) const {
  Mat D(n_, m_);
  for (int k = 0; k < m_; ++k) {
    Point xp = x;
    Point xm = x;
    xp[k] += step;
    xm[k] -= step;
    D.col(k) = (evaluate(xp) - evaluate(xm)) / (2.0 * step);
  }
  return D;
}

Mat LevelMap::differential(const Point& x) const {
  Mat D = Mat::Zero(n_, m_);
  auto lp_gradient = [](const Eigen::Ref<const Eigen::VectorXd>& v, double ell, auto&& row) {
    const double nrm = lp_norm(v, ell);
    if (std::isinf(ell)) {
      Eigen::Index k = 0;
      v.cwiseAbs().maxCoeff(&k);
      row(k) = v[k] >= 0.0 ? 1.0 : -1.0;
      return;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double a = std::abs(v[i]);
      const double sgn = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
      row(i) = sgn * std::pow(a / nrm, ell - 1.0);
    }
  };
  switch (kind_) {
    case LevelMapKind::Radial: D.row(0) = x.transpose() / x.norm(); break;
    case LevelMapKind::LpRadial:
      lp_gradient(x, ell_, [&](Eigen::Index i) -> double& { return D(0, i); });
      break;
    case LevelMapKind::BlockRadial: {
      int start = offset_;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto row = static_cast<Eigen::Index>(b);
        if (blocks_[b] == 1) {
          D(row, start) = 1.0;
        } else {
          lp_gradient(x.segment(start, blocks_[b]), exponents_[b],
                      [&](Eigen::Index i) -> double& { return D(row, start + i); });
        }
        start += blocks_[b];
      }
      break;
    }
    case LevelMapKind::PoleDistance: {
      const ManifoldModel& M = pole_model_;
      if (M.kind() == ManifoldKind::Euclidean) {
        D.row(0) = x.transpose() / x.norm();
      } else if (M.kind() == ManifoldKind::Hyperbolic) {
        const double c = std::sqrt(-M.curvature());
        const double n = x.norm();
        D.row(0) = x.transpose() * ((2.0 / c) / ((1.0 - n) * (1.0 + n)) / n);
      } else {
        const double a = M.circle_radius();
        const double t = a * angle_difference(x[0], 0.0);
        const double rho = M.distance_from_pole(x);
        D(0, 0) = a * t / rho;
        D.block(0, 1, 1, m_ - 1) = x.tail(m_ - 1).transpose() / rho;
      }
      break;
    }
    case LevelMapKind::QuasiRadial:
    case LevelMapKind::BulgedCounterexample: return finite_difference_differential(x);
  }
  return D;
}

double LevelMap::normal_jacobian(const Point& x, const ManifoldModel& M) const {
  if (is_singular(x)) throw DomainError("normal_jacobian evaluated on the singular set of the map");
  const Mat D = differential(x);
  const Vec g = M.metric_diagonal(x);
  Mat Dg = D;
  for (int k = 0; k < m_; ++k) Dg.col(k) /= g[k];
  const Mat P = Dg * D.transpose();
  const double det = P.determinant();
  return std::sqrt(std::max(det, 0.0));
}

void LevelMap::shell_radial_bounds(const Vec& z, double h, const ManifoldModel& M, double& lo, double& hi) const {
  lo = 0.0;
  hi = kInf;
  const bool flat = M.kind() == ManifoldKind::Euclidean;
  const double zs = z[0];
  switch (kind_) {
    case LevelMapKind::PoleDistance:
      lo = std::max(0.0, zs - h);
      hi = zs + h;
      return;
    case LevelMapKind::Radial:
      if (!flat) return;
      lo = std::max(0.0, zs - h);
      hi = zs + h;
      return;
    case LevelMapKind::LpRadial: {
      if (!flat) return;
      double a = 1.0;
      double b = 1.0;
      norm_equivalence(m_, ell_, a, b);
      lo = a * std::max(0.0, zs - h);
      hi = b * (zs + h);
      return;
    }
    case LevelMapKind::BlockRadial: {
      if (!flat || has_free_coordinates()) return;
      double lo2 = 0.0;
      double hi2 = 0.0;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const double zb = z[static_cast<Eigen::Index>(b)];
        double l = 0.0;
        double u = 0.0;
        if (blocks_[b] == 1) {
          l = (std::abs(zb) > h) ? std::abs(zb) - h : 0.0;
          u = std::abs(zb) + h;
        } else {
          double a = 1.0;
          double c = 1.0;
          norm_equivalence(blocks_[b], exponents_[b], a, c);
          l = a * std::max(0.0, zb - h);
          u = c * (zb + h);
        }
        lo2 += l * l;
        hi2 += u * u;
      }
      lo = std::sqrt(lo2);
      hi = std::sqrt(hi2);
      return;
    }
    case LevelMapKind::QuasiRadial: {
      if (!flat) return;
      const double tlo = std::max(0.0, zs - h);
      const double thi = zs + h;
      lo = kInf;
      hi = 0.0;
      for (double a : exponents_) {
        lo = std::min(lo, std::pow(tlo, a));
        hi = std::max(hi, std::pow(thi, a));
      }
      return;
    }
    case LevelMapKind::BulgedCounterexample:
      if (!flat) return;
      lo = std::max(0.0, (zs - h) / (1.0 + height_));
      hi = zs + h;
      return;
  }
}

std::vector<Point> LevelMap::level_hints(const Vec& z, const ManifoldModel& M) const {
  std::vector<Point> hints;
  if (z.size() != n_) return hints;
  auto axis = [&](int k, double sign) {
    Vec e = Vec::Zero(m_);
    e[k] = sign;
    return e;
  };
  switch (kind_) {
    case LevelMapKind::Radial:
    case LevelMapKind::PoleDistance:
      if (z[0] <= 0.0) break;
      for (int k = 0; k < m_; ++k) {
        for (double s : {1.0, -1.0}) {
          if (kind_ == LevelMapKind::PoleDistance) {
            if (M.kind() == ManifoldKind::ProductCircleEuclidean && k == 0 && z[0] > M.injectivity_radius()) continue;
            hints.push_back(M.exp_map(axis(k, s), z[0]));
          } else {
            hints.push_back(axis(k, s) * z[0]);
          }
        }
      }
      break;
    case LevelMapKind::LpRadial: {
      if (z[0] <= 0.0) break;
      for (int k = 0; k < m_; ++k) hints.push_back(axis(k, 1.0) * z[0]);
      const double d = std::isinf(ell_) ? 1.0 : std::pow(static_cast<double>(m_), -1.0 / ell_);
      hints.push_back(Vec::Constant(m_, z[0] * d));
      break;
    }
    case LevelMapKind::BlockRadial: {
      Point p = Vec::Zero(m_);
      int start = offset_;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        p[start] = z[static_cast<Eigen::Index>(b)];
        start += blocks_[b];
      }
      hints.push_back(p);
      break;
    }
    case LevelMapKind::QuasiRadial:
      if (z[0] <= 0.0) break;
      for (int k = 0; k < m_; ++k) hints.push_back(axis(k, std::pow(z[0], exponents_[k])));
      break;
    case LevelMapKind::BulgedCounterexample: {
      const double zs = z[0];
      if (zs <= 0.0) break;
      // parametrize the bulge by s = r^2 theta; phi is increasing in r at fixed s
      const int strands = 96;
      for (int i = 0; i <= strands; ++i) {
        const double s = std::numbers::pi * (-1.0 + 2.0 * i / strands);
        const double g = bulge_g(s);
        auto f = [&](double r) { return r * (1.0 + smooth_cutoff(r) * g) - zs; };
        double rlo = zs / (1.0 + g);
        double rhi = zs;
        double r = rlo;
        if (f(rlo) < 0.0 && f(rhi) > 0.0) {
          boost::uintmax_t it = 100;
          auto [a, b] = boost::math::tools::toms748_solve(f, rlo, rhi, boost::math::tools::eps_tolerance<double>(50), it);
          r = 0.5 * (a + b);
        } else if (f(rhi) <= 0.0) {
          r = rhi;
        }
        const double theta = s / (r * r);
        if (std::abs(theta) >= std::numbers::pi) continue;
        Point p(2);
        p << r * std::cos(theta), r * std::sin(theta);
        hints.push_back(p);
      }
      for (double theta : {0.5 * std::numbers::pi, std::numbers::pi, -0.5 * std::numbers::pi}) {
        Point p(2);
        p << zs * std::cos(theta), zs * std::sin(theta);
        hints.push_back(p);
      }
      break;
    }
  }
  return hints;
}

bool LevelMap::project_to_level(Point& x, const Vec& z, const ManifoldModel& M) const {
  const double tol = 1e-10 * std::max(1.0, sup_norm(z));
  for (int iter = 0; iter < 40; ++iter) {
    if (!M.is_valid(x) || is_singular(x)) return false;
    const Vec res = evaluate(x) - z;
    if (sup_norm(res) < tol) return true;
    const Mat D = differential(x);
    const Mat P = D * D.transpose();
    Eigen::FullPivLU<Mat> lu(P);
    if (!lu.isInvertible()) return false;
    const Vec step = D.transpose() * lu.solve(res);
    // damp large steps so Newton cannot jump across the chart
    const double len = step.norm();
    const double cap = 0.25 * std::max(1.0, x.norm());
    x -= len > cap ? Vec(step * (cap / len)) : step;
    if (M.kind() == ManifoldKind::ProductCircleEuclidean) x[0] = wrap_angle(x[0]);
  }
  return M.is_valid(x) && sup_norm(evaluate(x) - z) < tol;
}

double estimate_lipschitz(const LevelMap& phi, const ManifoldModel& M, double window_radius, std::size_t pairs,
                          std::uint64_t seed) {
  AnnulusSampler window(M, 0.0, window_radius);
  const double step = 1e-4 * std::max(1.0, window_radius);
  AnnulusSampler tiny(M, 0.0, step);
  RandomCubeSource src(window.cube_dimension(), seed);
  double best = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Point x = window.sample(src);
    const Point y = tiny.sample_at(src, x);
    const double d = M.distance(x, y);
    if (d <= 0.0) continue;
    best = std::max(best, (phi.evaluate(x) - phi.evaluate(y)).norm() / d);
  }
  return best;
}

double default_psi_width(const Vec& z) { return 0.01 * std::max(1.0, z.size() ? z.cwiseAbs().maxCoeff() : 1.0); }

namespace {

bool closed_form_psi(const LevelMap& phi, const ManifoldModel& M, const Vec& z, double& value) {
  switch (phi.kind()) {
    case LevelMapKind::PoleDistance:
      if (z[0] <= 0.0) return false;
      value = M.sphere_area(z[0]);
      return true;
    case LevelMapKind::Radial:
      if (M.kind() != ManifoldKind::Euclidean || z[0] <= 0.0) return false;
      value = M.sphere_area(z[0]);
      return true;
    case LevelMapKind::BlockRadial: {
      if (M.kind() != ManifoldKind::Euclidean || phi.has_free_coordinates()) return false;
      double prod = 1.0;
      for (std::size_t b = 0; b < phi.blocks().size(); ++b) {
        const int g = phi.blocks()[b];
        if (g == 1) continue;
        if (phi.exponents()[b] != 2.0) return false;
        const double zb = z[static_cast<Eigen::Index>(b)];
        if (zb <= 0.0) return false;
        prod *= g * unit_ball_volume(g) * std::pow(zb, g - 1);
      }
      value = prod;
      return true;
    }
    default: return false;
  }
}

void sampling_window(const LevelMap& phi, const ManifoldModel& M, const Vec& z, double h, ShellWindow window,
                     double window_radius, double& lo, double& hi) {
  phi.shell_radial_bounds(z, h, M, lo, hi);
  if (window == ShellWindow::FullBall) lo = 0.0;
  if (window_radius > 0.0) hi = std::min(hi, window_radius);
  if (!std::isfinite(hi)) {
    throw DomainError("levels of this map are unbounded here; a window radius is required");
  }
  if (!(hi > lo)) throw NumericalError("empty sampling window for the level shell");
}

}  // namespace

Estimate weight_psi(const LevelMap& phi, const ManifoldModel& M, const Vec& z, double h, std::size_t samples,
                    const PsiOptions& opts) {
  if (z.size() != phi.target_dim()) throw DomainError("level value has wrong dimension");
  if (!(h > 0.0)) throw DomainError("shell width must be positive");
  Estimate est;
  if (opts.method != PsiMethod::Shell) {
    double v = 0.0;
    if (closed_form_psi(phi, M, z, v)) {
      est.value = v;
      est.method = "closed_form";
      return est;
    }
    if (opts.method == PsiMethod::ClosedForm) throw DomainError("no closed form for Psi with this map");
  }
  if (samples < 1) throw DomainError("weight_psi needs samples >= 1");
  double lo = 0.0;
  double hi = 0.0;
  sampling_window(phi, M, z, h, opts.window, opts.window_radius, lo, hi);
  AnnulusSampler ann(M, lo, hi);
  auto src = make_source(ann.cube_dimension(), opts.seed, opts.quasi_monte_carlo);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Point x = ann.sample(*src);
    if (sup_norm(phi.evaluate(x) - z) < h) ++hits;
  }
  if (hits == 0) throw NumericalError("empty level shell in the window; z may lie outside phi(window)");
  const double f = static_cast<double>(hits) / static_cast<double>(samples);
  const double scale = ann.volume() / std::pow(2.0 * h, phi.target_dim());
  est.value = scale * f;
  est.standard_error = scale * std::sqrt(f * (1.0 - f) / static_cast<double>(samples));
  est.method = opts.window == ShellWindow::FullBall ? "shell_full_ball" : "shell";
  return est;
}

WeightTable weight_table(const LevelMap& phi, const ManifoldModel& M, const std::vector<double>& z_grid,
                         std::size_t samples, const PsiOptions& opts) {
  if (phi.target_dim() != 1) throw DomainError("weight_table takes a scalar grid; the map must be scalar");
  WeightTable t;
  t.samples = samples;
  t.z.resize(z_grid.size());
  t.values.resize(z_grid.size());
  t.standard_errors.resize(z_grid.size());
  std::vector<std::string> methods(z_grid.size());
  parallel_for(z_grid.size(), default_threads(), [&](std::size_t k) {
    Vec z(1);
    z[0] = z_grid[k];
    PsiOptions o = opts;
    o.seed = derive_seed(opts.seed, k);
    Estimate e;
    if (z_grid[k] <= 0.0 && phi.kind() != LevelMapKind::BlockRadial) {
      e.value = 0.0;
      e.method = "boundary";
    } else {
      e = weight_psi(phi, M, z, default_psi_width(z), samples, o);
    }
    t.z[k] = z;
    t.values[k] = e.value;
    t.standard_errors[k] = e.standard_error;
    methods[k] = e.method;
  });
  t.method = methods.empty() ? "" : methods.back();
  return t;
}

void write_weight_table_csv(const WeightTable& table, const std::string& path) {
  CsvWriter csv(path, {"z", "psi", "stderr", "method"});
  for (std::size_t k = 0; k < table.values.size(); ++k) {
    csv.row({table.z[k][0], table.values[k], table.standard_errors[k], table.method});
  }
  csv.close();
}

Estimate local_level_mass(const LevelMap& phi, const ManifoldModel& M, const Point& y, const Vec& z, double r,
                          double h, std::size_t samples, std::uint64_t seed, const Mat* frame,
                          bool quasi_monte_carlo) {
  if (!(r > 0.0) || !(h > 0.0)) throw DomainError("local_level_mass needs r > 0 and h > 0");
  AnnulusSampler ball(M, 0.0, r);
  auto src = make_source(ball.cube_dimension(), seed, quasi_monte_carlo);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Point x = ball.sample_at(*src, y, frame);
    if (sup_norm(phi.evaluate(x) - z) < h) ++hits;
  }
  const double f = static_cast<double>(hits) / static_cast<double>(samples);
  const double scale = ball.volume() / std::pow(2.0 * h, phi.target_dim());
  Estimate e;
  e.value = scale * f;
  e.standard_error = scale * std::sqrt(f * (1.0 - f) / static_cast<double>(samples));
  e.method = "local_shell";
  return e;
}

Mat equivariant_frame(const LevelMap& phi, const ManifoldModel& M, const Point& y) {
  if (M.kind() == ManifoldKind::ProductCircleEuclidean) {
    return block_frame(M.direction_from_pole(y), {1, M.dim() - 1});
  }
  if (phi.kind() == LevelMapKind::BlockRadial) {
    const int used = std::accumulate(phi.blocks().begin(), phi.blocks().end(), 0);
    Mat Q = Mat::Identity(y.size(), y.size());
    Q.block(phi.offset(), phi.offset(), used, used) = block_frame(y.segment(phi.offset(), used), phi.blocks());
    return Q;
  }
  return rotation_to(M.direction_from_pole(y));
}

std::vector<Point> sample_level_points(const LevelMap& phi, const ManifoldModel& M, const Vec& z, std::size_t count,
                                       const LevelSampleOptions& opts) {
  std::vector<Point> out;
  if (opts.include_hints) {
    for (Point p : phi.level_hints(z, M)) {
      if (opts.window_radius > 0.0 && M.distance_from_pole(p) > opts.window_radius) continue;
      if (phi.project_to_level(p, z, M)) out.push_back(p);
    }
  }
  const double h = 0.05 * std::max(1.0, sup_norm(z));
  double lo = 0.0;
  double hi = 0.0;
  sampling_window(phi, M, z, h, ShellWindow::Tight, opts.window_radius, lo, hi);
  AnnulusSampler ann(M, lo, hi);
  RandomCubeSource src(ann.cube_dimension(), opts.seed);
  std::size_t found = 0;
  for (std::size_t s = 0; s < opts.shell_samples && found < count; ++s) {
    Point x = ann.sample(src);
    if (sup_norm(phi.evaluate(x) - z) >= h) continue;
    if (!phi.project_to_level(x, z, M)) continue;
    if (opts.window_radius > 0.0 && M.distance_from_pole(x) > opts.window_radius) continue;
    out.push_back(x);
    ++found;
  }
  return out;
}

std::vector<double> default_level_grid(double A_radius, double r, std::size_t count) {
  std::vector<double> grid;
  for (std::size_t k = 0; k < count; ++k) {
    grid.push_back(A_radius + 2.0 * r * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(count, 1)));
  }
  return grid;
}

SupResult delta_r(const LevelMap& phi, const ManifoldModel& M, double A_radius, double r,
                  const std::vector<double>& z_grid, std::size_t y_samples, const LevelOptions& opts) {
  if (!(r > 0.0)) throw DomainError("delta_r needs r > 0");
  if (z_grid.empty() || y_samples == 0) throw DomainError("delta_r needs a nonempty level grid and y samples");
  if (phi.target_dim() != 1) throw DomainError("delta_r takes a scalar level grid");
  const unsigned threads = opts.threads > 0 ? opts.threads : default_threads();
  const double h_loc = opts.local_width_factor * r;

  std::vector<Estimate> psi(z_grid.size());
  std::vector<std::vector<Point>> ys(z_grid.size());
  parallel_for(z_grid.size(), threads, [&](std::size_t k) {
    Vec z(1);
    z[0] = z_grid[k];
    PsiOptions po;
    po.method = opts.psi_method;
    po.window_radius = opts.window_radius;
    po.seed = derive_seed(opts.seed, 100 + k);
    try {
      psi[k] = weight_psi(phi, M, z, opts.psi_width_factor * std::max(1.0, std::abs(z_grid[k])), opts.psi_samples, po);
    } catch (const NumericalError&) {
      psi[k] = Estimate{};
    }
    LevelSampleOptions lo;
    lo.window_radius = opts.window_radius;
    lo.seed = derive_seed(opts.seed, 200 + k);
    for (const Point& p : sample_level_points(phi, M, z, y_samples, lo)) {
      if (M.distance_from_pole(p) >= A_radius) ys[k].push_back(p);
    }
  });

  SupResult res;
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    const bool reliable = psi[k].value > 0.0 && psi[k].value >= 10.0 * psi[k].standard_error;
    if (!reliable || ys[k].empty()) {
      res.skipped_levels.push_back(z_grid[k]);
      continue;
    }
    for (const Point& y : ys[k]) cells.push_back({k, y, 0.0, 0.0});
  }
  res.cells = cells.size();
  if (cells.empty()) throw NumericalError("delta_r found no reliable (z, y) cell outside A");

  auto evaluate_cells = [&](std::vector<Cell>& list, std::size_t samples, std::uint64_t seed) {
    parallel_for(list.size(), threads, [&](std::size_t c) {
      Cell& cell = list[c];
      Vec z(1);
      z[0] = z_grid[cell.level];
      const Mat frame = equivariant_frame(phi, M, cell.y);
      const Estimate m = local_level_mass(phi, M, cell.y, z, r, h_loc, samples, seed, &frame);
      const Estimate& p = psi[cell.level];
      cell.ratio = m.value / p.value;
      const double rel_m = m.value > 0.0 ? m.standard_error / m.value : 0.0;
      const double rel_p = p.standard_error / p.value;
      cell.se = m.value > 0.0 ? cell.ratio * std::hypot(rel_m, rel_p) : m.standard_error / p.value;
    });
  };
  evaluate_cells(cells, std::max<std::size_t>(1, opts.mc_samples / std::max<std::size_t>(1, opts.screen_divisor)),
                 opts.seed);
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.ratio > b.ratio; });
  cells.resize(std::min(cells.size(), std::max<std::size_t>(1, opts.top_k)));
  evaluate_cells(cells, opts.mc_samples, derive_seed(opts.seed, 1));
  const auto best = std::max_element(cells.begin(), cells.end(),
                                     [](const Cell& a, const Cell& b) { return a.ratio < b.ratio; });
  res.value = best->ratio;
  res.standard_error = best->se;
  res.witness_z = Vec::Constant(1, z_grid[best->level]);
  res.witness_y = best->y;
  return res;
}

ThicknessResult thickness_ratio(const LevelMap& phi, const ManifoldModel& M, double A_radius, double r,
                                const std::vector<double>& z_grid, std::size_t y_per_level,
                                const LevelOptions& opts) {
  if (!(r > 0.0)) throw DomainError("thickness_ratio needs r > 0");
  if (z_grid.empty() || y_per_level == 0) throw DomainError("thickness_ratio needs levels and points");
  const unsigned threads = opts.threads > 0 ? opts.threads : default_threads();
  const double h_loc = opts.local_width_factor * r;
  ThicknessResult res;
  res.per_level.assign(z_grid.size(), 1.0);
  double worst = kInf;
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    Vec z(1);
    z[0] = z_grid[k];
    LevelSampleOptions lo;
    lo.window_radius = opts.window_radius;
    lo.seed = derive_seed(opts.seed, 300 + k);
    std::vector<Point> ys;
    for (const Point& p : sample_level_points(phi, M, z, y_per_level, lo)) {
      if (M.distance_from_pole(p) >= A_radius) ys.push_back(p);
    }
    if (ys.size() < 2) {
      res.per_level[k] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::vector<Estimate> mass(ys.size());
    parallel_for(ys.size(), threads, [&](std::size_t i) {
      const Mat frame = equivariant_frame(phi, M, ys[i]);
      mass[i] = local_level_mass(phi, M, ys[i], z, r, h_loc, opts.mc_samples, opts.seed, &frame);
    });
    const auto [mn, mx] = std::minmax_element(mass.begin(), mass.end(), [](const Estimate& a, const Estimate& b) {
      return a.value < b.value;
    });
    if (!(mx->value > 0.0)) throw NumericalError("thickness_ratio found zero local mass at every point");
    const double ratio = mn->value / mx->value;
    res.per_level[k] = ratio;
    if (ratio < worst) {
      worst = ratio;
      res.ratio = ratio;
      res.witness_z = z_grid[k];
      res.inf_point = ys[static_cast<std::size_t>(mn - mass.begin())];
      res.sup_point = ys[static_cast<std::size_t>(mx - mass.begin())];
      const double rel_mn = mn->value > 0.0 ? mn->standard_error / mn->value : 0.0;
      res.standard_error = ratio * std::hypot(rel_mn, mx->standard_error / mx->value);
    }
  }
  if (!std::isfinite(worst)) throw NumericalError("thickness_ratio found no level with two points outside A");
  return res;
}

std::vector<TestProfile> default_profile_family(double z0, double r) {
  std::vector<TestProfile> family;
  for (double w : {0.05 * r, 0.25 * r, r, 4.0 * r}) {
    for (double shift : {0.0, 1.0}) {
      const double c = z0 + shift * w;
      TestProfile p;
      p.name = "bump(c=" + format_double(c) + ",w=" + format_double(w) + ")";
      p.h = [c, w](double z) { return bump_profile((z - c) / w); };
      p.support_lo = c - w;
      p.support_hi = c + w;
      p.focus_levels = {std::max(c, z0)};
      family.push_back(std::move(p));
    }
  }
  return family;
}

std::vector<Point> disjoint_ball_chain(const ManifoldModel& M, const Point& seed_point,
                                       const std::vector<Point>& level_points, double r) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < level_points.size(); ++i) {
    order.emplace_back(M.distance(seed_point, level_points[i]), i);
  }
  std::sort(order.begin(), order.end());
  std::vector<Point> chain{seed_point};
  for (const auto& [d, i] : order) {
    bool ok = true;
    for (const Point& c : chain) {
      if (M.distance(c, level_points[i]) < 2.0 * r) {
        ok = false;
        break;
      }
    }
    if (ok) chain.push_back(level_points[i]);
  }
  return chain;
}

SigmaResult sigma_R(const LevelMap& phi, const ManifoldModel& M, double R, double r,
                    const std::vector<TestProfile>& family, double q, const LevelOptions& opts) {
  if (!(R > r) || !(r > 0.0)) throw DomainError("sigma_R needs R > r > 0");
  if (phi.target_dim() != 1) throw DomainError("sigma_R supports scalar maps");
  if (family.empty()) throw DomainError("sigma_R needs at least one test profile");
  if (!(q >= 1.0)) throw DomainError("sigma_R needs q >= 1");
  const unsigned threads = opts.threads > 0 ? opts.threads : default_threads();

  // denominators by coarea: int h^q Psi dz
  std::vector<Estimate> denom(family.size());
  for (std::size_t k = 0; k < family.size(); ++k) {
    const TestProfile& prof = family[k];
    const double a = std::max(0.0, prof.support_lo);
    const double b = prof.support_hi;
    if (!(b > a)) throw DomainError("test profile " + prof.name + " has an empty support");
    const int nodes = 257;
    std::vector<double> grid(nodes);
    for (int i = 0; i < nodes; ++i) grid[i] = a + (b - a) * i / (nodes - 1);
    PsiOptions po;
    po.method = opts.psi_method;
    po.window_radius = opts.window_radius;
    po.seed = derive_seed(opts.seed, 400 + k);
    const WeightTable table = weight_table(phi, M, grid, opts.psi_samples, po);
    denom[k] = coarea_quadrature([&](double z) { return std::pow(prof.h(z), q); }, table);
    if (!(denom[k].value > 0.0)) throw NumericalError("test profile " + prof.name + " has zero mass");
  }

  std::vector<Cell> cells;
  for (std::size_t k = 0; k < family.size(); ++k) {
    for (std::size_t f = 0; f < family[k].focus_levels.size(); ++f) {
      Vec z(1);
      z[0] = family[k].focus_levels[f];
      LevelSampleOptions lo;
      lo.window_radius = opts.window_radius;
      lo.seed = derive_seed(opts.seed, 500 + 16 * k + f);
      for (const Point& p : sample_level_points(phi, M, z, 16, lo)) {
        if (M.distance_from_pole(p) >= R) cells.push_back({k, p, 0.0, 0.0});
      }
    }
  }
  SigmaResult res;
  if (!cells.empty()) {
    auto evaluate_cells = [&](std::vector<Cell>& list, std::size_t samples, std::uint64_t seed) {
      parallel_for(list.size(), threads, [&](std::size_t c) {
        Cell& cell = list[c];
        const TestProfile& prof = family[cell.level];
        const Mat frame = equivariant_frame(phi, M, cell.y);
        const auto [num, num_se] = ball_mass(
            M, cell.y, r, [&](const Point& x) { return std::pow(prof.h(phi.evaluate_scalar(x)), q); }, samples,
            seed, &frame, false);
        const Estimate& d = denom[cell.level];
        cell.ratio = num / d.value;
        cell.se = std::hypot(num_se / d.value, cell.ratio * d.standard_error / d.value);
      });
    };
    evaluate_cells(cells, std::max<std::size_t>(1, opts.mc_samples / std::max<std::size_t>(1, opts.screen_divisor)),
                   opts.seed);
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.ratio > b.ratio; });
    cells.resize(std::min(cells.size(), std::max<std::size_t>(1, opts.top_k)));
    evaluate_cells(cells, opts.mc_samples, derive_seed(opts.seed, 1));
    const auto best = std::max_element(cells.begin(), cells.end(),
                                       [](const Cell& a, const Cell& b) { return a.ratio < b.ratio; });
    res.sigma = best->ratio;
    res.standard_error = best->se;
    res.witness_x = best->y;
    res.witness_profile = family[best->level].name;
  }

  // disjoint-ball chain on the level through a point at distance R
  Vec e1 = Vec::Zero(M.dim());
  e1[M.kind() == ManifoldKind::ProductCircleEuclidean ? 1 : 0] = 1.0;
  const Point y_R = M.exp_map(e1, R);
  const Vec z_R = phi.evaluate(y_R);
  LevelSampleOptions lo;
  lo.window_radius = opts.window_radius;
  lo.seed = derive_seed(opts.seed, 600);
  lo.shell_samples = 200'000;
  const std::vector<Point> level = sample_level_points(phi, M, z_R, 8000, lo);
  res.chain = disjoint_ball_chain(M, y_R, level, r);
  res.j_R = res.chain.size();
  const ThicknessResult thick = thickness_ratio(phi, M, R, r, {z_R[0]}, 16, opts);
  res.eps_thick = thick.ratio;
  res.bound = 1.0 / (res.eps_thick * static_cast<double>(res.j_R));
  return res;
}

LevelDiameterCurve level_diameter_curve(const LevelMap& phi, const ManifoldModel& M,
                                        const std::vector<Point>& base_points, const LevelSampleOptions& opts) {
  LevelDiameterCurve curve;
  for (std::size_t b = 0; b < base_points.size(); ++b) {
    const Point& x = base_points[b];
    LevelDiameterPoint pt;
    pt.distance_from_pole = M.distance_from_pole(x);
    const Vec z = phi.evaluate(x);
    LevelSampleOptions o = opts;
    o.seed = derive_seed(opts.seed, b);
    std::vector<Point> pts = sample_level_points(phi, M, z, 400, o);
    pts.push_back(x);
    pt.level_samples = pts.size();
    if (pts.size() < 2) {
      pt.low_confidence = true;
    } else {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) pt.diameter = std::max(pt.diameter, M.distance(pts[i], pts[j]));
      }
    }
    if (opts.window_radius > 0.0) {
      for (const Point& p : pts) {
        if (M.distance_from_pole(p) >= 0.98 * opts.window_radius) {
          pt.touches_window = true;
          break;
        }
      }
    }
    curve.points.push_back(pt);
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const auto& a, const auto& b) { return a.distance_from_pole < b.distance_from_pole; });
  const std::size_t n = curve.points.size();
  curve.lower_envelope.assign(n, 0.0);
  double running = kInf;
  for (std::size_t i = n; i-- > 0;) {
    running = std::min(running, curve.points[i].diameter);
    curve.lower_envelope[i] = running;
  }
  curve.verdict = "inconclusive";
  if (n < 2) return curve;
  const bool touches = std::any_of(curve.points.begin(), curve.points.end(), [](const auto& p) { return p.touches_window; });
  const double d0 = curve.points.front().distance_from_pole;
  const double d1 = curve.points.back().distance_from_pole;
  const double e0 = curve.lower_envelope.front();
  const double e1v = curve.lower_envelope.back();
  if (touches) {
    curve.verdict = "not level-coercive";
  } else if (e0 > 0.0 && d0 > 0.0 && e1v / e0 >= 0.5 * d1 / d0) {
    curve.verdict = "level-coercive (empirical)";
  } else if (d0 > 0.0 && d1 / d0 >= 2.0 && e1v <= 1.5 * std::max(e0, 1e-300)) {
    curve.verdict = "not level-coercive";
  }
  return curve;
}

Estimate integrate_over_manifold(const ManifoldModel& M, const ScalarField& f, double window_radius,
                                 std::size_t samples, std::size_t strata, std::uint64_t seed) {
  if (!(window_radius > 0.0) || strata == 0 || samples < 2 * strata) {
    throw DomainError("integrate_over_manifold needs L > 0, strata >= 1 and samples >= 2 * strata");
  }
  std::vector<double> value(strata);
  std::vector<double> var(strata);
  const std::size_t per = samples / strata;
  parallel_for(strata, default_threads(), [&](std::size_t k) {
    const double a = window_radius * static_cast<double>(k) / static_cast<double>(strata);
    const double b = window_radius * static_cast<double>(k + 1) / static_cast<double>(strata);
    AnnulusSampler ann(M, a, b);
    RandomCubeSource src(ann.cube_dimension(), derive_seed(seed, k));
    RunningStats stats;
    std::vector<double> vals(per);
    for (std::size_t s = 0; s < per; ++s) {
      vals[s] = f(ann.sample(src));
      stats.add(vals[s]);
    }
    value[k] = ann.volume() * pairwise_sum(vals) / static_cast<double>(per);
    const double se = ann.volume() * stats.standard_error();
    var[k] = se * se;
  });
  Estimate e;
  e.value = pairwise_sum(value);
  e.standard_error = std::sqrt(pairwise_sum(var));
  e.method = "stratified_radial_mc";
  return e;
}

Estimate coarea_quadrature(const std::function<double(double)>& h, const WeightTable& table) {
  const std::size_t n = table.values.size();
  if (n < 2) throw DomainError("coarea_quadrature needs at least two table nodes");
  const double dz = table.z[1][0] - table.z[0][0];
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs(table.z[k][0] - table.z[k - 1][0] - dz) > 1e-9 * std::max(1.0, std::abs(dz))) {
      throw DomainError("coarea_quadrature needs a uniform grid");
    }
  }
  std::vector<double> w(n, 0.0);
  const std::size_t simpson_end = (n % 2 == 1) ? n - 1 : n - 2;
  for (std::size_t k = 0; k + 2 <= simpson_end; k += 2) {
    w[k] += dz / 3.0;
    w[k + 1] += 4.0 * dz / 3.0;
    w[k + 2] += dz / 3.0;
  }
  if (simpson_end < n - 1) {
    w[n - 2] += 0.5 * dz;
    w[n - 1] += 0.5 * dz;
  }
  std::vector<double> terms(n);
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double hk = h(table.z[k][0]);
    terms[k] = w[k] * hk * table.values[k];
    const double s = w[k] * hk * table.standard_errors[k];
    var += s * s;
  }
  Estimate e;
  e.value = pairwise_sum(terms);
  e.standard_error = std::sqrt(var);
  e.method = "simpson_over_table";
  return e;
}

std::string to_string(TrendVerdict v) {
  switch (v) {
    case TrendVerdict::Vanishes: return "vanishes";
    case TrendVerdict::BoundedBelow: return "bounded_below";
    case TrendVerdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

TrendVerdict classify_trend(const std::vector<double>& values, const std::vector<double>& errors) {
  if (values.size() < 2 || errors.size() != values.size()) return TrendVerdict::Inconclusive;
  bool monotone = true;
  for (std::size_t j = 0; j + 1 < values.size(); ++j) {
    if (values[j + 1] > values[j] + 3.0 * std::hypot(errors[j], errors[j + 1])) monotone = false;
  }
  const double first = values.front();
  const double last = values.back();
  if (!(first > 0.0)) return TrendVerdict::Inconclusive;
  if (monotone && last + 3.0 * errors.back() <= 0.6 * first) return TrendVerdict::Vanishes;
  if (last + 3.0 * errors.back() >= 0.6 * first) return TrendVerdict::BoundedBelow;
  return TrendVerdict::Inconclusive;
}

nlohmann::json to_json(const DiagnosticsReport& report) {
  nlohmann::json j;
  j["map_kind"] = report.map_kind;
  j["radii"] = report.radii;
  nlohmann::json delta = nlohmann::json::array();
  for (const auto& d : report.delta) {
    delta.push_back({{"value", d.value},
                     {"stderr", d.standard_error},
                     {"witness_z", d.witness_z.size() ? d.witness_z[0] : 0.0},
                     {"cells", d.cells},
                     {"skipped_levels", d.skipped_levels}});
  }
  j["delta_r"] = delta;
  nlohmann::json sigma = nlohmann::json::array();
  for (const auto& s : report.sigma) {
    sigma.push_back({{"sigma", s.sigma},
                     {"stderr", s.standard_error},
                     {"j_R", s.j_R},
                     {"eps_thick", s.eps_thick},
                     {"bound", s.bound},
                     {"witness_profile", s.witness_profile}});
  }
  j["sigma_R"] = sigma;
  j["eps_thick"] = report.eps_thick;
  nlohmann::json diam = nlohmann::json::array();
  for (const auto& p : report.diameters.points) {
    diam.push_back({{"distance_from_pole", p.distance_from_pole},
                    {"diameter", p.diameter},
                    {"level_samples", p.level_samples},
                    {"low_confidence", p.low_confidence},
                    {"touches_window", p.touches_window}});
  }
  j["level_diameters"] = diam;
  j["level_coercivity"] = report.diameters.verdict;
  j["delta_verdict"] = to_string(report.delta_verdict);
  j["sigma_verdict"] = to_string(report.sigma_verdict);
  j["metadata"] = report.metadata;
  return j;
}

DiagnosticsReport run_diagnostics(const LevelMap& phi, const ManifoldModel& M, const std::vector<double>& radii,
                                  const DiagnosticsOptions& opts) {
  if (radii.empty()) throw DomainError("diagnostics need at least one radius");
  DiagnosticsReport rep;
  rep.map_kind = to_string(phi.kind());
  rep.radii = radii;
  std::vector<double> dv, de, sv, se;
  std::vector<Point> base;
  Vec e1 = Vec::Zero(M.dim());
  e1[M.kind() == ManifoldKind::ProductCircleEuclidean ? 1 : 0] = 1.0;
  for (double R : radii) {
    const SupResult d = delta_r(phi, M, R, opts.r, default_level_grid(R, opts.r, opts.levels), opts.y_samples,
                                opts.level);
    dv.push_back(d.value);
    de.push_back(d.standard_error);
    rep.delta.push_back(d);
    base.push_back(M.exp_map(e1, R));
    if (opts.sigma) {
      const double z0 = phi.evaluate_scalar(base.back());
      const SigmaResult s = sigma_R(phi, M, R, opts.r, default_profile_family(z0, opts.r), opts.q, opts.level);
      sv.push_back(s.sigma);
      se.push_back(s.standard_error);
      rep.eps_thick = std::min(rep.eps_thick, s.eps_thick);
      rep.sigma.push_back(s);
    }
  }
  LevelSampleOptions lo;
  lo.window_radius = opts.level.window_radius;
  lo.seed = derive_seed(opts.level.seed, 700);
  rep.diameters = level_diameter_curve(phi, M, base, lo);
  rep.delta_verdict = classify_trend(dv, de);
  rep.sigma_verdict = opts.sigma ? classify_trend(sv, se) : TrendVerdict::Inconclusive;
  rep.metadata = {{"manifold", M.to_json()},
                  {"map", phi.to_json()},
                  {"r", opts.r},
                  {"levels", opts.levels},
                  {"y_samples", opts.y_samples},
                  {"mc_samples", opts.level.mc_samples},
                  {"psi_samples", opts.level.psi_samples},
                  {"seed", opts.level.seed}};
  return rep;
}

}  // namespace sobcomp
