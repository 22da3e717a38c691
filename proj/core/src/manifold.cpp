#include "sobcomp/manifold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include "sobcomp/errors.hpp"

namespace sobcomp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double gk_integrate(const auto& f, double a, double b) {
  if (b <= a) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13, &err);
}

// 1 - |x|^2 without cancellation near the boundary of the ball
double one_minus_sq(const Vec& x) {
  const double n = x.norm();
  return (1.0 - n) * (1.0 + n);
}

}  // namespace

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return "euclidean";
    case ManifoldKind::Hyperbolic: return "hyperbolic";
    case ManifoldKind::ProductCircleEuclidean: return "product_circle";
  }
  return "unknown";
}

double unit_ball_volume(int m) {
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

double angle_difference(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  return d;
}

double normal_quantile(double u) {
  static const boost::math::normal_distribution<double> standard;
  u = std::clamp(u, 1e-300, 1.0 - 1e-16);
  return boost::math::quantile(standard, u);
}

ManifoldModel::ManifoldModel(ManifoldKind kind, int dim, double curvature, double circle_radius)
    : kind_(kind), dim_(dim), curvature_(curvature), circle_radius_(circle_radius) {
  if (dim < 2 || dim > kMaxDim) throw DomainError("manifold dimension must lie in [2, 8]");
  unit_ball_volume_ = ball_volume(1.0);
}

ManifoldModel ManifoldModel::euclidean(int m) {
  return ManifoldModel(ManifoldKind::Euclidean, m, 0.0, 0.0);
}

ManifoldModel ManifoldModel::hyperbolic(int m, double curvature) {
  if (!(curvature < 0.0) || !std::isfinite(curvature)) {
    throw DomainError("hyperbolic curvature must be negative and finite");
  }
  return ManifoldModel(ManifoldKind::Hyperbolic, m, curvature, 0.0);
}

ManifoldModel ManifoldModel::product_circle(int n, double circle_radius) {
  if (n < 1) throw DomainError("product_circle needs n >= 1");
  if (!(circle_radius > 0.0) || !std::isfinite(circle_radius)) {
    throw DomainError("circle_radius must be positive");
  }
  return ManifoldModel(ManifoldKind::ProductCircleEuclidean, n + 1, 0.0, circle_radius);
}

ManifoldModel ManifoldModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("manifold descriptor must be a JSON object");
  const std::string kind = j.value("kind", std::string("euclidean"));
  if (!j.contains("dim")) throw DataError("manifold descriptor needs \"dim\"");
  const int dim = j.at("dim").get<int>();
  if (kind == "euclidean") return euclidean(dim);
  if (kind == "hyperbolic") return hyperbolic(dim, j.value("curvature", -1.0));
  if (kind == "product_circle") return product_circle(dim - 1, j.value("circle_radius", 1.0));
  throw DataError("unknown manifold kind: " + kind);
}

nlohmann::json ManifoldModel::to_json() const {
  nlohmann::json j{{"kind", to_string(kind_)}, {"dim", dim_}};
  if (kind_ == ManifoldKind::Hyperbolic) j["curvature"] = curvature_;
  if (kind_ == ManifoldKind::ProductCircleEuclidean) j["circle_radius"] = circle_radius_;
  return j;
}

std::string ManifoldModel::name() const {
  std::string s = to_string(kind_) + "(dim=" + std::to_string(dim_);
  if (kind_ == ManifoldKind::Hyperbolic) s += ", curvature=" + std::to_string(curvature_);
  if (kind_ == ManifoldKind::ProductCircleEuclidean) s += ", circle_radius=" + std::to_string(circle_radius_);
  return s + ")";
}

double ManifoldModel::injectivity_radius() const {
  if (kind_ == ManifoldKind::ProductCircleEuclidean) return std::numbers::pi * circle_radius_;
  return std::numeric_limits<double>::infinity();
}

double ManifoldModel::ricci_lower_bound() const {
  return kind_ == ManifoldKind::Hyperbolic ? (dim_ - 1) * curvature_ : 0.0;
}

double ManifoldModel::unit_ball_volume_infimum() const { return unit_ball_volume_; }

Point ManifoldModel::pole() const { return Vec::Zero(dim_); }

bool ManifoldModel::is_valid(const Point& x) const {
  if (x.size() != dim_ || !x.allFinite()) return false;
  switch (kind_) {
    case ManifoldKind::Euclidean: return true;
    case ManifoldKind::Hyperbolic: return x.squaredNorm() < 1.0;
    case ManifoldKind::ProductCircleEuclidean: return x[0] >= 0.0 && x[0] < kTwoPi;
  }
  return false;
}

void ManifoldModel::validate(const Point& x) const {
  if (x.size() != dim_) throw DomainError("point has wrong dimension for " + name());
  if (!is_valid(x)) throw DomainError("point lies outside the chart of " + name());
}

double ManifoldModel::distance(const Point& x, const Point& y) const {
  validate(x);
  validate(y);
  switch (kind_) {
    case ManifoldKind::Euclidean: return (x - y).norm();
    case ManifoldKind::Hyperbolic: {
      const double c = std::sqrt(-curvature_);
      const double num = (x - y).norm();
      return (2.0 / c) * std::asinh(num / std::sqrt(one_minus_sq(x) * one_minus_sq(y)));
    }
    case ManifoldKind::ProductCircleEuclidean: {
      const double arc = circle_radius_ * std::abs(angle_difference(x[0], y[0]));
      const double flat = (x.tail(dim_ - 1) - y.tail(dim_ - 1)).norm();
      return std::hypot(arc, flat);
    }
  }
  return 0.0;
}

double ManifoldModel::distance_from_pole(const Point& x) const {
  validate(x);
  switch (kind_) {
    case ManifoldKind::Euclidean: return x.norm();
    case ManifoldKind::Hyperbolic: return (2.0 / std::sqrt(-curvature_)) * std::atanh(x.norm());
    case ManifoldKind::ProductCircleEuclidean:
      return std::hypot(circle_radius_ * angle_difference(x[0], 0.0), x.tail(dim_ - 1).norm());
  }
  return 0.0;
}

double ManifoldModel::ball_volume(double r) const {
  if (!(r > 0.0)) throw DomainError("ball_volume needs r > 0");
  const int m = dim_;
  switch (kind_) {
    case ManifoldKind::Euclidean: return unit_ball_volume(m) * std::pow(r, m);
    case ManifoldKind::Hyperbolic: {
      const double c = std::sqrt(-curvature_);
      const double area = m * unit_ball_volume(m);
      // split so each panel sees a moderate dynamic range of sinh^(m-1)
      const int panels = std::max(1, static_cast<int>(std::ceil(c * r)));
      double total = 0.0;
      for (int i = 0; i < panels; ++i) {
        const double a = r * i / panels;
        const double b = r * (i + 1) / panels;
        total += gk_integrate([&](double t) { return std::pow(std::sinh(c * t) / c, m - 1); }, a, b);
      }
      return area * total;
    }
    case ManifoldKind::ProductCircleEuclidean: {
      const int n = m - 1;
      const double slab = std::numbers::pi * circle_radius_;
      if (r <= slab) return unit_ball_volume(m) * std::pow(r, m);
      const double wn = unit_ball_volume(n);
      return 2.0 * gk_integrate([&](double t) { return wn * std::pow(r * r - t * t, 0.5 * n); }, 0.0, slab);
    }
  }
  return 0.0;
}

double ManifoldModel::sphere_area(double r) const {
  if (!(r > 0.0)) throw DomainError("sphere_area needs r > 0");
  const int m = dim_;
  switch (kind_) {
    case ManifoldKind::Euclidean: return m * unit_ball_volume(m) * std::pow(r, m - 1);
    case ManifoldKind::Hyperbolic: {
      const double c = std::sqrt(-curvature_);
      return m * unit_ball_volume(m) * std::pow(std::sinh(c * r) / c, m - 1);
    }
    case ManifoldKind::ProductCircleEuclidean: {
      const int n = m - 1;
      const double slab = std::numbers::pi * circle_radius_;
      if (r <= slab) return m * unit_ball_volume(m) * std::pow(r, m - 1);
      const double wn = unit_ball_volume(n);
      // d/dr of the slab integral; the integrand is smooth since r > slab
      return 2.0 * gk_integrate(
                       [&](double t) { return wn * n * r * std::pow(r * r - t * t, 0.5 * n - 1.0); }, 0.0, slab);
    }
  }
  return 0.0;
}

Point ManifoldModel::exp_map(const Vec& direction, double r) const {
  if (direction.size() != dim_) throw DomainError("direction has wrong dimension");
  if (std::abs(direction.norm() - 1.0) > 1e-12) throw DomainError("exp_map direction must have unit norm");
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("exp_map needs finite r >= 0");
  switch (kind_) {
    case ManifoldKind::Euclidean: return direction * r;
    case ManifoldKind::Hyperbolic: {
      const double c = std::sqrt(-curvature_);
      const double rho = std::tanh(0.5 * c * r);
      if (!(rho < 1.0)) throw DomainError("radius too large for the Poincare chart in double precision");
      return direction * rho;
    }
    case ManifoldKind::ProductCircleEuclidean: {
      Point p(dim_);
      p[0] = wrap_angle(direction[0] * r / circle_radius_);
      p.tail(dim_ - 1) = direction.tail(dim_ - 1) * r;
      return p;
    }
  }
  return pole();
}

Vec ManifoldModel::direction_from_pole(const Point& x) const {
  validate(x);
  Vec v = x;
  if (kind_ == ManifoldKind::ProductCircleEuclidean) v[0] = circle_radius_ * angle_difference(x[0], 0.0);
  const double n = v.norm();
  if (n == 0.0) {
    Vec e = Vec::Zero(dim_);
    e[0] = 1.0;
    return e;
  }
  return v / n;
}

Point ManifoldModel::transport(const Point& a, const Point& x) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return a + x;
    case ManifoldKind::Hyperbolic: {
      // Mobius addition a (+) x, an isometry of the ball sending 0 to a
      const double ax = a.dot(x);
      const double aa = a.squaredNorm();
      const double xx = x.squaredNorm();
      const double den = 1.0 + 2.0 * ax + aa * xx;
      Point p = ((1.0 + 2.0 * ax + xx) * a + (1.0 - aa) * x) / den;
      // rounding can land a hair outside the ball for points near the boundary
      const double n = p.norm();
      if (n >= 1.0) p *= std::nextafter(1.0, 0.0) / n;
      return p;
    }
    case ManifoldKind::ProductCircleEuclidean: {
      Point p = a + x;
      p[0] = wrap_angle(a[0] + x[0]);
      return p;
    }
  }
  return x;
}

double ManifoldModel::volume_density(const Point& x) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return 1.0;
    case ManifoldKind::Hyperbolic: {
      const double c = std::sqrt(-curvature_);
      return std::pow(2.0 / (c * one_minus_sq(x)), dim_);
    }
    case ManifoldKind::ProductCircleEuclidean: return circle_radius_;
  }
  return 1.0;
}

Vec ManifoldModel::metric_diagonal(const Point& x) const {
  Vec g = Vec::Ones(dim_);
  if (kind_ == ManifoldKind::Hyperbolic) {
    const double lam = 2.0 / (std::sqrt(-curvature_) * one_minus_sq(x));
    g.setConstant(lam * lam);
  } else if (kind_ == ManifoldKind::ProductCircleEuclidean) {
    g[0] = circle_radius_ * circle_radius_;
  }
  return g;
}

void ManifoldModel::chart_box(double r, Vec& lo, Vec& hi) const {
  lo.resize(dim_);
  hi.resize(dim_);
  switch (kind_) {
    case ManifoldKind::Euclidean:
      lo.setConstant(-r);
      hi.setConstant(r);
      break;
    case ManifoldKind::Hyperbolic: {
      const double rho = std::tanh(0.5 * std::sqrt(-curvature_) * r);
      lo.setConstant(-rho);
      hi.setConstant(rho);
      break;
    }
    case ManifoldKind::ProductCircleEuclidean:
      lo.setConstant(-r);
      hi.setConstant(r);
      lo[0] = 0.0;
      hi[0] = kTwoPi;
      break;
  }
}

AnnulusSampler::AnnulusSampler(const ManifoldModel& M, double r_inner, double r_outer)
    : M_(M), r_inner_(r_inner), r_outer_(r_outer) {
  if (!(r_inner >= 0.0) || !(r_outer > r_inner)) throw DomainError("annulus needs 0 <= r_inner < r_outer");
  const int m = M.dim();
  volume_ = M.ball_volume(r_outer) - (r_inner > 0.0 ? M.ball_volume(r_inner) : 0.0);
  cube_dim_ = static_cast<std::size_t>(m) + 1;
  if (M.kind() == ManifoldKind::ProductCircleEuclidean) {
    slab_rejection_ = r_outer > M.injectivity_radius();
  }
  if (M.kind() == ManifoldKind::Hyperbolic) {
    const double c = std::sqrt(-M.curvature());
    const int nodes = 2048;
    table_r_.resize(nodes + 1);
    table_v_.resize(nodes + 1);
    table_v_[0] = 0.0;
    for (int i = 0; i <= nodes; ++i) table_r_[i] = r_inner + (r_outer - r_inner) * i / nodes;
    const double area = m * unit_ball_volume(m);
    for (int i = 0; i < nodes; ++i) {
      const double piece = boost::math::quadrature::gauss<double, 15>::integrate(
          [&](double t) { return area * std::pow(std::sinh(c * t) / c, m - 1); }, table_r_[i], table_r_[i + 1]);
      table_v_[i + 1] = table_v_[i] + piece;
    }
    volume_ = table_v_.back();
  }
}

double AnnulusSampler::radius_from_unit(double u) const {
  const int m = M_.dim();
  if (M_.kind() != ManifoldKind::Hyperbolic) {
    const double a = std::pow(r_inner_, m);
    const double b = std::pow(r_outer_, m);
    return std::pow(a + u * (b - a), 1.0 / m);
  }
  const double target = u * volume_;
  auto it = std::upper_bound(table_v_.begin(), table_v_.end(), target);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - table_v_.begin()) - 1));
  i = std::min(i, table_v_.size() - 2);
  const double lo = table_r_[i];
  const double hi = table_r_[i + 1];
  const double c = std::sqrt(-M_.curvature());
  const double area = m * unit_ball_volume(m);
  auto density = [&](double t) { return area * std::pow(std::sinh(c * t) / c, m - 1); };
  double r = lo + (hi - lo) * (target - table_v_[i]) / std::max(table_v_[i + 1] - table_v_[i], 1e-300);
  for (int iter = 0; iter < 4; ++iter) {
    const double v = table_v_[i] + boost::math::quadrature::gauss<double, 7>::integrate(density, lo, r);
    const double d = density(r);
    if (d <= 0.0) break;
    r = std::clamp(r - (v - target) / d, lo, hi);
  }
  return r;
}

void AnnulusSampler::sample_polar(UnitCubeSource& source, Vec& direction, double& radius) const {
  const int m = M_.dim();
  std::array<double, kMaxDim + 1> u{};
  std::span<double> cube(u.data(), cube_dim_);
  const double slab = M_.injectivity_radius();
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    source.next(cube);
    direction.resize(m);
    for (int i = 0; i < m; ++i) direction[i] = normal_quantile(u[i]);
    const double n = direction.norm();
    if (!(n > 0.0)) continue;
    direction /= n;
    radius = radius_from_unit(u[m]);
    if (slab_rejection_ && std::abs(direction[0]) * radius > slab) continue;
    return;
  }
  throw NumericalError("annulus sampler rejection loop did not terminate");
}

Point AnnulusSampler::sample(UnitCubeSource& source) const {
  Vec dir;
  double r = 0.0;
  sample_polar(source, dir, r);
  return M_.exp_map(dir, r);
}

Point AnnulusSampler::sample_at(UnitCubeSource& source, const Point& center, const Mat* frame) const {
  Vec dir;
  double r = 0.0;
  sample_polar(source, dir, r);
  if (frame != nullptr) {
    dir = (*frame) * dir;
    dir.normalize();
  }
  return M_.transport(center, M_.exp_map(dir, r));
}

}  // namespace sobcomp

namespace sobcomp {

Mat rotation_to(const Vec& d) {
  const auto m = d.size();
  Mat Q = Mat::Identity(m, m);
  const double n = d.norm();
  if (!(n > 0.0)) return Q;
  const Vec u = d / n;
  const double c = u[0];
  Vec w = u;
  w[0] = 0.0;
  const double s = w.norm();
  if (s < 1e-15) {
    if (c < 0.0) {
      // half-turn in the (e1, e2) plane
      Q(0, 0) = -1.0;
      Q(1, 1) = -1.0;
    }
    return Q;
  }
  w /= s;
  Vec e1 = Vec::Zero(m);
  e1[0] = 1.0;
  Q += (c - 1.0) * (e1 * e1.transpose() + w * w.transpose()) + s * (w * e1.transpose() - e1 * w.transpose());
  return Q;
}

Mat block_frame(const Vec& y, const std::vector<int>& blocks) {
  const auto m = y.size();
  Mat Q = Mat::Identity(m, m);
  Eigen::Index start = 0;
  for (int b : blocks) {
    if (b >= 2 && start + b <= m) Q.block(start, start, b, b) = rotation_to(y.segment(start, b));
    start += b;
  }
  return Q;
}

}  // namespace sobcomp
