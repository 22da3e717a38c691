#include "sobcomp/groundstate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sobcomp/errors.hpp"
#include "sobcomp/io.hpp"
#include "sobcomp/sampling.hpp"

namespace sobcomp {

namespace {

// |x|^{e-2} x, with 0 at 0 for every e > 1
double signed_power(double x, double e) {
  if (x == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(x), e - 1.0), x);
}

const RadialGrid& grid_of(const RadialProfile& f) {
  if (!f.grid) throw DataError("radial profile has no grid");
  return *f.grid;
}

// Solves the symmetric tridiagonal system (diag, off) x = rhs (Thomas algorithm).
std::vector<double> solve_tridiagonal(std::vector<double> diag, const std::vector<double>& off,
                                      std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = off[i - 1] / diag[i - 1];
    diag[i] -= w * off[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - off[i] * x[i + 1]) / diag[i];
  return x;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * b[i];
  return pairwise_sum(t);
}

double power_sum(const RadialProfile& f, double e) {
  const RadialGrid& g = grid_of(f);
  std::vector<double> t(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) t[k] = std::pow(std::abs(f.f[k]), e) * g.volume[k];
  return pairwise_sum(t);
}

}  // namespace

SpaceParams::SpaceParams(double p, double q, int m) : p_(p), q_(q), m_(m) {
  if (m < 2) throw DomainError("dimension must be at least 2");
  if (!(p > 1.0 && p < m)) throw DomainError("need 1 < p < m");
  if (!(q > p && q < critical_exponent()))
    throw DomainError("need p < q < p* = " + format_double(critical_exponent()));
}

std::shared_ptr<const RadialGrid> RadialGrid::from_function(const std::function<double(double)>& psi, double r_max,
                                                            double dr) {
  if (!(dr > 0.0) || !(r_max > dr)) throw DomainError("radial grid needs 0 < dr < R_max");
  const auto K = static_cast<std::size_t>(std::llround(r_max / dr));
  if (std::abs(static_cast<double>(K) * dr - r_max) > 1e-9 * r_max)
    throw DomainError("R_max must be a multiple of dr");
  auto g = std::make_shared<RadialGrid>();
  g->dr = dr;
  g->r.resize(K + 1);
  g->psi.resize(K + 1);
  g->psi_mid.resize(K);
  g->volume.assign(K + 1, 0.0);
  for (std::size_t k = 0; k <= K; ++k) {
    g->r[k] = static_cast<double>(k) * dr;
    g->psi[k] = psi(g->r[k]);
    if (k < K) g->psi_mid[k] = psi(g->r[k] + 0.5 * dr);
  }
  for (std::size_t k = 0; k < K; ++k) {
    const double a = g->r[k];
    const double h = 0.5 * dr;
    g->volume[k] += h / 6.0 * (g->psi[k] + 4.0 * psi(a + 0.5 * h) + g->psi_mid[k]);
    g->volume[k + 1] += h / 6.0 * (g->psi_mid[k] + 4.0 * psi(a + 1.5 * h) + g->psi[k + 1]);
  }
  for (double v : g->psi)
    if (!std::isfinite(v) || v < 0.0) throw DataError("coarea weight must be finite and nonnegative");
  for (double v : g->volume)
    if (!std::isfinite(v) || !(v > 0.0)) throw DataError("coarea weight vanishes on a dual cell");
  return g;
}

std::shared_ptr<const RadialGrid> RadialGrid::from_manifold(const ManifoldModel& M, double r_max, double dr) {
  return from_function([&M](double r) { return r > 0.0 ? M.sphere_area(r) : 0.0; }, r_max, dr);
}

std::shared_ptr<const RadialGrid> RadialGrid::from_table(const WeightTable& table, double r_max, double dr) {
  if (table.z.size() < 2) throw DataError("weight table needs at least two rows");
  std::vector<double> z(table.z.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = table.z[i][0];
  if (z.front() > 0.0 || z.back() < r_max) throw DataError("weight table does not cover [0, R_max]");
  const std::vector<double>& v = table.values;
  return from_function(
      [&](double r) {
        const auto it = std::upper_bound(z.begin(), z.end(), r);
        if (it == z.end()) return v.back();
        const std::size_t i = static_cast<std::size_t>(it - z.begin());
        if (i == 0) return v.front();
        const double t = (r - z[i - 1]) / (z[i] - z[i - 1]);
        return (1.0 - t) * v[i - 1] + t * v[i];
      },
      r_max, dr);
}

double RadialProfile::at(double r) const {
  const RadialGrid& g = grid_of(*this);
  if (r < 0.0) r = -r;
  if (r >= g.r_max()) return 0.0;
  const double s = r / g.dr;
  const auto k = static_cast<std::size_t>(s);
  const double t = s - static_cast<double>(k);
  return (1.0 - t) * f[k] + t * f[k + 1];
}

void RadialProfile::validate() const {
  const RadialGrid& g = grid_of(*this);
  if (f.size() != g.size()) throw DataError("profile and grid sizes differ");
  for (double v : f)
    if (!std::isfinite(v)) throw DataError("profile has non-finite values");
  if (f.back() != 0.0) throw DataError("profile must vanish at R_max");
}

RadialProfile gaussian_profile(std::shared_ptr<const RadialGrid> grid, double center, double width) {
  if (!(width > 0.0)) throw DomainError("bump width must be positive");
  RadialProfile p{std::move(grid), {}};
  p.f.resize(p.grid->size());
  for (std::size_t k = 0; k < p.f.size(); ++k) {
    const double d = (p.grid->r[k] - center) / width;
    p.f[k] = std::exp(-0.5 * d * d);
  }
  p.f.back() = 0.0;
  return p;
}

double discrete_energy(const RadialProfile& f, const SpaceParams& params) {
  f.validate();
  const RadialGrid& g = *f.grid;
  const double p = params.p();
  const std::size_t K = g.size() - 1;
  std::vector<double> t(2 * K + 1);
  for (std::size_t k = 0; k < K; ++k) {
    const double D = (f.f[k + 1] - f.f[k]) / g.dr;
    t[k] = std::pow(std::abs(D), p) * g.psi_mid[k] * g.dr;
  }
  for (std::size_t k = 0; k <= K; ++k) t[K + k] = std::pow(std::abs(f.f[k]), p) * g.volume[k];
  return pairwise_sum(t);
}

std::vector<double> discrete_energy_gradient(const RadialProfile& f, const SpaceParams& params) {
  f.validate();
  const RadialGrid& g = *f.grid;
  const double p = params.p();
  const std::size_t K = g.size() - 1;
  std::vector<double> flux(K);
  for (std::size_t k = 0; k < K; ++k) flux[k] = g.psi_mid[k] * signed_power((f.f[k + 1] - f.f[k]) / g.dr, p);
  std::vector<double> grad(K + 1, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    const double left = j > 0 ? flux[j - 1] : 0.0;
    grad[j] = p * (left - flux[j]) + p * g.volume[j] * signed_power(f.f[j], p);
  }
  return grad;
}

double constraint_norm(const RadialProfile& f, double q) {
  if (q < 1.0) throw DomainError("constraint exponent must be at least 1");
  f.validate();
  return std::pow(power_sum(f, q), 1.0 / q);
}

std::vector<double> el_operator(const RadialProfile& f, const SpaceParams& params) {
  f.validate();
  const RadialGrid& g = *f.grid;
  const double p = params.p();
  const std::size_t K = g.size() - 1;
  std::vector<double> out(K + 1, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    const double left = j > 0 ? g.psi_mid[j - 1] * signed_power((f.f[j] - f.f[j - 1]) / g.dr, p) : 0.0;
    const double right = g.psi_mid[j] * signed_power((f.f[j + 1] - f.f[j]) / g.dr, p);
    out[j] = (left - right) / g.volume[j] + signed_power(f.f[j], p);
  }
  return out;
}

double el_residual(const RadialProfile& f, const SpaceParams& params, double mu) {
  const std::vector<double> L = el_operator(f, params);
  const RadialGrid& g = *f.grid;
  std::vector<double> t(g.size(), 0.0);
  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    const double res = L[j] - mu * signed_power(f.f[j], params.q());
    t[j] = res * res * g.volume[j];
  }
  return std::sqrt(pairwise_sum(t));
}

double el_residual(const RadialProfile& f, const SpaceParams& params) { return el_residual(f, params, 1.0); }

SolverResult minimize(const SpaceParams& params, const RadialProfile& init, const MinimizeOptions& opts) {
  init.validate();
  if (opts.window < 1 || opts.max_iter < 1 || !(opts.tol > 0.0) || !(opts.initial_step > 0.0))
    throw DomainError("invalid minimizer options");
  const RadialGrid& g = *init.grid;
  const std::size_t K = g.size() - 1;
  const double q = params.q();

  // weighted H^1 matrix on the free nodes 0..K-1 (the p = 2 energy Hessian / 2)
  std::vector<double> diag(K), off(K > 0 ? K - 1 : 0);
  for (std::size_t j = 0; j < K; ++j) {
    diag[j] = (g.psi_mid[j] + (j > 0 ? g.psi_mid[j - 1] : 0.0)) / g.dr + g.volume[j];
    if (j + 1 < K) off[j] = -g.psi_mid[j] / g.dr;
  }

  auto normalize = [&](RadialProfile& f) {
    for (double& v : f.f) v = std::abs(v);
    const double n = constraint_norm(f, q);
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("iterate has zero or non-finite L^q norm");
    for (double& v : f.f) v /= n;
  };

  SolverResult res;
  RadialProfile f = init;
  normalize(f);
  double E = discrete_energy(f, params);
  res.energy_log.push_back(E);
  double t = opts.initial_step;

  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<double> gE = discrete_energy_gradient(f, params);
    std::vector<double> gN(K + 1, 0.0);
    for (std::size_t j = 0; j < K; ++j) gN[j] = q * g.volume[j] * signed_power(f.f[j], q);
    gE.pop_back();
    gN.pop_back();
    for (double v : gE)
      if (!std::isfinite(v)) throw NumericalError("non-finite energy gradient at iteration " + std::to_string(it));
    const std::vector<double> PE = solve_tridiagonal(diag, off, gE);
    const std::vector<double> PN = solve_tridiagonal(diag, off, gN);
    const double alpha = dot(gN, PE) / dot(gN, PN);
    std::vector<double> dir(K);
    for (std::size_t j = 0; j < K; ++j) dir[j] = PE[j] - alpha * PN[j];
    const double slope = dot(gE, dir);
    if (!(slope > 1e-14 * E)) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    RadialProfile trial = f;
    for (int b = 0; b < opts.max_backtracks; ++b) {
      for (std::size_t j = 0; j < K; ++j) trial.f[j] = f.f[j] - t * dir[j];
      trial.f[K] = 0.0;
      normalize(trial);
      const double Et = discrete_energy(trial, params);
      if (Et < E) {
        f = trial;
        E = Et;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // no representable decrease left: stationary up to rounding
      if (slope * t < 1e-13 * E) {
        res.converged = true;
        break;
      }
      throw NumericalError("energy stagnated at iteration " + std::to_string(it) + ": E = " + format_double(E) +
                           ", slope = " + format_double(slope) + ", step = " + format_double(t));
    }
    res.energy_log.push_back(E);
    res.iterations = it;
    if (opts.record_every > 0 && it % opts.record_every == 0) res.iterates.push_back(f);
    t = std::min(opts.initial_step, 2.0 * t);
    if (it >= opts.window) {
      const double old = res.energy_log[res.energy_log.size() - 1 - static_cast<std::size_t>(opts.window)];
      if ((old - E) / E < opts.tol) {
        res.converged = true;
        break;
      }
    }
  }
  res.u0 = f;
  res.kappa = E;
  res.constraint_error = std::abs(power_sum(f, q) - 1.0);
  if (opts.record_every > 0) res.iterates.push_back(f);
  return res;
}

double fit_multiplier(const RadialProfile& u0, const SpaceParams& params) {
  const std::vector<double> L = el_operator(u0, params);
  const RadialGrid& g = *u0.grid;
  std::vector<double> num(g.size(), 0.0), den(g.size(), 0.0);
  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    const double phi = signed_power(u0.f[j], params.q());
    num[j] = g.volume[j] * L[j] * phi;
    den[j] = g.volume[j] * phi * phi;
  }
  const double d = pairwise_sum(den);
  if (!(d > 0.0)) throw NumericalError("multiplier fit needs a nonzero profile");
  return pairwise_sum(num) / d;
}

RadialProfile rescale_to_EL(SolverResult& result, const SpaceParams& params) {
  result.mu = fit_multiplier(result.u0, params);
  if (!(result.mu > 0.0))
    throw NumericalError("multiplier mu = " + format_double(result.mu) + " is not positive; inconsistent with kappa > 0");
  result.lambda_scale = std::pow(result.mu, 1.0 / (params.q() - params.p()));
  result.u = result.u0;
  for (double& v : result.u.f) v *= result.lambda_scale;
  result.residual_u0 = el_residual(result.u0, params, result.mu);
  result.residual_u = el_residual(result.u, params);
  const double E = discrete_energy(result.u, params);
  const double Q = power_sum(result.u, params.q());
  result.nehari_relative = std::abs(E - Q) / Q;
  return result.u;
}

ConcentrationReport concentration_diagnostic(const std::vector<ScalarField>& sequence, const Discretization& net,
                                             double q, std::size_t samples, std::uint64_t seed) {
  if (sequence.size() < 2) throw DomainError("concentration diagnostic needs at least two functions");
  if (!(q > 0.0)) throw DomainError("exponent q must be positive");
  ConcentrationReport rep;
  LocalMassOptions opts;
  opts.samples = samples;
  opts.seed = seed;
  for (const ScalarField& u : sequence) {
    const LocalMassProfile prof =
        local_mass_profile(net, [&u, q](const Point& x) { return std::pow(std::abs(u(x)), q); }, opts);
    rep.sup.push_back(prof.supremum);
    rep.sup_standard_error.push_back(prof.standard_errors[prof.argmax]);
    rep.argmax.push_back(net.points[prof.argmax]);
    rep.argmax_radius.push_back(net.manifold.distance_from_pole(net.points[prof.argmax]));
  }

  const double ball = net.nu * net.epsilon;
  const std::size_t n = rep.sup.size();
  const double s0 = rep.sup.front();
  const double s1 = rep.sup.back();
  bool nonincreasing = true;
  for (std::size_t k = 1; k < n; ++k)
    if (rep.sup[k] > 1.05 * rep.sup[k - 1] + 3.0 * rep.sup_standard_error[k]) nonincreasing = false;
  const auto tail = static_cast<std::ptrdiff_t>(n / 2);
  const auto [lo, hi] = std::minmax_element(rep.argmax_radius.begin() + tail, rep.argmax_radius.end());
  const bool radius_grows = rep.argmax_radius.back() >= rep.argmax_radius.front() + 2.0 * ball;
  if (s0 > 0.0 && nonincreasing && s1 <= 0.25 * s0)
    rep.verdict = "vanishing";
  else if (s1 >= 0.5 * s0 && radius_grows)
    rep.verdict = "escaping";
  else if (s1 >= 0.5 * s0 && *hi - *lo <= 2.0 * ball)
    rep.verdict = "tight";
  else
    rep.verdict = "inconclusive";
  return rep;
}

ConcentrationReport concentration_diagnostic(const std::vector<RadialProfile>& iterates, const Discretization& net,
                                             double q, std::size_t samples, std::uint64_t seed) {
  std::vector<ScalarField> seq;
  const ManifoldModel M = net.manifold;
  for (const RadialProfile& f : iterates)
    seq.push_back([f, M](const Point& x) { return f.at(M.distance_from_pole(x)); });
  return concentration_diagnostic(seq, net, q, samples, seed);
}

GroundStateConfig GroundStateConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("ground-state config must be a JSON object");
  GroundStateConfig c;
  try {
    c.p = j.value("p", c.p);
    c.q = j.value("q", c.q);
    if (j.contains("manifold")) {
      const nlohmann::json& m = j.at("manifold");
      if (m.is_string())
        c.manifold = {{"kind", m.get<std::string>()}, {"dim", j.value("dim", 3)}};
      else
        c.manifold = m;
    } else if (j.contains("dim")) {
      c.manifold["dim"] = j.at("dim");
    }
    c.r_max = j.value("R_max", c.r_max);
    c.dr = j.value("dr", c.dr);
    c.tol = j.value("tol", c.tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.seed = j.value("seed", c.seed);
    c.init_center = j.value("init_center", c.init_center);
    c.init_width = j.value("init_width", c.init_width);
    c.init_noise = j.value("init_noise", c.init_noise);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad ground-state config: ") + e.what());
  }
  return c;
}

nlohmann::json GroundStateConfig::to_json() const {
  return {{"p", p},
          {"q", q},
          {"manifold", manifold},
          {"R_max", r_max},
          {"dr", dr},
          {"tol", tol},
          {"max_iter", max_iter},
          {"seed", seed},
          {"init_center", init_center},
          {"init_width", init_width},
          {"init_noise", init_noise}};
}

GroundStateRun solve_ground_state(const GroundStateConfig& config) {
  const ManifoldModel M = ManifoldModel::from_json(config.manifold);
  const SpaceParams params(config.p, config.q, M.dim());
  auto grid = RadialGrid::from_manifold(M, config.r_max, config.dr);
  RadialProfile init = gaussian_profile(grid, config.init_center, config.init_width);
  if (config.init_noise > 0.0) {
    RandomCubeSource src(1, config.seed);
    double u = 0.0;
    for (std::size_t k = 0; k + 1 < init.f.size(); ++k) {
      src.next({&u, 1});
      init.f[k] *= 1.0 + config.init_noise * (2.0 * u - 1.0);
    }
  }
  MinimizeOptions opts;
  opts.tol = config.tol;
  opts.max_iter = config.max_iter;
  GroundStateRun run{config, minimize(params, init, opts)};
  rescale_to_EL(run.result, params);
  return run;
}

nlohmann::json summary_json(const GroundStateRun& run) {
  const SolverResult& r = run.result;
  return {{"config", run.config.to_json()},
          {"kappa", r.kappa},
          {"mu", r.mu},
          {"lambda_scale", r.lambda_scale},
          {"residual_u0", r.residual_u0},
          {"residual_u", r.residual_u},
          {"nehari_relative", r.nehari_relative},
          {"constraint_error", r.constraint_error},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"energy_first", r.energy_log.front()},
          {"energy_last", r.energy_log.back()}};
}

void write_profile_csv(const SolverResult& result, const std::string& path) {
  CsvWriter out(path, {"r", "u0", "u"});
  const RadialGrid& g = *result.u0.grid;
  for (std::size_t k = 0; k < g.size(); ++k) out.row({g.r[k], result.u0.f[k], result.u.f.empty() ? 0.0 : result.u.f[k]});
  out.close();
}

}  // namespace sobcomp
