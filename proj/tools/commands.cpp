#include <algorithm>
#include <cmath>

#include "cli.hpp"
#include "sobcomp/discretize.hpp"
#include "sobcomp/errors.hpp"
#include "sobcomp/groundstate.hpp"
#include "sobcomp/io.hpp"
#include "sobcomp/levelmap.hpp"
#include "sobcomp/manifold.hpp"
#include "sobcomp/symmetry.hpp"

namespace sobcomp::cli {

using nlohmann::json;

std::filesystem::path RunContext::file(const std::string& name) {
  if (std::find(outputs.begin(), outputs.end(), name) == outputs.end()) outputs.push_back(name);
  return out / name;
}

void RunContext::write_sidecar(const std::string& name, const json& body) {
  json j = body;
  j["command"] = command;
  j["params"] = params;
  j["seed"] = seed;
  write_json(file(name).string(), j);
}

namespace {

std::string normalized(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

double num(const RunContext& c, const char* key) { return c.params.at(key).get<double>(); }
long long integer(const RunContext& c, const char* key) { return c.params.at(key).get<long long>(); }
std::size_t count(const RunContext& c, const char* key) {
  const long long v = integer(c, key);
  if (v < 0) throw DomainError(std::string("--") + key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}
std::string str(const RunContext& c, const char* key) { return c.params.at(key).get<std::string>(); }
std::vector<double> list(const RunContext& c, const char* key) {
  const std::vector<double> v = c.params.at(key).get<std::vector<double>>();
  if (v.empty()) throw DomainError(std::string("--") + key + " needs at least one value");
  return v;
}

// shared parameter groups
std::vector<ParamSpec> manifold_params(const char* kind, int dim) {
  return {{"manifold", kind, "model manifold: euclidean | hyperbolic | product_circle"},
          {"dim", dim, "dimension m (for product_circle: 1 + n)"},
          {"curvature", -1.0, "sectional curvature of the hyperbolic model"},
          {"circle_radius", 1.0, "radius a of the S^1 factor"}};
}

std::vector<ParamSpec> map_params(const char* kind) {
  return {{"map", kind, "level map: radial | lp_radial | block_radial | quasi_radial | bulged | pole_distance"},
          {"ell", 2.0, "exponent of lp_radial (inf allowed)"},
          {"blocks", json::array(), "block sizes of block_radial"},
          {"exponents", json::array(), "per-block norm exponents of block_radial"},
          {"offset", 0, "leading free coordinates of block_radial"},
          {"dilation", json::array(), "dilation exponents a_i of quasi_radial"},
          {"height", 1.0, "bump height of the bulged map"}};
}

std::vector<ParamSpec> group_params(const char* kind, const char* manifold, int dim) {
  std::vector<ParamSpec> p = manifold_params(manifold, dim);
  p.push_back({"group", kind, "rotations | block_rotations | circle_times_rotations | subgroup_fixing_axis | trivial"});
  p.push_back({"blocks", json::array(), "block sizes of block_rotations"});
  p.push_back({"n", 0, "rotated coordinates of subgroup_fixing_axis (0: dim - 1)"});
  p.push_back({"K", 64, "elements per circle factor of the finite group sampler"});
  return p;
}

std::vector<ParamSpec> concat(std::vector<ParamSpec> a, const std::vector<ParamSpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

ManifoldModel manifold_of(const RunContext& c) {
  std::string kind = normalized(str(c, "manifold"));
  if (kind == "product") kind = "product_circle";
  return ManifoldModel::from_json(
      {{"kind", kind}, {"dim", integer(c, "dim")}, {"curvature", num(c, "curvature")},
       {"circle_radius", num(c, "circle_radius")}});
}

LevelMap map_of(const RunContext& c, const ManifoldModel& M) {
  std::string kind = normalized(str(c, "map"));
  if (kind == "lp") kind = "lp_radial";
  if (kind == "block") kind = "block_radial";
  if (kind == "quasi") kind = "quasi_radial";
  if (kind == "pole") kind = "pole_distance";
  const double ell = num(c, "ell");
  json j = {{"kind", kind},
            {"dim", M.dim()},
            {"ell", std::isinf(ell) ? json("inf") : json(ell)},
            {"blocks", c.params.at("blocks")},
            {"exponents", c.params.at("exponents")}, {"offset", integer(c, "offset")},
            {"dilation", c.params.at("dilation")},   {"height", num(c, "height")}};
  const LevelMap phi = LevelMap::from_json(j, M);
  if (phi.source_dim() != M.dim()) throw DomainError("map and manifold dimensions differ");
  return phi;
}

GroupAction group_of(const RunContext& c, const ManifoldModel& M) {
  json j = {{"kind", normalized(str(c, "group"))}, {"K", integer(c, "K")}};
  const std::vector<double> blocks = c.params.at("blocks").get<std::vector<double>>();
  std::vector<int> b;
  for (double v : blocks) b.push_back(static_cast<int>(v));
  j["blocks"] = b;
  const long long n = integer(c, "n");
  j["n"] = n > 0 ? n : M.dim() - 1;
  return GroupAction::from_json(j, M);
}

LevelOptions level_options(const RunContext& c) {
  LevelOptions o;
  o.mc_samples = count(c, "mc");
  o.psi_samples = count(c, "psi_samples");
  o.window_radius = num(c, "window");
  o.seed = c.seed;
  return o;
}

Vec first_axis(const ManifoldModel& M) {
  Vec e = Vec::Zero(M.dim());
  e[M.kind() == ManifoldKind::ProductCircleEuclidean ? 1 : 0] = 1.0;
  return e;
}

std::vector<CsvCell> with_point(std::vector<CsvCell> row, const Point& x, int dim) {
  for (int k = 0; k < dim; ++k) row.emplace_back(k < x.size() ? x[k] : std::nan(""));
  return row;
}

std::vector<std::string> point_header(std::vector<std::string> h, const char* prefix, int dim) {
  for (int k = 0; k < dim; ++k) h.push_back(prefix + std::to_string(k));
  return h;
}

// --- commands ---

void net_build(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const double eps = num(c, "epsilon");
  const double L = num(c, "L");
  const std::string orbital = normalized(str(c, "orbital"));
  Discretization net;
  if (orbital == "rings") {
    net = rotational_orbital_net(M, L, eps);
  } else {
    NetOptions o;
    o.seed = c.seed;
    o.coverage_samples = count(c, "coverage_samples");
    net = greedy_net(M, L, eps, o);
    if (orbital == "pole_distance") {
      const double spacing = num(c, "label_spacing") > 0.0 ? num(c, "label_spacing") : 2.0 * eps;
      net = orbital_partition(net, pole_distance_label(M, spacing));
    } else if (orbital != "none") {
      throw DomainError("--orbital must be none, pole_distance or rings");
    }
  }
  const CoveringReport cov = check_covering(net, count(c, "coverage_samples"), derive_seed(c.seed, 1));
  write_net_csv(net, c.file("net.csv").string());
  std::vector<std::size_t> sizes;
  for (const auto& q : net.quasiorbits) sizes.push_back(q.size());
  c.write_sidecar("net.json", {{"net", net.metadata()},
                               {"points", net.size()},
                               {"covering_fraction", cov.fraction},
                               {"covering_samples", cov.samples},
                               {"min_separation", min_pairwise_distance(net)},
                               {"quasiorbit_sizes", sizes}});
}

void psi(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const LevelMap phi = map_of(c, M);
  PsiOptions po;
  const std::string method = normalized(str(c, "method"));
  if (method == "shell")
    po.method = PsiMethod::Shell;
  else if (method == "closed_form" || method == "closed")
    po.method = PsiMethod::ClosedForm;
  else if (method != "auto")
    throw DomainError("--method must be auto, shell or closed_form");
  po.window_radius = num(c, "window");
  po.seed = c.seed;
  po.quasi_monte_carlo = c.params.at("qmc").get<bool>();
  const WeightTable table = weight_table(phi, M, list(c, "z"), count(c, "samples"), po);
  write_weight_table_csv(table, c.file("psi.csv").string());
  c.write_sidecar("psi.json", {{"map", phi.to_json()},
                               {"manifold", M.to_json()},
                               {"method", table.method},
                               {"z", list(c, "z")},
                               {"values", table.values},
                               {"standard_errors", table.standard_errors},
                               {"shell_width_factor", table.shell_width_factor}});
}

void delta(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const LevelMap phi = map_of(c, M);
  const LevelOptions lo = level_options(c);
  const double r = num(c, "r");
  CsvWriter out(c.file("delta_r.csv").string(),
                point_header({"A", "delta", "stderr", "witness_z", "cells"}, "witness_y", M.dim()));
  json rows = json::array();
  for (double A : list(c, "A")) {
    const SupResult d = delta_r(phi, M, A, r, default_level_grid(A, r, count(c, "levels")), count(c, "y_samples"), lo);
    out.row(with_point({A, d.value, d.standard_error, d.witness_z[0], static_cast<long long>(d.cells)}, d.witness_y,
                       M.dim()));
    rows.push_back({{"A", A}, {"delta", d.value}, {"stderr", d.standard_error}, {"skipped_levels", d.skipped_levels}});
  }
  out.close();
  c.write_sidecar("delta_r.json", {{"map", phi.to_json()}, {"manifold", M.to_json()}, {"results", rows}});
}

void sigma(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const LevelMap phi = map_of(c, M);
  const LevelOptions lo = level_options(c);
  const double r = num(c, "r");
  CsvWriter out(c.file("sigma_r.csv").string(),
                {"R", "sigma", "stderr", "j_R", "eps_thick", "bound", "witness_profile"});
  json rows = json::array();
  for (double R : list(c, "R")) {
    const double z0 = phi.evaluate_scalar(M.exp_map(first_axis(M), R));
    const SigmaResult s = sigma_R(phi, M, R, r, default_profile_family(z0, r), num(c, "q"), lo);
    out.row({R, s.sigma, s.standard_error, static_cast<long long>(s.j_R), s.eps_thick, s.bound, s.witness_profile});
    rows.push_back({{"R", R}, {"sigma", s.sigma}, {"stderr", s.standard_error}, {"j_R", s.j_R}, {"bound", s.bound}});
  }
  out.close();
  c.write_sidecar("sigma_r.json", {{"map", phi.to_json()}, {"manifold", M.to_json()}, {"results", rows}});
}

void thickness(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const LevelMap phi = map_of(c, M);
  const LevelOptions lo = level_options(c);
  const double r = num(c, "r");
  CsvWriter out(c.file("thickness.csv").string(), {"A", "z", "ratio"});
  json rows = json::array();
  for (double A : list(c, "A")) {
    const std::vector<double> grid = default_level_grid(A, r, count(c, "levels"));
    const ThicknessResult t = thickness_ratio(phi, M, A, r, grid, count(c, "y_per_level"), lo);
    for (std::size_t k = 0; k < grid.size(); ++k) out.row({A, grid[k], t.per_level[k]});
    rows.push_back({{"A", A}, {"ratio", t.ratio}, {"stderr", t.standard_error}, {"witness_z", t.witness_z}});
  }
  out.close();
  c.write_sidecar("thickness.json", {{"map", phi.to_json()}, {"manifold", M.to_json()}, {"results", rows}});
}

void coercivity(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const GroupAction G = group_of(c, M);
  const CoercivityReport rep = coercivity_verdict(G, list(c, "radii"), count(c, "points"), c.seed);
  CsvWriter out(c.file("coercivity.csv").string(), {"radius", "envelope", "witness_diameter"});
  for (std::size_t i = 0; i < rep.probe_radii.size(); ++i)
    out.row({rep.probe_radii[i], rep.envelope[i],
             i < rep.witness_diameter.size() ? rep.witness_diameter[i] : std::nan("")});
  out.close();
  c.write_sidecar("coercivity.json", {{"group", G.to_json()},
                                      {"manifold", M.to_json()},
                                      {"verdict", rep.verdict},
                                      {"envelope", rep.envelope},
                                      {"witness_diameter", rep.witness_diameter}});
}

void average(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const GroupAction G = group_of(c, M);
  PolarGrid grid;
  grid.manifold = M;
  grid.max_radius = num(c, "max_radius");
  grid.radial_nodes = static_cast<int>(integer(c, "radial_nodes"));
  grid.angular_nodes = static_cast<int>(integer(c, "angular_nodes"));
  if (G.kind() == GroupKind::Rotations && M.dim() == 2 && grid.angular_nodes % G.K() != 0)
    throw DomainError("--angular_nodes must be a multiple of K so that the group permutes grid nodes");
  const double p = num(c, "p");
  const double scale = num(c, "scale");
  json rows = json::array();
  double worst_ratio = 0.0;
  double worst_idem = 0.0;
  for (std::size_t i = 0; i < count(c, "functions"); ++i) {
    const ScalarField f = random_smooth_field(M, derive_seed(c.seed, i), scale);
    const ScalarField Tf = average_TG(G, f);
    const double Ef = polar_grid_energy(grid, f, p);
    const double ETf = polar_grid_energy(grid, Tf, p);
    const ScalarField TTf = average_TG(G, Tf);
    double idem = 0.0;
    for (int a = 0; a < grid.radial_nodes; a += 7)
      for (int k = 0; k < grid.angular_nodes; k += 11) {
        const Point x = grid.node(a, k);
        idem = std::max(idem, std::abs(TTf(x) - Tf(x)));
      }
    worst_ratio = std::max(worst_ratio, ETf / Ef);
    worst_idem = std::max(worst_idem, idem);
    rows.push_back({{"function", i}, {"energy", Ef}, {"energy_averaged", ETf}, {"idempotence_error", idem}});
    if (i == 0) write_grid_csv(grid, {{"f", f}, {"TGf", Tf}}, c.file("average.csv").string());
  }
  c.write_sidecar("average.json", {{"group", G.to_json()},
                                   {"manifold", M.to_json()},
                                   {"p", p},
                                   {"functions", rows},
                                   {"max_energy_ratio", worst_ratio},
                                   {"max_idempotence_error", worst_idem}});
}

void quasisym(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const Discretization net = rotational_orbital_net(M, num(c, "L"), num(c, "epsilon"));
  const std::string kind = normalized(str(c, "function"));
  const std::size_t orbit = count(c, "quasiorbit");
  if (orbit < 1 || orbit > net.quasiorbits.size()) throw DomainError("--quasiorbit out of range");
  ScalarField f;
  if (kind == "invariant") {
    f = average_TG(group_of(c, M), random_smooth_field(M, c.seed, num(c, "L") / 2.0));
  } else if (kind == "canonical") {
    f = make_canonical_quasisymmetric(net, orbit - 1);
  } else if (kind == "offcenter") {
    const Point y = net.points[net.quasiorbits[orbit - 1].front()];
    const double radius = 0.5 * net.epsilon;
    f = [M, y, radius](const Point& x) { return bump_profile(M.distance(x, y) / radius); };
  } else {
    throw DomainError("--function must be invariant, canonical or offcenter");
  }
  QuasisymmetryParams qp;
  qp.base_index = count(c, "base_index");
  qp.lambda = num(c, "lambda");
  const QuasisymmetryReport rep = quasisymmetry_ratio(f, net, qp, count(c, "mc"), c.seed);
  CsvWriter out(c.file("quasisym.csv").string(),
                {"quasiorbit", "size", "max_mass", "min_mass", "ratio", "stderr", "reliable"});
  for (const QuasiorbitRatio& q : rep.ratios)
    out.row({static_cast<long long>(q.quasiorbit), static_cast<long long>(net.quasiorbits[q.quasiorbit - 1].size()),
             q.max_mass, q.min_mass, q.ratio, q.standard_error, static_cast<long long>(q.reliable)});
  out.close();
  c.write_sidecar("quasisym.json", {{"net", net.metadata()}, {"verdict", rep.verdict}, {"quasiorbits", rep.ratios.size()}});
}

void witness(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const GroupAction G = group_of(c, M);
  const auto fixed = G.fixed_coordinate();
  if (!fixed) throw DomainError("witness-psi-k needs an action with a fixed axis (not coercive)");
  Vec axis = Vec::Zero(M.dim());
  axis[*fixed] = 1.0;
  Vec off = Vec::Zero(M.dim());
  off[G.moved_coordinate()] = 1.0;
  const Point offset_point = num(c, "offset") > 0.0 ? M.exp_map(off, num(c, "offset")) : M.pole();
  std::vector<Point> centers;
  for (std::size_t k = 1; k <= count(c, "count"); ++k)
    centers.push_back(M.transport(M.exp_map(axis, num(c, "spacing") * static_cast<double>(k)), offset_point));
  const double r = num(c, "r");
  const double q = num(c, "q");
  const std::size_t samples = count(c, "samples");
  const PsiKWitness w = psi_k_witness(G, centers, r);
  CsvWriter out(c.file("witness.csv").string(),
                point_header({"k", "L1", "L1_stderr", "Lq_q", "Lq_q_stderr", "Lq_norm"}, "center", M.dim()));
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const Estimate l1 = power_integral(M, w.functions[k], centers[k], w.support_radius(), 1.0, samples, c.seed);
    const Estimate lq = power_integral(M, w.functions[k], centers[k], w.support_radius(), q, samples, c.seed);
    out.row(with_point({static_cast<long long>(k + 1), l1.value, l1.standard_error, lq.value, lq.standard_error,
                        std::pow(lq.value, 1.0 / q)},
                       centers[k], M.dim()));
  }
  out.close();
  const double overlap = support_overlap_fraction(M, w, samples, derive_seed(c.seed, 1));
  c.write_sidecar("witness.json", {{"group", G.to_json()},
                                   {"orbit_bound", w.orbit_bound},
                                   {"support_radius", w.support_radius()},
                                   {"overlap_fraction", overlap}});
}

void ground_state(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  GroundStateConfig cfg;
  cfg.p = num(c, "p");
  cfg.q = num(c, "q");
  cfg.manifold = M.to_json();
  cfg.r_max = num(c, "R_max");
  cfg.dr = num(c, "dr");
  cfg.tol = num(c, "tol");
  cfg.max_iter = static_cast<int>(integer(c, "max_iter"));
  cfg.seed = c.seed;
  cfg.init_center = num(c, "init_center");
  cfg.init_width = num(c, "init_width");
  cfg.init_noise = num(c, "init_noise");
  const GroundStateRun run = solve_ground_state(cfg);
  write_profile_csv(run.result, c.file("ground_state.csv").string());
  c.write_sidecar("ground_state.json", summary_json(run));
}

void diagnose(RunContext& c) {
  const ManifoldModel M = manifold_of(c);
  const LevelMap phi = map_of(c, M);
  DiagnosticsOptions o;
  o.r = num(c, "r");
  o.levels = count(c, "levels");
  o.y_samples = count(c, "y_samples");
  o.sigma = c.params.at("sigma").get<bool>();
  o.q = num(c, "q");
  o.level = level_options(c);
  const DiagnosticsReport rep = run_diagnostics(phi, M, list(c, "radii"), o);
  CsvWriter out(c.file("diagnose.csv").string(),
                {"R", "delta", "delta_stderr", "sigma", "sigma_stderr", "j_R", "eps_thick", "bound"});
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    const bool s = i < rep.sigma.size();
    out.row({rep.radii[i], rep.delta[i].value, rep.delta[i].standard_error, s ? rep.sigma[i].sigma : std::nan(""),
             s ? rep.sigma[i].standard_error : std::nan(""), s ? static_cast<long long>(rep.sigma[i].j_R) : 0LL,
             s ? rep.sigma[i].eps_thick : std::nan(""), s ? rep.sigma[i].bound : std::nan("")});
  }
  out.close();
  c.write_sidecar("diagnose.json", to_json(rep));
}

std::vector<ParamSpec> level_run_params() {
  return {{"r", 1.0, "ball radius r"},
          {"mc", 20'000, "Monte Carlo samples per local-mass estimate"},
          {"psi_samples", 200'000, "samples per shell estimate of Psi"},
          {"window", 0.0, "sampling window radius (0: derived from the map)"}};
}

}  // namespace

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> table = {
      {"net-build", "greedy (eps, nu)-net, optionally partitioned into quasiorbits",
       concat(manifold_params("euclidean", 2),
              {{"epsilon", 1.0, "separation eps"},
               {"L", 8.0, "window radius"},
               {"orbital", "none", "none | pole_distance | rings"},
               {"label_spacing", 0.0, "pole-distance label spacing (0: 2 eps)"},
               {"coverage_samples", 100'000, "samples of the covering check"}}),
       net_build},
      {"psi", "coarea weight Psi(z) on a level grid",
       concat(concat(manifold_params("euclidean", 3), map_params("radial")),
              {{"z", json::array({1.0}), "levels (repeat the flag)"},
               {"samples", 1'000'000, "shell samples per level"},
               {"method", "auto", "auto | shell | closed_form"},
               {"window", 0.0, "sampling window radius (0: derived from the map)"},
               {"qmc", false, "use the Sobol stream"}}),
       psi},
      {"delta-r", "delta_r(B(pole, A)) for each A",
       concat(concat(concat(manifold_params("euclidean", 2), map_params("radial")), level_run_params()),
              {{"A", json::array({10.0}), "exhaustion radii (repeat the flag)"},
               {"levels", 8, "levels in [A, A + 2r]"},
               {"y_samples", 32, "candidate centers per level"}}),
       delta},
      {"sigma-r", "far-ball fraction sigma_R and its bound 1 / (eps_thick j_R)",
       concat(concat(concat(manifold_params("euclidean", 2), map_params("radial")), level_run_params()),
              {{"R", json::array({10.0}), "radii (repeat the flag)"}, {"q", 2.0, "exponent q"}}),
       sigma},
      {"thickness", "uniform thickness ratio min/max local level mass",
       concat(concat(concat(manifold_params("euclidean", 2), map_params("radial")), level_run_params()),
              {{"A", json::array({10.0}), "exhaustion radii (repeat the flag)"},
               {"levels", 4, "levels in [A, A + 2r]"},
               {"y_per_level", 16, "points per level"}}),
       thickness},
      {"coercivity", "orbit-diameter envelope and coercivity verdict",
       concat(group_params("rotations", "euclidean", 2),
              {{"radii", json::array({2.0, 4.0, 8.0, 16.0}), "probe distances (repeat the flag)"},
               {"points", 32, "sampled points per probe distance"}}),
       coercivity},
      {"average", "Haar averaging T_G on a polar grid: energy non-expansiveness and idempotence",
       concat(group_params("rotations", "euclidean", 2),
              {{"functions", 10, "random smooth test functions"},
               {"scale", 2.0, "spatial scale of the test functions"},
               {"p", 2.0, "energy exponent p"},
               {"max_radius", 4.0, "polar grid radius"},
               {"radial_nodes", 64, "radial grid nodes"},
               {"angular_nodes", 128, "angular grid nodes (a multiple of K)"}}),
       average},
      {"quasisym", "per-quasiorbit ball-mass ratios on a rotational orbital net",
       concat(group_params("rotations", "euclidean", 2),
              {{"L", 6.0, "window radius"},
               {"epsilon", 1.0, "ring spacing eps"},
               {"function", "invariant", "invariant | canonical | offcenter"},
               {"quasiorbit", 3, "quasiorbit (from 1) used by canonical and offcenter"},
               {"base_index", 1, "first quasiorbit checked"},
               {"lambda", 1.0, "ratio bound lambda"},
               {"mc", 4'000, "Monte Carlo samples per ball"}}),
       quasisym},
      {"witness-psi-k", "non-compactness witnesses psi_k for an action with a fixed axis",
       concat(group_params("subgroup_fixing_axis", "euclidean", 3),
              {{"count", 4, "number of witnesses"},
               {"spacing", 10.0, "distance between consecutive centers along the axis"},
               {"offset", 1.0, "distance of the centers from the axis"},
               {"r", 1.0, "cone radius r"},
               {"q", 4.0, "exponent q"},
               {"samples", 20'000, "Monte Carlo samples per integral"}}),
       witness},
      {"ground-state", "radial constrained minimizer, multiplier and rescaled solution",
       concat(manifold_params("euclidean", 3),
              {{"p", 2.0, "gradient exponent p"},
               {"q", 4.0, "constraint exponent q"},
               {"R_max", 15.0, "Dirichlet truncation radius"},
               {"dr", 0.01, "grid step"},
               {"tol", 1e-10, "relative energy decrease over 50 iterations"},
               {"max_iter", 20'000, "iteration cap"},
               {"init_center", 0.0, "center of the initial Gaussian bump"},
               {"init_width", 1.0, "width of the initial Gaussian bump"},
               {"init_noise", 0.0, "relative seeded noise on the initial bump"}}),
       ground_state},
      {"diagnose", "delta_r, sigma_R and level diameters over a list of radii",
       concat(concat(concat(manifold_params("euclidean", 2), map_params("radial")), level_run_params()),
              {{"radii", json::array({5.0, 10.0}), "radii (repeat the flag)"},
               {"levels", 6, "levels in [R, R + 2r] for delta_r"},
               {"y_samples", 16, "candidate centers per level"},
               {"sigma", true, "also compute sigma_R"},
               {"q", 2.0, "exponent q of sigma_R"}}),
       diagnose},
  };
  return table;
}

}  // namespace sobcomp::cli
