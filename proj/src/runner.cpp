#include "diracforge/runner.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "diracforge/kernels.hpp"
#include "diracforge/models.hpp"

namespace df {

namespace {

// ------------------------------------------------------------ environment

void stamp(RunReport& rep, const Config& cfg, unsigned long long seed,
           int threads) {
  rep.environment.push_back({"tool", "dirac-forge 0.1.0"});
  rep.environment.push_back({"seed", std::to_string(seed)});
  rep.environment.push_back({"threads", std::to_string(threads)});
  rep.environment.push_back({"simd", kernels::active().name});
  rep.config_echo = cfg.dump();
}

unsigned long long scenario_seed(const Config& cfg,
                                 unsigned long long seed_override,
                                 bool has_seed_override) {
  if (has_seed_override) return seed_override;
  return (unsigned long long)cfg.get_int("run", "seed", 42);
}

// -------------------------------------------------------------- geometry

std::vector<double> read_table_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metric table: " + path);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

std::vector<double> read_table_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open metric table: " + path);
  in.seekg(0, std::ios::end);
  const std::size_t bytes = std::size_t(in.tellg());
  in.seekg(0);
  if (bytes % sizeof(double))
    throw ConfigError("binary metric table size is not a double multiple");
  std::vector<double> out(bytes / sizeof(double));
  in.read(reinterpret_cast<char*>(out.data()), std::streamsize(bytes));
  return out;
}

std::shared_ptr<Geometry> geometry_from_config(const Config& cfg,
                                               int grid_override = 0) {
  const std::string kind = cfg.get("geometry", "metric", "flat-torus");
  const int order = cfg.get_int("geometry", "order", 2);
  const int order_metric = cfg.get_int("geometry", "order_metric", 4);
  std::vector<int> grid = cfg.get_ints("geometry", "grid", {32, 32});
  if (grid_override > 0)
    for (int& g : grid) g = grid_override;

  if (kind == "flat-torus" || kind == "minkowski-torus") {
    std::vector<double> lengths = cfg.get_doubles(
        "geometry", "lengths",
        std::vector<double>(grid.size(), 2.0 * M_PI));
    MetricCallback cb = kind == "flat-torus"
                            ? flat_metric(int(grid.size()))
                            : minkowski_metric(
                                  cfg.get_int("geometry", "p", 1),
                                  cfg.get_int("geometry", "q",
                                              int(grid.size()) - 1));
    return std::make_shared<Geometry>(build_geometry(
        periodic_torus_grid(lengths, grid), cb, order_metric, order));
  }
  if (kind == "flat-box") {
    std::vector<double> lo =
        cfg.get_doubles("geometry", "lo", std::vector<double>(grid.size(), 0.0));
    std::vector<double> hi =
        cfg.get_doubles("geometry", "hi", std::vector<double>(grid.size(), 1.0));
    return std::make_shared<Geometry>(
        build_geometry(box_grid(lo, hi, grid), flat_metric(int(grid.size())),
                       order_metric, order));
  }
  if (kind == "sphere-cap") {
    const double margin = cfg.get_double("geometry", "cap_margin", 0.2);
    const double radius = cfg.get_double("geometry", "radius", 1.0);
    return std::make_shared<Geometry>(build_geometry(
        box_grid({margin, 0.0}, {M_PI - margin, 2.0 * M_PI}, grid,
                 {false, true}),
        sphere_metric(radius), order_metric, order));
  }
  if (kind == "hyperbolic-box") {
    return std::make_shared<Geometry>(build_geometry(
        box_grid({0.0, 0.5}, {1.0, 1.5}, grid), hyperbolic_metric(),
        order_metric, order));
  }
  if (kind == "raw") {
    const std::string path = cfg.get("geometry", "table");
    const std::string fmt = cfg.get("geometry", "table_format", "text");
    std::vector<double> lengths = cfg.get_doubles(
        "geometry", "lengths", std::vector<double>(grid.size(), 2.0 * M_PI));
    ChartGrid g = periodic_torus_grid(lengths, grid);
    std::vector<double> table = fmt == "binary" ? read_table_binary(path)
                                                : read_table_text(path);
    return std::make_shared<Geometry>(build_geometry(
        std::move(g), metric_from_table(g, table), order_metric, order));
  }
  throw ConfigError("unknown geometry kind: " + kind);
}

// ---------------------------------------------------------------- modules

CMat parse_matrix(const std::string& text, int rank) {
  std::istringstream is(text);
  CMat m(rank, rank);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) {
      std::string tok;
      if (!(is >> tok))
        throw ConfigError("matrix literal too short (need " +
                          std::to_string(rank * rank) + " re,im pairs)");
      const auto comma = tok.find(',');
      if (comma == std::string::npos)
        throw ConfigError("matrix entries are re,im pairs: " + tok);
      m(i, j) = cplx(std::stod(tok.substr(0, comma)),
                     std::stod(tok.substr(comma + 1)));
    }
  return m;
}

CliffordModule module_from_config(const Config& cfg) {
  const std::string name = cfg.get("module", "name", "spinor");
  const int p = cfg.get_int("module", "p", 2);
  const int q = cfg.get_int("module", "q", 0);
  const int eps = cfg.get_int("module", "eps", 1);
  if (name != "explicit") return builtin_module(name, p, q, eps);

  const int rank = cfg.get_int("module", "rank");
  CliffordModule m;
  m.sig = Signature(p, q, eps, true);
  m.rank = rank;
  for (int k = 0; k < m.sig.n(); ++k)
    m.gamma.push_back(
        parse_matrix(cfg.get("module", "gamma" + std::to_string(k + 1)), rank));
  m.tau = parse_matrix(cfg.get("module", "tau"), rank);
  m.h = cfg.has("module", "h") ? parse_matrix(cfg.get("module", "h"), rank)
                               : CMat::identity(rank);
  m.name = "explicit";
  m.finalize();
  return m;
}

// ------------------------------------------------------------- scenarios

void run_algebra_for_signature(RunReport& rep, int pp, int qq, int eps,
                               Rng& rng) {
  const std::string tag =
      "(" + std::to_string(pp) + "," + std::to_string(qq) + "),eps=" +
      (eps > 0 ? std::string("+1") : std::string("-1"));
  Signature sig(pp, qq, eps, true);
  const CliffordAlgebra& alg = algebra(sig);
  const int n = sig.n();

  // generator relations against the defining anticommutator
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Multivector anti =
          clifford_product(Multivector::generator(sig, k),
                           Multivector::generator(sig, l)) +
          clifford_product(Multivector::generator(sig, l),
                           Multivector::generator(sig, k));
      for (int i = 0; i < sig.dim(); ++i) {
        const cplx want =
            (k == l && i == 0) ? cplx(2.0 * eps * sig.eta(k)) : cplx(0.0);
        worst = std::max(worst, std::abs(anti.coeff[i] - want));
      }
    }
  rep.add(make_check("clifford-relations " + tag, "clifford-relations", worst,
                     0.0, "paper", 1e-12));

  // symbol round trips on random multivectors
  double rt = 0.0;
  for (int t = 0; t < 100; ++t) {
    Multivector a(sig);
    for (auto& c : a.coeff) c = rng.csym();
    Multivector back = alg.inverse_symbol(alg.symbol(a));
    for (int i = 0; i < sig.dim(); ++i)
      rt = std::max(rt, std::abs(back.coeff[i] - a.coeff[i]));
  }
  rep.add(make_check("symbol-roundtrip " + tag, "symbol-roundtrip", rt, 0.0,
                     "trivial", 1e-12));

  // canonical action square gamma(alpha)^2 = eps g*(alpha,alpha)
  double sq = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<cplx> a(n);
    for (auto& c : a) c = rng.csym();
    ExteriorElement w(sig);
    for (auto& c : w.coeff) c = rng.csym();
    cplx g = 0.0;
    for (int k = 0; k < n; ++k) g += double(sig.eta(k)) * a[k] * a[k];
    ExteriorElement ww = alg.canonical_action(a, alg.canonical_action(a, w));
    for (int i = 0; i < sig.dim(); ++i)
      sq = std::max(sq,
                    std::abs(ww.coeff[i] - double(eps) * g * w.coeff[i]));
  }
  rep.add(make_check("canonical-action-square " + tag,
                     "canonical-action-square", sq, 0.0, "paper", 1e-12));

  // module verification + quantization right inverse
  CliffordModule mod = (n <= 4) ? spinor_module(pp, qq, eps)
                                : clifford_regular_module(pp, qq, eps);
  rep.add(make_check("module-verify " + tag, "clifford-module-relations",
                     verify_module(mod).max_violation, 0.0, "paper", 1e-12));

  auto theta = canonical_one_form(mod);
  double ri = 0.0;
  for (int t = 0; t < 20; ++t) {
    CMat Phi = cplx(rng.sym(), rng.sym()) * CMat::identity(mod.rank);
    CMat out(mod.rank, mod.rank);
    for (int a = 0; a < n; ++a) out += mod.gamma[a] * theta[a] * Phi;
    ri = std::max(ri, max_abs(out - Phi));
  }
  rep.add(make_check("quantize-right-inverse " + tag,
                     "quantize-right-inverse", ri, 0.0, "derived", 1e-12));
}

RunReport run_stype(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "stype-torus");
  auto geom = geometry_from_config(cfg);
  auto mod = std::make_shared<CliffordModule>(module_from_config(cfg));

  // gauge potential: none, or the abelian preset A_i = i a sin(x_{i+1}) Id
  std::vector<MatrixField> gauge;
  const std::string a_kind = cfg.get("operator", "A", "none");
  if (a_kind == "abelian-sin") {
    const double amp = cfg.get_double("operator", "A_amplitude", 0.3);
    const int n = geom->grid.dim();
    const std::size_t nodes = geom->grid.node_count();
    gauge.assign(n, MatrixField(nodes, mod->rank));
    double x[8];
    for (std::size_t v = 0; v < nodes; ++v) {
      geom->grid.node_coords(v, x);
      for (int i = 0; i < n; ++i)
        gauge[i].set(v, cplx(0.0, amp * std::sin(x[(i + 1) % n])) *
                            CMat::identity(mod->rank));
    }
  } else if (a_kind != "none") {
    throw ConfigError("unknown A preset: " + a_kind);
  }
  auto conn = build_clifford_connection(geom, mod, gauge);
  const double vol = [&] {
    RealField one(geom->grid.node_count());
    for (auto& x : one.v) x = 1.0;
    return integrate(geom->grid, geom->metric, one);
  }();

  std::vector<double> masses =
      cfg.get_doubles("operator", "masses", {0.0, 0.5, 1.0});
  for (double m : masses) {
    DiracOperator d = build_simple_type(conn, m * CMat::identity(mod->rank));
    Decomposition dec = decompose(d);
    const double id = universal_dirac_action(d, dec).real();
    const double want = vol * mod->rank * m * m;  // scal = 0 on the torus
    rep.add(make_check("stype-action m=" + format_label(m),
                       "stype-action-identity", id, want, "paper",
                       1e-6 * (1.0 + std::abs(id))));

    // Lambda constancy: tr phi^2 node-independent
    double spread = 0.0;
    const cplx first = trace(dec.phi_d.get(0) * dec.phi_d.get(0));
    for (std::size_t v = 0; v < dec.phi_d.nodes(); ++v)
      spread = std::max(
          spread,
          std::abs(trace(dec.phi_d.get(v) * dec.phi_d.get(v)) - first));
    rep.add(make_check("lambda-constancy m=" + format_label(m),
                       "cosmological-constant", spread, 0.0, "paper", 1e-12));
  }
  (void)seed;
  return rep;
}

// max relative deviation of tr V_D from -eps (N/4) scal on the chart
// interior (fixed coordinate window, stable under refinement)
double sphere_trv_error(const Config& cfg, int grid) {
  auto geom = geometry_from_config(cfg, grid);
  auto mod = std::make_shared<CliffordModule>(module_from_config(cfg));
  DiracOperator d = quantize_connection(build_clifford_connection(geom, mod));
  Decomposition dec = decompose(d);
  const double radius = cfg.get_double("geometry", "radius", 1.0);
  const double scal = 2.0 / (radius * radius);
  const double want = -0.25 * mod->sig.eps * mod->rank * scal;

  const Axis& ax = geom->grid.axis(0);
  const double lo = ax.origin, hi = ax.origin + ax.spacing * (ax.count - 1);
  const double w = 0.15 * (hi - lo);
  double worst = 0.0;
  double x[2];
  for (std::size_t v = 0; v < geom->grid.node_count(); ++v) {
    geom->grid.node_coords(v, x);
    if (x[0] < lo + w || x[0] > hi - w) continue;
    worst = std::max(worst,
                     std::abs(dec.tr_v.v[v].real() - want) / std::abs(want));
  }
  return worst;
}

RunReport run_sphere_scal(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "sphere-scal");
  const std::vector<int> grid = cfg.get_ints("geometry", "grid", {128, 128});
  const double err = sphere_trv_error(cfg, grid[0]);
  rep.add(make_check("trV-max-rel-err", "lichnerowicz-curved", err, 0.0,
                     "paper", 1e-3));
  (void)seed;
  return rep;
}

RunReport run_trace_formula(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "trace-formula");
  auto geom = geometry_from_config(cfg);
  auto mod = std::make_shared<CliffordModule>(module_from_config(cfg));
  auto conn = build_clifford_connection(geom, mod);

  const std::size_t nodes = geom->grid.node_count();
  MatrixField phi(nodes, mod->rank);
  double x[8];
  const double base = cfg.get_double("operator", "phi_base", 0.5);
  const double amp = cfg.get_double("operator", "phi_amp", 0.2);
  for (std::size_t v = 0; v < nodes; ++v) {
    geom->grid.node_coords(v, x);
    phi.set(v, (base + amp * std::sin(x[0]) * std::cos(x[1])) *
                   CMat::identity(mod->rank));
  }
  DiracOperator d = build_simple_type(conn, phi);
  Decomposition dec = decompose(d);
  ScalarField rhs = trace_formula_rhs(d, dec);

  const double int_v = integrate(geom->grid, geom->metric, dec.tr_v).real();
  const double int_rhs = integrate(geom->grid, geom->metric, rhs).real();
  rep.add(make_check("trace-formula-integrated", "trace-formula", int_v,
                     int_rhs, "paper", 1e-6));

  ScalarField diff(nodes);
  for (std::size_t v = 0; v < nodes; ++v)
    diff.v[v] = dec.tr_v.v[v] - rhs.v[v];
  rep.add(make_check("trace-formula-divergence", "trace-formula",
                     std::abs(integrate(geom->grid, geom->metric, diff)), 0.0,
                     "derived", 1e-6));
  (void)seed;
  return rep;
}

RunReport run_sigma(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "sigma-flat");
  auto geom = geometry_from_config(cfg);
  CliffordModule e1 = module_from_config(cfg);
  const int eps2 = cfg.get_int("sigma", "eps2", 1);
  const int n2 = cfg.get_int("sigma", "target_dim", 2);
  CliffordModule e2 = spinor_module(n2, 0, eps2);
  const int trials = cfg.get_int("sigma", "maps", 20);

  Rng rng(seed);
  double ratio0 = 0.0, worst_spread = 0.0, worst_drift = 0.0;
  double candidate_sum = 0.0, candidate_product = 0.0;
  int used = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> M(std::size_t(geom->grid.dim()) * n2);
    for (double& m : M) m = rng.sym();
    SigmaModel sm = build_sigma_model(
        geom, e1, flat_target(n2), e2,
        [&M, n2](const double* x, double* y) {
          const int n1 = 2;
          for (int b = 0; b < n2; ++b) {
            y[b] = 0.0;
            for (int i = 0; i < n1; ++i) y[b] += M[std::size_t(b) * n1 + i] * x[i];
          }
        });
    SigmaNormReport nr = sigma_norm_check(sm);
    if (nr.norm_ratio.degenerate) continue;
    worst_spread = std::max(
        worst_spread, std::max(nr.norm_ratio.spread, nr.action_ratio.spread));
    if (used == 0)
      ratio0 = nr.norm_ratio.ratio;
    else
      worst_drift =
          std::max(worst_drift, std::abs(nr.norm_ratio.ratio - ratio0));
    candidate_sum = nr.candidate_sum;
    candidate_product = nr.candidate_product;
    ++used;
  }
  rep.add(make_check("sigma-ratio-spread", "sigma-proportionality",
                     worst_spread, 0.0, "derived", 1e-10));
  rep.add(make_check("sigma-ratio-map-independence", "sigma-proportionality",
                     worst_drift, 0.0, "derived", 1e-10));
  rep.add(make_check("sigma-ratio-vs-rank-product", "sigma-proportionality",
                     std::abs(ratio0), std::abs(candidate_product), "measured",
                     1e-9));
  rep.add(make_info("sigma-ratio-measured", "sigma-proportionality", ratio0,
                    candidate_product, "measured"));
  rep.add(make_info("sigma-ratio-vs-rank-sum", "sigma-proportionality",
                    ratio0, candidate_sum, "measured"));
  return rep;
}

RunReport run_geodesic(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "geod-sphere");
  const std::vector<double> dists =
      cfg.get_doubles("geodesic", "distances", {0.5, 1.0, 1.5, 2.0, 2.5});
  const int nodes = cfg.get_int("geodesic", "nodes", 64);

  // endpoints at prescribed angular distance along a fixed great circle
  const std::vector<double> a =
      cfg.get_doubles("geodesic", "start", {1.2, 0.4});
  auto embed = [](const std::vector<double>& y, double* u) {
    u[0] = std::sin(y[0]) * std::cos(y[1]);
    u[1] = std::sin(y[0]) * std::sin(y[1]);
    u[2] = std::cos(y[0]);
  };
  double u[3];
  embed(a, u);
  // unit tangent at a, roughly northeast
  double t[3] = {std::cos(a[0]) * std::cos(a[1]),
                 std::cos(a[0]) * std::sin(a[1]), -std::sin(a[0])};
  double p[3] = {-std::sin(a[1]), std::cos(a[1]), 0.0};
  double w[3];
  for (int i = 0; i < 3; ++i) w[i] = (t[i] + 0.5 * p[i]);
  double dotu = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
  double nrm = 0.0;
  for (int i = 0; i < 3; ++i) {
    w[i] -= dotu * u[i];
    nrm += w[i] * w[i];
  }
  nrm = std::sqrt(nrm);
  for (int i = 0; i < 3; ++i) w[i] /= nrm;

  for (double d : dists) {
    double ub[3];
    for (int i = 0; i < 3; ++i)
      ub[i] = std::cos(d) * u[i] + std::sin(d) * w[i];
    std::vector<double> b{std::acos(std::clamp(ub[2], -1.0, 1.0)),
                          std::atan2(ub[1], ub[0])};
    GeodesicResult r = geodesic_minimize(a, b, nodes, sphere_target(1.0));
    rep.add(make_check("geodesic-energy d=" + format_label(d),
                       "geodesic-energy", r.energy, d * d,
                       "derived", 1e-3 * d * d));
    rep.add(make_check("geodesic-converged d=" + format_label(d),
                       "geodesic-energy", r.converged ? 1.0 : 0.0, 1.0,
                       "trivial", 0.5));
    if (r.degenerate_family)
      rep.add(make_info("geodesic-degenerate-family d=" + format_label(d),
                        "geodesic-energy", 1.0, 1.0, "measured"));
  }
  (void)seed;
  return rep;
}

RunReport run_yang_mills(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "ym-u1-torus");
  auto geom = geometry_from_config(cfg);
  CliffordModule e1 = module_from_config(cfg);
  CliffordModule e2 =
      builtin_module(cfg.get("yang-mills", "e2", "spinor"),
                     geom->metric.sig_p, geom->metric.sig_q,
                     cfg.get_int("yang-mills", "eps2", 1));

  for (double f : cfg.get_doubles("yang-mills", "fluxes", {0.1, 1.0, 3.0})) {
    RMat fm(geom->grid.dim(), geom->grid.dim());
    fm(0, 1) = f;
    fm(1, 0) = -f;
    GaugeCurvature F = constant_abelian_curvature(*geom, e1.rank, fm);
    YmModel ym = build_ym_model(geom, e1, e2, &F, nullptr);
    YmNormReport nr = ym_norm_check(ym);
    YmActionReport ar = ym_action(ym);
    const std::string tag = " f=" + format_label(f);
    rep.add(make_check("ym-ratio-spread" + tag, "ym-proportionality",
                       std::max(nr.norm_ratio.spread, nr.action_ratio.spread),
                       0.0, "derived", 1e-10));
    rep.add(make_check("ym-action-vs-pipeline" + tag, "ym-action-identity",
                       ar.pipeline.real(), ar.total_formula.real(), "paper",
                       1e-6 * (1.0 + std::abs(ar.pipeline.real()))));
    rep.add(make_info("ym-norm-ratio" + tag, "ym-proportionality",
                      nr.norm_ratio.ratio, nr.candidate, "measured"));
    rep.add(make_check("ym-action-density-ratio" + tag, "ym-proportionality",
                       nr.action_ratio.ratio, nr.candidate_action, "derived",
                       1e-9));
  }
  (void)seed;
  return rep;
}

RunReport run_dhym(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "dhym-split");
  auto geom = geometry_from_config(cfg);
  CliffordModule e2 = spinor_module(cfg.get_int("dhym", "target_dim", 1), 0,
                                    cfg.get_int("dhym", "eps2", 1));
  const double flux = cfg.get_double("dhym", "flux", 0.8);
  RMat fm(geom->grid.dim(), geom->grid.dim());
  fm(0, 1) = flux;
  fm(1, 0) = -flux;
  GaugeCurvature Fw = constant_abelian_curvature(*geom, 1, fm);

  Rng rng(seed);
  std::vector<double> M(std::size_t(geom->grid.dim()) *
                        std::size_t(e2.sig.n()));
  for (double& m : M) m = rng.sym();
  const int n2 = e2.sig.n();
  DhymModel model = build_dhym_model(
      geom, 1, CMat::identity(1), CMat::identity(1), Fw, flat_target(n2), e2,
      [&M, n2](const double* x, double* y) {
        for (int b = 0; b < n2; ++b)
          y[b] = M[std::size_t(b) * 2] * x[0] + M[std::size_t(b) * 2 + 1] * x[1];
      });
  DhymReport dr = dhym_split_check(model);
  rep.add(make_check("dhym-cross-trace", "dhym-split", dr.cross_trace, 0.0,
                     "paper", 1e-12));
  rep.add(make_check("dhym-trace-split", "dhym-split", dr.split_residual, 0.0,
                     "paper", 1e-10));
  rep.add(make_check("dhym-action-sum", "dhym-split", dr.pipeline.real(),
                     dr.total_formula.real(), "derived",
                     1e-6 * (1.0 + std::abs(dr.pipeline.real()))));
  rep.add(make_info("dhym-sigma-term", "dhym-split", dr.sigma_term, 0.0,
                    "measured"));
  rep.add(make_info("dhym-ym-term", "dhym-split", dr.ym_term, 0.0,
                    "measured"));
  return rep;
}

RunReport run_higgs(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "higgs-lambda");
  auto geom = geometry_from_config(cfg);
  Rng rng(seed);

  const std::vector<double> k =
      cfg.get_doubles("higgs", "wavenumbers", {1.0, 1.0});
  const double amp = cfg.get_double("higgs", "amplitude", 0.9);
  const std::size_t nodes = geom->grid.node_count();

  HiggsBundle hb;
  hb.m = 2;
  hb.fiber_metric = RMat::identity(2);
  hb.phi.resize(nodes * 2);
  hb.A.assign(geom->grid.dim(),
              std::vector<double>(nodes * 4, 0.0));
  double x[8];
  for (std::size_t v = 0; v < nodes; ++v) {
    geom->grid.node_coords(v, x);
    double ang = 0.0;
    for (int i = 0; i < geom->grid.dim(); ++i) ang += k[i] * x[i];
    hb.phi[v * 2] = amp * std::cos(ang);
    hb.phi[v * 2 + 1] = amp * std::sin(ang);
    for (int i = 0; i < geom->grid.dim(); ++i) {
      hb.A[i][v * 4 + 1] = k[i];
      hb.A[i][v * 4 + 2] = -k[i];
    }
  }
  HiggsReport hr = higgs_metric(hb, *geom, rng);
  rep.add(make_check("higgs-vector-identity", "higgs-kinetic-identity",
                     hr.vector_identity, 0.0, "paper", 1e-10));
  rep.add(make_check("higgs-scalar-identity", "higgs-kinetic-identity",
                     hr.scalar_identity, 0.0, "paper", 1e-10));
  rep.add(make_check("higgs-lambda", "cosmological-constant", hr.lambda,
                     double(geom->grid.dim()), "paper", 1e-8));

  // trivial-connection variant
  HiggsBundle hb0 = hb;
  for (auto& ax : hb0.A) std::fill(ax.begin(), ax.end(), 0.0);
  for (std::size_t v = 0; v < nodes; ++v) {
    hb0.phi[v * 2] = 0.0;
    hb0.phi[v * 2 + 1] = 0.0;
  }
  HiggsReport hr0 = higgs_metric(hb0, *geom, rng);
  rep.add(make_check("higgs-identity-trivial", "higgs-kinetic-identity",
                     hr0.scalar_identity, 0.0, "trivial", 1e-12));

  // EHC assembly with the measured Lambda and the gauge-coupled term table
  const double lambda = hr.lambda;
  const double ehc = ehc_action(*geom, lambda);
  RealField one(nodes);
  for (auto& o : one.v) o = 1.0;
  const double vol = integrate(geom->grid, geom->metric, one);
  rep.add(make_check("ehc-flat-torus", "ehc", ehc, lambda * vol, "trivial",
                     1e-9));

  CliffordModule sp = spinor_module(geom->metric.sig_p, geom->metric.sig_q,
                                    cfg.get_int("module", "eps", 1));
  GaugeHiggsTerms t = gauge_higgs_report(
      geom, sp, k, k, amp, cfg.get_double("higgs", "flux", 0.5), lambda, rng);
  rep.add(make_info("term-fermion", "ehc-term-table", t.fermion.real(), 0.0,
                    "measured"));
  rep.add(make_info("term-higgs-kinetic", "ehc-term-table", t.higgs, 0.0,
                    "measured"));
  rep.add(make_info("term-ym", "ehc-term-table", t.ym, 0.0, "measured"));
  rep.add(make_info("term-ehc", "ehc-term-table", t.ehc, 0.0, "measured"));
  rep.add(make_check("term-table-consistency", "ehc-term-table",
                     t.sum.real(), t.joint.real(), "derived", 1e-9));
  rep.add(make_check("term-table-consistency-imag", "ehc-term-table",
                     t.sum.imag(), t.joint.imag(), "derived", 1e-9));
  return rep;
}

RunReport run_study(const Config& cfg, unsigned long long seed) {
  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "study-1d");
  const int nodes = cfg.get_int("geometry", "nodes", 96);

  StudyDemoReport r1 = study_dirac_demo(
      nodes, sphere_target(1.0), [](double t, double* y) {
        y[0] = 1.0 + 0.5 * t;
        y[1] = 0.3 + 0.8 * t;
      });
  StudyDemoReport r2 = study_dirac_demo(
      nodes, sphere_target(1.0), [](double t, double* y) {
        y[0] = 1.3 - 0.4 * t;
        y[1] = 0.1 + 0.5 * t;
      });
  rep.add(make_check("study-block-action", "study-dirac", r1.dirac_vs_fd, 0.0,
                     "paper", 1e-10));
  rep.add(make_check("study-fermion-sign", "study-dirac", r1.fermion_flip,
                     0.0, "paper", 1e-10));
  rep.add(make_check("study-action-ratio-curve-independence",
                     "geodesic-energy",
                     r1.action_ratio, r2.action_ratio, "derived",
                     1e-3 * std::abs(r1.action_ratio)));
  rep.add(make_info("study-universal-action", "geodesic-energy",
                    r1.universal_action.real(), r1.geodesic_energy,
                    "measured"));
  (void)seed;
  return rep;
}

}  // namespace

const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> cat = {
      {"stype-torus", "stype-action-identity",
       "flat-torus simple-type operator: universal action vs closed form"},
      {"sphere-scal", "lichnerowicz-curved",
       "sphere cap: tr V_D against -eps rk/4 scal"},
      {"trace-formula", "trace-formula",
       "flat torus, varying phi: integrated trace-formula cross-check"},
      {"sigma-flat", "sigma-proportionality",
       "random linear maps: |phi_D|^2 / |dphi|^2 constancy"},
      {"geod-sphere", "geodesic-energy",
       "sphere geodesics: minimized energy vs squared distance"},
      {"ym-u1-torus", "ym-proportionality",
       "abelian constant flux: norm ratio and action identity"},
      {"dhym-split", "dhym-split",
       "combined field: cross-trace orthogonality and action split"},
      {"higgs-lambda", "higgs-kinetic-identity",
       "Higgs bundle metric identity and EHC term table"},
      {"study-1d", "geodesic-energy",
       "1-D two-component module: block action and geodesic energy"},
  };
  return cat;
}

Config preset_config(const std::string& name) {
  Config cfg;
  cfg.set("scenario", "name", name);
  cfg.set("run", "seed", "42");
  if (name == "stype-torus") {
    cfg.set("scenario", "kind", "stype");
    cfg.set("geometry", "metric", "flat-torus");
    cfg.set("geometry", "grid", "128, 128");
    cfg.set("module", "name", "spinor");
    cfg.set("module", "p", "2");
    cfg.set("module", "q", "0");
    cfg.set("module", "eps", "1");
    cfg.set("operator", "masses", "0, 0.5, 1");
    return cfg;
  }
  if (name == "sphere-scal") {
    cfg.set("scenario", "kind", "sphere-scal");
    cfg.set("geometry", "metric", "sphere-cap");
    cfg.set("geometry", "grid", "128, 128");
    cfg.set("geometry", "order", "2");
    cfg.set("module", "name", "spinor");
    return cfg;
  }
  if (name == "trace-formula") {
    cfg.set("scenario", "kind", "trace-formula");
    cfg.set("geometry", "metric", "flat-torus");
    cfg.set("geometry", "grid", "64, 64");
    cfg.set("module", "name", "spinor");
    return cfg;
  }
  if (name == "sigma-flat") {
    cfg.set("scenario", "kind", "sigma");
    cfg.set("geometry", "metric", "flat-box");
    cfg.set("geometry", "grid", "12, 12");
    cfg.set("module", "name", "spinor");
    cfg.set("sigma", "maps", "20");
    return cfg;
  }
  if (name == "geod-sphere") {
    cfg.set("scenario", "kind", "geodesic");
    cfg.set("geodesic", "distances", "0.5, 1.0, 1.5, 2.0, 2.5");
    cfg.set("geodesic", "nodes", "64");
    return cfg;
  }
  if (name == "ym-u1-torus") {
    cfg.set("scenario", "kind", "yang-mills");
    cfg.set("geometry", "metric", "flat-torus");
    cfg.set("geometry", "grid", "8, 8");
    cfg.set("module", "name", "spinor");
    cfg.set("yang-mills", "fluxes", "0.1, 1, 3");
    return cfg;
  }
  if (name == "dhym-split") {
    cfg.set("scenario", "kind", "dhym");
    cfg.set("geometry", "metric", "flat-box");
    cfg.set("geometry", "grid", "8, 8");
    return cfg;
  }
  if (name == "higgs-lambda") {
    cfg.set("scenario", "kind", "higgs");
    cfg.set("geometry", "metric", "flat-torus");
    cfg.set("geometry", "grid", "64, 64");
    cfg.set("geometry", "order", "4");
    return cfg;
  }
  if (name == "study-1d") {
    cfg.set("scenario", "kind", "study");
    cfg.set("geometry", "nodes", "96");
    return cfg;
  }
  throw ConfigError("unknown preset: " + name);
}

RunReport run_verify_algebra(int max_dim, unsigned long long seed) {
  RunReport rep;
  rep.scenario = "verify-algebra";
  Rng rng(seed);
  for (int n = 1; n <= max_dim; ++n)
    for (int p = 0; p <= n; ++p)
      for (int eps : {+1, -1}) run_algebra_for_signature(rep, p, n - p, eps, rng);
  Config cfg;
  cfg.set("scenario", "kind", "verify-algebra");
  cfg.set("scenario", "max_dim", std::to_string(max_dim));
  stamp(rep, cfg, seed, thread_count());
  return rep;
}

RunReport run_scenario(const Config& cfg, unsigned long long seed_override,
                       bool has_seed_override) {
  const unsigned long long seed =
      scenario_seed(cfg, seed_override, has_seed_override);
  const std::string kind = cfg.get("scenario", "kind");
  RunReport rep;
  if (kind == "stype")
    rep = run_stype(cfg, seed);
  else if (kind == "sphere-scal")
    rep = run_sphere_scal(cfg, seed);
  else if (kind == "trace-formula")
    rep = run_trace_formula(cfg, seed);
  else if (kind == "sigma")
    rep = run_sigma(cfg, seed);
  else if (kind == "geodesic")
    rep = run_geodesic(cfg, seed);
  else if (kind == "yang-mills")
    rep = run_yang_mills(cfg, seed);
  else if (kind == "dhym")
    rep = run_dhym(cfg, seed);
  else if (kind == "higgs")
    rep = run_higgs(cfg, seed);
  else if (kind == "study")
    rep = run_study(cfg, seed);
  else
    throw ConfigError("unknown scenario kind: " + kind);
  stamp(rep, cfg, seed, thread_count());
  return rep;
}

RunReport run_convergence(const Config& cfg, const std::vector<int>& grids,
                          unsigned long long seed_override,
                          bool has_seed_override) {
  if (grids.size() < 2)
    throw ConfigError("convergence needs at least two grid sizes");
  for (std::size_t i = 1; i < grids.size(); ++i)
    if (grids[i] <= grids[i - 1])
      throw ConfigError("grid list must be strictly increasing");

  const unsigned long long seed =
      scenario_seed(cfg, seed_override, has_seed_override);
  const std::string kind = cfg.get("scenario", "kind");
  if (kind != "sphere-scal")
    throw ConfigError("convergence study supports the sphere-scal kind");

  RunReport rep;
  rep.scenario = cfg.get("scenario", "name", "sphere-scal") + "-convergence";
  std::vector<double> errs;
  for (int g : grids) {
    const double e = sphere_trv_error(cfg, g);
    errs.push_back(e);
    rep.add(make_info("trV-max-rel-err n=" + std::to_string(g),
                      "lichnerowicz-curved", e, 0.0, "derived"));
  }
  const int nominal = cfg.get_int("geometry", "order", 2);
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double slope = std::log2(errs[i - 1] / errs[i]) /
                         std::log2(double(grids[i]) / grids[i - 1]);
    rep.add(make_check(
        "convergence-order n=" + std::to_string(grids[i - 1]) + "->" +
            std::to_string(grids[i]),
        "lichnerowicz-curved", slope, double(nominal), "derived", 0.3));
  }
  stamp(rep, cfg, seed, thread_count());
  return rep;
}

}  // namespace df
