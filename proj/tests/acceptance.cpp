// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "diracforge/models.hpp"
#include "diracforge/runner.hpp"
#include "oracles.hpp"

using namespace df;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  }
};

void report(int criterion, bool ok, const std::string& what,
            const std::string& detail) {
  std::printf("%s criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.c_str());
  if (!ok) ++g_failures;
}

std::shared_ptr<Geometry> flat_torus(int n, int order = 2) {
  return std::make_shared<Geometry>(build_geometry(
      periodic_torus_grid({2.0 * M_PI, 2.0 * M_PI}, {n, n}), flat_metric(2),
      order, order));
}

// 1. full algebra suite, n <= 4, both eps, < 10 s
void criterion_1() {
  Timer t;
  RunReport rep = run_verify_algebra(4, 42);
  double worst = 0.0;
  for (const Record& r : rep.records) worst = std::max(worst, r.abs_error);
  const double secs = t.seconds();
  const bool ok = rep.all_passed() && worst < 1e-12 && secs < 10.0;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "%zu checks, max violation %.3g, %.2f s", rep.records.size(),
                worst, secs);
  report(1, ok, "algebra suite over all signatures", detail);
}

// 2. simple-type action identity on the 128^2 flat torus, m in {0, .5, 1}
void criterion_2() {
  Timer t;
  auto geom = flat_torus(128);
  auto mod = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
  auto conn = build_clifford_connection(geom, mod);
  const double vol = 4.0 * M_PI * M_PI;
  bool ok = true;
  double worst = 0.0;
  for (double m : {0.0, 0.5, 1.0}) {
    DiracOperator d = build_simple_type(conn, m * CMat::identity(2));
    const double id = universal_dirac_action(d).real();
    const double want = vol * 2.0 * m * m;  // -eps (N/4) scal = 0 here
    const double err = std::abs(id - want) / (1.0 + std::abs(id));
    worst = std::max(worst, err);
    ok = ok && err < 1e-6;
  }
  const double secs = t.seconds();
  ok = ok && secs < 60.0;
  char detail[128];
  std::snprintf(detail, sizeof detail, "max rel defect %.3g, %.2f s", worst,
                secs);
  report(2, ok, "simple-type action identity (flat torus)", detail);
}

// 3. curved check: tr V_D vs -eps (N/4) scal on the sphere cap, with
// convergence order >= 1.7 under doubling
void criterion_3() {
  Config cfg = preset_config("sphere-scal");
  auto err_at = [&cfg](int n) {
    Config c = cfg;
    c.set("geometry", "grid", std::to_string(n) + ", " + std::to_string(n));
    RunReport rep = run_scenario(c, 0, false);
    return rep.records.at(0).value;
  };
  const double e64 = err_at(64), e128 = err_at(128), e256 = err_at(256);
  const double s1 = std::log2(e64 / e128);
  const double s2 = std::log2(e128 / e256);
  const bool ok = e256 < 1e-3 && s1 >= 1.7 && s2 >= 1.7;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "rel err 256^2 = %.3g, orders %.2f / %.2f", e256, s1, s2);
  report(3, ok, "curved tr V_D against the scalar curvature", detail);
}

// 4. trace formula with non-constant phi on the flat torus
void criterion_4() {
  auto geom = flat_torus(64);
  auto mod = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
  auto conn = build_clifford_connection(geom, mod);
  const std::size_t nodes = geom->grid.node_count();
  MatrixField phi(nodes, 2);
  double x[2];
  for (std::size_t v = 0; v < nodes; ++v) {
    geom->grid.node_coords(v, x);
    phi.set(v, (0.5 + 0.2 * std::sin(x[0]) * std::cos(x[1])) *
                   CMat::identity(2));
  }
  DiracOperator d = build_simple_type(conn, phi);
  Decomposition dec = decompose(d);
  ScalarField rhs = trace_formula_rhs(d, dec);
  const double iv = integrate(geom->grid, geom->metric, dec.tr_v).real();
  const double ir = integrate(geom->grid, geom->metric, rhs).real();
  ScalarField diff(nodes);
  for (std::size_t v = 0; v < nodes; ++v)
    diff.v[v] = dec.tr_v.v[v] - rhs.v[v];
  const double idiff =
      std::abs(integrate(geom->grid, geom->metric, diff).real());
  const bool ok = std::abs(iv - ir) < 1e-6 && idiff < 1e-6;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "|int trV - int RHS| = %.3g, divergence integral %.3g",
                std::abs(iv - ir), idiff);
  report(4, ok, "trace-formula cross-check", detail);
}

// 5. sigma proportionality over 20 random linear maps
void criterion_5() {
  auto geom = std::make_shared<Geometry>(build_geometry(
      box_grid({0.0, 0.0}, {1.0, 1.0}, {12, 12}), flat_metric(2), 2, 2));
  CliffordModule e1 = spinor_module(2, 0, +1);
  CliffordModule e2 = spinor_module(2, 0, +1);
  Rng rng(42);
  double worst_spread = 0.0, ratio0 = 0.0, drift = 0.0;
  double cand_sum = 0.0, cand_prod = 0.0;
  int used = 0;
  for (int trial = 0; trial < 20; ++trial) {
    double M[4];
    for (double& m : M) m = rng.sym();
    SigmaModel sm = build_sigma_model(geom, e1, flat_target(2), e2,
                                      [&M](const double* x, double* y) {
                                        y[0] = M[0] * x[0] + M[1] * x[1];
                                        y[1] = M[2] * x[0] + M[3] * x[1];
                                      });
    SigmaNormReport nr = sigma_norm_check(sm);
    if (nr.norm_ratio.degenerate) continue;
    worst_spread = std::max(worst_spread, nr.norm_ratio.spread);
    if (used == 0)
      ratio0 = nr.norm_ratio.ratio;
    else
      drift = std::max(drift, std::abs(nr.norm_ratio.ratio - ratio0));
    cand_sum = nr.candidate_sum;
    cand_prod = nr.candidate_product;
    ++used;
  }
  const bool ok = used >= 19 && worst_spread < 1e-10 && drift < 1e-10;
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "spread %.3g, measured c = %.6g (N1+N2 -> %.0f, N1*N2 -> "
                "%.0f)",
                std::max(worst_spread, drift), ratio0, cand_sum, cand_prod);
  report(5, ok, "sigma-model proportionality", detail);
}

// 6. geodesic suite: energies and paths against the RK4 oracle, < 30 s
void criterion_6() {
  Timer t;
  const std::vector<double> a{1.2, 0.4};
  double u[3];
  oracles::sphere_embed(a, u);
  double tan1[3] = {std::cos(a[0]) * std::cos(a[1]),
                    std::cos(a[0]) * std::sin(a[1]), -std::sin(a[0])};
  double tan2[3] = {-std::sin(a[1]), std::cos(a[1]), 0.0};
  double w[3];
  for (int i = 0; i < 3; ++i) w[i] = tan1[i] + 0.5 * tan2[i];
  double dotu = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
  double nrm = 0.0;
  for (int i = 0; i < 3; ++i) {
    w[i] -= dotu * u[i];
    nrm += w[i] * w[i];
  }
  nrm = std::sqrt(nrm);
  for (int i = 0; i < 3; ++i) w[i] /= nrm;

  bool ok = true;
  double worst_e = 0.0, worst_p = 0.0;
  for (double d : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    double ub[3];
    for (int i = 0; i < 3; ++i)
      ub[i] = std::cos(d) * u[i] + std::sin(d) * w[i];
    std::vector<double> b{std::acos(std::clamp(ub[2], -1.0, 1.0)),
                          std::atan2(ub[1], ub[0])};
    const int K = 128;
    GeodesicResult r = geodesic_minimize(a, b, K, sphere_target(1.0));
    const double e_err = std::abs(r.energy - d * d) / (d * d);
    double vel[2];
    oracles::great_circle_velocity(a, b, vel);
    Path oracle = oracles::rk4_geodesic(a, vel, K, 64);
    double sup = 0.0;
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < 2; ++i)
        sup = std::max(sup, std::abs(r.path[k][i] - oracle[k][i]));
    worst_e = std::max(worst_e, e_err);
    worst_p = std::max(worst_p, sup);
    ok = ok && r.converged && e_err < 1e-3 && sup < 1e-3;
  }
  const double secs = t.seconds();
  ok = ok && secs < 30.0;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "energy rel err %.3g, path sup err %.3g, %.2f s", worst_e,
                worst_p, secs);
  report(6, ok, "geodesic suite against the RK4 oracle", detail);
}

// 7. YM proportionality and action identity for f in {0.1, 1, 3}
void criterion_7() {
  auto geom = flat_torus(8);
  CliffordModule e1 = spinor_module(2, 0, +1);
  CliffordModule e2 = spinor_module(2, 0, +1);
  bool ok = true;
  double worst_spread = 0.0, worst_action = 0.0;
  for (double f : {0.1, 1.0, 3.0}) {
    RMat fm(2, 2);
    fm(0, 1) = f;
    fm(1, 0) = -f;
    GaugeCurvature F = constant_abelian_curvature(*geom, 2, fm);
    YmModel ym = build_ym_model(geom, e1, e2, &F, nullptr);
    YmNormReport nr = ym_norm_check(ym);
    YmActionReport ar = ym_action(ym);
    const double rel = std::abs(ar.pipeline.real() - ar.total_formula.real()) /
                       (1.0 + std::abs(ar.pipeline.real()));
    worst_spread = std::max(worst_spread, nr.norm_ratio.spread);
    worst_action = std::max(worst_action, rel);
    ok = ok && nr.norm_ratio.spread < 1e-10 && rel < 1e-6;
  }
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "ratio spread %.3g, action identity defect %.3g",
                worst_spread, worst_action);
  report(7, ok, "Yang-Mills proportionality and action identity", detail);
}

// 8. combined-field split on the rank-8 composite
void criterion_8() {
  auto geom = std::make_shared<Geometry>(build_geometry(
      box_grid({0.0, 0.0}, {1.0, 1.0}, {8, 8}), flat_metric(2), 2, 2));
  CliffordModule e2 = spinor_module(1, 0, +1);
  RMat fm(2, 2);
  fm(0, 1) = 0.8;
  fm(1, 0) = -0.8;
  GaugeCurvature Fw = constant_abelian_curvature(*geom, 1, fm);
  DhymModel m = build_dhym_model(
      geom, 1, CMat::identity(1), CMat::identity(1), Fw, flat_target(1), e2,
      [](const double* x, double* y) { y[0] = 0.7 * x[0] - 0.4 * x[1]; });
  DhymReport r = dhym_split_check(m);
  const double rel = std::abs(r.pipeline.real() - r.total_formula.real()) /
                     (1.0 + std::abs(r.pipeline.real()));
  const bool ok = m.rank_s * m.rank_cl * m.rank_w == 8 &&
                  r.cross_trace < 1e-12 && rel < 1e-6;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "cross trace %.3g, action split defect %.3g", r.cross_trace,
                rel);
  report(8, ok, "combined-field trace split (rank-8 composite)", detail);
}

// 9. Higgs kinetic identity and the EHC term table
void criterion_9() {
  Config cfg = preset_config("higgs-lambda");
  RunReport rep = run_scenario(cfg, 0, false);
  double vec = -1.0, scal = -1.0, cons = -1.0;
  for (const Record& r : rep.records) {
    if (r.name == "higgs-vector-identity") vec = r.value;
    if (r.name == "higgs-scalar-identity") scal = r.value;
    if (r.name == "term-table-consistency") cons = r.abs_error;
  }
  const bool ok = rep.all_passed() && vec >= 0.0 && vec < 1e-10 &&
                  scal < 1e-10 && cons >= 0.0 && cons < 1e-9;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "identity defect %.3g, term-table defect %.3g",
                std::max(vec, scal), cons);
  report(9, ok, "Higgs kinetic identity and EHC assembly", detail);
}

// 10. determinism: byte-identical reports for a fixed seed
void criterion_10() {
  Config cfg = preset_config("sigma-flat");
  RunReport a = run_scenario(cfg, 0, false);
  RunReport b = run_scenario(cfg, 0, false);
  const bool ok = to_csv(a) == to_csv(b) && to_json(a) == to_json(b);
  report(10, ok, "byte-identical reports under a fixed seed",
         ok ? "csv+json match" : "outputs differ");
}

}  // namespace

int main() {
  Timer total;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d/10 criteria passed (%.1f s total)\n", 10 - g_failures,
              total.seconds());
  return g_failures == 0 ? 0 : 1;
}
