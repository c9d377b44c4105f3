#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "diracforge/geometry.hpp"
#include "diracforge/rng.hpp"

using namespace df;

namespace {

ChartGrid torus2(int n, double L = 2.0 * M_PI) {
  return periodic_torus_grid({L, L}, {n, n});
}

// polar cap chart of the sphere, poles excluded
ChartGrid cap_grid(int n) {
  return box_grid({0.2, 0.0}, {M_PI - 0.2, 2.0 * M_PI}, {n, n},
                  {false, true});
}

// max |f| over a fixed coordinate window on axis 0 (stable under refinement,
// unlike node-count margins on cell-centered charts)
double max_in_window(const ChartGrid& g, const RealField& f, double lo,
                     double hi) {
  double m = 0.0;
  double x[8];
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    g.node_coords(v, x);
    if (x[0] < lo || x[0] > hi) continue;
    m = std::max(m, std::abs(f.v[v]));
  }
  return m;
}

}  // namespace

TEST_CASE("partial derivatives") {
  ChartGrid g = torus2(128);
  const std::size_t nodes = g.node_count();

  // constant field -> exactly zero
  ScalarField c(nodes);
  for (auto& x : c.v) x = cplx(3.25, -1.5);
  for (int axis : {0, 1}) {
    ScalarField d = partial_derivative(g, c, axis, 2);
    for (const auto& x : d.v) CHECK(std::abs(x) == 0.0);
  }

  // d/dx sin(x), order 2, h = 2pi/128: bound h^2/6 max|f'''| = h^2/6
  ScalarField s(nodes);
  double x[2];
  for (std::size_t v = 0; v < nodes; ++v) {
    g.node_coords(v, x);
    s.v[v] = std::sin(x[0]);
  }
  ScalarField ds = partial_derivative(g, s, 0, 2);
  double worst = 0.0;
  for (std::size_t v = 0; v < nodes; ++v) {
    g.node_coords(v, x);
    worst = std::max(worst, std::abs(ds.v[v] - std::cos(x[0])));
  }
  // Taylor bound h^2/6 max|f'''|
  const double h = g.axis(0).spacing;
  CHECK(worst < 1.01 * h * h / 6.0);
  CHECK(worst < 5e-4);

  // order-4 error scales as h^4 under doubling
  auto err4 = [](int n) {
    ChartGrid g = periodic_torus_grid({2.0 * M_PI}, {n});
    ScalarField s(g.node_count());
    double x[1];
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      g.node_coords(v, x);
      s.v[v] = std::sin(x[0]);
    }
    ScalarField d = partial_derivative(g, s, 0, 4);
    double w = 0.0;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      g.node_coords(v, x);
      w = std::max(w, std::abs(d.v[v] - std::cos(x[0])));
    }
    return w;
  };
  const double slope = std::log2(err4(32) / err4(64));
  CHECK(slope > 3.7);
  CHECK(slope < 4.3);

  // one-sided edges keep the order on non-periodic charts: exact on cubics
  // for order 4
  ChartGrid box = box_grid({0.0}, {1.0}, {16});
  ScalarField p(box.node_count());
  for (std::size_t v = 0; v < box.node_count(); ++v) {
    box.node_coords(v, x);
    p.v[v] = x[0] * x[0] * x[0];
  }
  ScalarField dp = partial_derivative(box, p, 0, 4);
  for (std::size_t v = 0; v < box.node_count(); ++v) {
    box.node_coords(v, x);
    CHECK(std::abs(dp.v[v] - 3.0 * x[0] * x[0]) < 1e-12);
  }

  CHECK_THROWS(partial_derivative(ChartGrid({{3, 0.1, 0.0, true}}), c, 0, 4));
}

TEST_CASE("orthonormal coframe") {
  // identity metric -> identity coframe
  {
    ChartGrid g = torus2(8);
    MetricField m = sample_metric(g, flat_metric(2));
    CoframeField f = orthonormal_coframe(g, m);
    for (std::size_t v = 0; v < g.node_count(); ++v)
      for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i)
          CHECK(f.e_at(v)[a * 2 + i] == (a == i ? 1.0 : 0.0));
    CHECK(f.eta == std::vector<int>{1, 1});
  }

  // sphere: e^1 = dtheta, e^2 = sin(theta) dphi
  {
    ChartGrid g = cap_grid(32);
    MetricField m = sample_metric(g, sphere_metric(1.0));
    CoframeField f = orthonormal_coframe(g, m);
    double x[2];
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      g.node_coords(v, x);
      const double* e = f.e_at(v);
      CHECK(std::abs(e[0 * 2 + 0] - 1.0) < 1e-12);
      CHECK(std::abs(e[0 * 2 + 1]) < 1e-12);
      CHECK(std::abs(e[1 * 2 + 0]) < 1e-12);
      CHECK(std::abs(e[1 * 2 + 1] - std::sin(x[0])) < 1e-12);
    }
  }

  // minkowski: identity coframe with eta = (+1,-1)
  {
    ChartGrid g = torus2(8);
    MetricField m = sample_metric(g, minkowski_metric(1, 1));
    CHECK(m.sig_p == 1);
    CHECK(m.sig_q == 1);
    CoframeField f = orthonormal_coframe(g, m);
    CHECK(f.eta == std::vector<int>{1, -1});
    for (std::size_t v = 0; v < g.node_count(); ++v)
      for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i)
          CHECK(std::abs(f.e_at(v)[a * 2 + i] - (a == i ? 1.0 : 0.0)) <
                1e-12);
  }

  // orthonormality e^a g* e^b = eta^ab at every node (hyperbolic chart)
  {
    ChartGrid g = box_grid({0.0, 0.5}, {1.0, 1.5}, {16, 16});
    MetricField m = sample_metric(g, hyperbolic_metric());
    CoframeField f = orthonormal_coframe(g, m);
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      const double* e = f.e_at(v);
      const double* gi = m.ginv_at(v);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double s = 0.0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              s += e[a * 2 + i] * gi[i * 2 + j] * e[b * 2 + j];
          const double want = (a == b) ? double(f.eta[a]) : 0.0;
          CHECK(std::abs(s - want) < 1e-10);
        }
    }
  }
}

TEST_CASE("christoffel symbols") {
  // flat: all zero exactly
  {
    ChartGrid g = torus2(16);
    MetricField m = sample_metric(g, flat_metric(2));
    ChristoffelField G = christoffels(g, m, 2);
    for (double v : G.v) CHECK(v == 0.0);
  }

  // sphere: Gamma^theta_phiphi = -sin(theta)cos(theta)
  {
    ChartGrid g = cap_grid(256);
    MetricField m = sample_metric(g, sphere_metric(1.0));
    ChristoffelField G = christoffels(g, m, 4);
    const int n = 2;
    double x[2], worst = 0.0, worst_sym = 0.0;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      g.node_coords(v, x);
      const double* Gv = G.at(v);
      const double want = -std::sin(x[0]) * std::cos(x[0]);
      worst = std::max(worst,
                       std::abs(Gv[(0 * n + 1) * n + 1] - want));
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            worst_sym = std::max(worst_sym,
                                 std::abs(Gv[(k * n + i) * n + j] -
                                          Gv[(k * n + j) * n + i]));
    }
    CHECK(worst < 1e-6);
    CHECK(worst_sym == 0.0);
  }
}

TEST_CASE("scalar curvature") {
  // flat torus: |R| < 1e-10
  {
    ChartGrid g = torus2(16);
    MetricField m = sample_metric(g, flat_metric(2));
    RealField R = scalar_curvature(g, m, 2);
    for (double v : R.v) CHECK(std::abs(v) < 1e-10);
  }

  // unit sphere: R = 2 away from the chart edges
  {
    ChartGrid g = cap_grid(128);
    MetricField m = sample_metric(g, sphere_metric(1.0));
    RealField R = scalar_curvature(g, m, 4);
    RealField err(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) err.v[v] = R.v[v] - 2.0;
    CHECK(max_in_window(g, err, 0.45, M_PI - 0.45) < 1e-3);
  }

  // radius sweep: R = 2/r^2, with second-order convergence at order 2
  for (double r : {1.0, 2.0}) {
    auto err_at = [&](int nn) {
      ChartGrid g = cap_grid(nn);
      MetricField m = sample_metric(g, sphere_metric(r));
      RealField R = scalar_curvature(g, m, 2);
      RealField e(g.node_count());
      for (std::size_t v = 0; v < g.node_count(); ++v)
        e.v[v] = R.v[v] - 2.0 / (r * r);
      return max_in_window(g, e, 0.45, M_PI - 0.45);
    };
    const double e1 = err_at(64), e2 = err_at(128);
    CHECK(e2 < 2e-2);
    const double slope = std::log2(e1 / e2);
    CHECK(slope > 1.7);  // nominal 2 within 0.3
    CHECK(slope < 2.3);
  }
}

TEST_CASE("codifferential") {
  ChartGrid g = torus2(64);
  MetricField m = sample_metric(g, flat_metric(2));
  const std::size_t nodes = g.node_count();

  // constant one-form on the flat torus -> 0
  {
    std::vector<ScalarField> alpha(2, ScalarField(nodes));
    for (std::size_t v = 0; v < nodes; ++v) alpha[0].v[v] = 1.0;
    ScalarField d = codifferential(g, m, alpha, 2);
    for (const auto& x : d.v) CHECK(std::abs(x) < 1e-12);
  }

  // delta_g d f = -Laplacian f: f = sin x -> sin x
  {
    std::vector<ScalarField> df(2, ScalarField(nodes));
    ScalarField f(nodes);
    double x[2];
    for (std::size_t v = 0; v < nodes; ++v) {
      g.node_coords(v, x);
      f.v[v] = std::sin(x[0]);
    }
    df[0] = partial_derivative(g, f, 0, 2);
    df[1] = partial_derivative(g, f, 1, 2);
    ScalarField d = codifferential(g, m, df, 2);
    double worst = 0.0;
    for (std::size_t v = 0; v < nodes; ++v) {
      g.node_coords(v, x);
      worst = std::max(worst, std::abs(d.v[v] - std::sin(x[0])));
    }
    // two stacked order-2 stencils: error about h^2/3
    const double h = g.axis(0).spacing;
    CHECK(worst < 1.1 * h * h / 3.0);
  }

  // adjointness: int <df, alpha> = int f delta alpha on a periodic grid
  {
    Rng rng(3);
    ScalarField f(nodes);
    std::vector<ScalarField> alpha(2, ScalarField(nodes));
    double x[2];
    for (std::size_t v = 0; v < nodes; ++v) {
      g.node_coords(v, x);
      f.v[v] = std::sin(x[0]) * std::cos(2.0 * x[1]);
      alpha[0].v[v] = std::cos(x[0] + x[1]);
      alpha[1].v[v] = std::sin(2.0 * x[0]) + 0.3;
    }
    std::vector<ScalarField> df{partial_derivative(g, f, 0, 2),
                                partial_derivative(g, f, 1, 2)};
    ScalarField da = codifferential(g, m, alpha, 2);
    ScalarField lhs(nodes), rhs(nodes);
    for (std::size_t v = 0; v < nodes; ++v) {
      const double* gi = m.ginv_at(v);
      cplx s = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          s += gi[i * 2 + j] * df[i].v[v] * alpha[j].v[v];
      lhs.v[v] = s;
      rhs.v[v] = f.v[v] * da.v[v];
    }
    CHECK(std::abs(integrate(g, m, lhs) - integrate(g, m, rhs)) < 1e-10);
  }
}

TEST_CASE("integration") {
  // flat torus area
  {
    ChartGrid g = torus2(32);
    MetricField m = sample_metric(g, flat_metric(2));
    ScalarField one(g.node_count());
    for (auto& x : one.v) x = 1.0;
    CHECK(std::abs(integrate(g, m, one) - 4.0 * M_PI * M_PI) < 1e-10);

    ScalarField s(g.node_count());
    double x[2];
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      g.node_coords(v, x);
      s.v[v] = std::sin(x[0]);
    }
    CHECK(std::abs(integrate(g, m, s)) < 1e-9);
  }

  // spherical zone theta in [0.2, pi-0.2]
  {
    ChartGrid g = cap_grid(256);
    MetricField m = sample_metric(g, sphere_metric(1.0));
    ScalarField one(g.node_count());
    for (auto& x : one.v) x = 1.0;
    const double zone =
        2.0 * M_PI * (std::cos(0.2) - std::cos(M_PI - 0.2));
    CHECK(std::abs(integrate(g, m, one) - zone) < 1e-4);
  }
}

TEST_CASE("metric validation") {
  ChartGrid g = torus2(8);
  // signature flips across nodes -> rejected
  MetricCallback bad;
  bad.n = 2;
  bad.eval = [](const double* x, RMat& m) {
    m = RMat::identity(2);
    m(1, 1) = x[0] < 3.0 ? 1.0 : -1.0;
  };
  CHECK_THROWS(sample_metric(g, bad));

  // near-singular -> rejected
  MetricCallback sing;
  sing.n = 2;
  sing.eval = [](const double*, RMat& m) {
    m = RMat(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = 1e-15;
  };
  CHECK_THROWS(sample_metric(g, sing));

  // raw table ingest round-trips the sampled flat metric
  MetricField m = sample_metric(g, flat_metric(2));
  MetricField m2 = metric_from_table(g, m.g);
  CHECK(m2.sqrt_det == m.sqrt_det);
}

TEST_CASE("spin coefficients match the analytic round-sphere connection") {
  // omega_{12,phi} = -cos(theta) for the coframe (dtheta, sin dphi)
  Geometry g = build_geometry(cap_grid(128), sphere_metric(1.0), 4, 2);
  const int n = 2;
  double x[2], worst = 0.0;
  for (std::size_t v = 0; v < g.grid.node_count(); ++v) {
    g.grid.node_coords(v, x);
    if (x[0] < 0.3 || x[0] > M_PI - 0.3) continue;
    const double* om = g.omega_at(v);
    worst = std::max(worst, std::abs(om[(1 * n + 0) * n + 1] + std::cos(x[0])));
    // theta direction carries no rotation
    worst = std::max(worst, std::abs(om[(0 * n + 0) * n + 1]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("deterministic reductions") {
  Rng rng(9);
  std::vector<cplx> data(10001);
  for (auto& x : data) x = rng.csym();
  const cplx a = pairwise_sum(data.data(), data.size());
  const cplx b = pairwise_sum(data.data(), data.size());
  CHECK(std::memcmp(&a, &b, sizeof(a)) == 0);

  // parallel node maps produce identical bytes for any thread count
  ChartGrid g = torus2(32);
  ScalarField f(g.node_count());
  double x[2];
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    g.node_coords(v, x);
    f.v[v] = std::sin(x[0]) * std::cos(x[1]);
  }
  set_thread_count(1);
  ScalarField d1 = partial_derivative(g, f, 0, 4);
  set_thread_count(4);
  ScalarField d4 = partial_derivative(g, f, 0, 4);
  set_thread_count(1);
  CHECK(std::memcmp(d1.v.data(), d4.v.data(),
                    d1.v.size() * sizeof(cplx)) == 0);
}
