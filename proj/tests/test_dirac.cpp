#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "diracforge/dirac.hpp"

using namespace df;

namespace {

std::shared_ptr<Geometry> flat_torus(int n, int order = 2) {
  return std::make_shared<Geometry>(build_geometry(
      periodic_torus_grid({2.0 * M_PI, 2.0 * M_PI}, {n, n}), flat_metric(2),
      order, order));
}

std::shared_ptr<Geometry> sphere_cap(int n, int order = 4) {
  return std::make_shared<Geometry>(build_geometry(
      box_grid({0.2, 0.0}, {M_PI - 0.2, 2.0 * M_PI}, {n, n}, {false, true}),
      sphere_metric(1.0), order, order));
}

double max_field(const SectionField& f) {
  double m = 0.0;
  for (const auto& c : f.v) m = std::max(m, std::abs(c));
  return m;
}

double max_diff(const SectionField& a, const SectionField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i)
    m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

double max_window(const Geometry& g, const ScalarField& f, double lo,
                  double hi) {
  double m = 0.0;
  double x[8];
  for (std::size_t v = 0; v < g.grid.node_count(); ++v) {
    g.grid.node_coords(v, x);
    if (x[0] < lo || x[0] > hi) continue;
    m = std::max(m, std::abs(f.v[v]));
  }
  return m;
}

}  // namespace

TEST_CASE("clifford connection verification") {
  Rng rng(3);
  // flat torus, A = 0: all coefficients constant, violation at rounding level
  {
    auto g = flat_torus(32);
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
    auto c = build_clifford_connection(g, m);
    ConnectionReport rep = verify_clifford_connection(c, rng);
    CHECK(rep.clifford_property < 1e-12);
    CHECK(rep.theta_constancy < 1e-12);
  }

  // sphere chart at order 4
  {
    auto g = sphere_cap(256);
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
    auto c = build_clifford_connection(g, m);
    ConnectionReport rep = verify_clifford_connection(c, rng);
    CHECK(rep.clifford_property < 1e-10);
    CHECK(rep.clifford_property_fd < 1e-5);
    CHECK(rep.theta_constancy < 1e-5);
  }

  // corrupted spin coefficient is flagged at O(1)
  {
    auto g = sphere_cap(64);
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
    auto c = build_clifford_connection(g, m);
    for (std::size_t v = 0; v < c.coeff[1].nodes(); ++v) {
      CMat b = c.coeff[1].get(v);
      b(0, 0) += 0.5;
      c.coeff[1].set(v, b);
    }
    ConnectionReport rep = verify_clifford_connection(c, rng);
    CHECK(rep.clifford_property > 0.1);
  }

  // abelian gauge potential is accepted, non-commutant rejected
  {
    auto g = flat_torus(16);
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
    std::vector<MatrixField> A(2);
    for (int i = 0; i < 2; ++i) {
      A[i] = MatrixField(g->grid.node_count(), 2);
      double x[2];
      for (std::size_t v = 0; v < g->grid.node_count(); ++v) {
        g->grid.node_coords(v, x);
        A[i].set(v, cplx(0.0, std::sin(x[i])) * CMat::identity(2));
      }
    }
    CHECK_NOTHROW(build_clifford_connection(g, m, A));
    A[0].set(3, m->gamma[0]);
    CHECK_THROWS_WITH_AS(build_clifford_connection(g, m, A),
                         doctest::Contains("not commutant-valued"),
                         std::invalid_argument);
  }
}

TEST_CASE("quantized connection acts as the flat Study operator") {
  // 1-D chart, Study module: psi = (sin t, cos t) -> (cos t, sin t)
  auto g = std::make_shared<Geometry>(
      build_geometry(box_grid({0.0}, {1.0}, {128}), flat_metric(1), 2, 2));
  auto m = std::make_shared<CliffordModule>(study_module(+1));
  auto D = quantize_connection(build_clifford_connection(g, m));

  const std::size_t nodes = g->grid.node_count();
  SectionField psi(nodes, 2), want(nodes, 2);
  double t[1];
  for (std::size_t v = 0; v < nodes; ++v) {
    g->grid.node_coords(v, t);
    psi.at(v)[0] = std::sin(t[0]);
    psi.at(v)[1] = std::cos(t[0]);
    want.at(v)[0] = std::cos(t[0]);
    want.at(v)[1] = std::sin(t[0]);
  }
  CHECK(max_diff(D.apply(psi), want) < 1e-3);

  // constant sections are annihilated on the flat torus
  auto g2 = flat_torus(16);
  auto m2 = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
  auto D2 = quantize_connection(build_clifford_connection(g2, m2));
  SectionField c = constant_section(g2->grid.node_count(), 2, 0);
  CHECK(max_field(D2.apply(c)) < 1e-14);
}

TEST_CASE("symbol property [D,f] = gamma(df) at stencil order") {
  Rng rng(5);
  auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
  auto err_at = [&](int n) {
    auto g = flat_torus(n);
    auto D = quantize_connection(build_clifford_connection(g, m));
    const std::size_t nodes = g->grid.node_count();
    SectionField psi = random_smooth_section(*g, 2, rng);
    double x[2];
    // f = sin x1, df = cos x1 dx1
    SectionField fpsi(nodes, 2), want(nodes, 2);
    for (std::size_t v = 0; v < nodes; ++v) {
      g->grid.node_coords(v, x);
      const double f = std::sin(x[0]);
      const double df = std::cos(x[0]);
      for (int k = 0; k < 2; ++k) fpsi.at(v)[k] = f * psi.at(v)[k];
      auto gv = D.gamma_coord[0].get(v).apply(
          std::vector<cplx>(psi.at(v), psi.at(v) + 2));
      for (int k = 0; k < 2; ++k) want.at(v)[k] = df * gv[k];
    }
    SectionField Dfpsi = D.apply(fpsi);
    SectionField Dpsi = D.apply(psi);
    double worst = 0.0;
    for (std::size_t v = 0; v < nodes; ++v) {
      g->grid.node_coords(v, x);
      for (int k = 0; k < 2; ++k)
        worst = std::max(worst,
                         std::abs(Dfpsi.at(v)[k] -
                                  std::sin(x[0]) * Dpsi.at(v)[k] -
                                  want.at(v)[k]));
    }
    return worst;
  };
  const double e1 = err_at(32), e2 = err_at(64);
  const double slope = std::log2(e1 / e2);
  CHECK(e2 < 5e-2);
  CHECK(slope > 1.7);
  CHECK(slope < 2.4);
}

TEST_CASE("simple type operators") {
  auto g = flat_torus(16);
  auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
  auto conn = build_clifford_connection(g, m);

  // phi = m Id adds tau m pointwise and anti-commutes with the action
  DiracOperator D = build_simple_type(conn, 0.5 * CMat::identity(2));
  for (std::size_t v = 0; v < D.phi_big.nodes(); ++v) {
    CHECK(max_abs(D.phi_big.get(v) - 0.5 * m->tau) == 0.0);
    for (const CMat& ga : m->gamma)
      CHECK(max_abs(anticommutator(D.phi_big.get(v), ga)) < 1e-12);
  }

  // phi = 0 reduces to the quantized connection
  DiracOperator D0 = build_simple_type(conn, CMat::zero(2));
  Rng rng(7);
  SectionField psi = random_smooth_section(*g, 2, rng);
  CHECK(max_diff(D0.apply(psi),
                 quantize_connection(conn).apply(psi)) == 0.0);

  // non-commutant phi is rejected
  CHECK_THROWS_AS(build_simple_type(conn, m->gamma[0]),
                  std::invalid_argument);
}

TEST_CASE("bochner extraction recovers known connections") {
  auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));

  // flat torus, A=0, phi=0: coefficients vanish
  {
    auto g = flat_torus(32);
    auto D = quantize_connection(build_clifford_connection(g, m));
    auto B = extract_bochner(D);
    double worst = 0.0;
    for (const auto& f : B)
      for (const auto& c : f.v) worst = std::max(worst, std::abs(c));
    CHECK(worst < 1e-10);
  }

  // abelian gauge field: extraction matches spin + A at O(h^2)
  {
    auto g = flat_torus(64);
    std::vector<MatrixField> A(2);
    double x[2];
    for (int i = 0; i < 2; ++i) {
      A[i] = MatrixField(g->grid.node_count(), 2);
      for (std::size_t v = 0; v < g->grid.node_count(); ++v) {
        g->grid.node_coords(v, x);
        A[i].set(v, cplx(0.0, 0.3 * std::sin(x[1 - i])) * CMat::identity(2));
      }
    }
    auto conn = build_clifford_connection(g, m, A);
    auto D = quantize_connection(conn);
    auto B = extract_bochner(D);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < B[i].v.size(); ++k)
        worst = std::max(worst, std::abs(B[i].v[k] - conn.coeff[i].v[k]));
    const double h = g->grid.axis(0).spacing;
    CHECK(worst < 10.0 * h * h);
  }

  // sphere, A=0: Bochner connection of a simple-type operator is the
  // Clifford connection itself
  {
    auto g = sphere_cap(128);
    auto conn = build_clifford_connection(g, m);
    auto D = build_simple_type(conn, 0.4 * CMat::identity(2));
    auto B = extract_bochner(D);
    double worst = 0.0;
    double x[2];
    for (int i = 0; i < 2; ++i)
      for (std::size_t v = 0; v < g->grid.node_count(); ++v) {
        g->grid.node_coords(v, x);
        if (x[0] < 0.45 || x[0] > M_PI - 0.45) continue;
        worst = std::max(worst,
                         max_abs(B[i].get(v) - conn.coeff[i].get(v)));
      }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("first order decomposition") {
  auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
  auto g = flat_torus(32);
  auto conn = build_clifford_connection(g, m);

  // simple type: Phi_D = tau phi
  {
    auto D = build_simple_type(conn, 0.7 * CMat::identity(2));
    auto B = extract_bochner(D);
    MatrixField phi = first_order_phi(D, B);
    double worst = 0.0;
    for (std::size_t v = 0; v < phi.nodes(); ++v)
      worst = std::max(worst, max_abs(phi.get(v) - 0.7 * m->tau));
    CHECK(worst < 1e-9);
  }

  // quantized connection: Phi_D = 0
  {
    auto D = quantize_connection(conn);
    auto B = extract_bochner(D);
    MatrixField phi = first_order_phi(D, B);
    double worst = 0.0;
    for (const auto& c : phi.v) worst = std::max(worst, std::abs(c));
    CHECK(worst < 1e-10);
  }

  // general even zero-order part B = c0 Id + c2 gamma1 gamma2: the grade-0
  // piece is a quantized one-form and moves into the Bochner connection, so
  // the canonical remainder is c2 gamma1 gamma2 - (n-1) c0 Id (hand
  // derivation from the anticommutator content of D^2; n = 2 here). The
  // top-grade piece anticommutes with the action and survives unchanged.
  {
    Rng rng(11);
    const cplx c0 = rng.csym(), c2 = rng.csym();
    CMat B2 = c0 * CMat::identity(2) + c2 * (m->gamma[0] * m->gamma[1]);
    auto D = with_zero_order(conn, B2);
    auto B = extract_bochner(D);
    MatrixField phi = first_order_phi(D, B);
    CMat want = c2 * (m->gamma[0] * m->gamma[1]) - c0 * CMat::identity(2);
    double worst = 0.0;
    for (std::size_t v = 0; v < phi.nodes(); ++v)
      worst = std::max(worst, max_abs(phi.get(v) - want));
    CHECK(worst < 1e-9);

    // pure anticommuting part: recovered exactly
    auto D2 = with_zero_order(conn, c2 * (m->gamma[0] * m->gamma[1]));
    MatrixField phi2 = first_order_phi(D2, extract_bochner(D2));
    worst = 0.0;
    for (std::size_t v = 0; v < phi2.nodes(); ++v)
      worst = std::max(worst,
                       max_abs(phi2.get(v) - c2 * (m->gamma[0] * m->gamma[1])));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("canonical one form and Dirac connection") {
  Rng rng(13);
  for (int eps : {+1, -1}) {
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, eps));
    // Theta(e_a) = (eps/n) eta_a gamma^a
    auto theta = canonical_one_form(*m);
    for (int a = 0; a < 2; ++a)
      CHECK(max_abs(theta[a] - (0.5 * eps * m->sig.eta(a)) * m->gamma[a]) ==
            0.0);

    // delta_gamma(Theta Phi) = Phi for 100 random commutant Phi
    for (int t = 0; t < 100; ++t) {
      CMat Phi = rng.csym() * CMat::identity(2);
      CMat out(2, 2);
      for (int a = 0; a < 2; ++a) out += m->gamma[a] * theta[a] * Phi;
      CHECK(max_abs(out - Phi) < 1e-12);
    }
  }

  // quantizing the Dirac connection returns D on probe sections
  auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
  auto g = flat_torus(64);
  auto conn = build_clifford_connection(g, m);
  auto D = build_simple_type(conn, 0.6 * CMat::identity(2));
  auto dec = decompose(D);
  auto omega = dirac_form(D, dec.phi_d);

  SectionField psi = random_smooth_section(*g, 2, rng);
  SectionField viaD = D.apply(psi);
  // delta_gamma(del_D) psi = sum_i gamma(dx^i)(d_i + B_i + omega_i) psi
  SectionField via_conn(g->grid.node_count(), 2);
  for (int i = 0; i < 2; ++i) {
    SectionField u = partial_derivative(g->grid, psi, i, g->order_op);
    field_matvec_acc(dec.bochner[i], psi, u);
    field_matvec_acc(omega[i], psi, u);
    field_matvec_acc(D.gamma_coord[i], u, via_conn);
  }
  const double h = g->grid.axis(0).spacing;
  CHECK(max_diff(viaD, via_conn) < 10.0 * h * h);

  // omega_D for phi = m Id: (eps/n) gamma(e^a) tau m per frame direction
  for (std::size_t v : {std::size_t(0), std::size_t(5)}) {
    for (int i = 0; i < 2; ++i) {
      CMat want = (0.5 * 0.6) * (m->gamma[i] * m->tau);  // flat frame
      CHECK(max_abs(omega[i].get(v) - want) < 1e-8);
    }
  }
}

TEST_CASE("bochner laplacian") {
  for (int eps : {+1, -1}) {
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, eps));
    auto g = flat_torus(64);
    auto conn = build_clifford_connection(g, m);
    const std::size_t nodes = g->grid.node_count();

    std::vector<MatrixField> zero(2);
    for (int i = 0; i < 2; ++i) {
      zero[i] = MatrixField(nodes, 2);
    }

    // flat: Delta_B (sin x . v) = -eps sin x . v
    SectionField psi(nodes, 2);
    double x[2];
    for (std::size_t v = 0; v < nodes; ++v) {
      g->grid.node_coords(v, x);
      psi.at(v)[0] = std::sin(x[0]);
    }
    SectionField lap = apply_bochner_laplacian(*g, zero, eps, psi);
    double worst = 0.0;
    for (std::size_t v = 0; v < nodes; ++v) {
      g->grid.node_coords(v, x);
      worst = std::max(worst,
                       std::abs(lap.at(v)[0] + double(eps) * std::sin(x[0])));
    }
    const double h = g->grid.axis(0).spacing;
    CHECK(worst < h * h);

    // constant section annihilated
    SectionField c = constant_section(nodes, 2, 1);
    CHECK(max_field(apply_bochner_laplacian(*g, zero, eps, c)) < 1e-14);
  }

  // sphere, l=1 spherical harmonic scalar times constant fiber, flat fiber
  // connection: eigenvalue -l(l+1) = -2
  {
    const int eps = +1;
    auto g = sphere_cap(128);
    const std::size_t nodes = g->grid.node_count();
    std::vector<MatrixField> zero(2);
    for (int i = 0; i < 2; ++i) zero[i] = MatrixField(nodes, 2);
    SectionField psi(nodes, 2);
    double x[2];
    for (std::size_t v = 0; v < nodes; ++v) {
      g->grid.node_coords(v, x);
      psi.at(v)[0] = std::cos(x[0]);  // Y_10 up to normalization
    }
    SectionField lap = apply_bochner_laplacian(*g, zero, eps, psi);
    ScalarField err(nodes);
    for (std::size_t v = 0; v < nodes; ++v) {
      g->grid.node_coords(v, x);
      err.v[v] = lap.at(v)[0] + double(eps) * 2.0 * std::cos(x[0]);
    }
    CHECK(max_window(*g, err, 0.45, M_PI - 0.45) < 1e-3);
  }
}

TEST_CASE("potential and second order consistency") {
  // flat torus, A=0, phi=0: V = 0 (Lichnerowicz with scal = 0)
  {
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
    auto g = flat_torus(32);
    auto D = quantize_connection(build_clifford_connection(g, m));
    auto dec = decompose(D);
    double worst = 0.0;
    for (const auto& c : dec.v_d.v) worst = std::max(worst, std::abs(c));
    CHECK(worst < 1e-10);
  }

  // flat torus, constant phi = m Id: tr V_D = N m^2, node-independent
  for (int eps : {+1, -1}) {
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, eps));
    auto g = flat_torus(32);
    auto conn = build_clifford_connection(g, m);
    const double mass = 0.8;
    auto D = build_simple_type(conn, mass * CMat::identity(2));
    auto dec = decompose(D);
    double worst = 0.0;
    for (const auto& c : dec.tr_v.v)
      worst = std::max(worst, std::abs(c - 2.0 * mass * mass));
    CHECK(worst < 1e-10);

    // Lambda constancy: tr phi^2 node-independent
    cplx first = trace(dec.phi_d.get(0) * dec.phi_d.get(0));
    for (std::size_t v = 0; v < dec.phi_d.nodes(); ++v)
      CHECK(std::abs(trace(dec.phi_d.get(v) * dec.phi_d.get(v)) - first) <
            1e-12);

    CHECK(dec.phi_zero_order_residual <
          10.0 * std::pow(g->grid.axis(0).spacing, 2));
    CHECK(dec.v_zero_order_residual <
          10.0 * std::pow(g->grid.axis(0).spacing, 2));
  }

  // sphere: tr V_D = -eps (N/4) scal = -eps (2/4) * 2
  for (int eps : {+1, -1}) {
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, eps));
    auto g = sphere_cap(96);
    auto D = quantize_connection(build_clifford_connection(g, m));
    auto dec = decompose(D);
    ScalarField err(dec.tr_v.v.size());
    for (std::size_t v = 0; v < err.v.size(); ++v)
      err.v[v] = dec.tr_v.v[v] + double(eps) * 0.5 * 2.0;
    CHECK(max_window(*g, err, 0.45, M_PI - 0.45) < 2e-3);
  }

  // D^2 psi = Delta_B psi + V_D psi on a random probe
  {
    Rng rng(17);
    auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));
    auto g = flat_torus(64);
    auto conn = build_clifford_connection(g, m);
    auto D = build_simple_type(conn, 0.3 * CMat::identity(2));
    auto dec = decompose(D);
    SectionField psi = random_smooth_section(*g, 2, rng);
    SectionField lhs = D.apply(D.apply(psi));
    SectionField rhs = apply_bochner_laplacian(*g, dec.bochner,
                                               m->sig.eps, psi);
    field_matvec_acc(dec.v_d, psi, rhs);
    const double h = g->grid.axis(0).spacing;
    CHECK(max_diff(lhs, rhs) < 20.0 * h * h);
  }
}

TEST_CASE("trace formula") {
  auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));

  // phi = 0, flat, A = 0: both sides vanish
  {
    auto g = flat_torus(32);
    auto D = quantize_connection(build_clifford_connection(g, m));
    auto dec = decompose(D);
    ScalarField rhs = trace_formula_rhs(D, dec);
    for (const auto& c : rhs.v) CHECK(std::abs(c) < 1e-10);
  }

  // constant phi on the flat torus: pointwise match with tr V_D
  {
    auto g = flat_torus(32);
    auto conn = build_clifford_connection(g, m);
    auto D = build_simple_type(conn, 0.9 * CMat::identity(2));
    auto dec = decompose(D);
    ScalarField rhs = trace_formula_rhs(D, dec);
    double worst = 0.0;
    for (std::size_t v = 0; v < rhs.v.size(); ++v)
      worst = std::max(worst, std::abs(rhs.v[v] - dec.tr_v.v[v]));
    CHECK(worst < 1e-8);
  }

  // non-constant phi(x): integrals agree (the codifferential term and FD
  // remainders integrate to zero on the closed grid)
  {
    auto g = flat_torus(64);
    auto conn = build_clifford_connection(g, m);
    const std::size_t nodes = g->grid.node_count();
    MatrixField phi(nodes, 2);
    double x[2];
    for (std::size_t v = 0; v < nodes; ++v) {
      g->grid.node_coords(v, x);
      phi.set(v, (0.5 + 0.2 * std::sin(x[0]) * std::cos(x[1])) *
                     CMat::identity(2));
    }
    auto D = build_simple_type(conn, phi);
    auto dec = decompose(D);
    ScalarField rhs = trace_formula_rhs(D, dec);
    ScalarField diff(nodes);
    for (std::size_t v = 0; v < nodes; ++v)
      diff.v[v] = dec.tr_v.v[v] - rhs.v[v];
    CHECK(std::abs(integrate(g->grid, g->metric, diff)) < 1e-6);
  }
}

TEST_CASE("dirac actions") {
  auto m = std::make_shared<CliffordModule>(spinor_module(2, 0, +1));

  // flat torus, phi = 0: universal action vanishes
  {
    auto g = flat_torus(32);
    auto D = quantize_connection(build_clifford_connection(g, m));
    CHECK(std::abs(universal_dirac_action(D)) < 1e-9);
  }

  // flat torus [0,2pi)^2, rank 2, phi = m Id: I_D = 4 pi^2 N m^2
  {
    auto g = flat_torus(32);
    auto conn = build_clifford_connection(g, m);
    const double mass = 0.5;
    auto D = build_simple_type(conn, mass * CMat::identity(2));
    auto dec = decompose(D);
    const double want = 4.0 * M_PI * M_PI * 2.0 * mass * mass;
    CHECK(std::abs(universal_dirac_action(D, dec) - want) < 1e-8);

    // psi = 0 gives back the universal action
    SectionField zero(g->grid.node_count(), 2);
    CHECK(std::abs(total_dirac_action(D, dec, zero) -
                   universal_dirac_action(D, dec)) == 0.0);
  }

  // constant psi on the flat torus with D = quantized flat connection:
  // fermion term vanishes
  {
    auto g = flat_torus(32);
    auto D = quantize_connection(build_clifford_connection(g, m));
    auto dec = decompose(D);
    SectionField c = constant_section(g->grid.node_count(), 2, 0);
    CHECK(std::abs(total_dirac_action(D, dec, c)) < 1e-9);
  }
}
