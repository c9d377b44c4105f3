#include "diracforge/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace df {

// ---------------------------------------------------------------- targets

TargetGeometry flat_target(int n) {
  TargetGeometry t;
  t.n = n;
  t.name = "flat";
  t.g = [n](const double*, RMat& g) { g = RMat::identity(n); };
  t.dg = [n](const double*, double* dg) {
    std::fill(dg, dg + n * n * n, 0.0);
  };
  return t;
}

TargetGeometry sphere_target(double radius) {
  TargetGeometry t;
  t.n = 2;
  t.name = "sphere";
  const double r2 = radius * radius;
  t.g = [r2](const double* y, RMat& g) {
    g = RMat(2, 2);
    const double s = std::sin(y[0]);
    g(0, 0) = r2;
    g(1, 1) = r2 * s * s;
  };
  t.dg = [r2](const double* y, double* dg) {
    std::fill(dg, dg + 8, 0.0);
    dg[0 * 4 + 1 * 2 + 1] = 2.0 * r2 * std::sin(y[0]) * std::cos(y[0]);
  };
  t.omega = [](const double* y, double* om) {
    // omega_{12,phi} = -cos(theta) for the coframe (r dtheta, r sin dphi)
    std::fill(om, om + 8, 0.0);
    om[1 * 4 + 0 * 2 + 1] = -std::cos(y[0]);
    om[1 * 4 + 1 * 2 + 0] = std::cos(y[0]);
  };
  return t;
}

void target_coframe(const TargetGeometry& t, const double* y, RMat& e,
                    int* eta) {
  RMat g;
  t.g(y, g);
  RMat ginv;
  double det = 0.0;
  if (!r_invert(g, ginv, det) || det == 0.0)
    throw std::runtime_error("singular target metric");
  const int n = t.n;
  e = RMat(n, n);
  auto inner = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += u[i] * ginv(i, j) * v[j];
    return s;
  };
  std::vector<double> u(n);
  for (int a = 0; a < n; ++a) {
    std::fill(u.begin(), u.end(), 0.0);
    u[a] = 1.0;
    for (int b = 0; b < a; ++b) {
      const double* eb = e.data() + std::size_t(b) * n;
      const double c = inner(u.data(), eb) * eta[b];
      for (int i = 0; i < n; ++i) u[i] -= c * eb[i];
    }
    const double nm = inner(u.data(), u.data());
    if (std::abs(nm) < 1e-12)
      throw std::runtime_error("degenerate target metric");
    eta[a] = nm > 0 ? +1 : -1;
    const double inv = 1.0 / std::sqrt(std::abs(nm));
    for (int i = 0; i < n; ++i) e(a, i) = u[i] * inv;
  }
}

void target_christoffels(const TargetGeometry& t, const double* y,
                         double* gamma) {
  const int n = t.n;
  RMat g;
  t.g(y, g);
  RMat ginv;
  double det = 0.0;
  if (!r_invert(g, ginv, det))
    throw std::runtime_error("singular target metric");
  std::vector<double> dg(std::size_t(n) * n * n);
  t.dg(y, dg.data());
  auto d = [&](int k, int i, int j) {
    return dg[(std::size_t(k) * n + i) * n + j];
  };
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += ginv(k, l) * (d(i, j, l) + d(j, i, l) - d(l, i, j));
        gamma[(std::size_t(k) * n + i) * n + j] = 0.5 * s;
      }
}

// ------------------------------------------------------------- sigma maps

SigmaMap build_sigma_map(
    std::shared_ptr<const Geometry> base, TargetGeometry target,
    const std::function<void(const double*, double*)>& map) {
  const ChartGrid& grid = base->grid;
  const int n1 = grid.dim();
  const int n2 = target.n;
  const std::size_t nodes = grid.node_count();

  SigmaMap sm;
  sm.base = base;
  sm.target = std::move(target);
  sm.phi.resize(nodes * n2);
  double x[8];
  for (std::size_t v = 0; v < nodes; ++v) {
    grid.node_coords(v, x);
    map(x, sm.phi.data() + v * n2);
  }

  // d_i phi^mu by FD on each target component
  sm.dphi.assign(nodes * std::size_t(n1) * n2, 0.0);
  RealField comp(nodes);
  for (int mu = 0; mu < n2; ++mu) {
    for (std::size_t v = 0; v < nodes; ++v) comp.v[v] = sm.phi[v * n2 + mu];
    for (int i = 0; i < n1; ++i) {
      RealField d = partial_derivative(grid, comp, i, base->order_op);
      for (std::size_t v = 0; v < nodes; ++v)
        sm.dphi[(v * n1 + i) * n2 + mu] = d.v[v];
    }
  }

  // frame components phi_a^b = e2^b_mu e_a^i d_i phi^mu
  sm.phi_frame.assign(nodes * std::size_t(n1) * n2, 0.0);
  sm.target_eta.assign(n2, 0);
  RMat e2;
  int eta[8] = {0};
  for (std::size_t v = 0; v < nodes; ++v) {
    target_coframe(sm.target, sm.phi.data() + v * n2, e2, eta);
    if (v == 0)
      for (int b = 0; b < n2; ++b) sm.target_eta[b] = eta[b];
    const double* ei = base->frame.einv_at(v);
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        double s = 0.0;
        for (int i = 0; i < n1; ++i)
          for (int mu = 0; mu < n2; ++mu)
            s += e2(b, mu) * ei[std::size_t(i) * n1 + a] *
                 sm.dphi[(v * n1 + i) * n2 + mu];
        sm.phi_frame[(v * n1 + a) * n2 + b] = s;
      }
  }
  return sm;
}

RealField map_energy(const SigmaMap& sm) {
  const int n1 = sm.base->grid.dim();
  const int n2 = sm.target.n;
  const std::size_t nodes = sm.base->grid.node_count();
  RealField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    double s = 0.0;
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        const double c = sm.phi_frame[(v * n1 + a) * n2 + b];
        s += double(sm.base->frame.eta[a]) * double(sm.target_eta[b]) * c * c;
      }
    out.v[v] = s;
  }
  return out;
}

RealField map_energy_coordinates(const SigmaMap& sm) {
  const int n1 = sm.base->grid.dim();
  const int n2 = sm.target.n;
  const std::size_t nodes = sm.base->grid.node_count();
  RealField out(nodes);
  RMat g2;
  for (std::size_t v = 0; v < nodes; ++v) {
    sm.target.g(sm.phi.data() + v * n2, g2);
    const double* gi = sm.base->metric.ginv_at(v);
    double s = 0.0;
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j)
        for (int mu = 0; mu < n2; ++mu)
          for (int nu = 0; nu < n2; ++nu)
            s += gi[std::size_t(i) * n1 + j] * g2(mu, nu) *
                 sm.dphi[(v * n1 + i) * n2 + mu] *
                 sm.dphi[(v * n1 + j) * n2 + nu];
    out.v[v] = s;
  }
  return out;
}

// --------------------------------------------------- composite Dirac models

RatioReport measure_ratio(const RealField& num, const RealField& den,
                          double den_floor) {
  RatioReport r;
  double acc = 0.0;
  for (std::size_t v = 0; v < num.v.size(); ++v) {
    if (std::abs(den.v[v]) < den_floor) continue;
    acc += num.v[v] / den.v[v];
    ++r.used_nodes;
  }
  if (r.used_nodes == 0) {
    r.degenerate = true;
    return r;
  }
  r.ratio = acc / double(r.used_nodes);
  for (std::size_t v = 0; v < num.v.size(); ++v) {
    if (std::abs(den.v[v]) < den_floor) continue;
    r.spread = std::max(r.spread, std::abs(num.v[v] / den.v[v] - r.ratio));
  }
  return r;
}

namespace {

// gamma2 applied to the lowered frame components of phi_a at one node
CMat gamma2_of_flat(const CliffordModule& e2, const std::vector<int>& eta2,
                    const double* comps) {
  CMat g(e2.rank, e2.rank);
  for (int b = 0; b < e2.sig.n(); ++b) {
    const double lowered = double(eta2[b]) * comps[b];
    if (lowered != 0.0) g += lowered * e2.gamma[b];
  }
  return g;
}

// canonical connection coefficients on E' = (E1 (x) E2) (x) Cl:
// spin_E1 (x) Id (x) Id + Id (x) W_i(pullback) (x) Id + Id (x) Id (x) LC_Cl
std::vector<MatrixField> twist_connection_coeffs(
    const Geometry& geom, const CliffordModule& e1, const CliffordModule& e2,
    const SigmaMap* map_for_pullback) {
  const int n1 = geom.grid.dim();
  const int n2 = e2.sig.n();
  const std::size_t nodes = geom.grid.node_count();
  const int d_cl = 1 << n1;
  const int rank = e1.rank * e2.rank * d_cl;

  std::vector<MatrixField> spin1 = spin_coefficient_fields(geom, e1);
  CliffordModule clb = clifford_regular_module(
      geom.metric.sig_p, geom.metric.sig_q, e1.sig.eps);
  std::vector<CMat> pairs_cl = spin_generator_pairs(clb);
  std::vector<CMat> pairs_2 = spin_generator_pairs(e2);

  CMat idc = CMat::identity(d_cl);
  CMat id2 = CMat::identity(e2.rank);
  CMat id1 = CMat::identity(e1.rank);

  const bool pull =
      map_for_pullback && bool(map_for_pullback->target.omega);

  std::vector<MatrixField> out(n1);
  for (int i = 0; i < n1; ++i) out[i] = MatrixField(nodes, rank);

  std::vector<double> om2(std::size_t(n2) * n2 * n2);
  std::vector<double> om_pull(std::size_t(n2) * n2);
  for (std::size_t v = 0; v < nodes; ++v) {
    if (pull)
      map_for_pullback->target.omega(
          map_for_pullback->phi.data() + v * n2, om2.data());
    for (int i = 0; i < n1; ++i) {
      CMat c = kron(kron(spin1[i].get(v), id2), idc);
      CMat ad = spin_matrix_from_omega(
          clb, pairs_cl, geom.omega_at(v) + std::size_t(i) * n1 * n1);
      c += kron(kron(id1, id2), ad);
      if (pull) {
        std::fill(om_pull.begin(), om_pull.end(), 0.0);
        for (int k = 0; k < n2; ++k) {
          const double dmu =
              map_for_pullback->dphi[(v * std::size_t(n1) + i) * n2 + k];
          if (dmu == 0.0) continue;
          for (int a = 0; a < n2; ++a)
            for (int b = 0; b < n2; ++b)
              om_pull[std::size_t(a) * n2 + b] +=
                  om2[(std::size_t(k) * n2 + a) * n2 + b] * dmu;
        }
        CMat w = spin_matrix_from_omega(e2, pairs_2, om_pull.data());
        c += kron(kron(id1, w), idc);
      }
      out[i].set(v, c);
    }
  }
  return out;
}

RealField tau_phi_sq_trace(const CliffordModule& mod, const MatrixField& phi) {
  const std::size_t nodes = phi.nodes();
  RealField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    CMat t = mod.tau * phi.get(v);
    out.v[v] = trace(t * t).real();
  }
  return out;
}

}  // namespace

SigmaModel build_sigma_model(
    std::shared_ptr<const Geometry> base, const CliffordModule& e1,
    TargetGeometry target, const CliffordModule& e2,
    const std::function<void(const double*, double*)>& map) {
  if (e1.sig.n() != base->grid.dim())
    throw std::invalid_argument("base module does not match base grid");
  if (e2.sig.n() != target.n)
    throw std::invalid_argument("target module does not match target");

  SigmaModel sm;
  sm.geom = base;
  sm.E1 = std::make_shared<CliffordModule>(e1);
  sm.E2 = std::make_shared<CliffordModule>(e2);
  sm.E = std::make_shared<CliffordModule>(
      twisted_module(e1, e2.rank, e2.tau, e2.h, "sigma twist"));
  BiModule tw = clifford_twist(*sm.E);
  sm.Etw = std::make_shared<CliffordModule>(std::move(tw.module));
  sm.right_gen = std::move(tw.right_gen);
  sm.map = build_sigma_map(base, std::move(target), map);

  const int n1 = base->grid.dim();
  const int n2 = sm.map.target.n;
  const std::size_t nodes = base->grid.node_count();
  const CliffordAlgebra& alg = algebra(e1.sig);

  // chi_a = Id_{E1} (x) gamma_2(phi_a^flat)
  sm.chi.assign(n1, MatrixField(nodes, sm.E->rank));
  CMat id1 = CMat::identity(e1.rank);
  std::vector<double> comps(n2);
  for (std::size_t v = 0; v < nodes; ++v) {
    for (int a = 0; a < n1; ++a) {
      for (int b = 0; b < n2; ++b)
        comps[b] = sm.map.phi_frame[(v * n1 + a) * n2 + b];
      sm.chi[a].set(
          v, kron(id1, gamma2_of_flat(e2, sm.map.target_eta, comps.data())));
    }
  }

  // phi_D = sum_a chi_a (x) (right multiplication by e^a)
  std::vector<CMat> rcl;
  for (int a = 0; a < n1; ++a)
    rcl.push_back(alg.right_mult_matrix(Multivector::generator(e1.sig, a)));
  sm.phi_d = MatrixField(nodes, sm.Etw->rank);
  for (std::size_t v = 0; v < nodes; ++v) {
    CMat p(sm.Etw->rank, sm.Etw->rank);
    for (int a = 0; a < n1; ++a) p += kron(sm.chi[a].get(v), rcl[a]);
    sm.phi_d.set(v, p);
  }

  sm.conn = make_connection(
      base, sm.Etw, twist_connection_coeffs(*base, e1, e2, &sm.map));
  sm.dirac = build_simple_type(sm.conn, sm.phi_d);
  return sm;
}

RealField sigma_phi_norm_sq(const SigmaModel& sm) {
  const int n1 = sm.geom->grid.dim();
  const std::size_t nodes = sm.geom->grid.node_count();
  const double eps1 = sm.E1->sig.eps;
  RealField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    cplx s = 0.0;
    for (int a = 0; a < n1; ++a) {
      CMat c = sm.chi[a].get(v);
      s += double(sm.geom->frame.eta[a]) * trace(sm.E->h_adjoint(c) * c);
    }
    out.v[v] = eps1 * s.real();
  }
  return out;
}

RealField sigma_action_density(const SigmaModel& sm) {
  return tau_phi_sq_trace(*sm.Etw, sm.phi_d);
}

SigmaNormReport sigma_norm_check(const SigmaModel& sm) {
  SigmaNormReport rep;
  RealField energy = map_energy(sm.map);
  rep.norm_ratio = measure_ratio(sigma_phi_norm_sq(sm), energy);
  rep.action_ratio = measure_ratio(sigma_action_density(sm), energy);
  const double e12 = double(sm.E1->sig.eps) * double(sm.E2->sig.eps);
  rep.candidate_sum = e12 * (sm.E1->rank + sm.E2->rank);
  rep.candidate_product = e12 * sm.E1->rank * sm.E2->rank;
  return rep;
}

namespace {

ActionBreakdown action_breakdown(const DiracOperator& d,
                                 const RealField& potential_density,
                                 const SectionField* psi) {
  ActionBreakdown out;
  Decomposition dec = decompose(d);
  out.pipeline = universal_dirac_action(d, dec);
  RealField scal =
      scalar_curvature(d.geom->grid, d.geom->metric, d.geom->order_metric);
  out.eh_term = -0.25 * d.module->sig.eps * d.rank() *
                integrate(d.geom->grid, d.geom->metric, scal);
  out.potential_term =
      integrate(d.geom->grid, d.geom->metric, potential_density);
  if (psi) {
    SectionField Dpsi = d.apply(*psi);
    out.fermion_term =
        integrate(d.geom->grid, d.geom->metric,
                  fiber_inner_density(*d.geom, *d.module, *psi, Dpsi));
  }
  out.total_formula = out.eh_term + out.potential_term + out.fermion_term;
  return out;
}

}  // namespace

ActionBreakdown dirac_harmonic_action(const SigmaModel& sm,
                                      const SectionField& psi) {
  return action_breakdown(sm.dirac, sigma_action_density(sm), &psi);
}

EmbeddingCheck embedded_fermion_check(const SigmaModel& sm,
                                      const SectionField& z) {
  const std::size_t nodes = sm.geom->grid.node_count();
  const int d_cl = 1 << sm.geom->grid.dim();
  EmbeddingCheck out;

  // psi = z (x) 1 on the twist
  SectionField psi(nodes, sm.Etw->rank);
  for (std::size_t v = 0; v < nodes; ++v)
    for (int i = 0; i < sm.E->rank; ++i)
      psi.at(v)[i * d_cl + 0] = z.at(v)[i];
  SectionField Dpsi = sm.dirac.apply(psi);
  out.on_twist = integrate(sm.geom->grid, sm.geom->metric,
                           fiber_inner_density(*sm.geom, *sm.Etw, psi, Dpsi));

  // quantized Clifford connection on E itself (flat-target scenarios)
  std::vector<MatrixField> spin1 = spin_coefficient_fields(*sm.geom, *sm.E1);
  std::vector<MatrixField> coeff(sm.geom->grid.dim());
  CMat id2 = CMat::identity(sm.E2->rank);
  for (int i = 0; i < sm.geom->grid.dim(); ++i) {
    coeff[i] = MatrixField(nodes, sm.E->rank);
    for (std::size_t v = 0; v < nodes; ++v)
      coeff[i].set(v, kron(spin1[i].get(v), id2));
  }
  DiracOperator de =
      quantize_connection(make_connection(sm.geom, sm.E, std::move(coeff)));
  SectionField Dz = de.apply(z);
  out.on_base = integrate(sm.geom->grid, sm.geom->metric,
                          fiber_inner_density(*sm.geom, *sm.E, z, Dz));
  return out;
}

// ---------------------------------------------------------------- geodesics

double geodesic_energy(const Path& path, const TargetGeometry& g2) {
  const int K = int(path.size());
  if (K < 3) throw std::invalid_argument("path needs at least 3 nodes");
  const int n = g2.n;
  const double dt = 1.0 / (K - 1);
  std::vector<double> mid(n), vel(n);
  RMat g;
  std::vector<double> terms(K - 1);
  for (int k = 0; k + 1 < K; ++k) {
    for (int i = 0; i < n; ++i) {
      mid[i] = 0.5 * (path[k][i] + path[k + 1][i]);
      vel[i] = (path[k + 1][i] - path[k][i]) / dt;
    }
    g2.g(mid.data(), g);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += g(i, j) * vel[i] * vel[j];
    terms[k] = s * dt;
  }
  return pairwise_sum(terms.data(), terms.size());
}

namespace {

// gradient of the midpoint-rule energy wrt node positions, endpoints pinned
void geodesic_gradient(const Path& path, const TargetGeometry& g2,
                       std::vector<double>& grad) {
  const int K = int(path.size());
  const int n = g2.n;
  const double dt = 1.0 / (K - 1);
  grad.assign(std::size_t(K) * n, 0.0);
  std::vector<double> mid(n), vel(n), dg(std::size_t(n) * n * n);
  RMat g;
  for (int k = 0; k + 1 < K; ++k) {
    for (int i = 0; i < n; ++i) {
      mid[i] = 0.5 * (path[k][i] + path[k + 1][i]);
      vel[i] = (path[k + 1][i] - path[k][i]) / dt;
    }
    g2.g(mid.data(), g);
    g2.dg(mid.data(), dg.data());
    for (int a = 0; a < n; ++a) {
      double lin = 0.0;
      for (int j = 0; j < n; ++j) lin += g(a, j) * vel[j];
      double quad = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          quad += dg[(std::size_t(a) * n + i) * n + j] * vel[i] * vel[j];
      grad[std::size_t(k) * n + a] += -2.0 * lin + 0.5 * quad * dt;
      grad[std::size_t(k + 1) * n + a] += 2.0 * lin + 0.5 * quad * dt;
    }
  }
  for (int a = 0; a < n; ++a) {
    grad[a] = 0.0;
    grad[std::size_t(K - 1) * n + a] = 0.0;
  }
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// The energy Hessian is dominated by (2/dt) tridiag(-1,2,-1) per component;
// using it as a preconditioner turns the O(K^2)-conditioned descent into a
// near-Newton iteration. Thomas solve on the interior nodes.
void precondition(const std::vector<double>& grad, int K, int n, double dt,
                  std::vector<double>& dir) {
  dir.assign(grad.size(), 0.0);
  const int m = K - 2;
  if (m <= 0) return;
  const double diag = 4.0 / dt, off = -2.0 / dt;
  std::vector<double> c(m), d(m);
  for (int comp = 0; comp < n; ++comp) {
    c[0] = off / diag;
    d[0] = grad[std::size_t(1) * n + comp] / diag;
    for (int k = 1; k < m; ++k) {
      const double denom = diag - off * c[k - 1];
      c[k] = off / denom;
      d[k] = (grad[std::size_t(k + 1) * n + comp] - off * d[k - 1]) / denom;
    }
    dir[std::size_t(m) * n + comp] = d[m - 1];
    for (int k = m - 2; k >= 0; --k)
      dir[std::size_t(k + 1) * n + comp] =
          d[k] - c[k] * dir[std::size_t(k + 2) * n + comp];
  }
}

}  // namespace

GeodesicResult geodesic_minimize(const std::vector<double>& a,
                                 const std::vector<double>& b, int nodes,
                                 const TargetGeometry& g2, const Path* init,
                                 int max_iterations, double grad_tol) {
  const int n = g2.n;
  const int K = nodes;
  if (K < 3) throw std::invalid_argument("need at least 3 path nodes");
  GeodesicResult res;
  res.path.assign(K, std::vector<double>(n));
  if (init) {
    res.path = *init;
  } else {
    for (int k = 0; k < K; ++k) {
      const double t = double(k) / (K - 1);
      for (int i = 0; i < n; ++i)
        res.path[k][i] = (1.0 - t) * a[i] + t * b[i];
    }
  }

  double energy = geodesic_energy(res.path, g2);
  std::vector<double> grad;
  geodesic_gradient(res.path, g2, grad);

  auto flatten = [&](const Path& p) {
    std::vector<double> x(std::size_t(K) * n);
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < n; ++i) x[std::size_t(k) * n + i] = p[k][i];
    return x;
  };
  auto unflatten = [&](const std::vector<double>& x, Path& p) {
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < n; ++i) p[k][i] = x[std::size_t(k) * n + i];
  };

  std::vector<double> x = flatten(res.path);
  std::vector<double> dir;
  const double dt = 1.0 / (K - 1);
  Path trial = res.path;

  int it = 0;
  for (; it < max_iterations; ++it) {
    const double gn = sup_norm(grad);
    if (gn < grad_tol) {
      res.converged = true;
      break;
    }
    precondition(grad, K, n, dt, dir);
    double gd = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) gd += grad[i] * dir[i];
    if (gd <= 0.0) break;  // not a descent direction (rounding floor)

    // Armijo backtracking from the near-Newton unit step
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      std::vector<double> xt(x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        xt[i] = x[i] - alpha * dir[i];
      unflatten(xt, trial);
      const double et = geodesic_energy(trial, g2);
      if (et <= energy - 1e-4 * alpha * gd) {
        x = std::move(xt);
        energy = et;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // line search exhausted at rounding level
    unflatten(x, res.path);
    geodesic_gradient(res.path, g2, grad);
  }

  res.energy = energy;
  res.iterations = it;
  res.grad_norm = sup_norm(grad);

  // near-antipodal endpoints on a sphere: minimizers come in a family
  if (g2.name == "sphere") {
    auto embed = [](const std::vector<double>& y, double* u) {
      u[0] = std::sin(y[0]) * std::cos(y[1]);
      u[1] = std::sin(y[0]) * std::sin(y[1]);
      u[2] = std::cos(y[0]);
    };
    double ua[3], ub[3];
    embed(a, ua);
    embed(b, ub);
    const double dot = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
    const double dist = std::acos(std::clamp(dot, -1.0, 1.0));
    res.degenerate_family = dist > M_PI - 0.35;
  }
  return res;
}

// ------------------------------------------------------------- study demo

StudyDemoReport study_dirac_demo(
    int grid_nodes, const TargetGeometry& target,
    const std::function<void(double, double*)>& curve) {
  auto geom = std::make_shared<Geometry>(build_geometry(
      box_grid({0.0}, {1.0}, {grid_nodes}), flat_metric(1), 2, 2));
  CliffordModule e1 = study_module(+1);
  CliffordModule e2 = clifford_regular_module(target.n, 0, +1);

  auto map = [&curve](const double* x, double* y) { curve(x[0], y); };
  SigmaModel sm = build_sigma_model(geom, e1, target, e2, map);

  StudyDemoReport rep;
  const std::size_t nodes = geom->grid.node_count();
  const int d2 = e2.rank;
  const int n2 = target.n;

  // the operator on E = ^2R (x) phi^* Lambda acts block-wise as
  // (alpha, beta) |-> (alpha' + Gamma alpha, -(beta' + Gamma beta))
  std::vector<MatrixField> coeff(1);
  coeff[0] = MatrixField(nodes, 2 * d2);
  {
    std::vector<CMat> pairs2 = spin_generator_pairs(e2);
    std::vector<double> om2(std::size_t(n2) * n2 * n2, 0.0);
    std::vector<double> om_pull(std::size_t(n2) * n2);
    for (std::size_t v = 0; v < nodes; ++v) {
      CMat W(d2, d2);
      if (sm.map.target.omega) {
        sm.map.target.omega(sm.map.phi.data() + v * n2, om2.data());
        std::fill(om_pull.begin(), om_pull.end(), 0.0);
        for (int k = 0; k < n2; ++k) {
          const double dmu = sm.map.dphi[v * n2 + k];
          for (int a2 = 0; a2 < n2; ++a2)
            for (int b2 = 0; b2 < n2; ++b2)
              om_pull[std::size_t(a2) * n2 + b2] +=
                  om2[(std::size_t(k) * n2 + a2) * n2 + b2] * dmu;
        }
        W = spin_matrix_from_omega(e2, pairs2, om_pull.data());
      }
      coeff[0].set(v, kron(CMat::identity(2), W));
    }
  }
  DiracOperator de = quantize_connection(make_connection(geom, sm.E, coeff));

  Rng rng(2024);
  SectionField psi = random_smooth_section(*geom, 2 * d2, rng);
  SectionField Dpsi = de.apply(psi);

  // hand route: derivative plus pullback coefficients, signs per block
  SectionField dpsi = partial_derivative(geom->grid, psi, 0, geom->order_op);
  field_matvec_acc(coeff[0], psi, dpsi);
  double worst = 0.0, flip = 0.0;
  for (std::size_t v = 0; v < nodes; ++v)
    for (int j = 0; j < d2; ++j) {
      worst = std::max(worst, std::abs(Dpsi.at(v)[j] - dpsi.at(v)[j]));
      flip =
          std::max(flip, std::abs(Dpsi.at(v)[d2 + j] + dpsi.at(v)[d2 + j]));
    }
  rep.dirac_vs_fd = worst;
  rep.fermion_flip = flip;

  Decomposition dec = decompose(sm.dirac);
  rep.universal_action = universal_dirac_action(sm.dirac, dec);
  rep.geodesic_energy =
      integrate(geom->grid, geom->metric, map_energy(sm.map));
  rep.action_ratio = rep.geodesic_energy != 0.0
                         ? rep.universal_action.real() / rep.geodesic_energy
                         : 0.0;
  return rep;
}

// --------------------------------------------------------------- Yang-Mills

GaugeCurvature constant_abelian_curvature(const Geometry& g, int rank,
                                          const RMat& f) {
  const int n = g.grid.dim();
  GaugeCurvature F;
  F.n = n;
  F.comp.assign(std::size_t(n) * n, MatrixField(g.grid.node_count(), rank));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      CMat m = cplx(0.0, f(a, b)) * CMat::identity(rank);
      for (std::size_t v = 0; v < g.grid.node_count(); ++v)
        F.comp[std::size_t(a) * n + b].set(v, m);
    }
  return F;
}

void validate_curvature(const GaugeCurvature& F, const CliffordModule& on) {
  const int n = F.n;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const MatrixField& fab = F.at(a, b);
      const MatrixField& fba = F.at(b, a);
      for (std::size_t v = 0; v < fab.nodes(); ++v) {
        CMat sym = fab.get(v) + fba.get(v);
        if (max_abs(sym) > 1e-12)
          throw std::invalid_argument(
              "curvature has a symmetric part at node " + std::to_string(v));
        CommutantResult r = commutant_test(on, fab.get(v));
        if (!r.commutes)
          throw std::invalid_argument(
              "curvature is not commutant-valued at node " +
              std::to_string(v));
      }
    }
}

YmModel build_ym_model(std::shared_ptr<const Geometry> geom,
                       const CliffordModule& e1, const CliffordModule& e2,
                       const GaugeCurvature* F1, const GaugeCurvature* F2) {
  if (e1.sig.p != e2.sig.p || e1.sig.q != e2.sig.q)
    throw std::invalid_argument("both factors live over the same base");
  if (F1) validate_curvature(*F1, e1);
  if (F2) validate_curvature(*F2, e2);

  YmModel ym;
  ym.geom = geom;
  ym.E1 = std::make_shared<CliffordModule>(e1);
  ym.E2 = std::make_shared<CliffordModule>(e2);
  ym.E = std::make_shared<CliffordModule>(
      twisted_module(e1, e2.rank, e2.tau, e2.h, "ym twist"));
  BiModule tw = clifford_twist(*ym.E);
  ym.Etw = std::make_shared<CliffordModule>(std::move(tw.module));

  const int n = geom->grid.dim();
  const std::size_t nodes = geom->grid.node_count();
  const CliffordAlgebra& alg = algebra(e1.sig);
  CMat id1 = CMat::identity(e1.rank);

  // F lifted to E and chi_a = sum_b (F1_ab (x) gamma2^b + Id (x) F2_ab gamma2^b)
  ym.F_on_E.assign(std::size_t(n) * n, MatrixField(nodes, ym.E->rank));
  ym.chi.assign(n, MatrixField(nodes, ym.E->rank));
  CMat id2 = CMat::identity(e2.rank);
  for (std::size_t v = 0; v < nodes; ++v) {
    for (int a = 0; a < n; ++a) {
      CMat chi(ym.E->rank, ym.E->rank);
      for (int b = 0; b < n; ++b) {
        CMat onE(ym.E->rank, ym.E->rank);
        if (F1) onE += kron(F1->at(a, b).get(v), id2);
        if (F2) onE += kron(id1, F2->at(a, b).get(v));
        ym.F_on_E[std::size_t(a) * n + b].set(v, onE);
        if (F1) chi += kron(F1->at(a, b).get(v), e2.gamma[b]);
        if (F2) chi += kron(id1, F2->at(a, b).get(v) * e2.gamma[b]);
      }
      ym.chi[a].set(v, chi);
    }
  }

  std::vector<CMat> rcl;
  for (int a = 0; a < n; ++a)
    rcl.push_back(alg.right_mult_matrix(Multivector::generator(e1.sig, a)));
  ym.phi_d = MatrixField(nodes, ym.Etw->rank);
  for (std::size_t v = 0; v < nodes; ++v) {
    CMat p(ym.Etw->rank, ym.Etw->rank);
    for (int a = 0; a < n; ++a) p += kron(ym.chi[a].get(v), rcl[a]);
    ym.phi_d.set(v, p);
  }

  ym.conn = make_connection(
      geom, ym.Etw, twist_connection_coeffs(*geom, e1, e2, nullptr));
  ym.dirac = build_simple_type(ym.conn, ym.phi_d);
  return ym;
}

RealField ym_curvature_norm_sq(const YmModel& ym) {
  const int n = ym.geom->grid.dim();
  const std::size_t nodes = ym.geom->grid.node_count();
  RealField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    cplx s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        CMat fab = ym.F_on_E[std::size_t(a) * n + b].get(v);
        const double raise =
            double(ym.geom->frame.eta[a]) * double(ym.geom->frame.eta[b]);
        s -= raise * trace(fab * fab);
      }
    out.v[v] = s.real();
  }
  return out;
}

RealField ym_phi_norm_sq(const YmModel& ym) {
  const int n = ym.geom->grid.dim();
  const std::size_t nodes = ym.geom->grid.node_count();
  const double eps1 = ym.E1->sig.eps;
  RealField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    cplx s = 0.0;
    for (int a = 0; a < n; ++a) {
      CMat c = ym.chi[a].get(v);
      s += double(ym.geom->frame.eta[a]) * trace(ym.E->h_adjoint(c) * c);
    }
    out.v[v] = eps1 * s.real();
  }
  return out;
}

RealField ym_action_density(const YmModel& ym) {
  return tau_phi_sq_trace(*ym.Etw, ym.phi_d);
}

YmNormReport ym_norm_check(const YmModel& ym) {
  YmNormReport rep;
  RealField fn = ym_curvature_norm_sq(ym);
  rep.norm_ratio = measure_ratio(ym_phi_norm_sq(ym), fn);
  rep.action_ratio = measure_ratio(ym_action_density(ym), fn);
  rep.candidate = double(ym.E1->sig.eps) * double(ym.E2->sig.eps);
  rep.candidate_action =
      double(1 << ym.geom->grid.dim()) * rep.candidate;
  return rep;
}

YmActionReport ym_action(const YmModel& ym) {
  YmActionReport rep;
  ActionBreakdown ab =
      action_breakdown(ym.dirac, ym_action_density(ym), nullptr);
  rep.pipeline = ab.pipeline;
  rep.eh_term = ab.eh_term;
  rep.ym_term = ab.potential_term;
  rep.f_norm_int =
      integrate(ym.geom->grid, ym.geom->metric, ym_curvature_norm_sq(ym));
  rep.total_formula = ab.total_formula;
  return rep;
}

// ------------------------------------------------- combined (DHYM) field

DhymModel build_dhym_model(
    std::shared_ptr<const Geometry> geom, int w_rank, const CMat& w_tau,
    const CMat& w_h, const GaugeCurvature& Fw, TargetGeometry target,
    const CliffordModule& e2,
    const std::function<void(const double*, double*)>& map) {
  const int n1 = geom->grid.dim();
  const std::size_t nodes = geom->grid.node_count();

  DhymModel m;
  m.geom = geom;
  CliffordModule S =
      spinor_module(geom->metric.sig_p, geom->metric.sig_q, +1);
  CliffordModule clb =
      clifford_regular_module(geom->metric.sig_p, geom->metric.sig_q, +1);
  m.rank_s = S.rank;
  m.rank_cl = clb.rank;
  m.rank_w = w_rank;
  m.rank_e2 = e2.rank;

  // E1 = S (x) Cl (x) W, E = E1 (x) phi^* E2, then the Clifford twist
  CliffordModule E1 = twisted_module(
      S, clb.rank * w_rank, kron(clb.tau, w_tau), kron(clb.h, w_h), "S Cl W");
  CliffordModule E = twisted_module(E1, e2.rank, e2.tau, e2.h, "dhym base");
  BiModule tw = clifford_twist(E);
  m.Etw = std::make_shared<CliffordModule>(std::move(tw.module));
  m.map = build_sigma_map(geom, std::move(target), map);

  const int n2 = m.map.target.n;
  const CliffordAlgebra& alg = algebra(S.sig);
  std::vector<CMat> rcl, lcl;
  for (int a = 0; a < n1; ++a) {
    rcl.push_back(alg.right_mult_matrix(Multivector::generator(S.sig, a)));
    lcl.push_back(alg.left_mult_matrix(Multivector::generator(S.sig, a)));
  }

  CMat id_s = CMat::identity(S.rank);
  CMat id_cl = CMat::identity(clb.rank);
  CMat id_w = CMat::identity(w_rank);
  CMat id_2 = CMat::identity(e2.rank);
  CMat id_scw = CMat::identity(S.rank * clb.rank * w_rank);

  m.phi1 = MatrixField(nodes, m.Etw->rank);
  m.phi2 = MatrixField(nodes, m.Etw->rank);
  m.phi_d = MatrixField(nodes, m.Etw->rank);
  std::vector<double> comps(n2);
  for (std::size_t v = 0; v < nodes; ++v) {
    // phi1 = sum_b Id_{S Cl W} (x) gamma2(phi_b^flat) (x) e^b (right)
    CMat p1(m.Etw->rank, m.Etw->rank);
    for (int b = 0; b < n1; ++b) {
      for (int c = 0; c < n2; ++c)
        comps[c] = m.map.phi_frame[(v * n1 + b) * n2 + c];
      CMat g2 = gamma2_of_flat(e2, m.map.target_eta, comps.data());
      p1 += kron(kron(id_scw, g2), rcl[b]);
    }
    // phi2 = sum_ab Id_S (x) gammaCl(e^a) (x) F^W_ab (x) Id_E2 (x) e^b
    CMat p2(m.Etw->rank, m.Etw->rank);
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n1; ++b) {
        CMat f = Fw.at(a, b).get(v);
        if (max_abs(f) == 0.0) continue;
        p2 += kron(kron(kron(id_s, kron(lcl[a], f)), id_2), rcl[b]);
      }
    m.phi1.set(v, p1);
    m.phi2.set(v, p2);
    m.phi_d.set(v, p1 + p2);
  }

  // canonical connection; all pieces vanish on a flat base
  std::vector<MatrixField> spinS = spin_coefficient_fields(*geom, S);
  std::vector<CMat> pairs_cl = spin_generator_pairs(clb);
  std::vector<MatrixField> coeff(n1);
  for (int i = 0; i < n1; ++i) {
    coeff[i] = MatrixField(nodes, m.Etw->rank);
    for (std::size_t v = 0; v < nodes; ++v) {
      CMat ad = spin_matrix_from_omega(
          clb, pairs_cl, geom->omega_at(v) + std::size_t(i) * n1 * n1);
      CMat c =
          kron(kron(kron(spinS[i].get(v), kron(id_cl, id_w)), id_2), id_cl) +
          kron(kron(kron(id_s, kron(ad, id_w)), id_2), id_cl) +
          kron(kron(id_scw, id_2), ad);
      coeff[i].set(v, c);
    }
  }
  m.conn = make_connection(geom, m.Etw, std::move(coeff));
  m.dirac = build_simple_type(m.conn, m.phi_d);
  return m;
}

DhymReport dhym_split_check(const DhymModel& m) {
  DhymReport rep;
  const std::size_t nodes = m.geom->grid.node_count();
  RealField d1(nodes), d2(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    CMat p1 = m.phi1.get(v);
    CMat p2 = m.phi2.get(v);
    rep.cross_trace =
        std::max(rep.cross_trace, std::abs(trace(p1 * p2) + trace(p2 * p1)));
    const cplx t1 = trace(p1 * p1), t2 = trace(p2 * p2);
    CMat pd = p1 + p2;
    rep.split_residual =
        std::max(rep.split_residual, std::abs(trace(pd * pd) - t1 - t2));
    CMat tp1 = m.Etw->tau * p1;
    CMat tp2 = m.Etw->tau * p2;
    d1.v[v] = trace(tp1 * tp1).real();
    d2.v[v] = trace(tp2 * tp2).real();
  }
  ActionBreakdown ab =
      action_breakdown(m.dirac, tau_phi_sq_trace(*m.Etw, m.phi_d), nullptr);
  rep.pipeline = ab.pipeline;
  rep.eh_term = ab.eh_term;
  rep.sigma_term = integrate(m.geom->grid, m.geom->metric, d1);
  rep.ym_term = integrate(m.geom->grid, m.geom->metric, d2);
  rep.total_formula = rep.eh_term + rep.sigma_term + rep.ym_term;
  return rep;
}

// -------------------------------------------------------------- Higgs

HiggsReport higgs_metric(const HiggsBundle& hb, const Geometry& g1,
                         Rng& rng) {
  const ChartGrid& grid = g1.grid;
  const int n1 = grid.dim();
  const int mf = hb.m;
  const std::size_t nodes = grid.node_count();

  std::vector<RealField> dphi(std::size_t(n1) * mf);
  {
    RealField comp(nodes);
    for (int al = 0; al < mf; ++al) {
      for (std::size_t v = 0; v < nodes; ++v)
        comp.v[v] = hb.phi[v * mf + al];
      for (int i = 0; i < n1; ++i)
        dphi[std::size_t(i) * mf + al] =
            partial_derivative(grid, comp, i, g1.order_op);
    }
  }
  auto nabla = [&](std::size_t v, int i, int al) {
    double s = dphi[std::size_t(i) * mf + al].v[v];
    const double* A = hb.A[i].data() + v * mf * mf;
    for (int be = 0; be < mf; ++be)
      s += A[std::size_t(al) * mf + be] * hb.phi[v * mf + be];
    return s;
  };
  const RMat& M = hb.fiber_metric;

  HiggsReport rep;
  rep.grad_norm_sq = RealField(nodes);
  RealField dphi_norm(nodes);

  for (std::size_t v = 0; v < nodes; ++v) {
    const double* gi = g1.metric.ginv_at(v);
    const double* gm = g1.metric.g_at(v);
    const double* w = hb.phi.data() + v * mf;

    // total-space metric blocks at (t, phi(t)) from the connection split:
    // G_ij = g1_ij + <A_i w, A_j w>, G_{i,alpha} = <A_i w, .>, G_fiber = M
    std::vector<double> Aw(std::size_t(n1) * mf);
    for (int i = 0; i < n1; ++i)
      for (int al = 0; al < mf; ++al) {
        double s = 0.0;
        const double* A = hb.A[i].data() + v * mf * mf;
        for (int be = 0; be < mf; ++be)
          s += A[std::size_t(al) * mf + be] * w[be];
        Aw[std::size_t(i) * mf + al] = s;
      }
    const int nt = n1 + mf;
    RMat G(nt, nt);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j) {
        double s = gm[std::size_t(i) * n1 + j];
        for (int al = 0; al < mf; ++al)
          for (int be = 0; be < mf; ++be)
            s += Aw[std::size_t(i) * mf + al] * M(al, be) *
                 Aw[std::size_t(j) * mf + be];
        G(i, j) = s;
      }
    for (int i = 0; i < n1; ++i)
      for (int al = 0; al < mf; ++al) {
        double s = 0.0;
        for (int be = 0; be < mf; ++be)
          s += Aw[std::size_t(i) * mf + be] * M(be, al);
        G(i, n1 + al) = G(n1 + al, i) = s;
      }
    for (int al = 0; al < mf; ++al)
      for (int be = 0; be < mf; ++be) G(n1 + al, n1 + be) = M(al, be);

    // random tangent probes
    for (int probe = 0; probe < 3; ++probe) {
      std::vector<double> vv(n1), lift(nt, 0.0);
      for (int i = 0; i < n1; ++i) vv[i] = rng.sym();
      for (int i = 0; i < n1; ++i) lift[i] = vv[i];
      for (int al = 0; al < mf; ++al) {
        double s = 0.0;
        for (int i = 0; i < n1; ++i)
          s += vv[i] * dphi[std::size_t(i) * mf + al].v[v];
        lift[n1 + al] = s;
      }
      double q = 0.0;
      for (int a = 0; a < nt; ++a)
        for (int b = 0; b < nt; ++b) q += lift[a] * G(a, b) * lift[b];
      double nab = 0.0;
      for (int al = 0; al < mf; ++al)
        for (int be = 0; be < mf; ++be) {
          double na = 0.0, nb = 0.0;
          for (int i = 0; i < n1; ++i) {
            na += vv[i] * nabla(v, i, al);
            nb += vv[i] * nabla(v, i, be);
          }
          nab += na * M(al, be) * nb;
        }
      double g1vv = 0.0;
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n1; ++j)
          g1vv += vv[i] * gm[std::size_t(i) * n1 + j] * vv[j];
      rep.vector_identity =
          std::max(rep.vector_identity, std::abs(q - nab - g1vv));
    }

    // |dphi|^2 = g1^{ij} g2(dphi_i, dphi_j) against |nabla phi|^2 + dim M1
    double total = 0.0, grad = 0.0;
    std::vector<double> li(nt, 0.0), lj(nt, 0.0);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j) {
        std::fill(li.begin(), li.end(), 0.0);
        std::fill(lj.begin(), lj.end(), 0.0);
        li[i] = 1.0;
        lj[j] = 1.0;
        for (int al = 0; al < mf; ++al) {
          li[n1 + al] = dphi[std::size_t(i) * mf + al].v[v];
          lj[n1 + al] = dphi[std::size_t(j) * mf + al].v[v];
        }
        double q = 0.0;
        for (int a = 0; a < nt; ++a)
          for (int b = 0; b < nt; ++b) q += li[a] * G(a, b) * lj[b];
        total += gi[std::size_t(i) * n1 + j] * q;
        double nij = 0.0;
        for (int al = 0; al < mf; ++al)
          for (int be = 0; be < mf; ++be)
            nij += nabla(v, i, al) * M(al, be) * nabla(v, j, be);
        grad += gi[std::size_t(i) * n1 + j] * nij;
      }
    dphi_norm.v[v] = total;
    rep.grad_norm_sq.v[v] = grad;
    rep.scalar_identity =
        std::max(rep.scalar_identity, std::abs(total - grad - n1));
  }

  double lam = 0.0;
  for (std::size_t v = 0; v < nodes; ++v)
    lam += dphi_norm.v[v] - rep.grad_norm_sq.v[v];
  rep.lambda = lam / double(nodes);
  return rep;
}

double ehc_action(const Geometry& g, double lambda) {
  RealField scal = scalar_curvature(g.grid, g.metric, g.order_metric);
  for (auto& x : scal.v) x += lambda;
  return integrate(g.grid, g.metric, scal);
}

GaugeHiggsTerms gauge_higgs_report(const std::shared_ptr<const Geometry>& g,
                                   const CliffordModule& spinor,
                                   const std::vector<double>& wavenumbers,
                                   const std::vector<double>& phi_wavenumbers,
                                   const cplx& phi0, double flux,
                                   double lambda, Rng& rng) {
  const ChartGrid& grid = g->grid;
  const int n = grid.dim();
  const std::size_t nodes = grid.node_count();

  // W = complex line with potential a_i = -i k_i, so phi = phi0 exp(i k.x)
  // is covariantly constant
  std::vector<MatrixField> A(n);
  for (int i = 0; i < n; ++i) {
    A[i] = MatrixField(nodes, spinor.rank);
    CMat a = cplx(0.0, -wavenumbers[i]) * CMat::identity(spinor.rank);
    for (std::size_t v = 0; v < nodes; ++v) A[i].set(v, a);
  }
  auto mod = std::make_shared<CliffordModule>(spinor);
  DiracOperator dw = quantize_connection(build_clifford_connection(g, mod, A));

  GaugeHiggsTerms out;
  SectionField psi = random_smooth_section(*g, spinor.rank, rng);
  SectionField Dpsi = dw.apply(psi);
  ScalarField fermion_density = fiber_inner_density(*g, spinor, psi, Dpsi);
  out.fermion = integrate(grid, g->metric, fermion_density);

  ScalarField phi(nodes);
  double x[8];
  for (std::size_t v = 0; v < nodes; ++v) {
    grid.node_coords(v, x);
    double kx = 0.0;
    for (int i = 0; i < n; ++i) kx += phi_wavenumbers[i] * x[i];
    phi.v[v] = phi0 * std::exp(cplx(0.0, kx));
  }
  RealField grad_sq(nodes);
  std::vector<ScalarField> dphi(n);
  for (int i = 0; i < n; ++i)
    dphi[i] = partial_derivative(grid, phi, i, g->order_op);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* gi = g->metric.ginv_at(v);
    cplx s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const cplx ni = dphi[i].v[v] + cplx(0.0, -wavenumbers[i]) * phi.v[v];
        const cplx nj = dphi[j].v[v] + cplx(0.0, -wavenumbers[j]) * phi.v[v];
        s += gi[std::size_t(i) * n + j] * std::conj(ni) * nj;
      }
    grad_sq.v[v] = s.real();
  }
  out.higgs = integrate(grid, g->metric, grad_sq);

  // |F^W|^2 for the constant abelian flux datum
  RealField fsq(nodes);
  for (std::size_t v = 0; v < nodes; ++v) fsq.v[v] = 2.0 * flux * flux;
  out.ym = integrate(grid, g->metric, fsq);

  RealField scal = scalar_curvature(grid, g->metric, g->order_metric);
  RealField ehc(nodes);
  const double eps1 = spinor.sig.eps;
  for (std::size_t v = 0; v < nodes; ++v)
    ehc.v[v] = -eps1 * scal.v[v] + lambda;
  out.ehc = integrate(grid, g->metric, ehc);

  out.sum = out.fermion + out.higgs + out.ym + out.ehc;
  ScalarField joint(nodes);
  for (std::size_t v = 0; v < nodes; ++v)
    joint.v[v] = fermion_density.v[v] + grad_sq.v[v] + fsq.v[v] + ehc.v[v];
  out.joint = integrate(grid, g->metric, joint);
  return out;
}

}  // namespace df
