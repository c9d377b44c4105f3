#include "diracforge/dirac.hpp"

#include <cmath>
#include <stdexcept>

#include "diracforge/kernels.hpp"

namespace df {

// K_ab pair matrices for the spin lift, a < b
std::vector<CMat> spin_generator_pairs(const CliffordModule& m) {
  const int n = m.sig.n();
  std::vector<CMat> out;
  if (m.kind == ModuleKind::Matrix) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        out.push_back(m.gamma[a] * m.gamma[b]);
  } else {
    // Levi-Civita derivation on the blade fiber: ad of the 2-blade
    const CliffordAlgebra& alg = algebra(m.sig);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        Multivector blade =
            Multivector::blade(m.sig, (1u << a) | (1u << b));
        out.push_back(alg.left_mult_matrix(blade) -
                      alg.right_mult_matrix(blade));
      }
  }
  return out;
}

CMat spin_matrix_from_omega(const CliffordModule& m,
                            const std::vector<CMat>& pairs,
                            const double* omega_ab) {
  const int n = m.sig.n();
  CMat S(m.rank, m.rank);
  int idx = 0;
  const double half_eps = 0.5 * m.sig.eps;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b, ++idx) {
      const double w = omega_ab[std::size_t(a) * n + b];
      if (w != 0.0) S += (half_eps * w) * pairs[idx];
    }
  return S;
}

namespace {

SectionField field_matvec(const MatrixField& M, const SectionField& x) {
  SectionField y(M.nodes(), x.rank);
  field_matvec_acc(M, x, y);
  return y;
}

}  // namespace

void field_matvec_acc(const MatrixField& M, const SectionField& x,
                      SectionField& y) {
  const std::size_t nodes = M.nodes();
  const int N = M.rank;
  parallel_nodes(nodes, [&](std::size_t a, std::size_t b) {
    kernels::active().mv_field_acc(y.v.data() + a * N,
                                   M.v.data() + a * std::size_t(N) * N,
                                   x.v.data() + a * N, b - a, N);
  });
}

void const_matvec_acc(const CMat& M, const SectionField& x, SectionField& y) {
  const int N = M.rows();
  const std::size_t nodes = x.v.size() / N;
  // column-major copy for the kernel
  std::vector<cplx> mc(std::size_t(N) * N);
  for (int c = 0; c < N; ++c)
    for (int r = 0; r < N; ++r) mc[std::size_t(c) * N + r] = M(r, c);
  parallel_nodes(nodes, [&](std::size_t a, std::size_t b) {
    kernels::active().mv_const_acc(y.v.data() + a * N, mc.data(),
                                   x.v.data() + a * N, b - a, N);
  });
}

std::vector<MatrixField> coordinate_gamma_fields(const Geometry& g,
                                                 const CliffordModule& m) {
  const int n = g.grid.dim();
  const int N = m.rank;
  const std::size_t nodes = g.grid.node_count();
  std::vector<MatrixField> out(n);
  for (int i = 0; i < n; ++i) out[i] = MatrixField(nodes, N);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* ei = g.frame.einv_at(v);  // ei[i*n+a] = e_a^i
    for (int i = 0; i < n; ++i) {
      CMat G(N, N);
      for (int a = 0; a < n; ++a) {
        const double c = ei[std::size_t(i) * n + a];
        if (c != 0.0) G += c * m.gamma[a];
      }
      out[i].set(v, G);
    }
  }
  return out;
}

std::vector<MatrixField> spin_coefficient_fields(const Geometry& g,
                                                 const CliffordModule& m) {
  const int n = g.grid.dim();
  const int N = m.rank;
  const std::size_t nodes = g.grid.node_count();
  const std::vector<CMat> pairs = spin_generator_pairs(m);

  std::vector<MatrixField> out(n);
  for (int i = 0; i < n; ++i) out[i] = MatrixField(nodes, N);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* om = g.omega_at(v);
    for (int i = 0; i < n; ++i)
      out[i].set(v, spin_matrix_from_omega(
                        m, pairs, om + std::size_t(i) * n * n));
  }
  return out;
}

CliffordConnection build_clifford_connection(
    std::shared_ptr<const Geometry> geom,
    std::shared_ptr<const CliffordModule> module,
    const std::vector<MatrixField>& gauge) {
  if (module->sig.n() != geom->grid.dim())
    throw std::invalid_argument("module dimension does not match grid");

  CliffordConnection c;
  c.geom = geom;
  c.module = module;
  c.coeff = spin_coefficient_fields(*geom, *module);
  c.gamma_coord = coordinate_gamma_fields(*geom, *module);

  if (!gauge.empty()) {
    if (int(gauge.size()) != geom->grid.dim())
      throw std::invalid_argument("gauge potential needs one field per axis");
    double worst = 0.0;
    std::size_t worst_node = 0;
    for (const MatrixField& A : gauge)
      for (std::size_t v = 0; v < A.nodes(); ++v) {
        CommutantResult r = commutant_test(*module, A.get(v));
        if (r.max_violation > worst) worst = r.max_violation, worst_node = v;
      }
    if (worst > 1e-12)
      throw std::invalid_argument(
          "gauge potential is not commutant-valued (worst node " +
          std::to_string(worst_node) + ", violation " + std::to_string(worst) +
          ")");
    for (int i = 0; i < geom->grid.dim(); ++i)
      for (std::size_t k = 0; k < c.coeff[i].v.size(); ++k)
        c.coeff[i].v[k] += gauge[i].v[k];
  }
  return c;
}

CliffordConnection make_connection(std::shared_ptr<const Geometry> geom,
                                   std::shared_ptr<const CliffordModule> module,
                                   std::vector<MatrixField> coeff) {
  CliffordConnection c;
  c.geom = geom;
  c.module = module;
  c.coeff = std::move(coeff);
  c.gamma_coord = coordinate_gamma_fields(*geom, *module);
  return c;
}

ScalarField smooth_probe_function(const Geometry& g, int which) {
  const ChartGrid& grid = g.grid;
  const std::size_t nodes = grid.node_count();
  ScalarField f(nodes);
  double x[8];
  for (std::size_t v = 0; v < nodes; ++v) {
    grid.node_coords(v, x);
    double s = 1.0;
    for (int i = 0; i < grid.dim(); ++i) {
      const Axis& ax = grid.axis(i);
      const double period = ax.count * ax.spacing;
      const double k = ax.periodic ? 2.0 * M_PI / period : 1.0 / period;
      const int mode = 1 + ((which + i) % 2);
      s *= std::sin(mode * k * (x[i] - ax.origin) + 0.3 * (which + 1) + 0.7 * i);
    }
    f.v[v] = s + 0.1 * which;
  }
  return f;
}

SectionField constant_section(std::size_t nodes, int rank, int component) {
  SectionField s(nodes, rank);
  for (std::size_t v = 0; v < nodes; ++v) s.at(v)[component] = 1.0;
  return s;
}

SectionField random_smooth_section(const Geometry& g, int rank, Rng& rng) {
  const ChartGrid& grid = g.grid;
  const std::size_t nodes = grid.node_count();
  const int n = grid.dim();
  SectionField out(nodes, rank);
  // few trig modes per component, integer wavenumbers on periodic axes
  struct Mode {
    double k[8];
    double phase[8];
    cplx amp;
  };
  std::vector<std::vector<Mode>> modes(rank);
  for (int c = 0; c < rank; ++c)
    for (int t = 0; t < 2; ++t) {
      Mode md;
      for (int i = 0; i < n; ++i) {
        const Axis& ax = grid.axis(i);
        const double period = ax.count * ax.spacing;
        const int kint = 1 + int(rng.uniform() * 2.0);
        md.k[i] = ax.periodic ? 2.0 * M_PI * kint / period : kint / period;
        md.phase[i] = rng.uniform() * 2.0 * M_PI;
      }
      md.amp = rng.csym();
      modes[c].push_back(md);
    }
  double x[8];
  for (std::size_t v = 0; v < nodes; ++v) {
    grid.node_coords(v, x);
    cplx* f = out.at(v);
    for (int c = 0; c < rank; ++c)
      for (const Mode& md : modes[c]) {
        double s = 1.0;
        for (int i = 0; i < n; ++i)
          s *= std::sin(md.k[i] * (x[i] - grid.axis(i).origin) + md.phase[i]);
        f[c] += md.amp * s;
      }
  }
  return out;
}

ConnectionReport verify_clifford_connection(const CliffordConnection& c,
                                            Rng& rng) {
  const Geometry& g = *c.geom;
  const CliffordModule& m = *c.module;
  const ChartGrid& grid = g.grid;
  const int n = grid.dim();
  const int N = m.rank;
  const std::size_t nodes = grid.node_count();
  const int margin = g.order_op;

  ConnectionReport rep;

  // [nabla_i, gamma(alpha)] psi = gamma(nabla^{T*M}_i alpha) psi.
  // Two probe families: constant frame components (the derivative term drops
  // out of the FD commutator, so the residual isolates the spin lift) and
  // varying components (full FD Leibniz defect).
  SectionField psi = random_smooth_section(g, N, rng);
  for (int family = 0; family < 2; ++family) {
    std::vector<ScalarField> alpha(n, ScalarField(nodes));
    for (int a = 0; a < n; ++a) {
      if (family == 0) {
        const cplx ca(rng.sym(), rng.sym());
        for (std::size_t v = 0; v < nodes; ++v) alpha[a].v[v] = ca;
      } else {
        alpha[a] = smooth_probe_function(g, a + 1);
      }
    }

    // gamma(alpha) psi as a field
    SectionField gpsi(nodes, N);
    for (std::size_t v = 0; v < nodes; ++v) {
      CMat ga(N, N);
      for (int a = 0; a < n; ++a) ga += alpha[a].v[v] * m.gamma[a];
      auto r = ga.apply(std::vector<cplx>(psi.at(v), psi.at(v) + N));
      for (int k = 0; k < N; ++k) gpsi.at(v)[k] = r[k];
    }

    double& slot =
        family == 0 ? rep.clifford_property : rep.clifford_property_fd;
    for (int i = 0; i < n; ++i) {
      SectionField dpsi = partial_derivative(grid, psi, i, g.order_op);
      field_matvec_acc(c.coeff[i], psi, dpsi);
      SectionField dgpsi = partial_derivative(grid, gpsi, i, g.order_op);
      field_matvec_acc(c.coeff[i], gpsi, dgpsi);

      // frame components of nabla_i alpha:
      // d_i alpha_b - alpha_a eta_a omega_ab,i
      std::vector<ScalarField> dalpha;
      for (int a = 0; a < n; ++a)
        dalpha.push_back(
            partial_derivative(grid, alpha[a], i, g.order_metric));

      for (std::size_t v = 0; v < nodes; ++v) {
        if (!grid.interior(v, margin)) continue;
        const double* om = g.omega_at(v);
        CMat ga(N, N), gda(N, N);
        for (int a = 0; a < n; ++a) ga += alpha[a].v[v] * m.gamma[a];
        for (int b = 0; b < n; ++b) {
          cplx comp = dalpha[b].v[v];
          for (int a = 0; a < n; ++a)
            comp -= alpha[a].v[v] * double(g.frame.eta[a]) *
                    om[(std::size_t(i) * n + a) * n + b];
          gda += comp * m.gamma[b];
        }
        auto t1 = ga.apply(std::vector<cplx>(dpsi.at(v), dpsi.at(v) + N));
        auto t2 = gda.apply(std::vector<cplx>(psi.at(v), psi.at(v) + N));
        for (int k = 0; k < N; ++k) {
          const cplx r = dgpsi.at(v)[k] - t1[k] - t2[k];
          slot = std::max(slot, std::abs(r));
        }
      }
    }
  }

  // covariant constancy of Theta: d_i Theta_j - Gamma^k_ij Theta_k + [C_i, Theta_j]
  const double eps_n = double(m.sig.eps) / n;
  std::vector<MatrixField> theta(n);
  for (int j = 0; j < n; ++j) theta[j] = MatrixField(nodes, N);
  std::vector<MatrixField> gc = coordinate_gamma_fields(g, m);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* gm = g.metric.g_at(v);
    for (int j = 0; j < n; ++j) {
      CMat t(N, N);
      for (int k = 0; k < n; ++k) {
        const double w = gm[std::size_t(j) * n + k];
        if (w != 0.0) t += (eps_n * w) * gc[k].get(v);
      }
      theta[j].set(v, t);
    }
  }
  for (int i = 0; i < n; ++i) {
    DerivPlan plan = make_deriv_plan(grid, i, g.order_metric);
    for (int j = 0; j < n; ++j) {
      MatrixField dth(nodes, N);
      apply_deriv(grid, plan,
                  reinterpret_cast<const double*>(theta[j].v.data()),
                  reinterpret_cast<double*>(dth.v.data()), 2 * N * N);
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!grid.interior(v, margin)) continue;
        CMat r = dth.get(v) + commutator(c.coeff[i].get(v), theta[j].get(v));
        const double* G = g.chris.at(v);
        for (int k = 0; k < n; ++k)
          r -= G[(std::size_t(k) * n + i) * n + j] * theta[k].get(v);
        rep.theta_constancy = std::max(rep.theta_constancy, max_abs(r));
      }
    }
  }
  return rep;
}

SectionField DiracOperator::apply(const SectionField& psi) const {
  const Geometry& g = *geom;
  const int n = g.grid.dim();
  const int N = rank();
  const std::size_t nd = nodes();
  SectionField out(nd, N);
  for (int i = 0; i < n; ++i) {
    SectionField u = partial_derivative(g.grid, psi, i, g.order_op);
    field_matvec_acc(coeff[i], psi, u);
    field_matvec_acc(gamma_coord[i], u, out);
  }
  if (phi_big.rank == N && !phi_big.v.empty())
    field_matvec_acc(phi_big, psi, out);
  return out;
}

DiracOperator quantize_connection(const CliffordConnection& c) {
  DiracOperator d;
  d.geom = c.geom;
  d.module = c.module;
  d.coeff = c.coeff;
  d.gamma_coord = c.gamma_coord;
  return d;
}

DiracOperator build_simple_type(const CliffordConnection& c,
                                const MatrixField& phi) {
  const CliffordModule& m = *c.module;
  const std::size_t nodes = c.geom->grid.node_count();
  if (phi.rank != m.rank || phi.nodes() != nodes)
    throw std::invalid_argument("phi field has wrong shape");

  double worst = 0.0;
  std::size_t worst_node = 0;
  for (std::size_t v = 0; v < nodes; ++v) {
    CommutantResult r = commutant_test(m, phi.get(v));
    if (r.max_violation > worst) worst = r.max_violation, worst_node = v;
  }
  if (worst > 1e-12)
    throw std::invalid_argument("phi is not commutant-valued (worst node " +
                                std::to_string(worst_node) + ", violation " +
                                std::to_string(worst) + ")");

  DiracOperator d = quantize_connection(c);
  d.simple_type = true;
  d.phi_small = phi;
  d.phi_big = MatrixField(nodes, m.rank);
  for (std::size_t v = 0; v < nodes; ++v)
    d.phi_big.set(v, m.tau * phi.get(v));

  // defining invariant: Phi anti-commutes with the Clifford action
  double anti = 0.0;
  for (std::size_t v = 0; v < nodes; ++v) {
    const CMat P = d.phi_big.get(v);
    for (const CMat& ga : m.gamma)
      anti = std::max(anti, max_abs(anticommutator(P, ga)));
    if (anti > 1e-12) break;
  }
  if (anti > 1e-12)
    throw std::logic_error("simple-type invariant violated: " +
                           std::to_string(anti));
  return d;
}

DiracOperator build_simple_type(const CliffordConnection& c, const CMat& phi) {
  MatrixField f(c.geom->grid.node_count(), c.module->rank);
  for (std::size_t v = 0; v < f.nodes(); ++v) f.set(v, phi);
  return build_simple_type(c, f);
}

DiracOperator with_zero_order(const CliffordConnection& c, const CMat& Phi) {
  DiracOperator d = quantize_connection(c);
  d.phi_big = MatrixField(c.geom->grid.node_count(), c.module->rank);
  for (std::size_t v = 0; v < d.phi_big.nodes(); ++v) d.phi_big.set(v, Phi);
  return d;
}

namespace {

SectionField extract_column(const MatrixField& M, int c) {
  const std::size_t nodes = M.nodes();
  const int N = M.rank;
  SectionField out(nodes, N);
  for (std::size_t v = 0; v < nodes; ++v) {
    const cplx* col = M.block(v) + std::size_t(c) * N;  // column-major
    std::copy(col, col + N, out.at(v));
  }
  return out;
}

}  // namespace

std::vector<MatrixField> extract_bochner(const DiracOperator& d) {
  const Geometry& g = *d.geom;
  const CliffordModule& m = *d.module;
  const ChartGrid& grid = g.grid;
  const int n = grid.dim();
  const int N = m.rank;
  const std::size_t nodes = grid.node_count();
  const double eps = m.sig.eps;

  // delta_g(dx^m) scalar fields
  std::vector<ScalarField> ddx(n);
  for (int mu = 0; mu < n; ++mu) {
    std::vector<ScalarField> comp(n, ScalarField(nodes));
    for (std::size_t v = 0; v < nodes; ++v) comp[mu].v[v] = 1.0;
    ddx[mu] = codifferential(grid, g.metric, comp, g.order_op);
  }

  std::vector<MatrixField> B(n);
  for (int j = 0; j < n; ++j) B[j] = MatrixField(nodes, N);

  for (int c = 0; c < N; ++c) {
    SectionField vc = constant_section(nodes, N, c);
    SectionField Dv = d.apply(vc);
    for (int mu = 0; mu < n; ++mu) {
      // u^mu = eps (D(G^mu v) + G^mu D v) + delta_g(dx^mu) v
      SectionField Gv = field_matvec(d.gamma_coord[mu], vc);
      SectionField u = d.apply(Gv);
      field_matvec_acc(d.gamma_coord[mu], Dv, u);
      for (std::size_t v = 0; v < nodes; ++v) {
        cplx* uv = u.at(v);
        for (int k = 0; k < N; ++k) uv[k] *= eps;
        uv[c] += ddx[mu].v[v];
      }
      // accumulate B_j column c += 1/2 g_{j mu} u^mu
      for (std::size_t v = 0; v < nodes; ++v) {
        const double* gm = g.metric.g_at(v);
        const cplx* uv = u.at(v);
        for (int j = 0; j < n; ++j) {
          const double w = 0.5 * gm[std::size_t(j) * n + mu];
          if (w == 0.0) continue;
          cplx* col = B[j].block(v) + std::size_t(c) * N;
          for (int k = 0; k < N; ++k) col[k] += w * uv[k];
        }
      }
    }
  }
  return B;
}

namespace {

// first-order operator sum_i gamma(dx^i)(d_i + K_i) applied to psi
SectionField apply_first_order(const Geometry& g,
                               const std::vector<MatrixField>& gamma_coord,
                               const std::vector<MatrixField>& K,
                               const SectionField& psi) {
  const int n = g.grid.dim();
  SectionField out(g.grid.node_count(), psi.rank);
  for (int i = 0; i < n; ++i) {
    SectionField u = partial_derivative(g.grid, psi, i, g.order_op);
    field_matvec_acc(K[i], psi, u);
    field_matvec_acc(gamma_coord[i], u, out);
  }
  return out;
}

}  // namespace

MatrixField first_order_phi(const DiracOperator& d,
                            const std::vector<MatrixField>& bochner) {
  const Geometry& g = *d.geom;
  const int N = d.rank();
  const std::size_t nodes = d.nodes();
  MatrixField phi(nodes, N);
  for (int c = 0; c < N; ++c) {
    SectionField vc = constant_section(nodes, N, c);
    SectionField Dv = d.apply(vc);
    SectionField Bv = apply_first_order(g, d.gamma_coord, bochner, vc);
    for (std::size_t v = 0; v < nodes; ++v) {
      cplx* col = phi.block(v) + std::size_t(c) * N;
      const cplx* a = Dv.at(v);
      const cplx* b = Bv.at(v);
      for (int k = 0; k < N; ++k) col[k] = a[k] - b[k];
    }
  }
  return phi;
}

std::vector<CMat> canonical_one_form(const CliffordModule& m) {
  const int n = m.sig.n();
  std::vector<CMat> theta;
  for (int a = 0; a < n; ++a)
    theta.push_back((double(m.sig.eps) / n * m.sig.eta(a)) * m.gamma[a]);
  return theta;
}

std::vector<MatrixField> dirac_form(const DiracOperator& d,
                                    const MatrixField& phi_d) {
  const Geometry& g = *d.geom;
  const int n = g.grid.dim();
  const int N = d.rank();
  const std::size_t nodes = d.nodes();
  const double eps_n = double(d.module->sig.eps) / n;

  std::vector<MatrixField> omega(n);
  for (int i = 0; i < n; ++i) omega[i] = MatrixField(nodes, N);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* gm = g.metric.g_at(v);
    const CMat Phi = phi_d.get(v);
    for (int i = 0; i < n; ++i) {
      CMat o(N, N);
      for (int j = 0; j < n; ++j) {
        const double w = gm[std::size_t(i) * n + j];
        if (w != 0.0) o += (eps_n * w) * (d.gamma_coord[j].get(v) * Phi);
      }
      omega[i].set(v, o);
    }
  }
  return omega;
}

SectionField apply_bochner_laplacian(const Geometry& g,
                                     const std::vector<MatrixField>& bochner,
                                     int eps, const SectionField& psi) {
  const ChartGrid& grid = g.grid;
  const int n = grid.dim();
  const int N = psi.rank;
  const std::size_t nodes = grid.node_count();

  std::vector<SectionField> sigma(n);
  for (int j = 0; j < n; ++j) {
    sigma[j] = partial_derivative(grid, psi, j, g.order_op);
    field_matvec_acc(bochner[j], psi, sigma[j]);
  }

  SectionField out(nodes, N);
  SectionField tau(nodes, N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      tau = partial_derivative(grid, sigma[j], i, g.order_op);
      field_matvec_acc(bochner[i], sigma[j], tau);
      for (std::size_t v = 0; v < nodes; ++v) {
        const double w = eps * g.metric.ginv_at(v)[std::size_t(i) * n + j];
        if (w == 0.0) continue;
        cplx* o = out.at(v);
        const cplx* t = tau.at(v);
        for (int k = 0; k < N; ++k) o[k] += w * t[k];
      }
    }
  // - eps g^{ij} Gamma^k_ij sigma_k
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* gi = g.metric.ginv_at(v);
    const double* G = g.chris.at(v);
    cplx* o = out.at(v);
    for (int k = 0; k < n; ++k) {
      double c = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          c += gi[std::size_t(i) * n + j] *
               G[(std::size_t(k) * n + i) * n + j];
      if (c == 0.0) continue;
      const cplx* s = sigma[k].at(v);
      for (int kk = 0; kk < N; ++kk) o[kk] -= (eps * c) * s[kk];
    }
  }
  return out;
}

namespace {

double zero_order_residual(const Geometry& g,
                           const std::function<SectionField(const SectionField&)>& op,
                           const SectionField& psi, const ScalarField& f) {
  const std::size_t nodes = g.grid.node_count();
  const int N = psi.rank;
  SectionField fpsi(nodes, N);
  for (std::size_t v = 0; v < nodes; ++v) {
    const cplx fv = f.v[v];
    for (int k = 0; k < N; ++k) fpsi.at(v)[k] = fv * psi.at(v)[k];
  }
  SectionField a = op(fpsi);
  SectionField b = op(psi);
  const int margin = 2 * g.order_op;
  double resid = 0.0, scale = 0.0;
  for (std::size_t v = 0; v < nodes; ++v) {
    if (!g.grid.interior(v, margin)) continue;
    for (int k = 0; k < N; ++k) {
      scale = std::max(scale, std::abs(a.at(v)[k]));
      resid = std::max(resid, std::abs(a.at(v)[k] - f.v[v] * b.at(v)[k]));
    }
  }
  return resid / std::max(1.0, scale);
}

}  // namespace

Decomposition decompose(const DiracOperator& d) {
  const Geometry& g = *d.geom;
  const int N = d.rank();
  const std::size_t nodes = d.nodes();
  const int eps = d.module->sig.eps;

  Decomposition dec;
  dec.bochner = extract_bochner(d);
  dec.phi_d = first_order_phi(d, dec.bochner);

  dec.v_d = MatrixField(nodes, N);
  for (int c = 0; c < N; ++c) {
    SectionField vc = constant_section(nodes, N, c);
    SectionField D2v = d.apply(d.apply(vc));
    SectionField Lv = apply_bochner_laplacian(g, dec.bochner, eps, vc);
    for (std::size_t v = 0; v < nodes; ++v) {
      cplx* col = dec.v_d.block(v) + std::size_t(c) * N;
      for (int k = 0; k < N; ++k) col[k] = D2v.at(v)[k] - Lv.at(v)[k];
    }
  }
  dec.tr_v = ScalarField(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    const cplx* b = dec.v_d.block(v);
    cplx t = 0.0;
    for (int k = 0; k < N; ++k) t += b[std::size_t(k) * N + k];
    dec.tr_v.v[v] = t;
  }

  // zero-orderness probes
  Rng rng(1234);
  SectionField psi = random_smooth_section(g, N, rng);
  ScalarField f = smooth_probe_function(g, 0);
  dec.phi_zero_order_residual = zero_order_residual(
      g,
      [&](const SectionField& s) {
        SectionField a = d.apply(s);
        SectionField b = apply_first_order(g, d.gamma_coord, dec.bochner, s);
        for (std::size_t k = 0; k < a.v.size(); ++k) a.v[k] -= b.v[k];
        return a;
      },
      psi, f);
  dec.v_zero_order_residual = zero_order_residual(
      g,
      [&](const SectionField& s) {
        SectionField a = d.apply(d.apply(s));
        SectionField b = apply_bochner_laplacian(g, dec.bochner, eps, s);
        for (std::size_t k = 0; k < a.v.size(); ++k) a.v[k] -= b.v[k];
        return a;
      },
      psi, f);
  return dec;
}

ScalarField trace_formula_rhs(const DiracOperator& d,
                              const Decomposition& dec) {
  const Geometry& g = *d.geom;
  const ChartGrid& grid = g.grid;
  const int n = grid.dim();
  const int N = d.rank();
  const std::size_t nodes = grid.node_count();
  const int eps = d.module->sig.eps;

  std::vector<MatrixField> omega = dirac_form(d, dec.phi_d);
  std::vector<MatrixField> dc(n);  // Dirac connection coefficients
  for (int i = 0; i < n; ++i) {
    dc[i] = dec.bochner[i];
    for (std::size_t k = 0; k < dc[i].v.size(); ++k)
      dc[i].v[k] += omega[i].v[k];
  }

  // curvature F_ij by FD commutator, i < j
  std::vector<std::vector<MatrixField>> F(n);
  for (int i = 0; i < n; ++i) F[i].resize(n);
  for (int i = 0; i < n; ++i) {
    DerivPlan plan = make_deriv_plan(grid, i, g.order_op);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      MatrixField dcj(nodes, N);
      apply_deriv(grid, plan, reinterpret_cast<const double*>(dc[j].v.data()),
                  reinterpret_cast<double*>(dcj.v.data()), 2 * N * N);
      F[i][j] = std::move(dcj);
    }
  }

  // module blade products gamma^a gamma^b for a<b
  ScalarField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* ei = g.frame.einv_at(v);
    const double* gi = g.metric.ginv_at(v);

    std::vector<CMat> Fv(std::size_t(n) * n, CMat());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        CMat f = F[i][j].get(v) - F[j][i].get(v) +
                 commutator(dc[i].get(v), dc[j].get(v));
        Fv[std::size_t(i) * n + j] = f;
      }

    cplx term1 = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        CMat Fab(N, N);
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            const double w = ei[std::size_t(i) * n + a] * ei[std::size_t(j) * n + b] -
                             ei[std::size_t(j) * n + a] * ei[std::size_t(i) * n + b];
            if (w != 0.0) Fab += w * Fv[std::size_t(i) * n + j];
          }
        term1 += trace(d.module->gamma_blade((1u << a) | (1u << b)) * Fab);
      }

    cplx term2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double w = gi[std::size_t(i) * n + j];
        if (w != 0.0) term2 += w * trace(omega[i].get(v) * omega[j].get(v));
      }
    out.v[v] = term1 - double(eps) * term2;
  }

  // codifferential term: - delta_g(tr omega) in the adjoint sign convention
  std::vector<ScalarField> tro(n, ScalarField(nodes));
  for (int i = 0; i < n; ++i)
    for (std::size_t v = 0; v < nodes; ++v) {
      const cplx* b = omega[i].block(v);
      cplx t = 0.0;
      for (int k = 0; k < N; ++k) t += b[std::size_t(k) * N + k];
      tro[i].v[v] = t;
    }
  ScalarField div = codifferential(grid, g.metric, tro, g.order_op);
  for (std::size_t v = 0; v < nodes; ++v) out.v[v] -= div.v[v];
  return out;
}

cplx universal_dirac_action(const DiracOperator& d, const Decomposition& dec) {
  return integrate(d.geom->grid, d.geom->metric, dec.tr_v);
}

cplx universal_dirac_action(const DiracOperator& d) {
  return universal_dirac_action(d, decompose(d));
}

ScalarField fiber_inner_density(const Geometry& g, const CliffordModule& m,
                                const SectionField& psi,
                                const SectionField& chi) {
  const std::size_t nodes = g.grid.node_count();
  const int N = m.rank;
  ScalarField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    const cplx* a = psi.at(v);
    const cplx* b = chi.at(v);
    cplx s = 0.0;
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) s += std::conj(a[r]) * m.h(r, c) * b[c];
    out.v[v] = s;
  }
  return out;
}

cplx total_dirac_action(const DiracOperator& d, const Decomposition& dec,
                        const SectionField& psi) {
  SectionField Dpsi = d.apply(psi);
  ScalarField dens = fiber_inner_density(*d.geom, *d.module, psi, Dpsi);
  for (std::size_t v = 0; v < dens.v.size(); ++v) dens.v[v] += dec.tr_v.v[v];
  return integrate(d.geom->grid, d.geom->metric, dens);
}

}  // namespace df
