#include "diracforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "diracforge/kernels.hpp"

namespace df {

ChartGrid::ChartGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw std::invalid_argument("grid needs at least 1 axis");
  strides_.assign(axes_.size(), 1);
  count_ = 1;
  // last axis fastest
  for (int i = int(axes_.size()) - 1; i >= 0; --i) {
    const Axis& a = axes_[i];
    if (a.count < 2) throw std::invalid_argument("axis needs >= 2 nodes");
    if (a.spacing <= 0.0) throw std::invalid_argument("axis spacing must be > 0");
    if (!a.periodic && a.count < 5)
      throw std::invalid_argument("non-periodic axes need >= 5 nodes");
    strides_[i] = count_;
    count_ *= std::size_t(a.count);
  }
}

void ChartGrid::unindex(std::size_t node, int* idx) const {
  for (int i = 0; i < dim(); ++i) {
    idx[i] = int(node / strides_[i]);
    node %= strides_[i];
  }
}

std::size_t ChartGrid::index(const int* idx) const {
  std::size_t node = 0;
  for (int i = 0; i < dim(); ++i) node += std::size_t(idx[i]) * strides_[i];
  return node;
}

void ChartGrid::node_coords(std::size_t node, double* x) const {
  int idx[8];
  unindex(node, idx);
  for (int i = 0; i < dim(); ++i) x[i] = coord(i, idx[i]);
}

double ChartGrid::cell_volume() const {
  double v = 1.0;
  for (const Axis& a : axes_) v *= a.spacing;
  return v;
}

bool ChartGrid::interior(std::size_t node, int margin) const {
  int idx[8];
  unindex(node, idx);
  for (int i = 0; i < dim(); ++i) {
    if (axes_[i].periodic) continue;
    if (idx[i] < margin || idx[i] >= axes_[i].count - margin) return false;
  }
  return true;
}

ChartGrid periodic_torus_grid(const std::vector<double>& lengths,
                              const std::vector<int>& counts) {
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    axes.push_back({counts[i], lengths[i] / counts[i], 0.0, true});
  return ChartGrid(std::move(axes));
}

ChartGrid box_grid(const std::vector<double>& lo, const std::vector<double>& hi,
                   const std::vector<int>& counts,
                   const std::vector<bool>& periodic) {
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const bool per = i < periodic.size() ? periodic[i] : false;
    const double h = (hi[i] - lo[i]) / counts[i];
    // cell-centered on non-periodic axes (midpoint quadrature)
    axes.push_back({counts[i], h, per ? lo[i] : lo[i] + 0.5 * h, per});
  }
  return ChartGrid(std::move(axes));
}

void MatrixField::set(std::size_t node, const CMat& m) {
  cplx* b = block(node);
  for (int c = 0; c < rank; ++c)
    for (int r = 0; r < rank; ++r) b[std::size_t(c) * rank + r] = m(r, c);
}

CMat MatrixField::get(std::size_t node) const {
  CMat m(rank, rank);
  const cplx* b = block(node);
  for (int c = 0; c < rank; ++c)
    for (int r = 0; r < rank; ++r) m(r, c) = b[std::size_t(c) * rank + r];
  return m;
}

// ------------------------------ stencils ------------------------------

namespace {

// weights for d/dx at relative position 0 over integer offsets (unit spacing)
std::vector<double> fd_weights(const std::vector<int>& offsets) {
  const int k = int(offsets.size());
  RMat V(k, k);
  for (int m = 0; m < k; ++m)
    for (int j = 0; j < k; ++j)
      V(m, j) = std::pow(double(offsets[j]), m);
  RMat Vinv;
  double det = 0.0;
  if (!r_invert(V, Vinv, det))
    throw std::runtime_error("degenerate stencil offsets");
  std::vector<double> w(k);
  for (int j = 0; j < k; ++j) w[j] = Vinv(j, 1);  // first-derivative row
  return w;
}

DerivRule make_rule(const std::vector<int>& offsets, double inv_h) {
  DerivRule r;
  std::vector<double> w = fd_weights(offsets);
  for (std::size_t j = 0; j < offsets.size(); ++j)
    if (w[j] != 0.0) r.terms.push_back({offsets[j], w[j] * inv_h});
  return r;
}

}  // namespace

DerivPlan make_deriv_plan(const ChartGrid& grid, int axis, int order) {
  if (order != 2 && order != 4)
    throw std::invalid_argument("stencil order must be 2 or 4");
  const Axis& ax = grid.axis(axis);
  const int L = ax.count;
  const int r = order / 2;
  if (L < order + 1)
    throw std::invalid_argument("grid too small for stencil order");
  const double inv_h = 1.0 / ax.spacing;

  DerivPlan plan;
  plan.axis = axis;
  plan.order = order;
  plan.periodic = ax.periodic;

  std::vector<int> central;
  for (int o = -r; o <= r; ++o) central.push_back(o);
  plan.interior = make_rule(central, inv_h);

  if (ax.periodic) {
    plan.interior_lo = r;
    plan.interior_hi = L - r;
  } else {
    plan.interior_lo = r;
    plan.interior_hi = L - r;
    for (int c = 0; c < r; ++c) {
      std::vector<int> offs;
      for (int o = 0; o <= order; ++o) offs.push_back(o - c);
      plan.edges.push_back({c, make_rule(offs, inv_h)});
    }
    for (int c = L - r; c < L; ++c) {
      std::vector<int> offs;
      for (int o = 0; o <= order; ++o) offs.push_back(L - 1 - c - o);
      std::sort(offs.begin(), offs.end());
      plan.edges.push_back({c, make_rule(offs, inv_h)});
    }
  }
  return plan;
}

void apply_deriv(const ChartGrid& grid, const DerivPlan& plan,
                 const double* in, double* out, int width) {
  const Axis& ax = grid.axis(plan.axis);
  const int L = ax.count;
  const std::size_t S = grid.stride(plan.axis);
  const std::size_t outer = grid.node_count() / (std::size_t(L) * S);
  const std::size_t roww = S * std::size_t(width);  // doubles per row
  const auto& K = kernels::active();

  auto run_slab = [&](std::size_t slab) {
    const double* in_s = in + slab * L * roww;
    double* out_s = out + slab * L * roww;
    // interior rows: one contiguous run per stencil term
    const int lo = plan.interior_lo, hi = plan.interior_hi;
    if (hi > lo) {
      for (const auto& [o, w] : plan.interior.terms)
        K.axpy_d(out_s + std::size_t(lo) * roww,
                 in_s + std::size_t(lo + o) * roww,
                 w, std::size_t(hi - lo) * roww);
    }
    if (plan.periodic) {
      for (int c = 0; c < lo; ++c)
        for (const auto& [o, w] : plan.interior.terms) {
          const int src = (c + o + L) % L;
          K.axpy_d(out_s + std::size_t(c) * roww,
                   in_s + std::size_t(src) * roww, w, roww);
        }
      for (int c = hi; c < L; ++c)
        for (const auto& [o, w] : plan.interior.terms) {
          const int src = (c + o) % L;
          K.axpy_d(out_s + std::size_t(c) * roww,
                   in_s + std::size_t(src) * roww, w, roww);
        }
    } else {
      for (const auto& [c, rule] : plan.edges)
        for (const auto& [o, w] : rule.terms)
          K.axpy_d(out_s + std::size_t(c) * roww,
                   in_s + std::size_t(c + o) * roww, w, roww);
    }
  };

  if (thread_count() > 1 && outer > 1) {
    parallel_nodes(outer, [&](std::size_t a, std::size_t b) {
      for (std::size_t s = a; s < b; ++s) run_slab(s);
    });
  } else {
    for (std::size_t s = 0; s < outer; ++s) run_slab(s);
  }
}

ScalarField partial_derivative(const ChartGrid& grid, const ScalarField& f,
                               int axis, int order) {
  DerivPlan plan = make_deriv_plan(grid, axis, order);
  ScalarField out(grid.node_count());
  apply_deriv(grid, plan, reinterpret_cast<const double*>(f.v.data()),
              reinterpret_cast<double*>(out.v.data()), 2);
  return out;
}

RealField partial_derivative(const ChartGrid& grid, const RealField& f,
                             int axis, int order) {
  DerivPlan plan = make_deriv_plan(grid, axis, order);
  RealField out(grid.node_count());
  apply_deriv(grid, plan, f.v.data(), out.v.data(), 1);
  return out;
}

SectionField partial_derivative(const ChartGrid& grid, const SectionField& f,
                                int axis, int order) {
  DerivPlan plan = make_deriv_plan(grid, axis, order);
  SectionField out(grid.node_count(), f.rank);
  apply_deriv(grid, plan, reinterpret_cast<const double*>(f.v.data()),
              reinterpret_cast<double*>(out.v.data()), 2 * f.rank);
  return out;
}

// ------------------------------ metric ------------------------------

MetricCallback flat_metric(int n) {
  MetricCallback cb;
  cb.n = n;
  cb.name = "flat";
  cb.eval = [n](const double*, RMat& g) { g = RMat::identity(n); };
  cb.deriv = [n](const double*, double* dg) {
    std::fill(dg, dg + n * n * n, 0.0);
  };
  return cb;
}

MetricCallback minkowski_metric(int p, int q) {
  const int n = p + q;
  MetricCallback cb;
  cb.n = n;
  cb.name = "minkowski";
  cb.eval = [n, p](const double*, RMat& g) {
    g = RMat::identity(n);
    for (int i = p; i < n; ++i) g(i, i) = -1.0;
  };
  cb.deriv = [n](const double*, double* dg) {
    std::fill(dg, dg + n * n * n, 0.0);
  };
  return cb;
}

MetricCallback sphere_metric(double radius) {
  MetricCallback cb;
  cb.n = 2;
  cb.name = "sphere";
  const double r2 = radius * radius;
  cb.eval = [r2](const double* x, RMat& g) {
    g = RMat(2, 2);
    const double s = std::sin(x[0]);
    g(0, 0) = r2;
    g(1, 1) = r2 * s * s;
  };
  cb.deriv = [r2](const double* x, double* dg) {
    std::fill(dg, dg + 8, 0.0);
    // d_theta g_phiphi = 2 r^2 sin(theta) cos(theta)
    dg[0 * 4 + 1 * 2 + 1] = 2.0 * r2 * std::sin(x[0]) * std::cos(x[0]);
  };
  return cb;
}

MetricCallback hyperbolic_metric() {
  MetricCallback cb;
  cb.n = 2;
  cb.name = "hyperbolic";
  cb.eval = [](const double* x, RMat& g) {
    g = RMat(2, 2);
    const double iy2 = 1.0 / (x[1] * x[1]);
    g(0, 0) = iy2;
    g(1, 1) = iy2;
  };
  cb.deriv = [](const double* x, double* dg) {
    std::fill(dg, dg + 8, 0.0);
    const double d = -2.0 / (x[1] * x[1] * x[1]);
    dg[1 * 4 + 0 * 2 + 0] = d;
    dg[1 * 4 + 1 * 2 + 1] = d;
  };
  return cb;
}

RMat MetricField::g_block(std::size_t node) const {
  RMat m(n, n);
  std::copy(g_at(node), g_at(node) + n * n, m.data());
  return m;
}

RMat MetricField::ginv_block(std::size_t node) const {
  RMat m(n, n);
  std::copy(ginv_at(node), ginv_at(node) + n * n, m.data());
  return m;
}

namespace {

// signature-aware Gram-Schmidt of the coordinate coframe under g*.
// Returns rows e^a_i and per-row signs; throws on degeneracy.
void gram_schmidt_rows(const RMat& ginv, RMat& e, int* sign) {
  const int n = ginv.rows();
  e = RMat(n, n);
  std::vector<double> norm(n);
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
      const double c = inner(u.data(), eb) * sign[b];
      for (int i = 0; i < n; ++i) u[i] -= c * eb[i];
    }
    const double nm = inner(u.data(), u.data());
    if (std::abs(nm) < 1e-12)
      throw std::runtime_error("degenerate metric node in Gram-Schmidt");
    sign[a] = nm > 0 ? +1 : -1;
    const double inv = 1.0 / std::sqrt(std::abs(nm));
    for (int i = 0; i < n; ++i) e(a, i) = u[i] * inv;
  }
}

void node_signature(const RMat& ginv, int& p, int& q) {
  const int n = ginv.rows();
  RMat e;
  int sign[8];
  gram_schmidt_rows(ginv, e, sign);
  p = q = 0;
  for (int a = 0; a < n; ++a) (sign[a] > 0 ? p : q)++;
}

MetricField finish_metric(const ChartGrid& grid, MetricField m,
                          double det_tol) {
  const int n = m.n;
  const std::size_t nodes = grid.node_count();
  m.ginv.resize(nodes * n * n);
  m.sqrt_det.resize(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    RMat g = m.g_block(v);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (g(i, j) != g(j, i))
          throw std::runtime_error("metric sample not symmetric");
    RMat inv;
    double det = 0.0;
    if (!r_invert(g, inv, det) || std::abs(det) < det_tol)
      throw std::runtime_error("metric near-singular at a node");
    std::copy(inv.data(), inv.data() + n * n, m.ginv.begin() + v * n * n);
    m.sqrt_det[v] = std::sqrt(std::abs(det));
    int p = 0, q = 0;
    node_signature(inv, p, q);
    if (v == 0) {
      m.sig_p = p;
      m.sig_q = q;
    } else if (p != m.sig_p || q != m.sig_q) {
      throw std::runtime_error("metric signature changes across nodes");
    }
  }
  return m;
}

}  // namespace

MetricField sample_metric(const ChartGrid& grid, const MetricCallback& cb,
                          double det_tol) {
  if (cb.n != grid.dim())
    throw std::invalid_argument("metric dimension does not match grid");
  MetricField m;
  m.n = cb.n;
  const std::size_t nodes = grid.node_count();
  m.g.resize(nodes * m.n * m.n);
  double x[8];
  RMat g;
  for (std::size_t v = 0; v < nodes; ++v) {
    grid.node_coords(v, x);
    cb.eval(x, g);
    std::copy(g.data(), g.data() + m.n * m.n, m.g.begin() + v * m.n * m.n);
  }
  return finish_metric(grid, std::move(m), det_tol);
}

MetricField metric_from_table(const ChartGrid& grid,
                              const std::vector<double>& node_major_gij,
                              double det_tol) {
  const int n = grid.dim();
  if (node_major_gij.size() != grid.node_count() * std::size_t(n) * n)
    throw std::invalid_argument("metric table has wrong size");
  MetricField m;
  m.n = n;
  m.g = node_major_gij;
  return finish_metric(grid, std::move(m), det_tol);
}

CoframeField orthonormal_coframe(const ChartGrid& grid, const MetricField& m) {
  const int n = m.n;
  const std::size_t nodes = grid.node_count();
  CoframeField f;
  f.n = n;
  f.e.resize(nodes * n * n);
  f.einv.resize(nodes * n * n);
  f.eta.assign(n, 0);

  for (std::size_t v = 0; v < nodes; ++v) {
    RMat e;
    int sign[8];
    gram_schmidt_rows(m.ginv_block(v), e, sign);

    // positives first (stable), orientation restored by flipping the last row
    int order[8];
    int k = 0;
    for (int a = 0; a < n; ++a)
      if (sign[a] > 0) order[k++] = a;
    const int p = k;
    for (int a = 0; a < n; ++a)
      if (sign[a] < 0) order[k++] = a;

    RMat es(n, n);
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i) es(a, i) = e(order[a], i);
    {
      RMat tmp;
      double det = 0.0;
      if (!r_invert(es, tmp, det))
        throw std::runtime_error("coframe inversion failed");
      if (det < 0.0)
        for (int i = 0; i < n; ++i) es(n - 1, i) = -es(n - 1, i);
      r_invert(es, tmp, det);
      std::copy(tmp.data(), tmp.data() + n * n, f.einv.begin() + v * n * n);
    }
    std::copy(es.data(), es.data() + n * n, f.e.begin() + v * n * n);

    if (v == 0) {
      for (int a = 0; a < n; ++a) f.eta[a] = a < p ? +1 : -1;
    }
  }
  return f;
}

ChristoffelField christoffels(const ChartGrid& grid, const MetricField& m,
                              int order) {
  const int n = m.n;
  const std::size_t nodes = grid.node_count();

  // d_k g_ij for all components
  std::vector<RealField> dg(std::size_t(n) * n * n);
  {
    RealField comp(nodes);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        for (std::size_t v = 0; v < nodes; ++v)
          comp.v[v] = m.g[v * n * n + std::size_t(i) * n + j];
        for (int k = 0; k < n; ++k) {
          RealField d = partial_derivative(grid, comp, k, order);
          dg[(std::size_t(k) * n + i) * n + j] = d;
          if (i != j) dg[(std::size_t(k) * n + j) * n + i] = std::move(d);
        }
      }
  }

  ChristoffelField out;
  out.n = n;
  out.v.resize(nodes * std::size_t(n) * n * n);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* gi = m.ginv_at(v);
    double* G = out.v.data() + v * std::size_t(n) * n * n;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) {
            const double t = dg[(std::size_t(i) * n + j) * n + l].v[v] +
                             dg[(std::size_t(j) * n + i) * n + l].v[v] -
                             dg[(std::size_t(l) * n + i) * n + j].v[v];
            s += gi[k * n + l] * t;
          }
          G[(std::size_t(k) * n + i) * n + j] = 0.5 * s;
        }
  }
  return out;
}

RealField scalar_curvature(const ChartGrid& grid, const MetricField& m,
                           int order) {
  const int n = m.n;
  const std::size_t nodes = grid.node_count();
  ChristoffelField G = christoffels(grid, m, order);

  // d_mu Gamma^r_{nu s}
  std::vector<RealField> dG(std::size_t(n) * n * n * n);
  {
    RealField comp(nodes);
    for (int r = 0; r < n; ++r)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          for (std::size_t v = 0; v < nodes; ++v)
            comp.v[v] = G.v[v * n * n * n + (std::size_t(r) * n + i) * n + j];
          for (int mu = 0; mu < n; ++mu)
            dG[((std::size_t(mu) * n + r) * n + i) * n + j] =
                partial_derivative(grid, comp, mu, order);
        }
  }

  RealField out(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* Gv = G.at(v);
    const double* gi = m.ginv_at(v);
    auto Gam = [&](int r, int i, int j) {
      return Gv[(std::size_t(r) * n + i) * n + j];
    };
    auto dGam = [&](int mu, int r, int i, int j) {
      return dG[((std::size_t(mu) * n + r) * n + i) * n + j].v[v];
    };
    double scal = 0.0;
    for (int s = 0; s < n; ++s)
      for (int nu = 0; nu < n; ++nu) {
        // Ricci_{s nu} = R^mu_{s mu nu}
        double ric = 0.0;
        for (int mu = 0; mu < n; ++mu) {
          double r = dGam(mu, mu, nu, s) - dGam(nu, mu, mu, s);
          for (int l = 0; l < n; ++l)
            r += Gam(mu, mu, l) * Gam(l, nu, s) -
                 Gam(mu, nu, l) * Gam(l, mu, s);
          ric += r;
        }
        scal += gi[s * n + nu] * ric;
      }
    out.v[v] = scal;
  }
  return out;
}

ScalarField codifferential(const ChartGrid& grid, const MetricField& m,
                           const std::vector<ScalarField>& alpha, int order) {
  const int n = m.n;
  const std::size_t nodes = grid.node_count();
  ScalarField out(nodes);
  ScalarField w(nodes);
  for (int i = 0; i < n; ++i) {
    // w^i = sqrt|g| g^{ij} alpha_j
    for (std::size_t v = 0; v < nodes; ++v) {
      cplx s = 0.0;
      const double* gi = m.ginv_at(v);
      for (int j = 0; j < n; ++j) s += gi[i * n + j] * alpha[j].v[v];
      w.v[v] = m.sqrt_det[v] * s;
    }
    ScalarField dw = partial_derivative(grid, w, i, order);
    for (std::size_t v = 0; v < nodes; ++v) out.v[v] += dw.v[v];
  }
  for (std::size_t v = 0; v < nodes; ++v) out.v[v] *= -1.0 / m.sqrt_det[v];
  return out;
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

cplx pairwise_sum(const cplx* x, std::size_t n) {
  if (n <= 8) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

cplx integrate(const ChartGrid& grid, const MetricField& m,
               const ScalarField& f) {
  const std::size_t nodes = grid.node_count();
  const double vol = grid.cell_volume();
  std::vector<cplx> w(nodes);
  for (std::size_t v = 0; v < nodes; ++v)
    w[v] = f.v[v] * (m.sqrt_det[v] * vol);
  return pairwise_sum(w.data(), nodes);
}

double integrate(const ChartGrid& grid, const MetricField& m,
                 const RealField& f) {
  const std::size_t nodes = grid.node_count();
  const double vol = grid.cell_volume();
  std::vector<double> w(nodes);
  for (std::size_t v = 0; v < nodes; ++v)
    w[v] = f.v[v] * (m.sqrt_det[v] * vol);
  return pairwise_sum(w.data(), nodes);
}

Geometry build_geometry(ChartGrid grid, MetricField metric, int order_metric,
                        int order_op) {
  Geometry g;
  g.grid = std::move(grid);
  g.metric = std::move(metric);
  g.order_metric = order_metric;
  g.order_op = order_op;
  g.frame = orthonormal_coframe(g.grid, g.metric);
  g.chris = christoffels(g.grid, g.metric, order_metric);

  // spin coefficients omega_{ab,i} = eta_a e^a_k (d_i e_b^k + Gamma^k_ij e_b^j),
  // projected onto the antisymmetric part
  const int n = g.grid.dim();
  const std::size_t nodes = g.grid.node_count();
  std::vector<RealField> de(std::size_t(n) * n * n);  // d_i e_b^k
  {
    RealField comp(nodes);
    for (int k = 0; k < n; ++k)
      for (int b = 0; b < n; ++b) {
        for (std::size_t v = 0; v < nodes; ++v)
          comp.v[v] = g.frame.einv[v * n * n + std::size_t(k) * n + b];
        for (int i = 0; i < n; ++i)
          de[(std::size_t(i) * n + k) * n + b] =
              partial_derivative(g.grid, comp, i, order_metric);
      }
  }
  g.omega.assign(nodes * std::size_t(n) * n * n, 0.0);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double* e = g.frame.e_at(v);
    const double* ei = g.frame.einv_at(v);
    const double* G = g.chris.at(v);
    double* om = g.omega.data() + v * std::size_t(n) * n * n;
    for (int i = 0; i < n; ++i) {
      double up[8][8];  // omega^a_{b,i}
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) {
            double t = de[(std::size_t(i) * n + k) * n + b].v[v];
            for (int j = 0; j < n; ++j)
              t += G[(std::size_t(k) * n + i) * n + j] *
                   ei[std::size_t(j) * n + b];
            s += e[std::size_t(a) * n + k] * t;
          }
          up[a][b] = s;
        }
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double low_ab = g.frame.eta[a] * up[a][b];
          const double low_ba = g.frame.eta[b] * up[b][a];
          om[(std::size_t(i) * n + a) * n + b] = 0.5 * (low_ab - low_ba);
        }
    }
  }
  return g;
}

Geometry build_geometry(ChartGrid grid, const MetricCallback& cb,
                        int order_metric, int order_op) {
  MetricField m = sample_metric(grid, cb);
  return build_geometry(std::move(grid), std::move(m), order_metric, order_op);
}

// ------------------------------ threading ------------------------------

namespace {
int g_threads = 1;
}

void set_thread_count(int threads) { g_threads = std::max(1, threads); }
int thread_count() { return g_threads; }

void parallel_nodes(std::size_t n,
                    const std::function<void(std::size_t, std::size_t)>& fn) {
  const int t = g_threads;
  if (t <= 1 || n < 2 * std::size_t(t)) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + t - 1) / t;
  for (int i = 0; i < t; ++i) {
    const std::size_t a = std::min(n, std::size_t(i) * chunk);
    const std::size_t b = std::min(n, a + chunk);
    if (a >= b) break;
    pool.emplace_back([&fn, a, b] { fn(a, b); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace df
