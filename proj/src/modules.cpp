#include "diracforge/modules.hpp"

#include <stdexcept>

namespace df {

namespace {

CMat pauli(int k) {
  CMat m(2, 2);
  switch (k) {
    case 0:
      m(0, 0) = 1.0;
      m(1, 1) = 1.0;
      break;
    case 1:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case 2:
      m(0, 1) = cplx(0.0, -1.0);
      m(1, 0) = cplx(0.0, 1.0);
      break;
    case 3:
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
  }
  return m;
}

int measure_herm(const CliffordModule& m, const CMat& x) {
  const double scale = std::max(1.0, max_abs(x));
  CMat adj = m.h_adjoint(x);
  if (max_abs(x - adj) < 1e-12 * scale) return +1;
  if (max_abs(x + adj) < 1e-12 * scale) return -1;
  return 0;
}

}  // namespace

void CliffordModule::finalize() {
  const int d = sig.dim();
  h_inv_ = inverse(h);

  blade_cache_.assign(d, CMat());
  for (int mask = 0; mask < d; ++mask) {
    CMat g = CMat::identity(rank);
    for (int k = 0; k < sig.n(); ++k)
      if (mask & (1 << k)) g = g * gamma[k];
    blade_cache_[mask] = std::move(g);
  }

  // quantized blades through the inverse symbol map
  quant_cache_.assign(d, CMat());
  const CliffordAlgebra& alg = algebra(sig);
  for (int mask = 0; mask < d; ++mask) {
    Multivector a = alg.inverse_symbol(ExteriorElement::blade(sig, mask));
    CMat g(rank, rank);
    for (int i = 0; i < d; ++i)
      if (a.coeff[i] != cplx(0.0)) g += a.coeff[i] * blade_cache_[i];
    quant_cache_[mask] = std::move(g);
  }

  gamma_herm.clear();
  for (const CMat& g : gamma) gamma_herm.push_back(measure_herm(*this, g));
  tau_herm = measure_herm(*this, tau);
}

const CMat& CliffordModule::gamma_blade(std::uint32_t mask) const {
  return blade_cache_[mask];
}

const CMat& CliffordModule::quantize_blade(std::uint32_t mask) const {
  return quant_cache_[mask];
}

CMat CliffordModule::h_adjoint(const CMat& x) const {
  return h_inv_ * adjoint(x) * h;
}

CliffordModule spinor_module(int p, int q, int eps) {
  const int n = p + q;
  if (n < 1 || n > 4)
    throw std::invalid_argument("spinor built-in covers 1 <= p+q <= 4");
  Signature sig(p, q, eps, true);

  std::vector<CMat> base;
  CMat tau;
  if (n == 1) {
    base = {pauli(3)};
    tau = pauli(1);
  } else if (n == 2) {
    base = {pauli(1), pauli(2)};
    tau = pauli(3);
  } else {
    base = {kron(pauli(1), pauli(1)), kron(pauli(1), pauli(2)),
            kron(pauli(1), pauli(3))};
    if (n == 4) base.push_back(kron(pauli(2), pauli(0)));
    tau = kron(pauli(3), pauli(0));
  }

  CliffordModule m;
  m.sig = sig;
  m.rank = base[0].rows();
  // scale so gamma_a^2 = eps eta_aa: base generators square to +Id
  for (int a = 0; a < n; ++a) {
    const cplx c = (eps * sig.eta(a) > 0) ? cplx(1.0) : cplx(0.0, 1.0);
    m.gamma.push_back(c * base[a]);
  }
  m.tau = tau;
  m.h = CMat::identity(m.rank);
  m.kind = ModuleKind::Matrix;
  m.name = "spinor(" + std::to_string(p) + "," + std::to_string(q) + ")";
  m.finalize();
  return m;
}

CliffordModule study_module(int eps) {
  CliffordModule m = spinor_module(1, 0, eps);
  m.name = "study";
  return m;
}

CliffordModule clifford_regular_module(int p, int q, int eps) {
  Signature sig(p, q, eps, true);
  const CliffordAlgebra& alg = algebra(sig);
  const int d = sig.dim();

  CliffordModule m;
  m.sig = sig;
  m.rank = d;
  for (int k = 0; k < sig.n(); ++k)
    m.gamma.push_back(alg.left_mult_matrix(Multivector::generator(sig, k)));
  m.tau = CMat(d, d);
  m.h = CMat(d, d);
  for (int mask = 0; mask < d; ++mask) {
    m.tau(mask, mask) = double(alg.parity(mask));
    m.h(mask, mask) = alg.eta_blade(mask);
  }
  m.kind = ModuleKind::CliffordBundle;
  m.name = "clifford(" + std::to_string(p) + "," + std::to_string(q) + ")";
  m.finalize();
  return m;
}

CliffordModule builtin_module(const std::string& name, int p, int q, int eps) {
  if (name == "study") return study_module(eps);
  if (name == "spinor") return spinor_module(p, q, eps);
  if (name == "clifford") return clifford_regular_module(p, q, eps);
  throw std::invalid_argument("unknown module built-in: " + name);
}

const Check* ModuleReport::worst() const {
  const Check* w = nullptr;
  for (const auto& c : checks)
    if (!w || c.violation > w->violation) w = &c;
  return w;
}

ModuleReport verify_module(const CliffordModule& m) {
  ModuleReport rep;
  const int n = m.sig.n();
  const int N = m.rank;
  auto push = [&rep](std::string name, double v) {
    rep.checks.push_back({std::move(name), v});
    rep.max_violation = std::max(rep.max_violation, v);
  };

  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      CMat lhs = anticommutator(m.gamma[a], m.gamma[b]);
      if (a == b) {
        const double target = 2.0 * m.sig.eps * m.sig.eta(a);
        lhs -= target * CMat::identity(N);
      }
      push("relation(" + std::to_string(a + 1) + "," + std::to_string(b + 1) +
               ")",
           max_abs(lhs));
    }

  push("tau^2", max_abs(m.tau * m.tau - CMat::identity(N)));
  for (int a = 0; a < n; ++a)
    push("odd(" + std::to_string(a + 1) + ")",
         max_abs(anticommutator(m.tau, m.gamma[a])));

  const double dh = std::abs(determinant(m.h));
  push("h nondegenerate", dh > 1e-12 ? 0.0 : 1.0);
  push("h hermitian", max_abs(m.h - adjoint(m.h)));

  for (int a = 0; a < n; ++a) {
    CMat adj = m.h_adjoint(m.gamma[a]);
    const double v = std::min(max_abs(m.gamma[a] - adj),
                              max_abs(m.gamma[a] + adj));
    push("gamma(" + std::to_string(a + 1) + ") h-(anti)hermitian", v);
  }
  {
    CMat adj = m.h_adjoint(m.tau);
    push("tau h-(anti)hermitian",
         std::min(max_abs(m.tau - adj), max_abs(m.tau + adj)));
  }
  return rep;
}

CMat algebra_action(const CliffordModule& m, const Multivector& a) {
  if (a.sig != m.sig) throw std::invalid_argument("signature mismatch");
  CMat out(m.rank, m.rank);
  for (int mask = 0; mask < m.sig.dim(); ++mask)
    if (a.coeff[mask] != cplx(0.0))
      out += a.coeff[mask] * m.gamma_blade(mask);
  return out;
}

void EndoForm::add(std::uint32_t mask, CMat constant) {
  terms.push_back({mask, {std::move(constant)}});
}

void EndoForm::add_field(std::uint32_t mask, std::vector<CMat> per_node) {
  if (per_node.size() != nodes)
    throw std::invalid_argument("EndoForm field term has wrong node count");
  terms.push_back({mask, std::move(per_node)});
}

std::vector<CMat> quantize(const CliffordModule& m, const EndoForm& w) {
  if (w.sig != m.sig || w.rank != m.rank)
    throw std::invalid_argument("EndoForm does not match module");
  std::vector<CMat> out(w.nodes, CMat::zero(m.rank));
  for (const auto& term : w.terms) {
    const CMat& slashed = m.quantize_blade(term.mask);
    if (term.value.size() == 1) {
      CMat pre = slashed * term.value[0];
      for (auto& o : out) o += pre;
    } else {
      for (std::size_t v = 0; v < w.nodes; ++v)
        out[v] += slashed * term.value[v];
    }
  }
  return out;
}

std::vector<cplx> quantized_trace(const CliffordModule& m, const EndoForm& w) {
  std::vector<CMat> q = quantize(m, w);
  std::vector<cplx> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = trace(q[i]);
  return out;
}

BiModule clifford_twist(const CliffordModule& m) {
  const CliffordAlgebra& alg = algebra(m.sig);
  const int d = m.sig.dim();
  const int N = m.rank;

  CMat id_cl = CMat::identity(d);
  CMat h_cl(d, d);
  for (int mask = 0; mask < d; ++mask) h_cl(mask, mask) = alg.eta_blade(mask);

  BiModule out;
  out.module.sig = m.sig;
  out.module.rank = N * d;
  for (int k = 0; k < m.sig.n(); ++k)
    out.module.gamma.push_back(kron(m.gamma[k], id_cl));
  out.module.tau = kron(m.tau, id_cl);
  out.module.h = kron(m.h, h_cl);
  out.module.kind = m.kind;
  out.module.name = m.name + " (x) Cl";
  out.module.finalize();

  for (int k = 0; k < m.sig.n(); ++k)
    out.right_gen.push_back(kron(CMat::identity(N),
                                 alg.right_mult_matrix(
                                     Multivector::generator(m.sig, k))));

  out.embed = CMat(N * d, N);
  for (int i = 0; i < N; ++i) out.embed(i * d + 0, i) = 1.0;
  return out;
}

CliffordModule twisted_module(const CliffordModule& m1, int dim2,
                              const CMat& tau2, const CMat& h2,
                              const std::string& name) {
  CMat id2 = CMat::identity(dim2);
  CliffordModule out;
  out.sig = m1.sig;
  out.rank = m1.rank * dim2;
  for (const CMat& g : m1.gamma) out.gamma.push_back(kron(g, id2));
  out.tau = kron(m1.tau, tau2);
  out.h = kron(m1.h, h2);
  out.kind = m1.kind;
  out.name = name;
  out.finalize();
  return out;
}

CommutantResult commutant_test(const CliffordModule& m, const CMat& B,
                               double tol) {
  CommutantResult r;
  for (const CMat& g : m.gamma)
    r.max_violation = std::max(r.max_violation, max_abs(commutator(B, g)));
  r.commutes = r.max_violation < tol;
  return r;
}

}  // namespace df
