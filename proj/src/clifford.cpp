#include "diracforge/clifford.hpp"

#include <iostream>
#include <map>
#include <mutex>
#include <stdexcept>

namespace df {

namespace {
std::string g_last_warning;
}

const std::string& Signature::last_warning() { return g_last_warning; }

Signature::Signature(int p_, int q_, int eps_, bool suppress_warnings, int cap)
    : p(p_), q(q_), eps(eps_) {
  if (p < 0 || q < 0 || n() < 1)
    throw std::invalid_argument("signature needs p,q >= 0 and p+q >= 1");
  if (n() > cap)
    throw std::invalid_argument("signature dimension exceeds cap " +
                                std::to_string(cap));
  if (eps != 1 && eps != -1)
    throw std::invalid_argument("eps must be +1 or -1");
  // s = p - q = 1 mod 4 is outside the stated setting; flag it but carry on
  const int s = ((p - q) % 4 + 4) % 4;
  if (s == 1) {
    g_last_warning = "signature index p-q = 1 mod 4 (p=" + std::to_string(p) +
                     ", q=" + std::to_string(q) + ")";
    if (!suppress_warnings) std::cerr << "warning: " << g_last_warning << "\n";
  }
}

Multivector& Multivector::operator+=(const Multivector& o) {
  if (sig != o.sig) throw std::invalid_argument("signature mismatch");
  for (std::size_t i = 0; i < coeff.size(); ++i) coeff[i] += o.coeff[i];
  return *this;
}
Multivector& Multivector::operator-=(const Multivector& o) {
  if (sig != o.sig) throw std::invalid_argument("signature mismatch");
  for (std::size_t i = 0; i < coeff.size(); ++i) coeff[i] -= o.coeff[i];
  return *this;
}
Multivector& Multivector::operator*=(cplx s) {
  for (auto& c : coeff) c *= s;
  return *this;
}

int reorder_sign(std::uint32_t a, std::uint32_t b) {
  int count = 0;
  a >>= 1;
  while (a) {
    count += __builtin_popcount(a & b);
    a >>= 1;
  }
  return (count & 1) ? -1 : 1;
}

CliffordAlgebra::CliffordAlgebra(const Signature& s) : sig_(s) {
  const int n = sig_.n();
  const int d = sig_.dim();
  table_.resize(std::size_t(d) * d);
  eta_blade_.assign(d, 1.0);
  for (int m = 0; m < d; ++m)
    for (int k = 0; k < n; ++k)
      if (m & (1 << k)) eta_blade_[m] *= sig_.eta(k);

  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double sign = reorder_sign(a, b);
      std::uint32_t common = std::uint32_t(a) & std::uint32_t(b);
      for (int k = 0; k < n; ++k)
        if (common & (1u << k)) sign *= sig_.eps * sig_.eta(k);
      table_[(std::size_t(a) << n) | b] = {std::uint32_t(a) ^ std::uint32_t(b),
                                           sign};
    }

  // symbol matrix on the blade basis and its inverse
  symbol_mat_ = CMat(d, d);
  for (int j = 0; j < d; ++j) {
    Multivector bj = Multivector::blade(sig_, j);
    ExteriorElement col = symbol(bj);
    for (int i = 0; i < d; ++i) symbol_mat_(i, j) = col.coeff[i];
  }
  symbol_inv_ = inverse(symbol_mat_);
}

Multivector CliffordAlgebra::product(const Multivector& a,
                                     const Multivector& b) const {
  Multivector out(sig_);
  const int d = dim();
  for (int i = 0; i < d; ++i) {
    const cplx ai = a.coeff[i];
    if (ai == cplx(0.0)) continue;
    for (int j = 0; j < d; ++j) {
      const cplx bj = b.coeff[j];
      if (bj == cplx(0.0)) continue;
      const BladeProduct bp = blade_product(i, j);
      out.coeff[bp.mask] += bp.sign * ai * bj;
    }
  }
  return out;
}

ExteriorElement CliffordAlgebra::wedge(const ExteriorElement& a,
                                       const ExteriorElement& b) const {
  ExteriorElement out(sig_);
  const int d = dim();
  for (int i = 0; i < d; ++i) {
    const cplx ai = a.coeff[i];
    if (ai == cplx(0.0)) continue;
    for (int j = 0; j < d; ++j) {
      if (std::uint32_t(i) & std::uint32_t(j)) continue;  // repeated factor
      const cplx bj = b.coeff[j];
      if (bj == cplx(0.0)) continue;
      out.coeff[i ^ j] += double(reorder_sign(i, j)) * ai * bj;
    }
  }
  return out;
}

ExteriorElement CliffordAlgebra::canonical_action(
    const std::vector<cplx>& alpha, const ExteriorElement& w) const {
  const int n = sig_.n();
  const int d = dim();
  ExteriorElement out(sig_);
  for (int k = 0; k < n; ++k) {
    const cplx ak = alpha[k];
    if (ak == cplx(0.0)) continue;
    const std::uint32_t bit = 1u << k;
    const std::uint32_t below = bit - 1;
    const double ieta = double(sig_.eps) * sig_.eta(k);
    for (int m = 0; m < d; ++m) {
      const cplx wm = w.coeff[m];
      if (wm == cplx(0.0)) continue;
      const double sgn = (__builtin_popcount(m & below) & 1) ? -1.0 : 1.0;
      if (m & bit)
        out.coeff[m & ~bit] += ieta * sgn * ak * wm;  // eps int(alpha#)
      else
        out.coeff[m | bit] += sgn * ak * wm;  // ext(alpha)
    }
  }
  return out;
}

ExteriorElement CliffordAlgebra::symbol(const Multivector& a) const {
  const int n = sig_.n();
  ExteriorElement out(sig_);
  std::vector<cplx> ek(n);
  for (int m = 0; m < dim(); ++m) {
    const cplx am = a.coeff[m];
    if (am == cplx(0.0)) continue;
    ExteriorElement w = ExteriorElement::unit(sig_);
    // Gamma(e_{i1}...e_{ik}) 1 applies the rightmost (largest index) first
    for (int k = n - 1; k >= 0; --k) {
      if (!(m & (1 << k))) continue;
      std::fill(ek.begin(), ek.end(), cplx(0.0));
      ek[k] = 1.0;
      w = canonical_action(ek, w);
    }
    for (int i = 0; i < dim(); ++i) out.coeff[i] += am * w.coeff[i];
  }
  return out;
}

Multivector CliffordAlgebra::inverse_symbol(const ExteriorElement& w) const {
  Multivector out(sig_);
  for (int i = 0; i < dim(); ++i) {
    cplx acc = 0.0;
    for (int j = 0; j < dim(); ++j) acc += symbol_inv_(i, j) * w.coeff[j];
    out.coeff[i] = acc;
  }
  return out;
}

cplx CliffordAlgebra::metric_inner(const std::vector<cplx>& a,
                                   const std::vector<cplx>& b) const {
  cplx acc = 0.0;
  for (int i = 0; i < dim(); ++i) acc += eta_blade_[i] * a[i] * b[i];
  return acc;
}

cplx CliffordAlgebra::hermitian_inner(const std::vector<cplx>& a,
                                      const std::vector<cplx>& b) const {
  cplx acc = 0.0;
  for (int i = 0; i < dim(); ++i)
    acc += eta_blade_[i] * std::conj(a[i]) * b[i];
  return acc;
}

CMat CliffordAlgebra::left_mult_matrix(const Multivector& a) const {
  const int d = dim();
  CMat out(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      const cplx ai = a.coeff[i];
      if (ai == cplx(0.0)) continue;
      const BladeProduct bp = blade_product(i, j);
      out(bp.mask, j) += bp.sign * ai;
    }
  }
  return out;
}

CMat CliffordAlgebra::right_mult_matrix(const Multivector& a) const {
  const int d = dim();
  CMat out(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      const cplx ai = a.coeff[i];
      if (ai == cplx(0.0)) continue;
      const BladeProduct bp = blade_product(j, i);
      out(bp.mask, j) += bp.sign * ai;
    }
  }
  return out;
}

namespace {
std::map<std::tuple<int, int, int>, std::unique_ptr<CliffordAlgebra>> g_cache;
std::mutex g_cache_mutex;
}  // namespace

const CliffordAlgebra& algebra(const Signature& s) {
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto key = std::make_tuple(s.p, s.q, s.eps);
  auto it = g_cache.find(key);
  if (it == g_cache.end())
    it = g_cache.emplace(key, std::make_unique<CliffordAlgebra>(s)).first;
  return *it->second;
}

Multivector clifford_product(const Multivector& a, const Multivector& b) {
  if (a.sig != b.sig) throw std::invalid_argument("signature mismatch");
  return algebra(a.sig).product(a, b);
}

ExteriorElement wedge_product(const ExteriorElement& a,
                              const ExteriorElement& b) {
  if (a.sig != b.sig) throw std::invalid_argument("signature mismatch");
  return algebra(a.sig).wedge(a, b);
}

ExteriorElement symbol_map(const Multivector& a) {
  return algebra(a.sig).symbol(a);
}

Multivector inverse_symbol_map(const ExteriorElement& w) {
  return algebra(w.sig).inverse_symbol(w);
}

ExteriorElement canonical_clifford_action(const std::vector<cplx>& alpha,
                                          const ExteriorElement& w) {
  return algebra(w.sig).canonical_action(alpha, w);
}

cplx grassmann_inner_product(const ExteriorElement& a,
                             const ExteriorElement& b) {
  if (a.sig != b.sig) throw std::invalid_argument("signature mismatch");
  return algebra(a.sig).metric_inner(a.coeff, b.coeff);
}

std::vector<double> musical_flat(const std::vector<double>& v, const RMat& g) {
  const int n = g.rows();
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] += g(i, j) * v[j];
  return out;
}

std::vector<double> musical_sharp(const std::vector<double>& a,
                                  const RMat& g) {
  RMat ginv;
  double det = 0.0;
  if (!r_invert(g, ginv, det) || det == 0.0)
    throw std::invalid_argument("singular metric");
  return musical_flat(a, ginv);
}

}  // namespace df
