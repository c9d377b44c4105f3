#pragma once

// Complexified Clifford algebra Cl(p,q) with configurable product sign
// convention eps: for orthonormal degree-1 generators
//
//   e_k e_l + e_l e_k = 2 eps eta_kl,   eta = diag(+1 x p, -1 x q).
//
// Blades are indexed by bitmask (bit k set = generator e_{k+1} present,
// factors ordered by increasing k). The Grassmann algebra shares the table
// shape; its product is the wedge. The symbol map and its inverse identify
// the two via the canonical Clifford action
//
//   gamma_Cl(alpha) w = eps int(alpha#) w + ext(alpha) w .

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "diracforge/linalg.hpp"

namespace df {

struct Signature {
  int p = 0;
  int q = 0;
  int eps = +1;  // sign in the defining relation, +1 or -1

  Signature() = default;
  // Validates; warns (stderr + last_warning) when p - q = 1 mod 4 unless
  // suppressed. Throws on n < 1, n > cap, or eps not +-1.
  Signature(int p_, int q_, int eps_, bool suppress_warnings = false,
            int cap = 6);

  int n() const { return p + q; }
  int dim() const { return 1 << n(); }
  int eta(int k) const { return k < p ? +1 : -1; }  // 0-based direction
  bool operator==(const Signature& o) const {
    return p == o.p && q == o.q && eps == o.eps;
  }
  bool operator!=(const Signature& o) const { return !(*this == o); }

  static const std::string& last_warning();
};

struct Multivector {
  Signature sig;
  std::vector<cplx> coeff;  // length 2^n, blade bitmask index

  Multivector() = default;
  explicit Multivector(const Signature& s) : sig(s), coeff(s.dim()) {}
  static Multivector unit(const Signature& s) {
    Multivector m(s);
    m.coeff[0] = 1.0;
    return m;
  }
  static Multivector generator(const Signature& s, int k) {
    Multivector m(s);
    m.coeff[std::size_t(1) << k] = 1.0;
    return m;
  }
  static Multivector blade(const Signature& s, std::uint32_t mask,
                           cplx c = 1.0) {
    Multivector m(s);
    m.coeff[mask] = c;
    return m;
  }

  Multivector& operator+=(const Multivector& o);
  Multivector& operator-=(const Multivector& o);
  Multivector& operator*=(cplx s);
  friend Multivector operator+(Multivector a, const Multivector& b) {
    return a += b;
  }
  friend Multivector operator-(Multivector a, const Multivector& b) {
    return a -= b;
  }
  friend Multivector operator*(cplx s, Multivector a) { return a *= s; }
};

// Same coefficient shape, wedge semantics.
struct ExteriorElement {
  Signature sig;
  std::vector<cplx> coeff;

  ExteriorElement() = default;
  explicit ExteriorElement(const Signature& s) : sig(s), coeff(s.dim()) {}
  static ExteriorElement unit(const Signature& s) {
    ExteriorElement w(s);
    w.coeff[0] = 1.0;
    return w;
  }
  static ExteriorElement blade(const Signature& s, std::uint32_t mask,
                               cplx c = 1.0) {
    ExteriorElement w(s);
    w.coeff[mask] = c;
    return w;
  }
};

inline int blade_grade(std::uint32_t mask) { return __builtin_popcount(mask); }

// Sign from reordering the concatenation of two index lists into canonical
// order: (-1)^{#{(i in a, j in b) : j < i}}.
int reorder_sign(std::uint32_t a, std::uint32_t b);

// Per-signature context with cached product table and symbol matrices.
class CliffordAlgebra {
 public:
  explicit CliffordAlgebra(const Signature& s);

  const Signature& signature() const { return sig_; }
  int dim() const { return sig_.dim(); }

  // blade * blade -> (mask, +-1 coefficient)
  struct BladeProduct {
    std::uint32_t mask;
    double sign;
  };
  BladeProduct blade_product(std::uint32_t a, std::uint32_t b) const {
    return table_[(std::size_t(a) << sig_.n()) | b];
  }

  Multivector product(const Multivector& a, const Multivector& b) const;
  ExteriorElement wedge(const ExteriorElement& a,
                        const ExteriorElement& b) const;

  // product of +-eta over the blade's directions (Gram determinant of the
  // orthonormal blade); extends g* blade-wise
  double eta_blade(std::uint32_t mask) const { return eta_blade_[mask]; }

  // gamma_Cl(alpha) w for a degree-1 covector given by frame components
  ExteriorElement canonical_action(const std::vector<cplx>& alpha,
                                   const ExteriorElement& w) const;

  ExteriorElement symbol(const Multivector& a) const;
  Multivector inverse_symbol(const ExteriorElement& w) const;

  // <a,b> = sum_I eta_I a_I b_I (complex-bilinear metric extension)
  cplx metric_inner(const std::vector<cplx>& a,
                    const std::vector<cplx>& b) const;

  // sesquilinear version used as the fiber hermitian structure of Cl
  cplx hermitian_inner(const std::vector<cplx>& a,
                       const std::vector<cplx>& b) const;

  // matrices of left / right Clifford multiplication on the blade basis
  CMat left_mult_matrix(const Multivector& a) const;
  CMat right_mult_matrix(const Multivector& a) const;

  // grading involution on blades: (-1)^grade
  int parity(std::uint32_t mask) const { return blade_grade(mask) & 1 ? -1 : 1; }

 private:
  Signature sig_;
  std::vector<BladeProduct> table_;
  std::vector<double> eta_blade_;
  CMat symbol_mat_, symbol_inv_;
};

// Shared per-signature cache.
const CliffordAlgebra& algebra(const Signature& s);

// ------------------------- spec-level operations -------------------------

Multivector clifford_product(const Multivector& a, const Multivector& b);
ExteriorElement wedge_product(const ExteriorElement& a,
                              const ExteriorElement& b);
ExteriorElement symbol_map(const Multivector& a);
Multivector inverse_symbol_map(const ExteriorElement& w);
ExteriorElement canonical_clifford_action(const std::vector<cplx>& alpha,
                                          const ExteriorElement& w);
cplx grassmann_inner_product(const ExteriorElement& a,
                             const ExteriorElement& b);

// musical isomorphisms for a metric block g (throws on singular g)
std::vector<double> musical_flat(const std::vector<double>& v, const RMat& g);
std::vector<double> musical_sharp(const std::vector<double>& a, const RMat& g);

}  // namespace df
