#pragma once

// Matrix representations of odd hermitian Clifford module bundles: generator
// matrices gamma_a with
//
//   gamma_a gamma_b + gamma_b gamma_a = 2 eps eta_ab Id,
//   tau^2 = Id,  tau gamma_a = -gamma_a tau,
//
// a hermitian form h (not necessarily positive definite; each gamma_a and tau
// is h-hermitian or h-anti-hermitian, recorded as a measured flag), the
// induced algebra homomorphism, the quantization map on End-valued forms, and
// the Clifford twist E' = E (x) Cl with its commuting right action.

#include <cstdint>
#include <string>
#include <vector>

#include "diracforge/clifford.hpp"
#include "diracforge/linalg.hpp"

namespace df {

enum class ModuleKind {
  Matrix,          // explicit generator matrices
  CliffordBundle,  // left-regular action on the blade space
};

struct CliffordModule {
  Signature sig;
  int rank = 0;
  std::vector<CMat> gamma;  // one N x N generator per orthonormal direction
  CMat tau;
  CMat h;
  ModuleKind kind = ModuleKind::Matrix;
  std::string name;

  // measured against h: +1 hermitian, -1 anti-hermitian, 0 neither
  std::vector<int> gamma_herm;
  int tau_herm = 0;

  // Gamma(blade mask): product of generators in increasing index order
  const CMat& gamma_blade(std::uint32_t mask) const;
  // Gamma(sigma^{-1}(wedge blade mask)); equals gamma_blade on orthonormal
  // frames but is computed through the inverse symbol map
  const CMat& quantize_blade(std::uint32_t mask) const;

  // h-adjoint h^{-1} X^dagger h
  CMat h_adjoint(const CMat& x) const;

  void finalize();  // builds caches + measures hermiticity flags

 private:
  std::vector<CMat> blade_cache_;
  std::vector<CMat> quant_cache_;
  CMat h_inv_;
};

// ---- built-ins ----
CliffordModule study_module(int eps);                // Cl(1,0), rank 2
CliffordModule spinor_module(int p, int q, int eps); // n <= 4
CliffordModule clifford_regular_module(int p, int q, int eps);  // rank 2^n
// by name: "study", "spinor", "clifford"
CliffordModule builtin_module(const std::string& name, int p, int q, int eps);

// ---- verification ----
struct Check {
  std::string name;
  double violation = 0.0;
};

struct ModuleReport {
  std::vector<Check> checks;
  double max_violation = 0.0;
  bool passed(double tol = 1e-12) const { return max_violation < tol; }
  const Check* worst() const;
};

ModuleReport verify_module(const CliffordModule& m);

// unique unital algebra homomorphism extending the generator map
CMat algebra_action(const CliffordModule& m, const Multivector& a);

// ---- End(E)-valued exterior forms and the quantization map ----

// Terms keyed by blade mask; each term is one matrix per node (nodes == 1
// for constant forms). Matrices row-major N x N.
struct EndoForm {
  Signature sig;
  int rank = 0;
  std::size_t nodes = 1;
  struct Term {
    std::uint32_t mask;
    std::vector<CMat> value;  // size 1 or nodes
  };
  std::vector<Term> terms;

  EndoForm(const Signature& s, int N, std::size_t nodes_ = 1)
      : sig(s), rank(N), nodes(nodes_) {}
  void add(std::uint32_t mask, CMat constant);
  void add_field(std::uint32_t mask, std::vector<CMat> per_node);
};

// delta_gamma: one matrix per node (size 1 for constant input)
std::vector<CMat> quantize(const CliffordModule& m, const EndoForm& w);
// tr_gamma = tr_E . delta_gamma
std::vector<cplx> quantized_trace(const CliffordModule& m, const EndoForm& w);

// ---- Clifford twist E' = E (x) Cl ----
struct BiModule {
  CliffordModule module;         // left action gamma (x) Id, tau (x) Id, h (x) h_Cl
  std::vector<CMat> right_gen;   // Id (x) (right multiplication by e_a)
  CMat embed;                    // iota(z) = z (x) 1_Cl, (N 2^n) x N
};

BiModule clifford_twist(const CliffordModule& m);

// twist by an auxiliary graded fiber: gamma (x) Id, tau1 (x) tau2, h1 (x) h2
CliffordModule twisted_module(const CliffordModule& m1, int dim2,
                              const CMat& tau2, const CMat& h2,
                              const std::string& name = "twisted");

struct CommutantResult {
  bool commutes = false;
  double max_violation = 0.0;
};
CommutantResult commutant_test(const CliffordModule& m, const CMat& B,
                               double tol = 1e-12);

}  // namespace df
