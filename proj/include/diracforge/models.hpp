#pragma once

// Model constructions on top of the Dirac machinery: sigma-model fields from
// maps into a target manifold, the geodesic energy special case, Yang-Mills
// fields built from twisting curvature data, the combined field on the common
// Clifford extension, and the Higgs-bundle metric identity.
//
// The unresolved overall signs and rank constants of the proportionality
// identities are *measured* and reported next to their candidate values,
// never hard-coded.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "diracforge/dirac.hpp"

namespace df {

// ---------------------------------------------------------------- targets

// pointwise target-manifold geometry (no grid; evaluated along maps)
struct TargetGeometry {
  int n = 0;
  std::string name;
  std::function<void(const double*, RMat&)> g;
  std::function<void(const double*, double*)> dg;      // d_k g_ij, [k][i][j]
  // frame spin coefficients omega_{ab,k}(y), layout [k][a][b]; null = flat
  std::function<void(const double*, double*)> omega;
};

TargetGeometry flat_target(int n);
TargetGeometry sphere_target(double radius);  // polar chart (theta, phi)

// orthonormal coframe rows e^a_i of the target metric at a point
void target_coframe(const TargetGeometry& t, const double* y, RMat& e,
                    int* eta);

// pointwise Christoffels from the analytic metric derivative
void target_christoffels(const TargetGeometry& t, const double* y,
                         double* gamma /* [k][i][j] */);

// ------------------------------------------------------------- sigma maps

struct SigmaMap {
  std::shared_ptr<const Geometry> base;
  TargetGeometry target;
  std::vector<double> phi;        // nodes * n2 target coordinates
  std::vector<double> dphi;       // nodes * n1 * n2, d_i phi^mu by FD
  // phi_a^b: orthonormal base frame a, orthonormal target frame b
  std::vector<double> phi_frame;  // nodes * n1 * n2
  std::vector<int> target_eta;    // target frame signs
};

SigmaMap build_sigma_map(
    std::shared_ptr<const Geometry> base, TargetGeometry target,
    const std::function<void(const double*, double*)>& map);

// |dphi|^2 via orthonormal frames; the coordinate-route evaluation must agree
RealField map_energy(const SigmaMap& sm);
RealField map_energy_coordinates(const SigmaMap& sm);

// --------------------------------------------------- composite Dirac models

// proportionality measurement: node-wise ratio of two scalar fields
struct RatioReport {
  bool degenerate = false;   // denominator vanished everywhere
  double ratio = 0.0;        // mean over admissible nodes
  double spread = 0.0;       // max |ratio_node - ratio|
  std::size_t used_nodes = 0;
};
RatioReport measure_ratio(const RealField& num, const RealField& den,
                          double den_floor = 1e-12);

struct SigmaModel {
  std::shared_ptr<const Geometry> geom;
  std::shared_ptr<const CliffordModule> E1;   // base module
  std::shared_ptr<const CliffordModule> E2;   // target-signature module
  std::shared_ptr<const CliffordModule> E;    // E1 (x) E2 fiber
  std::shared_ptr<const CliffordModule> Etw;  // Clifford twist of E
  std::vector<CMat> right_gen;                // right Cl factors on Etw
  SigmaMap map;
  std::vector<MatrixField> chi;  // chi_a on E per base frame direction
  MatrixField phi_d;             // on Etw
  CliffordConnection conn;       // canonical connection on Etw
  DiracOperator dirac;           // simple type with tau' phi_d
};

SigmaModel build_sigma_model(
    std::shared_ptr<const Geometry> base, const CliffordModule& e1,
    TargetGeometry target, const CliffordModule& e2,
    const std::function<void(const double*, double*)>& map);

// |phi_D|^2(t) = eps1 sum_ab eta^ab tr_E(chi_a^* chi_b), h-adjoints
RealField sigma_phi_norm_sq(const SigmaModel& sm);
// tr_{E'}((tau' phi_D)^2)(t): the combination entering the universal action
RealField sigma_action_density(const SigmaModel& sm);

struct SigmaNormReport {
  RatioReport norm_ratio;    // |phi_D|^2 / |dphi|^2
  RatioReport action_ratio;  // tr (tau phi)^2 / |dphi|^2
  double candidate_sum = 0.0;      // +-eps1 eps2 (N1+N2) reference
  double candidate_product = 0.0;  // +-eps1 eps2 N1 N2 reference
};
SigmaNormReport sigma_norm_check(const SigmaModel& sm);

struct ActionBreakdown {
  cplx pipeline = 0.0;       // universal action of the assembled operator
  double eh_term = 0.0;      // -eps1 rk(E')/4 int scal
  double potential_term = 0.0;  // int tr (tau' phi_D)^2 (algebraic route)
  cplx fermion_term = 0.0;
  cplx total_formula = 0.0;  // eh + potential + fermion
};

// both evaluation routes of the total Dirac action; psi lives on Etw
ActionBreakdown dirac_harmonic_action(const SigmaModel& sm,
                                      const SectionField& psi);

// embedding z (x) 1: fermion bilinear on E' equals the one on E
struct EmbeddingCheck {
  cplx on_twist = 0.0;
  cplx on_base = 0.0;
};
EmbeddingCheck embedded_fermion_check(const SigmaModel& sm,
                                      const SectionField& z_on_E);

// ---------------------------------------------------------------- geodesics

using Path = std::vector<std::vector<double>>;  // nodes x target dim

double geodesic_energy(const Path& path, const TargetGeometry& g2);

struct GeodesicResult {
  Path path;
  double energy = 0.0;
  bool converged = false;
  bool degenerate_family = false;  // near-antipodal warning
  int iterations = 0;
  double grad_norm = 0.0;
};

GeodesicResult geodesic_minimize(const std::vector<double>& a,
                                 const std::vector<double>& b, int nodes,
                                 const TargetGeometry& g2,
                                 const Path* init = nullptr,
                                 int max_iterations = 100000,
                                 double grad_tol = 1e-8);

// ------------------------------------------------------------- study demo

struct StudyDemoReport {
  double dirac_vs_fd = 0.0;       // |(d/ + Gamma) psi - componentwise form|
  cplx universal_action = 0.0;    // pipeline I_D
  double geodesic_energy = 0.0;   // int g2(phi', phi') dt
  double action_ratio = 0.0;      // universal / geodesic energy
  double fermion_flip = 0.0;      // |(D psi)_2 + (d/dt + Gamma) psi_2|
};
StudyDemoReport study_dirac_demo(int grid_nodes, const TargetGeometry& target,
                                 const std::function<void(double, double*)>& curve);

// --------------------------------------------------------------- Yang-Mills

// antisymmetric frame-component curvature data, commutant-valued on the
// module it twists
struct GaugeCurvature {
  int n = 0;  // base dimension
  std::vector<MatrixField> comp;  // index a*n+b, only a<b stored
  const MatrixField& at(int a, int b) const { return comp[a * n + b]; }
};

// builds F_ab = i f_ab Id (abelian, constant)
GaugeCurvature constant_abelian_curvature(const Geometry& g, int rank,
                                          const RMat& f);
// validation: symmetric part rejected, commutant membership enforced
void validate_curvature(const GaugeCurvature& F, const CliffordModule& on);

struct YmModel {
  std::shared_ptr<const Geometry> geom;
  std::shared_ptr<const CliffordModule> E1, E2, E, Etw;
  std::vector<MatrixField> chi;   // on E
  MatrixField phi_d;              // on Etw
  std::vector<MatrixField> F_on_E;  // F_ab lifted to E, a<b at a*n+b
  CliffordConnection conn;
  DiracOperator dirac;
};

// F1 twists E1, F2 twists E2 (either may be empty)
YmModel build_ym_model(std::shared_ptr<const Geometry> geom,
                       const CliffordModule& e1, const CliffordModule& e2,
                       const GaugeCurvature* F1, const GaugeCurvature* F2);

// |F_A|^2 = -sum_ab tr_E(F_ab F^ab)
RealField ym_curvature_norm_sq(const YmModel& ym);
RealField ym_phi_norm_sq(const YmModel& ym);
RealField ym_action_density(const YmModel& ym);  // tr (tau' phi_D)^2

struct YmNormReport {
  RatioReport norm_ratio;    // |phi_D|^2 / |F_A|^2 (h-adjoint convention)
  RatioReport action_ratio;  // tr (tau phi)^2 / |F_A|^2
  double candidate = 0.0;    // eps1 eps2 reference for the norm ratio
  // 2^n eps1 eps2: the trace identity satisfied by the action density on
  // the Clifford twist (the extra 2^n is the Cl-factor trace)
  double candidate_action = 0.0;
};
YmNormReport ym_norm_check(const YmModel& ym);

struct YmActionReport {
  cplx pipeline = 0.0;
  double eh_term = 0.0;
  double ym_term = 0.0;       // int tr (tau' phi_D)^2
  double f_norm_int = 0.0;    // int |F_A|^2
  cplx total_formula = 0.0;   // eh + ym
};
YmActionReport ym_action(const YmModel& ym);

// ------------------------------------------------- combined (DHYM) field

struct DhymModel {
  std::shared_ptr<const Geometry> geom;
  // slot ranks: S, inner Cl, W, E2, outer Cl
  int rank_s = 0, rank_cl = 0, rank_w = 0, rank_e2 = 0;
  std::shared_ptr<const CliffordModule> Etw;  // full extension module
  SigmaMap map;
  MatrixField phi1, phi2, phi_d;  // on Etw
  CliffordConnection conn;
  DiracOperator dirac;
};

// w: auxiliary graded hermitian fiber (rank, grading, form)
DhymModel build_dhym_model(
    std::shared_ptr<const Geometry> geom, int w_rank, const CMat& w_tau,
    const CMat& w_h, const GaugeCurvature& Fw, TargetGeometry target,
    const CliffordModule& e2,
    const std::function<void(const double*, double*)>& map);

struct DhymReport {
  double cross_trace = 0.0;       // max_t |tr(phi1 phi2 + phi2 phi1)|
  double split_residual = 0.0;    // max_t |tr phi^2 - tr phi1^2 - tr phi2^2|
  cplx pipeline = 0.0;            // universal action of the assembled D
  double eh_term = 0.0;
  double sigma_term = 0.0;        // int tr (tau phi1)^2
  double ym_term = 0.0;           // int tr (tau phi2)^2
  cplx total_formula = 0.0;
};
DhymReport dhym_split_check(const DhymModel& m);

// -------------------------------------------------------------- Higgs

struct HiggsBundle {
  int m = 0;                          // real fiber dimension
  std::vector<std::vector<double>> A;  // per axis: nodes * m * m, antisym
  RMat fiber_metric;                   // positive definite
  std::vector<double> phi;             // nodes * m section values
};

struct HiggsReport {
  double vector_identity = 0.0;  // max |g2(dphi v, dphi v) - <nabla phi,nabla phi> - g1(v,v)|
  double scalar_identity = 0.0;  // max ||dphi|^2 - |nabla phi|^2 - dim M1|
  double lambda = 0.0;           // measured |dphi|^2 - |nabla phi|^2
  RealField grad_norm_sq;        // |nabla phi|^2 per node
};
HiggsReport higgs_metric(const HiggsBundle& hb, const Geometry& g1, Rng& rng);

double ehc_action(const Geometry& g, double lambda);

struct GaugeHiggsTerms {
  cplx fermion = 0.0;      // int <psi, gauge Dirac psi>
  double higgs = 0.0;      // int |nabla phi|^2
  double ym = 0.0;         // int |F^W|^2
  double ehc = 0.0;        // int (-eps1 scal + Lambda)
  cplx sum = 0.0;          // of the four terms
  cplx joint = 0.0;        // integral of the pointwise-summed density
};
// abelian scenario: W = complex line with integer-wavenumber potential
// a_i = -i k_i, section phi = phi0 exp(i k_phi . x) (covariantly constant
// when k_phi = k), F^W constant flux data
GaugeHiggsTerms gauge_higgs_report(const std::shared_ptr<const Geometry>& g,
                                   const CliffordModule& spinor,
                                   const std::vector<double>& wavenumbers,
                                   const std::vector<double>& phi_wavenumbers,
                                   const cplx& phi0, double flux,
                                   double lambda, Rng& rng);

}  // namespace df
