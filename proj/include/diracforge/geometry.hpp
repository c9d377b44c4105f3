#pragma once

// Finite-difference chart geometry. Nodes are laid out row-major with the
// last axis fastest; periodic axes wrap, non-periodic axes use one-sided
// stencils of matching order at the edges. All reductions go through a fixed
// pairwise tree so results are independent of threading.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diracforge/linalg.hpp"

namespace df {

struct Axis {
  int count = 0;
  double spacing = 0.0;
  double origin = 0.0;
  bool periodic = false;
};

class ChartGrid {
 public:
  ChartGrid() = default;
  explicit ChartGrid(std::vector<Axis> axes);

  int dim() const { return int(axes_.size()); }
  const Axis& axis(int i) const { return axes_[i]; }
  std::size_t node_count() const { return count_; }
  std::size_t stride(int i) const { return strides_[i]; }

  double coord(int axis, int index) const {
    return axes_[axis].origin + axes_[axis].spacing * index;
  }
  void unindex(std::size_t node, int* idx) const;
  std::size_t index(const int* idx) const;
  void node_coords(std::size_t node, double* x) const;

  // product of spacings (cell volume in coordinates)
  double cell_volume() const;

  // true if the node is at least `margin` cells away from every non-periodic
  // edge
  bool interior(std::size_t node, int margin) const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t count_ = 1;
};

// convenience constructors
ChartGrid periodic_torus_grid(const std::vector<double>& lengths,
                              const std::vector<int>& counts);
// cell-centered nodes on [lo,hi] per non-periodic axis
ChartGrid box_grid(const std::vector<double>& lo, const std::vector<double>& hi,
                   const std::vector<int>& counts,
                   const std::vector<bool>& periodic = {});

// ------------------------------ fields ------------------------------

struct ScalarField {
  std::vector<cplx> v;  // one per node
  explicit ScalarField(std::size_t nodes = 0) : v(nodes) {}
};

struct RealField {
  std::vector<double> v;
  explicit RealField(std::size_t nodes = 0) : v(nodes) {}
};

// node-major fiber vectors
struct SectionField {
  int rank = 0;
  std::vector<cplx> v;  // nodes * rank
  SectionField() = default;
  SectionField(std::size_t nodes, int N) : rank(N), v(nodes * N) {}
  cplx* at(std::size_t node) { return v.data() + node * rank; }
  const cplx* at(std::size_t node) const { return v.data() + node * rank; }
};

// node-major N x N blocks, column-major inside each block (kernel layout)
struct MatrixField {
  int rank = 0;
  std::vector<cplx> v;  // nodes * rank * rank
  MatrixField() = default;
  MatrixField(std::size_t nodes, int N)
      : rank(N), v(nodes * std::size_t(N) * N) {}
  cplx* block(std::size_t node) {
    return v.data() + node * std::size_t(rank) * rank;
  }
  const cplx* block(std::size_t node) const {
    return v.data() + node * std::size_t(rank) * rank;
  }
  void set(std::size_t node, const CMat& m);
  CMat get(std::size_t node) const;
  std::size_t nodes() const { return rank ? v.size() / (std::size_t(rank) * rank) : 0; }
};

// ------------------------------ stencils ------------------------------

struct DerivRule {
  std::vector<std::pair<int, double>> terms;  // (node offset, weight incl 1/h)
};

// first-derivative plan along one axis at a given accuracy order (2 or 4)
struct DerivPlan {
  int axis = 0;
  int order = 2;
  bool periodic = false;
  DerivRule interior;
  int interior_lo = 0, interior_hi = 0;          // rows using the interior rule
  std::vector<std::pair<int, DerivRule>> edges;  // non-periodic boundary rows
};

DerivPlan make_deriv_plan(const ChartGrid& grid, int axis, int order);

// out += plan applied to in; arrays are flattened doubles with `width`
// doubles per node (2*rank for complex fields)
void apply_deriv(const ChartGrid& grid, const DerivPlan& plan,
                 const double* in, double* out, int width);

// d/dx_axis of a complex scalar field (errors if the grid is too small)
ScalarField partial_derivative(const ChartGrid& grid, const ScalarField& f,
                               int axis, int order);
RealField partial_derivative(const ChartGrid& grid, const RealField& f,
                             int axis, int order);
SectionField partial_derivative(const ChartGrid& grid, const SectionField& f,
                                int axis, int order);

// ------------------------------ metric ------------------------------

struct MetricCallback {
  int n = 0;
  std::string name;
  std::function<void(const double* x, RMat& g)> eval;
  // optional analytic derivative, layout dg[k*n*n + i*n + j] = d_k g_ij
  std::function<void(const double* x, double* dg)> deriv;
};

MetricCallback flat_metric(int n);
MetricCallback minkowski_metric(int p, int q);
MetricCallback sphere_metric(double radius);      // polar chart (theta, phi)
MetricCallback hyperbolic_metric();               // half-plane (x, y), y > 0

struct MetricField {
  int n = 0;
  std::vector<double> g;        // nodes * n * n, row-major symmetric
  std::vector<double> ginv;     // nodes * n * n
  std::vector<double> sqrt_det; // nodes
  int sig_p = 0, sig_q = 0;     // constant signature

  const double* g_at(std::size_t node) const { return g.data() + node * n * n; }
  const double* ginv_at(std::size_t node) const {
    return ginv.data() + node * n * n;
  }
  RMat g_block(std::size_t node) const;
  RMat ginv_block(std::size_t node) const;
};

// samples the callback; throws on asymmetric / near-singular / signature-
// changing samples
MetricField sample_metric(const ChartGrid& grid, const MetricCallback& cb,
                          double det_tol = 1e-12);
MetricField metric_from_table(const ChartGrid& grid,
                              const std::vector<double>& node_major_gij,
                              double det_tol = 1e-12);

// ------------------------------ coframe ------------------------------

struct CoframeField {
  int n = 0;
  std::vector<double> e;     // nodes * n * n, e[a*n+i] = e^a_i
  std::vector<double> einv;  // nodes * n * n, einv[i*n+a] = e_a^i
  std::vector<int> eta;      // per-direction signs, positives first
  const double* e_at(std::size_t node) const { return e.data() + node * n * n; }
  const double* einv_at(std::size_t node) const {
    return einv.data() + node * n * n;
  }
};

// signature-aware Gram-Schmidt on the coordinate coframe, deterministic in
// axis order, positives reordered first, orientation preserved
CoframeField orthonormal_coframe(const ChartGrid& grid, const MetricField& m);

// ------------------------------ curvature ------------------------------

// Christoffel symbols, layout per node [k][i][j] (Gamma^k_ij)
struct ChristoffelField {
  int n = 0;
  std::vector<double> v;  // nodes * n^3
  const double* at(std::size_t node) const {
    return v.data() + node * std::size_t(n) * n * n;
  }
};

ChristoffelField christoffels(const ChartGrid& grid, const MetricField& m,
                              int order);

RealField scalar_curvature(const ChartGrid& grid, const MetricField& m,
                           int order);

// codifferential of a one-form with coordinate components alpha[i] (complex
// scalar field per axis); sign fixed by formal adjointness to d:
// delta alpha = -(1/sqrt|g|) d_i (sqrt|g| g^{ij} alpha_j)
ScalarField codifferential(const ChartGrid& grid, const MetricField& m,
                           const std::vector<ScalarField>& alpha, int order);

// ------------------------------ integration ------------------------------

double pairwise_sum(const double* x, std::size_t n);
cplx pairwise_sum(const cplx* x, std::size_t n);

cplx integrate(const ChartGrid& grid, const MetricField& m,
               const ScalarField& f);
double integrate(const ChartGrid& grid, const MetricField& m,
                 const RealField& f);

// ------------------------------ geometry bundle ------------------------------

struct Geometry {
  ChartGrid grid;
  MetricField metric;
  CoframeField frame;
  ChristoffelField chris;
  int order_metric = 4;  // stencil order for metric-derived quantities
  int order_op = 2;      // stencil order for operator application

  // spin coefficients omega_{ab,i}, antisymmetric in (a,b):
  // layout per node [i][a][b]
  std::vector<double> omega;
  const double* omega_at(std::size_t node) const {
    const int n = grid.dim();
    return omega.data() + node * std::size_t(n) * n * n;
  }
};

Geometry build_geometry(ChartGrid grid, const MetricCallback& cb,
                        int order_metric = 4, int order_op = 2);
Geometry build_geometry(ChartGrid grid, MetricField metric, int order_metric = 4,
                        int order_op = 2);

// ------------------------------ threading ------------------------------

void set_thread_count(int threads);
int thread_count();
// chunked parallel map over [0, n); chunk boundaries depend only on n and the
// configured thread count, and chunks write disjoint outputs
void parallel_nodes(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace df
