#pragma once

// Data-parallel inner-loop kernels on flat double / complex<double> arrays.
//
// Every kernel exists in a scalar reference version and (on x86-64) an AVX2
// version. The two are required to produce bit-identical results: the vector
// code performs exactly the per-element operation sequence of the scalar
// reference (mul/add/sub only, no FMA contraction, same accumulation order).
// The active table is chosen once at startup from CPUID and can be overridden
// with DIRAC_FORGE_SIMD=scalar|avx2|auto or kernels::select().
//
// Complex arrays are addressed through their (re,im) double layout, which the
// standard guarantees for std::complex<double>.

#include <complex>
#include <cstddef>
#include <string>

namespace df::kernels {

using cplx = std::complex<double>;

struct Table {
  const char* name;

  // y[i] += a * x[i]  over n doubles (real weight; FD stencil workhorse)
  void (*axpy_d)(double* y, const double* x, double a, std::size_t n);

  // y[i] = a * x[i] + b * z[i]  over n doubles
  void (*lincomb_d)(double* y, const double* x, double a, const double* z,
                    double b, std::size_t n);

  // y[i] += a * x[i]  over n complex elements (complex weight)
  void (*caxpy)(cplx* y, const cplx* x, cplx a, std::size_t n);

  // y[i] *= a  over n complex elements
  void (*cscale)(cplx* y, cplx a, std::size_t n);

  // Batched fiber matvec-accumulate with one constant matrix:
  //   for each node v:  y[v*N + r] += sum_c Mcol[c*N + r] * x[v*N + c]
  // Mcol is column-major N x N. Accumulation order: c outer, r inner.
  void (*mv_const_acc)(cplx* y, const cplx* Mcol, const cplx* x,
                       std::size_t nodes, int N);

  // Same with a per-node matrix field, column-major blocks of N*N per node.
  void (*mv_field_acc)(cplx* y, const cplx* Mfield, const cplx* x,
                       std::size_t nodes, int N);

  // y[v*N + k] += s[v] * x[v*N + k]  (node scalar field times fiber block)
  void (*node_scale_acc)(cplx* y, const cplx* s, const cplx* x,
                         std::size_t nodes, int N);
};

const Table& scalar_table();
bool avx2_supported();
const Table& avx2_table();  // valid only if avx2_supported()

// Active table (env override applied on first use).
const Table& active();
// Force a table by name ("scalar", "avx2", "auto"); returns false if not
// available on this machine.
bool select(const std::string& name);

}  // namespace df::kernels
