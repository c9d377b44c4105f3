#include "diracforge/kernels.hpp"

// AVX2 variants. Per-element arithmetic mirrors the scalar reference exactly:
// separate mul/add (no FMA), negation done as an exact sign-bit flip, and the
// same accumulation grouping. Equivalence against the scalar table is asserted
// bit-for-bit in the test suite.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cstdlib>

namespace df::kernels {

namespace avx2 {

#define DF_AVX2 __attribute__((target("avx2")))

DF_AVX2 static void axpy_d(double* y, const double* x, double a,
                           std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    __m256d xv = _mm256_loadu_pd(x + i);
    yv = _mm256_add_pd(yv, _mm256_mul_pd(av, xv));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

DF_AVX2 static void lincomb_d(double* y, const double* x, double a,
                              const double* z, double b, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    __m256d zv = _mm256_mul_pd(bv, _mm256_loadu_pd(z + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(xv, zv));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * z[i];
}

// sign mask that flips the real (even) lanes: used for a*(-xi) terms
DF_AVX2 static inline __m256d neg_even() {
  return _mm256_castsi256_pd(_mm256_set_epi64x(
      0, (long long)0x8000000000000000ULL, 0,
      (long long)0x8000000000000000ULL));
}

DF_AVX2 static void caxpy(cplx* y, const cplx* x, cplx a, std::size_t n) {
  double* yd = reinterpret_cast<double*>(y);
  const double* xd = reinterpret_cast<const double*>(x);
  const double ar = a.real(), ai = a.imag();
  const __m256d arv = _mm256_set1_pd(ar);
  const __m256d aiv = _mm256_set1_pd(ai);
  const __m256d flip = neg_even();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    __m256d xs = _mm256_permute_pd(xv, 0x5);          // (xi, xr) pairs
    xs = _mm256_xor_pd(xs, flip);                     // (-xi, xr)
    __m256d p = _mm256_mul_pd(arv, xv);
    __m256d q = _mm256_mul_pd(aiv, xs);
    __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, _mm256_add_pd(p, q)));
  }
  for (; i < n; ++i) {
    const double xr = xd[2 * i], xi = xd[2 * i + 1];
    const double pr = ar * xr, pi = ar * xi;
    const double qr = ai * (-xi), qi = ai * xr;
    yd[2 * i] = yd[2 * i] + (pr + qr);
    yd[2 * i + 1] = yd[2 * i + 1] + (pi + qi);
  }
}

DF_AVX2 static void cscale(cplx* y, cplx a, std::size_t n) {
  double* yd = reinterpret_cast<double*>(y);
  const double ar = a.real(), ai = a.imag();
  const __m256d arv = _mm256_set1_pd(ar);
  const __m256d aiv = _mm256_set1_pd(ai);
  const __m256d flip = neg_even();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d xv = _mm256_loadu_pd(yd + 2 * i);
    __m256d xs = _mm256_xor_pd(_mm256_permute_pd(xv, 0x5), flip);
    __m256d p = _mm256_mul_pd(arv, xv);
    __m256d q = _mm256_mul_pd(aiv, xs);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(p, q));
  }
  for (; i < n; ++i) {
    const double xr = yd[2 * i], xi = yd[2 * i + 1];
    const double pr = ar * xr, pi = ar * xi;
    const double qr = ai * (-xi), qi = ai * xr;
    yd[2 * i] = pr + qr;
    yd[2 * i + 1] = pi + qi;
  }
}

// One fiber block: y[0..N) += Mcol * x, c outer / r inner, two complex rows
// per vector op. xpair = (xr,xi,xr,xi), xsn = (-xi,xr,-xi,xr).
DF_AVX2 static inline void mv_block(double* y, const double* Mcol,
                                    const double* x, int N) {
  const __m256d flip = neg_even();
  for (int c = 0; c < N; ++c) {
    const double xr = x[2 * c], xi = x[2 * c + 1];
    const __m128d xp128 = _mm_loadu_pd(x + 2 * c);
    const __m256d xpair = _mm256_broadcast_pd(&xp128);
    const __m256d xsn = _mm256_xor_pd(_mm256_permute_pd(xpair, 0x5), flip);
    const double* m = Mcol + 2 * std::size_t(c) * N;
    int r = 0;
    for (; r + 2 <= N; r += 2) {
      __m256d mv = _mm256_loadu_pd(m + 2 * r);
      __m256d mre = _mm256_movedup_pd(mv);          // (mr, mr) per lane pair
      __m256d mim = _mm256_permute_pd(mv, 0xF);     // (mi, mi)
      __m256d p = _mm256_mul_pd(mre, xpair);
      __m256d q = _mm256_mul_pd(mim, xsn);
      __m256d yv = _mm256_loadu_pd(y + 2 * r);
      _mm256_storeu_pd(y + 2 * r, _mm256_add_pd(yv, _mm256_add_pd(p, q)));
    }
    for (; r < N; ++r) {
      const double mr = m[2 * r], mi = m[2 * r + 1];
      const double pr = mr * xr, pi = mr * xi;
      const double qr = mi * (-xi), qi = mi * xr;
      y[2 * r] = y[2 * r] + (pr + qr);
      y[2 * r + 1] = y[2 * r + 1] + (pi + qi);
    }
  }
}

DF_AVX2 static void mv_const_acc(cplx* y, const cplx* Mcol, const cplx* x,
                                 std::size_t nodes, int N) {
  double* yd = reinterpret_cast<double*>(y);
  const double* md = reinterpret_cast<const double*>(Mcol);
  const double* xd = reinterpret_cast<const double*>(x);
  for (std::size_t v = 0; v < nodes; ++v)
    mv_block(yd + 2 * v * N, md, xd + 2 * v * N, N);
}

DF_AVX2 static void mv_field_acc(cplx* y, const cplx* Mfield, const cplx* x,
                                 std::size_t nodes, int N) {
  double* yd = reinterpret_cast<double*>(y);
  const double* md = reinterpret_cast<const double*>(Mfield);
  const double* xd = reinterpret_cast<const double*>(x);
  const std::size_t blk = 2 * std::size_t(N) * N;
  for (std::size_t v = 0; v < nodes; ++v)
    mv_block(yd + 2 * v * N, md + v * blk, xd + 2 * v * N, N);
}

DF_AVX2 static void node_scale_acc(cplx* y, const cplx* s, const cplx* x,
                                   std::size_t nodes, int N) {
  double* yd = reinterpret_cast<double*>(y);
  const double* sd = reinterpret_cast<const double*>(s);
  const double* xd = reinterpret_cast<const double*>(x);
  const __m256d flip = neg_even();
  for (std::size_t v = 0; v < nodes; ++v) {
    const double ar = sd[2 * v], ai = sd[2 * v + 1];
    const __m256d arv = _mm256_set1_pd(ar);
    const __m256d aiv = _mm256_set1_pd(ai);
    const double* xb = xd + 2 * v * N;
    double* yb = yd + 2 * v * N;
    int k = 0;
    for (; k + 2 <= N; k += 2) {
      __m256d xv = _mm256_loadu_pd(xb + 2 * k);
      __m256d xs = _mm256_xor_pd(_mm256_permute_pd(xv, 0x5), flip);
      __m256d p = _mm256_mul_pd(arv, xv);
      __m256d q = _mm256_mul_pd(aiv, xs);
      __m256d yv = _mm256_loadu_pd(yb + 2 * k);
      _mm256_storeu_pd(yb + 2 * k, _mm256_add_pd(yv, _mm256_add_pd(p, q)));
    }
    for (; k < N; ++k) {
      const double xr = xb[2 * k], xi = xb[2 * k + 1];
      const double pr = ar * xr, pi = ar * xi;
      const double qr = ai * (-xi), qi = ai * xr;
      yb[2 * k] = yb[2 * k] + (pr + qr);
      yb[2 * k + 1] = yb[2 * k + 1] + (pi + qi);
    }
  }
}

#undef DF_AVX2

}  // namespace avx2

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }

const Table& avx2_table() {
  static const Table t = {"avx2",          avx2::axpy_d,
                          avx2::lincomb_d, avx2::caxpy,
                          avx2::cscale,    avx2::mv_const_acc,
                          avx2::mv_field_acc, avx2::node_scale_acc};
  return t;
}

}  // namespace df::kernels

#else  // non-x86: scalar only

namespace df::kernels {
bool avx2_supported() { return false; }
const Table& avx2_table() { return scalar_table(); }
}  // namespace df::kernels

#endif
