#include "diracforge/kernels.hpp"

#include <cstdlib>

namespace df::kernels {

namespace scalar {

static void axpy_d(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

static void lincomb_d(double* y, const double* x, double a, const double* z,
                      double b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * z[i];
}

// Complex multiply-accumulate, kept as the exact op sequence the AVX2 code
// mirrors: p = a.re*x, q = a.im*swap(x) with sign, y += p + q.
static void caxpy(cplx* y, const cplx* x, cplx a, std::size_t n) {
  double* yd = reinterpret_cast<double*>(y);
  const double* xd = reinterpret_cast<const double*>(x);
  const double ar = a.real(), ai = a.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = xd[2 * i], xi = xd[2 * i + 1];
    const double pr = ar * xr, pi = ar * xi;
    const double qr = ai * (-xi), qi = ai * xr;
    yd[2 * i] = yd[2 * i] + (pr + qr);
    yd[2 * i + 1] = yd[2 * i + 1] + (pi + qi);
  }
}

static void cscale(cplx* y, cplx a, std::size_t n) {
  double* yd = reinterpret_cast<double*>(y);
  const double ar = a.real(), ai = a.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = yd[2 * i], xi = yd[2 * i + 1];
    const double pr = ar * xr, pi = ar * xi;
    const double qr = ai * (-xi), qi = ai * xr;
    yd[2 * i] = pr + qr;
    yd[2 * i + 1] = pi + qi;
  }
}

static void mv_block(double* y, const double* Mcol, const double* x, int N) {
  for (int c = 0; c < N; ++c) {
    const double xr = x[2 * c], xi = x[2 * c + 1];
    const double* m = Mcol + 2 * std::size_t(c) * N;
    for (int r = 0; r < N; ++r) {
      const double mr = m[2 * r], mi = m[2 * r + 1];
      const double pr = mr * xr, pi = mr * xi;
      const double qr = mi * (-xi), qi = mi * xr;
      y[2 * r] = y[2 * r] + (pr + qr);
      y[2 * r + 1] = y[2 * r + 1] + (pi + qi);
    }
  }
}

static void mv_const_acc(cplx* y, const cplx* Mcol, const cplx* x,
                         std::size_t nodes, int N) {
  double* yd = reinterpret_cast<double*>(y);
  const double* md = reinterpret_cast<const double*>(Mcol);
  const double* xd = reinterpret_cast<const double*>(x);
  for (std::size_t v = 0; v < nodes; ++v)
    mv_block(yd + 2 * v * N, md, xd + 2 * v * N, N);
}

static void mv_field_acc(cplx* y, const cplx* Mfield, const cplx* x,
                         std::size_t nodes, int N) {
  double* yd = reinterpret_cast<double*>(y);
  const double* md = reinterpret_cast<const double*>(Mfield);
  const double* xd = reinterpret_cast<const double*>(x);
  const std::size_t blk = 2 * std::size_t(N) * N;
  for (std::size_t v = 0; v < nodes; ++v)
    mv_block(yd + 2 * v * N, md + v * blk, xd + 2 * v * N, N);
}

static void node_scale_acc(cplx* y, const cplx* s, const cplx* x,
                           std::size_t nodes, int N) {
  double* yd = reinterpret_cast<double*>(y);
  const double* sd = reinterpret_cast<const double*>(s);
  const double* xd = reinterpret_cast<const double*>(x);
  for (std::size_t v = 0; v < nodes; ++v) {
    const double ar = sd[2 * v], ai = sd[2 * v + 1];
    for (int k = 0; k < N; ++k) {
      const std::size_t j = 2 * (v * N + k);
      const double xr = xd[j], xi = xd[j + 1];
      const double pr = ar * xr, pi = ar * xi;
      const double qr = ai * (-xi), qi = ai * xr;
      yd[j] = yd[j] + (pr + qr);
      yd[j + 1] = yd[j + 1] + (pi + qi);
    }
  }
}

}  // namespace scalar

const Table& scalar_table() {
  static const Table t = {"scalar",          scalar::axpy_d,
                          scalar::lincomb_d, scalar::caxpy,
                          scalar::cscale,    scalar::mv_const_acc,
                          scalar::mv_field_acc, scalar::node_scale_acc};
  return t;
}

namespace {

const Table* g_active = nullptr;

const Table* pick_initial() {
  const char* env = std::getenv("DIRAC_FORGE_SIMD");
  std::string want = env ? env : "auto";
  if (want == "scalar") return &scalar_table();
  if (want == "avx2" && avx2_supported()) return &avx2_table();
  if (want == "auto" && avx2_supported()) return &avx2_table();
  return &scalar_table();
}

}  // namespace

const Table& active() {
  if (!g_active) g_active = pick_initial();
  return *g_active;
}

bool select(const std::string& name) {
  if (name == "scalar") {
    g_active = &scalar_table();
    return true;
  }
  if (name == "avx2") {
    if (!avx2_supported()) return false;
    g_active = &avx2_table();
    return true;
  }
  if (name == "auto") {
    g_active = avx2_supported() ? &avx2_table() : &scalar_table();
    return true;
  }
  return false;
}

}  // namespace df::kernels
