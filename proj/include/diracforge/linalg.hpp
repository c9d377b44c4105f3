#pragma once

// Small dense complex matrices (fiber endomorphisms, algebra tables).
// Row-major storage. Sizes stay <= a few dozen; plain O(n^3) routines.

#include <cassert>
#include <complex>
#include <cstddef>
#include <vector>

namespace df {

using cplx = std::complex<double>;

class CMat {
 public:
  CMat() = default;
  CMat(int rows, int cols) : r_(rows), c_(cols), a_(std::size_t(rows) * cols) {}
  static CMat identity(int n) {
    CMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static CMat zero(int n) { return CMat(n, n); }

  int rows() const { return r_; }
  int cols() const { return c_; }
  cplx& operator()(int i, int j) { return a_[std::size_t(i) * c_ + j]; }
  const cplx& operator()(int i, int j) const {
    return a_[std::size_t(i) * c_ + j];
  }
  cplx* data() { return a_.data(); }
  const cplx* data() const { return a_.data(); }

  CMat& operator+=(const CMat& o) {
    assert(r_ == o.r_ && c_ == o.c_);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  CMat& operator-=(const CMat& o) {
    assert(r_ == o.r_ && c_ == o.c_);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  CMat& operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
  }
  friend CMat operator+(CMat a, const CMat& b) { return a += b; }
  friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
  friend CMat operator*(cplx s, CMat a) { return a *= s; }

  friend CMat operator*(const CMat& a, const CMat& b) {
    assert(a.c_ == b.r_);
    CMat out(a.r_, b.c_);
    for (int i = 0; i < a.r_; ++i)
      for (int k = 0; k < a.c_; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx(0.0)) continue;
        for (int j = 0; j < b.c_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  std::vector<cplx> apply(const std::vector<cplx>& v) const {
    assert(int(v.size()) == c_);
    std::vector<cplx> out(r_, cplx(0.0));
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) out[i] += (*this)(i, j) * v[j];
    return out;
  }

 private:
  int r_ = 0, c_ = 0;
  std::vector<cplx> a_;
};

inline CMat adjoint(const CMat& m) {
  CMat out(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(j, i) = std::conj(m(i, j));
  return out;
}

inline CMat transpose(const CMat& m) {
  CMat out(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

inline cplx trace(const CMat& m) {
  assert(m.rows() == m.cols());
  cplx t = 0.0;
  for (int i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

inline CMat commutator(const CMat& a, const CMat& b) { return a * b - b * a; }
inline CMat anticommutator(const CMat& a, const CMat& b) {
  return a * b + b * a;
}

// max |entry|
inline double max_abs(const CMat& m) {
  double v = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) v = std::max(v, std::abs(m(i, j)));
  return v;
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const cplx s = a(i, j);
      if (s == cplx(0.0)) continue;
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = s * b(k, l);
    }
  return out;
}

// LU with partial pivoting; solves, inverse, determinant.
struct LU {
  CMat lu;
  std::vector<int> piv;
  int sign = 1;
  bool singular = false;
};

inline LU lu_decompose(CMat m) {
  assert(m.rows() == m.cols());
  const int n = m.rows();
  LU f;
  f.piv.resize(n);
  for (int i = 0; i < n; ++i) f.piv[i] = i;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(m(k, k));
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > best) best = std::abs(m(i, k)), p = i;
    if (best == 0.0) {
      f.singular = true;
      f.lu = std::move(m);
      return f;
    }
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
      std::swap(f.piv[k], f.piv[p]);
      f.sign = -f.sign;
    }
    for (int i = k + 1; i < n; ++i) {
      m(i, k) /= m(k, k);
      const cplx lik = m(i, k);
      for (int j = k + 1; j < n; ++j) m(i, j) -= lik * m(k, j);
    }
  }
  f.lu = std::move(m);
  return f;
}

inline std::vector<cplx> lu_solve(const LU& f, std::vector<cplx> b) {
  const int n = f.lu.rows();
  std::vector<cplx> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[f.piv[i]];
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
    x[i] /= f.lu(i, i);
  }
  return x;
}

inline CMat inverse(const CMat& m) {
  const int n = m.rows();
  LU f = lu_decompose(m);
  assert(!f.singular);
  CMat out(n, n);
  std::vector<cplx> e(n);
  for (int j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), cplx(0.0));
    e[j] = 1.0;
    auto col = lu_solve(f, e);
    for (int i = 0; i < n; ++i) out(i, j) = col[i];
  }
  return out;
}

inline cplx determinant(const CMat& m) {
  LU f = lu_decompose(m);
  if (f.singular) return 0.0;
  cplx d = double(f.sign);
  for (int i = 0; i < m.rows(); ++i) d *= f.lu(i, i);
  return d;
}

// -------- small real symmetric helpers (metric blocks, n <= 6) --------

class RMat {
 public:
  RMat() = default;
  RMat(int rows, int cols) : r_(rows), c_(cols), a_(std::size_t(rows) * cols) {}
  static RMat identity(int n) {
    RMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  int rows() const { return r_; }
  int cols() const { return c_; }
  double& operator()(int i, int j) { return a_[std::size_t(i) * c_ + j]; }
  const double& operator()(int i, int j) const {
    return a_[std::size_t(i) * c_ + j];
  }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

 private:
  int r_ = 0, c_ = 0;
  std::vector<double> a_;
};

// Gauss-Jordan inverse with partial pivoting; also returns det.
inline bool r_invert(const RMat& in, RMat& out, double& det) {
  const int n = in.rows();
  RMat a = in;
  out = RMat::identity(n);
  det = 1.0;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > best) best = std::abs(a(i, k)), p = i;
    if (best == 0.0) return false;
    if (p != k) {
      for (int j = 0; j < n; ++j) {
        std::swap(a(k, j), a(p, j));
        std::swap(out(k, j), out(p, j));
      }
      det = -det;
    }
    const double d = a(k, k);
    det *= d;
    const double inv = 1.0 / d;
    for (int j = 0; j < n; ++j) {
      a(k, j) *= inv;
      out(k, j) *= inv;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      const double f = a(i, k);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a(i, j) -= f * a(k, j);
        out(i, j) -= f * out(k, j);
      }
    }
  }
  return true;
}

}  // namespace df
