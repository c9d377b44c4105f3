#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: sphere geometry through the R^3 embedding and an RK4 integration of
// the geodesic equation in the polar chart.

#include <algorithm>
#include <cmath>
#include <vector>

#include "diracforge/models.hpp"

namespace oracles {

inline void sphere_embed(const std::vector<double>& y, double* u) {
  u[0] = std::sin(y[0]) * std::cos(y[1]);
  u[1] = std::sin(y[0]) * std::sin(y[1]);
  u[2] = std::cos(y[0]);
}

inline double sphere_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double ua[3], ub[3];
  sphere_embed(a, ua);
  sphere_embed(b, ub);
  const double dot = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
  return std::acos(std::clamp(dot, -1.0, 1.0));
}

// chart velocity of the great circle from a towards b at t = 0
inline void great_circle_velocity(const std::vector<double>& a,
                                  const std::vector<double>& b, double* vel) {
  double u[3], w[3];
  sphere_embed(a, u);
  sphere_embed(b, w);
  const double dot = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
  const double d = std::acos(std::clamp(dot, -1.0, 1.0));
  double what[3];
  double nrm = 0.0;
  for (int i = 0; i < 3; ++i) {
    what[i] = w[i] - dot * u[i];
    nrm += what[i] * what[i];
  }
  nrm = std::sqrt(nrm);
  double gp[3];
  for (int i = 0; i < 3; ++i) gp[i] = d * what[i] / nrm;
  const double z = u[2], x = u[0], y = u[1];
  vel[0] = -gp[2] / std::sqrt(std::max(1e-300, 1.0 - z * z));
  vel[1] = (x * gp[1] - y * gp[0]) / (x * x + y * y);
}

// theta'' = sin(theta)cos(theta) phi'^2, phi'' = -2 cot(theta) theta' phi'
inline df::Path rk4_geodesic(const std::vector<double>& a, const double* vel0,
                             int K, int substeps) {
  df::Path out(K, std::vector<double>(2));
  double s[4] = {a[0], a[1], vel0[0], vel0[1]};
  auto deriv = [](const double* y, double* d) {
    d[0] = y[2];
    d[1] = y[3];
    d[2] = std::sin(y[0]) * std::cos(y[0]) * y[3] * y[3];
    d[3] = -2.0 * (std::cos(y[0]) / std::sin(y[0])) * y[2] * y[3];
  };
  const int total = (K - 1) * substeps;
  const double h = 1.0 / total;
  out[0] = {s[0], s[1]};
  int node = 1;
  double k1[4], k2[4], k3[4], k4[4], tmp[4];
  for (int step = 1; step <= total; ++step) {
    deriv(s, k1);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
    deriv(tmp, k2);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
    deriv(tmp, k3);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + h * k3[i];
    deriv(tmp, k4);
    for (int i = 0; i < 4; ++i)
      s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (step % substeps == 0 && node < K) {
      out[node] = {s[0], s[1]};
      ++node;
    }
  }
  return out;
}

}  // namespace oracles
