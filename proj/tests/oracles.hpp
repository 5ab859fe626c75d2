#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "exfree/fock.hpp"
#include "exfree/model.hpp"

namespace exfree::oracle {

using cd = std::complex<double>;

// Linear Heisenberg equations for v = (a1, a2^dagger, a3):
// dv/dt = M v, solved by a dense 3x3 matrix exponential. Row r of the
// result holds the coefficients of a_r(t) (a2^dagger(t) for r = 1).
inline Eigen::Matrix3cd heisenberg_propagator(double g, double delta, double t) {
  const cd i(0.0, 1.0);
  Eigen::Matrix3cd m;
  m << 0.0, -i * g, 0.0,
       i * g, i * delta, i * g,
       0.0, -i * g, 0.0;
  return (m * t).exp();
}

// H_full assembled element by element from Fock-basis matrix elements,
// without any Kronecker machinery. Mode order (S1, S2, S3), S3 fastest.
inline Matrix brute_force_h_full(double g1, double g2, double delta, int n1, int n2, int n3) {
  const int dim = n1 * n2 * n3;
  auto idx = [&](int a, int b, int c) { return (a * n2 + b) * n3 + c; };
  Matrix h = Matrix::Zero(dim, dim);
  for (int a = 0; a < n1; ++a) {
    for (int b = 0; b < n2; ++b) {
      for (int c = 0; c < n3; ++c) {
        const int col = idx(a, b, c);
        h(col, col) += delta * b;
        // a1^dagger a2^dagger and its conjugate
        if (a + 1 < n1 && b + 1 < n2) {
          const double amp = g1 * std::sqrt(double(a + 1) * double(b + 1));
          h(idx(a + 1, b + 1, c), col) += amp;
          h(col, idx(a + 1, b + 1, c)) += amp;
        }
        if (c + 1 < n3 && b + 1 < n2) {
          const double amp = g2 * std::sqrt(double(c + 1) * double(b + 1));
          h(idx(a, b + 1, c + 1), col) += amp;
          h(col, idx(a, b + 1, c + 1)) += amp;
        }
      }
    }
  }
  return h;
}

inline double tau_st_formula(double g, double delta) {
  const double om = std::sqrt(delta * delta / 8.0 - g * g);
  return M_PI / (delta / 2.0 - std::sqrt(2.0) * om);
}

inline double tau_s2_formula(double g, double delta) {
  const double om = std::sqrt(delta * delta / 8.0 - g * g);
  return M_PI / (std::sqrt(2.0) * om);
}

// Root of tau_ST / tau_S2 = k by bracketing, independent of the closed form.
inline double sweet_point_root(double g, int k) {
  auto f = [&](double delta) { return tau_st_formula(g, delta) / tau_s2_formula(g, delta) - k; };
  const double lo = 2.0 * std::sqrt(2.0) * g * (1.0 + 1e-9);
  const double hi = 100.0 * g;
  std::uintmax_t iterations = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                   iterations);
  return 0.5 * (r.first + r.second);
}

// Symmetric running mean over `width` (in samples of spacing dt). Windows
// that run off the ends or touch a NaN produce NaN.
inline std::vector<double> boxcar(const std::vector<double>& v, double width, double dt) {
  const int half = static_cast<int>(std::lround(width / dt)) / 2;
  const int n = static_cast<int>(v.size());
  std::vector<double> cum(v.size() + 1, 0.0);
  std::vector<int> bad(v.size() + 1, 0);
  for (int i = 0; i < n; ++i) {
    const bool nan = std::isnan(v[i]);
    cum[i + 1] = cum[i] + (nan ? 0.0 : v[i]);
    bad[i + 1] = bad[i] + (nan ? 1 : 0);
  }
  std::vector<double> out(v.size(), std::nan(""));
  for (int i = half; i + half < n; ++i) {
    if (bad[i + half + 1] != bad[i - half]) continue;
    out[i] = (cum[i + half + 1] - cum[i - half]) / (2 * half + 1);
  }
  return out;
}

// Time of the maximum of a uniformly sampled trajectory after both fast
// components are averaged out, refined by a parabola through the peak.
inline double smoothed_peak_time(const std::vector<double>& t, const std::vector<double>& y,
                                 std::initializer_list<double> fast_periods) {
  const double dt = t[1] - t[0];
  std::vector<double> s = y;
  for (double p : fast_periods) s = boxcar(s, p, dt);
  for (double& x : s) {
    if (std::isnan(x)) x = -std::numeric_limits<double>::infinity();
  }
  std::size_t best = 1;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] > s[best]) best = i;
  }
  const double ym = s[best - 1], y0 = s[best], yp = s[best + 1];
  const double denom = ym - 2.0 * y0 + yp;
  const double shift = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
  return t[best] + shift * dt;
}

}  // namespace exfree::oracle
