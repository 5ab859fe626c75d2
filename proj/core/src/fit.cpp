#include "exfree/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "exfree/errors.hpp"

namespace exfree {

namespace {

using Model = std::function<double(const Eigen::VectorXd&, double)>;

struct Residuals : Eigen::DenseFunctor<double> {
  Residuals(const Model& model, std::span<const double> t, std::span<const double> y, int n)
      : Eigen::DenseFunctor<double>(n, static_cast<int>(t.size())), model_(&model), t_(t), y_(y) {}

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (std::size_t k = 0; k < t_.size(); ++k) {
      const double v = (*model_)(p, t_[k]) - y_[k];
      r[static_cast<Eigen::Index>(k)] = std::isfinite(v) ? v : 1e3;
    }
    return 0;
  }

  // Central differences with the step floored at unit scale, so parameters near zero keep a usable step.
  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    const double eps = std::cbrt(std::numeric_limits<double>::epsilon());
    Eigen::VectorXd q = p;
    Eigen::VectorXd up(values()), down(values());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double h = eps * std::max(1.0, std::abs(p[j]));
      q[j] = p[j] + h;
      (*this)(q, up);
      q[j] = p[j] - h;
      (*this)(q, down);
      q[j] = p[j];
      jac.col(j) = (up - down) / (2.0 * h);
    }
    return 0;
  }

  const Model* model_;
  std::span<const double> t_;
  std::span<const double> y_;
};

struct RawFit {
  Eigen::VectorXd p;
  Eigen::VectorXd sigma;
  double rms = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool solver_ok = false;
  bool identifiable = false;
};

bool status_ok(Eigen::LevenbergMarquardtSpace::Status s) {
  using namespace Eigen::LevenbergMarquardtSpace;
  return s == RelativeReductionTooSmall || s == RelativeErrorTooSmall ||
         s == RelativeErrorAndReductionTooSmall || s == CosinusTooSmall || s == FtolTooSmall ||
         s == XtolTooSmall || s == GtolTooSmall;
}

RawFit least_squares(const Model& model, std::span<const double> t, std::span<const double> y,
                     const std::vector<Eigen::VectorXd>& starts, const FitOptions& options) {
  RawFit best;
  int total_iterations = 0;
  for (const auto& start : starts) {
    const auto n = static_cast<int>(start.size());
    Residuals functor(model, t, y, n);
    Eigen::LevenbergMarquardt<Residuals> lm(functor);
    lm.setMaxfev(options.max_evaluations);
    lm.setXtol(1e-12);
    lm.setFtol(1e-12);
    Eigen::VectorXd p = start;
    const auto status = lm.minimize(p);
    total_iterations += static_cast<int>(lm.iterations());

    Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
    functor(p, r);
    const double rms = std::sqrt(r.squaredNorm() / static_cast<double>(t.size()));
    if (!std::isfinite(rms) || rms >= best.rms) continue;

    best.p = p;
    best.rms = rms;
    best.solver_ok = status_ok(status) && p.allFinite();

    Eigen::MatrixXd jac(static_cast<Eigen::Index>(t.size()), n);
    functor.df(p, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    best.identifiable = top > 0.0 && es.eigenvalues().minCoeff() > 1e-12 * top;
    const double dof = std::max<double>(1.0, static_cast<double>(t.size()) - n);
    const double s2 = r.squaredNorm() / dof;
    best.sigma = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    if (best.identifiable) {
      const Eigen::MatrixXd cov = jtj.ldlt().solve(Eigen::MatrixXd::Identity(n, n)) * s2;
      best.sigma = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    }
  }
  best.iterations = total_iterations;
  return best;
}

void check_samples(std::span<const double> t, std::span<const double> y, std::size_t minimum,
                   const char* what) {
  if (t.size() != y.size()) throw InvalidParameter(std::string(what) + ": t and y differ in length");
  if (t.size() < minimum) {
    throw InvalidParameter(std::string(what) + ": under-determined, need at least " +
                           std::to_string(minimum) + " samples");
  }
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!std::isfinite(t[k]) || !std::isfinite(y[k])) {
      throw InvalidParameter(std::string(what) + ": non-finite sample");
    }
  }
}

FitResult finish(const RawFit& raw, std::vector<std::string> names, const FitOptions& options) {
  FitResult out;
  out.names = std::move(names);
  out.iterations = raw.iterations;
  out.residual_rms = raw.rms;
  if (raw.p.size() == 0) {
    out.message = "no start produced a finite residual";
    out.estimates.assign(out.names.size(), std::numeric_limits<double>::quiet_NaN());
    out.sigmas = out.estimates;
    return out;
  }
  out.estimates.assign(raw.p.data(), raw.p.data() + raw.p.size());
  out.sigmas.assign(raw.sigma.data(), raw.sigma.data() + raw.sigma.size());
  out.converged = raw.solver_ok && raw.identifiable && raw.rms <= options.residual_threshold;
  if (!raw.solver_ok) {
    out.message = "solver did not reach a tolerance criterion";
  } else if (!raw.identifiable) {
    out.message = "parameters are not identifiable from the data";
  } else if (raw.rms > options.residual_threshold) {
    out.message = "residual above threshold";
  }
  return out;
}

}  // namespace

double FitResult::value(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return estimates.at(k);
  }
  throw InvalidParameter("fit has no parameter '" + std::string(name) + "'");
}

double FitResult::sigma(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return sigmas.at(k);
  }
  throw InvalidParameter("fit has no parameter '" + std::string(name) + "'");
}

FitResult fit_tms_strength(std::span<const double> t_us, std::span<const double> p0,
                           const FitOptions& options) {
  check_samples(t_us, p0, 8, "fit_tms_strength");
  const Model model = [](const Eigen::VectorXd& p, double t) {
    const double c = std::cosh(p[2] * t);
    return p[0] / (c * c) + p[1];
  };

  // 1/cosh^2(x) = 1/2 at x = asinh(1).
  const auto [lo, hi] = std::minmax_element(p0.begin(), p0.end());
  const double half = 0.5 * (*lo + *hi);
  const double t_max = *std::max_element(t_us.begin(), t_us.end());
  double g0 = 1.0 / std::max(t_max, 1e-9);
  for (std::size_t k = 1; k < t_us.size(); ++k) {
    if (p0[k] <= half && p0[k - 1] > half) {
      const double frac = (p0[k - 1] - half) / (p0[k - 1] - p0[k]);
      const double th = t_us[k - 1] + frac * (t_us[k] - t_us[k - 1]);
      if (th > 0.0) g0 = std::asinh(1.0) / th;
      break;
    }
  }
  std::vector<Eigen::VectorXd> starts;
  for (double scale : {1.0, 0.5, 2.0, 0.25, 4.0}) {
    Eigen::VectorXd s(3);
    s << *hi - *lo, *lo, g0 * scale;
    starts.push_back(s);
  }
  RawFit raw = least_squares(model, t_us, p0, starts, options);
  if (raw.p.size() == 3) raw.p[2] = std::abs(raw.p[2]);
  FitResult out = finish(raw, {"a", "b", "g"}, options);
  if (out.converged && out.value("g") * t_max < 0.8) {
    out.converged = false;
    out.message = "samples do not span g t in [0, 0.8]";
  }
  return out;
}

FitResult fit_stark_detuning(std::span<const double> delta_d, std::span<const double> tau_s2_us,
                             double g, const FitOptions& options) {
  check_samples(delta_d, tau_s2_us, 4, "fit_stark_detuning");
  if (!(g > 0.0)) throw InvalidParameter("fit_stark_detuning: g must be positive");
  const Model model = [g](const Eigen::VectorXd& p, double dd) {
    const double total = dd + p[0];
    const double arg = total * total - 8.0 * g * g;
    if (!(arg > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return 2.0 * std::numbers::pi / std::sqrt(arg);
  };

  // Invert every point and start from the median estimate.
  std::vector<double> inverted;
  for (std::size_t k = 0; k < delta_d.size(); ++k) {
    if (tau_s2_us[k] > 0.0) {
      const double w = 2.0 * std::numbers::pi / tau_s2_us[k];
      inverted.push_back(std::sqrt(w * w + 8.0 * g * g) - delta_d[k]);
    }
  }
  double d0 = 0.0;
  if (!inverted.empty()) {
    std::nth_element(inverted.begin(), inverted.begin() + static_cast<long>(inverted.size() / 2),
                     inverted.end());
    d0 = inverted[inverted.size() / 2];
  }
  const double spread = std::max(std::abs(d0), 1.0);
  std::vector<Eigen::VectorXd> starts;
  for (double shift : {0.0, 0.1, -0.1, 0.3, -0.3}) {
    Eigen::VectorXd s(1);
    s << d0 + shift * spread;
    starts.push_back(s);
  }
  return finish(least_squares(model, delta_d, tau_s2_us, starts, options), {"delta_0"}, options);
}

FitResult fit_damped_oscillation(std::span<const double> t_us, std::span<const double> y,
                                 const FitOptions& options) {
  check_samples(t_us, y, 8, "fit_damped_oscillation");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  int crossings = 0;
  for (std::size_t k = 1; k < y.size(); ++k) {
    if ((y[k - 1] - mean) * (y[k] - mean) < 0.0) ++crossings;
  }
  if (crossings < 4) {
    throw InvalidParameter("fit_damped_oscillation: trace must cover at least two periods");
  }
  const double t0 = t_us.front();
  const double span = t_us.back() - t0;
  const double omega0 = std::numbers::pi * crossings / span;
  const double sign = y.front() >= mean ? 1.0 : -1.0;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());

  // Parameters: amplitude, 1/tau1, 1/tauphi, omega, offset.
  const Model model = [sign](const Eigen::VectorXd& p, double t) {
    return p[0] * std::exp(-p[1] * t) * (1.0 + sign * std::exp(-p[2] * t) * std::cos(p[3] * t)) + p[4];
  };
  const double amp0 = 0.5 * (*hi - *lo);
  const double rate = 1.0 / span;
  const std::array<std::array<double, 3>, 5> grid{{{1.0 / 3, 1.0 / 3, 1.0},
                                                   {1.0, 1.0, 1.0},
                                                   {0.1, 0.1, 1.02},
                                                   {1.0 / 3, 3.0, 0.98},
                                                   {3.0, 1.0 / 3, 1.0}}};
  std::vector<Eigen::VectorXd> starts;
  for (const auto& g : grid) {
    Eigen::VectorXd s(5);
    s << amp0, g[0] * rate, g[1] * rate, g[2] * omega0, *lo;
    starts.push_back(s);
  }
  const RawFit raw = least_squares(model, t_us, y, starts, options);
  FitResult out = finish(raw, {"tau1_us", "tauphi_us", "omega", "amplitude", "offset"}, options);
  if (raw.p.size() != 5) return out;

  // Report lifetimes; a rate at or below this floor means no visible decay.
  constexpr double kRateFloor = 1e-6;
  const double inf = std::numeric_limits<double>::infinity();
  for (int k : {1, 2}) {
    const double gamma = raw.p[k];
    const auto idx = static_cast<std::size_t>(k - 1);
    if (gamma <= kRateFloor) {
      out.estimates[idx] = inf;
      out.sigmas[idx] = inf;
      out.at_bound = true;
    } else {
      out.estimates[idx] = 1.0 / gamma;
      out.sigmas[idx] = raw.sigma[k] / (gamma * gamma);
    }
  }
  out.estimates[2] = std::abs(raw.p[3]);
  out.sigmas[2] = raw.sigma[3];
  out.estimates[3] = raw.p[0];
  out.sigmas[3] = raw.sigma[0];
  if (out.at_bound && out.message.empty()) out.message = "decay rate at its lower bound";
  return out;
}

}  // namespace exfree
