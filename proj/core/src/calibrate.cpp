#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "nscmi/error.hpp"
#include "nscmi/loglinear.hpp"

namespace nscmi::loglinear {

namespace {

// Marginals of the current spec, one per target.
Eigen::VectorXd moments(const LoglinearSpec& spec, std::span<const MomentTarget> targets) {
  const JointTable table = build_table(spec);
  Eigen::VectorXd out(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < targets.size(); ++i) out(static_cast<Eigen::Index>(i)) = marginal(table, targets[i].variable);
  return out;
}

double safe_logit(double p) {
  p = std::clamp(p, 1e-300, 1.0 - 1e-16);
  return std::log(p) - std::log1p(-p);
}

// Newton runs on logit(moment) - logit(target), which stays well conditioned
// when a trial step drives a marginal towards 0 or 1.
Eigen::VectorXd logit_residuals(const Eigen::VectorXd& mom, std::span<const MomentTarget> targets) {
  Eigen::VectorXd r(mom.size());
  for (Eigen::Index i = 0; i < mom.size(); ++i) {
    r(i) = safe_logit(mom(i)) - safe_logit(targets[static_cast<std::size_t>(i)].value);
  }
  return r;
}

double max_abs_error(const Eigen::VectorXd& mom, std::span<const MomentTarget> targets) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < mom.size(); ++i) {
    worst = std::max(worst, std::abs(mom(i) - targets[static_cast<std::size_t>(i)].value));
  }
  return worst;
}

Eigen::VectorXd residuals(const LoglinearSpec& spec, std::span<const MomentTarget> targets) {
  return logit_residuals(moments(spec, targets), targets);
}

void assign(LoglinearSpec& spec, std::span<const TermKey> keys, const Eigen::VectorXd& x) {
  for (std::size_t i = 0; i < keys.size(); ++i) spec.set(keys[i], x(static_cast<Eigen::Index>(i)));
}

}  // namespace

LoglinearSpec calibrate(const LoglinearSpec& templ, std::span<const TermKey> free_terms,
                        std::span<const MomentTarget> targets, const CalibrationOptions& options) {
  if (free_terms.size() != targets.size()) {
    throw ValidationError("calibrate: need as many free terms as targets");
  }
  if (templ.k() > kMaxEnumerationK) throw ValidationError("calibrate: K exceeds enumeration cap");
  for (const auto& t : targets) {
    if (t.variable.index < 1 || t.variable.index > templ.k()) {
      throw ValidationError("calibrate: target variable index out of range");
    }
    if (!(t.value > 0.0 && t.value < 1.0)) {
      throw ValidationError("calibrate: marginal targets must lie in (0, 1)");
    }
  }
  const auto n = static_cast<Eigen::Index>(free_terms.size());
  LoglinearSpec spec = templ;
  if (n == 0) return spec;

  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = templ.get(free_terms[static_cast<std::size_t>(i)]);
  Eigen::VectorXd mom = moments(spec, targets);
  Eigen::VectorXd r = logit_residuals(mom, targets);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (max_abs_error(mom, targets) < options.tolerance) return spec;

    // Central-difference Jacobian.
    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd xp = x;
      Eigen::VectorXd xm = x;
      xp(j) += options.fd_step;
      xm(j) -= options.fd_step;
      LoglinearSpec sp = spec;
      LoglinearSpec sm = spec;
      assign(sp, free_terms, xp);
      assign(sm, free_terms, xm);
      jac.col(j) = (residuals(sp, targets) - residuals(sm, targets)) / (2.0 * options.fd_step);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    qr.setThreshold(1e-12);
    if (qr.rank() < n) {
      throw NumericalError("calibrate: singular Jacobian (free terms do not identify the targets)");
    }
    const Eigen::VectorXd step = qr.solve(-r);

    // Halve the step until the residual norm stops increasing.
    double scale = 1.0;
    const double current = r.norm();
    Eigen::VectorXd x_next;
    Eigen::VectorXd r_next;
    Eigen::VectorXd mom_next;
    for (;;) {
      x_next = x + scale * step;
      LoglinearSpec trial = spec;
      assign(trial, free_terms, x_next);
      mom_next = moments(trial, targets);
      r_next = logit_residuals(mom_next, targets);
      if (r_next.allFinite() && r_next.norm() <= current) break;
      scale *= 0.5;
      if (scale < 1e-12) break;
    }
    x = x_next;
    r = r_next;
    mom = mom_next;
    assign(spec, free_terms, x);
  }

  const double final_residual = max_abs_error(mom, targets);
  if (final_residual < options.tolerance) return spec;
  std::ostringstream msg;
  msg << "calibrate: no convergence after " << options.max_iterations
      << " iterations (max |residual| = " << final_residual << ")";
  throw ConvergenceError(msg.str(), final_residual);
}

}  // namespace nscmi::loglinear
