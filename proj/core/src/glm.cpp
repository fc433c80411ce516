#include "nscmi/glm.hpp"

#include <algorithm>
#include <cmath>

#include "nscmi/error.hpp"

namespace nscmi::glm {

namespace {

constexpr double kJitter = 1e-10;
constexpr double kClamp = 1e-12;

double softplus(double eta) noexcept { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

struct Objective {
  double log_likelihood;
  double penalized;
};

Objective objective(const Eigen::VectorXd& eta, std::span<const double> y, std::span<const double> w,
                    const Eigen::VectorXd& beta, double ridge) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (w[u] == 0.0) continue;
    ll += w[u] * (y[u] * eta(i) - softplus(eta(i)));
  }
  const double penalty = ridge * beta.tail(beta.size() - 1).squaredNorm();
  return {ll, ll - penalty};
}

}  // namespace

double inverse_logit(double eta) noexcept {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

void DesignMatrix::validate() const {
  if (x.rows() < 1 || x.cols() < 1) throw ValidationError("glm: design matrix must be at least 1 x 1");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != x.cols()) {
    throw ValidationError("glm: design has " + std::to_string(x.cols()) + " columns but " +
                          std::to_string(labels.size()) + " labels");
  }
  if (!x.allFinite()) throw ValidationError("glm: design matrix has non-finite entries");
}

GlmFit fit_logistic(const DesignMatrix& design, std::span<const double> response,
                    std::span<const double> weights, const GlmOptions& options) {
  design.validate();
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (static_cast<Eigen::Index>(response.size()) != n || static_cast<Eigen::Index>(weights.size()) != n) {
    throw ValidationError("glm: response/weights length does not match the design");
  }
  if (!(options.ridge >= 0.0) || !std::isfinite(options.ridge)) {
    throw ValidationError("glm: ridge must be finite and non-negative");
  }
  double total_weight = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) throw ValidationError("glm: weights must be finite and >= 0");
    if (!std::isfinite(response[i]) || response[i] < 0.0 || response[i] > 1.0) {
      throw ValidationError("glm: responses must lie in [0, 1]");
    }
    total_weight += weights[i];
  }
  if (!(total_weight > 0.0)) throw ValidationError("glm: total weight is zero");

  const Eigen::MatrixXd& x = design.x;
  const double two_ridge = 2.0 * options.ridge;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (options.start) {
    if (options.start->size() != p) throw ValidationError("glm: start vector has the wrong length");
    beta = *options.start;
  }
  Eigen::VectorXd eta = x * beta;
  Objective obj = objective(eta, response, weights, beta, options.ridge);

  Eigen::VectorXd grad(p);
  Eigen::MatrixXd info(p, p);
  Eigen::VectorXd curv(n);
  Eigen::VectorXd resid(n);

  auto assemble = [&]() {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const double mu = inverse_logit(eta(i));
      resid(i) = weights[u] * (response[u] - mu);
      curv(i) = std::sqrt(weights[u] * mu * (1.0 - mu));
    }
    grad.noalias() = x.transpose() * resid;
    const Eigen::MatrixXd xs = x.array().colwise() * curv.array();
    info.setZero();
    info.selfadjointView<Eigen::Lower>().rankUpdate(xs.transpose());
    info.triangularView<Eigen::Upper>() = info.transpose();
    for (Eigen::Index j = 1; j < p; ++j) {
      grad(j) -= two_ridge * beta(j);
      info(j, j) += two_ridge;
    }
  };

  GlmFit fit;
  fit.labels = design.labels;
  fit.ridge = options.ridge;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    assemble();
    Eigen::MatrixXd h = info;
    h.diagonal().array() += kJitter;
    const Eigen::VectorXd delta = h.ldlt().solve(grad);

    // Step halving keeps the penalized objective from decreasing.
    double scale = 1.0;
    Eigen::VectorXd trial_beta;
    Eigen::VectorXd trial_eta;
    Objective trial{};
    for (int halvings = 0; halvings < 40; ++halvings) {
      trial_beta = beta + scale * delta;
      trial_eta = x * trial_beta;
      trial = objective(trial_eta, response, weights, trial_beta, options.ridge);
      if (std::isfinite(trial.penalized) && trial.penalized >= obj.penalized - 1e-12 * (1.0 + std::abs(obj.penalized))) {
        break;
      }
      scale *= 0.5;
    }
    const double change = (scale * delta).cwiseAbs().maxCoeff();
    beta = std::move(trial_beta);
    eta = std::move(trial_eta);
    obj = trial;
    fit.iterations = iter;
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }

  assemble();
  Eigen::MatrixXd h = info;
  h.diagonal().array() += kJitter;
  Eigen::MatrixXd cov = h.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.covariance = 0.5 * (cov + cov.transpose());
  fit.coefficients = std::move(beta);
  fit.log_likelihood = obj.log_likelihood;
  if (fit.converged && !fit.coefficients.allFinite()) fit.converged = false;
  return fit;
}

GlmFit fit_logistic_guarded(const DesignMatrix& design, std::span<const double> response,
                            std::span<const double> weights, double ridge, const EscalationPolicy& policy) {
  GlmFit fit = fit_logistic(design, response, weights, ridge);
  auto too_large = [&](const GlmFit& f) {
    for (Eigen::Index j = 1; j < f.coefficients.size(); ++j) {
      if (!(std::abs(f.coefficients(j)) <= policy.bound)) return true;
    }
    return false;
  };
  double current = ridge;
  for (int e = 0; e < policy.max_escalations && too_large(fit); ++e) {
    current = current > 0.0 ? current * policy.factor : policy.floor;
    fit = fit_logistic(design, response, weights, current);
  }
  return fit;
}

double predict(const GlmFit& fit, std::span<const double> row, double offset) {
  if (static_cast<Eigen::Index>(row.size()) != fit.coefficients.size()) {
    throw ValidationError("glm: predict row has " + std::to_string(row.size()) + " entries, fit has " +
                          std::to_string(fit.coefficients.size()));
  }
  double eta = offset;
  for (std::size_t j = 0; j < row.size(); ++j) eta += fit.coefficients(static_cast<Eigen::Index>(j)) * row[j];
  return std::clamp(inverse_logit(eta), kClamp, 1.0 - kClamp);
}

}  // namespace nscmi::glm
