#pragma once

// Weighted, ridge-stabilized binary logistic regression fitted by IRLS.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nscmi::glm {

// n x p, first column the intercept.
struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> labels;

  Eigen::Index rows() const noexcept { return x.rows(); }
  Eigen::Index cols() const noexcept { return x.cols(); }

  // Throws ValidationError on empty shape, label mismatch or non-finite cells.
  void validate() const;
};

struct GlmFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;  // inverse penalized Fisher information
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;  // weighted, unpenalized
  double ridge = 0.0;           // penalty actually used (after escalation)
  std::vector<std::string> labels;
};

struct GlmOptions {
  double ridge = 0.0;
  int max_iterations = 100;
  double tolerance = 1e-8;  // on max |delta beta|
  std::optional<Eigen::VectorXd> start;  // default: beta = 0
};

// Maximizes sum_i w_i [y_i log p_i + (1-y_i) log(1-p_i)] - ridge * sum_{j>=2} beta_j^2.
// Non-convergence is reported through GlmFit::converged, not thrown.
GlmFit fit_logistic(const DesignMatrix& design, std::span<const double> response,
                    std::span<const double> weights, const GlmOptions& options);

inline GlmFit fit_logistic(const DesignMatrix& design, std::span<const double> response,
                           std::span<const double> weights, double ridge) {
  GlmOptions options;
  options.ridge = ridge;
  return fit_logistic(design, response, weights, options);
}

// Separation guard: refit with ridge x100 (starting from 1e-4 when ridge is
// zero) while any non-intercept |beta_j| exceeds `bound`, at most
// `max_escalations` times.
struct EscalationPolicy {
  double bound = 15.0;
  double factor = 100.0;
  double floor = 1e-4;
  int max_escalations = 3;
};

GlmFit fit_logistic_guarded(const DesignMatrix& design, std::span<const double> response,
                            std::span<const double> weights, double ridge,
                            const EscalationPolicy& policy = {});

// inverse-logit(beta . row + offset), clamped to [1e-12, 1 - 1e-12].
double predict(const GlmFit& fit, std::span<const double> row, double offset = 0.0);

double inverse_logit(double eta) noexcept;
double logit(double p) noexcept;

}  // namespace nscmi::glm
