#include "nscmi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <boost/math/distributions/students_t.hpp>

#include "nscmi/error.hpp"

namespace nscmi::analysis {

namespace {

double binomial_variance(double p, std::size_t n) { return p * (1.0 - p) / static_cast<double>(n); }

double two_sided_p(double z, double df) {
  if (!std::isfinite(z)) return 0.0;
  const double a = std::abs(z);
  if (!std::isfinite(df) || df > 1e10) return std::erfc(a / std::sqrt(2.0));
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, a)), 0.0, 1.0);
}

int label_index(const glm::GlmFit& fit, const std::string& label) {
  const auto it = std::find(fit.labels.begin(), fit.labels.end(), label);
  return it == fit.labels.end() ? -1 : static_cast<int>(it - fit.labels.begin());
}

}  // namespace

double PooledResult::se() const { return std::sqrt(total); }

std::vector<EstimateWithVariance> marginal_estimates(const Dataset& completed) {
  if (!completed.complete()) throw ValidationError("marginal_estimates: dataset has missing cells");
  if (completed.n() == 0) throw ValidationError("marginal_estimates: dataset is empty");
  std::vector<EstimateWithVariance> out;
  for (int k = 0; k < completed.k(); ++k) {
    double ones = 0.0;
    for (std::size_t r = 0; r < completed.n(); ++r) ones += completed.y(r, k);
    const double p = ones / static_cast<double>(completed.n());
    out.push_back({p, binomial_variance(p, completed.n()), completed.outcome_names()[static_cast<std::size_t>(k)]});
  }
  return out;
}

std::vector<EstimateWithVariance> available_case(const Dataset& dataset) {
  std::vector<EstimateWithVariance> out;
  for (int k = 0; k < dataset.k(); ++k) {
    std::size_t observed = 0;
    double ones = 0.0;
    for (std::size_t r = 0; r < dataset.n(); ++r) {
      if (dataset.missing(r, k)) continue;
      ++observed;
      ones += dataset.y(r, k);
    }
    const std::string& name = dataset.outcome_names()[static_cast<std::size_t>(k)];
    if (observed == 0) throw ValidationError("available_case: outcome '" + name + "' is entirely missing");
    const double p = ones / static_cast<double>(observed);
    out.push_back({p, binomial_variance(p, observed), name});
  }
  return out;
}

int consecutive_abstinence(std::span<const std::int8_t> row, int run_length) {
  if (run_length < 1 || run_length > static_cast<int>(row.size())) {
    throw ValidationError("consecutive_abstinence: run length must be in [1, K]");
  }
  int run = 0;
  for (std::int8_t v : row) {
    if (v == kMissing) throw ValidationError("consecutive_abstinence: row is incomplete");
    run = v == 1 ? run + 1 : 0;
    if (run >= run_length) return 1;
  }
  return 0;
}

Endpoint Endpoint::parse(const std::string& text, const Dataset& data) {
  static const std::regex consec(R"(consec(\d+))");
  std::smatch match;
  Endpoint e;
  e.name = text;
  if (std::regex_match(text, match, consec)) {
    e.kind = Kind::kConsecutive;
    e.run_length = std::stoi(match[1].str());
    if (e.run_length < 1 || e.run_length > data.k()) {
      throw ValidationError("endpoint '" + text + "': run length must be between 1 and " + std::to_string(data.k()));
    }
    return e;
  }
  const auto& names = data.outcome_names();
  const auto it = std::find(names.begin(), names.end(), text);
  if (it == names.end()) {
    throw ValidationError("unknown endpoint '" + text + "' (expected consecN or an outcome column)");
  }
  e.kind = Kind::kColumn;
  e.column = static_cast<int>(it - names.begin());
  return e;
}

std::vector<double> endpoint_values(const Dataset& completed, const Endpoint& endpoint) {
  std::vector<double> values(completed.n());
  for (std::size_t r = 0; r < completed.n(); ++r) {
    if (endpoint.kind == Endpoint::Kind::kConsecutive) {
      values[r] = consecutive_abstinence(completed.row(r), endpoint.run_length);
    } else {
      const std::int8_t v = completed.y(r, endpoint.column);
      if (v == kMissing) {
        throw ValidationError("endpoint '" + endpoint.name + "' is missing in row " + std::to_string(r + 1));
      }
      values[r] = v;
    }
  }
  return values;
}

glm::DesignMatrix analysis_design(const Dataset& completed, const AnalysisSpec& spec) {
  struct Column {
    const Covariate* cov;
    int level;  // -1 for continuous
  };
  std::vector<Column> columns;
  std::vector<std::string> labels = {"(Intercept)"};
  for (const auto& name : spec.covariates) {
    const Covariate& cov = completed.covariate(name);
    if (!cov.is_categorical()) {
      columns.push_back({&cov, -1});
      labels.push_back(name);
      continue;
    }
    int reference = 0;
    if (const auto it = spec.reference_levels.find(name); it != spec.reference_levels.end()) {
      reference = cov.level_index(it->second);
      if (reference < 0) throw ValidationError("reference level '" + it->second + "' not found in '" + name + "'");
    }
    for (int lv = 0; lv < static_cast<int>(cov.levels.size()); ++lv) {
      if (lv == reference) continue;
      columns.push_back({&cov, lv});
      labels.push_back(name + "[" + cov.levels[static_cast<std::size_t>(lv)] + "]");
    }
  }
  glm::DesignMatrix design;
  design.labels = std::move(labels);
  design.x.resize(static_cast<Eigen::Index>(completed.n()), static_cast<Eigen::Index>(columns.size() + 1));
  for (std::size_t r = 0; r < completed.n(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    design.x(i, 0) = 1.0;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const Column& col = columns[c];
      design.x(i, static_cast<Eigen::Index>(c + 1)) =
          col.level < 0 ? col.cov->values[r] : (col.cov->codes[r] == col.level ? 1.0 : 0.0);
    }
  }
  return design;
}

glm::GlmFit analysis_model(const Dataset& completed, const AnalysisSpec& spec) {
  const glm::DesignMatrix design = analysis_design(completed, spec);
  design.validate();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.x);
  if (qr.rank() < design.cols()) {
    // Name each column that adds no rank to the columns before it.
    std::string names;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < design.cols(); ++j) {
      Eigen::MatrixXd sub(design.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
      for (std::size_t i = 0; i < kept.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = design.x.col(kept[i]);
      sub.col(sub.cols() - 1) = design.x.col(j);
      if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(sub).rank() == sub.cols()) {
        kept.push_back(j);
      } else {
        if (!names.empty()) names += ", ";
        names += design.labels[static_cast<std::size_t>(j)];
      }
    }
    throw ValidationError("analysis model: rank-deficient design; dependent columns: " + names);
  }
  const std::vector<double> response = endpoint_values(completed, spec.endpoint);
  const std::vector<double> weights(completed.n(), 1.0);
  return glm::fit_logistic_guarded(design, response, weights, 0.0);
}

EstimateWithVariance coefficient(const glm::GlmFit& fit, const std::string& label) {
  const int j = label_index(fit, label);
  if (j < 0) throw ValidationError("no coefficient named '" + label + "'");
  return {fit.coefficients(j), fit.covariance(j, j), label};
}

EstimateWithVariance contrast(const glm::GlmFit& fit, const std::string& covariate, const std::string& level_a,
                              const std::string& level_b) {
  const int a = label_index(fit, covariate + "[" + level_a + "]");
  const int b = label_index(fit, covariate + "[" + level_b + "]");
  if (a < 0 && b < 0) {
    throw ValidationError("contrast " + level_a + " vs " + level_b + ": neither level has a coefficient in the model");
  }
  double value = 0.0;
  double variance = 0.0;
  if (a >= 0) {
    value += fit.coefficients(a);
    variance += fit.covariance(a, a);
  }
  if (b >= 0) {
    value -= fit.coefficients(b);
    variance += fit.covariance(b, b);
  }
  if (a >= 0 && b >= 0) variance -= 2.0 * fit.covariance(a, b);
  return {value, std::max(variance, 0.0), level_a + " vs " + level_b};
}

PooledResult rubin_pool(std::span<const EstimateWithVariance> per_imputation) {
  if (per_imputation.empty()) throw ValidationError("rubin_pool: no estimates to pool");
  PooledResult out;
  out.label = per_imputation.front().label;
  out.t = static_cast<int>(per_imputation.size());
  const double t = out.t;
  for (const auto& e : per_imputation) {
    if (!std::isfinite(e.value) || !std::isfinite(e.variance) || e.variance < 0.0) {
      throw ValidationError("rubin_pool: estimates must be finite with non-negative variance");
    }
    out.estimate += e.value;
    out.within += e.variance;
  }
  out.estimate /= t;
  out.within /= t;
  if (out.t >= 2) {
    double ss = 0.0;
    for (const auto& e : per_imputation) ss += (e.value - out.estimate) * (e.value - out.estimate);
    out.between = ss / (t - 1.0);
  } else {
    out.single_imputation = true;
  }
  const double inflated = (1.0 + 1.0 / t) * out.between;
  out.total = out.within + inflated;
  if (out.between > 0.0) {
    const double r = 1.0 + out.within / inflated;
    out.df = (t - 1.0) * r * r;
  }
  if (out.total > 0.0) {
    out.p_value = two_sided_p(out.estimate / std::sqrt(out.total), out.df);
  } else {
    out.p_value = out.estimate == 0.0 ? 1.0 : 0.0;
  }
  return out;
}

std::vector<PooledResult> pool_coefficients(std::span<const glm::GlmFit> fits) {
  if (fits.empty()) throw ValidationError("pool_coefficients: no fits");
  const auto& labels = fits.front().labels;
  std::vector<PooledResult> out;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    std::vector<EstimateWithVariance> per;
    for (const auto& f : fits) {
      if (f.labels != labels) throw ValidationError("pool_coefficients: fits have different coefficient labels");
      const auto i = static_cast<Eigen::Index>(j);
      per.push_back({f.coefficients(i), f.covariance(i, i), labels[j]});
    }
    out.push_back(rubin_pool(per));
  }
  return out;
}

double percent_bias(double estimate, double truth) {
  if (truth == 0.0) throw ValidationError("percent_bias: truth is zero");
  return 100.0 * (estimate - truth) / truth;
}

}  // namespace nscmi::analysis
