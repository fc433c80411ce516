#include "nscmi/population.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "nscmi/analysis.hpp"
#include "nscmi/error.hpp"
#include "nscmi/glm.hpp"

namespace nscmi::population {

using loglinear::JointTable;
using loglinear::Mask;

double ObservedLaw::at(Mask m, Mask y) const {
  return mass[static_cast<std::size_t>(m) | (static_cast<std::size_t>(y & ~m) << k)];
}

const char* to_string(Method m) {
  switch (m) {
    case Method::kNsc: return "nsc";
    case Method::kMar: return "mar";
    case Method::kAvailable: return "available";
  }
  return "?";
}

namespace {

void check_dimension(const JointTable& table) {
  if (table.k() > kMaxK) {
    throw ValidationError("population: K = " + std::to_string(table.k()) + " exceeds the limit of " +
                          std::to_string(kMaxK));
  }
}

}  // namespace

ObservedLaw observed_law(const JointTable& table) {
  check_dimension(table);
  ObservedLaw law{table.k(), std::vector<double>(table.size(), 0.0)};
  for (std::size_t c = 0; c < table.size(); ++c) {
    const Mask m = table.m_bits(c);
    law.mass[table.cell(m, table.y_bits(c) & ~m)] += table[c];
  }
  return law;
}

PopulationResult population_fcs(const JointTable& table, fcs::Mechanism mechanism, const std::vector<double>& offsets,
                                const PopulationOptions& options) {
  check_dimension(table);
  const int dim = table.k();
  if (dim < 2) throw ValidationError("population: need K >= 2");
  if (!offsets.empty() && offsets.size() != static_cast<std::size_t>(dim)) {
    throw ValidationError("population: need one offset per outcome");
  }
  for (double o : offsets) {
    if (!std::isfinite(o)) throw ValidationError("population: offsets must be finite");
  }
  const std::size_t cells = table.size();
  const bool nsc = mechanism == fcs::Mechanism::kNsc;

  // Observed margins P(Y_k = 1 | M_k = 0).
  std::vector<double> margin(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    double observed = 0.0;
    double ones = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      if ((table.m_bits(c) >> k) & 1U) continue;
      observed += table[c];
      if ((table.y_bits(c) >> k) & 1U) ones += table[c];
    }
    if (!(observed > 0.0)) {
      throw ValidationError("population: outcome " + std::to_string(k + 1) + " has no observed mass");
    }
    margin[static_cast<std::size_t>(k)] = ones / observed;
  }

  const ObservedLaw law = observed_law(table);
  std::vector<double> q(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    const Mask m = table.m_bits(c);
    const Mask y = table.y_bits(c);
    double w = law.at(m, y);
    if (w == 0.0) continue;
    for (int k = 0; k < dim; ++k) {
      if (!((m >> k) & 1U)) continue;
      const double p = margin[static_cast<std::size_t>(k)];
      w *= ((y >> k) & 1U) ? p : 1.0 - p;
    }
    q[c] = w;
  }

  // Contexts for outcome k: one row per (y_{-k}, m_{-k}) in the compressed
  // index where bit k of y and m are removed.
  const std::size_t contexts = cells >> 2;
  const int p = nsc ? 2 * dim - 1 : dim;
  auto expand = [](Mask bits, int k) -> Mask {
    const Mask low = bits & ((Mask{1} << k) - 1);
    return low | ((bits >> k) << (k + 1));
  };
  // Design rows are the same every sweep.
  std::vector<glm::DesignMatrix> designs(static_cast<std::size_t>(dim));
  std::vector<bool> has_missing(static_cast<std::size_t>(dim), false);
  for (int k = 0; k < dim; ++k) {
    glm::DesignMatrix& d = designs[static_cast<std::size_t>(k)];
    d.x.resize(static_cast<Eigen::Index>(contexts), p);
    const Mask sub = (Mask{1} << (dim - 1)) - 1;
    for (std::size_t ctx = 0; ctx < contexts; ++ctx) {
      const Mask yr = static_cast<Mask>(ctx) & sub;
      const Mask mr = static_cast<Mask>(ctx >> (dim - 1));
      const auto i = static_cast<Eigen::Index>(ctx);
      d.x(i, 0) = 1.0;
      for (int j = 0; j < dim - 1; ++j) {
        d.x(i, 1 + j) = (yr >> j) & 1U;
        if (nsc) d.x(i, dim + j) = (mr >> j) & 1U;
      }
    }
    for (std::size_t c = 0; c < cells; ++c) {
      if (((table.m_bits(c) >> k) & 1U) && table[c] > 0.0) has_missing[static_cast<std::size_t>(k)] = true;
    }
  }

  std::vector<std::optional<Eigen::VectorXd>> starts(static_cast<std::size_t>(dim));
  std::vector<double> response(contexts);
  std::vector<double> weights(contexts);
  std::vector<double> row(static_cast<std::size_t>(p));
  PopulationResult result{JointTable::uniform(dim), 0, 0.0, {}};
  double change = 0.0;
  std::vector<double> previous;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    previous = q;
    for (int k = 0; k < dim; ++k) {
      if (!has_missing[static_cast<std::size_t>(k)]) continue;
      const Mask bit = Mask{1} << k;
      for (std::size_t ctx = 0; ctx < contexts; ++ctx) {
        const Mask yr = static_cast<Mask>(ctx) & ((Mask{1} << (dim - 1)) - 1);
        const Mask mr = static_cast<Mask>(ctx >> (dim - 1));
        const Mask y0 = expand(yr, k);
        const Mask m0 = expand(mr, k);
        const double w0 = q[table.cell(m0, y0)];
        const double w1 = q[table.cell(m0, y0 | bit)];
        weights[ctx] = w0 + w1;
        response[ctx] = weights[ctx] > 0.0 ? w1 / weights[ctx] : 0.0;
      }
      glm::GlmOptions opts;
      opts.ridge = 0.0;
      opts.tolerance = 1e-12;
      opts.start = starts[static_cast<std::size_t>(k)];
      const glm::DesignMatrix& design = designs[static_cast<std::size_t>(k)];
      const glm::GlmFit fit = glm::fit_logistic(design, response, weights, opts);
      if (!fit.coefficients.allFinite()) {
        throw NumericalError("population: non-finite fit for outcome " + std::to_string(k + 1));
      }
      starts[static_cast<std::size_t>(k)] = fit.coefficients;
      const double offset = offsets.empty() ? 0.0 : offsets[static_cast<std::size_t>(k)];

      for (std::size_t ctx = 0; ctx < contexts; ++ctx) {
        const Mask yr = static_cast<Mask>(ctx) & ((Mask{1} << (dim - 1)) - 1);
        const Mask mr = static_cast<Mask>(ctx >> (dim - 1));
        const Mask y0 = expand(yr, k);
        const Mask m1 = expand(mr, k) | bit;
        const std::size_t c0 = table.cell(m1, y0);
        const std::size_t c1 = table.cell(m1, y0 | bit);
        const double total = q[c0] + q[c1];
        if (total == 0.0) continue;
        for (int j = 0; j < p; ++j) row[static_cast<std::size_t>(j)] = design.x(static_cast<Eigen::Index>(ctx), j);
        const double pr = glm::predict(fit, row, offset);
        const double n1 = total * pr;
        const double n0 = total - n1;
        q[c0] = n0;
        q[c1] = n1;
      }
    }
    change = 0.0;
    for (std::size_t c = 0; c < cells; ++c) change = std::max(change, std::abs(q[c] - previous[c]));
    result.sweeps = sweep;
    if (change < options.tolerance) break;
  }
  result.final_change = change;
  if (!(change < options.tolerance)) {
    throw ConvergenceError("population_fcs: no convergence after " + std::to_string(options.max_sweeps) +
                               " sweeps (last change " + std::to_string(change) + ")",
                           change);
  }
  result.completed = JointTable(dim, std::move(q));
  for (int k = 1; k <= dim; ++k) result.marginals.push_back(loglinear::marginal(result.completed, loglinear::Y(k)));
  return result;
}

std::vector<double> asymptotic_bias(const scenarios::ScenarioOutput& scenario, Method method,
                                    const PopulationOptions& options) {
  const JointTable& table = scenario.table;
  std::vector<double> estimates;
  if (method == Method::kAvailable) {
    for (int k = 1; k <= table.k(); ++k) {
      const loglinear::Assignment given[] = {{loglinear::M(k), 0}};
      estimates.push_back(loglinear::conditional(table, loglinear::Y(k), given));
    }
  } else {
    const auto mech = method == Method::kNsc ? fcs::Mechanism::kNsc : fcs::Mechanism::kMar;
    estimates = population_fcs(table, mech, {}, options).marginals;
  }
  std::vector<double> bias;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    bias.push_back(analysis::percent_bias(estimates[k], scenario.truth[k]));
  }
  return bias;
}

}  // namespace nscmi::population
