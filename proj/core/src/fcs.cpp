#include "nscmi/fcs.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <set>

#include <tbb/parallel_for.h>

#include "nscmi/error.hpp"

namespace nscmi::fcs {

std::string to_string(Mechanism m) { return m == Mechanism::kNsc ? "nsc" : "mar"; }

std::string to_string(CovariateDesign d) {
  switch (d) {
    case CovariateDesign::kNone: return "none";
    case CovariateDesign::kMainEffects: return "main-effects";
    case CovariateDesign::kGroupInteractions: return "group-interactions";
    case CovariateDesign::kStratifyBy: return "stratify-by";
  }
  return "none";
}

Mechanism parse_mechanism(const std::string& s) {
  if (s == "nsc" || s == "NSC") return Mechanism::kNsc;
  if (s == "mar" || s == "MAR") return Mechanism::kMar;
  throw ValidationError("unknown mechanism '" + s + "' (expected nsc or mar)");
}

CovariateDesign parse_covariate_design(const std::string& s) {
  if (s == "none") return CovariateDesign::kNone;
  if (s == "main-effects") return CovariateDesign::kMainEffects;
  if (s == "group-interactions") return CovariateDesign::kGroupInteractions;
  if (s == "stratify-by") return CovariateDesign::kStratifyBy;
  throw ValidationError("unknown covariate design '" + s +
                        "' (expected none, main-effects, group-interactions or stratify-by)");
}

// ---------------------------------------------------------------------------
// Sensitivity offsets

double SensitivityOffsets::offset(const Dataset& data, std::size_t row, int k) const {
  if (!group_covariate.empty() && !per_level.empty()) {
    const Covariate& g = data.covariate(group_covariate);
    const auto it = per_level.find(g.levels[static_cast<std::size_t>(g.codes[row])]);
    if (it != per_level.end()) return it->second[static_cast<std::size_t>(k)];
  }
  return per_outcome.empty() ? 0.0 : per_outcome[static_cast<std::size_t>(k)];
}

void SensitivityOffsets::validate(const Dataset& data) const {
  const auto k = static_cast<std::size_t>(data.k());
  auto check = [k](const std::vector<double>& v, const std::string& what) {
    if (v.size() != k) {
      throw ValidationError("sensitivity offsets for " + what + " need " + std::to_string(k) + " entries");
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw ValidationError("sensitivity offsets must be finite");
    }
  };
  if (!per_outcome.empty()) check(per_outcome, "all rows");
  if (!per_level.empty()) {
    if (group_covariate.empty()) throw ValidationError("per-level offsets need a group covariate");
    const Covariate& g = data.covariate(group_covariate);
    if (!g.is_categorical()) throw ValidationError("sensitivity group covariate must be categorical");
    for (const auto& [level, v] : per_level) {
      if (g.level_index(level) < 0) {
        throw ValidationError("sensitivity level '" + level + "' not found in covariate '" + group_covariate + "'");
      }
      check(v, "level " + level);
    }
  }
}

// ---------------------------------------------------------------------------
// Config

void FcsConfig::validate(const Dataset& data) const {
  if (t_imputations < 1) throw ValidationError("fcs: t_imputations must be >= 1");
  if (r_iterations < 1) throw ValidationError("fcs: r_iterations must be >= 1");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ValidationError("fcs: ridge must be finite and >= 0");
  if (data.k() < 2) throw ValidationError("fcs: need K >= 2 outcomes");
  if (covariate_design == CovariateDesign::kGroupInteractions || covariate_design == CovariateDesign::kStratifyBy) {
    if (design_covariate.empty()) throw ValidationError("fcs: covariate design needs design_covariate");
    const Covariate& c = data.covariate(design_covariate);
    if (covariate_design == CovariateDesign::kStratifyBy && !c.is_categorical()) {
      throw ValidationError("fcs: stratify-by needs a categorical covariate");
    }
  }
  if (ym_interactions && mechanism == Mechanism::kMar) {
    throw ValidationError("fcs: Y-M interaction columns only apply to the NSC mechanism");
  }
  sensitivity.validate(data);
}

nlohmann::json FcsConfig::to_json() const {
  nlohmann::json per_level = nlohmann::json::object();
  for (const auto& [level, v] : sensitivity.per_level) per_level[level] = v;
  return {
      {"mechanism", to_string(mechanism)},
      {"t_imputations", t_imputations},
      {"r_iterations", r_iterations},
      {"ridge", ridge},
      {"seed", seed},
      {"covariate_design", to_string(covariate_design)},
      {"design_covariate", design_covariate},
      {"ym_interactions", ym_interactions},
      {"sensitivity",
       {{"per_outcome", sensitivity.per_outcome},
        {"group_covariate", sensitivity.group_covariate},
        {"per_level", per_level}}},
  };
}

FcsConfig FcsConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"mechanism", "t_imputations", "r_iterations", "ridge",
                                              "seed", "covariate_design", "design_covariate",
                                              "ym_interactions", "sensitivity"};
  if (!j.is_object()) throw ValidationError("fcs config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ValidationError("fcs config: unknown key '" + key + "'");
  }
  FcsConfig c;
  try {
    if (j.contains("mechanism")) c.mechanism = parse_mechanism(j["mechanism"].get<std::string>());
    if (j.contains("t_imputations")) c.t_imputations = j["t_imputations"].get<int>();
    if (j.contains("r_iterations")) c.r_iterations = j["r_iterations"].get<int>();
    if (j.contains("ridge")) c.ridge = j["ridge"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("covariate_design")) c.covariate_design = parse_covariate_design(j["covariate_design"].get<std::string>());
    if (j.contains("design_covariate")) c.design_covariate = j["design_covariate"].get<std::string>();
    if (j.contains("ym_interactions")) c.ym_interactions = j["ym_interactions"].get<bool>();
    if (j.contains("sensitivity")) {
      const auto& s = j["sensitivity"];
      if (s.contains("per_outcome")) c.sensitivity.per_outcome = s["per_outcome"].get<std::vector<double>>();
      if (s.contains("group_covariate")) c.sensitivity.group_covariate = s["group_covariate"].get<std::string>();
      if (s.contains("per_level")) {
        for (const auto& [level, v] : s["per_level"].items()) {
          c.sensitivity.per_level[level] = v.get<std::vector<double>>();
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("fcs config: ") + e.what());
  }
  return c;
}

std::uint64_t FcsConfig::hash() const {
  // FNV-1a over the canonical JSON dump.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Design layout

namespace {

struct Factor {
  enum class Kind { kIntercept, kY, kM, kContinuous, kLevel };
  Kind kind = Kind::kIntercept;
  int a = -1;  // outcome index, or covariate index
  int b = -1;  // second outcome (Y*M products) or level code
  int c = -1;  // M index for Y*M products
};

struct Column {
  Factor base;
  std::optional<Factor> times;
  std::string label;
};

class DesignLayout {
 public:
  DesignLayout(const Dataset& original, int k, const FcsConfig& config) {
    const int dim = original.k();
    const bool nsc = config.mechanism == Mechanism::kNsc;
    push({Factor::Kind::kIntercept}, "(Intercept)");

    std::vector<Factor> outcome_terms;
    std::vector<std::string> outcome_labels;
    for (int j = 0; j < dim; ++j) {
      if (j == k) continue;
      outcome_terms.push_back({Factor::Kind::kY, j});
      outcome_labels.push_back("Y" + std::to_string(j + 1));
    }
    if (nsc) {
      for (int j = 0; j < dim; ++j) {
        if (j == k) continue;
        outcome_terms.push_back({Factor::Kind::kM, j});
        outcome_labels.push_back("M" + std::to_string(j + 1));
      }
    }
    for (std::size_t i = 0; i < outcome_terms.size(); ++i) push(outcome_terms[i], outcome_labels[i]);
    if (nsc && config.ym_interactions) {
      for (int j = 0; j < dim; ++j) {
        for (int l = 0; l < dim; ++l) {
          if (j == k || l == k || j == l) continue;
          Factor f{Factor::Kind::kY, j};
          f.c = l;
          push(f, "Y" + std::to_string(j + 1) + ":M" + std::to_string(l + 1));
        }
      }
    }

    if (config.covariate_design == CovariateDesign::kNone) return;
    const int design_cov =
        config.design_covariate.empty() ? -1 : original.covariate_index(config.design_covariate);
    const auto& covs = original.covariates();
    std::vector<std::pair<Factor, std::string>> group_factors;
    for (int ci = 0; ci < static_cast<int>(covs.size()); ++ci) {
      const Covariate& cov = covs[static_cast<std::size_t>(ci)];
      if (config.covariate_design == CovariateDesign::kStratifyBy && ci == design_cov) continue;
      std::vector<std::pair<Factor, std::string>> factors;
      if (cov.is_categorical()) {
        for (int lv = 1; lv < static_cast<int>(cov.levels.size()); ++lv) {
          factors.push_back({{Factor::Kind::kLevel, ci, lv}, cov.name + "[" + cov.levels[static_cast<std::size_t>(lv)] + "]"});
        }
      } else {
        factors.push_back({{Factor::Kind::kContinuous, ci}, cov.name});
      }
      for (const auto& [f, label] : factors) push(f, label);
      if (ci == design_cov) group_factors = factors;
    }
    if (config.covariate_design == CovariateDesign::kGroupInteractions) {
      for (const auto& [g, glabel] : group_factors) {
        for (std::size_t i = 0; i < outcome_terms.size(); ++i) {
          columns_.push_back({outcome_terms[i], g, glabel + ":" + outcome_labels[i]});
        }
      }
    }
  }

  std::size_t size() const noexcept { return columns_.size(); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.label);
    return out;
  }

  template <typename Out>
  void fill(const Dataset& state, const Dataset& original, std::size_t row, Out&& out) const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      double v = eval(columns_[j].base, state, original, row);
      if (columns_[j].times) v *= eval(*columns_[j].times, state, original, row);
      out(j) = v;
    }
  }

 private:
  void push(Factor f, std::string label) { columns_.push_back({f, std::nullopt, std::move(label)}); }

  static double eval(const Factor& f, const Dataset& state, const Dataset& original, std::size_t row) {
    switch (f.kind) {
      case Factor::Kind::kIntercept: return 1.0;
      case Factor::Kind::kY: {
        const double y = state.y(row, f.a);
        return f.c >= 0 ? y * (original.missing(row, f.c) ? 1.0 : 0.0) : y;
      }
      case Factor::Kind::kM: return original.missing(row, f.a) ? 1.0 : 0.0;
      case Factor::Kind::kContinuous: return original.covariates()[static_cast<std::size_t>(f.a)].values[row];
      case Factor::Kind::kLevel:
        return original.covariates()[static_cast<std::size_t>(f.a)].codes[row] == f.b ? 1.0 : 0.0;
    }
    return 0.0;
  }

  std::vector<Column> columns_;
};

void require_complete(const Dataset& state) {
  if (!state.complete()) throw ValidationError("fcs: state must be fully imputed");
}

}  // namespace

// ---------------------------------------------------------------------------
// Operations

CompletedDataset initial_fill(const Dataset& dataset, Rng& rng) {
  Dataset filled = dataset;
  for (int k = 0; k < dataset.k(); ++k) {
    std::size_t observed = 0;
    std::size_t ones = 0;
    for (std::size_t r = 0; r < dataset.n(); ++r) {
      if (dataset.missing(r, k)) continue;
      ++observed;
      ones += static_cast<std::size_t>(dataset.y(r, k));
    }
    if (observed == 0) {
      throw ValidationError("fcs: outcome '" + dataset.outcome_names()[static_cast<std::size_t>(k)] +
                            "' is entirely missing");
    }
    const double p = static_cast<double>(ones) / static_cast<double>(observed);
    for (std::size_t r = 0; r < dataset.n(); ++r) {
      if (dataset.missing(r, k)) filled.set_y(r, k, static_cast<std::int8_t>(rng.bernoulli(p)));
    }
  }
  return {std::move(filled), {}};
}

glm::DesignMatrix fcs_design(const Dataset& completed, const Dataset& original, int k, const FcsConfig& config) {
  if (k < 0 || k >= original.k()) throw ValidationError("fcs_design: outcome index out of range");
  if (completed.n() != original.n() || completed.k() != original.k()) {
    throw ValidationError("fcs_design: state and mask shapes differ");
  }
  const DesignLayout layout(original, k, config);
  glm::DesignMatrix design;
  design.labels = layout.labels();
  design.x.resize(static_cast<Eigen::Index>(original.n()), static_cast<Eigen::Index>(layout.size()));
  for (std::size_t r = 0; r < original.n(); ++r) {
    auto row = design.x.row(static_cast<Eigen::Index>(r));
    layout.fill(completed, original, r, [&row](std::size_t j) -> double& { return row(static_cast<Eigen::Index>(j)); });
  }
  return design;
}

CompletedDataset sweep(CompletedDataset state, const Dataset& original, const FcsConfig& config, Rng& rng,
                       SweepStats* stats) {
  require_complete(state.data);
  if (state.data.n() != original.n() || state.data.k() != original.k()) {
    throw ValidationError("fcs: state and mask shapes differ");
  }
  const std::size_t n = original.n();
  const bool stratified = config.covariate_design == CovariateDesign::kStratifyBy;
  const Covariate* strata = stratified ? &original.covariate(config.design_covariate) : nullptr;
  const std::size_t n_strata = stratified ? strata->levels.size() : 1;

  std::vector<double> prob(n, 0.0);
  std::vector<double> buffer;
  for (int k = 0; k < original.k(); ++k) {
    if (original.missing_count(k) == 0) continue;
    const DesignLayout layout(original, k, config);
    const auto p = static_cast<Eigen::Index>(layout.size());
    buffer.assign(layout.size(), 0.0);

    for (std::size_t s = 0; s < n_strata; ++s) {
      std::vector<std::size_t> observed;
      std::vector<std::size_t> missing;
      for (std::size_t r = 0; r < n; ++r) {
        if (stratified && strata->codes[r] != static_cast<int>(s)) continue;
        (original.missing(r, k) ? missing : observed).push_back(r);
      }
      if (missing.empty()) continue;
      if (observed.empty()) {
        std::string where = stratified ? " in stratum " + config.design_covariate + "=" + strata->levels[s] : "";
        throw ValidationError("fcs: no observed values of " + original.outcome_names()[static_cast<std::size_t>(k)] +
                              where);
      }

      glm::DesignMatrix design;
      design.labels = layout.labels();
      design.x.resize(static_cast<Eigen::Index>(observed.size()), p);
      std::vector<double> response(observed.size());
      const std::vector<double> weights(observed.size(), 1.0);
      for (std::size_t i = 0; i < observed.size(); ++i) {
        auto row = design.x.row(static_cast<Eigen::Index>(i));
        layout.fill(state.data, original, observed[i],
                    [&row](std::size_t j) -> double& { return row(static_cast<Eigen::Index>(j)); });
        response[i] = state.data.y(observed[i], k);
      }
      const glm::GlmFit fit = glm::fit_logistic_guarded(design, response, weights, config.ridge);
      if (stats) {
        ++stats->fits;
        if (fit.ridge != config.ridge) ++stats->escalated_fits;
        if (!fit.converged) ++stats->nonconverged_fits;
      }
      for (std::size_t r : missing) {
        layout.fill(state.data, original, r, [&buffer](std::size_t j) -> double& { return buffer[j]; });
        prob[r] = glm::predict(fit, buffer, config.sensitivity.offset(original, r, k));
      }
    }

    for (std::size_t r = 0; r < n; ++r) {
      if (original.missing(r, k)) state.data.set_y(r, k, static_cast<std::int8_t>(rng.bernoulli(prob[r])));
    }
  }
  return state;
}

std::vector<CompletedDataset> impute(const Dataset& dataset, const FcsConfig& config, SweepStats* stats) {
  config.validate(dataset);
  const auto t_count = static_cast<std::size_t>(config.t_imputations);
  const std::uint64_t config_hash = config.hash();
  std::vector<CompletedDataset> out(t_count);
  std::vector<SweepStats> per(t_count);
  tbb::parallel_for(std::size_t{0}, t_count, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(config.seed, Stream::kImputation, t + 1);
    Rng rng(seed);
    CompletedDataset state = initial_fill(dataset, rng);
    for (int r = 0; r < config.r_iterations; ++r) {
      state = sweep(std::move(state), dataset, config, rng, &per[t]);
    }
    state.provenance = {static_cast<int>(t + 1), config_hash, seed};
    out[t] = std::move(state);
  });
  if (stats) {
    for (const auto& s : per) {
      stats->fits += s.fits;
      stats->escalated_fits += s.escalated_fits;
      stats->nonconverged_fits += s.nonconverged_fits;
    }
  }
  return out;
}

}  // namespace nscmi::fcs
