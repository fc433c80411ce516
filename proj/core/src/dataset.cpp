#include "nscmi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nscmi/error.hpp"

namespace nscmi {

Covariate Covariate::categorical(std::string name, std::span<const std::string> raw) {
  Covariate c;
  c.name = std::move(name);
  c.kind = Kind::kCategorical;
  const std::set<std::string> distinct(raw.begin(), raw.end());
  c.levels.assign(distinct.begin(), distinct.end());
  c.codes.reserve(raw.size());
  for (const auto& v : raw) {
    c.codes.push_back(static_cast<int>(std::lower_bound(c.levels.begin(), c.levels.end(), v) - c.levels.begin()));
  }
  return c;
}

Covariate Covariate::continuous(std::string name, std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("covariate '" + name + "' has non-finite values");
  }
  Covariate c;
  c.name = std::move(name);
  c.kind = Kind::kContinuous;
  c.values = std::move(values);
  return c;
}

int Covariate::level_index(const std::string& level) const {
  const auto it = std::find(levels.begin(), levels.end(), level);
  return it == levels.end() ? -1 : static_cast<int>(it - levels.begin());
}

std::vector<std::string> default_outcome_names(int k) {
  std::vector<std::string> names;
  for (int j = 1; j <= k; ++j) names.push_back("y" + std::to_string(j));
  return names;
}

Dataset::Dataset(int k, std::vector<std::int8_t> outcomes, std::vector<Covariate> covariates,
                 std::vector<std::string> outcome_names)
    : k_(k), outcomes_(std::move(outcomes)), covariates_(std::move(covariates)),
      outcome_names_(std::move(outcome_names)) {
  if (k < 1) throw ValidationError("dataset: need at least one outcome column");
  if (outcomes_.size() % static_cast<std::size_t>(k) != 0) {
    throw ValidationError("dataset: outcome cell count is not a multiple of K");
  }
  n_ = outcomes_.size() / static_cast<std::size_t>(k);
  for (std::int8_t v : outcomes_) {
    if (v != 0 && v != 1 && v != kMissing) throw ValidationError("dataset: outcome cells must be 0, 1 or missing");
  }
  if (outcome_names_.empty()) outcome_names_ = default_outcome_names(k);
  if (outcome_names_.size() != static_cast<std::size_t>(k)) {
    throw ValidationError("dataset: need one name per outcome column");
  }
  std::set<std::string> seen(outcome_names_.begin(), outcome_names_.end());
  for (const auto& c : covariates_) {
    if (c.size() != n_) throw ValidationError("dataset: covariate '" + c.name + "' has the wrong length");
    if (!seen.insert(c.name).second) throw ValidationError("dataset: duplicate column name '" + c.name + "'");
    if (c.is_categorical()) {
      for (int code : c.codes) {
        if (code < 0 || code >= static_cast<int>(c.levels.size())) {
          throw ValidationError("dataset: covariate '" + c.name + "' has an invalid level code");
        }
      }
    }
  }
}

void Dataset::set_y(std::size_t row, int col, std::int8_t value) {
  if (row >= n_ || col < 0 || col >= k_) throw ValidationError("dataset: cell index out of range");
  if (value != 0 && value != 1 && value != kMissing) throw ValidationError("dataset: outcome cells must be 0, 1 or missing");
  outcomes_[row * static_cast<std::size_t>(k_) + static_cast<std::size_t>(col)] = value;
}

std::size_t Dataset::missing_count(int col) const {
  std::size_t count = 0;
  for (std::size_t r = 0; r < n_; ++r) count += missing(r, col) ? 1 : 0;
  return count;
}

std::size_t Dataset::missing_count() const {
  return static_cast<std::size_t>(std::count(outcomes_.begin(), outcomes_.end(), kMissing));
}

const Covariate& Dataset::covariate(const std::string& name) const {
  const int idx = covariate_index(name);
  if (idx < 0) throw ValidationError("dataset: no covariate named '" + name + "'");
  return covariates_[static_cast<std::size_t>(idx)];
}

int Dataset::covariate_index(const std::string& name) const noexcept {
  for (std::size_t i = 0; i < covariates_.size(); ++i) {
    if (covariates_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Dataset masked_dataset(std::span<const loglinear::CellDraw> draws, int k) {
  std::vector<std::int8_t> cells;
  cells.reserve(draws.size() * static_cast<std::size_t>(k));
  for (const auto& d : draws) {
    for (int j = 0; j < k; ++j) {
      const bool is_missing = (d.m >> j) & 1U;
      cells.push_back(is_missing ? kMissing : static_cast<std::int8_t>((d.y >> j) & 1U));
    }
  }
  return Dataset(k, std::move(cells));
}

}  // namespace nscmi
