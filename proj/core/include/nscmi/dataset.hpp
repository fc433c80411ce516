#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nscmi/loglinear.hpp"

namespace nscmi {

inline constexpr std::int8_t kMissing = -1;

// An always-observed covariate column.
struct Covariate {
  enum class Kind { kCategorical, kContinuous };

  std::string name;
  Kind kind = Kind::kContinuous;
  std::vector<std::string> levels;  // categorical: sorted distinct values
  std::vector<int> codes;           // categorical: index into levels, per row
  std::vector<double> values;       // continuous: per row

  static Covariate categorical(std::string name, std::span<const std::string> raw);
  static Covariate continuous(std::string name, std::vector<double> values);

  std::size_t size() const noexcept { return kind == Kind::kCategorical ? codes.size() : values.size(); }
  bool is_categorical() const noexcept { return kind == Kind::kCategorical; }
  int level_index(const std::string& level) const;  // -1 when absent

  bool operator==(const Covariate&) const = default;
};

// N rows of K tri-state outcome cells (0, 1, kMissing) plus covariates.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int k, std::vector<std::int8_t> outcomes, std::vector<Covariate> covariates = {},
          std::vector<std::string> outcome_names = {});

  int k() const noexcept { return k_; }
  std::size_t n() const noexcept { return n_; }

  std::int8_t y(std::size_t row, int col) const noexcept { return outcomes_[row * static_cast<std::size_t>(k_) + static_cast<std::size_t>(col)]; }
  void set_y(std::size_t row, int col, std::int8_t value);
  bool missing(std::size_t row, int col) const noexcept { return y(row, col) == kMissing; }
  std::span<const std::int8_t> row(std::size_t r) const noexcept {
    return {outcomes_.data() + r * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }
  std::span<const std::int8_t> outcomes() const noexcept { return outcomes_; }

  std::size_t missing_count(int col) const;
  std::size_t missing_count() const;
  bool complete() const { return missing_count() == 0; }

  const std::vector<std::string>& outcome_names() const noexcept { return outcome_names_; }
  const std::vector<Covariate>& covariates() const noexcept { return covariates_; }
  const Covariate& covariate(const std::string& name) const;
  int covariate_index(const std::string& name) const noexcept;

  bool operator==(const Dataset&) const = default;

 private:
  int k_ = 0;
  std::size_t n_ = 0;
  std::vector<std::int8_t> outcomes_;
  std::vector<Covariate> covariates_;
  std::vector<std::string> outcome_names_;
};

// Rows (m, y) with y_k replaced by kMissing wherever m_k = 1.
Dataset masked_dataset(std::span<const loglinear::CellDraw> draws, int k);

// Default outcome column names y1..yK.
std::vector<std::string> default_outcome_names(int k);

}  // namespace nscmi
