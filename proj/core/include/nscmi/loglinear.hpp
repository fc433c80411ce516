#pragma once

// Exact loglinear models over K binary outcomes Y and their missingness
// indicators M (M_k = 1 when Y_k is missing).
//
// Cell layout (also the on-disk table format): bit-packed little endian with
// the M bits low and the Y bits high,
//
//   cell = sum_j m_j * 2^(j-1) + sum_j y_j * 2^(K+j-1),   j = 1..K.
//
// A term lambda_{Y_I M_J} contributes lambda to every cell whose Y bits cover
// I and whose M bits cover J.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace nscmi::loglinear {

using Mask = std::uint32_t;

inline constexpr int kMaxEnumerationK = 12;

// Index sets of one interaction term, as bitmasks (bit j-1 <-> index j).
struct TermKey {
  Mask y_set = 0;
  Mask m_set = 0;

  auto operator<=>(const TermKey&) const = default;

  bool self_censoring() const noexcept { return (y_set & m_set) != 0; }

  // Names look like "Y1", "M2.M3", "Y1.Y2:M3". The ':' separates the Y
  // factors from the M factors; '.' joins factors of one kind. Mixed terms
  // are also accepted with '.' only ("Y1.M2").
  static TermKey parse(std::string_view name, int k);
  std::string name() const;
};

// 1-based index helpers: term({1, 2}, {3}) is lambda_{Y1 Y2 M3}.
TermKey term(std::initializer_list<int> y_indices, std::initializer_list<int> m_indices = {});

class LoglinearSpec {
 public:
  explicit LoglinearSpec(int k);

  int k() const noexcept { return k_; }

  // Absent keys mean zero.
  double get(TermKey key) const;
  void set(TermKey key, double value);
  void add(TermKey key, double value) { set(key, get(key) + value); }

  const std::map<TermKey, double>& terms() const noexcept { return terms_; }

  // {"k": 6, "terms": {"Y1.Y2": 0.5, "M1": -1.0}}
  static LoglinearSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

 private:
  void check_key(TermKey key) const;

  int k_;
  std::map<TermKey, double> terms_;
};

class JointTable {
 public:
  // Validates non-negativity and normalization (1e-12).
  JointTable(int k, std::vector<double> probs);

  static JointTable uniform(int k);
  static JointTable point_mass(int k, Mask m, Mask y);

  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t cell) const { return probs_[cell]; }

  std::size_t cell(Mask m, Mask y) const noexcept {
    return static_cast<std::size_t>(m) | (static_cast<std::size_t>(y) << k_);
  }
  Mask m_bits(std::size_t cell) const noexcept {
    return static_cast<Mask>(cell & ((std::size_t{1} << k_) - 1));
  }
  Mask y_bits(std::size_t cell) const noexcept { return static_cast<Mask>(cell >> k_); }

 private:
  int k_;
  std::vector<double> probs_;
};

// One variable of the (M, Y) vector; index is 1-based.
struct Variable {
  enum class Kind { kY, kM };
  Kind kind = Kind::kY;
  int index = 1;
};

inline Variable Y(int index) { return {Variable::Kind::kY, index}; }
inline Variable M(int index) { return {Variable::Kind::kM, index}; }

struct Assignment {
  Variable variable;
  int value = 0;
};

struct DeviationReport {
  double max_abs_deviation = 0.0;
  // The two cells whose conditional probabilities differ the most.
  std::size_t cell_a = 0;
  std::size_t cell_b = 0;
  // Contexts ignored because a conditioning event had zero mass.
  std::size_t skipped_contexts = 0;
};

struct MomentTarget {
  Variable variable;
  double value = 0.0;
};

struct CalibrationOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
  double fd_step = 1e-6;
};

struct CellDraw {
  Mask m = 0;
  Mask y = 0;
};

JointTable build_table(const LoglinearSpec& spec);

double marginal(const JointTable& table, Variable variable);

// P(target = 1 | given). Throws ZeroMassError if the conditioning event has
// zero probability.
double conditional(const JointTable& table, Variable target, std::span<const Assignment> given);

bool nsc_holds(const LoglinearSpec& spec);

// max over (y_{-k}, m_{-k}) of |P(Y_k=1 | ., M_k=1) - P(Y_k=1 | ., M_k=0)|;
// k is 1-based.
DeviationReport self_censoring_deviation(const JointTable& table, int k);

// max over m and y, y' agreeing on the coordinates observed under m of
// |P(M=m | Y=y) - P(M=m | Y=y')|.
DeviationReport mar_deviation(const JointTable& table);

// As mar_deviation but over all pairs y, y'.
DeviationReport mcar_deviation(const JointTable& table);

// Damped Newton on the free coefficients so that each target marginal of
// build_table(result) is met. Starts from the template's current values.
LoglinearSpec calibrate(const LoglinearSpec& templ, std::span<const TermKey> free_terms,
                        std::span<const MomentTarget> targets,
                        const CalibrationOptions& options = {});

// Inverse-CDF sampling with a seeded mt19937_64.
std::vector<CellDraw> sample(const JointTable& table, std::size_t n, std::uint64_t seed);

// Sum of probs over the M bits: the law of Y alone, indexed by y bits.
std::vector<double> y_marginal_law(const JointTable& table);

}  // namespace nscmi::loglinear
