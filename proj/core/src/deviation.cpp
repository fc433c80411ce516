#include <cmath>
#include <limits>

#include "nscmi/error.hpp"
#include "nscmi/loglinear.hpp"

namespace nscmi::loglinear {

DeviationReport self_censoring_deviation(const JointTable& table, int k) {
  const int dim = table.k();
  if (k < 1 || k > dim) throw ValidationError("self_censoring_deviation: index out of range");
  const std::size_t m_bit = std::size_t{1} << (k - 1);
  const std::size_t y_bit = std::size_t{1} << (dim + k - 1);

  DeviationReport report;
  for (std::size_t base = 0; base < table.size(); ++base) {
    if (base & (m_bit | y_bit)) continue;
    const double obs0 = table[base];
    const double obs1 = table[base | y_bit];
    const double mis0 = table[base | m_bit];
    const double mis1 = table[base | m_bit | y_bit];
    if (!(obs0 + obs1 > 0.0) || !(mis0 + mis1 > 0.0)) {
      ++report.skipped_contexts;
      continue;
    }
    const double dev = std::abs(mis1 / (mis0 + mis1) - obs1 / (obs0 + obs1));
    if (dev > report.max_abs_deviation) {
      report.max_abs_deviation = dev;
      report.cell_a = base | y_bit;
      report.cell_b = base | m_bit | y_bit;
    }
  }
  return report;
}

namespace {

// Shared core of the MAR and MCAR checks. For every pattern m, y values are
// grouped by (y & group_mask(m)); the deviation is the spread of P(M=m | Y=y)
// within a group.
template <typename GroupMask>
DeviationReport pattern_spread(const JointTable& table, GroupMask group_mask) {
  const int dim = table.k();
  const std::size_t ny = std::size_t{1} << dim;
  const std::vector<double> py = y_marginal_law(table);

  DeviationReport report;
  for (std::size_t y = 0; y < ny; ++y) {
    if (!(py[y] > 0.0)) ++report.skipped_contexts;
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(ny);
  std::vector<double> hi(ny);
  std::vector<std::size_t> lo_cell(ny);
  std::vector<std::size_t> hi_cell(ny);
  for (std::size_t m = 0; m < ny; ++m) {
    const std::size_t gmask = group_mask(m);
    std::fill(lo.begin(), lo.end(), kInf);
    std::fill(hi.begin(), hi.end(), -kInf);
    for (std::size_t y = 0; y < ny; ++y) {
      if (!(py[y] > 0.0)) continue;
      const std::size_t cell = m | (y << dim);
      const double p = table[cell] / py[y];
      const std::size_t key = y & gmask;
      if (p < lo[key]) {
        lo[key] = p;
        lo_cell[key] = cell;
      }
      if (p > hi[key]) {
        hi[key] = p;
        hi_cell[key] = cell;
      }
    }
    for (std::size_t key = 0; key < ny; ++key) {
      if (hi[key] < lo[key]) continue;
      const double dev = hi[key] - lo[key];
      if (dev > report.max_abs_deviation) {
        report.max_abs_deviation = dev;
        report.cell_a = lo_cell[key];
        report.cell_b = hi_cell[key];
      }
    }
  }
  return report;
}

}  // namespace

DeviationReport mar_deviation(const JointTable& table) {
  const std::size_t full = (std::size_t{1} << table.k()) - 1;
  // Observed coordinates under m are those with m_j = 0.
  return pattern_spread(table, [full](std::size_t m) { return ~m & full; });
}

DeviationReport mcar_deviation(const JointTable& table) {
  return pattern_spread(table, [](std::size_t) { return std::size_t{0}; });
}

}  // namespace nscmi::loglinear
