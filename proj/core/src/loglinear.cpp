#include "nscmi/loglinear.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nscmi/error.hpp"
#include "nscmi/rng.hpp"

namespace nscmi::loglinear {

namespace {

void check_dimension(int k, int cap) {
  if (k < 1) throw ValidationError("loglinear: dimension K must be >= 1");
  if (k > cap) {
    throw ValidationError("loglinear: K=" + std::to_string(k) +
                          " exceeds the enumeration cap of " + std::to_string(cap));
  }
}

// Neumaier-compensated sum; plain accumulation drifts past 1e-12 at K = 12.
double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    c += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

void check_index(int index, int k) {
  if (index < 1 || index > k) {
    throw ValidationError("loglinear: variable index " + std::to_string(index) +
                          " out of range 1.." + std::to_string(k));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// TermKey

TermKey TermKey::parse(std::string_view name, int k) {
  TermKey key;
  bool after_colon = false;
  std::size_t pos = 0;
  if (name.empty()) throw ValidationError("loglinear: empty term name");
  while (pos < name.size()) {
    const char kind = name[pos];
    if (kind != 'Y' && kind != 'M') {
      throw ValidationError("loglinear: bad term name '" + std::string(name) + "'");
    }
    std::size_t end = pos + 1;
    while (end < name.size() && std::isdigit(static_cast<unsigned char>(name[end]))) ++end;
    if (end == pos + 1) {
      throw ValidationError("loglinear: missing index in term '" + std::string(name) + "'");
    }
    const int index = std::stoi(std::string(name.substr(pos + 1, end - pos - 1)));
    check_index(index, k);
    const Mask bit = Mask{1} << (index - 1);
    if (kind == 'Y') {
      if (after_colon) {
        throw ValidationError("loglinear: Y factor after ':' in '" + std::string(name) + "'");
      }
      key.y_set |= bit;
    } else {
      key.m_set |= bit;
    }
    pos = end;
    if (pos < name.size()) {
      if (name[pos] == ':') {
        if (after_colon) throw ValidationError("loglinear: repeated ':' in '" + std::string(name) + "'");
        after_colon = true;
      } else if (name[pos] != '.') {
        throw ValidationError("loglinear: bad separator in '" + std::string(name) + "'");
      }
      ++pos;
      if (pos == name.size()) throw ValidationError("loglinear: trailing separator in '" + std::string(name) + "'");
    }
  }
  return key;
}

std::string TermKey::name() const {
  std::string out;
  auto append = [&out](char kind, Mask set) {
    std::string part;
    for (int j = 0; set != 0; ++j, set >>= 1) {
      if (set & 1) {
        if (!part.empty()) part += '.';
        part += kind;
        part += std::to_string(j + 1);
      }
    }
    return part;
  };
  const std::string ys = append('Y', y_set);
  const std::string ms = append('M', m_set);
  if (!ys.empty() && !ms.empty()) return ys + ":" + ms;
  out = ys.empty() ? ms : ys;
  return out;
}

TermKey term(std::initializer_list<int> y_indices, std::initializer_list<int> m_indices) {
  TermKey key;
  for (int i : y_indices) key.y_set |= Mask{1} << (i - 1);
  for (int i : m_indices) key.m_set |= Mask{1} << (i - 1);
  return key;
}

// ---------------------------------------------------------------------------
// LoglinearSpec

LoglinearSpec::LoglinearSpec(int k) : k_(k) {
  if (k < 1 || k > 31) throw ValidationError("loglinear: dimension K must be in 1..31");
}

void LoglinearSpec::check_key(TermKey key) const {
  if ((key.y_set | key.m_set) == 0) {
    throw ValidationError("loglinear: the empty term (global intercept) is not a parameter");
  }
  const Mask limit = (k_ >= 32) ? ~Mask{0} : ((Mask{1} << k_) - 1);
  if ((key.y_set & ~limit) != 0 || (key.m_set & ~limit) != 0) {
    throw ValidationError("loglinear: term index exceeds K=" + std::to_string(k_));
  }
}

double LoglinearSpec::get(TermKey key) const {
  const auto it = terms_.find(key);
  return it == terms_.end() ? 0.0 : it->second;
}

void LoglinearSpec::set(TermKey key, double value) {
  check_key(key);
  if (!std::isfinite(value)) {
    throw ValidationError("loglinear: non-finite coefficient for " + key.name());
  }
  if (value == 0.0) {
    terms_.erase(key);
  } else {
    terms_[key] = value;
  }
}

LoglinearSpec LoglinearSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("k") || !j.contains("terms")) {
    throw ValidationError("loglinear: spec JSON needs 'k' and 'terms'");
  }
  LoglinearSpec spec(j.at("k").get<int>());
  for (const auto& [name, value] : j.at("terms").items()) {
    if (!value.is_number()) {
      throw ValidationError("loglinear: coefficient for '" + name + "' is not a number");
    }
    spec.add(TermKey::parse(name, spec.k()), value.get<double>());
  }
  return spec;
}

nlohmann::json LoglinearSpec::to_json() const {
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [key, value] : terms_) terms[key.name()] = value;
  return {{"k", k_}, {"terms", terms}};
}

// ---------------------------------------------------------------------------
// JointTable

JointTable::JointTable(int k, std::vector<double> probs) : k_(k), probs_(std::move(probs)) {
  check_dimension(k, kMaxEnumerationK);
  if (probs_.size() != (std::size_t{1} << (2 * k))) {
    throw ValidationError("loglinear: table for K=" + std::to_string(k) + " needs 4^K entries");
  }
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ValidationError("loglinear: table entries must be finite and non-negative");
    }
  }
  const double total = compensated_sum(probs_);
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "loglinear: table sums to " << total << ", not 1";
    throw ValidationError(msg.str());
  }
}

JointTable JointTable::uniform(int k) {
  check_dimension(k, kMaxEnumerationK);
  const std::size_t n = std::size_t{1} << (2 * k);
  return JointTable(k, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

JointTable JointTable::point_mass(int k, Mask m, Mask y) {
  check_dimension(k, kMaxEnumerationK);
  std::vector<double> probs(std::size_t{1} << (2 * k), 0.0);
  probs.at(static_cast<std::size_t>(m) | (static_cast<std::size_t>(y) << k)) = 1.0;
  return JointTable(k, std::move(probs));
}

// ---------------------------------------------------------------------------
// Operations

JointTable build_table(const LoglinearSpec& spec) {
  const int k = spec.k();
  check_dimension(k, kMaxEnumerationK);
  struct Packed {
    std::size_t mask;
    double value;
  };
  std::vector<Packed> packed;
  packed.reserve(spec.terms().size());
  for (const auto& [key, value] : spec.terms()) {
    if (!std::isfinite(value)) {
      throw ValidationError("loglinear: non-finite coefficient for " + key.name());
    }
    packed.push_back({static_cast<std::size_t>(key.m_set) | (static_cast<std::size_t>(key.y_set) << k),
                      value});
  }

  const std::size_t n = std::size_t{1} << (2 * k);
  std::vector<double> logw(n, 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t cell = 0; cell < n; ++cell) {
    double s = 0.0;
    for (const auto& t : packed) {
      if ((cell & t.mask) == t.mask) s += t.value;
    }
    logw[cell] = s;
    top = std::max(top, s);
  }
  for (double& w : logw) w = std::exp(w - top);
  const double total = compensated_sum(logw);
  for (double& w : logw) w /= total;
  return JointTable(k, std::move(logw));
}

namespace {

// Bitmask over the packed cell index for a single variable.
std::size_t variable_bit(const JointTable& table, Variable v) {
  check_index(v.index, table.k());
  const std::size_t shift = (v.kind == Variable::Kind::kM) ? 0 : static_cast<std::size_t>(table.k());
  return std::size_t{1} << (shift + static_cast<std::size_t>(v.index - 1));
}

}  // namespace

double marginal(const JointTable& table, Variable variable) {
  const std::size_t bit = variable_bit(table, variable);
  double s = 0.0;
  for (std::size_t cell = 0; cell < table.size(); ++cell) {
    if (cell & bit) s += table[cell];
  }
  return s;
}

double conditional(const JointTable& table, Variable target, std::span<const Assignment> given) {
  const std::size_t target_bit = variable_bit(table, target);
  std::size_t care = 0;
  std::size_t want = 0;
  for (const auto& a : given) {
    if (a.value != 0 && a.value != 1) throw ValidationError("loglinear: assignment values are 0/1");
    const std::size_t bit = variable_bit(table, a.variable);
    if ((care & bit) && ((want & bit) != 0) != (a.value == 1)) {
      throw ZeroMassError("loglinear: contradictory conditioning assignment");
    }
    care |= bit;
    if (a.value == 1) want |= bit;
  }
  double denom = 0.0;
  double numer = 0.0;
  for (std::size_t cell = 0; cell < table.size(); ++cell) {
    if ((cell & care) != want) continue;
    denom += table[cell];
    if (cell & target_bit) numer += table[cell];
  }
  if (!(denom > 0.0)) throw ZeroMassError("loglinear: conditioning event has zero probability");
  return numer / denom;
}

bool nsc_holds(const LoglinearSpec& spec) {
  return std::none_of(spec.terms().begin(), spec.terms().end(),
                      [](const auto& kv) { return kv.first.self_censoring(); });
}

std::vector<CellDraw> sample(const JointTable& table, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("loglinear: sample size must be >= 1");
  std::vector<double> cdf(table.size());
  std::partial_sum(table.probs().begin(), table.probs().end(), cdf.begin());
  const double top = cdf.back();
  Rng rng(seed);
  std::vector<CellDraw> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * top;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t cell = static_cast<std::size_t>(it - cdf.begin());
    // upper_bound never lands on a zero-probability cell; only the u == top
    // round-off case can run past the end.
    if (cell >= table.size()) {
      cell = table.size() - 1;
      while (table[cell] == 0.0 && cell > 0) --cell;
    }
    out.push_back({table.m_bits(cell), table.y_bits(cell)});
  }
  return out;
}

std::vector<double> y_marginal_law(const JointTable& table) {
  const int k = table.k();
  std::vector<double> law(std::size_t{1} << k, 0.0);
  for (std::size_t cell = 0; cell < table.size(); ++cell) law[table.y_bits(cell)] += table[cell];
  return law;
}

}  // namespace nscmi::loglinear
