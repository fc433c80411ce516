#include "nscmi/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "nscmi/error.hpp"

namespace nscmi::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw ValidationError("csv line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool is_na(const std::string& s) { return s == "NA" || s.empty(); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out.flush()) throw ValidationError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

std::string table_csv(const loglinear::JointTable& table) {
  std::string out = "cell_index,m_bits,y_bits,prob\n";
  for (std::size_t c = 0; c < table.size(); ++c) {
    out += std::to_string(c) + "," + std::to_string(table.m_bits(c)) + "," + std::to_string(table.y_bits(c)) + "," +
           format_number(table[c]) + "\n";
  }
  return out;
}

Dataset parse_dataset_csv(const std::string& text, const std::set<std::string>& categorical) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line, line_no);
      break;
    }
  }
  if (header.empty()) throw ValidationError("dataset csv: missing header row");
  for (auto& h : header) h = trim(h);

  std::map<int, std::size_t> outcome_cols;  // outcome number -> column
  std::vector<std::size_t> covariate_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    int idx = 0;
    if (h.size() > 1 && h[0] == 'y' &&
        std::from_chars(h.data() + 1, h.data() + h.size(), idx).ptr == h.data() + h.size() && idx >= 1) {
      if (!outcome_cols.emplace(idx, c).second) throw ValidationError("dataset csv: duplicate column '" + h + "'");
    } else {
      covariate_cols.push_back(c);
    }
  }
  const int k = static_cast<int>(outcome_cols.size());
  if (k == 0) throw ValidationError("dataset csv: no outcome columns (expected y1..yK)");
  if (outcome_cols.rbegin()->first != k) {
    throw ValidationError("dataset csv: outcome columns must be y1..y" + std::to_string(k) + " without gaps");
  }
  for (const auto& name : categorical) {
    bool found = false;
    for (std::size_t c : covariate_cols) found = found || header[c] == name;
    if (!found) throw ValidationError("dataset csv: categorical column '" + name + "' not found");
  }

  std::vector<std::int8_t> outcomes;
  std::vector<std::vector<std::string>> raw(covariate_cols.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw ValidationError("dataset csv line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    for (int j = 1; j <= k; ++j) {
      const std::size_t c = outcome_cols[j];
      const std::string v = trim(fields[c]);
      if (is_na(v)) {
        outcomes.push_back(kMissing);
      } else if (v == "0" || v == "1") {
        outcomes.push_back(static_cast<std::int8_t>(v[0] - '0'));
      } else {
        throw ValidationError("dataset csv row " + std::to_string(row) + ", column " + header[c] +
                              ": expected 0, 1 or NA, got '" + v + "'");
      }
    }
    for (std::size_t i = 0; i < covariate_cols.size(); ++i) {
      const std::size_t c = covariate_cols[i];
      std::string v = trim(fields[c]);
      if (is_na(v)) {
        throw ValidationError("dataset csv row " + std::to_string(row) + ", column " + header[c] +
                              ": covariates must be fully observed");
      }
      raw[i].push_back(std::move(v));
    }
  }

  std::vector<Covariate> covariates;
  for (std::size_t i = 0; i < covariate_cols.size(); ++i) {
    const std::string& name = header[covariate_cols[i]];
    std::vector<double> values;
    bool numeric = !categorical.count(name);
    for (const auto& v : raw[i]) {
      double d = 0.0;
      if (!numeric) break;
      if (!parse_double(v, d)) numeric = false;
      values.push_back(d);
    }
    covariates.push_back(numeric ? Covariate::continuous(name, std::move(values))
                                 : Covariate::categorical(name, raw[i]));
  }
  return Dataset(k, std::move(outcomes), std::move(covariates));
}

Dataset read_dataset_csv(const fs::path& path, const std::set<std::string>& categorical) {
  try {
    return parse_dataset_csv(read_text(path), categorical);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string dataset_csv(const Dataset& data) {
  std::string out;
  for (int j = 0; j < data.k(); ++j) out += (j ? "," : "") + quote(data.outcome_names()[static_cast<std::size_t>(j)]);
  for (const auto& c : data.covariates()) out += "," + quote(c.name);
  out += "\n";
  for (std::size_t r = 0; r < data.n(); ++r) {
    for (int j = 0; j < data.k(); ++j) {
      if (j) out += ",";
      const std::int8_t v = data.y(r, j);
      out += v == kMissing ? "NA" : (v ? "1" : "0");
    }
    for (const auto& c : data.covariates()) {
      out += ",";
      out += c.is_categorical() ? quote(c.levels[static_cast<std::size_t>(c.codes[r])]) : format_number(c.values[r]);
    }
    out += "\n";
  }
  return out;
}

std::vector<fs::path> write_completed(const fs::path& dir, const std::string& prefix,
                                      const std::vector<fcs::CompletedDataset>& completed,
                                      const fcs::FcsConfig& config, const nlohmann::json& extra) {
  std::vector<fs::path> paths;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& c : completed) {
    char name[64];
    std::snprintf(name, sizeof name, "_%03d.csv", c.provenance.imputation);
    const fs::path p = dir / (prefix + name);
    write_text_atomic(p, dataset_csv(c.data));
    paths.push_back(p);
    files.push_back({{"file", p.filename().string()},
                     {"imputation", c.provenance.imputation},
                     {"seed", c.provenance.seed},
                     {"config_hash", c.provenance.config_hash}});
  }
  nlohmann::json meta = {{"imputations", files}, {"config", config.to_json()}, {"config_hash", config.hash()}};
  if (extra.is_object()) {
    for (const auto& [key, value] : extra.items()) meta[key] = value;
  }
  write_json(dir / (prefix + "_metadata.json"), meta);
  return paths;
}

std::string pooled_csv(const std::vector<analysis::PooledResult>& rows) {
  std::string out = "parameter,estimate,se,df,p,T\n";
  for (const auto& r : rows) {
    out += quote(r.label) + "," + format_number(r.estimate) + "," + format_number(r.se()) + "," +
           format_number(r.df) + "," + format_number(r.p_value) + "," + std::to_string(r.t) + "\n";
  }
  return out;
}

std::string grid_csv(const std::vector<study::GridPoint>& points, const double* threshold) {
  std::string out = "contrast,lambda_a,lambda_b,odds_ratio_a,odds_ratio_b,log_or,se,df,p";
  if (threshold) out += ",significant";
  out += ",error\n";
  for (const auto& g : points) {
    out += quote(g.contrast) + "," + format_number(g.lambda_a) + "," + format_number(g.lambda_b) + "," +
           format_number(std::exp(g.lambda_a)) + "," + format_number(std::exp(g.lambda_b)) + ",";
    if (g.failed) {
      out += "NA,NA,NA,NA";
      if (threshold) out += ",NA";
    } else {
      out += format_number(g.pooled.estimate) + "," + format_number(g.pooled.se()) + "," +
             format_number(g.pooled.df) + "," + format_number(g.pooled.p_value);
      if (threshold) out += g.pooled.p_value < *threshold ? ",1" : ",0";
    }
    out += "," + quote(g.error) + "\n";
  }
  return out;
}

}  // namespace nscmi::io
