#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bayesw/errors.hpp"
#include "bayesw/metrics.hpp"
#include "bayesw/model.hpp"
#include "bayesw/sampler.hpp"

namespace bayesw {

using Json = nlohmann::ordered_json;

// --- low-level CSV --------------------------------------------------------

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cell += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(cell);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " columns, found " + std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw ParseError(path.string() + ": empty file");
  return table;
}

inline double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(where + ": not a number: '" + s + "'");
  return v;
}

inline long parse_long(const std::string& s, const std::string& where) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(where + ": not an integer: '" + s + "'");
  }
  return v;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// --- panel files ----------------------------------------------------------

struct LoadedPanel {
  PanelData data;
  std::vector<std::string> unit_ids;
  std::vector<long> time_ids;  // estimation periods, ascending
  std::vector<std::string> covariate_names;
};

/**
 * @brief Reads a long-format panel (unit_id, time_id, y, covariates...).
 *
 * Units keep their order of first appearance, periods are sorted. With a lag
 * r > 0 the estimation periods are those t with t - r in the file, starting
 * at the earliest time + r; the lagged y comes from period t - r.
 */
inline LoadedPanel read_panel(const std::filesystem::path& path, const ModelSpec& spec) {
  const CsvTable table = read_csv(path);
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw ParseError(path.string() + ": missing required column '" + name + "'");
    return static_cast<std::size_t>(std::distance(table.header.begin(), it));
  };
  const std::size_t c_unit = column("unit_id");
  const std::size_t c_time = column("time_id");
  const std::size_t c_y = column("y");
  std::vector<std::size_t> c_cov;
  LoadedPanel out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == c_unit || c == c_time || c == c_y) continue;
    c_cov.push_back(c);
    out.covariate_names.push_back(table.header[c]);
  }

  std::map<std::string, std::size_t> unit_index;
  std::set<long> times;
  struct Obs {
    double y;
    std::vector<double> x;
  };
  std::map<std::pair<std::size_t, long>, Obs> cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    const std::string& unit = row[c_unit];
    if (!unit_index.count(unit)) {
      unit_index.emplace(unit, out.unit_ids.size());
      out.unit_ids.push_back(unit);
    }
    const long time = parse_long(row[c_time], where + " column time_id");
    times.insert(time);
    Obs obs;
    obs.y = parse_double(row[c_y], where + " column y");
    for (std::size_t c : c_cov) obs.x.push_back(parse_double(row[c], where + " column " + table.header[c]));
    const auto key = std::make_pair(unit_index[unit], time);
    if (!cells.emplace(key, std::move(obs)).second) {
      throw UnbalancedPanel(where + ": duplicate row for unit '" + unit + "' at time " + std::to_string(time));
    }
  }
  const std::size_t n = out.unit_ids.size();
  if (n == 0) throw ParseError(path.string() + ": no data rows");
  if (cells.size() != n * times.size()) {
    throw UnbalancedPanel(path.string() + ": every unit must appear at every time period");
  }

  std::vector<long> all_times(times.begin(), times.end());
  if (spec.lag > 0) {
    const long first = all_times.front() + spec.lag;
    for (long t : all_times) {
      if (t < first) continue;
      if (!times.count(t - spec.lag)) {
        throw MissingLag(path.string() + ": period " + std::to_string(t) + " has no lag at " +
                         std::to_string(t - spec.lag));
      }
      out.time_ids.push_back(t);
    }
    if (out.time_ids.empty()) {
      throw MissingLag(path.string() + ": no period has a lag of " + std::to_string(spec.lag) + " inside the file");
    }
  } else {
    out.time_ids = all_times;
  }

  const Index nn = static_cast<Index>(n);
  const Index tt = static_cast<Index>(out.time_ids.size());
  Vector y(nn * tt);
  std::optional<Vector> y_lag;
  if (spec.lag > 0) y_lag = Vector(nn * tt);
  Matrix cov(nn * tt, static_cast<Index>(c_cov.size()));
  for (Index p = 0; p < tt; ++p) {
    for (Index i = 0; i < nn; ++i) {
      const long t = out.time_ids[static_cast<std::size_t>(p)];
      const Obs& obs = cells.at({static_cast<std::size_t>(i), t});
      y[p * nn + i] = obs.y;
      for (std::size_t c = 0; c < obs.x.size(); ++c) cov(p * nn + i, static_cast<Index>(c)) = obs.x[c];
      if (y_lag) (*y_lag)[p * nn + i] = cells.at({static_cast<std::size_t>(i), t - spec.lag}).y;
    }
  }
  out.data = build_design(std::move(y), std::move(y_lag), cov, nn, tt, spec, out.covariate_names);
  return out;
}

/// Long-format panel CSV, period-major rows.
inline void write_panel_csv(const std::filesystem::path& path, const std::vector<std::string>& unit_ids,
                            const std::vector<long>& time_ids, const Vector& y, const Matrix& covariates,
                            const std::vector<std::string>& covariate_names) {
  const Index n = static_cast<Index>(unit_ids.size());
  const Index t = static_cast<Index>(time_ids.size());
  if (y.size() != n * t || covariates.rows() != n * t) throw DimensionMismatch("panel arrays need n*t rows");
  std::ostringstream os;
  os << "unit_id,time_id,y";
  for (const auto& name : covariate_names) os << ',' << csv_escape(name);
  os << '\n';
  for (Index p = 0; p < t; ++p)
    for (Index i = 0; i < n; ++i) {
      const Index r = p * n + i;
      os << csv_escape(unit_ids[static_cast<std::size_t>(i)]) << ',' << time_ids[static_cast<std::size_t>(p)] << ','
         << format_double(y[r]);
      for (Index c = 0; c < covariates.cols(); ++c) os << ',' << format_double(covariates(r, c));
      os << '\n';
    }
  write_text(path, os.str());
}

// --- labelled matrices ------------------------------------------------------

struct LabeledMatrix {
  std::vector<std::string> labels;
  Matrix values;
};

inline std::string matrix_csv(const Matrix& m, const std::vector<std::string>& labels) {
  if (m.rows() != m.cols() || static_cast<Index>(labels.size()) != m.rows()) {
    throw DimensionMismatch("square matrix and one label per row required");
  }
  std::ostringstream os;
  os << "unit";
  for (const auto& l : labels) os << ',' << csv_escape(l);
  os << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    os << csv_escape(labels[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < m.cols(); ++j) os << ',' << format_double(m(i, j));
    os << '\n';
  }
  return os.str();
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                             const std::vector<std::string>& labels) {
  write_text(path, matrix_csv(m, labels));
}

inline LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  LabeledMatrix out;
  out.labels.assign(table.header.begin() + 1, table.header.end());
  const Index n = static_cast<Index>(out.labels.size());
  if (static_cast<Index>(table.rows.size()) != n) {
    throw DimensionMismatch(path.string() + ": matrix is not square");
  }
  out.values.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < n; ++j) out.values(i, j) = parse_double(row[static_cast<std::size_t>(j + 1)], where);
  }
  return out;
}

inline std::vector<std::string> default_labels(Index n) {
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i) out.push_back(std::to_string(i + 1));
  return out;
}

// --- chain outputs --------------------------------------------------------

inline std::string trace_csv(const ChainOutput& chain, const std::vector<std::string>& beta_names) {
  std::ostringstream os;
  os << "draw";
  for (Index k = 0; k < chain.beta_draws.cols(); ++k) {
    os << ',' << csv_escape(k < static_cast<Index>(beta_names.size()) ? beta_names[static_cast<std::size_t>(k)]
                                                                       : "beta" + std::to_string(k + 1));
  }
  os << ",sigma2,rho\n";
  for (Index d = 0; d < chain.draw_count; ++d) {
    os << d + 1;
    for (Index k = 0; k < chain.beta_draws.cols(); ++k) os << ',' << format_double(chain.beta_draws(d, k));
    os << ',' << format_double(chain.sigma2_draws[static_cast<std::size_t>(d)]) << ','
       << format_double(chain.rho_draws[static_cast<std::size_t>(d)]) << '\n';
  }
  return os.str();
}

inline Json scalar_summary(std::span<const double> draws) {
  Json j;
  j["mean"] = draws.empty() ? Json(nullptr) : Json(mean_of(draws));
  j["sd"] = draws.size() < 2 ? Json(nullptr) : Json(sd_of(draws));
  j["geweke_z"] = draws.size() < 20 ? Json(nullptr) : Json(geweke_z(draws));
  return j;
}

inline Json chain_summary(const ChainOutput& chain, const std::vector<std::string>& beta_names,
                          const Json& config_echo, std::uint64_t seed) {
  Json s;
  s["seed"] = seed;
  s["draw_count"] = chain.draw_count;
  Json params = Json::array();
  for (Index k = 0; k < chain.beta_draws.cols(); ++k) {
    std::vector<double> col(static_cast<std::size_t>(chain.draw_count));
    for (Index d = 0; d < chain.draw_count; ++d) col[static_cast<std::size_t>(d)] = chain.beta_draws(d, k);
    Json p;
    p["name"] = k < static_cast<Index>(beta_names.size()) ? beta_names[static_cast<std::size_t>(k)]
                                                          : "beta" + std::to_string(k + 1);
    p.update(scalar_summary(col));
    params.push_back(std::move(p));
  }
  s["beta"] = std::move(params);
  s["sigma2"] = scalar_summary(chain.sigma2_draws);
  s["rho"] = scalar_summary(chain.rho_draws);
  s["avg_neighbours"] = chain.draw_count > 0 ? Json(avg_neighbours(inclusion_matrix(chain))) : Json(nullptr);
  s["rejections"] = {{"proposals", chain.rejections.proposals},
                     {"flips", chain.rejections.flips},
                     {"determinant", chain.rejections.determinant},
                     {"identification", chain.rejections.identification}};
  s["config"] = config_echo;
  return s;
}

/// summary.json, trace.csv, inclusion.csv and omega_last.csv under out_dir.
inline void write_outputs(const ChainOutput& chain, const std::vector<std::string>& beta_names,
                          const std::vector<std::string>& unit_labels, const Json& config_echo,
                          std::uint64_t seed, const std::filesystem::path& out_dir) {
  const Index n = chain.inclusion_counts.rows();
  write_text(out_dir / "summary.json", chain_summary(chain, beta_names, config_echo, seed).dump(2) + "\n");
  write_text(out_dir / "trace.csv", trace_csv(chain, beta_names));
  const Matrix inclusion = chain.draw_count > 0 ? inclusion_matrix(chain) : Matrix::Zero(n, n);
  write_matrix_csv(out_dir / "inclusion.csv", inclusion, unit_labels);
  const Matrix last = chain.omega_last.n() == n ? chain.omega_last.to_dense() : Matrix::Zero(n, n);
  write_matrix_csv(out_dir / "omega_last.csv", last, unit_labels);
}

// --- heatmap --------------------------------------------------------------

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// White below 0.50, grey on [0.50, 0.75], black above 0.75.
inline const char* inclusion_colour(double p) {
  if (p > 0.75) return "#000000";
  if (p >= 0.50) return "#808080";
  return "#ffffff";
}

/// Rows are the predicted units, columns the predictors.
inline std::string heatmap_svg(const Matrix& inclusion, const std::vector<std::string>& labels) {
  const Index n = inclusion.rows();
  if (inclusion.cols() != n || static_cast<Index>(labels.size()) != n) {
    throw DimensionMismatch("heatmap needs a square matrix and one label per row");
  }
  constexpr int kCell = 14;
  std::size_t longest = 1;
  for (const auto& l : labels) longest = std::max(longest, l.size());
  const int margin = 10 + 7 * static_cast<int>(longest);
  const int size = margin + kCell * static_cast<int>(n) + 10;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size << "\" fill=\"#ffffff\"/>\n";
  for (Index i = 0; i < n; ++i) {
    const int y = margin + kCell * static_cast<int>(i);
    os << "<text x=\"" << margin - 4 << "\" y=\"" << y + kCell - 3 << "\" text-anchor=\"end\">"
       << xml_escape(labels[static_cast<std::size_t>(i)]) << "</text>\n";
    const int x = margin + kCell * static_cast<int>(i) + kCell - 3;
    os << "<text x=\"" << x << "\" y=\"" << margin - 4 << "\" transform=\"rotate(-90 " << x << ' ' << margin - 4
       << ")\">" << xml_escape(labels[static_cast<std::size_t>(i)]) << "</text>\n";
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      os << "<rect x=\"" << margin + kCell * static_cast<int>(j) << "\" y=\"" << margin + kCell * static_cast<int>(i)
         << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\"" << inclusion_colour(inclusion(i, j))
         << "\" stroke=\"#c8c8c8\" stroke-width=\"0.5\"/>\n";
    }
  os << "</svg>\n";
  return os.str();
}

inline void render_heatmap(const Matrix& inclusion, const std::vector<std::string>& labels,
                           const std::filesystem::path& path) {
  write_text(path, heatmap_svg(inclusion, labels));
}

/// Reorders rows and columns to follow `ordering` (a permutation of the labels).
inline LabeledMatrix reorder(const LabeledMatrix& m, const std::vector<std::string>& ordering) {
  if (ordering.size() != m.labels.size()) throw DimensionMismatch("ordering must list every unit once");
  std::vector<Index> idx;
  for (const auto& l : ordering) {
    const auto it = std::find(m.labels.begin(), m.labels.end(), l);
    if (it == m.labels.end()) throw ParseError("ordering names unknown unit '" + l + "'");
    idx.push_back(static_cast<Index>(std::distance(m.labels.begin(), it)));
  }
  std::vector<Index> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ParseError("ordering lists a unit twice");
  }
  LabeledMatrix out{ordering, Matrix(m.values.rows(), m.values.cols())};
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) {
      out.values(static_cast<Index>(a), static_cast<Index>(b)) = m.values(idx[a], idx[b]);
    }
  return out;
}

inline std::vector<std::string> read_ordering(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace bayesw
