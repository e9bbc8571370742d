#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bayesw/dgp.hpp"
#include "bayesw/errors.hpp"
#include "bayesw/io.hpp"
#include "bayesw/model.hpp"
#include "bayesw/priors.hpp"
#include "bayesw/sampler.hpp"

namespace bayesw {

/// How to build the omega prior once N (and unit labels) are known.
struct OmegaPriorConfig {
  OmegaPriorFamily family = OmegaPriorFamily::kSparsity;
  std::optional<double> p;             // scalar inclusion probability
  std::optional<Matrix> p_matrix;      // explicit inclusion / mask matrix
  std::optional<std::string> p_csv;    // labelled CSV with the same role
  std::optional<double> m;             // expected neighbours
  std::optional<double> m_ratio;       // expected neighbours as a share of N
  double a = 1.0;
  std::optional<double> b;
  SymmetricPriorMode symmetric_mode = SymmetricPriorMode::kRowOnly;
};

struct IoConfig {
  std::string panel;
  std::string out = "out";
  std::string ordering;
};

struct McVariant {
  std::string name;
  OmegaPriorConfig omega;
};

struct McCell {
  Index n = 20;
  Index t = 40;
  double rho = 0.8;
};

struct McConfig {
  std::vector<McCell> cells;
  int replications = 10;
  std::vector<McVariant> variants;
  std::vector<double> perturbations;
  bool symmetric = true;
  double max_failure_fraction = 0.1;
};

struct RunConfig {
  ModelSpec model;
  OmegaPriorConfig omega;
  ParamPriors params;
  SamplerConfig sampler;
  IoConfig io;
  DgpConfig dgp;
  McConfig mc;
  int threads = 0;
  Json raw = Json::object();
};

namespace detail {

/// Reads typed fields out of one JSON object and rejects unknown keys.
class FieldReader {
 public:
  FieldReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError(path_ + " must be a JSON object");
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const Json& v = at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError(name(key) + " must be a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ValidationError(name(key) + " must be an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ValidationError(name(key) + " must be a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError(name(key) + " must be a string");
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(name(key) + " has the wrong type or range");
    }
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) throw ValidationError("unknown field " + name(key));
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Matrix json_matrix(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ValidationError(field + " must be a non-empty array of rows");
  const Index n = static_cast<Index>(j.size());
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) throw ValidationError(field + " must be square");
    for (Index k = 0; k < n; ++k) {
      const Json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw ValidationError(field + " entries must be numbers");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

inline OmegaPriorConfig parse_omega_prior(const Json& j, const std::string& path) {
  FieldReader r(j, path);
  OmegaPriorConfig c;
  if (r.has("family")) {
    const auto f = r.get<std::string>("family");
    if (f == "fixed") c.family = OmegaPriorFamily::kFixed;
    else if (f == "sparsity") c.family = OmegaPriorFamily::kSparsity;
    else throw ValidationError(r.name("family") + " must be \"fixed\" or \"sparsity\"");
  }
  if (r.has("p")) {
    const Json& p = r.at("p");
    if (p.is_number()) c.p = p.get<double>();
    else c.p_matrix = json_matrix(p, r.name("p"));
  }
  r.read("p_csv", c.p_csv);
  r.read("m", c.m);
  r.read("m_ratio", c.m_ratio);
  r.read("a", c.a);
  r.read("b", c.b);
  if (r.has("symmetric_mode")) {
    const auto s = r.get<std::string>("symmetric_mode");
    if (s == "row_only") c.symmetric_mode = SymmetricPriorMode::kRowOnly;
    else if (s == "both_rows") c.symmetric_mode = SymmetricPriorMode::kBothRows;
    else throw ValidationError(r.name("symmetric_mode") + " must be \"row_only\" or \"both_rows\"");
  }
  r.finish();

  if (c.p && !(*c.p > 0.0 && *c.p < 1.0)) throw ValidationError(r.name("p") + " must lie in (0,1)");
  if (c.m && c.m_ratio) throw ValidationError(r.name("m") + " and " + r.name("m_ratio") + " are exclusive");
  if ((c.m || c.m_ratio) && c.b) throw ValidationError(r.name("m") + " and " + r.name("b") + " are exclusive");
  if (c.m && !(*c.m > 0.0)) throw ValidationError(r.name("m") + " must be positive");
  if (c.m_ratio && !(*c.m_ratio > 0.0 && *c.m_ratio < 1.0)) {
    throw ValidationError(r.name("m_ratio") + " must lie in (0,1)");
  }
  if (!(c.a > 0.0)) throw ValidationError(r.name("a") + " must be positive");
  if (c.b && !(*c.b > 0.0)) throw ValidationError(r.name("b") + " must be positive");
  if (c.p_matrix && c.p_csv) throw ValidationError(r.name("p") + " and " + r.name("p_csv") + " are exclusive");
  if (c.family == OmegaPriorFamily::kFixed && (c.m || c.m_ratio || c.b)) {
    throw ValidationError(r.name("family") + " \"fixed\" does not take m, m_ratio or b");
  }
  return c;
}

}  // namespace detail

/**
 * @brief Materializes the omega prior for a panel with `labels.size()` units.
 *
 * Explicit matrices (inline or CSV) act as inclusion probabilities for the
 * fixed family and as hard masks (entries 0 / 1) for the sparsity family.
 */
inline OmegaPrior build_omega_prior(const OmegaPriorConfig& c, const std::vector<std::string>& labels,
                                    const std::filesystem::path& base_dir = {}) {
  const Index n = static_cast<Index>(labels.size());
  std::optional<Matrix> explicit_p = c.p_matrix;
  if (c.p_csv) {
    std::filesystem::path path(*c.p_csv);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    LabeledMatrix m = read_matrix_csv(path);
    if (m.labels != labels) m = reorder(m, labels);
    explicit_p = m.values;
  }
  if (explicit_p && explicit_p->rows() != n) {
    throw DimensionMismatch("priors.omega.p has " + std::to_string(explicit_p->rows()) + " rows but the panel has " +
                            std::to_string(n) + " units");
  }
  OmegaPrior prior;
  if (c.family == OmegaPriorFamily::kFixed) {
    prior = fixed_omega_prior(n, c.p.value_or(0.5));
    if (explicit_p) prior.inclusion = *explicit_p;
  } else {
    if (c.m) prior = anchor_sparsity(*c.m, n);
    else if (c.m_ratio) prior = anchor_sparsity(*c.m_ratio * static_cast<double>(n), n);
    else prior = sparsity_omega_prior(n, c.a, c.b.value_or(1.0));
    if (explicit_p) {
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          const double v = (*explicit_p)(i, j);
          if (i != j && v > 0.0 && v < 1.0) prior.inclusion(i, j) = 0.5;
          else prior.inclusion(i, j) = v;
        }
    }
  }
  prior.symmetric_mode = c.symmetric_mode;
  try {
    prior.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("priors.omega: ") + e.what());
  }
  return prior;
}

inline RunConfig parse_config(const Json& root) {
  using detail::FieldReader;
  RunConfig cfg;
  cfg.raw = root;
  FieldReader top(root, "");

  if (top.has("model")) {
    FieldReader r(top.at("model"), "model");
    r.read("r", cfg.model.lag);
    r.read("row_standardize", cfg.model.row_standardize);
    r.read("symmetric", cfg.model.symmetric_omega);
    if (r.has("fixed_effects")) {
      const Json& fe = r.at("fixed_effects");
      if (fe.is_boolean()) {
        cfg.model.unit_fixed_effects = cfg.model.time_fixed_effects = fe.get<bool>();
      } else {
        FieldReader f(fe, "model.fixed_effects");
        f.read("unit", cfg.model.unit_fixed_effects);
        f.read("time", cfg.model.time_fixed_effects);
        f.finish();
      }
    }
    r.finish();
    if (cfg.model.lag < 0) throw ValidationError("model.r must be >= 0");
  }

  if (top.has("priors")) {
    FieldReader r(top.at("priors"), "priors");
    if (r.has("omega")) cfg.omega = detail::parse_omega_prior(r.at("omega"), "priors.omega");
    r.read("beta_variance", cfg.params.beta_variance);
    r.read("sigma2_shape", cfg.params.sigma2_shape);
    r.read("sigma2_rate", cfg.params.sigma2_rate);
    r.read("rho_a", cfg.params.rho_shape1);
    r.read("rho_b", cfg.params.rho_shape2);
    r.finish();
    if (!(cfg.params.beta_variance > 0.0)) throw ValidationError("priors.beta_variance must be positive");
    if (!(cfg.params.sigma2_shape > 0.0)) throw ValidationError("priors.sigma2_shape must be positive");
    if (!(cfg.params.sigma2_rate > 0.0)) throw ValidationError("priors.sigma2_rate must be positive");
    if (!(cfg.params.rho_shape1 > 0.0)) throw ValidationError("priors.rho_a must be positive");
    if (!(cfg.params.rho_shape2 > 0.0)) throw ValidationError("priors.rho_b must be positive");
  }

  if (top.has("sampler")) {
    FieldReader r(top.at("sampler"), "sampler");
    r.read("draws", cfg.sampler.n_draws);
    r.read("burnin", cfg.sampler.n_burnin);
    r.read("grid", cfg.sampler.rho_grid_size);
    r.read("seed", cfg.sampler.seed);
    r.read("refresh_interval", cfg.sampler.refresh_interval);
    r.read("thin", cfg.sampler.thin);
    r.read("residual_half_factor", cfg.sampler.residual_half_factor);
    r.read("init_omega_from_prior", cfg.sampler.init_omega_from_prior);
    r.read("identification_check", cfg.sampler.identification_check);
    r.read("max_rejection_fraction", cfg.sampler.max_rejection_fraction);
    r.finish();
  }
  cfg.sampler.validate();

  if (top.has("io")) {
    FieldReader r(top.at("io"), "io");
    r.read("panel", cfg.io.panel);
    r.read("out", cfg.io.out);
    r.read("ordering", cfg.io.ordering);
    r.finish();
  }

  if (top.has("dgp")) {
    FieldReader r(top.at("dgp"), "dgp");
    r.read("n", cfg.dgp.n);
    r.read("t", cfg.dgp.t);
    r.read("rho", cfg.dgp.rho_true);
    if (r.has("beta")) {
      const Json& b = r.at("beta");
      if (!b.is_array() || b.empty()) throw ValidationError("dgp.beta must be a non-empty array");
      cfg.dgp.beta_true.resize(static_cast<Index>(b.size()));
      for (std::size_t k = 0; k < b.size(); ++k) {
        if (!b[k].is_number()) throw ValidationError("dgp.beta entries must be numbers");
        cfg.dgp.beta_true[static_cast<Index>(k)] = b[k].get<double>();
      }
    }
    r.read("sigma2", cfg.dgp.sigma2_true);
    r.read("k", cfg.dgp.k_neighbours);
    r.read("seed", cfg.dgp.seed);
    if (r.has("symmetrization")) {
      const auto s = r.get<std::string>("symmetrization");
      if (s == "union") cfg.dgp.symmetrization = Symmetrization::kUnion;
      else if (s == "intersection") cfg.dgp.symmetrization = Symmetrization::kIntersection;
      else throw ValidationError("dgp.symmetrization must be \"union\" or \"intersection\"");
    }
    r.read("fixed_effects", cfg.dgp.draw_fixed_effects);
    r.finish();
    if (cfg.dgp.k_neighbours < 0) throw ValidationError("dgp.k must be >= 0");
    cfg.dgp.validate();
  }

  if (top.has("mc")) {
    FieldReader r(top.at("mc"), "mc");
    if (r.has("cells")) {
      const Json& cells = r.at("cells");
      if (!cells.is_array()) throw ValidationError("mc.cells must be an array");
      for (std::size_t k = 0; k < cells.size(); ++k) {
        FieldReader c(cells[k], "mc.cells[" + std::to_string(k) + "]");
        McCell cell;
        c.read("n", cell.n);
        c.read("t", cell.t);
        c.read("rho", cell.rho);
        c.finish();
        if (cell.n < 3 || cell.t < 2) throw ValidationError(c.name("n") + " must be >= 3 and t >= 2");
        if (!(cell.rho > 0.0 && cell.rho < 1.0)) throw ValidationError(c.name("rho") + " must lie in (0,1)");
        cfg.mc.cells.push_back(cell);
      }
    }
    r.read("replications", cfg.mc.replications);
    if (r.has("variants")) {
      const Json& vs = r.at("variants");
      if (!vs.is_array()) throw ValidationError("mc.variants must be an array");
      for (std::size_t k = 0; k < vs.size(); ++k) {
        const std::string path = "mc.variants[" + std::to_string(k) + "]";
        if (!vs[k].is_object()) throw ValidationError(path + " must be an object");
        Json prior = vs[k];
        McVariant v;
        if (!prior.contains("name") || !prior["name"].is_string()) {
          throw ValidationError(path + ".name must be a string");
        }
        v.name = prior["name"].get<std::string>();
        prior.erase("name");
        v.omega = detail::parse_omega_prior(prior, path);
        if (v.omega.p_matrix || v.omega.p_csv) throw ValidationError(path + ".p must be a scalar");
        cfg.mc.variants.push_back(std::move(v));
      }
    }
    if (r.has("perturbations")) {
      const Json& ps = r.at("perturbations");
      if (!ps.is_array()) throw ValidationError("mc.perturbations must be an array");
      for (const auto& p : ps) {
        if (!p.is_number()) throw ValidationError("mc.perturbations entries must be numbers");
        const double f = p.get<double>();
        if (!(f >= 0.0 && f < 1.0)) throw ValidationError("mc.perturbations entries must lie in [0,1)");
        cfg.mc.perturbations.push_back(f);
      }
    }
    r.read("symmetric", cfg.mc.symmetric);
    r.read("max_failure_fraction", cfg.mc.max_failure_fraction);
    r.finish();
    if (cfg.mc.replications < 1) throw ValidationError("mc.replications must be >= 1");
    if (!(cfg.mc.max_failure_fraction >= 0.0 && cfg.mc.max_failure_fraction <= 1.0)) {
      throw ValidationError("mc.max_failure_fraction must lie in [0,1]");
    }
  }

  top.read("threads", cfg.threads);
  if (cfg.threads < 0) throw ValidationError("threads must be >= 0");
  top.finish();
  return cfg;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_json_file(path)); }

}  // namespace bayesw
