#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bayesw/config.hpp"
#include "bayesw/dgp.hpp"
#include "bayesw/errors.hpp"
#include "bayesw/io.hpp"
#include "bayesw/metrics.hpp"
#include "bayesw/sampler.hpp"
#include "bayesw/study.hpp"

namespace bayesw {

struct CliOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  std::string panel;
  std::string inclusion;
  std::string ordering;
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

inline std::string error_json(const std::string& type, const std::string& kind, const std::string& message,
                              int code) {
  Json j;
  j["error"] = {{"type", type}, {"kind", kind}, {"message", message}};
  j["exit_code"] = code;
  return j.dump();
}

namespace detail {

inline RunConfig load_or_default(const CliOptions& o) {
  return o.config.empty() ? parse_config(Json::object()) : load_config(o.config);
}

inline std::filesystem::path base_dir(const CliOptions& o) {
  return o.config.empty() ? std::filesystem::path{} : std::filesystem::path(o.config).parent_path();
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

inline std::filesystem::path out_dir(const CliOptions& o, const RunConfig& cfg) {
  return o.out.empty() ? resolve(base_dir(o), cfg.io.out) : std::filesystem::path(o.out);
}

inline Json echo(const RunConfig& cfg, std::uint64_t seed) {
  Json e = cfg.raw;
  e["sampler"]["seed"] = seed;
  return e;
}

inline void cmd_estimate(const CliOptions& o, std::ostream& out) {
  RunConfig cfg = load_or_default(o);
  if (o.seed) cfg.sampler.seed = *o.seed;
  if (o.panel.empty() && cfg.io.panel.empty()) {
    throw ValidationError("io.panel must name the panel CSV (or pass --panel)");
  }
  const auto base = base_dir(o);
  const LoadedPanel panel =
      read_panel(o.panel.empty() ? resolve(base, cfg.io.panel) : std::filesystem::path(o.panel), cfg.model);
  PriorSpec priors{build_omega_prior(cfg.omega, panel.unit_ids, base), cfg.params};
  const ChainOutput chain = run_chain(panel.data, cfg.model, priors, cfg.sampler);
  const auto dir = out_dir(o, cfg);
  write_outputs(chain, panel.data.column_names, panel.unit_ids, echo(cfg, cfg.sampler.seed), cfg.sampler.seed, dir);

  LabeledMatrix inc{panel.unit_ids, chain.draw_count > 0 ? inclusion_matrix(chain)
                                                         : Matrix::Zero(panel.data.n, panel.data.n)};
  if (!cfg.io.ordering.empty()) inc = reorder(inc, read_ordering(resolve(base, cfg.io.ordering)));
  render_heatmap(inc.values, inc.labels, dir / "heatmap.svg");
  out << "wrote " << dir.string() << " (" << chain.draw_count << " draws)\n";
}

inline void cmd_simulate(const CliOptions& o, std::ostream& out) {
  RunConfig cfg = load_or_default(o);
  if (o.seed) cfg.dgp.seed = *o.seed;
  cfg.dgp.validate();
  Rng rng(cfg.dgp.seed);
  const KnnLayout layout = generate_knn_adjacency(cfg.dgp, rng);
  ModelSpec spec = cfg.model;
  spec.lag = 0;
  const SimulatedPanel sim = generate_panel(cfg.dgp, layout.omega, rng, spec);
  const auto labels = default_labels(cfg.dgp.n);
  std::vector<long> times;
  for (Index p = 0; p < cfg.dgp.t; ++p) times.push_back(static_cast<long>(p + 1));
  std::vector<std::string> names;
  for (Index c = 0; c < sim.covariates.cols(); ++c) names.push_back("z" + std::to_string(c + 1));
  const auto dir = out_dir(o, cfg);
  write_panel_csv(dir / "panel.csv", labels, times, sim.data.y, sim.covariates, names);
  write_matrix_csv(dir / "omega_true.csv", layout.omega.to_dense(), labels);
  out << "wrote " << (dir / "panel.csv").string() << " (" << cfg.dgp.n * cfg.dgp.t << " rows)\n";
}

inline void cmd_mc_study(const CliOptions& o, std::ostream& out) {
  RunConfig cfg = load_or_default(o);
  if (o.seed) cfg.sampler.seed = *o.seed;
  const int threads = o.threads > 0 ? o.threads : cfg.threads;
  const StudyResult result = run_mc_study(cfg, cfg.sampler.seed, threads);
  const auto dir = out_dir(o, cfg);
  write_text(dir / "mc_results.csv", study_csv(result));
  write_text(dir / "mc_replications.csv", replications_csv(result));
  out << "wrote " << (dir / "mc_results.csv").string() << " (" << result.rows.size() << " rows)\n";
}

inline void cmd_heatmap(const CliOptions& o, std::ostream& out) {
  if (o.inclusion.empty()) throw ValidationError("heatmap needs --inclusion");
  LabeledMatrix m = read_matrix_csv(o.inclusion);
  if (!o.ordering.empty()) m = reorder(m, read_ordering(o.ordering));
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out);
  render_heatmap(m.values, m.labels, dir / "heatmap.svg");
  out << "wrote " << (dir / "heatmap.svg").string() << "\n";
}

}  // namespace detail

/// Entry point shared by the executable and the tests. Returns the exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian estimation of spatial weight matrices in SAR panels", "bayesw"};
  app.require_subcommand(1);
  CliOptions o;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--seed", o.seed, "Seed override");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads for mc-study (0 = all cores)")->check(CLI::NonNegativeNumber);

  auto* estimate = app.add_subcommand("estimate", "Run the sampler on a panel CSV");
  estimate->add_option("--panel", o.panel, "Panel CSV (overrides io.panel)");
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic panel and its true adjacency");
  auto* mc = app.add_subcommand("mc-study", "Monte Carlo study over DGP cells and prior variants");
  auto* heatmap = app.add_subcommand("heatmap", "Render an inclusion matrix as SVG");
  heatmap->add_option("--inclusion", o.inclusion, "inclusion.csv")->required();
  heatmap->add_option("--ordering", o.ordering, "File listing unit labels, one per line");
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_json("UsageError", "validation", e.what(), 2) << "\n";
    return 2;
  }

  try {
    if (*estimate) detail::cmd_estimate(o, out);
    else if (*simulate) detail::cmd_simulate(o, out);
    else if (*mc) detail::cmd_mc_study(o, out);
    else if (*heatmap) detail::cmd_heatmap(o, out);
    return 0;
  } catch (const Error& e) {
    const int code = static_cast<int>(e.kind());
    err << error_json(e.code(), kind_name(e.kind()), e.what(), code) << "\n";
    return code;
  } catch (const std::exception& e) {
    err << error_json("InternalError", "numerical", e.what(), 3) << "\n";
    return 3;
  }
}

}  // namespace bayesw
