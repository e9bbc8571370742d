#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bayesw/config.hpp"
#include "bayesw/dgp.hpp"
#include "bayesw/metrics.hpp"
#include "bayesw/random.hpp"
#include "bayesw/sampler.hpp"

namespace bayesw {

/// One (cell, variant) block of the study table.
struct StudyRow {
  McCell cell;
  std::string variant;
  bool baseline = false;
  bool aborted = false;
  McResult result;
};

struct StudyResult {
  std::vector<StudyRow> rows;
};

inline std::string baseline_name(double fraction) {
  std::ostringstream os;
  os << "exogenous_" << format_double(1.0 - fraction);
  return os.str();
}

/// Prior that pins every off-diagonal entry to the given matrix.
inline OmegaPrior pinned_prior(const AdjacencyMatrix& omega) {
  OmegaPrior prior = fixed_omega_prior(omega.n(), 0.5);
  prior.inclusion = omega.to_dense();
  return prior;
}

/// Runs `count` tasks on up to `threads` workers; task k writes only its own slot.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, static_cast<std::size_t>(threads)));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) task(k);
    });
  }
}

inline int default_threads(int requested, std::size_t tasks) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(1, tasks)));
}

/// RMSE of the covariate slopes and of rho from one chain.
inline ReplicationRecord score_chain(const ChainOutput& chain, const Vector& beta_true, double rho_true) {
  ReplicationRecord r;
  const Vector means = column_means(chain.beta_draws);
  r.rmse_beta = rmse(Vector(means.head(beta_true.size())), beta_true);
  r.rmse_rho = rmse(mean_of(chain.rho_draws), rho_true);
  return r;
}

/**
 * @brief Monte Carlo study over cells x replications.
 *
 * Each (cell, replication) task draws one data set and fits every prior
 * variant plus the perturbed exogenous baselines on it. Seeds depend only on
 * the master seed and the task indices, so results do not depend on the
 * thread count.
 */
inline StudyResult run_mc_study(const RunConfig& cfg, std::uint64_t master_seed, int threads) {
  const McConfig& mc = cfg.mc;
  if (mc.cells.empty()) throw ValidationError("mc.cells must list at least one cell");
  if (mc.variants.empty() && mc.perturbations.empty()) {
    throw ValidationError("mc.variants or mc.perturbations must be non-empty");
  }
  const std::size_t n_variants = mc.variants.size();
  const std::size_t n_columns = n_variants + mc.perturbations.size();
  const std::size_t reps = static_cast<std::size_t>(mc.replications);
  const std::size_t tasks = mc.cells.size() * reps;

  // records[(cell * reps + rep) * n_columns + column]
  std::vector<ReplicationRecord> records(tasks * n_columns);

  ModelSpec spec = cfg.model;
  spec.lag = 0;
  spec.symmetric_omega = mc.symmetric;

  auto task = [&](std::size_t k) {
    const std::size_t c = k / reps;
    const std::size_t rep = k % reps;
    const McCell& cell = mc.cells[c];
    const std::uint64_t data_seed = derive_seed(derive_seed(master_seed, c), rep);
    ReplicationRecord* out = &records[k * n_columns];
    try {
      DgpConfig dgp = cfg.dgp;
      dgp.n = cell.n;
      dgp.t = cell.t;
      dgp.rho_true = cell.rho;
      dgp.seed = data_seed;
      Rng rng(data_seed);
      KnnLayout layout = generate_knn_adjacency(dgp, rng);
      if (!mc.symmetric) layout.omega = AdjacencyMatrix::from_dense(layout.omega.to_dense(), false);
      const SimulatedPanel sim = generate_panel(dgp, layout.omega, rng, spec);
      std::vector<std::string> labels = default_labels(cell.n);

      for (std::size_t v = 0; v < n_columns; ++v) {
        ReplicationRecord& rec = out[v];
        try {
          SamplerConfig sc = cfg.sampler;
          sc.seed = derive_seed(data_seed, v + 1);
          PriorSpec priors;
          priors.params = cfg.params;
          if (v < n_variants) {
            priors.omega = build_omega_prior(mc.variants[v].omega, labels);
            const ChainOutput chain = run_chain(sim.data, spec, priors, sc);
            rec = score_chain(chain, dgp.beta_true, cell.rho);
            rec.accuracy = accuracy_from_inclusion(inclusion_matrix(chain), layout.omega, free_mask(priors.omega));
          } else {
            Rng prng(derive_seed(data_seed, 1000 + v));
            const AdjacencyMatrix perturbed =
                perturb_adjacency(layout.omega, mc.perturbations[v - n_variants], prng);
            priors.omega = pinned_prior(perturbed);
            sc.identification_check = false;
            const ChainOutput chain = run_chain(sim.data, spec, priors, sc);
            rec = score_chain(chain, dgp.beta_true, cell.rho);
            rec.accuracy = overlap(perturbed, layout.omega);
          }
          rec.ok = true;
        } catch (const std::exception& e) {
          rec = ReplicationRecord{};
          rec.ok = false;
          rec.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (std::size_t v = 0; v < n_columns; ++v) {
        out[v] = ReplicationRecord{};
        out[v].ok = false;
        out[v].error = e.what();
      }
    }
  };
  parallel_for(tasks, default_threads(threads, tasks), task);

  StudyResult result;
  for (std::size_t c = 0; c < mc.cells.size(); ++c) {
    for (std::size_t v = 0; v < n_columns; ++v) {
      std::vector<ReplicationRecord> column;
      for (std::size_t rep = 0; rep < reps; ++rep) column.push_back(records[(c * reps + rep) * n_columns + v]);
      StudyRow row;
      row.cell = mc.cells[c];
      row.baseline = v >= n_variants;
      row.variant = row.baseline ? baseline_name(mc.perturbations[v - n_variants]) : mc.variants[v].name;
      row.result = aggregate(std::move(column));
      row.aborted = static_cast<double>(row.result.failed) > mc.max_failure_fraction * static_cast<double>(reps);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

/// Long-format table: one row per (cell, variant).
inline std::string study_csv(const StudyResult& r) {
  std::ostringstream os;
  os << "n,t,rho,variant,status,replications,failed,rmse_beta,rmse_rho,accuracy_omega\n";
  for (const auto& row : r.rows) {
    os << row.cell.n << ',' << row.cell.t << ',' << format_double(row.cell.rho) << ',' << csv_escape(row.variant)
       << ',' << (row.aborted ? "aborted" : "ok") << ',' << row.result.succeeded << ',' << row.result.failed << ',';
    if (row.aborted) {
      os << ",,\n";
    } else {
      os << format_double(row.result.rmse_beta) << ',' << format_double(row.result.rmse_rho) << ','
         << format_double(row.result.accuracy_omega) << '\n';
    }
  }
  return os.str();
}

/// Per-replication records, including failure messages.
inline std::string replications_csv(const StudyResult& r) {
  std::ostringstream os;
  os << "n,t,rho,variant,replication,ok,rmse_beta,rmse_rho,accuracy_omega,error\n";
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < row.result.replications.size(); ++k) {
      const auto& rec = row.result.replications[k];
      os << row.cell.n << ',' << row.cell.t << ',' << format_double(row.cell.rho) << ',' << csv_escape(row.variant)
         << ',' << k + 1 << ',' << (rec.ok ? 1 : 0) << ',';
      if (rec.ok) {
        os << format_double(rec.rmse_beta) << ',' << format_double(rec.rmse_rho) << ','
           << format_double(rec.accuracy) << ",\n";
      } else {
        os << ",,," << csv_escape(rec.error) << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace bayesw
