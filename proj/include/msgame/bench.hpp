#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "msgame/generator.hpp"
#include "msgame/solvers.hpp"

namespace msgame {

struct BenchCell {
  GenSpec gen;
  std::vector<Algorithm> algorithms;
  SolverOptions options;
  int repetitions = 1;
};

struct ExperimentConfig {
  std::vector<BenchCell> cells;
  double timeout_s = 300.0;
};

struct ResultRow {
  std::string instance_id;
  std::uint64_t seed = 0;
  std::string size;
  int levels = 0;
  std::string algorithm;
  int sweeps = 0;
  std::int64_t flops = 0;
  double wall_ms = 0.0;
  bool converged = false;
  double residual_inf = 0.0;
  double rho_gamma = 0.0;
};

struct AlgStats {
  std::string algorithm;
  double flops_mean = 0.0, flops_sd = 0.0;
  double wall_mean_ms = 0.0, wall_sd_ms = 0.0, wall_median_ms = 0.0;
};

struct CellSummary {
  int cell_index = 0;
  bool skipped = false;
  std::string reason;
  double cross_check_max = 0.0;  // pairwise distance of final profiles, worst rep
  std::vector<AlgStats> stats;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // sorted by (instance_id, algorithm)
  std::vector<CellSummary> summaries;
};

std::vector<Violation> validate(const ExperimentConfig& config);

// Generates every cell instance deterministically, certifies it, runs each
// algorithm from the same initial profile with the configured wall-clock
// deadline, and cross-checks the final profiles pairwise. Repetitions reuse
// the same seed, so flop columns repeat exactly and only timings vary. Cells
// whose certificate fails are skipped with a reason. Worker count comes from
// MSGAME_WORKERS (default 1).
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::string csv_string(const std::vector<ResultRow>& rows);

ExperimentConfig config_from_json(const nlohmann::json& j,
                                  std::vector<std::string>* warnings = nullptr);

}  // namespace msgame
