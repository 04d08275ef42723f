#include "msgame/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <thread>

#include "msgame/flatten.hpp"
#include "msgame/io.hpp"
#include "msgame/vi.hpp"

namespace msgame {

namespace {

struct InstanceOutcome {
  std::vector<ResultRow> rows;
  bool cert_failed = false;
  std::string cert_reason;
  double cross_check = 0.0;
  std::vector<double> wall_by_alg;  // aligned with cell.algorithms
};

std::string instance_label(int cell, int rep) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%03d-r%03d", cell, rep);
  return buf;
}

InstanceOutcome run_instance(const BenchCell& cell, int cell_index, int rep, double timeout_s) {
  InstanceOutcome out;
  MultiScaleGame game = scale_to_target_rho(generate(cell.gen), cell.gen.rho_target);
  const FlatGame flat = flatten(game);
  const UniquenessCertificate cert = certify_uniqueness(flat);
  if (!cert.p_gamma) {
    out.cert_failed = true;
    out.cert_reason = "certificate failed: rho_gamma = " + std::to_string(cert.spectral_radius_gamma);
    return out;
  }
  std::vector<Vector> finals;
  for (const Algorithm alg : cell.algorithms) {
    SolverOptions o = cell.options;
    o.deadline_ms = timeout_s * 1000.0;
    const auto t0 = std::chrono::steady_clock::now();
    SolverReport rep_out;
    switch (alg) {
      case Algorithm::BRD: rep_out = solve_brd(flat, o); break;
      case Algorithm::MSBRD: rep_out = solve_ms_brd(game, o); break;
      case Algorithm::SHBRD: rep_out = solve_sh_brd(game, o); break;
      case Algorithm::HHBRD: rep_out = solve_hh_brd(game, o); break;
    }
    double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (rep_out.timed_out) wall = timeout_s * 1000.0;
    ResultRow row;
    row.instance_id = instance_label(cell_index, rep);
    row.seed = cell.gen.seed;
    row.size = branching_string(cell.gen.branching);
    row.levels = cell.gen.levels();
    row.algorithm = algorithm_name(alg);
    row.sweeps = rep_out.sweeps;
    row.flops = rep_out.flops;
    row.wall_ms = wall;
    row.converged = rep_out.converged;
    row.residual_inf = rep_out.residual_inf;
    row.rho_gamma = cert.spectral_radius_gamma;
    out.rows.push_back(std::move(row));
    out.wall_by_alg.push_back(wall);
    finals.push_back(rep_out.x);
  }
  for (size_t a = 0; a < finals.size(); ++a)
    for (size_t b = a + 1; b < finals.size(); ++b)
      out.cross_check =
          std::max(out.cross_check, (finals[a] - finals[b]).lpNorm<Eigen::Infinity>());
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<Violation> validate(const ExperimentConfig& config) {
  std::vector<Violation> out;
  if (!(config.timeout_s > 0.0)) out.push_back({"timeout_s", "timeout must be positive"});
  if (config.cells.empty()) out.push_back({"cells", "experiment has no cells"});
  for (size_t c = 0; c < config.cells.size(); ++c) {
    const BenchCell& cell = config.cells[c];
    const std::string where = "cells[" + std::to_string(c) + "]";
    if (cell.repetitions < 1) out.push_back({where, "repetitions must be at least 1"});
    if (cell.algorithms.empty()) out.push_back({where, "cell has no algorithms"});
    for (const Violation& v : msgame::validate(cell.gen))
      out.push_back({where + "." + v.where, v.what});
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  {
    const auto errs = validate(config);
    if (!errs.empty())
      throw std::invalid_argument("run_experiment: " + errs.front().where + ": " +
                                  errs.front().what);
  }
  struct Task {
    int cell;
    int rep;
  };
  std::vector<Task> tasks;
  for (size_t c = 0; c < config.cells.size(); ++c)
    for (int r = 0; r < config.cells[c].repetitions; ++r)
      tasks.push_back({static_cast<int>(c), r});
  std::vector<InstanceOutcome> outcomes(tasks.size());

  int workers = 1;
  if (const char* env = std::getenv("MSGAME_WORKERS")) {
    workers = std::atoi(env);
    if (workers < 1) workers = 1;
  }
  const int task_count = static_cast<int>(tasks.size());
  workers = std::min(workers, std::max(task_count, 1));

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t t = next.fetch_add(1);
      if (t >= tasks.size()) break;
      outcomes[t] =
          run_instance(config.cells[tasks[t].cell], tasks[t].cell, tasks[t].rep, config.timeout_s);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  ExperimentResult result;
  result.summaries.resize(config.cells.size());
  for (size_t c = 0; c < config.cells.size(); ++c) result.summaries[c].cell_index = c;
  for (size_t t = 0; t < tasks.size(); ++t) {
    CellSummary& sum = result.summaries[tasks[t].cell];
    InstanceOutcome& oc = outcomes[t];
    if (oc.cert_failed) {
      sum.skipped = true;
      sum.reason = oc.cert_reason;
      continue;
    }
    sum.cross_check_max = std::max(sum.cross_check_max, oc.cross_check);
    for (ResultRow& row : oc.rows) result.rows.push_back(std::move(row));
  }
  for (size_t c = 0; c < config.cells.size(); ++c) {
    CellSummary& sum = result.summaries[c];
    if (sum.skipped) continue;
    const BenchCell& cell = config.cells[c];
    for (const Algorithm alg : cell.algorithms) {
      const std::string name = algorithm_name(alg);
      std::vector<double> flops, wall;
      for (const ResultRow& row : result.rows)
        if (row.algorithm == name && row.instance_id.rfind(instance_label(c, 0).substr(0, 5), 0) == 0) {
          flops.push_back(static_cast<double>(row.flops));
          wall.push_back(row.wall_ms);
        }
      AlgStats st;
      st.algorithm = name;
      st.flops_mean = mean_of(flops);
      st.flops_sd = sample_sd(flops);
      st.wall_mean_ms = mean_of(wall);
      st.wall_sd_ms = sample_sd(wall);
      st.wall_median_ms = median_of(wall);
      sum.stats.push_back(std::move(st));
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.instance_id != b.instance_id) return a.instance_id < b.instance_id;
    return a.algorithm < b.algorithm;
  });
  return result;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "instance_id,seed,size,levels,algorithm,sweeps,flops,wall_ms,converged,residual_inf,"
         "rho_gamma\n";
  char buf[128];
  for (const ResultRow& r : rows) {
    out << r.instance_id << ',' << r.seed << ',' << r.size << ',' << r.levels << ','
        << r.algorithm << ',' << r.sweeps << ',' << r.flops << ',';
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
    out << buf << ',' << (r.converged ? "true" : "false") << ',';
    std::snprintf(buf, sizeof(buf), "%.9e", r.residual_inf);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.9f", r.rho_gamma);
    out << buf << '\n';
  }
}

std::string csv_string(const std::vector<ResultRow>& rows) {
  std::ostringstream ss;
  write_csv(ss, rows);
  return ss.str();
}

ExperimentConfig config_from_json(const nlohmann::json& j, std::vector<std::string>* warnings) {
  using nlohmann::json;
  if (!j.is_object()) throw io::FormatError("config: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "timeout_s" && it.key() != "cells" && warnings)
      warnings->push_back("unknown field ignored: " + it.key());
  ExperimentConfig cfg;
  if (j.contains("timeout_s")) {
    if (!j.at("timeout_s").is_number()) throw io::FormatError("timeout_s: expected a number");
    cfg.timeout_s = j.at("timeout_s").get<double>();
  }
  if (!j.contains("cells") || !j.at("cells").is_array())
    throw io::FormatError("cells: missing required array");
  static const std::set<std::string> known = {
      "size",   "branching",   "family",    "p_exist", "kappa",   "rho_target",
      "seed",   "algorithms",  "repetitions", "epsilon", "max_sweeps", "mode",
      "penalty", "lqp_mu",     "hh_split"};
  for (const json& cj : j.at("cells")) {
    if (!cj.is_object()) throw io::FormatError("cells: expected objects");
    for (auto it = cj.begin(); it != cj.end(); ++it)
      if (!known.count(it.key()) && warnings)
        warnings->push_back("unknown cell field ignored: " + it.key());
    BenchCell cell;
    if (cj.contains("size")) {
      if (!cj.at("size").is_string()) throw io::FormatError("size: expected a string like 30x30");
      cell.gen.branching = parse_branching(cj.at("size").get<std::string>());
    } else if (cj.contains("branching")) {
      for (const json& e : cj.at("branching")) {
        if (!e.is_number_integer()) throw io::FormatError("branching: expected integers");
        cell.gen.branching.push_back(e.get<int>());
      }
    } else {
      throw io::FormatError("cells: each cell needs size or branching");
    }
    if (cj.contains("family")) {
      if (!cj.at("family").is_string()) throw io::FormatError("family: expected a string");
      cell.gen.family = family_from_name(cj.at("family").get<std::string>());
    }
    if (cj.contains("p_exist")) cell.gen.p_exist = cj.at("p_exist").get<double>();
    if (cj.contains("kappa")) cell.gen.kappa = cj.at("kappa").get<double>();
    if (cj.contains("rho_target")) cell.gen.rho_target = cj.at("rho_target").get<double>();
    if (cj.contains("seed")) cell.gen.seed = cj.at("seed").get<std::uint64_t>();
    if (!cj.contains("algorithms") || !cj.at("algorithms").is_array())
      throw io::FormatError("algorithms: missing required array");
    for (const json& a : cj.at("algorithms")) {
      if (!a.is_string()) throw io::FormatError("algorithms: expected strings");
      cell.algorithms.push_back(algorithm_from_name(a.get<std::string>()));
    }
    if (cj.contains("repetitions")) cell.repetitions = cj.at("repetitions").get<int>();
    if (cj.contains("epsilon")) cell.options.epsilon = cj.at("epsilon").get<double>();
    if (cj.contains("max_sweeps")) cell.options.max_sweeps = cj.at("max_sweeps").get<int>();
    if (cj.contains("mode")) {
      const std::string m = cj.at("mode").get<std::string>();
      if (m == "gauss-seidel") cell.options.mode = SweepMode::GaussSeidel;
      else if (m == "jacobi") cell.options.mode = SweepMode::Jacobi;
      else throw io::FormatError("mode: expected gauss-seidel or jacobi");
    }
    if (cj.contains("penalty"))
      for (const json& h : cj.at("penalty")) cell.options.penalty.push_back(h.get<double>());
    if (cj.contains("lqp_mu") && !cj.at("lqp_mu").is_null())
      cell.options.lqp_mu = cj.at("lqp_mu").get<double>();
    if (cj.contains("hh_split")) cell.options.hh_split = cj.at("hh_split").get<int>();
    cfg.cells.push_back(std::move(cell));
  }
  return cfg;
}

}  // namespace msgame
