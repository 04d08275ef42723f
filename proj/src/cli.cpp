#include "msgame/cli.hpp"

#include <algorithm>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "msgame/bench.hpp"
#include "msgame/consistency.hpp"
#include "msgame/detect.hpp"
#include "msgame/flatten.hpp"
#include "msgame/generator.hpp"
#include "msgame/io.hpp"
#include "msgame/solvers.hpp"
#include "msgame/vi.hpp"

namespace msgame {

namespace {

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    io::write_text_file(out_path, text);
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

MultiScaleGame load_game(const std::string& path) {
  std::vector<std::string> warnings;
  MultiScaleGame g = io::read_game(path, &warnings);
  print_warnings(warnings);
  return g;
}

int cmd_generate(const std::string& size, const std::string& family, double p_exist, double kappa,
                 double rho_target, std::uint64_t seed, bool no_scale, const std::string& out,
                 std::string cert_path) {
  GenSpec spec;
  spec.branching = parse_branching(size);
  spec.family = family_from_name(family);
  spec.p_exist = p_exist;
  spec.kappa = kappa;
  spec.rho_target = rho_target;
  spec.seed = seed;
  {
    const auto errs = validate(spec);
    if (!errs.empty()) {
      std::cerr << "error: " << errs.front().where << ": " << errs.front().what << "\n";
      return 1;
    }
  }
  MultiScaleGame g = generate(spec);
  std::vector<int> decoupled;
  if (!no_scale) g = scale_to_target_rho(g, spec.rho_target, &decoupled);
  io::write_game(out, g);
  const UniquenessCertificate cert = certify_uniqueness(flatten(g));
  if (cert_path.empty()) cert_path = out + ".cert.json";
  io::write_text_file(cert_path, io::certificate_to_json(cert).dump(2) + "\n");
  std::cout << "wrote " << out << " (" << g.n_leaves << " agents, " << g.n_levels
            << " levels), certificate " << cert_path << " (rho_gamma = "
            << cert.spectral_radius_gamma << ")\n";
  if (!decoupled.empty())
    std::cerr << "note: " << decoupled.size() << " decoupled agents got default costs\n";
  return 0;
}

int cmd_solve(const std::string& game_path, const std::string& alg_name, SolverOptions o,
              const std::vector<double>& penalty, std::optional<double> lqp_mu,
              const std::string& mode, bool require_cert, const std::string& out) {
  const MultiScaleGame g = load_game(game_path);
  o.penalty = penalty;
  o.lqp_mu = lqp_mu;
  if (mode == "jacobi") o.mode = SweepMode::Jacobi;
  else if (mode == "gauss-seidel") o.mode = SweepMode::GaussSeidel;
  else {
    std::cerr << "error: mode must be gauss-seidel or jacobi\n";
    return 1;
  }
  const Algorithm alg = algorithm_from_name(alg_name);
  if (require_cert) {
    const UniquenessCertificate cert = certify_uniqueness(flatten(g));
    if (!cert.p_gamma) {
      std::cerr << "error: uniqueness certificate failed (rho_gamma = "
                << cert.spectral_radius_gamma << "); refusing to solve\n";
      return 1;
    }
  }
  SolverReport rep;
  switch (alg) {
    case Algorithm::BRD: rep = solve_brd(flatten(g), o); break;
    case Algorithm::MSBRD: rep = solve_ms_brd(g, o); break;
    case Algorithm::SHBRD: rep = solve_sh_brd(g, o); break;
    case Algorithm::HHBRD: rep = solve_hh_brd(g, o); break;
  }
  emit(out, io::report_to_json(rep).dump(2) + "\n");
  if (!out.empty())
    std::cout << algorithm_name(alg) << (rep.converged ? " converged in " : " stopped after ")
              << rep.sweeps << " sweeps (residual " << rep.residual_inf << ")\n";
  return 0;
}

int cmd_analyze(const std::string& game_path, const std::string& out) {
  const MultiScaleGame g = load_game(game_path);
  const UniquenessCertificate cert = certify_uniqueness(flatten(g));
  emit(out, io::certificate_to_json(cert).dump(2) + "\n");
  return 0;
}

int cmd_detect(const std::string& game_path, double tol, const std::string& out) {
  const MultiScaleGame g = load_game(game_path);
  const FlatGame flat = flatten(g);
  const DetectResult res = detect_structure(flat, tol);
  if (!res.ok) {
    std::cerr << "error: no multi-scale structure found: " << res.reason << "\n";
    return 1;
  }
  emit(out, io::game_to_json(res.game).dump(2) + "\n");
  if (!out.empty()) {
    std::cout << "recovered " << res.game.level_count(2) << " groups over "
              << res.game.n_leaves << " agents\n";
  }
  return 0;
}

int cmd_consistency(const std::string& game_path, const std::vector<double>& c_group_arg,
                    bool calibrate, int s1, int s2, double tol, const std::string& out) {
  const MultiScaleGame g = load_game(game_path);
  nlohmann::json extra;
  Vector c_group;
  if (calibrate) {
    CalibrateOptions co;
    co.s1 = s1;
    co.s2 = s2;
    co.tol = tol * 1e-2;
    const CalibrateResult cal = calibrate_iterative(g, co);
    c_group = cal.c_group;
    extra["calibration_rounds"] = cal.rounds;
    extra["calibration_converged"] = cal.converged;
  } else if (!c_group_arg.empty()) {
    c_group = Eigen::Map<const Vector>(c_group_arg.data(), c_group_arg.size());
  }
  ConsistencyVerdict v;
  if (c_group.size()) {
    v = check_consistency(g, c_group, tol);
  } else {
    // no costs supplied: check the closed-form consistent costs themselves
    const FlatGame flat = flatten(g);
    const Vector xstar = direct_linear_equilibrium(flat);
    Vector b_G = Vector::Zero(g.level_count(2));
    if (!g.params.level_benefit.empty() && g.params.level_benefit[0].size() == b_G.size())
      b_G = g.params.level_benefit[0];
    const Vector cstar = compute_consistent_costs(xstar, g.levels[0].groups, g.top, b_G);
    v = check_consistency(g, cstar, tol);
  }
  nlohmann::json j = io::verdict_to_json(v);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  emit(out, j.dump(2) + "\n");
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out) {
  std::vector<std::string> warnings;
  const ExperimentConfig cfg = config_from_json(io::parse_json_file(config_path), &warnings);
  print_warnings(warnings);
  const ExperimentResult res = run_experiment(cfg);
  emit(out, csv_string(res.rows));
  for (const CellSummary& s : res.summaries) {
    if (s.skipped) {
      std::cout << "cell " << s.cell_index << ": skipped (" << s.reason << ")\n";
      continue;
    }
    std::cout << "cell " << s.cell_index << ": profile cross-check " << s.cross_check_max << "\n";
    for (const AlgStats& st : s.stats)
      std::cout << "  " << st.algorithm << ": flops " << st.flops_mean << " +- " << st.flops_sd
                << ", wall " << st.wall_mean_ms << " +- " << st.wall_sd_ms << " ms (median "
                << st.wall_median_ms << ")\n";
  }
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"multi-scale network game solver and benchmark tool", "msgame"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a random game instance");
  std::string g_size, g_family = "linear", g_out, g_cert;
  double g_p = 0.1, g_kappa = 0.1, g_rho = 0.75;
  std::uint64_t g_seed = 0;
  bool g_noscale = false;
  gen->add_option("--size", g_size, "branching, e.g. 30x30 or 10x10x10")->required();
  gen->add_option("--family", g_family, "linear | nonlinear | mixed");
  gen->add_option("--p-exist", g_p, "edge probability");
  gen->add_option("--kappa", g_kappa, "exponential rate");
  gen->add_option("--rho-target", g_rho, "target certificate spectral radius");
  gen->add_option("--seed", g_seed, "generator seed");
  gen->add_flag("--no-scale", g_noscale, "keep unit costs instead of scaling to the target");
  gen->add_option("-o,--output", g_out, "game file to write")->required();
  gen->add_option("--cert", g_cert, "certificate file (default: <output>.cert.json)");

  // solve
  auto* sol = app.add_subcommand("solve", "solve a game file");
  std::string s_game, s_alg, s_out, s_mode = "gauss-seidel";
  SolverOptions s_opts;
  std::vector<double> s_penalty;
  double s_mu = 0.0;
  bool s_require = false;
  sol->add_option("game", s_game, "game JSON file")->required();
  sol->add_option("--alg", s_alg, "brd | ms-brd | sh-brd | hh-brd")->required();
  sol->add_option("--epsilon", s_opts.epsilon, "stopping tolerance");
  sol->add_option("--max-sweeps", s_opts.max_sweeps, "sweep budget");
  sol->add_option("--mode", s_mode, "gauss-seidel | jacobi");
  sol->add_option("--penalty", s_penalty, "penalty weights per level, comma separated")
      ->delimiter(',');
  auto* mu_opt = sol->add_option("--lqp-mu", s_mu, "proximal weight in (0, 5/9)");
  sol->add_option("--hh-split", s_opts.hh_split, "meta-level split for hh-brd");
  double s_timeout = 0.0;
  auto* timeout_opt = sol->add_option("--timeout", s_timeout, "wall-clock budget in seconds");
  sol->add_flag("--require-certificate", s_require, "refuse to run without a uniqueness certificate");
  sol->add_option("-o,--output", s_out, "report file (default: stdout)");

  // analyze
  auto* ana = app.add_subcommand("analyze", "compute the uniqueness certificate");
  std::string a_game, a_out;
  ana->add_option("game", a_game, "game JSON file")->required();
  ana->add_option("-o,--output", a_out, "certificate file (default: stdout)");

  // detect
  auto* det = app.add_subcommand("detect", "recover multi-scale structure from a flat game");
  std::string d_game, d_out;
  double d_tol = 1e-9;
  det->add_option("game", d_game, "game JSON file")->required();
  det->add_option("--tol", d_tol, "signature tolerance");
  det->add_option("-o,--output", d_out, "reconstructed game file (default: stdout)");

  // consistency
  auto* con = app.add_subcommand("consistency", "group-stage consistency verdict");
  std::string c_game, c_out;
  std::vector<double> c_costs;
  bool c_cal = false;
  int c_s1 = 1, c_s2 = 1;
  double c_tol = 1e-8;
  con->add_option("game", c_game, "2-level linear game JSON file")->required();
  con->add_option("--c-group", c_costs, "group costs to test, comma separated")->delimiter(',');
  con->add_flag("--calibrate", c_cal, "calibrate group costs iteratively first");
  con->add_option("--s1", c_s1, "agent sweeps per calibration round");
  con->add_option("--s2", c_s2, "group sweeps per calibration round");
  con->add_option("--tol", c_tol, "verdict tolerance");
  con->add_option("-o,--output", c_out, "verdict file (default: stdout)");

  // bench
  auto* ben = app.add_subcommand("bench", "run an experiment config");
  std::string b_cfg, b_out;
  ben->add_option("config", b_cfg, "experiment config JSON")->required();
  ben->add_option("-o,--output", b_out, "CSV output file")->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_generate(g_size, g_family, g_p, g_kappa, g_rho, g_seed, g_noscale, g_out, g_cert);
    if (sol->parsed()) {
      if (timeout_opt->count()) s_opts.deadline_ms = s_timeout * 1000.0;
      return cmd_solve(s_game, s_alg, s_opts, s_penalty,
                       mu_opt->count() ? std::optional<double>(s_mu) : std::nullopt, s_mode,
                       s_require, s_out);
    }
    if (ana->parsed()) return cmd_analyze(a_game, a_out);
    if (det->parsed()) return cmd_detect(d_game, d_tol, d_out);
    if (con->parsed()) return cmd_consistency(c_game, c_costs, c_cal, c_s1, c_s2, c_tol, c_out);
    if (ben->parsed()) return cmd_bench(b_cfg, b_out);
  } catch (const io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace msgame
