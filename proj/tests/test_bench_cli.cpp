#include "doctest.h"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "msgame/bench.hpp"
#include "msgame/cli.hpp"
#include "msgame/game.hpp"
#include "msgame/generator.hpp"
#include "msgame/io.hpp"

using namespace msgame;
namespace fs = std::filesystem;

namespace {

const char* kHeader =
    "instance_id,seed,size,levels,algorithm,sweeps,flops,wall_ms,converged,residual_inf,"
    "rho_gamma\n";

std::string scratch_path(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "msgame_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  BenchCell cell;
  cell.gen.branching = {4, 3};
  cell.gen.p_exist = 0.3;
  cell.gen.family = GenSpec::Family::Linear;
  cell.gen.seed = 5;
  cell.algorithms = {Algorithm::BRD, Algorithm::MSBRD};
  cell.repetitions = 2;
  cfg.cells = {cell};
  cfg.timeout_s = 60.0;
  return cfg;
}

// column 7 is wall time, the only nondeterministic field
std::string strip_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::string kept;
    int col = 0;
    size_t pos = 0;
    while (true) {
      size_t next = line.find(',', pos);
      std::string field = line.substr(pos, next == std::string::npos ? next : next - pos);
      if (col != 7) {
        if (!kept.empty()) kept += ',';
        kept += field;
      }
      if (next == std::string::npos) break;
      pos = next + 1;
      ++col;
    }
    out += kept;
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string field(const std::string& line, int idx) {
  size_t pos = 0;
  for (int i = 0; i < idx; ++i) pos = line.find(',', pos) + 1;
  size_t end = line.find(',', pos);
  return line.substr(pos, end == std::string::npos ? end : end - pos);
}

}  // namespace

TEST_CASE("result rows print with a fixed header and formats") {
  ResultRow r;
  r.instance_id = "c000-r000";
  r.seed = 7;
  r.size = "2x2";
  r.levels = 2;
  r.algorithm = "brd";
  r.sweeps = 3;
  r.flops = 42;
  r.wall_ms = 1.5;
  r.converged = true;
  r.residual_inf = 1e-7;
  r.rho_gamma = 0.75;
  std::string csv = csv_string({r});
  CHECK(csv.rfind(kHeader, 0) == 0);
  CHECK(csv == std::string(kHeader) +
                   "c000-r000,7,2x2,2,brd,3,42,1.500,true,1.000000000e-07,0.750000000\n");
}

TEST_CASE("experiments repeat bit identically apart from wall time") {
  ExperimentConfig cfg = small_config();
  ExperimentResult a = run_experiment(cfg);
  ExperimentResult b = run_experiment(cfg);
  REQUIRE(!a.rows.empty());
  CHECK(strip_wall(csv_string(a.rows)) == strip_wall(csv_string(b.rows)));

  // repetitions reuse the seed, so per-algorithm flop counts repeat exactly
  for (const std::string& alg : {std::string("brd"), std::string("ms-brd")}) {
    std::vector<const ResultRow*> reps;
    for (const ResultRow& r : a.rows)
      if (r.algorithm == alg) reps.push_back(&r);
    REQUIRE(reps.size() == 2);
    CHECK(reps[0]->flops == reps[1]->flops);
    CHECK(reps[0]->sweeps == reps[1]->sweeps);
    CHECK(reps[0]->residual_inf == reps[1]->residual_inf);
    CHECK(reps[0]->converged);
  }

  REQUIRE(a.summaries.size() == 1);
  CHECK(!a.summaries[0].skipped);
  CHECK(a.summaries[0].cross_check_max <= 1e-4);
  CHECK(!a.summaries[0].stats.empty());
}

TEST_CASE("experiment configs load from json with warnings for unknown keys") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "timeout_s": 12.5,
    "cells": [{
      "size": "4x3",
      "family": "mixed",
      "p_exist": 0.2,
      "seed": 3,
      "algorithms": ["brd", "ms-brd"],
      "repetitions": 2,
      "epsilon": 1e-8,
      "unknown_knob": 1
    }]
  })");
  std::vector<std::string> warnings;
  ExperimentConfig cfg = config_from_json(j, &warnings);
  CHECK(cfg.timeout_s == 12.5);
  REQUIRE(cfg.cells.size() == 1);
  CHECK(cfg.cells[0].gen.branching == std::vector<int>{4, 3});
  CHECK(cfg.cells[0].gen.family == GenSpec::Family::Mixed);
  CHECK(cfg.cells[0].gen.p_exist == 0.2);
  CHECK(cfg.cells[0].gen.seed == 3);
  CHECK(cfg.cells[0].repetitions == 2);
  CHECK(cfg.cells[0].options.epsilon == 1e-8);
  REQUIRE(cfg.cells[0].algorithms.size() == 2);
  CHECK(cfg.cells[0].algorithms[0] == Algorithm::BRD);
  CHECK(!warnings.empty());
}

TEST_CASE("game files round trip through disk") {
  MultiScaleGame g;
  {
    GenSpec s;
    s.branching = {4, 3};
    s.p_exist = 0.4;
    s.family = GenSpec::Family::Nonlinear;
    s.seed = 21;
    g = generate(s);
  }
  std::string path = scratch_path("roundtrip.json");
  io::write_game(path, g);
  MultiScaleGame back = io::read_game(path);
  CHECK(io::game_to_json(g).dump() == io::game_to_json(back).dump());

  std::string bad = scratch_path("malformed.json");
  io::write_text_file(bad, "{ not json");
  CHECK_THROWS_AS(io::read_game(bad), io::IoError);
  CHECK_THROWS_AS(io::read_game(scratch_path("missing.json")), io::IoError);
}

TEST_CASE("cli generates solves and benches end to end") {
  std::string game = scratch_path("cli_game.json");
  CHECK(run_cli({"generate", "--size", "4x3", "--family", "nonlinear", "--seed", "9", "-o",
                 game}) == 0);
  MultiScaleGame g = io::read_game(game);
  CHECK(g.n_leaves == 12);
  CHECK(g.n_levels == 2);

  std::string sol = scratch_path("cli_solution.json");
  CHECK(run_cli({"solve", game, "--alg", "ms-brd", "-o", sol}) == 0);
  nlohmann::json rep = io::parse_json_file(sol);
  CHECK(rep.at("converged").get<bool>());
  CHECK(rep.at("algorithm").get<std::string>() == "ms-brd");

  std::string csv = scratch_path("cli_bench.csv");
  std::string cfg = scratch_path("cli_config.json");
  io::write_text_file(cfg, R"({
    "timeout_s": 60,
    "cells": [{
      "size": "3x3",
      "family": "linear",
      "p_exist": 0.3,
      "seed": 5,
      "algorithms": ["brd", "ms-brd"],
      "repetitions": 1
    }]
  })");
  CHECK(run_cli({"bench", cfg, "-o", csv}) == 0);
  std::vector<std::string> lines = split_lines(io::read_text_file(csv));
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] + "\n" == kHeader);
  CHECK(field(lines[1], 4) == "brd");
  CHECK(field(lines[1], 8) == "true");

  std::string cert = scratch_path("cli_cert.json");
  CHECK(run_cli({"analyze", game, "-o", cert}) == 0);
  nlohmann::json cj = io::parse_json_file(cert);
  CHECK(cj.at("rho_gamma").get<double>() > 0.0);

  std::string lin = scratch_path("cli_linear.json");
  REQUIRE(run_cli({"generate", "--size", "4x3", "--family", "linear", "--p-exist", "0.6",
                   "--seed", "13", "-o", lin}) == 0);
  std::string rec = scratch_path("cli_detected.json");
  CHECK(run_cli({"detect", lin, "-o", rec}) == 0);
  MultiScaleGame found = io::read_game(rec);
  CHECK(found.n_levels == 2);
  CHECK(found.level_count(2) == 3);

  std::string verdict = scratch_path("cli_verdict.json");
  CHECK(run_cli({"consistency", lin, "-o", verdict}) == 0);
  nlohmann::json vj = io::parse_json_file(verdict);
  CHECK(vj.at("consistent").get<bool>());
}

TEST_CASE("cli distinguishes contract violations from io failures") {
  std::string game = scratch_path("cli_game2.json");
  REQUIRE(run_cli({"generate", "--size", "3x2", "--seed", "4", "-o", game}) == 0);

  CHECK(run_cli({"solve", game, "--alg", "simplex"}) == 1);
  CHECK(run_cli({"solve", scratch_path("nope.json"), "--alg", "brd"}) == 2);

  // coupling far above the uniqueness threshold: certification must refuse
  MultiScaleGame wild;
  wild.n_leaves = 2;
  wild.n_levels = 2;
  HierarchyLevel h;
  h.groups = {{0, 1}};
  Matrix w = Matrix::Zero(2, 2);
  w(0, 1) = 10.0;
  w(1, 0) = 10.0;
  h.within = {w};
  wild.levels = {h};
  wild.top = Matrix::Zero(1, 1);
  wild.params.a = Vector::Zero(2);
  wild.params.b = Vector::Constant(2, 1.0);
  wild.params.c = Vector::Constant(2, 1.0);
  wild.params.kappa = Vector::Zero(2);
  wild.boxes.assign(2, ActionBox{0.0, 1e6});
  finalize(wild);
  std::string wild_path = scratch_path("wild.json");
  io::write_game(wild_path, wild);
  CHECK(run_cli({"solve", wild_path, "--alg", "brd", "--require-certificate"}) == 1);
}
