#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "msgame/flatten.hpp"
#include "msgame/game.hpp"
#include "msgame/generator.hpp"
#include "msgame/io.hpp"
#include "msgame/vi.hpp"

using namespace msgame;

namespace {

GenSpec spec_of(std::vector<int> branching, double p, GenSpec::Family fam, std::uint64_t seed) {
  GenSpec s;
  s.branching = std::move(branching);
  s.p_exist = p;
  s.family = fam;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("zero edge probability produces a fully decoupled game") {
  MultiScaleGame g = generate(spec_of({4, 3}, 0.0, GenSpec::Family::Linear, 1));
  for (const Matrix& w : g.levels[0].within) CHECK(w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.top.cwiseAbs().maxCoeff() == 0.0);
  std::vector<int> dec;
  MultiScaleGame s = scale_to_target_rho(g, 0.75, &dec);
  CHECK(dec.size() == 12);
  for (int i = 0; i < s.n_leaves; ++i) CHECK(s.params.c[i] == 0.5);
  UniquenessCertificate cert = certify_uniqueness(flatten(s));
  CHECK(cert.spectral_radius_gamma == 0.0);
  CHECK(cert.sdd);
}

TEST_CASE("unit edge probability saturates every off diagonal") {
  MultiScaleGame g = generate(spec_of({2, 2}, 1.0, GenSpec::Family::Linear, 2));
  for (const Matrix& w : g.levels[0].within) {
    CHECK(w(0, 1) > 0.0);
    CHECK(w(1, 0) > 0.0);
    CHECK(w(0, 0) == 0.0);
    CHECK(w(1, 1) == 0.0);
  }
  CHECK(g.top(0, 1) > 0.0);
  CHECK(g.top(1, 0) > 0.0);
}

TEST_CASE("identical specs generate bit identical games") {
  GenSpec s = spec_of({5, 4}, 0.3, GenSpec::Family::Nonlinear, 77);
  std::string a = io::game_to_json(generate(s)).dump();
  std::string b = io::game_to_json(generate(s)).dump();
  CHECK(a == b);
  s.seed = 78;
  std::string c = io::game_to_json(generate(s)).dump();
  CHECK(a != c);
}

TEST_CASE("families control where the exponential terms appear") {
  MultiScaleGame lin = generate(spec_of({3, 2}, 0.5, GenSpec::Family::Linear, 5));
  CHECK(lin.params.kappa.cwiseAbs().maxCoeff() == 0.0);
  bool lin_gexp = !lin.params.group_exp.empty() && lin.params.group_exp[0];
  CHECK(!lin_gexp);

  MultiScaleGame non = generate(spec_of({3, 2}, 0.5, GenSpec::Family::Nonlinear, 5));
  for (int i = 0; i < non.n_leaves; ++i) CHECK(non.params.kappa[i] == 0.1);
  REQUIRE(non.params.group_exp.size() == 1);
  CHECK(non.params.group_exp[0] != 0);
  CHECK(non.params.group_kappa[0] == 0.1);

  MultiScaleGame mix = generate(spec_of({3, 2}, 0.5, GenSpec::Family::Mixed, 5));
  CHECK(mix.params.kappa.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(mix.params.group_exp.size() == 1);
  CHECK(mix.params.group_exp[0] != 0);
}

TEST_CASE("cost scaling pins the ratio matrix row sums") {
  MultiScaleGame g;
  g.n_leaves = 2;
  g.n_levels = 2;
  HierarchyLevel h;
  h.groups = {{0, 1}};
  Matrix w = Matrix::Zero(2, 2);
  w(0, 1) = 1.0;
  w(1, 0) = 1.0;
  h.within = {w};
  g.levels = {h};
  g.top = Matrix::Zero(1, 1);
  g.params.a = Vector::Zero(2);
  g.params.b = Vector::Constant(2, 1.0);
  g.params.c = Vector::Constant(2, 1.0);
  g.params.kappa = Vector::Zero(2);
  g.boxes.assign(2, ActionBox{0.0, 1e6});
  finalize(g);
  MultiScaleGame s = scale_to_target_rho(g, 0.5);
  CHECK(s.params.c[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.params.c[1] == doctest::Approx(1.0).epsilon(1e-15));
  Matrix gamma = gamma_ratios(upsilon(flatten(s)));
  CHECK(std::abs(gamma.row(0).sum() - 0.5) <= 1e-12);
  CHECK(std::abs(gamma.row(1).sum() - 0.5) <= 1e-12);
}

TEST_CASE("scaled random instances certify at the requested radius") {
  MultiScaleGame g = generate(spec_of({5, 4}, 0.3, GenSpec::Family::Linear, 17));
  MultiScaleGame s = scale_to_target_rho(g, 0.75);
  UniquenessCertificate cert = certify_uniqueness(flatten(s));
  CHECK(std::abs(cert.spectral_radius_gamma - 0.75) <= 1e-6);
  CHECK(cert.sdd);
  CHECK(cert.p_gamma);
}

TEST_CASE("generated hierarchies flatten into the block pattern") {
  MultiScaleGame g = generate(spec_of({3, 2}, 1.0, GenSpec::Family::Linear, 9));
  FlatGame f = flatten(g);
  for (int k = 0; k < 2; ++k) {
    const std::vector<int>& mem = g.levels[0].groups[k];
    const Matrix& w = g.levels[0].within[k];
    for (size_t s = 0; s < mem.size(); ++s)
      for (size_t t = 0; t < mem.size(); ++t) CHECK(f.W(mem[s], mem[t]) == w(s, t));
  }
  for (int i : g.levels[0].groups[0])
    for (int j : g.levels[0].groups[1]) {
      CHECK(f.W(i, j) == g.top(0, 1));
      CHECK(f.W(j, i) == g.top(1, 0));
    }
}

TEST_CASE("branching strings parse and print") {
  CHECK(parse_branching("30x30") == std::vector<int>{30, 30});
  CHECK(parse_branching("10x10x10") == std::vector<int>{10, 10, 10});
  CHECK(branching_string({6, 5}) == "6x5");
  CHECK_THROWS(parse_branching("abc"));
  CHECK_THROWS(parse_branching("30x"));
  CHECK_THROWS(parse_branching("0x4"));
}
