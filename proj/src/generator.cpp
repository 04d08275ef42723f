#include "msgame/generator.hpp"

#include <random>
#include <stdexcept>

#include "msgame/flatten.hpp"

namespace msgame {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Stream {
  std::mt19937_64 eng;
  explicit Stream(std::uint64_t s) : eng(s) {}
  double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  bool coin(double p) { return u01() < p; }
};

Matrix random_adjacency(int n, double p, Stream& edges, Stream& weights) {
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (edges.coin(p)) m(i, j) = weights.u01();
    }
  return m;
}

}  // namespace

std::vector<Violation> validate(const GenSpec& spec) {
  std::vector<Violation> out;
  if (spec.branching.empty()) out.push_back({"branching", "branching must be non-empty"});
  for (int b : spec.branching)
    if (b < 1) out.push_back({"branching", "branching entries must be at least 1"});
  if (!(spec.p_exist >= 0.0 && spec.p_exist <= 1.0))
    out.push_back({"p_exist", "p_exist outside [0,1]"});
  if (!(spec.rho_target > 0.0 && spec.rho_target < 1.0))
    out.push_back({"rho_target", "rho_target outside (0,1)"});
  if (!(spec.kappa >= 0.0)) out.push_back({"kappa", "kappa must be nonnegative"});
  return out;
}

GenSpec::Family family_from_name(const std::string& s) {
  if (s == "linear") return GenSpec::Family::Linear;
  if (s == "nonlinear") return GenSpec::Family::Nonlinear;
  if (s == "mixed") return GenSpec::Family::Mixed;
  throw std::invalid_argument("unknown utility family: " + s);
}

const char* family_name(GenSpec::Family f) {
  switch (f) {
    case GenSpec::Family::Linear: return "linear";
    case GenSpec::Family::Nonlinear: return "nonlinear";
    case GenSpec::Family::Mixed: return "mixed";
  }
  return "?";
}

std::vector<int> parse_branching(const std::string& size) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos <= size.size()) {
    const size_t next = size.find('x', pos);
    const std::string tok = size.substr(pos, next == std::string::npos ? next : next - pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("bad size string: " + size);
    const int v = std::stoi(tok);
    if (v < 1) throw std::invalid_argument("bad size string: " + size);
    out.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string branching_string(const std::vector<int>& branching) {
  std::string s;
  for (size_t i = 0; i < branching.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(branching[i]);
  }
  return s;
}

MultiScaleGame generate(const GenSpec& spec) {
  {
    const auto errs = validate(spec);
    if (!errs.empty()) throw std::invalid_argument("generate: " + errs.front().what);
  }
  const int L = spec.levels();
  std::vector<int> count(L);  // agents per level
  count[L - 1] = spec.branching[L - 1];
  for (int l = L - 1; l >= 1; --l) count[l - 1] = count[l] * spec.branching[l - 1];
  const int N = count[0];

  std::uint64_t s = spec.seed;
  Stream edges(splitmix64(s)), weights(splitmix64(s)), coeffs(splitmix64(s));

  MultiScaleGame g;
  g.n_leaves = N;
  g.n_levels = L;
  for (int l = 2; l <= L; ++l) {
    HierarchyLevel hl;
    const int groups = count[l - 1];
    const int sz = spec.branching[l - 2];
    hl.groups.resize(groups);
    for (int k = 0; k < groups; ++k) {
      hl.groups[k].resize(sz);
      for (int r = 0; r < sz; ++r) hl.groups[k][r] = k * sz + r;
    }
    hl.within.resize(groups);
    for (int k = 0; k < groups; ++k)
      hl.within[k] = random_adjacency(sz, spec.p_exist, edges, weights);
    g.levels.push_back(std::move(hl));
  }
  g.top = random_adjacency(count[L - 1], spec.p_exist, edges, weights);

  g.params.a = Vector::Zero(N);
  g.params.b.resize(N);
  for (int i = 0; i < N; ++i) g.params.b[i] = coeffs.u01();
  g.params.c = Vector::Ones(N);
  const bool leaf_exp = spec.family == GenSpec::Family::Nonlinear;
  const bool group_exp = spec.family != GenSpec::Family::Linear;
  g.params.kappa = leaf_exp ? Vector::Constant(N, spec.kappa) : Vector::Zero(N);
  if (group_exp && L >= 2) {
    g.params.group_exp.assign(L - 1, 1);
    g.params.group_kappa.assign(L - 1, spec.kappa);
  }
  g.boxes.assign(N, ActionBox{});
  finalize(g);
  return g;
}

MultiScaleGame scale_to_target_rho(const MultiScaleGame& g, double rho_target,
                                   std::vector<int>* decoupled) {
  if (!(rho_target > 0.0 && rho_target < 1.0))
    throw std::invalid_argument("scale_to_target_rho: rho_target outside (0,1)");
  const FlatGame f = flatten(g);
  MultiScaleGame out = g;
  if (decoupled) decoupled->clear();
  for (int i = 0; i < f.n; ++i) {
    const double r = f.W.row(i).cwiseAbs().sum();
    if (r > 0.0) {
      out.params.c[i] = r / (2.0 * rho_target);
    } else {
      out.params.c[i] = 0.5;
      if (decoupled) decoupled->push_back(i);
    }
  }
  return out;
}

}  // namespace msgame
