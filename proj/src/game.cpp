#include "msgame/game.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace msgame {

void MultiScaleGame::coupling_row(int l, int j, Vector& row) const {
  const int m = level_count(l);
  row.setZero(m);
  if (l == n_levels) {
    row = top.row(j).transpose();
    return;
  }
  const HierarchyLevel& up = levels[l - 1];  // level l+1 partition of level-l agents
  const int g = parent[l - 1][j];
  const std::vector<int>& members = up.groups[g];
  const Matrix& w = up.within[g];
  const int lj = local[l - 1][j];
  for (size_t t = 0; t < members.size(); ++t) row[members[t]] = w(lj, t);
}

void finalize(MultiScaleGame& g) {
  const int L = g.n_levels;
  g.parent.assign(std::max(0, L - 1), {});
  g.local.assign(std::max(0, L - 1), {});
  g.leafset.assign(std::max(0, L - 1), {});
  for (int l = 1; l < L; ++l) {
    const HierarchyLevel& h = g.levels[l - 1];
    const int below = g.level_count(l);
    g.parent[l - 1].assign(below, -1);
    g.local[l - 1].assign(below, -1);
    for (size_t k = 0; k < h.groups.size(); ++k) {
      for (size_t t = 0; t < h.groups[k].size(); ++t) {
        const int child = h.groups[k][t];
        if (child < 0 || child >= below) throw std::invalid_argument("finalize: group member index out of range");
        g.parent[l - 1][child] = static_cast<int>(k);
        g.local[l - 1][child] = static_cast<int>(t);
      }
    }
  }
  for (int l = 2; l <= L; ++l) {
    const HierarchyLevel& h = g.levels[l - 2];
    g.leafset[l - 2].assign(h.groups.size(), {});
    for (size_t k = 0; k < h.groups.size(); ++k) {
      std::vector<int>& leaves = g.leafset[l - 2][k];
      if (l == 2) {
        leaves = h.groups[k];
      } else {
        for (int child : h.groups[k]) {
          const std::vector<int>& sub = g.leafset[l - 3][child];
          leaves.insert(leaves.end(), sub.begin(), sub.end());
        }
      }
    }
  }
}

namespace {

void check_matrix(const Matrix& w, int expect, const std::string& where, std::vector<Violation>& out) {
  if (w.rows() != expect || w.cols() != expect) {
    out.push_back({where, "adjacency shape " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                              ", expected " + std::to_string(expect)});
    return;
  }
  for (int i = 0; i < w.rows(); ++i) {
    if (w(i, i) != 0.0) {
      out.push_back({where, "nonzero diagonal at " + std::to_string(i)});
      break;
    }
  }
  if (!w.allFinite()) out.push_back({where, "non-finite weight"});
}

}  // namespace

std::vector<Violation> validate(const MultiScaleGame& g) {
  std::vector<Violation> out;
  const int L = g.n_levels;
  const int N = g.n_leaves;
  if (L < 1) out.push_back({"levels", "level count " + std::to_string(L)});
  if (N < 1) out.push_back({"leaves", "leaf count " + std::to_string(N)});
  if (static_cast<int>(g.levels.size()) != std::max(0, L - 1)) {
    out.push_back({"levels", "hierarchy has " + std::to_string(g.levels.size()) + " entries for L=" + std::to_string(L)});
    return out;  // structure too broken to continue
  }

  for (int l = 2; l <= L; ++l) {
    const HierarchyLevel& h = g.levels[l - 2];
    const int below = l == 2 ? N : static_cast<int>(g.levels[l - 3].groups.size());
    const std::string where = "level " + std::to_string(l);
    std::vector<int> seen(below, 0);
    for (size_t k = 0; k < h.groups.size(); ++k) {
      if (h.groups[k].empty()) out.push_back({where, "group " + std::to_string(k) + " empty"});
      for (int c : h.groups[k]) {
        if (c < 0 || c >= below) {
          out.push_back({where, "member index " + std::to_string(c) + " out of range"});
        } else if (seen[c]++) {
          out.push_back({where, "partition not disjoint: member " + std::to_string(c) + " repeated"});
        }
      }
    }
    for (int c = 0; c < below; ++c)
      if (!seen[c]) {
        out.push_back({where, "partition not covering: member " + std::to_string(c) + " missing"});
        break;
      }
    if (h.within.size() != h.groups.size()) {
      out.push_back({where, "within-group matrix count mismatch"});
    } else {
      for (size_t k = 0; k < h.groups.size(); ++k)
        check_matrix(h.within[k], static_cast<int>(h.groups[k].size()),
                     where + " group " + std::to_string(k), out);
    }
  }

  const int topn = L == 1 ? N : static_cast<int>(g.levels[L - 2].groups.size());
  check_matrix(g.top, topn, "top level", out);

  auto need_size = [&](const Vector& v, const char* name) {
    if (v.size() != N) out.push_back({name, "size " + std::to_string(v.size()) + ", expected " + std::to_string(N)});
  };
  need_size(g.params.a, "a");
  need_size(g.params.b, "b");
  need_size(g.params.c, "c");
  need_size(g.params.kappa, "kappa");
  if (g.params.c.size() == N)
    for (int i = 0; i < N; ++i)
      if (!(g.params.c[i] > 0.0))
        out.push_back({"c", "nonpositive quadratic cost at agent " + std::to_string(i)});
  if (g.params.kappa.size() == N)
    for (int i = 0; i < N; ++i)
      if (g.params.kappa[i] < 0.0) out.push_back({"kappa", "negative rate at agent " + std::to_string(i)});

  if (static_cast<int>(g.boxes.size()) != N) {
    out.push_back({"boxes", "count " + std::to_string(g.boxes.size()) + ", expected " + std::to_string(N)});
  } else {
    for (int i = 0; i < N; ++i) {
      const ActionBox& bx = g.boxes[i];
      if (!(bx.lo < bx.hi) || !std::isfinite(bx.lo) || !std::isfinite(bx.hi))
        out.push_back({"boxes", "empty or non-finite box at agent " + std::to_string(i)});
    }
  }

  for (int l = 2; l <= L; ++l) {
    const int m = static_cast<int>(g.levels[l - 2].groups.size());
    if (l - 2 < static_cast<int>(g.params.level_benefit.size()) && g.params.level_benefit[l - 2].size() > 0 &&
        g.params.level_benefit[l - 2].size() != m)
      out.push_back({"level " + std::to_string(l), "benefit vector size mismatch"});
    if (l - 2 < static_cast<int>(g.params.group_exp.size()) && g.params.group_exp[l - 2] &&
        (l - 2 >= static_cast<int>(g.params.group_kappa.size()) || !(g.params.group_kappa[l - 2] > 0.0)))
      out.push_back({"level " + std::to_string(l), "group exponential enabled without positive rate"});
  }
  return out;
}

StrategyProfile make_profile(const MultiScaleGame& g, const Vector& x) {
  if (x.size() != g.n_leaves) throw std::invalid_argument("make_profile: x size mismatch");
  StrategyProfile p;
  p.x = x;
  refresh_aggregates(g, p);
  return p;
}

void refresh_aggregates(const MultiScaleGame& g, StrategyProfile& p) {
  p.agg.resize(std::max(0, g.n_levels - 1));
  for (int l = 2; l <= g.n_levels; ++l) {
    const HierarchyLevel& h = g.levels[l - 2];
    Vector& a = p.agg[l - 2];
    a.setZero(h.groups.size());
    const Vector& below = l == 2 ? p.x : p.agg[l - 3];
    for (size_t k = 0; k < h.groups.size(); ++k) {
      double s = 0.0;
      for (int c : h.groups[k]) s += below[c];
      a[k] = s;
    }
  }
}

double aggregate(const MultiScaleGame& g, const StrategyProfile& p, AgentRef ref) {
  if (ref.level < 2 || ref.level > g.n_levels) throw std::invalid_argument("aggregate: level out of range");
  const HierarchyLevel& h = g.levels[ref.level - 2];
  if (ref.index < 0 || ref.index >= static_cast<int>(h.groups.size()))
    throw std::invalid_argument("aggregate: index out of range");
  const Vector& below = ref.level == 2 ? p.x : p.agg[ref.level - 3];
  double s = 0.0;
  for (int c : h.groups[ref.index]) s += below[c];
  return s;
}

double level_component(const MultiScaleGame& g, const StrategyProfile& p, int l, int j) {
  Vector row;
  g.coupling_row(l, j, row);
  const Vector& vals = l == 1 ? p.x : p.agg[l - 2];
  const double v = vals[j];
  double u;
  if (l == 1) {
    u = g.params.a[j] + g.params.b[j] * v + v * row.dot(vals) - g.params.c[j] * v * v;
    if (g.params.kappa[j] > 0.0) u -= std::exp(g.params.kappa[j] * v);
  } else {
    double ben = 0.0;
    if (l - 2 < static_cast<int>(g.params.level_benefit.size()) && g.params.level_benefit[l - 2].size() > 0)
      ben = g.params.level_benefit[l - 2][j];
    u = ben * v + v * row.dot(vals);
    if (l - 2 < static_cast<int>(g.params.group_exp.size()) && g.params.group_exp[l - 2]) {
      const double s = g.leaves_under(l, j);
      u -= s * std::exp(g.params.group_kappa[l - 2] * v / s);
    }
  }
  return u;
}

double utility(const MultiScaleGame& g, const StrategyProfile& p, AgentRef ref) {
  if (ref.level >= 2) return level_component(g, p, ref.level, ref.index);
  if (ref.index < 0 || ref.index >= g.n_leaves) throw std::invalid_argument("utility: agent index out of range");
  double u = level_component(g, p, 1, ref.index);
  int anc = ref.index;
  for (int l = 2; l <= g.n_levels; ++l) {
    anc = g.parent[l - 2][anc];
    u += level_component(g, p, l, anc);
  }
  return u;
}

}  // namespace msgame
