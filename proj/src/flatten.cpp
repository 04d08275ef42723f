#include "msgame/flatten.hpp"

#include <cmath>
#include <stdexcept>

namespace msgame {

FlatGame flatten(const MultiScaleGame& g) {
  if (g.parent.size() != static_cast<size_t>(std::max(0, g.n_levels - 1)))
    throw std::invalid_argument("flatten: game not finalized");
  FlatGame f;
  f.n = g.n_leaves;
  f.a = g.params.a;
  f.b = g.params.b;
  f.c = g.params.c;
  f.kappa = g.params.kappa;
  f.boxes = g.boxes;
  f.W.setZero(f.n, f.n);

  const int L = g.n_levels;
  if (L == 1) {
    f.W = g.top;
    return f;
  }

  f.lvl.resize(L - 1);
  for (int l = 2; l <= L; ++l) {
    FlatGame::LevelView& v = f.lvl[l - 2];
    const int m = g.level_count(l);
    v.leafset = g.leafset[l - 2];
    v.anc.resize(f.n);
    for (int k = 0; k < m; ++k)
      for (int leaf : v.leafset[k]) v.anc[leaf] = k;
    // assemble the full sibling adjacency among level-l agents
    v.coupling.setZero(m, m);
    Vector row;
    for (int j = 0; j < m; ++j) {
      g.coupling_row(l, j, row);
      v.coupling.row(j) = row.transpose();
    }
    v.benefit.setZero(m);
    if (l - 2 < static_cast<int>(g.params.level_benefit.size()) && g.params.level_benefit[l - 2].size() > 0)
      v.benefit = g.params.level_benefit[l - 2];
    if (l - 2 < static_cast<int>(g.params.group_exp.size()) && g.params.group_exp[l - 2]) {
      v.gexp = true;
      v.gkappa = g.params.group_kappa[l - 2];
    }
    for (int i = 0; i < f.n; ++i) f.b[i] += v.benefit[v.anc[i]];
  }

  // within-group edges at the leaf level
  const HierarchyLevel& h2 = g.levels[0];
  for (size_t k = 0; k < h2.groups.size(); ++k) {
    const std::vector<int>& mem = h2.groups[k];
    const Matrix& w = h2.within[k];
    for (size_t s = 0; s < mem.size(); ++s)
      for (size_t t = 0; t < mem.size(); ++t) f.W(mem[s], mem[t]) += w(s, t);
  }
  // every higher level spreads its sibling coupling over all leaf pairs
  for (int l = 2; l <= L; ++l) {
    const FlatGame::LevelView& v = f.lvl[l - 2];
    for (int i = 0; i < f.n; ++i) {
      const int ki = v.anc[i];
      for (int p = 0; p < v.coupling.cols(); ++p) {
        const double w = v.coupling(ki, p);
        if (w == 0.0) continue;
        for (int j : v.leafset[p]) f.W(i, j) += w;
      }
    }
  }
  return f;
}

double flat_utility(const FlatGame& f, const Vector& x, int i) {
  const double xi = x[i];
  double u = f.a[i] + f.b[i] * xi + xi * f.W.row(i).dot(x) - f.c[i] * xi * xi;
  if (f.kappa[i] > 0.0) u -= std::exp(f.kappa[i] * xi);
  for (const FlatGame::LevelView& v : f.lvl) {
    if (!v.gexp) continue;
    const int k = v.anc[i];
    double y = 0.0;
    for (int j : v.leafset[k]) y += x[j];
    const double s = static_cast<double>(v.leafset[k].size());
    u -= s * std::exp(v.gkappa * y / s);
  }
  return u;
}

double d_offset(const FlatGame& f, const Vector& x, int i) {
  double d = 0.0;
  for (const FlatGame::LevelView& v : f.lvl) {
    const int k = v.anc[i];
    const int m = static_cast<int>(v.leafset.size());
    Vector y(m);
    for (int p = 0; p < m; ++p) {
      double s = 0.0;
      for (int j : v.leafset[p]) s += x[j];
      y[p] = s;
    }
    d += (y[k] - x[i]) * (v.benefit[k] + v.coupling.row(k).dot(y));
  }
  return d;
}

}  // namespace msgame
