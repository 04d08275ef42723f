#include "msgame/detect.hpp"
#include <cstdio>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace msgame {

namespace {

// Positions m outside {i,j} where row or column signatures of i and j differ.
void disagreement(const Matrix& W, int i, int j, double tol, std::vector<int>& out) {
  out.clear();
  const int n = static_cast<int>(W.rows());
  for (int m = 0; m < n; ++m) {
    if (m == i || m == j) continue;
    if (std::abs(W(i, m) - W(j, m)) > tol || std::abs(W(m, i) - W(m, j)) > tol) out.push_back(m);
  }
}

// True when every agent outside `members` sees all of `members` with one
// weight per direction.
bool is_module(const Matrix& W, const std::vector<char>& in, const std::vector<int>& members,
               double tol) {
  const int n = static_cast<int>(W.rows());
  const int ref = members.front();
  for (int m = 0; m < n; ++m) {
    if (in[m]) continue;
    for (int a : members) {
      if (std::abs(W(m, a) - W(m, ref)) > tol) return false;
      if (std::abs(W(a, m) - W(a, ref)) > tol) return false;
    }
  }
  return true;
}

// Smallest signature-closed set containing {i,j}: repeatedly absorbs every
// position that can tell two current members apart. Returns empty when the
// closure swallows the whole agent set or touches `blocked`.
std::vector<int> closure(const Matrix& W, int i, int j, double tol, const std::vector<char>& blocked) {
  const int n = static_cast<int>(W.rows());
  std::vector<char> in(n, 0);
  std::vector<int> members{i, j};
  in[i] = in[j] = 1;
  std::vector<std::pair<int, int>> todo{{i, j}};
  std::vector<int> d;
  while (!todo.empty()) {
    auto [a, b] = todo.back();
    todo.pop_back();
    disagreement(W, a, b, tol, d);
    for (int m : d) {
      if (in[m]) continue;
      if (blocked[m]) return {};
      for (int e : members) todo.emplace_back(e, m);
      in[m] = 1;
      members.push_back(m);
      if (static_cast<int>(members.size()) >= n) return {};
    }
  }
  std::sort(members.begin(), members.end());
  return members;
}

MultiScaleGame wrap_flat(const FlatGame& f) {
  MultiScaleGame g;
  g.n_leaves = f.n;
  g.n_levels = 1;
  g.top = f.W;
  g.params.a = f.a;
  g.params.b = f.b;
  g.params.c = f.c;
  g.params.kappa = f.kappa;
  g.boxes = f.boxes;
  finalize(g);
  return g;
}

MultiScaleGame rebuild(const FlatGame& f, const std::vector<std::vector<int>>& part) {
  MultiScaleGame g;
  g.n_leaves = f.n;
  g.n_levels = 2;
  g.levels.resize(1);
  HierarchyLevel& h = g.levels[0];
  h.groups = part;
  const int M = static_cast<int>(part.size());
  h.within.resize(M);
  for (int k = 0; k < M; ++k) {
    const std::vector<int>& mem = part[k];
    Matrix& w = h.within[k];
    w.setZero(mem.size(), mem.size());
    for (size_t s = 0; s < mem.size(); ++s)
      for (size_t t = 0; t < mem.size(); ++t)
        if (s != t) w(s, t) = f.W(mem[s], mem[t]);
  }
  g.top.setZero(M, M);
  for (int k = 0; k < M; ++k)
    for (int m = 0; m < M; ++m)
      if (k != m) g.top(k, m) = f.W(part[k].front(), part[m].front());
  g.params.a = f.a;
  g.params.b = f.b;
  g.params.c = f.c;
  g.params.kappa = f.kappa;
  g.boxes = f.boxes;
  finalize(g);
  return g;
}

}  // namespace

DetectResult detect_structure(const FlatGame& f, const std::vector<std::vector<int>>& partition,
                              double tol) {
  if (tol < 0) throw std::invalid_argument("detect_structure: negative tolerance");
  DetectResult r;
  std::vector<char> seen(f.n, 0);
  for (const std::vector<int>& grp : partition) {
    if (grp.empty()) {
      r.game = wrap_flat(f);
      r.reason = "empty group in candidate partition";
      return r;
    }
    for (int i : grp) {
      if (i < 0 || i >= f.n || seen[i]++) {
        r.game = wrap_flat(f);
        r.reason = "candidate partition is not a partition of the agents";
        return r;
      }
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != f.n) {
    r.game = wrap_flat(f);
    r.reason = "candidate partition does not cover all agents";
    return r;
  }

  const int M = static_cast<int>(partition.size());
  for (int k = 0; k < M; ++k) {
    for (int m = 0; m < M; ++m) {
      if (k == m) continue;
      const double ref = f.W(partition[k].front(), partition[m].front());
      for (int i : partition[k]) {
        for (int j : partition[m]) {
          if (std::abs(f.W(i, j) - ref) > tol) {
            r.game = wrap_flat(f);
            r.agent_i = i;
            r.agent_j = j;
            r.group_k = k;
            r.group_m = m;
            r.reason = "cross-group weight not constant: agents (" + std::to_string(i) + "," +
                       std::to_string(j) + ") of groups (" + std::to_string(k) + "," +
                       std::to_string(m) + ")";
            return r;
          }
        }
      }
    }
  }
  r.ok = true;
  r.game = rebuild(f, partition);
  return r;
}

DetectResult detect_structure(const FlatGame& f, double tol) {
  if (tol < 0) throw std::invalid_argument("detect_structure: negative tolerance");
  const int n = f.n;
  const Matrix& W = f.W;
  std::vector<char> covered(n, 0);
  std::vector<std::vector<int>> blocks;

  for (int i = 0; i < n; ++i) {
    if (covered[i]) continue;
    std::vector<int> best;
    for (int j = 0; j < n; ++j) {
      if (j == i || covered[j]) continue;
      std::vector<int> cand = closure(W, i, j, tol, covered);
      fprintf(stderr, "DBG i=%d j=%d cand_size=%zu\n", i, j, cand.size());
      if (cand.empty() || cand.size() <= best.size()) continue;
      std::vector<char> in(n, 0);
      for (int m : cand) in[m] = 1;
      fprintf(stderr, "DBG   is_module=%d\n", (int)is_module(W, in, cand, tol));
      if (is_module(W, in, cand, tol)) best = std::move(cand);
    }
    if (best.empty()) best = {i};
    for (int m : best) covered[m] = 1;
    blocks.push_back(std::move(best));
  }

  // coarsening pass: fuse blocks whose union still looks like one group
  bool merged = true;
  while (merged && blocks.size() > 2) {
    merged = false;
    for (size_t a = 0; a < blocks.size() && !merged; ++a) {
      for (size_t b = a + 1; b < blocks.size() && !merged; ++b) {
        std::vector<int> u = blocks[a];
        u.insert(u.end(), blocks[b].begin(), blocks[b].end());
        if (static_cast<int>(u.size()) >= n) continue;
        std::sort(u.begin(), u.end());
        std::vector<char> in(n, 0);
        for (int m : u) in[m] = 1;
        if (!is_module(W, in, u, tol)) continue;
        blocks[a] = std::move(u);
        blocks.erase(blocks.begin() + b);
        merged = true;
      }
    }
  }

  std::sort(blocks.begin(), blocks.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) { return a.front() < b.front(); });

  if (static_cast<int>(blocks.size()) == n && n > 1) {
    DetectResult r;
    r.game = wrap_flat(f);
    r.reason = "no two agents share an external weight signature";
    return r;
  }
  return detect_structure(f, blocks, tol);
}

}  // namespace msgame
