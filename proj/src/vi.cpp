#include "msgame/vi.hpp"

#include <Eigen/LU>

#include <cmath>
#include <deque>
#include <stdexcept>

namespace msgame {

Vector pseudo_gradient(const FlatGame& f, const Vector& x) {
  if (x.size() != f.n) throw std::invalid_argument("pseudo_gradient: profile size mismatch");
  Vector F = 2.0 * f.c.cwiseProduct(x) - f.b - f.W * x;
  for (int i = 0; i < f.n; ++i)
    if (f.kappa[i] > 0.0) F[i] += f.kappa[i] * std::exp(f.kappa[i] * x[i]);
  for (const FlatGame::LevelView& v : f.lvl) {
    if (!v.gexp) continue;
    const int m = static_cast<int>(v.leafset.size());
    for (int k = 0; k < m; ++k) {
      double y = 0.0;
      for (int j : v.leafset[k]) y += x[j];
      const double rate = v.gkappa * std::exp(v.gkappa * y / static_cast<double>(v.leafset[k].size()));
      for (int j : v.leafset[k]) F[j] += rate;
    }
  }
  return F;
}

Vector PseudoGradient::operator()(const Vector& x) const {
  if (!game) throw std::invalid_argument("PseudoGradient: unbound");
  return pseudo_gradient(*game, x);
}

Matrix upsilon(const FlatGame& f) {
  Matrix u = -f.W.cwiseAbs();
  for (int i = 0; i < f.n; ++i) {
    double alpha = 2.0 * f.c[i];
    if (f.kappa[i] > 0.0) alpha += f.kappa[i] * f.kappa[i] * std::exp(f.kappa[i] * f.boxes[i].lo);
    u(i, i) = alpha;
  }
  for (const FlatGame::LevelView& v : f.lvl) {
    if (!v.gexp) continue;
    for (size_t k = 0; k < v.leafset.size(); ++k) {
      double ylo = 0.0;
      for (int j : v.leafset[k]) ylo += f.boxes[j].lo;
      const double s = static_cast<double>(v.leafset[k].size());
      const double floor = v.gkappa * v.gkappa / s * std::exp(v.gkappa * ylo / s);
      for (int j : v.leafset[k]) u(j, j) += floor;
    }
  }
  return u;
}

Matrix gamma_ratios(const Matrix& ups) {
  const int n = static_cast<int>(ups.rows());
  Matrix g = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (!(ups(i, i) > 0.0)) throw std::invalid_argument("gamma_ratios: nonpositive diagonal");
    for (int j = 0; j < n; ++j)
      if (j != i) g(i, j) = std::abs(ups(i, j)) / ups(i, i);
  }
  return g;
}

namespace {

// Tarjan over the nonzero pattern. The spectral radius of a nonnegative
// matrix is the maximum over its strongly connected blocks, and restricting
// first makes every block irreducible, where the shifted iteration below is
// guaranteed to converge.
std::vector<std::vector<int>> strong_components(const Matrix& b) {
  const int n = static_cast<int>(b.rows());
  std::vector<int> index(n, -1), low(n, 0), on(n, 0), stack;
  std::vector<std::vector<int>> comps;
  int counter = 0;
  // iterative DFS: frame = (node, next child to try)
  std::vector<std::pair<int, int>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      auto& [u, child] = frames.back();
      if (child == 0) {
        index[u] = low[u] = counter++;
        stack.push_back(u);
        on[u] = 1;
      }
      bool descended = false;
      while (child < n) {
        const int w = child++;
        if (b(u, w) == 0.0 || w == u) continue;
        if (index[w] < 0) {
          frames.push_back({w, 0});
          descended = true;
          break;
        }
        if (on[w]) low[u] = std::min(low[u], index[w]);
      }
      if (descended) continue;
      if (low[u] == index[u]) {
        comps.emplace_back();
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on[w] = 0;
          comps.back().push_back(w);
          if (w == u) break;
        }
      }
      const int done = u;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
    }
  }
  return comps;
}

}  // namespace

SpectralResult spectral_radius(const Matrix& a, double tol, int max_iter) {
  const int n = static_cast<int>(a.rows());
  SpectralResult r;
  r.converged = true;
  if (n == 0) return r;
  const Matrix b = a.cwiseAbs();
  // blockwise: a trivial block contributes only its diagonal entry
  for (const std::vector<int>& comp : strong_components(b)) {
    if (comp.size() == 1) {
      r.rho = std::max(r.rho, b(comp[0], comp[0]));
      continue;
    }
    const int m = static_cast<int>(comp.size());
    Matrix s(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) s(i, j) = b(comp[i], comp[j]);
    // shifted power iteration; the iterate stays strictly positive, so the
    // eigenvalue ratio bracket is valid every step and collapses geometrically
    Vector v = Vector::Constant(m, 1.0);
    bool block_done = false;
    for (int it = 1; it <= max_iter; ++it) {
      ++r.iterations;
      const Vector sv = s * v;
      const double hi = (sv.array() / v.array()).maxCoeff();
      const double lo = (sv.array() / v.array()).minCoeff();
      if (hi - lo <= tol) {
        r.rho = std::max(r.rho, 0.5 * (hi + lo));
        block_done = true;
        break;
      }
      const Vector w = sv + v;
      v = w / w.lpNorm<Eigen::Infinity>();
    }
    if (!block_done) {
      // exhausted: report the still-valid upper bound for this block
      const Vector sv = s * v;
      r.rho = std::max(r.rho, (sv.array() / v.array()).maxCoeff());
      r.converged = false;
    }
  }
  return r;
}

bool is_p_matrix(const Matrix& a, int cap) {
  const int n = static_cast<int>(a.rows());
  if (n != a.cols()) throw std::invalid_argument("is_p_matrix: not square");
  if (n > cap) throw std::invalid_argument("is_p_matrix: size exceeds enumeration cap");
  std::vector<int> idx;
  idx.reserve(n);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    idx.clear();
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    Matrix sub(k, k);
    for (int r2 = 0; r2 < k; ++r2)
      for (int c2 = 0; c2 < k; ++c2) sub(r2, c2) = a(idx[r2], idx[c2]);
    const double det = k == 1 ? sub(0, 0) : Eigen::PartialPivLU<Matrix>(sub).determinant();
    if (!(det > 0.0)) return false;
  }
  return true;
}

UniquenessCertificate certify_uniqueness(const FlatGame& f, int exact_cap) {
  UniquenessCertificate cert;
  cert.n = f.n;
  cert.ups = upsilon(f);
  cert.gamma = gamma_ratios(cert.ups);

  cert.sdd = true;
  std::vector<char> strict(f.n, 0);
  bool weak = true;
  for (int i = 0; i < f.n; ++i) {
    const double off = cert.ups.row(i).cwiseAbs().sum() - cert.ups(i, i);
    if (cert.ups(i, i) > off) strict[i] = 1;
    else cert.sdd = false;
    if (cert.ups(i, i) < off) weak = false;
  }
  cert.wcdd = weak;
  if (weak && !cert.sdd) {
    // chained dominance: every row must reach a strictly dominant one through
    // the nonzero pattern
    std::vector<char> good = strict;
    std::deque<int> q;
    for (int i = 0; i < f.n; ++i)
      if (good[i]) q.push_back(i);
    while (!q.empty()) {
      const int r = q.front();
      q.pop_front();
      for (int i = 0; i < f.n; ++i) {
        if (good[i] || cert.ups(i, r) == 0.0) continue;
        good[i] = 1;
        q.push_back(i);
      }
    }
    for (int i = 0; i < f.n; ++i)
      if (!good[i]) {
        cert.wcdd = false;
        break;
      }
  }

  const SpectralResult sr = spectral_radius(cert.gamma);
  cert.spectral_radius_gamma = sr.rho;
  cert.rho_is_bound = !sr.converged;
  cert.p_gamma = sr.rho < 1.0;
  if (f.n <= exact_cap) cert.p_upsilon_exact = is_p_matrix(cert.ups, exact_cap);
  return cert;
}

SviProblem svi_assemble(const MultiScaleGame& g) {
  if (g.n_levels != 2) throw std::invalid_argument("svi_assemble: requires a two-level game");
  const int N = g.n_leaves;
  const int M = g.level_count(2);
  SviProblem p;
  p.A.setZero(M, N);
  for (int k = 0; k < M; ++k)
    for (int i : g.levels[0].groups[k]) p.A(k, i) = -1.0;
  p.x_box = g.boxes;
  p.y_box.resize(M);
  for (int k = 0; k < M; ++k) {
    double lo = 0.0, hi = 0.0;
    for (int i : g.levels[0].groups[k]) {
      lo += g.boxes[i].lo;
      hi += g.boxes[i].hi;
    }
    p.y_box[k] = {lo, hi};
  }

  // leaf operator: within-group coupling only
  Matrix Win = Matrix::Zero(N, N);
  for (int k = 0; k < M; ++k) {
    const std::vector<int>& mem = g.levels[0].groups[k];
    const Matrix& w = g.levels[0].within[k];
    for (size_t s = 0; s < mem.size(); ++s)
      for (size_t t = 0; t < mem.size(); ++t) Win(mem[s], mem[t]) = w(s, t);
  }
  const Vector b1 = g.params.b;
  const Vector c = g.params.c;
  const Vector kap = g.params.kappa;
  p.f = [Win, b1, c, kap](const Vector& x) {
    Vector F = 2.0 * c.cwiseProduct(x) - b1 - Win * x;
    for (int i = 0; i < x.size(); ++i)
      if (kap[i] > 0.0) F[i] += kap[i] * std::exp(kap[i] * x[i]);
    return F;
  };

  Matrix V = g.top;
  Vector b2 = Vector::Zero(M);
  if (!g.params.level_benefit.empty() && g.params.level_benefit[0].size() == M)
    b2 = g.params.level_benefit[0];
  const bool gexp = !g.params.group_exp.empty() && g.params.group_exp[0];
  const double gk = gexp ? g.params.group_kappa[0] : 0.0;
  Vector scale(M);
  for (int k = 0; k < M; ++k) scale[k] = static_cast<double>(g.leafset[0][k].size());
  p.g = [V, b2, gexp, gk, scale](const Vector& y) {
    Vector G = -b2 - V * y;
    if (gexp)
      for (int k = 0; k < y.size(); ++k) G[k] += gk * std::exp(gk * y[k] / scale[k]);
    return G;
  };
  return p;
}

}  // namespace msgame
