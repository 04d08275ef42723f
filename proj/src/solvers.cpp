#include "msgame/solvers.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace msgame {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double clamp_box(double v, const ActionBox& b) { return std::min(std::max(v, b.lo), b.hi); }

void check_options(const SolverOptions& o) {
  if (!(o.epsilon > 0.0)) throw std::invalid_argument("solver: epsilon must be positive");
  if (o.max_sweeps < 1) throw std::invalid_argument("solver: max_sweeps must be at least 1");
  if (o.lqp_mu && !(*o.lqp_mu > 0.0 && *o.lqp_mu < 5.0 / 9.0))
    throw std::invalid_argument("solver: lqp_mu outside (0, 5/9)");
  for (double h : o.penalty)
    if (!(h > 0.0)) throw std::invalid_argument("solver: penalty weights must be positive");
}

Vector initial_profile(const SolverOptions& o, const std::vector<ActionBox>& boxes) {
  const int n = static_cast<int>(boxes.size());
  Vector x;
  if (o.x0) {
    if (o.x0->size() != n) throw std::invalid_argument("solver: x0 size mismatch");
    x = *o.x0;
  } else {
    x.setZero(n);
  }
  for (int i = 0; i < n; ++i) x[i] = clamp_box(x[i], boxes[i]);
  return x;
}

// Precomputed sparse views of the hierarchy: within rows at the leaf level and
// sibling rows at every higher level, with the per-level exponential terms.
struct LevelInfo {
  int count = 0;
  std::vector<std::vector<std::pair<int, double>>> row;  // sibling adjacency, one row per agent
  Vector ben;
  bool gexp = false;
  double gk = 0.0;
  std::vector<double> leaves;  // leaf count per agent
  std::vector<int> anc;        // per leaf: its ancestor at this level
  std::vector<char> consumed;  // some best response reads this aggregate
  const std::vector<std::vector<int>>* children = nullptr;
};

struct Compact {
  const MultiScaleGame* g = nullptr;
  int N = 0, L = 1;
  std::vector<std::vector<std::pair<int, double>>> wrow;  // leaf rows, global indices
  std::vector<LevelInfo> lv;                              // [l-2]
  Vector beff;                                            // leaf b plus every ancestor benefit

  explicit Compact(const MultiScaleGame& game) : g(&game), N(game.n_leaves), L(game.n_levels) {
    if (g->parent.size() != static_cast<size_t>(std::max(0, L - 1)))
      throw std::invalid_argument("solver: game not finalized");
    wrow.resize(N);
    Vector row;
    for (int i = 0; i < N; ++i) {
      g->coupling_row(1, i, row);
      for (int j = 0; j < row.size(); ++j)
        if (row[j] != 0.0) wrow[i].emplace_back(j, row[j]);
    }
    beff = g->params.b;
    lv.resize(std::max(0, L - 1));
    for (int l = 2; l <= L; ++l) {
      LevelInfo& v = lv[l - 2];
      v.count = g->level_count(l);
      v.row.resize(v.count);
      for (int k = 0; k < v.count; ++k) {
        g->coupling_row(l, k, row);
        for (int p = 0; p < row.size(); ++p)
          if (row[p] != 0.0) v.row[k].emplace_back(p, row[p]);
      }
      v.ben.setZero(v.count);
      if (l - 2 < static_cast<int>(g->params.level_benefit.size()) &&
          g->params.level_benefit[l - 2].size() == v.count)
        v.ben = g->params.level_benefit[l - 2];
      if (l - 2 < static_cast<int>(g->params.group_exp.size()) && g->params.group_exp[l - 2]) {
        v.gexp = true;
        v.gk = g->params.group_kappa[l - 2];
      }
      v.leaves.resize(v.count);
      for (int k = 0; k < v.count; ++k) v.leaves[k] = static_cast<double>(g->leafset[l - 2][k].size());
      v.anc.resize(N);
      for (int k = 0; k < v.count; ++k)
        for (int leaf : g->leafset[l - 2][k]) v.anc[leaf] = k;
      v.consumed.assign(v.count, v.gexp ? 1 : 0);
      for (int k = 0; k < v.count; ++k)
        for (const auto& [p, w] : v.row[k])
          if (w != 0.0) v.consumed[p] = 1;
      v.children = &g->levels[l - 2].groups;
      for (int i = 0; i < N; ++i) beff[i] += v.ben[v.anc[i]];
    }
  }

  bool any_gexp() const {
    for (const LevelInfo& v : lv)
      if (v.gexp) return true;
    return false;
  }
  std::int64_t aggregate_charge(int lo_level, int hi_level) const {
    std::int64_t c = 0;
    for (int l = lo_level; l <= hi_level; ++l) {
      const LevelInfo& v = lv[l - 2];
      for (int k = 0; k < v.count; ++k)
        if (v.consumed[k]) c += static_cast<std::int64_t>((*v.children)[k].size()) - 1;
    }
    return c;
  }
};

// proximal term: d/da [ (a-p)^2/2 + mu (a p - p^2 ln a) ]
double lqp_grad(double a, double p, double mu) { return (a - p) + mu * (p - p * p / a); }
double lqp_curv(double a, double p, double mu) { return 1.0 + mu * p * p / (a * a); }

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::BRD: return "brd";
    case Algorithm::MSBRD: return "ms-brd";
    case Algorithm::SHBRD: return "sh-brd";
    case Algorithm::HHBRD: return "hh-brd";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& s) {
  if (s == "brd") return Algorithm::BRD;
  if (s == "ms-brd" || s == "msbrd") return Algorithm::MSBRD;
  if (s == "sh-brd" || s == "shbrd") return Algorithm::SHBRD;
  if (s == "hh-brd" || s == "hhbrd") return Algorithm::HHBRD;
  throw std::invalid_argument("unknown algorithm: " + s);
}

double best_response_linear(double b, double c, double coupling_sum, const ActionBox& box,
                            bool* clamped) {
  if (!(c > 0.0)) throw std::invalid_argument("best_response_linear: c must be positive");
  const double raw = (b + coupling_sum) / (2.0 * c);
  const double v = clamp_box(raw, box);
  if (clamped) *clamped = v != raw;
  return v;
}

ScalarResult best_response_scalar(const std::function<double(double)>& grad,
                                  const std::function<double(double)>& dgrad, const ActionBox& box,
                                  double tol, double start) {
  ScalarResult r;
  double lo = box.lo, hi = box.hi;
  double glo = grad(lo);
  r.iterations = 1;
  if (glo <= 0.0) {  // utility already decreasing at the lower edge
    r.x = lo;
    r.at_boundary = true;
    return r;
  }
  double ghi = grad(hi);
  ++r.iterations;
  if (ghi >= 0.0) {
    r.x = hi;
    r.at_boundary = true;
    return r;
  }
  // bracket invariant from here: grad(lo) > 0 > grad(hi)
  double x = std::isfinite(start) ? std::min(std::max(start, lo), hi) : 0.5 * (lo + hi);
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  double dxold = hi - lo;
  double xprev = lo, gprev = glo;
  for (int it = 0; it < 200; ++it) {
    const double gx = grad(x);
    ++r.iterations;
    if (std::abs(gx) <= tol) break;
    if (gx > 0.0) lo = x;
    else hi = x;
    const double d = dgrad ? dgrad(x) : (x == xprev ? 0.0 : (gx - gprev) / (x - xprev));
    xprev = x;
    gprev = gx;
    // accept the Newton step only while it lands inside the bracket and keeps
    // at least bisection-rate progress; a gradient dominated by a steep
    // exponential otherwise walks in O(1/kappa) increments forever
    double next = std::numeric_limits<double>::infinity();
    if (std::isfinite(d) && d < 0.0) next = x - gx / d;
    if (next > lo && next < hi && 2.0 * std::abs(gx) <= dxold * std::abs(d)) {
      dxold = std::abs(next - x);
    } else {
      next = 0.5 * (lo + hi);
      dxold = 0.5 * (hi - lo);
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      x = 0.5 * (lo + hi);
      break;
    }
    x = next;
  }
  r.x = x;
  return r;
}

ScalarResult best_response_scalar(const std::function<double(double)>& grad, const ActionBox& box,
                                  double tol, double start) {
  return best_response_scalar(grad, nullptr, box, tol, start);
}

// ---------------------------------------------------------------------------
// BRD on the flat game

SolverReport solve_brd(const FlatGame& f, const SolverOptions& o) {
  check_options(o);
  SolverReport rep;
  rep.algorithm = Algorithm::BRD;
  const int N = f.n;
  Vector x = initial_profile(o, f.boxes);
  const bool gs = o.mode == SweepMode::GaussSeidel;
  const bool nonlinear = f.has_exp();

  std::vector<int> nnz(N);
  for (int i = 0; i < N; ++i) {
    int c = 0;
    for (int j = 0; j < N; ++j)
      if (f.W(i, j) != 0.0) ++c;
    nnz[i] = c;
  }
  // running group sums for the retained exponential terms
  std::vector<Vector> ysum(f.lvl.size());
  auto refresh_ysum = [&](const Vector& from) {
    for (size_t v = 0; v < f.lvl.size(); ++v) {
      const auto& lw = f.lvl[v];
      ysum[v].setZero(lw.leafset.size());
      for (size_t k = 0; k < lw.leafset.size(); ++k)
        for (int j : lw.leafset[k]) ysum[v][k] += from[j];
    }
  };
  refresh_ysum(x);
  std::int64_t exp_charge = 0;
  for (const auto& lw : f.lvl)
    if (lw.gexp)
      for (const auto& ls : lw.leafset) exp_charge += static_cast<std::int64_t>(ls.size()) - 1;

  const Clock::time_point t0 = Clock::now();
  Vector xn = x;
  for (int sweep = 1; sweep <= o.max_sweeps; ++sweep) {
    const Vector& rd = gs ? xn : x;  // in GS mode xn is updated in place
    if (gs) xn = x;
    double diff = 0.0;
    for (int i = 0; i < N; ++i) {
      const double coupling = f.W.row(i).dot(rd);
      double v;
      if (!nonlinear) {
        bool cl = false;
        v = best_response_linear(f.b[i], f.c[i], coupling, f.boxes[i], &cl);
        rep.boundary_hits += cl;
        rep.flops += 2 * nnz[i] + 2;
      } else {
        const double K = f.b[i] + coupling;
        const double ci = f.c[i], ki = f.kappa[i];
        std::vector<std::pair<double, double>> rests;  // (rest, scale) per enabled view
        std::vector<double> gks;
        for (size_t vi = 0; vi < f.lvl.size(); ++vi) {
          if (!f.lvl[vi].gexp) continue;
          const int k = f.lvl[vi].anc[i];
          rests.emplace_back(ysum[vi][k] - rd[i], static_cast<double>(f.lvl[vi].leafset[k].size()));
          gks.push_back(f.lvl[vi].gkappa);
        }
        auto gr = [&](double xi) {
          double s = K - 2.0 * ci * xi;
          if (ki > 0.0) s -= ki * std::exp(ki * xi);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * std::exp(gks[t] * (rests[t].first + xi) / rests[t].second);
          return s;
        };
        auto dgr = [&](double xi) {
          double s = -2.0 * ci;
          if (ki > 0.0) s -= ki * ki * std::exp(ki * xi);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * gks[t] / rests[t].second *
                 std::exp(gks[t] * (rests[t].first + xi) / rests[t].second);
          return s;
        };
        const ScalarResult sr = best_response_scalar(gr, dgr, f.boxes[i], o.scalar_tol, rd[i]);
        v = sr.x;
        rep.boundary_hits += sr.at_boundary;
        rep.flops += static_cast<std::int64_t>(2 * nnz[i] + 2 + 4) * sr.iterations;
      }
      const double d = v - rd[i];
      diff = std::max(diff, std::abs(d));
      if (gs) {
        xn[i] = v;
        for (size_t vi = 0; vi < f.lvl.size(); ++vi) ysum[vi][f.lvl[vi].anc[i]] += d;
      } else {
        xn[i] = v;
      }
    }
    x = xn;
    refresh_ysum(x);
    rep.flops += exp_charge;
    rep.sweeps = sweep;
    rep.residual_inf = diff;
    if (o.record_norms) rep.trajectory_norms.push_back(diff);
    if (o.observer) o.observer(sweep, x);
    if (diff < o.epsilon) {
      rep.converged = true;
      break;
    }
    if (o.deadline_ms && elapsed_ms(t0) > *o.deadline_ms) {
      rep.timed_out = true;
      break;
    }
  }
  rep.x = x;
  return rep;
}

// ---------------------------------------------------------------------------
// MS-BRD: identical best responses, coupling read from cached aggregates

SolverReport solve_ms_brd(const MultiScaleGame& g, const SolverOptions& o) {
  check_options(o);
  Compact c(g);
  SolverReport rep;
  rep.algorithm = Algorithm::MSBRD;
  const int N = c.N;
  Vector x = initial_profile(o, g.boxes);
  const bool gs = o.mode == SweepMode::GaussSeidel;
  const bool nonlinear = g.params.kappa.maxCoeff() > 0.0 || c.any_gexp();

  StrategyProfile prof = make_profile(g, x);
  std::vector<Vector>& agg = prof.agg;
  const std::int64_t agg_charge = c.aggregate_charge(2, c.L);

  const Clock::time_point t0 = Clock::now();
  Vector xn = x;
  std::vector<Vector> agg_rd;
  for (int sweep = 1; sweep <= o.max_sweeps; ++sweep) {
    double diff = 0.0;
    if (!gs) agg_rd = agg;
    const std::vector<Vector>& ag = gs ? agg : agg_rd;
    const Vector& rd = gs ? xn : x;
    if (gs) xn = x;
    for (int i = 0; i < N; ++i) {
      double coupling = 0.0;
      int d = 0;
      for (const auto& [j, w] : c.wrow[i]) coupling += w * rd[j];
      d += static_cast<int>(c.wrow[i].size());
      for (int l = 2; l <= c.L; ++l) {
        const LevelInfo& v = c.lv[l - 2];
        const auto& r2 = v.row[v.anc[i]];
        for (const auto& [p, w] : r2) coupling += w * ag[l - 2][p];
        d += static_cast<int>(r2.size());
      }
      double v;
      if (!nonlinear) {
        bool cl = false;
        v = best_response_linear(c.beff[i], g.params.c[i], coupling, g.boxes[i], &cl);
        rep.boundary_hits += cl;
        rep.flops += 2 * d + 2;
      } else {
        const double K = c.beff[i] + coupling;
        const double ci = g.params.c[i], ki = g.params.kappa[i];
        std::vector<std::pair<double, double>> rests;
        std::vector<double> gks;
        for (int l = 2; l <= c.L; ++l) {
          const LevelInfo& lw = c.lv[l - 2];
          if (!lw.gexp) continue;
          const int k = lw.anc[i];
          rests.emplace_back(ag[l - 2][k] - rd[i], lw.leaves[k]);
          gks.push_back(lw.gk);
        }
        auto gr = [&](double xi) {
          double s = K - 2.0 * ci * xi;
          if (ki > 0.0) s -= ki * std::exp(ki * xi);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * std::exp(gks[t] * (rests[t].first + xi) / rests[t].second);
          return s;
        };
        auto dgr = [&](double xi) {
          double s = -2.0 * ci;
          if (ki > 0.0) s -= ki * ki * std::exp(ki * xi);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * gks[t] / rests[t].second *
                 std::exp(gks[t] * (rests[t].first + xi) / rests[t].second);
          return s;
        };
        const ScalarResult sr = best_response_scalar(gr, dgr, g.boxes[i], o.scalar_tol, rd[i]);
        v = sr.x;
        rep.boundary_hits += sr.at_boundary;
        rep.flops += static_cast<std::int64_t>(2 * d + 2 + 4) * sr.iterations;
      }
      const double dv = v - rd[i];
      diff = std::max(diff, std::abs(dv));
      xn[i] = v;
      if (gs) {
        int a = i;
        for (int l = 2; l <= c.L; ++l) {
          a = g.parent[l - 2][a];
          agg[l - 2][a] += dv;
        }
      }
    }
    x = xn;
    prof.x = x;
    refresh_aggregates(g, prof);
    rep.flops += agg_charge;
    rep.sweeps = sweep;
    rep.residual_inf = diff;
    if (o.record_norms) rep.trajectory_norms.push_back(diff);
    if (o.observer) o.observer(sweep, x);
    if (diff < o.epsilon) {
      rep.converged = true;
      break;
    }
    if (o.deadline_ms && elapsed_ms(t0) > *o.deadline_ms) {
      rep.timed_out = true;
      break;
    }
  }
  rep.x = x;
  rep.agg = prof.agg;
  return rep;
}

// ---------------------------------------------------------------------------
// Penalty defaults

namespace {

double level_default_penalty(const LevelInfo& v, double coupling_rho, bool deep_lower) {
  double mean_leaves = 0.0;
  for (double s : v.leaves) mean_leaves += s;
  mean_leaves /= std::max<size_t>(1, v.leaves.size());
  double h = 6.0 / std::max(1.0, mean_leaves);
  // The replicated stage relaxes a system whose only curvature is 2h, against
  // sibling coupling of spectral radius rho. With leaves alone below the split
  // the measured divergence edge stays under 0.57*rho (slightly above the
  // rho/2 linear bound once the multiplier loop is in play); a multi-level
  // lower block feeds its aggregate response into the dual loop and pushes the
  // edge toward 0.8*rho. Keep a clear margin above the applicable edge; larger
  // h only slows the dual loop, and h >= 2 destabilizes the multiplier update
  // itself.
  h = std::max(h, (deep_lower ? 0.9 : 0.62) * coupling_rho + 0.05);
  return std::min(h, 1.95);
}

double rows_spectral(const std::vector<std::vector<std::pair<int, double>>>& rows, int n) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (const auto& [j, w] : rows[i]) a(i, j) = std::abs(w);
  // power iteration, same scheme as the certificate machinery but local
  Vector v = Vector::Ones(n);
  double est = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector bv = a * v;
    const double e2 = bv.lpNorm<Eigen::Infinity>();
    Vector w = bv + v;
    const double nw = w.lpNorm<Eigen::Infinity>();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (std::abs(e2 - est) < 1e-9) return e2;
    est = e2;
  }
  return est;
}

}  // namespace

std::vector<double> default_penalties(const MultiScaleGame& g) {
  Compact c(g);
  std::vector<double> h;
  for (int l = 2; l <= c.L; ++l) {
    const LevelInfo& v = c.lv[l - 2];
    h.push_back(level_default_penalty(v, rows_spectral(v.row, v.count), false));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Two meta-level splitting engine. Levels below q form one block (the leaves
// keep their real utilities plus the penalty tying their super-group sums to
// the replicated level-q actions); levels q and above form the other, driven
// by the replicated actions themselves.

namespace {

SolverReport two_block(const MultiScaleGame& g, const SolverOptions& o, int q, Algorithm tag) {
  Compact c(g);
  const int L = c.L;
  if (q < 2 || q > L) throw std::invalid_argument("solver: split level out of range");
  SolverReport rep;
  rep.algorithm = tag;
  const int N = c.N;
  const LevelInfo& vq = c.lv[q - 2];
  const int M = vq.count;
  const bool gs = o.mode == SweepMode::GaussSeidel;

  double h;
  if (!o.penalty.empty()) {
    if (static_cast<int>(o.penalty.size()) != L - 1)
      throw std::invalid_argument("solver: penalty vector must have one entry per level 2..L");
    h = o.penalty[q - 2];
  } else {
    // coupling seen by the replicated block: level-q siblings plus every
    // higher level spread down to level q
    Matrix wq = Matrix::Zero(M, M);
    for (int j = 0; j < M; ++j)
      for (const auto& [p, w] : vq.row[j]) wq(j, p) += std::abs(w);
    for (int l = q + 1; l <= L; ++l) {
      const LevelInfo& vu = c.lv[l - 2];
      for (int j = 0; j < M; ++j) {
        const int kj = vu.anc[g.leafset[q - 2][j].front()];
        for (const auto& [p, w] : vu.row[kj]) {
          for (int j2 = 0; j2 < M; ++j2)
            if (vu.anc[g.leafset[q - 2][j2].front()] == p) wq(j, j2) += std::abs(w);
        }
      }
    }
    std::vector<std::vector<std::pair<int, double>>> rows(M);
    for (int j = 0; j < M; ++j)
      for (int p = 0; p < M; ++p)
        if (wq(j, p) != 0.0) rows[j].emplace_back(p, wq(j, p));
    h = level_default_penalty(vq, rows_spectral(rows, M), q > 2);
  }

  // benefit seen by a leaf from the lower block only
  Vector blow = g.params.b;
  for (int l = 2; l < q; ++l) {
    const LevelInfo& v = c.lv[l - 2];
    for (int i = 0; i < N; ++i) blow[i] += v.ben[v.anc[i]];
  }
  // benefit folded onto each replicated level-q agent from q and above
  Vector bup = vq.ben;
  std::vector<std::vector<int>> up_anc(L - q);  // level-q agent -> ancestor at level l > q
  for (int l = q + 1; l <= L; ++l) {
    const LevelInfo& vu = c.lv[l - 2];
    up_anc[l - q - 1].resize(M);
    for (int j = 0; j < M; ++j) {
      const int a = vu.anc[g.leafset[q - 2][j].front()];
      up_anc[l - q - 1][j] = a;
      bup[j] += vu.ben[a];
    }
  }
  std::vector<ActionBox> ybox(M);
  for (int j = 0; j < M; ++j) {
    double lo = 0.0, hi = 0.0;
    for (int leaf : g.leafset[q - 2][j]) {
      lo += g.boxes[leaf].lo;
      hi += g.boxes[leaf].hi;
    }
    ybox[j] = {lo, hi};
  }

  Vector x = initial_profile(o, g.boxes);
  Vector Z(M), S1q(M);
  auto refresh_S1q = [&](const Vector& from) {
    for (int j = 0; j < M; ++j) {
      double s = 0.0;
      for (int leaf : g.leafset[q - 2][j]) s += from[leaf];
      S1q[j] = s;
    }
  };
  refresh_S1q(x);
  Z = S1q;
  Vector lam = Vector::Zero(M);

  // intermediate aggregates (from x) and upper aggregates (from Z)
  std::vector<Vector> mid(std::max(0, q - 2));
  auto refresh_mid = [&](const Vector& from) {
    for (int l = 2; l < q; ++l) {
      const LevelInfo& v = c.lv[l - 2];
      mid[l - 2].setZero(v.count);
      for (int k = 0; k < v.count; ++k)
        for (int leaf : g.leafset[l - 2][k]) mid[l - 2][k] += from[leaf];
    }
  };
  refresh_mid(x);
  std::vector<Vector> up(L - q);
  auto refresh_up = [&](const Vector& from) {
    for (int l = q + 1; l <= L; ++l) {
      Vector& u = up[l - q - 1];
      u.setZero(c.lv[l - 2].count);
      for (int j = 0; j < M; ++j) u[up_anc[l - q - 1][j]] += from[j];
    }
  };
  refresh_up(Z);

  const double mu = o.lqp_mu.value_or(0.0);
  const bool lqp = o.lqp_mu.has_value();
  std::vector<char> lqp_off_x(N, 0), lqp_off_z(M, 0);
  Vector xprev = x, Zprev = Z;

  bool leaf_has_exp = g.params.kappa.maxCoeff() > 0.0;
  for (int l = 2; l < q; ++l) leaf_has_exp = leaf_has_exp || c.lv[l - 2].gexp;
  bool rep_has_exp = vq.gexp;
  for (int l = q + 1; l <= L; ++l) rep_has_exp = rep_has_exp || c.lv[l - 2].gexp;

  std::int64_t agg_charge = c.aggregate_charge(2, q - 1);
  for (int j = 0; j < M; ++j) agg_charge += static_cast<std::int64_t>(vq.leaves[j]) - 1;
  {  // upper aggregates rebuilt from the replicated actions
    for (int l = q + 1; l <= L; ++l) {
      const LevelInfo& vu = c.lv[l - 2];
      for (int k = 0; k < vu.count; ++k)
        if (vu.consumed[k]) agg_charge += static_cast<std::int64_t>((*vu.children)[k].size()) - 1;
    }
  }

  const Clock::time_point t0 = Clock::now();
  Vector xn = x, Zn = Z;
  for (int sweep = 1; sweep <= o.max_sweeps; ++sweep) {
    double diff = 0.0;
    // --- lower block ---
    std::vector<Vector> mid_rd;
    Vector S1q_rd;
    if (!gs) {
      mid_rd = mid;
      S1q_rd = S1q;
    }
    const std::vector<Vector>& mg = gs ? mid : mid_rd;
    const Vector& sq = gs ? S1q : S1q_rd;
    const Vector& rd = gs ? xn : x;
    if (gs) xn = x;
    for (int i = 0; i < N; ++i) {
      double coupling = 0.0;
      int d = 2;  // super-group rest plus the penalty anchor
      for (const auto& [j, w] : c.wrow[i]) coupling += w * rd[j];
      d += static_cast<int>(c.wrow[i].size());
      for (int l = 2; l < q; ++l) {
        const LevelInfo& v = c.lv[l - 2];
        const auto& r2 = v.row[v.anc[i]];
        for (const auto& [p, w] : r2) coupling += w * mg[l - 2][p];
        d += static_cast<int>(r2.size());
      }
      const int kq = vq.anc[i];
      const double srest = sq[kq] - rd[i];
      const double anchor = Z[kq] + lam[kq];
      double v;
      const bool prox = lqp && !lqp_off_x[i];
      if (!leaf_has_exp && !prox) {
        bool cl = false;
        v = best_response_linear(blow[i] + 2.0 * h * (anchor - srest), g.params.c[i] + h, coupling,
                                 g.boxes[i], &cl);
        rep.boundary_hits += cl;
        rep.flops += 2 * d + 2;
      } else {
        const double K = blow[i] + coupling;
        const double ci = g.params.c[i], ki = g.params.kappa[i];
        std::vector<std::pair<double, double>> rests;
        std::vector<double> gks;
        for (int l = 2; l < q; ++l) {
          const LevelInfo& lw = c.lv[l - 2];
          if (!lw.gexp) continue;
          const int k = lw.anc[i];
          rests.emplace_back(mg[l - 2][k] - rd[i], lw.leaves[k]);
          gks.push_back(lw.gk);
        }
        const double p0 = xprev[i];
        auto gr = [&](double xi) {
          double s = K - 2.0 * ci * xi - 2.0 * h * (xi + srest - anchor);
          if (ki > 0.0) s -= ki * std::exp(ki * xi);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * std::exp(gks[t] * (rests[t].first + xi) / rests[t].second);
          if (prox) s -= lqp_grad(xi, p0, mu);
          return s;
        };
        auto dgr = [&](double xi) {
          double s = -2.0 * ci - 2.0 * h;
          if (ki > 0.0) s -= ki * ki * std::exp(ki * xi);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * gks[t] / rests[t].second *
                 std::exp(gks[t] * (rests[t].first + xi) / rests[t].second);
          if (prox) s -= lqp_curv(xi, p0, mu);
          return s;
        };
        ActionBox bx = g.boxes[i];
        if (prox) bx.lo = std::max(bx.lo, 1e-12);
        const ScalarResult sr = best_response_scalar(gr, dgr, bx, o.scalar_tol, rd[i]);
        v = sr.x;
        rep.boundary_hits += sr.at_boundary;
        rep.flops += static_cast<std::int64_t>(2 * d + 2 + 4) * sr.iterations;
      }
      const double dv = v - rd[i];
      diff = std::max(diff, std::abs(dv));
      xn[i] = v;
      if (gs) {
        S1q[kq] += dv;
        int a = i;
        for (int l = 2; l < q; ++l) {
          a = g.parent[l - 2][a];
          mid[l - 2][a] += dv;
        }
      }
    }
    x = xn;
    refresh_S1q(x);
    refresh_mid(x);

    // --- replicated block ---
    std::vector<Vector> up_rd;
    if (!gs) up_rd = up;
    const std::vector<Vector>& ug = gs ? up : up_rd;
    const Vector& zrd = gs ? Zn : Z;
    if (gs) Zn = Z;
    for (int j = 0; j < M; ++j) {
      double coupling = 0.0;
      int d = 2;  // aggregate anchor and multiplier
      for (const auto& [p, w] : vq.row[j]) coupling += w * zrd[p];
      d += static_cast<int>(vq.row[j].size());
      for (int l = q + 1; l <= L; ++l) {
        const LevelInfo& vu = c.lv[l - 2];
        const auto& r2 = vu.row[up_anc[l - q - 1][j]];
        for (const auto& [p, w] : r2) coupling += w * ug[l - q - 1][p];
        d += static_cast<int>(r2.size());
      }
      double v;
      const bool prox = lqp && !lqp_off_z[j];
      if (!rep_has_exp && !prox) {
        bool cl = false;
        v = best_response_linear(bup[j] + 2.0 * h * (S1q[j] - lam[j]), h, coupling, ybox[j], &cl);
        rep.boundary_hits += cl;
        rep.flops += 2 * d + 2;
      } else {
        const double K = bup[j] + coupling;
        std::vector<std::pair<double, double>> rests;
        std::vector<double> gks;
        for (int l = q + 1; l <= L; ++l) {
          const LevelInfo& lw = c.lv[l - 2];
          if (!lw.gexp) continue;
          const int k = up_anc[l - q - 1][j];
          rests.emplace_back(ug[l - q - 1][k] - zrd[j], lw.leaves[k]);
          gks.push_back(lw.gk);
        }
        const double sj = vq.leaves[j];
        const double gkq = vq.gexp ? vq.gk : 0.0;
        const double p0 = Zprev[j];
        auto gr = [&](double z) {
          double s = K - 2.0 * h * (z - S1q[j] + lam[j]);
          if (gkq > 0.0) s -= gkq * std::exp(gkq * z / sj);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * std::exp(gks[t] * (rests[t].first + z) / rests[t].second);
          if (prox) s -= lqp_grad(z, p0, mu);
          return s;
        };
        auto dgr = [&](double z) {
          double s = -2.0 * h;
          if (gkq > 0.0) s -= gkq * gkq / sj * std::exp(gkq * z / sj);
          for (size_t t = 0; t < rests.size(); ++t)
            s -= gks[t] * gks[t] / rests[t].second *
                 std::exp(gks[t] * (rests[t].first + z) / rests[t].second);
          if (prox) s -= lqp_curv(z, p0, mu);
          return s;
        };
        ActionBox bx = ybox[j];
        if (prox) bx.lo = std::max(bx.lo, 1e-12);
        const ScalarResult sr = best_response_scalar(gr, dgr, bx, o.scalar_tol, zrd[j]);
        v = sr.x;
        rep.boundary_hits += sr.at_boundary;
        rep.flops += static_cast<std::int64_t>(2 * d + 2 + 4) * sr.iterations;
      }
      const double dv = v - zrd[j];
      diff = std::max(diff, std::abs(dv));
      Zn[j] = v;
      if (gs) {
        int a = j;
        for (int l = q + 1; l <= L; ++l) {
          a = l == q + 1 ? up_anc[0][j] : c.lv[l - 2].anc[g.leafset[q - 2][j].front()];
          up[l - q - 1][a] += dv;
        }
      }
    }
    Z = Zn;
    refresh_up(Z);

    // --- multipliers ---
    for (int j = 0; j < M; ++j) {
      const double step = h * (S1q[j] - Z[j]);
      lam[j] -= step;
      diff = std::max(diff, std::abs(step));
    }
    rep.flops += 4 * M;  // multiplier update and penalty constants
    rep.flops += agg_charge;

    if (lqp) {
      for (int i = 0; i < N; ++i)
        if (!lqp_off_x[i] && x[i] <= 0.0) {
          lqp_off_x[i] = 1;
          ++rep.lqp_disabled;
        }
      for (int j = 0; j < M; ++j)
        if (!lqp_off_z[j] && Z[j] <= 0.0) {
          lqp_off_z[j] = 1;
          ++rep.lqp_disabled;
        }
      xprev = x;
      Zprev = Z;
    }

    rep.sweeps = sweep;
    rep.residual_inf = diff;
    if (o.record_norms) rep.trajectory_norms.push_back(diff);
    if (o.observer) o.observer(sweep, x);
    if (diff < o.epsilon) {
      rep.converged = true;
      break;
    }
    if (o.deadline_ms && elapsed_ms(t0) > *o.deadline_ms) {
      rep.timed_out = true;
      break;
    }
  }
  rep.x = x;
  StrategyProfile prof = make_profile(g, x);
  rep.agg = prof.agg;
  rep.penalty_state.lambda = {lam};
  rep.penalty_state.prev = {xprev, Zprev};
  return rep;
}

// L-level chain: every level keeps replicated actions with penalties tying it
// to the sum of its children below and to its replica in the parent above.
SolverReport chain(const MultiScaleGame& g, const SolverOptions& o) {
  Compact c(g);
  const int L = c.L;
  SolverReport rep;
  rep.algorithm = Algorithm::SHBRD;
  const int N = c.N;
  const bool gs = o.mode == SweepMode::GaussSeidel;

  std::vector<double> h = o.penalty;
  if (h.empty()) h = default_penalties(g);
  if (static_cast<int>(h.size()) != L - 1)
    throw std::invalid_argument("solver: penalty vector must have one entry per level 2..L");

  Vector x = initial_profile(o, g.boxes);
  std::vector<Vector> z(L);  // z[0] aliases the leaves
  z[0] = x;
  std::vector<Vector> lam(L - 1);
  std::vector<Vector> sig(L - 1);  // sums of the children's replicated actions
  std::vector<std::vector<ActionBox>> zbox(L - 1);
  for (int l = 2; l <= L; ++l) {
    const int m = c.lv[l - 2].count;
    lam[l - 2] = Vector::Zero(m);
    zbox[l - 2].resize(m);
    for (int k = 0; k < m; ++k) {
      double lo = 0.0, hi = 0.0;
      for (int leaf : g.leafset[l - 2][k]) {
        lo += g.boxes[leaf].lo;
        hi += g.boxes[leaf].hi;
      }
      zbox[l - 2][k] = {lo, hi};
    }
  }
  auto refresh_sig = [&]() {
    for (int l = 2; l <= L; ++l) {
      const auto& kids = *c.lv[l - 2].children;
      sig[l - 2].setZero(c.lv[l - 2].count);
      for (size_t k = 0; k < kids.size(); ++k)
        for (int ch : kids[k]) sig[l - 2][k] += z[l - 2][ch];
    }
  };
  for (int l = 2; l <= L; ++l) {
    sig[l - 2].setZero(c.lv[l - 2].count);
    const auto& kids = *c.lv[l - 2].children;
    for (size_t k = 0; k < kids.size(); ++k)
      for (int ch : kids[k]) sig[l - 2][k] += z[l - 2][ch];
    z[l - 1] = sig[l - 2];
  }

  const double mu = o.lqp_mu.value_or(0.0);
  const bool lqp = o.lqp_mu.has_value();
  std::vector<std::vector<char>> lqp_off(L);
  std::vector<Vector> zprev = z;
  for (int l = 1; l <= L; ++l) lqp_off[l - 1].assign(z[l - 1].size(), 0);

  std::int64_t agg_charge = 0;
  for (int l = 2; l <= L; ++l) {
    const auto& kids = *c.lv[l - 2].children;
    for (const auto& ks : kids) agg_charge += static_cast<std::int64_t>(ks.size()) - 1;
  }

  if (L > 2) rep.notes = "chain form over " + std::to_string(L) + " levels";

  const Clock::time_point t0 = Clock::now();
  for (int sweep = 1; sweep <= o.max_sweeps; ++sweep) {
    double diff = 0.0;
    for (int l = 1; l <= L; ++l) {
      const int m = l == 1 ? N : c.lv[l - 2].count;
      const double hdn = l >= 2 ? h[l - 2] : 0.0;
      const double hup = l < L ? h[l - 1] : 0.0;
      Vector zn = z[l - 1];
      Vector sig_rd;
      if (!gs && l < L) sig_rd = sig[l - 1];
      const Vector& rd = gs ? zn : z[l - 1];
      for (int j = 0; j < m; ++j) {
        double coupling = 0.0;
        int d = l == 1 ? 2 : (l < L ? 4 : 2);
        const auto& rows = l == 1 ? c.wrow : c.lv[l - 2].row;
        int rowidx = j;
        if (l == 1) {
          for (const auto& [p, w] : c.wrow[j]) coupling += w * rd[p];
          d += static_cast<int>(c.wrow[j].size());
        } else {
          for (const auto& [p, w] : rows[rowidx]) coupling += w * rd[p];
          d += static_cast<int>(rows[rowidx].size());
        }
        const int par = l < L ? g.parent[l - 1][j] : -1;
        const double srest = l < L ? (gs ? sig[l - 1][par] : sig_rd[par]) - rd[j] : 0.0;
        const double up_anchor = l < L ? z[l][par] + lam[l - 1][par] : 0.0;
        const double dn_anchor = l >= 2 ? sig[l - 2][j] - lam[l - 2][j] : 0.0;
        const double ben = l == 1 ? g.params.b[j] : c.lv[l - 2].ben[j];
        const double cq = l == 1 ? g.params.c[j] : 0.0;
        const double curv = 2.0 * cq + 2.0 * hdn + 2.0 * hup;
        const ActionBox& bx0 = l == 1 ? g.boxes[j] : zbox[l - 2][j];
        const double ki = l == 1 ? g.params.kappa[j] : 0.0;
        const bool gexp = l >= 2 && c.lv[l - 2].gexp;
        const double gk = gexp ? c.lv[l - 2].gk : 0.0;
        const double sj = gexp ? c.lv[l - 2].leaves[j] : 1.0;
        const bool prox = lqp && !lqp_off[l - 1][j];
        double v;
        if (ki <= 0.0 && !gexp && !prox) {
          bool cl = false;
          const double rhs = ben + coupling + 2.0 * hup * (up_anchor - srest) + 2.0 * hdn * dn_anchor;
          v = best_response_linear(rhs, curv / 2.0, 0.0, bx0, &cl);
          rep.boundary_hits += cl;
          rep.flops += 2 * d + 2;
        } else {
          const double K = ben + coupling;
          const double p0 = zprev[l - 1][j];
          auto gr = [&](double zi) {
            double s = K - 2.0 * cq * zi;
            if (l >= 2) s -= 2.0 * hdn * (zi - dn_anchor);
            if (l < L) s -= 2.0 * hup * (zi + srest - up_anchor);
            if (ki > 0.0) s -= ki * std::exp(ki * zi);
            if (gexp) s -= gk * std::exp(gk * zi / sj);
            if (prox) s -= lqp_grad(zi, p0, mu);
            return s;
          };
          auto dgr = [&](double zi) {
            double s = -curv;
            if (ki > 0.0) s -= ki * ki * std::exp(ki * zi);
            if (gexp) s -= gk * gk / sj * std::exp(gk * zi / sj);
            if (prox) s -= lqp_curv(zi, p0, mu);
            return s;
          };
          ActionBox bx = bx0;
          if (prox) bx.lo = std::max(bx.lo, 1e-12);
          const ScalarResult sr = best_response_scalar(gr, dgr, bx, o.scalar_tol, rd[j]);
          v = sr.x;
          rep.boundary_hits += sr.at_boundary;
          rep.flops += static_cast<std::int64_t>(2 * d + 2 + 4) * sr.iterations;
        }
        const double dv = v - rd[j];
        diff = std::max(diff, std::abs(dv));
        zn[j] = v;
        if (gs && l < L) sig[l - 1][par] += dv;
      }
      z[l - 1] = zn;
      if (l < L) {  // exact sums for the next stage
        const auto& kids = *c.lv[l - 1].children;
        sig[l - 1].setZero(c.lv[l - 1].count);
        for (size_t k = 0; k < kids.size(); ++k)
          for (int ch : kids[k]) sig[l - 1][k] += z[l - 1][ch];
      }
    }
    refresh_sig();
    for (int l = 2; l <= L; ++l) {
      for (int k = 0; k < c.lv[l - 2].count; ++k) {
        const double step = h[l - 2] * (sig[l - 2][k] - z[l - 1][k]);
        lam[l - 2][k] -= step;
        diff = std::max(diff, std::abs(step));
      }
      rep.flops += 4 * c.lv[l - 2].count;
    }
    rep.flops += agg_charge;
    if (lqp) {
      for (int l = 1; l <= L; ++l)
        for (int j = 0; j < z[l - 1].size(); ++j)
          if (!lqp_off[l - 1][j] && z[l - 1][j] <= 0.0) {
            lqp_off[l - 1][j] = 1;
            ++rep.lqp_disabled;
          }
      zprev = z;
    }
    rep.sweeps = sweep;
    rep.residual_inf = diff;
    if (o.record_norms) rep.trajectory_norms.push_back(diff);
    if (o.observer) o.observer(sweep, z[0]);
    if (diff < o.epsilon) {
      rep.converged = true;
      break;
    }
    if (o.deadline_ms && elapsed_ms(t0) > *o.deadline_ms) {
      rep.timed_out = true;
      break;
    }
  }
  rep.x = z[0];
  StrategyProfile prof = make_profile(g, rep.x);
  rep.agg = prof.agg;
  rep.penalty_state.lambda = lam;
  rep.penalty_state.prev = zprev;
  return rep;
}

}  // namespace

SolverReport solve_sh_brd(const MultiScaleGame& g, const SolverOptions& o) {
  check_options(o);
  if (g.n_levels < 2) throw std::invalid_argument("solve_sh_brd: requires at least two levels");
  if (g.n_levels == 2) return two_block(g, o, 2, Algorithm::SHBRD);
  return chain(g, o);
}

SolverReport solve_hh_brd(const MultiScaleGame& g, const SolverOptions& o) {
  check_options(o);
  if (g.n_levels < 2) throw std::invalid_argument("solve_hh_brd: requires at least two levels");
  int q = o.hh_split;
  // Default to replicating the top level. A balanced split looks cheaper per
  // sweep, but an interior q stacks every spread-down level into the replica
  // coupling and can push the penalty stage outside its stable window; the top
  // level keeps that coupling at the certified adjacency alone.
  if (q == 0) q = g.n_levels;
  if (q < 2 || q > g.n_levels) throw std::invalid_argument("solve_hh_brd: split level out of range");
  return two_block(g, o, q, Algorithm::HHBRD);
}

// ---------------------------------------------------------------------------

Vector direct_linear_equilibrium(const FlatGame& f) {
  if (f.has_exp())
    throw std::invalid_argument("direct_linear_equilibrium: game has exponential terms");
  Matrix A = -f.W;
  for (int i = 0; i < f.n; ++i) A(i, i) += 2.0 * f.c[i];
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible())
    throw std::runtime_error("direct_linear_equilibrium: singular best-response system");
  Vector x = lu.solve(f.b);
  for (int i = 0; i < f.n; ++i) {
    if (x[i] < f.boxes[i].lo - 1e-9 || x[i] > f.boxes[i].hi + 1e-9)
      throw std::runtime_error("direct_linear_equilibrium: stationary point outside the action box");
    x[i] = clamp_box(x[i], f.boxes[i]);
  }
  return x;
}

EquilibriumCheck verify_equilibrium(const FlatGame& f, const Vector& x, double scalar_tol) {
  if (x.size() != f.n) throw std::invalid_argument("verify_equilibrium: profile size mismatch");
  EquilibriumCheck out;
  const bool nonlinear = f.has_exp();
  for (int i = 0; i < f.n; ++i) {
    const double coupling = f.W.row(i).dot(x);
    double br;
    bool at_bound = false;
    if (!nonlinear) {
      bool cl = false;
      br = best_response_linear(f.b[i], f.c[i], coupling, f.boxes[i], &cl);
      at_bound = cl;
    } else {
      const double K = f.b[i] + coupling;
      const double ci = f.c[i], ki = f.kappa[i];
      std::vector<std::pair<double, double>> rests;
      std::vector<double> gks;
      for (const FlatGame::LevelView& v : f.lvl) {
        if (!v.gexp) continue;
        const int k = v.anc[i];
        double y = 0.0;
        for (int j : v.leafset[k]) y += x[j];
        rests.emplace_back(y - x[i], static_cast<double>(v.leafset[k].size()));
        gks.push_back(v.gkappa);
      }
      auto gr = [&](double xi) {
        double s = K - 2.0 * ci * xi;
        if (ki > 0.0) s -= ki * std::exp(ki * xi);
        for (size_t t = 0; t < rests.size(); ++t)
          s -= gks[t] * std::exp(gks[t] * (rests[t].first + xi) / rests[t].second);
        return s;
      };
      const ScalarResult sr = best_response_scalar(gr, f.boxes[i], scalar_tol, x[i]);
      br = sr.x;
      at_bound = sr.at_boundary;
    }
    out.max_deviation = std::max(out.max_deviation, std::abs(x[i] - br));
    if (at_bound && std::abs(x[i] - br) <= scalar_tol * 10.0 + 1e-15) out.boundary_stationary = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Static per-sweep cost model (linear best responses)

std::int64_t count_flops_flat(const FlatGame& f, bool per_iteration) {
  std::int64_t total = 0;
  for (int i = 0; i < f.n; ++i) {
    int nnz = 0;
    for (int j = 0; j < f.n; ++j)
      if (f.W(i, j) != 0.0) ++nnz;
    total += 2 * nnz + 2;
  }
  if (per_iteration) {
    for (const FlatGame::LevelView& v : f.lvl)
      if (v.gexp)
        for (const auto& ls : v.leafset) total += static_cast<std::int64_t>(ls.size()) - 1;
  }
  return total;
}

std::int64_t count_flops(const MultiScaleGame& g, Algorithm alg, bool per_iteration) {
  Compact c(g);
  const int L = c.L;
  std::int64_t total = 0;
  switch (alg) {
    case Algorithm::BRD: {
      for (int i = 0; i < c.N; ++i) {
        std::int64_t nnz = c.wrow[i].size();
        for (int l = 2; l <= L; ++l) {
          const LevelInfo& v = c.lv[l - 2];
          for (const auto& [p, w] : v.row[v.anc[i]])
            if (w != 0.0) nnz += static_cast<std::int64_t>(v.leaves[p]);
        }
        total += 2 * nnz + 2;
      }
      if (per_iteration) {
        for (const LevelInfo& v : c.lv)
          if (v.gexp)
            for (double s : v.leaves) total += static_cast<std::int64_t>(s) - 1;
      }
      return total;
    }
    case Algorithm::MSBRD: {
      for (int i = 0; i < c.N; ++i) {
        std::int64_t d = c.wrow[i].size();
        for (int l = 2; l <= L; ++l) d += c.lv[l - 2].row[c.lv[l - 2].anc[i]].size();
        total += 2 * d + 2;
      }
      if (per_iteration) total += c.aggregate_charge(2, L);
      return total;
    }
    case Algorithm::SHBRD: {
      if (L < 2) throw std::invalid_argument("count_flops: SH-BRD needs at least two levels");
      if (L == 2) {
        for (int i = 0; i < c.N; ++i) total += 2 * (static_cast<std::int64_t>(c.wrow[i].size()) + 2) + 2;
        const LevelInfo& v = c.lv[0];
        for (int k = 0; k < v.count; ++k) total += 2 * (static_cast<std::int64_t>(v.row[k].size()) + 2) + 2;
        if (per_iteration) {
          for (int k = 0; k < v.count; ++k) total += static_cast<std::int64_t>(v.leaves[k]) - 1;
          total += 4 * v.count;
        }
        return total;
      }
      for (int i = 0; i < c.N; ++i) total += 2 * (static_cast<std::int64_t>(c.wrow[i].size()) + 2) + 2;
      for (int l = 2; l <= L; ++l) {
        const LevelInfo& v = c.lv[l - 2];
        const std::int64_t extra = l < L ? 4 : 2;
        for (int k = 0; k < v.count; ++k) total += 2 * (static_cast<std::int64_t>(v.row[k].size()) + extra) + 2;
      }
      if (per_iteration) {
        for (int l = 2; l <= L; ++l) {
          const LevelInfo& v = c.lv[l - 2];
          for (const auto& ks : *v.children) total += static_cast<std::int64_t>(ks.size()) - 1;
          total += 4 * v.count;
        }
      }
      return total;
    }
    case Algorithm::HHBRD: {
      if (L < 2) throw std::invalid_argument("count_flops: HH-BRD needs at least two levels");
      const int q = L;  // default split replicates the top level
      const LevelInfo& vq = c.lv[q - 2];
      for (int i = 0; i < c.N; ++i) {
        std::int64_t d = c.wrow[i].size() + 2;
        for (int l = 2; l < q; ++l) d += c.lv[l - 2].row[c.lv[l - 2].anc[i]].size();
        total += 2 * d + 2;
      }
      for (int j = 0; j < vq.count; ++j) {
        std::int64_t d = vq.row[j].size() + 2;
        for (int l = q + 1; l <= L; ++l) {
          const LevelInfo& vu = c.lv[l - 2];
          d += vu.row[vu.anc[g.leafset[q - 2][j].front()]].size();
        }
        total += 2 * d + 2;
      }
      if (per_iteration) {
        total += c.aggregate_charge(2, q - 1);
        for (int j = 0; j < vq.count; ++j) total += static_cast<std::int64_t>(vq.leaves[j]) - 1;
        for (int l = q + 1; l <= L; ++l) {
          const LevelInfo& vu = c.lv[l - 2];
          for (int k = 0; k < vu.count; ++k)
            if (vu.consumed[k]) total += static_cast<std::int64_t>((*vu.children)[k].size()) - 1;
        }
        total += 4 * vq.count;
      }
      return total;
    }
  }
  return total;
}

}  // namespace msgame
