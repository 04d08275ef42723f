#pragma once

#include "msgame/flatten.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

namespace msgame {

enum class SweepMode { GaussSeidel, Jacobi };
enum class Algorithm { BRD, MSBRD, SHBRD, HHBRD };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& s);

struct SolverOptions {
  double epsilon = 1e-6;        // stop when the joint iterate step falls below this
  int max_sweeps = 100000;
  SweepMode mode = SweepMode::GaussSeidel;
  std::optional<double> lqp_mu;     // proximal term weight in (0, 5/9); disabled when empty
  std::vector<double> penalty;      // h per level 2..L; empty = derived from group sizes
  int hh_split = 0;                 // q; 0 replicates the top level (q = L)
  double scalar_tol = 1e-12;        // |gradient| target for scalar best responses
  std::optional<Vector> x0;         // default: zeros clamped into the boxes
  std::optional<double> deadline_ms;
  std::function<void(int, const Vector&)> observer;  // (completed sweep, leaf profile)
  bool record_norms = false;
};

// Multiplier and proximal bookkeeping of the penalty-splitting solvers.
struct PenaltyState {
  std::vector<Vector> lambda;  // one block per replicated level
  std::vector<Vector> prev;    // previous iterate blocks for the proximal term
};

struct SolverReport {
  Algorithm algorithm = Algorithm::BRD;
  bool converged = false;
  bool timed_out = false;
  int sweeps = 0;
  std::int64_t flops = 0;          // model count, see the flop model notes below
  double residual_inf = 0.0;       // last sweep's joint infinity-norm step
  Vector x;                        // final leaf profile
  std::vector<Vector> agg;         // aggregates recomputed from x
  int boundary_hits = 0;
  int lqp_disabled = 0;            // agents whose proximal term switched off
  PenaltyState penalty_state;      // filled by the splitting solvers
  std::vector<double> trajectory_norms;
  std::string notes;
};

// Stationary point of the quadratic utility, clamped into the box:
// clamp((b + coupling_sum) / (2c), box).
double best_response_linear(double b, double c, double coupling_sum, const ActionBox& box,
                            bool* clamped = nullptr);

struct ScalarResult {
  double x = 0.0;
  int iterations = 0;
  bool at_boundary = false;
};

// Root of a strictly decreasing utility gradient on the box, by safeguarded
// Newton (secant when no derivative is supplied). A Newton step is taken only
// while it keeps halving the bracket; otherwise the step bisects, so steep
// exponential tails cannot stall the iteration. Boundary values are returned
// directly when the gradient does not change sign inside. `start` seeds the
// first probe (callers pass the previous iterate); NaN means bracket midpoint.
ScalarResult best_response_scalar(const std::function<double(double)>& grad, const ActionBox& box,
                                  double tol = 1e-12,
                                  double start = std::numeric_limits<double>::quiet_NaN());
ScalarResult best_response_scalar(const std::function<double(double)>& grad,
                                  const std::function<double(double)>& dgrad, const ActionBox& box,
                                  double tol = 1e-12,
                                  double start = std::numeric_limits<double>::quiet_NaN());

// Round-robin best responses against the flat adjacency.
SolverReport solve_brd(const FlatGame& f, const SolverOptions& o = {});

// Same trajectory as solve_brd but computed from the compact representation:
// within-group rows plus cached sibling aggregates.
SolverReport solve_ms_brd(const MultiScaleGame& g, const SolverOptions& o = {});

// Splitting solver: every level's agents best-respond to penalty-augmented
// utilities tying them to their replicas, with multiplier updates per sweep.
SolverReport solve_sh_brd(const MultiScaleGame& g, const SolverOptions& o = {});

// Two meta-level variant: levels below q collapse into one block, q and above
// into the other, with a single penalty interface at level q.
SolverReport solve_hh_brd(const MultiScaleGame& g, const SolverOptions& o = {});

// Direct solve of the linear stationarity system (2 diag(c) - W) x = b.
// Requires a purely quadratic game and an interior solution.
Vector direct_linear_equilibrium(const FlatGame& f);

struct EquilibriumCheck {
  double max_deviation = 0.0;  // max_i |x_i - BR_i(x)|
  bool boundary_stationary = false;
};
EquilibriumCheck verify_equilibrium(const FlatGame& f, const Vector& x, double scalar_tol = 1e-12);

// Deterministic per-sweep cost model (linear best responses): a best response
// with d coupling terms costs 2d + 2, aggregating a size-s group costs s - 1
// (charged only when some best response reads that aggregate), and each
// replicated agent of the splitting solvers adds 2 for its multiplier update
// and 2 for its penalty constants. Scalar root-finds cost (2d + 2 + 4) per
// iteration; their totals depend on the run and are accumulated in
// SolverReport.flops. per_iteration=false drops the per-sweep overhead terms
// (aggregation, multipliers, penalty constants) and counts best responses only.
std::int64_t count_flops(const MultiScaleGame& g, Algorithm alg, bool per_iteration = true);
std::int64_t count_flops_flat(const FlatGame& f, bool per_iteration = true);

// Penalty weights used when SolverOptions.penalty is empty: per level,
// 6 / (mean leaf count of that level's groups), raised when the sibling
// coupling at that level would otherwise dominate the penalty curvature.
std::vector<double> default_penalties(const MultiScaleGame& g);

}  // namespace msgame
