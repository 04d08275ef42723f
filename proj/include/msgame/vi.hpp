#pragma once

#include "msgame/flatten.hpp"

#include <functional>
#include <optional>

namespace msgame {

// F(x) = (-du_i/dx_i)_i for the flat game: 2c_i x_i - b_i - W_i.x plus the
// exponential rate terms when enabled.
struct PseudoGradient {
  const FlatGame* game = nullptr;
  Vector operator()(const Vector& x) const;
};

Vector pseudo_gradient(const FlatGame& f, const Vector& x);

// Dominance matrix: diagonal alpha_i = inf |dF_i/dx_i| over the box (2c_i plus
// the exponential curvature floors), off-diagonal -|W_ij|.
Matrix upsilon(const FlatGame& f);

// Gamma_ij = beta_ij / alpha_i, zero diagonal. Requires positive diagonal.
Matrix gamma_ratios(const Matrix& ups);

struct SpectralResult {
  double rho = 0.0;
  bool converged = false;  // false: rho fell back to the row-sum upper bound
  int iterations = 0;
};

// Spectral radius of |A| by shifted power iteration.
SpectralResult spectral_radius(const Matrix& a, double tol = 1e-10, int max_iter = 10000);

// Every principal minor strictly positive, checked by enumeration. Guarded by
// `cap` since the subset count is 2^n - 1.
bool is_p_matrix(const Matrix& a, int cap = 16);

struct UniquenessCertificate {
  Matrix ups;
  Matrix gamma;
  double spectral_radius_gamma = 0.0;
  bool rho_is_bound = false;  // power iteration failed; rho is an upper bound
  bool sdd = false;
  bool wcdd = false;
  bool p_gamma = false;
  std::optional<bool> p_upsilon_exact;  // empty = skipped (n above cap)
  int n = 0;
};

UniquenessCertificate certify_uniqueness(const FlatGame& f, int exact_cap = 16);

// Two-level split variational form: leaf operator f, group operator g, and the
// coupling A with A(j,i) = -1 iff leaf i belongs to group j, so the feasible
// set is {(x, y) : Ax + y = 0, x in the boxes}.
struct SviProblem {
  Matrix A;
  std::function<Vector(const Vector&)> f;
  std::function<Vector(const Vector&)> g;
  std::vector<ActionBox> x_box;
  std::vector<ActionBox> y_box;  // summed member boxes per group
};

SviProblem svi_assemble(const MultiScaleGame& g);

}  // namespace msgame
