#pragma once

namespace illab {

// All numeric tolerances live here so exact-identity checks and validity
// gates use one set of constants across the project.
struct Tolerances {
  double row_sum = 1e-12;        // transition rows, rho0, simplex rows
  double dist_mass = 1e-10;      // forward state-distribution mass conservation
  double rollout_policy = 1e-9;  // action-distribution validity at sampling time
  double identity = 1e-10;       // algebraic identities checked via two routes
  double pdl_residual = 1e-8;    // performance-difference residual
  double grad_fd_rel = 1e-5;     // analytic gradient vs central differences
  double eg_equiv = 1e-6;        // multiplicative update vs argmin oracle
  double cg_match = 1e-6;        // low-rank CG vs dense factorization
  double exact_backup = 1e-12;   // Bellman backup residual of exact tables
};

inline const Tolerances& tols() {
  static const Tolerances t;
  return t;
}

}  // namespace illab
