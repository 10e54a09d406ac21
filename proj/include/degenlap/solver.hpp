#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degenlap/grid.hpp"
#include "degenlap/kernel_energy.hpp"
#include "degenlap/weights.hpp"

namespace degenlap {

/// Minimise J over fields equal to g on the exterior nodes. Interior values
/// of g are ignored.
struct DirichletProblem {
  EnergySpec spec;
  WeightModel weight;
  GridDomain grid;
  FieldVector g;
};

enum class SolveMethod {
  automatic,  // cg for p == 2, newton otherwise
  cg,
  newton,     // Newton directions on the smoothed energy, projected Armijo search
  gradient,   // projected steepest descent with Armijo search
};

enum class EnergyDomain { full, complement_excluded };

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 500;
  SolveMethod method = SolveMethod::automatic;
  /// Pair set used for SolveResult::energy_value.
  EnergyDomain energy_domain = EnergyDomain::complement_excluded;
  /// Start from this field's interior values instead of the exterior mean.
  std::optional<FieldVector> initial;
  /// Project iterates onto [min g, max g] over the exterior.
  bool project = true;
};

struct SolveResult {
  FieldVector u;
  int iterations = 0;
  /// max |dJ/du_i| over interior nodes.
  double residual_inf = 0.0;
  double energy_value = 0.0;
  bool converged = false;
  /// Energy over (Omega^c x Omega^c)^c after each accepted step (smoothed for p < 2).
  std::vector<double> energy_trace;
  std::string method;
};

/// Throws NonFiniteEnergyError if the data gives a non-finite energy and
/// InvalidArgument for malformed problems. Non-convergence is reported
/// through SolveResult::converged.
SolveResult solve(const DirichletProblem& prob, const SolveOptions& options = {});

/// max over interior i of |dJ/du_i|.
double residual(const DirichletProblem& prob, std::span<const double> u);

/// Dense p = 2 system G u_I = b with G = 4 c_s (D - W_II), b = 4 c_s W_IE g,
/// row/column order as grid.interior_indices().
struct LinearSystem {
  std::size_t size = 0;
  std::vector<double> G;  // row-major size x size
  std::vector<double> b;
};
LinearSystem assemble_linear_system(const DirichletProblem& prob);

/// Conjugate gradients on a dense SPD matrix. Stops when max|G x - b| <= tol.
struct CgResult {
  int iterations = 0;
  double residual_inf = 0.0;
  bool converged = false;
};
CgResult conjugate_gradient(const LinearSystem& sys, std::vector<double>& x, double tol, int max_iter);

} // namespace degenlap
