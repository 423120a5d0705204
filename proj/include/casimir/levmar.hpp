#ifndef CASIMIR_LEVMAR_HPP
#define CASIMIR_LEVMAR_HPP

#include <functional>
#include <vector>

namespace casimir {

// Damped Gauss-Newton (Levenberg-Marquardt) for the 1-3 parameter fits used
// by the calibration chain. Jacobians by forward differences; normal
// equations solved by a small Cholesky.
struct LmOptions {
  int max_iterations = 200;
  std::vector<double> step_tol;  // per-parameter absolute step tolerance
  std::vector<double> fd_step;   // per-parameter finite-difference step
  double cost_rel_tol = 1e-15;   // stop when a step improves cost by less
  double lambda_init = 1e-3;
};

struct LmResult {
  std::vector<double> params;
  std::vector<double> param_stderr;  // from (J^T J)^-1 scaled by chi2/dof
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  bool converged = false;
};

// residual_fn fills `r` (size n_residuals) for the given parameters. Throws
// NumericError when max_iterations is exhausted without convergence.
LmResult fit_least_squares(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>&
        residual_fn,
    std::vector<double> initial, std::size_t n_residuals, LmOptions options = {});

}  // namespace casimir

#endif
