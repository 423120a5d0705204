#include "casimir/levmar.hpp"

#include "casimir/errors.hpp"

#include <cmath>
#include <string>

namespace casimir {
namespace {

// Solve (n x n) s.p.d. system in place, n <= 4. Returns false if not p.d.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (!(s > 0)) return false;
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
    b[ii] = s / a[ii * n + ii];
  }
  return true;
}

double cost_of(const std::vector<double>& r) {
  double c = 0.0;
  for (double v : r) c += v * v;
  return c;
}

}  // namespace

LmResult fit_least_squares(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>&
        residual_fn,
    std::vector<double> initial, std::size_t n_residuals, LmOptions opt) {
  const std::size_t np = initial.size();
  if (np == 0 || np > 4)
    throw ValidationError("fit_least_squares: 1..4 parameters supported");
  if (n_residuals == 0)
    throw InsufficientDataError("fit_least_squares: no residuals to fit");

  if (opt.step_tol.empty()) opt.step_tol.assign(np, 1e-12);
  if (opt.fd_step.empty()) {
    opt.fd_step.resize(np);
    for (std::size_t i = 0; i < np; ++i)
      opt.fd_step[i] = std::max(1e-8 * std::abs(initial[i]), 1e-12);
  }
  if (opt.step_tol.size() != np || opt.fd_step.size() != np)
    throw ValidationError("fit_least_squares: tolerance vectors must match parameters");

  std::vector<double> p = std::move(initial);
  std::vector<double> r(n_residuals), r_trial(n_residuals), r_fd(n_residuals);
  std::vector<double> jac(n_residuals * np);

  residual_fn(p, r);
  double cost = cost_of(r);
  double lambda = opt.lambda_init;

  LmResult res;
  bool converged = false;
  int iter = 0;
  for (; iter < opt.max_iterations && !converged; ++iter) {
    // finite-difference Jacobian
    for (std::size_t j = 0; j < np; ++j) {
      std::vector<double> pj = p;
      pj[j] += opt.fd_step[j];
      residual_fn(pj, r_fd);
      for (std::size_t i = 0; i < n_residuals; ++i)
        jac[i * np + j] = (r_fd[i] - r[i]) / opt.fd_step[j];
    }

    // normal equations  J^T J and J^T r
    std::vector<double> jtj(np * np, 0.0), jtr(np, 0.0);
    for (std::size_t i = 0; i < n_residuals; ++i) {
      for (std::size_t a = 0; a < np; ++a) {
        jtr[a] += jac[i * np + a] * r[i];
        for (std::size_t b = 0; b <= a; ++b)
          jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
      }
    }
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = a + 1; b < np; ++b) jtj[a * np + b] = jtj[b * np + a];

    bool improved = false;
    for (int damping_tries = 0; damping_tries < 24; ++damping_tries) {
      std::vector<double> lhs = jtj;
      for (std::size_t a = 0; a < np; ++a)
        lhs[a * np + a] += lambda * std::max(jtj[a * np + a], 1e-300);
      std::vector<double> delta(np);
      for (std::size_t a = 0; a < np; ++a) delta[a] = -jtr[a];
      if (!cholesky_solve(lhs, delta, np)) {
        lambda *= 10.0;
        continue;
      }

      std::vector<double> p_trial(np);
      for (std::size_t a = 0; a < np; ++a) p_trial[a] = p[a] + delta[a];
      residual_fn(p_trial, r_trial);
      const double trial_cost = cost_of(r_trial);
      // strict improvement only: an exact minimum stays put bit-for-bit
      if (trial_cost < cost) {
        const double gain = cost - trial_cost;
        bool small_step = true;
        for (std::size_t a = 0; a < np; ++a)
          small_step = small_step && std::abs(delta[a]) <= opt.step_tol[a];
        p = std::move(p_trial);
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda * 0.25, 1e-14);
        improved = true;
        if (small_step || gain <= opt.cost_rel_tol * std::max(cost, 1e-300))
          converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      converged = true;  // damping saturated: local minimum to machine precision
    }
  }

  if (!converged)
    throw NumericError("fit did not converge after " + std::to_string(iter) +
                           " iterations (chi2 = " + std::to_string(cost) + ")",
                       cost, 0.0);

  // covariance from undamped J^T J at the solution
  std::vector<double> jtj(np * np, 0.0);
  for (std::size_t j = 0; j < np; ++j) {
    std::vector<double> pj = p;
    pj[j] += opt.fd_step[j];
    residual_fn(pj, r_fd);
    for (std::size_t i = 0; i < n_residuals; ++i)
      jac[i * np + j] = (r_fd[i] - r[i]) / opt.fd_step[j];
  }
  for (std::size_t i = 0; i < n_residuals; ++i)
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = a + 1; b < np; ++b) jtj[a * np + b] = jtj[b * np + a];

  res.params = p;
  res.chi2 = cost;
  res.dof = static_cast<int>(n_residuals) - static_cast<int>(np);
  res.iterations = iter;
  res.converged = true;
  res.param_stderr.assign(np, 0.0);
  if (res.dof > 0) {
    // invert via np solves of unit vectors
    const double scale = cost / res.dof;
    for (std::size_t a = 0; a < np; ++a) {
      std::vector<double> lhs = jtj;
      std::vector<double> e(np, 0.0);
      e[a] = 1.0;
      if (cholesky_solve(lhs, e, np) && e[a] > 0)
        res.param_stderr[a] = std::sqrt(e[a] * scale);
    }
  }
  return res;
}

}  // namespace casimir
