#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "rqhj/dopri5.hpp"
#include "rqhj/errors.hpp"
#include "rqhj/physics.hpp"
#include "rqhj/residual.hpp"

namespace rqhj {

template <typename Scalar>
struct InitialCondition {
  Scalar value{1};
  Scalar slope{0};
};

template <typename Scalar>
struct SolverOptions {
  Scalar rel_tol{1e-10};
  // Non-positive values mean "same as rel_tol".
  Scalar abs_tol{0};
  // Non-positive values mean 1e-6 * m0 c^2.
  Scalar eps_sing{0};
  int fixed_substeps{0};
  Scalar rescale_threshold{1e100};
};

/// One real solution of the decoupled second-order equation for a spinor component.
template <typename Scalar>
struct ComponentSolution {
  Channel channel{Channel::theta};
  Series<Scalar> xs;
  Series<Scalar> y;
  Series<Scalar> dy;
  Series<Scalar> log_scale;
  InitialCondition<Scalar> ic;
  IntegratorStats<Scalar> stats;
};

template <typename Scalar>
struct SolutionPair {
  ComponentSolution<Scalar> first;
  ComponentSolution<Scalar> second;
  // W/u in the units of the unscaled initial segment (log_scale == 0)
  Scalar wronskian_constant{0};
  // max |(W/u)(x) / alpha - 1| over the grid
  Scalar wronskian_spread{0};

  Channel channel() const { return first.channel; }
};

namespace detail {

template <typename Scalar>
Scalar resolve_eps(const PhysicsSetup<Scalar>& setup, const SolverOptions<Scalar>& options) {
  return options.eps_sing > 0 ? options.eps_sing : default_singular_threshold(setup);
}

template <typename Scalar>
void check_solver_preconditions(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                const Grid<Scalar>& grid, Channel channel, const SolverOptions<Scalar>& options) {
  setup.validate();
  grid.validate();
  if (!(options.rel_tol >= std::numeric_limits<Scalar>::epsilon() * 100)) {
    throw DomainError("rel_tol must be at least 100 * machine epsilon");
  }
  const auto funcs = channel_functions(setup, spec, grid, resolve_eps(setup, options));
  const auto& hits = funcs.singular_points(channel);
  if (!hits.empty()) {
    throw SingularCoefficient(channel_function_name(channel), static_cast<double>(hits.front()));
  }
}

/// Coefficients of y'' + p y' + K y = 0 at x for the given channel.
template <typename Scalar>
struct ComponentCoefficients {
  Scalar p;
  Scalar k;
};

template <typename Scalar>
ComponentCoefficients<Scalar> component_coefficients(const PhysicsSetup<Scalar>& setup,
                                                     const PotentialSpec<Scalar>& spec, Channel channel, Scalar x,
                                                     Scalar eps) {
  const auto pot = evaluate_potential(spec, x);
  const Scalar u = channel_value(setup, pot.v, channel);
  if (std::abs(u) < eps) {
    throw SingularCoefficient(channel_function_name(channel), static_cast<double>(x));
  }
  const Scalar u_plus = channel_value(setup, pot.v, Channel::theta);
  const Scalar u_minus = channel_value(setup, pot.v, Channel::phi);
  const Scalar hc = setup.hbar * setup.c;
  return {pot.dv / u, u_plus * u_minus / (hc * hc)};
}

template <typename Scalar, int Dim>
GridTrajectory<Scalar, Dim> integrate_component(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                                const Grid<Scalar>& grid, Channel channel,
                                                const Eigen::Matrix<Scalar, Dim, 1>& y0,
                                                const SolverOptions<Scalar>& options) {
  check_solver_preconditions(setup, spec, grid, channel, options);
  const Scalar eps = resolve_eps(setup, options);
  using State = Eigen::Matrix<Scalar, Dim, 1>;
  auto rhs = [&](Scalar x, const State& s) {
    const auto co = component_coefficients(setup, spec, channel, x, eps);
    State d;
    for (Index j = 0; j < Dim; j += 2) {
      d[j] = s[j + 1];
      d[j + 1] = -co.p * s[j + 1] - co.k * s[j];
    }
    return d;
  };
  IntegrationOptions<Scalar> io;
  io.rel_tol = options.rel_tol;
  io.abs_tol = options.abs_tol > 0 ? options.abs_tol : options.rel_tol;
  io.fixed_substeps = options.fixed_substeps;
  io.rescale_threshold = options.rescale_threshold;
  return DormandPrince<Scalar, Dim>(io).integrate(rhs, grid, y0);
}

template <typename Scalar, int Dim>
ComponentSolution<Scalar> unpack(const GridTrajectory<Scalar, Dim>& traj, const Grid<Scalar>& grid, Channel channel,
                                 Index offset, InitialCondition<Scalar> ic) {
  ComponentSolution<Scalar> sol;
  sol.channel = channel;
  sol.xs = grid.points();
  sol.y = traj.states.row(offset).transpose().array();
  sol.dy = traj.states.row(offset + 1).transpose().array();
  sol.log_scale = traj.log_scale;
  sol.ic = ic;
  sol.stats = traj.stats;
  return sol;
}

template <typename Scalar>
Scalar median(std::vector<Scalar> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) {
    return *mid;
  }
  const Scalar upper = *mid;
  const Scalar lower = *std::max_element(values.begin(), mid);
  return (lower + upper) / 2;
}

}  // namespace detail

template <typename Scalar>
ComponentSolution<Scalar> solve_component(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                          const Grid<Scalar>& grid, Channel channel, InitialCondition<Scalar> ic,
                                          const SolverOptions<Scalar>& options = {}) {
  const Eigen::Matrix<Scalar, 2, 1> y0(ic.value, ic.slope);
  const auto traj = detail::integrate_component<Scalar, 2>(setup, spec, grid, channel, y0, options);
  return detail::unpack(traj, grid, channel, 0, ic);
}

/// W = y1 dy2 - y2 dy1 in stored (possibly rescaled) units.
template <typename Scalar>
Series<Scalar> wronskian(const ComponentSolution<Scalar>& first, const ComponentSolution<Scalar>& second) {
  if (first.xs.size() != second.xs.size()) {
    throw GridMismatch("wronskian of solutions on different grids");
  }
  return first.y * second.dy - second.y * first.dy;
}

/// Estimates alpha in W(x) = alpha u(x) as the grid median and records the relative spread.
template <typename Scalar>
void estimate_wronskian_constant(SolutionPair<Scalar>& pair, const PhysicsSetup<Scalar>& setup,
                                 const PotentialSpec<Scalar>& spec) {
  const auto w = wronskian(pair.first, pair.second);
  const auto& xs = pair.first.xs;
  std::vector<Scalar> log_ratio(static_cast<std::size_t>(xs.size()));
  std::vector<int> sign(static_cast<std::size_t>(xs.size()));
  int sign_votes = 0;
  for (Index i = 0; i < xs.size(); ++i) {
    const Scalar u = channel_value(setup, evaluate_potential(spec, xs[i]).v, pair.channel());
    const Scalar r = w[i] / u;
    const auto k = static_cast<std::size_t>(i);
    log_ratio[k] = std::log(std::abs(r)) + 2 * pair.first.log_scale[i];
    sign[k] = r < 0 ? -1 : 1;
    sign_votes += sign[k];
  }
  const Scalar log_alpha = detail::median(log_ratio);
  const int alpha_sign = sign_votes < 0 ? -1 : 1;
  pair.wronskian_constant = alpha_sign * std::exp(log_alpha);
  Scalar spread = 0;
  for (std::size_t k = 0; k < log_ratio.size(); ++k) {
    const Scalar rel = sign[k] * alpha_sign * std::exp(log_ratio[k] - log_alpha) - 1;
    spread = std::max(spread, std::abs(rel));
  }
  pair.wronskian_spread = spread;
}

/// Two solutions integrated jointly (shared steps and shared rescaling).
template <typename Scalar>
SolutionPair<Scalar> solve_pair(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                const Grid<Scalar>& grid, Channel channel, InitialCondition<Scalar> ic1,
                                InitialCondition<Scalar> ic2, const SolverOptions<Scalar>& options = {}) {
  const Scalar det = ic1.value * ic2.slope - ic2.value * ic1.slope;
  if (det == 0) {
    throw DomainError("initial conditions of a solution pair must be linearly independent");
  }
  const Eigen::Matrix<Scalar, 4, 1> y0(ic1.value, ic1.slope, ic2.value, ic2.slope);
  const auto traj = detail::integrate_component<Scalar, 4>(setup, spec, grid, channel, y0, options);
  SolutionPair<Scalar> pair;
  pair.first = detail::unpack(traj, grid, channel, 0, ic1);
  pair.second = detail::unpack(traj, grid, channel, 2, ic2);
  estimate_wronskian_constant(pair, setup, spec);
  return pair;
}

/// Canonical pair with initial conditions (1, 0) and (0, 1) at x_start.
template <typename Scalar>
SolutionPair<Scalar> solve_pair(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                const Grid<Scalar>& grid, Channel channel, const SolverOptions<Scalar>& options = {}) {
  return solve_pair(setup, spec, grid, channel, InitialCondition<Scalar>{1, 0}, InitialCondition<Scalar>{0, 1},
                    options);
}

/// Initial condition of the imaginary part of phi generated by a real theta through
/// the first-order relations: phi = i * chi with hbar c chi' = u_- theta, -hbar c theta' = u_+ chi.
template <typename Scalar>
InitialCondition<Scalar> lower_component_ic(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                            Scalar x0, InitialCondition<Scalar> theta_ic) {
  const Scalar v = evaluate_potential(spec, x0).v;
  const Scalar hc = setup.hbar * setup.c;
  return {-hc * theta_ic.slope / channel_value(setup, v, Channel::theta),
          channel_value(setup, v, Channel::phi) * theta_ic.value / hc};
}

/// Complex spinor samples with first derivatives.
template <typename Scalar>
struct SpinorSamples {
  using Complex = std::complex<Scalar>;
  using ComplexSeries = Eigen::Array<Complex, Eigen::Dynamic, 1>;
  Series<Scalar> xs;
  ComplexSeries theta;
  ComplexSeries dtheta;
  ComplexSeries phi;
  ComplexSeries dphi;
};

namespace detail {

template <typename Scalar>
void check_same_grid(const Series<Scalar>& a, const Series<Scalar>& b) {
  if (a.size() != b.size()) {
    throw GridMismatch("solutions sampled on grids of different size");
  }
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) {
      throw GridMismatch("solutions sampled on different abscissae");
    }
  }
}

}  // namespace detail

/// Pointwise residual of -i hbar c phi' = u_- theta and -i hbar c theta' = u_+ phi,
/// normalised by the peak spinor modulus; the report scale is |E|.
template <typename Scalar>
ResidualReport<Scalar> coupled_system_residual(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                               const SpinorSamples<Scalar>& spinor, Scalar tolerance = Scalar(1e-6)) {
  using Complex = std::complex<Scalar>;
  const auto n = spinor.xs.size();
  if (spinor.theta.size() != n || spinor.phi.size() != n || spinor.dtheta.size() != n || spinor.dphi.size() != n) {
    throw GridMismatch("spinor rows sampled on different grids");
  }
  const Complex minus_i_hc(0, -setup.hbar * setup.c);
  Series<Scalar> res(n);
  Scalar peak = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar modulus = std::sqrt(std::norm(spinor.theta[i]) + std::norm(spinor.phi[i]));
    if (std::isfinite(static_cast<double>(modulus))) {
      peak = std::max(peak, modulus);
    }
  }
  for (Index i = 0; i < n; ++i) {
    const Scalar v = evaluate_potential(spec, spinor.xs[i]).v;
    const Complex r1 = minus_i_hc * spinor.dphi[i] - channel_value(setup, v, Channel::phi) * spinor.theta[i];
    const Complex r2 = minus_i_hc * spinor.dtheta[i] - channel_value(setup, v, Channel::theta) * spinor.phi[i];
    res[i] = std::max(std::abs(r1), std::abs(r2)) / peak;
  }
  return make_report(EquationId::dirac_10_11, spinor.xs, std::move(res), std::abs(setup.energy), tolerance);
}

/// Real form: the spinor is (theta, i * chi) with theta and chi real solutions of
/// their channels.
template <typename Scalar>
ResidualReport<Scalar> coupled_system_residual(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                               const ComponentSolution<Scalar>& sol_theta,
                                               const ComponentSolution<Scalar>& sol_phi,
                                               Scalar tolerance = Scalar(1e-6)) {
  if (sol_theta.channel != Channel::theta || sol_phi.channel != Channel::phi) {
    throw ChannelMismatch("coupled residual expects a theta solution and a phi solution");
  }
  detail::check_same_grid(sol_theta.xs, sol_phi.xs);
  using Complex = std::complex<Scalar>;
  SpinorSamples<Scalar> s;
  s.xs = sol_theta.xs;
  const auto n = s.xs.size();
  s.theta.resize(n);
  s.dtheta.resize(n);
  s.phi.resize(n);
  s.dphi.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar gt = std::exp(sol_theta.log_scale[i]);
    const Scalar gp = std::exp(sol_phi.log_scale[i]);
    s.theta[i] = Complex(sol_theta.y[i] * gt, 0);
    s.dtheta[i] = Complex(sol_theta.dy[i] * gt, 0);
    s.phi[i] = Complex(0, sol_phi.y[i] * gp);
    s.dphi[i] = Complex(0, sol_phi.dy[i] * gp);
  }
  return coupled_system_residual(setup, spec, s, tolerance);
}

}  // namespace rqhj
