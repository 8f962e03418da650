#pragma once

#include <cmath>
#include <future>
#include <vector>

#include <Eigen/Core>

#include "rqhj/dirac_solver.hpp"
#include "rqhj/errors.hpp"
#include "rqhj/physics.hpp"
#include "rqhj/reduced_action.hpp"
#include "rqhj/residual.hpp"

namespace rqhj {

/// Spin projection m_s = +1/2 pairs with S0 and u_plus, m_s = -1/2 with Z0 and u_minus.
enum class SpinProjection { plus, minus };

inline Channel channel_of(SpinProjection projection) {
  return projection == SpinProjection::plus ? Channel::theta : Channel::phi;
}

/// Schwarzian derivative in the sign convention (3/2)(f''/f')^2 - f'''/f'.
template <typename Scalar>
Series<Scalar> schwarzian(const ReducedAction<Scalar>& action) {
  if ((action.d1 == 0).any()) {
    throw VanishingFirstDerivative("reduced action has a stationary point on the grid");
  }
  const Series<Scalar> ratio = action.d2 / action.d1;
  return Scalar(1.5) * ratio.square() - action.d3 / action.d1;
}

/// (hbar^2/2m0) u^{1/2} (u^{-1/2})'' expanded as (hbar^2/2m0)[(3/4)(u'/u)^2 - (1/2)u''/u].
template <typename Scalar>
Scalar spin_term(const PhysicsSetup<Scalar>& setup, Scalar u, Scalar du, Scalar d2u) {
  const Scalar lead = setup.hbar * setup.hbar / (2 * setup.m0);
  const Scalar g = du / u;
  return lead * (Scalar(0.75) * g * g - Scalar(0.5) * d2u / u);
}

template <typename Scalar>
Scalar spin_term(const PhysicsSetup<Scalar>& setup, const PotentialSample<Scalar>& pot, Channel channel) {
  return spin_term(setup, channel_value(setup, pot.v, channel), -pot.dv, -pot.d2v);
}

template <typename Scalar>
struct SpinTermSeries {
  Series<Scalar> xs;
  Series<Scalar> term_plus;
  Series<Scalar> term_minus;
  Eigen::Array<bool, Eigen::Dynamic, 1> plus_defined;
  Eigen::Array<bool, Eigen::Dynamic, 1> minus_defined;
};

/// Samples are undefined (NaN) where the channel function is not positive.
template <typename Scalar>
SpinTermSeries<Scalar> spin_terms(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                  const Grid<Scalar>& grid) {
  grid.validate();
  SpinTermSeries<Scalar> out;
  out.xs = grid.points();
  const auto n = grid.n_points;
  out.term_plus.resize(n);
  out.term_minus.resize(n);
  out.plus_defined.resize(n);
  out.minus_defined.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto pot = evaluate_potential(spec, out.xs[i]);
    const Scalar up = channel_value(setup, pot.v, Channel::theta);
    const Scalar um = channel_value(setup, pot.v, Channel::phi);
    out.plus_defined[i] = up > 0;
    out.minus_defined[i] = um > 0;
    out.term_plus[i] = up > 0 ? spin_term(setup, pot, Channel::theta) : undefined<Scalar>();
    out.term_minus[i] = um > 0 ? spin_term(setup, pot, Channel::phi) : undefined<Scalar>();
  }
  return out;
}

/// Cross-check of the spin term: five-point second difference of u^{-1/2} with step h.
template <typename Scalar>
Series<Scalar> spin_term_finite_difference(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                           const Series<Scalar>& xs, Channel channel, Scalar h) {
  auto g = [&](Scalar x) {
    return Scalar(1) / std::sqrt(channel_value(setup, evaluate_potential(spec, x).v, channel));
  };
  const Scalar lead = setup.hbar * setup.hbar / (2 * setup.m0);
  Series<Scalar> out(xs.size());
  for (Index i = 0; i < xs.size(); ++i) {
    const Scalar x = xs[i];
    const Scalar u = channel_value(setup, evaluate_potential(spec, x).v, channel);
    if (!(u > 0)) {
      out[i] = undefined<Scalar>();
      continue;
    }
    const Scalar g2 = (-g(x + 2 * h) + 16 * g(x + h) - 30 * g(x) + 16 * g(x - h) - g(x - 2 * h)) / (12 * h * h);
    out[i] = lead * std::sqrt(u) * g2;
  }
  return out;
}

/// Term-by-term breakdown of the spin-1/2 equation for the action's own channel.
template <typename Scalar>
TermBreakdown<Scalar> hj_terms(const ReducedAction<Scalar>& action, const PhysicsSetup<Scalar>& setup,
                               const PotentialSpec<Scalar>& spec) {
  const auto n = action.xs.size();
  const Scalar m0 = setup.m0;
  const Scalar hbar_sq = setup.hbar * setup.hbar;
  const Scalar rest = setup.rest_energy();
  TermBreakdown<Scalar> t;
  t.kinetic = action.d1.square() / (2 * m0);
  t.schwarzian = -(hbar_sq / (4 * m0)) * schwarzian(action);
  t.spin.resize(n);
  t.potential.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto pot = evaluate_potential(spec, action.xs[i]);
    t.spin[i] = spin_term(setup, pot, action.channel);
    // m0^2c^4 - (E-V)^2 = -u_+ u_-, kept in product form
    t.potential[i] = -channel_value(setup, pot.v, Channel::theta) * channel_value(setup, pot.v, Channel::phi) /
                     (2 * rest);
  }
  return t;
}

template <typename Scalar>
ResidualReport<Scalar> residual_rqshje_half(const ReducedAction<Scalar>& action, const PhysicsSetup<Scalar>& setup,
                                            const PotentialSpec<Scalar>& spec, SpinProjection projection,
                                            Scalar tolerance = Scalar(1e-6)) {
  if (channel_of(projection) != action.channel) {
    throw ChannelMismatch("S0 pairs with the m_s = +1/2 equation and Z0 with m_s = -1/2");
  }
  auto terms = hj_terms(action, setup, spec);
  Series<Scalar> base = terms.kinetic + terms.schwarzian + terms.potential;
  Series<Scalar> res = base + terms.spin;
  const auto id = projection == SpinProjection::plus ? EquationId::RQSHJE_half_plus : EquationId::RQSHJE_half_minus;
  auto report = make_report(id, action.xs, std::move(res), setup.rest_energy(), tolerance);
  report.terms = std::move(terms);
  return report;
}

/// Spinless relativistic equation evaluated on the same action (spin term left out).
template <typename Scalar>
ResidualReport<Scalar> residual_rqshje_spinless(const ReducedAction<Scalar>& action,
                                                const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                                Scalar tolerance = Scalar(1e-6)) {
  auto terms = hj_terms(action, setup, spec);
  Series<Scalar> res = terms.kinetic + terms.schwarzian + terms.potential;
  terms.spin.setZero();
  auto report = make_report(EquationId::RQSHJE_spinless, action.xs, std::move(res), setup.rest_energy(), tolerance);
  report.terms = std::move(terms);
  return report;
}

/// Real-part (amplitude) and imaginary-part (phase) equations of the component ODE
/// after the amplitude/phase substitution, both in energy units:
///   real:  [hbar^2c^2 A''/A - c^2 S'^2 + hbar^2c^2 p A'/A + u_+u_-] / (2 m0 c^2)
///   imag:  (hbar / 2m0) [S'' + 2 (A'/A) S' + p S']
/// with p = V'/u for the action's channel.
template <typename Scalar>
std::vector<ResidualReport<Scalar>> residual_amplitude_equations(const ReducedAction<Scalar>& action,
                                                                 const Amplitude<Scalar>& amplitude,
                                                                 const PhysicsSetup<Scalar>& setup,
                                                                 const PotentialSpec<Scalar>& spec,
                                                                 Scalar tolerance = Scalar(1e-6)) {
  if (amplitude.channel != action.channel) {
    throw ChannelMismatch("amplitude and action belong to different channels");
  }
  detail::check_same_grid(action.xs, amplitude.xs);
  const auto n = action.xs.size();
  const Scalar c2 = setup.c * setup.c;
  const Scalar hbar_sq_c2 = setup.hbar * setup.hbar * c2;
  const Scalar rest = setup.rest_energy();
  Series<Scalar> real_part(n);
  Series<Scalar> imag_part(n);
  for (Index i = 0; i < n; ++i) {
    if (!amplitude.defined[i]) {
      real_part[i] = imag_part[i] = undefined<Scalar>();
      continue;
    }
    const auto pot = evaluate_potential(spec, action.xs[i]);
    const Scalar up = channel_value(setup, pot.v, Channel::theta);
    const Scalar um = channel_value(setup, pot.v, Channel::phi);
    const Scalar p = pot.dv / (action.channel == Channel::theta ? up : um);
    const Scalar ratio1 = amplitude.d1[i] / amplitude.value[i];
    const Scalar ratio2 = amplitude.d2[i] / amplitude.value[i];
    const Scalar s1 = action.d1[i];
    real_part[i] = (hbar_sq_c2 * ratio2 - c2 * s1 * s1 + hbar_sq_c2 * p * ratio1 + up * um) / (2 * rest);
    imag_part[i] = setup.hbar / (2 * setup.m0) * (action.d2[i] + 2 * ratio1 * s1 + p * s1);
  }
  const bool theta = action.channel == Channel::theta;
  std::vector<ResidualReport<Scalar>> out;
  out.push_back(make_report(theta ? EquationId::amp_eq_16 : EquationId::amp_eq_17, action.xs, std::move(real_part),
                            rest, tolerance));
  out.push_back(make_report(theta ? EquationId::phase_eq_18 : EquationId::phase_eq_19, action.xs,
                            std::move(imag_part), rest, tolerance));
  return out;
}

/// Least-squares exponent q in y ~ C x^q.
template <typename Scalar>
Scalar fit_power_law(const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
  const auto n = static_cast<Scalar>(x.size());
  Scalar sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Scalar lx = std::log(x[i]);
    const Scalar ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

template <typename Scalar>
struct NonrelativisticPoint {
  Scalar c{1};
  PhysicsSetup<Scalar> setup;
  ResidualReport<Scalar> eq34;  // on S0
  ResidualReport<Scalar> eq35;  // on Z0
  // max |extra term of the limit equation - lower spin term| / max |lower spin term|
  Scalar extra_term_rel_diff{0};
};

template <typename Scalar>
struct NonrelativisticStudy {
  std::vector<NonrelativisticPoint<Scalar>> points;
  Scalar decay_exponent_34{0};
  Scalar decay_exponent_35{0};
  bool monotone_34{false};
  bool monotone_35{false};
};

namespace detail {

template <typename Scalar>
NonrelativisticPoint<Scalar> nonrelativistic_point(const PotentialSpec<Scalar>& spec, const Grid<Scalar>& grid,
                                                   Scalar e_prime, Scalar c, Scalar hbar, Scalar m0,
                                                   const MixingConstants<Scalar>& mix,
                                                   const SolverOptions<Scalar>& options, Scalar tolerance) {
  NonrelativisticPoint<Scalar> pt;
  pt.c = c;
  pt.setup = make_setup(hbar, c, m0, e_prime + m0 * c * c);
  const auto& setup = pt.setup;
  const auto s0 = build_reduced_action(solve_pair(setup, spec, grid, Channel::theta, options), mix, setup, spec);
  const auto z0 = build_reduced_action(solve_pair(setup, spec, grid, Channel::phi, options), mix, setup, spec);

  const auto n = grid.n_points;
  const Scalar lead = hbar * hbar / (2 * m0);
  Series<Scalar> r34(n), r35(n);
  const Series<Scalar> sch_s = schwarzian(s0);
  const Series<Scalar> sch_z = schwarzian(z0);
  Scalar worst_diff = 0, worst_spin = 0;
  for (Index i = 0; i < n; ++i) {
    const auto pot = evaluate_potential(spec, s0.xs[i]);
    const Scalar classical = pot.v - e_prime;
    r34[i] = s0.d1[i] * s0.d1[i] / (2 * m0) - lead / 2 * sch_s[i] + classical;
    const Scalar w = e_prime - pot.v;
    const Scalar extra = w != 0 ? spin_term(setup, w, -pot.dv, -pot.d2v) : undefined<Scalar>();
    r35[i] = z0.d1[i] * z0.d1[i] / (2 * m0) - lead / 2 * sch_z[i] + extra + classical;
    const Scalar spin_minus = spin_term(setup, pot, Channel::phi);
    if (std::isfinite(static_cast<double>(extra))) {
      worst_diff = std::max(worst_diff, std::abs(extra - spin_minus));
    }
    worst_spin = std::max(worst_spin, std::abs(spin_minus));
  }
  pt.extra_term_rel_diff = worst_spin > 0 ? worst_diff / worst_spin : worst_diff;
  pt.eq34 = make_report(EquationId::nonrel_34, s0.xs, std::move(r34), setup.rest_energy(), tolerance);
  pt.eq35 = make_report(EquationId::nonrel_35, z0.xs, std::move(r35), setup.rest_energy(), tolerance);
  return pt;
}

}  // namespace detail

/// Sweeps c at fixed E' = E - m0 c^2 and evaluates the limit equations on S0 and Z0.
/// Points are computed concurrently and returned in input order.
template <typename Scalar>
NonrelativisticStudy<Scalar> nonrelativistic_limit_study(const PotentialSpec<Scalar>& spec, const Grid<Scalar>& grid,
                                                         Scalar e_prime, const std::vector<Scalar>& c_values,
                                                         Scalar hbar = 1, Scalar m0 = 1,
                                                         const MixingConstants<Scalar>& mix = {},
                                                         const SolverOptions<Scalar>& options = {},
                                                         Scalar tolerance = Scalar(1e-6)) {
  for (Scalar c : c_values) {
    if (!(c > 0)) {
      throw DomainError("speed of light values must be positive");
    }
  }
  std::vector<std::future<NonrelativisticPoint<Scalar>>> jobs;
  for (Scalar c : c_values) {
    jobs.push_back(std::async(std::launch::async, [&, c] {
      return detail::nonrelativistic_point(spec, grid, e_prime, c, hbar, m0, mix, options, tolerance);
    }));
  }
  NonrelativisticStudy<Scalar> study;
  for (auto& job : jobs) {
    study.points.push_back(job.get());
  }
  std::vector<Scalar> cs, l34, l35;
  for (const auto& pt : study.points) {
    cs.push_back(pt.c);
    l34.push_back(pt.eq34.linf);
    l35.push_back(pt.eq35.linf);
  }
  auto strictly_decreasing = [](const std::vector<Scalar>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] < v[i - 1])) {
        return false;
      }
    }
    return v.size() >= 2;
  };
  study.monotone_34 = strictly_decreasing(l34);
  study.monotone_35 = strictly_decreasing(l35);
  if (cs.size() >= 2) {
    study.decay_exponent_34 = -fit_power_law(cs, l34);
    study.decay_exponent_35 = -fit_power_law(cs, l35);
  }
  return study;
}

}  // namespace rqhj
