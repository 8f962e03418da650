#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Core>

#include "rqhj/dirac_solver.hpp"
#include "rqhj/errors.hpp"
#include "rqhj/physics.hpp"

namespace rqhj {

/// Free real constants of the construction. (a, b) mix the theta pair, (d, e) the phi pair,
/// alpha/beta weight the two exponentials, k1/k2 scale the amplitudes.
template <typename Scalar>
struct MixingConstants {
  Scalar a{1};
  Scalar b{0};
  Scalar d{1};
  Scalar e{0};
  Scalar alpha_plus{1};
  Scalar alpha_minus{0};
  Scalar beta_plus{1};
  Scalar beta_minus{0};
  Scalar k1{1};
  Scalar k2{1};
};

enum class ActionKind { S0, Z0 };

inline ActionKind action_kind(Channel channel) { return channel == Channel::theta ? ActionKind::S0 : ActionKind::Z0; }

/// Reduced action hbar * arctan(theta / theta2), unwrapped, with closed-form derivatives.
template <typename Scalar>
struct ReducedAction {
  ActionKind kind{ActionKind::S0};
  Channel channel{Channel::theta};
  Scalar hbar{1};
  Series<Scalar> xs;
  Series<Scalar> value;
  Series<Scalar> d1;
  Series<Scalar> d2;
  Series<Scalar> d3;
  // Wronskian constant of (theta, theta2), i.e. the mixing coefficient times the pair's alpha
  Scalar alpha{0};
  Index branch_crossings{0};
  // largest gap between the quadrature prediction and the selected arctan branch
  Scalar quadrature_drift{0};
  // mixed solution theta = a theta1 + b theta2 and theta2, in stored units
  Series<Scalar> mixed;
  Series<Scalar> second;
};

namespace detail {

template <typename Scalar>
Scalar principal_angle(Scalar num, Scalar den) {
  if (den == 0) {
    return num >= 0 ? std::numbers::pi_v<Scalar> / 2 : -std::numbers::pi_v<Scalar> / 2;
  }
  return std::atan(num / den);
}

}  // namespace detail

template <typename Scalar>
ReducedAction<Scalar> build_reduced_action(const SolutionPair<Scalar>& pair, const MixingConstants<Scalar>& mix,
                                           const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec) {
  const Channel channel = pair.channel();
  const Scalar ca = channel == Channel::theta ? mix.a : mix.d;
  const Scalar cb = channel == Channel::theta ? mix.b : mix.e;
  if (ca == 0 && cb == 0) {
    throw DegenerateMix("mixed solution is identically zero");
  }
  if (ca == 0) {
    throw DegenerateMix("mixed solution is proportional to the second solution of the pair");
  }
  const auto& s1 = pair.first;
  const auto& s2 = pair.second;
  detail::check_same_grid(s1.xs, s2.xs);

  const auto n = s1.xs.size();
  const Scalar hbar = setup.hbar;
  const Scalar hc = setup.hbar * setup.c;

  ReducedAction<Scalar> act;
  act.kind = action_kind(channel);
  act.channel = channel;
  act.hbar = hbar;
  act.xs = s1.xs;
  act.alpha = ca * pair.wronskian_constant;
  act.value.resize(n);
  act.d1.resize(n);
  act.d2.resize(n);
  act.d3.resize(n);
  act.mixed = ca * s1.y + cb * s2.y;
  act.second = s2.y;

  for (Index i = 0; i < n; ++i) {
    const Scalar x = act.xs[i];
    const auto pot = evaluate_potential(spec, x);
    const Scalar u = channel_value(setup, pot.v, channel);
    const Scalar up = -pot.dv;
    const Scalar upp = -pot.d2v;
    const Scalar p = pot.dv / u;
    const Scalar k = channel_value(setup, pot.v, Channel::theta) * channel_value(setup, pot.v, Channel::phi) /
                     (hc * hc);

    const Scalar t = act.mixed[i];
    const Scalar dt = ca * s1.dy[i] + cb * s2.dy[i];
    const Scalar t2 = s2.y[i];
    const Scalar dt2 = s2.dy[i];
    const Scalar r2 = t * t + t2 * t2;
    if (!(r2 > 0)) {
      throw CommonZero("theta and theta2 vanish together at x = " + std::to_string(static_cast<double>(x)));
    }
    // second derivatives eliminated through the component equation
    const Scalar tt = -p * dt - k * t;
    const Scalar tt2 = -p * dt2 - k * t2;
    const Scalar q = 2 * (t * dt + t2 * dt2);
    const Scalar qp = 2 * (dt * dt + t * tt + dt2 * dt2 + t2 * tt2);

    const Scalar alpha_local = act.alpha * std::exp(-2 * s1.log_scale[i]);
    const Scalar w = alpha_local * u;
    const Scalar wp = alpha_local * up;
    const Scalar wpp = alpha_local * upp;
    const Scalar inv = 1 / r2;

    act.d1[i] = -hbar * w * inv;
    act.d2[i] = -hbar * (wp * inv - w * q * inv * inv);
    act.d3[i] = -hbar * (wpp * inv - wp * q * inv * inv - (wp * q + w * qp) * inv * inv + 2 * w * q * q * inv * inv * inv);
  }

  // Branch selection: a Hermite-corrected trapezoid step predicts the next value, the
  // pointwise arctan fixes it modulo pi*hbar.
  const Scalar pi_hbar = std::numbers::pi_v<Scalar> * hbar;
  act.value[0] = hbar * detail::principal_angle(act.mixed[0], act.second[0]);
  int last_sign = act.second[0] > 0 ? 1 : (act.second[0] < 0 ? -1 : 0);
  for (Index i = 1; i < n; ++i) {
    const Scalar h = act.xs[i] - act.xs[i - 1];
    const Scalar predicted =
        act.value[i - 1] + h / 2 * (act.d1[i - 1] + act.d1[i]) + h * h / 12 * (act.d2[i - 1] - act.d2[i]);
    const Scalar base = hbar * detail::principal_angle(act.mixed[i], act.second[i]);
    const Scalar turns = std::round((predicted - base) / pi_hbar);
    act.value[i] = base + turns * pi_hbar;
    act.quadrature_drift = std::max(act.quadrature_drift, std::abs(predicted - act.value[i]));

    const int sign = act.second[i] > 0 ? 1 : (act.second[i] < 0 ? -1 : 0);
    if (sign != 0) {
      if (last_sign != 0 && sign != last_sign) {
        ++act.branch_crossings;
      }
      last_sign = sign;
    }
  }
  return act;
}

/// Same action shifted by an additive constant (the equations only see derivatives).
template <typename Scalar>
ReducedAction<Scalar> shifted(ReducedAction<Scalar> action, Scalar offset) {
  action.value += offset;
  return action;
}

/// Amplitude k u^{1/2} |S'|^{-1/2} with its first two derivatives in closed form.
template <typename Scalar>
struct Amplitude {
  Channel channel{Channel::theta};
  Series<Scalar> xs;
  Series<Scalar> value;
  Series<Scalar> d1;
  Series<Scalar> d2;
  Eigen::Array<bool, Eigen::Dynamic, 1> defined;
};

template <typename Scalar>
Amplitude<Scalar> build_amplitude(const ReducedAction<Scalar>& action, const MixingConstants<Scalar>& mix,
                                  const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec) {
  const Scalar k = action.channel == Channel::theta ? mix.k1 : mix.k2;
  const auto n = action.xs.size();
  Amplitude<Scalar> amp;
  amp.channel = action.channel;
  amp.xs = action.xs;
  amp.value.resize(n);
  amp.d1.resize(n);
  amp.d2.resize(n);
  amp.defined.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto pot = evaluate_potential(spec, action.xs[i]);
    const Scalar u = channel_value(setup, pot.v, action.channel);
    const Scalar s1 = action.d1[i];
    if (!(u > 0) || s1 == 0) {
      amp.defined[i] = false;
      amp.value[i] = amp.d1[i] = amp.d2[i] = undefined<Scalar>();
      continue;
    }
    const Scalar up = -pot.dv;
    const Scalar upp = -pot.d2v;
    const Scalar s2 = action.d2[i];
    const Scalar s3 = action.d3[i];
    // L = (ln A)'
    const Scalar l = up / (2 * u) - s2 / (2 * s1);
    const Scalar lp = upp / (2 * u) - up * up / (2 * u * u) - s3 / (2 * s1) + s2 * s2 / (2 * s1 * s1);
    const Scalar a = k * std::sqrt(u) / std::sqrt(std::abs(s1));
    amp.defined[i] = true;
    amp.value[i] = a;
    amp.d1[i] = a * l;
    amp.d2[i] = a * (lp + l * l);
  }
  return amp;
}

template <typename Scalar>
struct SpinorReconstruction {
  SpinorSamples<Scalar> spinor;
  Series<Scalar> a;
  Series<Scalar> b;
  Eigen::Array<bool, Eigen::Dynamic, 1> a_defined;
  Eigen::Array<bool, Eigen::Dynamic, 1> b_defined;
};

namespace detail {

/// amp * (w_plus e^{iS/hbar} + w_minus e^{-iS/hbar}) and its derivative.
template <typename Scalar>
std::pair<std::complex<Scalar>, std::complex<Scalar>> spinor_row(Scalar amp, Scalar amp_d1, Scalar action,
                                                                 Scalar action_d1, Scalar hbar, Scalar w_plus,
                                                                 Scalar w_minus) {
  using Complex = std::complex<Scalar>;
  const Complex e = std::polar(Scalar(1), action / hbar);
  const Complex sum = w_plus * e + w_minus * std::conj(e);
  const Complex diff = w_plus * e - w_minus * std::conj(e);
  return {amp * sum, amp_d1 * sum + amp * Complex(0, action_d1 / hbar) * diff};
}

}  // namespace detail

template <typename Scalar>
SpinorReconstruction<Scalar> reconstruct_spinor(const ReducedAction<Scalar>& s0, const ReducedAction<Scalar>& z0,
                                                const Amplitude<Scalar>& amp_a, const Amplitude<Scalar>& amp_b,
                                                const MixingConstants<Scalar>& mix) {
  if (s0.kind != ActionKind::S0 || z0.kind != ActionKind::Z0) {
    throw ChannelMismatch("reconstruct_spinor expects (S0, Z0)");
  }
  detail::check_same_grid(s0.xs, z0.xs);
  detail::check_same_grid(s0.xs, amp_a.xs);
  detail::check_same_grid(s0.xs, amp_b.xs);
  using Complex = std::complex<Scalar>;
  const auto n = s0.xs.size();
  SpinorReconstruction<Scalar> out;
  out.spinor.xs = s0.xs;
  out.spinor.theta.resize(n);
  out.spinor.dtheta.resize(n);
  out.spinor.phi.resize(n);
  out.spinor.dphi.resize(n);
  out.a = amp_a.value;
  out.b = amp_b.value;
  out.a_defined = amp_a.defined;
  out.b_defined = amp_b.defined;
  const Complex nan(undefined<Scalar>(), undefined<Scalar>());
  for (Index i = 0; i < n; ++i) {
    if (amp_a.defined[i]) {
      std::tie(out.spinor.theta[i], out.spinor.dtheta[i]) = detail::spinor_row(
          amp_a.value[i], amp_a.d1[i], s0.value[i], s0.d1[i], s0.hbar, mix.alpha_plus, mix.alpha_minus);
    } else {
      out.spinor.theta[i] = out.spinor.dtheta[i] = nan;
    }
    if (amp_b.defined[i]) {
      std::tie(out.spinor.phi[i], out.spinor.dphi[i]) = detail::spinor_row(
          amp_b.value[i], amp_b.d1[i], z0.value[i], z0.d1[i], z0.hbar, mix.beta_plus, mix.beta_minus);
    } else {
      out.spinor.phi[i] = out.spinor.dphi[i] = nan;
    }
  }
  return out;
}

/// Lower-row constants that make the reconstructed spinor satisfy the first-order system.
template <typename Scalar>
struct LowerRowMatch {
  MixingConstants<Scalar> mix;
  Scalar z_offset{0};
  ReducedAction<Scalar> z0;
  Amplitude<Scalar> b;
};

/// Fixes (d, e, beta_+, beta_-, k2) and an additive constant of Z0 so that the lower
/// row of the reconstruction equals the phi generated from the upper row at x_start.
///
/// The upper row must not be a standing wave (alpha_+ != +-alpha_-), otherwise its
/// real and imaginary parts are dependent and no (d, e) exists.
template <typename Scalar>
LowerRowMatch<Scalar> match_lower_row(const ReducedAction<Scalar>& s0, const Amplitude<Scalar>& amp_a,
                                      const MixingConstants<Scalar>& mix, const SolutionPair<Scalar>& phi_pair,
                                      const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec) {
  using Complex = std::complex<Scalar>;
  if (s0.kind != ActionKind::S0 || phi_pair.channel() != Channel::phi) {
    throw ChannelMismatch("match_lower_row expects S0 and a phi-channel pair");
  }
  if (!amp_a.defined[0]) {
    throw DomainError("upper amplitude undefined at x_start");
  }
  const Scalar x0 = s0.xs[0];
  const auto [theta0, dtheta0] = detail::spinor_row(amp_a.value[0], amp_a.d1[0], s0.value[0], s0.d1[0], s0.hbar,
                                                    mix.alpha_plus, mix.alpha_minus);
  const Scalar v0 = evaluate_potential(spec, x0).v;
  const Scalar hc = setup.hbar * setup.c;
  const Complex phi0 = Complex(0, -hc) * dtheta0 / channel_value(setup, v0, Channel::theta);
  const Complex dphi0 = Complex(0, 1) * channel_value(setup, v0, Channel::phi) * theta0 / hc;

  // phi = c1 phi1 + c2 phi2 from the pair's values at x_start
  const Scalar y1 = phi_pair.first.y[0], dy1 = phi_pair.first.dy[0];
  const Scalar y2 = phi_pair.second.y[0], dy2 = phi_pair.second.dy[0];
  const Scalar det = y1 * dy2 - y2 * dy1;
  const Complex c1 = (dy2 * phi0 - y2 * dphi0) / det;
  const Complex c2 = (-dy1 * phi0 + y1 * dphi0) / det;
  if (std::abs(c1) == 0) {
    throw DegenerateMix("lower row is proportional to the second phi solution");
  }
  const Complex ratio = c2 / c1;
  if (std::abs(ratio.imag()) <= Scalar(1e-12) * std::max(Scalar(1), std::abs(ratio))) {
    throw DegenerateMix("upper row is a standing wave; lower row cannot be written with real constants");
  }

  LowerRowMatch<Scalar> out;
  out.mix = mix;
  out.mix.d = -1 / ratio.imag();
  out.mix.e = out.mix.d * ratio.real();
  out.mix.k2 = 1;
  out.mix.beta_minus = 0;
  out.mix.beta_plus = 1;

  out.z0 = build_reduced_action(phi_pair, out.mix, setup, spec);
  out.b = build_amplitude(out.z0, out.mix, setup, spec);
  if (!out.b.defined[0]) {
    throw DomainError("lower amplitude undefined at x_start (u_minus <= 0)");
  }
  // B e^{iZ/hbar} = kappa (phi2 + i phi) with kappa real
  const Complex basis(out.z0.second[0], out.z0.mixed[0]);
  const Complex kappa = out.b.value[0] * std::polar(Scalar(1), out.z0.value[0] / out.z0.hbar) / basis;
  const Complex tau = c1 / Complex(0, out.mix.d);
  out.mix.beta_plus = std::abs(tau) / std::abs(kappa);
  out.z_offset = setup.hbar * (std::arg(tau) - std::arg(kappa));
  out.z0 = shifted(out.z0, out.z_offset);
  return out;
}

/// Velocity from x' S0' = E - V - m0^2 c^4 / (E - V).
template <typename Scalar>
struct VelocityField {
  Series<Scalar> xs;
  Series<Scalar> velocity;
  // |x'| < c; false where the velocity is undefined
  Eigen::Array<bool, Eigen::Dynamic, 1> subluminal;
};

template <typename Scalar>
VelocityField<Scalar> velocity_field(const ReducedAction<Scalar>& action, const PhysicsSetup<Scalar>& setup,
                                     const PotentialSpec<Scalar>& spec) {
  const auto n = action.xs.size();
  VelocityField<Scalar> out;
  out.xs = action.xs;
  out.velocity.resize(n);
  out.subluminal.resize(n);
  const Scalar rest = setup.rest_energy();
  for (Index i = 0; i < n; ++i) {
    if (action.d1[i] == 0) {
      throw SingularMomentum("conjugate momentum vanishes at x = " + std::to_string(static_cast<double>(action.xs[i])));
    }
    const Scalar kinetic = setup.energy - evaluate_potential(spec, action.xs[i]).v;
    if (kinetic == 0) {
      out.velocity[i] = undefined<Scalar>();
      out.subluminal[i] = false;
      continue;
    }
    out.velocity[i] = (kinetic - rest * rest / kinetic) / action.d1[i];
    out.subluminal[i] = std::abs(out.velocity[i]) < setup.c;
  }
  return out;
}

}  // namespace rqhj
