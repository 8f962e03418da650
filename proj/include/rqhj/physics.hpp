#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rqhj/errors.hpp"
#include "rqhj/spline.hpp"

namespace rqhj {

using Index = Eigen::Index;

/// Column of samples on a grid.
template <typename Scalar>
using Series = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Physical constants and total energy (rest energy included).
template <typename Scalar>
struct PhysicsSetup {
  Scalar hbar{1};
  Scalar c{1};
  Scalar m0{1};
  Scalar energy{0};

  Scalar rest_energy() const { return m0 * c * c; }

  void validate() const {
    if (!(hbar > 0) || !(c > 0) || !(m0 > 0)) {
      throw DomainError("hbar, c and m0 must be positive");
    }
    if (!std::isfinite(static_cast<double>(rest_energy())) || !std::isfinite(static_cast<double>(energy))) {
      throw DomainError("rest energy m0*c^2 or E is not representable");
    }
  }
};

template <typename Scalar>
PhysicsSetup<Scalar> make_setup(Scalar hbar, Scalar c, Scalar m0, Scalar energy) {
  PhysicsSetup<Scalar> setup{hbar, c, m0, energy};
  setup.validate();
  return setup;
}

// Potential families. Each exposes V, dV/dx and d2V/dx2 in closed form.

template <typename Scalar>
struct ConstantPotential {
  Scalar v0{0};
};

/// V(x) = slope * x.
template <typename Scalar>
struct LinearPotential {
  Scalar slope{0};
};

/// V(x) = stiffness * (x - center)^2 / 2.
template <typename Scalar>
struct HarmonicPotential {
  Scalar stiffness{1};
  Scalar center{0};
};

template <typename Scalar>
struct TabulatedPotential {
  CubicSpline<Scalar> spline;
};

template <typename Scalar>
using PotentialSpec = std::variant<ConstantPotential<Scalar>, LinearPotential<Scalar>, HarmonicPotential<Scalar>,
                                   TabulatedPotential<Scalar>>;

template <typename Scalar>
struct PotentialSample {
  Scalar v;
  Scalar dv;
  Scalar d2v;
};

template <typename Scalar>
PotentialSample<Scalar> evaluate_potential(const PotentialSpec<Scalar>& spec, Scalar x) {
  struct Visitor {
    Scalar x;
    PotentialSample<Scalar> operator()(const ConstantPotential<Scalar>& p) const { return {p.v0, Scalar(0), Scalar(0)}; }
    PotentialSample<Scalar> operator()(const LinearPotential<Scalar>& p) const {
      return {p.slope * x, p.slope, Scalar(0)};
    }
    PotentialSample<Scalar> operator()(const HarmonicPotential<Scalar>& p) const {
      const Scalar dx = x - p.center;
      return {p.stiffness * dx * dx / 2, p.stiffness * dx, p.stiffness};
    }
    PotentialSample<Scalar> operator()(const TabulatedPotential<Scalar>& p) const {
      const auto s = p.spline(x);
      return {s.value, s.d1, s.d2};
    }
  };
  return std::visit(Visitor{x}, spec);
}

template <typename Scalar>
bool is_constant(const PotentialSpec<Scalar>& spec) {
  return std::holds_alternative<ConstantPotential<Scalar>>(spec);
}

template <typename Scalar>
std::string family_name(const PotentialSpec<Scalar>& spec) {
  constexpr const char* names[] = {"constant", "linear", "harmonic", "tabulated"};
  return names[spec.index()];
}

/// Uniform grid [x_start, x_end] with n_points samples, endpoints included.
template <typename Scalar>
struct Grid {
  Scalar x_start{0};
  Scalar x_end{1};
  Index n_points{16};

  void validate() const {
    if (!(x_end > x_start) || n_points < 16) {
      throw DomainError("grid requires x_end > x_start and n_points >= 16");
    }
  }

  Scalar spacing() const { return (x_end - x_start) / static_cast<Scalar>(n_points - 1); }
  Scalar length() const { return x_end - x_start; }

  Scalar at(Index i) const {
    if (i == n_points - 1) {
      return x_end;
    }
    return x_start + static_cast<Scalar>(i) * spacing();
  }

  Series<Scalar> points() const {
    Series<Scalar> xs(n_points);
    for (Index i = 0; i < n_points; ++i) {
      xs[i] = at(i);
    }
    return xs;
  }
};

template <typename Scalar>
Grid<Scalar> make_grid(Scalar x_start, Scalar x_end, Index n_points) {
  Grid<Scalar> grid{x_start, x_end, n_points};
  grid.validate();
  return grid;
}

/// theta is the upper spinor component (denominator u_plus), phi the lower one (u_minus).
enum class Channel { theta, phi };

inline const char* channel_function_name(Channel channel) {
  return channel == Channel::theta ? "u_plus" : "u_minus";
}

/// u+-(x) = E - V(x) +- m0 c^2.
template <typename Scalar>
Scalar channel_value(const PhysicsSetup<Scalar>& setup, Scalar v, Channel channel) {
  const Scalar kinetic = setup.energy - v;
  return channel == Channel::theta ? kinetic + setup.rest_energy() : kinetic - setup.rest_energy();
}

template <typename Scalar>
Scalar default_singular_threshold(const PhysicsSetup<Scalar>& setup) {
  return Scalar(1e-6) * setup.rest_energy();
}

template <typename Scalar>
struct ChannelFunctions {
  Series<Scalar> xs;
  Series<Scalar> u_plus;
  Series<Scalar> u_minus;
  // grid locations where |u| < eps, or where u changes sign between neighbours
  std::vector<Scalar> singular_plus;
  std::vector<Scalar> singular_minus;

  const std::vector<Scalar>& singular_points(Channel channel) const {
    return channel == Channel::theta ? singular_plus : singular_minus;
  }
  const Series<Scalar>& u(Channel channel) const { return channel == Channel::theta ? u_plus : u_minus; }
};

template <typename Scalar>
ChannelFunctions<Scalar> channel_functions(const PhysicsSetup<Scalar>& setup, const PotentialSpec<Scalar>& spec,
                                           const Grid<Scalar>& grid, Scalar eps_sing) {
  grid.validate();
  ChannelFunctions<Scalar> out;
  out.xs = grid.points();
  out.u_plus.resize(grid.n_points);
  out.u_minus.resize(grid.n_points);
  for (Index i = 0; i < grid.n_points; ++i) {
    const Scalar v = evaluate_potential(spec, out.xs[i]).v;
    out.u_plus[i] = channel_value(setup, v, Channel::theta);
    out.u_minus[i] = channel_value(setup, v, Channel::phi);
  }
  auto scan = [&](const Series<Scalar>& u, std::vector<Scalar>& hits) {
    for (Index i = 0; i < u.size(); ++i) {
      const bool small = std::abs(u[i]) < eps_sing;
      const bool crossing = i > 0 && ((u[i - 1] < 0 && u[i] > 0) || (u[i - 1] > 0 && u[i] < 0));
      if (small || crossing) {
        hits.push_back(out.xs[i]);
      }
    }
  };
  scan(out.u_plus, out.singular_plus);
  scan(out.u_minus, out.singular_minus);
  return out;
}

}  // namespace rqhj
