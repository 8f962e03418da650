#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "rqhj/errors.hpp"
#include "rqhj/physics.hpp"

namespace rqhj {

enum class EquationId {
  RQSHJE_spinless,
  RQSHJE_half_plus,
  RQSHJE_half_minus,
  amp_eq_16,
  amp_eq_17,
  phase_eq_18,
  phase_eq_19,
  nonrel_34,
  nonrel_35,
  dirac_10_11,
};

inline constexpr std::array<EquationId, 10> kAllEquations = {
    EquationId::RQSHJE_spinless, EquationId::RQSHJE_half_plus, EquationId::RQSHJE_half_minus,
    EquationId::amp_eq_16,       EquationId::amp_eq_17,        EquationId::phase_eq_18,
    EquationId::phase_eq_19,     EquationId::nonrel_34,        EquationId::nonrel_35,
    EquationId::dirac_10_11,
};

inline std::string_view to_string(EquationId id) {
  switch (id) {
    case EquationId::RQSHJE_spinless: return "RQSHJE_spinless";
    case EquationId::RQSHJE_half_plus: return "RQSHJE_half_plus";
    case EquationId::RQSHJE_half_minus: return "RQSHJE_half_minus";
    case EquationId::amp_eq_16: return "amp_eq_16";
    case EquationId::amp_eq_17: return "amp_eq_17";
    case EquationId::phase_eq_18: return "phase_eq_18";
    case EquationId::phase_eq_19: return "phase_eq_19";
    case EquationId::nonrel_34: return "nonrel_34";
    case EquationId::nonrel_35: return "nonrel_35";
    case EquationId::dirac_10_11: return "dirac_10_11";
  }
  return "unknown";
}

inline std::optional<EquationId> parse_equation_id(std::string_view name) {
  for (auto id : kAllEquations) {
    if (to_string(id) == name) {
      return id;
    }
  }
  return std::nullopt;
}

/// Pointwise contributions to a Hamilton-Jacobi residual, all in energy units.
template <typename Scalar>
struct TermBreakdown {
  Series<Scalar> kinetic;     // (1/2m0) S'^2
  Series<Scalar> schwarzian;  // -(hbar^2/4m0) {S, x}
  Series<Scalar> spin;        // spin term (zero for the spinless equation)
  Series<Scalar> potential;   // (1/2m0c^2)[m0^2c^4 - (E-V)^2], or V - E' in the limit equations
};

/// Residual series with norms. NaN samples mark points where the equation is undefined
/// and are excluded from the norms.
template <typename Scalar>
struct ResidualReport {
  EquationId equation_id{};
  Series<Scalar> xs;
  Series<Scalar> residual;
  Scalar linf{0};
  Scalar l2{0};
  Scalar scale{1};
  Scalar tolerance{1e-6};
  Index defined_samples{0};
  bool pass{false};
  std::optional<TermBreakdown<Scalar>> terms;
};

template <typename Scalar>
ResidualReport<Scalar> make_report(EquationId id, Series<Scalar> xs, Series<Scalar> residual, Scalar scale,
                                   Scalar tolerance) {
  if (xs.size() != residual.size()) {
    throw GridMismatch("residual and abscissae differ in length");
  }
  ResidualReport<Scalar> r;
  r.equation_id = id;
  r.scale = scale;
  r.tolerance = tolerance;
  Scalar sum_sq = 0;
  for (Index i = 0; i < residual.size(); ++i) {
    const Scalar v = residual[i];
    if (std::isnan(static_cast<double>(v))) {
      continue;
    }
    ++r.defined_samples;
    r.linf = std::max(r.linf, std::abs(v));
    sum_sq += v * v;
  }
  if (r.defined_samples > 0) {
    r.l2 = std::sqrt(sum_sq / static_cast<Scalar>(r.defined_samples));
  }
  r.pass = r.defined_samples > 0 && std::isfinite(static_cast<double>(r.linf)) && r.linf / scale <= tolerance;
  r.xs = std::move(xs);
  r.residual = std::move(residual);
  return r;
}

template <typename Scalar>
inline Scalar undefined() {
  return std::numeric_limits<Scalar>::quiet_NaN();
}

}  // namespace rqhj
