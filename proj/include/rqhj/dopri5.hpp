#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "rqhj/errors.hpp"
#include "rqhj/physics.hpp"

namespace rqhj {

template <typename Scalar>
struct IntegrationOptions {
  Scalar rel_tol{1e-10};
  Scalar abs_tol{1e-10};
  // > 0 switches to fixed steps of grid spacing / fixed_substeps with no error control.
  int fixed_substeps{0};
  // When max|y| exceeds this value the state is divided by max|y| and the log of the
  // factor is recorded. Zero disables rescaling.
  Scalar rescale_threshold{1e100};
  Index max_steps{20'000'000};
};

template <typename Scalar>
struct IntegratorStats {
  Index steps{0};
  Index rejected{0};
  Scalar max_local_error_estimate{0};
};

template <typename Scalar, int Dim>
struct GridTrajectory {
  Eigen::Matrix<Scalar, Dim, Eigen::Dynamic> states;
  // true state = states.col(i) * exp(log_scale[i])
  Series<Scalar> log_scale;
  IntegratorStats<Scalar> stats;
};

/// Dormand-Prince 5(4) integrator sampling the solution on a uniform grid.
///
/// Adaptive mode places samples with the 4th-order continuous extension; fixed
/// mode lands on every grid point and keeps the 5th-order propagated solution.
template <typename Scalar, int Dim>
class DormandPrince {
 public:
  using State = Eigen::Matrix<Scalar, Dim, 1>;

  explicit DormandPrince(IntegrationOptions<Scalar> options) : options_(options) {}

  template <typename Rhs>
  GridTrajectory<Scalar, Dim> integrate(Rhs&& rhs, const Grid<Scalar>& grid, const State& y0) const {
    grid.validate();
    GridTrajectory<Scalar, Dim> out;
    out.states.resize(Dim, grid.n_points);
    out.log_scale = Series<Scalar>::Zero(grid.n_points);
    out.states.col(0) = y0;
    if (options_.fixed_substeps > 0) {
      integrate_fixed(rhs, grid, y0, out);
    } else {
      integrate_adaptive(rhs, grid, y0, out);
    }
    return out;
  }

 private:
  struct Step {
    State y_new;
    State k[7];
    State error;
  };

  template <typename Rhs>
  Step attempt(Rhs& rhs, Scalar x, const State& y, const State& k1, Scalar h) const {
    Step s;
    s.k[0] = k1;
    s.k[1] = rhs(x + h / 5, State(y + h * (k1 / 5)));
    s.k[2] = rhs(x + 3 * h / 10, State(y + h * (Scalar(3) / 40 * k1 + Scalar(9) / 40 * s.k[1])));
    s.k[3] = rhs(x + 4 * h / 5,
                 State(y + h * (Scalar(44) / 45 * k1 - Scalar(56) / 15 * s.k[1] + Scalar(32) / 9 * s.k[2])));
    s.k[4] = rhs(x + 8 * h / 9, State(y + h * (Scalar(19372) / 6561 * k1 - Scalar(25360) / 2187 * s.k[1] +
                                                Scalar(64448) / 6561 * s.k[2] - Scalar(212) / 729 * s.k[3])));
    s.k[5] = rhs(x + h, State(y + h * (Scalar(9017) / 3168 * k1 - Scalar(355) / 33 * s.k[1] +
                                       Scalar(46732) / 5247 * s.k[2] + Scalar(49) / 176 * s.k[3] -
                                       Scalar(5103) / 18656 * s.k[4])));
    s.y_new = y + h * (Scalar(35) / 384 * k1 + Scalar(500) / 1113 * s.k[2] + Scalar(125) / 192 * s.k[3] -
                       Scalar(2187) / 6784 * s.k[4] + Scalar(11) / 84 * s.k[5]);
    s.k[6] = rhs(x + h, s.y_new);
    s.error = h * (Scalar(71) / 57600 * k1 - Scalar(71) / 16695 * s.k[2] + Scalar(71) / 1920 * s.k[3] -
                   Scalar(17253) / 339200 * s.k[4] + Scalar(22) / 525 * s.k[5] - Scalar(1) / 40 * s.k[6]);
    return s;
  }

  // Hairer's dense output for DOPRI5, theta in [0, 1].
  static State interpolate(const State& y, const Step& s, Scalar h, Scalar theta) {
    const State diff = s.y_new - y;
    const State bspl = h * s.k[0] - diff;
    const State r4 = diff - h * s.k[6] - bspl;
    const State r5 =
        h * (Scalar(-12715105075.0) / Scalar(11282082432.0) * s.k[0] +
             Scalar(87487479700.0) / Scalar(32700410799.0) * s.k[2] -
             Scalar(10690763975.0) / Scalar(1880347072.0) * s.k[3] +
             Scalar(701980252875.0) / Scalar(199316789632.0) * s.k[4] -
             Scalar(1453857185.0) / Scalar(822651844.0) * s.k[5] + Scalar(69997945.0) / Scalar(29380423.0) * s.k[6]);
    const Scalar t1 = 1 - theta;
    return y + theta * (diff + t1 * (bspl + theta * (r4 + t1 * r5)));
  }

  Scalar error_norm(const Step& s, const State& y) const {
    Scalar worst = 0;
    for (Index i = 0; i < Dim; ++i) {
      const Scalar sc = options_.abs_tol + options_.rel_tol * std::max(std::abs(y[i]), std::abs(s.y_new[i]));
      worst = std::max(worst, std::abs(s.error[i]) / sc);
    }
    return worst;
  }

  template <typename Rhs>
  void maybe_rescale(Rhs& rhs, Scalar x, State& y, State& k1, Scalar& log_scale) const {
    if (options_.rescale_threshold <= 0) {
      return;
    }
    const Scalar peak = y.cwiseAbs().maxCoeff();
    if (peak > options_.rescale_threshold) {
      y /= peak;
      k1 = rhs(x, y);
      log_scale += std::log(peak);
    }
  }

  template <typename Rhs>
  Scalar initial_step(Rhs& rhs, Scalar x, const State& y, const State& f0, Scalar span) const {
    const State sc = (options_.abs_tol + options_.rel_tol * y.cwiseAbs().array()).matrix();
    const Scalar d0 = (y.cwiseQuotient(sc)).cwiseAbs().maxCoeff();
    const Scalar d1 = (f0.cwiseQuotient(sc)).cwiseAbs().maxCoeff();
    Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
    h0 = std::min(h0, span);
    const State f1 = rhs(x + h0, State(y + h0 * f0));
    const Scalar d2 = ((f1 - f0).cwiseQuotient(sc)).cwiseAbs().maxCoeff() / h0;
    const Scalar dmax = std::max(d1, d2);
    const Scalar h1 = dmax <= Scalar(1e-15) ? std::max(Scalar(1e-6), h0 * Scalar(1e-3))
                                            : std::pow(Scalar(0.01) / dmax, Scalar(1) / 5);
    return std::min({100 * h0, h1, span});
  }

  template <typename Rhs>
  void integrate_adaptive(Rhs& rhs, const Grid<Scalar>& grid, State y, GridTrajectory<Scalar, Dim>& out) const {
    const Scalar span = grid.length();
    const Scalar min_step = span * Scalar(1e-12);
    Scalar x = grid.x_start;
    Scalar log_scale = 0;
    State k1 = rhs(x, y);
    Scalar h = initial_step(rhs, x, y, k1, span);
    Index next = 1;
    auto& stats = out.stats;

    while (next < grid.n_points) {
      if (stats.steps + stats.rejected > options_.max_steps) {
        throw StiffnessFailure("step budget exhausted");
      }
      const Scalar remaining = grid.x_end - x;
      if (h >= remaining || remaining - h < min_step) {
        h = remaining;
      }
      const Step s = attempt(rhs, x, y, k1, h);
      const Scalar err = error_norm(s, y);
      if (!std::isfinite(static_cast<double>(err))) {
        h /= 10;
        ++stats.rejected;
        if (h < min_step) {
          throw StiffnessFailure("non-finite state encountered");
        }
        continue;
      }
      if (err <= 1) {
        const Scalar x_new = (h == remaining) ? grid.x_end : x + h;
        while (next < grid.n_points && grid.at(next) <= x_new) {
          const Scalar xg = grid.at(next);
          out.states.col(next) = (xg == x_new) ? s.y_new : interpolate(y, s, h, (xg - x) / h);
          out.log_scale[next] = log_scale;
          ++next;
        }
        stats.max_local_error_estimate = std::max(stats.max_local_error_estimate, s.error.cwiseAbs().maxCoeff());
        ++stats.steps;
        x = x_new;
        y = s.y_new;
        k1 = s.k[6];
        maybe_rescale(rhs, x, y, k1, log_scale);
      } else {
        ++stats.rejected;
      }
      const Scalar factor = err == 0 ? Scalar(5) : Scalar(0.9) * std::pow(err, Scalar(-0.2));
      h *= std::clamp(factor, Scalar(0.2), Scalar(5));
      if (h < min_step && next < grid.n_points) {
        throw StiffnessFailure("step size collapsed below " + std::to_string(static_cast<double>(min_step)));
      }
    }
  }

  template <typename Rhs>
  void integrate_fixed(Rhs& rhs, const Grid<Scalar>& grid, State y, GridTrajectory<Scalar, Dim>& out) const {
    Scalar log_scale = 0;
    State k1 = rhs(grid.x_start, y);
    for (Index i = 1; i < grid.n_points; ++i) {
      const Scalar left = grid.at(i - 1);
      const Scalar h = (grid.at(i) - left) / options_.fixed_substeps;
      for (int j = 0; j < options_.fixed_substeps; ++j) {
        const Scalar x = left + static_cast<Scalar>(j) * h;
        const Step s = attempt(rhs, x, y, k1, h);
        out.stats.max_local_error_estimate =
            std::max(out.stats.max_local_error_estimate, s.error.cwiseAbs().maxCoeff());
        ++out.stats.steps;
        y = s.y_new;
        k1 = s.k[6];
      }
      if (!y.allFinite()) {
        throw StiffnessFailure("non-finite state in fixed-step integration");
      }
      out.states.col(i) = y;
      out.log_scale[i] = log_scale;
      maybe_rescale(rhs, grid.at(i), y, k1, log_scale);
    }
  }

  IntegrationOptions<Scalar> options_;
};

}  // namespace rqhj
