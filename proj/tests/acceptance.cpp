// One line per acceptance criterion; exit status is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "rqhj/rqhj.hpp"

using namespace rqhj;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ReducedAction<double> action_for(const PhysicsSetup<double>& setup, const PotentialSpec<double>& spec,
                                 const Grid<double>& grid, Channel ch, const MixingConstants<double>& mix = {},
                                 const SolverOptions<double>& opt = {}) {
  return build_reduced_action(solve_pair(setup, spec, grid, ch, opt), mix, setup, spec);
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    sx += std::log(h[i]);
    sy += std::log(e[i]);
    sxx += std::log(h[i]) * std::log(h[i]);
    sxy += std::log(h[i]) * std::log(e[i]);
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Verdict closed_form_solver() {
  const auto setup = make_setup(1.0, 1.0, 1.0, std::sqrt(2.0));
  const auto grid = make_grid(0.0, 2 * kPi, 4096);
  const PotentialSpec<double> spec = ConstantPotential<double>{0.0};
  const auto c = solve_component(setup, spec, grid, Channel::theta, {1.0, 0.0});
  const auto s = solve_component(setup, spec, grid, Channel::theta, {0.0, 1.0});
  const double err = std::max((c.y - c.xs.cos()).abs().maxCoeff(), (s.y - s.xs.sin()).abs().maxCoeff());
  return {err <= 1e-8, fmt("Linf vs cos/sin = %.3g (<= 1e-8)", err)};
}

Verdict wronskian_identity() {
  const auto setup = make_setup(1.0, 1.0, 1.0, 3.0);
  const auto grid = make_grid(0.0, 4.0, 1024);
  const std::vector<PotentialSpec<double>> specs = {ConstantPotential<double>{0.5}, LinearPotential<double>{0.25},
                                                    HarmonicPotential<double>{0.3, 2.0}};
  double worst = 0;
  for (const auto& spec : specs) {
    for (auto ch : {Channel::theta, Channel::phi}) {
      worst = std::max(worst, solve_pair(setup, spec, grid, ch).wronskian_spread);
    }
  }
  return {worst <= 1e-6, fmt("max spread of W/u over 3 families x 2 channels = %.3g (<= 1e-6)", worst)};
}

Verdict central_theorem() {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> margin(0.5, 3.0);
  const double x0 = 0.0, x1 = 2.0;
  const auto grid = make_grid(x0, x1, 512);
  double worst = 0;
  int passed = 0, total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double c0 = unit(rng), c1 = unit(rng), c2 = 0.5 * unit(rng), c3 = 0.25 * unit(rng);
    auto v = [&](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); };
    std::vector<double> xs, vs;
    double vmax = -1e300;
    for (int i = 0; i < 21; ++i) {
      xs.push_back(x0 + (x1 - x0) * i / 20);
      vs.push_back(v(xs.back()));
    }
    for (double x = x0; x <= x1; x += 1e-3) {
      vmax = std::max(vmax, v(x));
    }
    const PotentialSpec<double> spec = TabulatedPotential<double>{CubicSpline<double>(xs, vs)};
    const auto setup = make_setup(1.0, 1.0, 1.0, vmax + 1.0 + margin(rng));
    MixingConstants<double> mix;
    mix.a = (unit(rng) < 0 ? -1 : 1) * (0.2 + std::abs(unit(rng)));
    mix.b = 2 * unit(rng);
    mix.d = (unit(rng) < 0 ? -1 : 1) * (0.2 + std::abs(unit(rng)));
    mix.e = 2 * unit(rng);
    for (auto projection : {SpinProjection::plus, SpinProjection::minus}) {
      const auto act = action_for(setup, spec, grid, channel_of(projection), mix);
      const auto report = residual_rqshje_half(act, setup, spec, projection);
      const double rel = report.linf / setup.rest_energy();
      worst = std::max(worst, rel);
      ++total;
      passed += report.pass && rel <= 1e-6;
    }
  }

  // refinement in fixed-step mode: one step per grid interval
  const auto setup = make_setup(1.0, 1.0, 1.0, 3.0);
  const PotentialSpec<double> spec = HarmonicPotential<double>{0.3, 1.0};
  SolverOptions<double> opt;
  opt.fixed_substeps = 1;
  std::vector<double> hs, errs;
  for (Index n : {129, 257, 513}) {
    const auto g = make_grid(0.0, 4.0, n);
    const auto act = action_for(setup, spec, g, Channel::theta, {.a = 1.0, .b = 0.5}, opt);
    hs.push_back(g.spacing());
    errs.push_back(residual_rqshje_half(act, setup, spec, SpinProjection::plus).linf);
  }
  const double order = loglog_slope(hs, errs);
  const bool ok = passed == total && std::abs(order - 5.0) <= 0.5;
  return {ok, fmt("%d/%d random cubic cases pass, worst Linf/m0c^2 = %.3g (<= 1e-6); fixed-step refinement order %.2f "
                  "(5 +- 0.5)",
                  passed, total, worst, order)};
}

Verdict spin_term_laws() {
  const auto setup = make_setup(0.7, 1.0, 1.3, 5.0);
  const auto grid = make_grid(0.0, 4.0, 256);
  const auto constant = spin_terms(setup, PotentialSpec<double>{ConstantPotential<double>{0.4}}, grid);
  const bool zero = (constant.term_plus == 0.0).all() && (constant.term_minus == 0.0).all();

  const double lambda = 0.25;
  const PotentialSpec<double> linear = LinearPotential<double>{lambda};
  const auto lin = spin_terms(setup, linear, grid);
  double law = 0;
  for (Index i = 0; i < grid.n_points; ++i) {
    const double x = lin.xs[i];
    const double lead = setup.hbar * setup.hbar / (2 * setup.m0) * 0.75 * lambda * lambda;
    const double up = 5.0 - lambda * x + 1.3, um = 5.0 - lambda * x - 1.3;
    law = std::max(law, std::abs(lin.term_plus[i] / (lead / (up * up)) - 1));
    law = std::max(law, std::abs(lin.term_minus[i] / (lead / (um * um)) - 1));
  }

  double decomposition = 0;
  for (auto projection : {SpinProjection::plus, SpinProjection::minus}) {
    const auto ch = channel_of(projection);
    const auto act = action_for(setup, linear, grid, ch, {.a = 1.0, .b = 0.3, .d = 1.0, .e = -0.2});
    const auto half = residual_rqshje_half(act, setup, linear, projection);
    const auto spinless = residual_rqshje_spinless(act, setup, linear);
    const Series<double>& spin = ch == Channel::theta ? lin.term_plus : lin.term_minus;
    decomposition = std::max(decomposition, ((half.residual - spinless.residual - spin).abs() / spin.abs()).maxCoeff());
  }
  return {zero && law <= 1e-8 && decomposition <= 1e-8,
          fmt("constant-V spin terms exactly zero: %s; linear law rel err %.3g (<= 1e-8); "
              "|(half - spinless) - spin|/|spin| = %.3g (<= 1e-8)",
              zero ? "yes" : "no", law, decomposition)};
}

Verdict dirac_closure() {
  struct Case {
    const char* name;
    PhysicsSetup<double> setup;
    PotentialSpec<double> spec;
    Grid<double> grid;
  };
  const std::vector<Case> cases = {
      {"constant", make_setup(1.0, 1.0, 1.0, std::sqrt(2.0)), ConstantPotential<double>{0.0}, make_grid(0.0, 6.0, 512)},
      {"linear", make_setup(1.0, 1.0, 1.0, 3.0), LinearPotential<double>{0.25}, make_grid(0.0, 4.0, 800)},
      {"harmonic", make_setup(1.0, 1.0, 1.0, 4.0), HarmonicPotential<double>{0.5, 1.0}, make_grid(-1.0, 3.0, 800)},
  };
  const MixingConstants<double> mix{.a = 1.0, .b = 0.3, .alpha_plus = 1.0, .alpha_minus = 0.35, .k1 = 1.7};
  double worst = 0;
  for (const auto& cs : cases) {
    const auto s0 = action_for(cs.setup, cs.spec, cs.grid, Channel::theta, mix);
    const auto amp = build_amplitude(s0, mix, cs.setup, cs.spec);
    const auto phi_pair = solve_pair(cs.setup, cs.spec, cs.grid, Channel::phi);
    const auto match = match_lower_row(s0, amp, mix, phi_pair, cs.setup, cs.spec);
    const auto rec = reconstruct_spinor(s0, match.z0, amp, match.b, match.mix);
    const auto report = coupled_system_residual(cs.setup, cs.spec, rec.spinor);
    worst = std::max(worst, report.linf / std::abs(cs.setup.energy));
  }
  return {worst <= 1e-6, fmt("worst coupled-system residual / |E| over constant, linear, harmonic = %.3g (<= 1e-6)", worst)};
}

Verdict nonrelativistic_limit() {
  const auto study = nonrelativistic_limit_study(PotentialSpec<double>{LinearPotential<double>{0.1}},
                                                 make_grid(0.0, 10.0, 2048), 2.0, {10.0, 30.0, 100.0});
  double extra = 0;
  for (const auto& pt : study.points) {
    extra = std::max(extra, pt.extra_term_rel_diff);
  }
  const bool ok = study.monotone_34 && std::abs(study.decay_exponent_34 - 2.0) <= 0.5 && extra <= 1e-9;
  return {ok, fmt("Linf at c=10,30,100: %.3g, %.3g, %.3g (monotone: %s); decay exponent %.3f (2 +- 0.5); "
                  "extra term vs lower spin term rel diff %.3g",
                  study.points[0].eq34.linf, study.points[1].eq34.linf, study.points[2].eq34.linf,
                  study.monotone_34 ? "yes" : "no", study.decay_exponent_34, extra)};
}

Verdict hbar_scaling() {
  // same theta/theta2 ratio at both hbar values, so S0 itself scales with hbar
  const PotentialSpec<double> spec = HarmonicPotential<double>{0.4, 1.5};
  const auto grid = make_grid(0.0, 3.0, 512);
  const auto setup = make_setup(1.0, 1.0, 1.0, 3.0);
  const auto small = make_setup(0.1, 1.0, 1.0, 3.0);
  const auto act = action_for(setup, spec, grid, Channel::theta, {.a = 1.0, .b = 0.5});
  auto scaled = act;
  scaled.hbar = small.hbar;
  scaled.value *= 0.1;
  scaled.d1 *= 0.1;
  scaled.d2 *= 0.1;
  scaled.d3 *= 0.1;
  const auto big_terms = hj_terms(act, setup, spec);
  const auto small_terms = hj_terms(scaled, small, spec);
  // {S,x} is a difference of two terms; rounding is measured against their magnitude
  const Series<double> ratio = act.d2 / act.d1;
  const Series<double> parts = setup.hbar * setup.hbar / (4 * setup.m0) *
                               (1.5 * ratio.square() + (act.d3 / act.d1).abs());
  const double sch = ((small_terms.schwarzian - 1e-2 * big_terms.schwarzian).abs() / (1e-2 * parts)).maxCoeff();
  const double spin = (small_terms.spin / big_terms.spin - 1e-2).abs().maxCoeff() / 1e-2;
  const double tol = 64 * std::numeric_limits<double>::epsilon();
  return {sch <= tol && spin <= tol,
          fmt("Schwarzian term ratio err %.3g (relative to its two constituent terms), spin term ratio rel err %.3g "
              "(<= %.3g)",
              sch, spin, tol)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict cli_contract() {
  const fs::path data = RQHJ_TEST_DATA;
  const fs::path dir = fs::temp_directory_path() / "rqhj_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bin = RQHJ_BINARY;
  bool identical = true;
  for (const char* name : {"a.csv", "b.csv"}) {
    const std::string cmd = bin + " run " + (data / "linear_golden.json").string() + " --out " + (dir / name).string() +
                            " 2> /dev/null";
    identical = identical && std::system(cmd.c_str()) == 0 && slurp(dir / name) == slurp(data / "linear_golden.csv");
  }
  const auto err = dir / "stderr.txt";
  const std::string cmd = bin + " run " + (data / "singular_lower_channel.json").string() + " --out " +
                          (dir / "s.csv").string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  const int status = WEXITSTATUS(raw);
  const bool diagnostic = slurp(err).find("u_minus singular") != std::string::npos;
  fs::remove_all(dir);
  return {identical && status == 2 && diagnostic,
          fmt("golden CSV byte-identical on two runs: %s; forced singularity exit %d with 'u_minus singular': %s",
              identical ? "yes" : "no", status, diagnostic ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"closed-form solver", closed_form_solver},
      {"wronskian identity", wronskian_identity},
      {"central theorem", central_theorem},
      {"spin-term laws", spin_term_laws},
      {"dirac closure", dirac_closure},
      {"non-relativistic limit", nonrelativistic_limit},
      {"hbar scaling", hbar_scaling},
      {"cli contract", cli_contract},
  };
  int failed = 0;
  int index = 1;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", index++, name, v.detail.c_str());
    failed += !v.pass;
  }
  return failed;
}
