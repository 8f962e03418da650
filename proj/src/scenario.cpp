#include "rqhj/cli/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "rqhj/rqhj.hpp"

namespace rqhj::cli {

using nlohmann::json;

void Table::add(std::string name, std::vector<double> values) {
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

namespace {

std::vector<double> to_vector(const Series<double>& s) { return {s.data(), s.data() + s.size()}; }

bool is_minus_report(EquationId id) {
  return id == EquationId::RQSHJE_half_minus || id == EquationId::amp_eq_17 || id == EquationId::phase_eq_19 ||
         id == EquationId::dirac_10_11;
}

json stats_json(const IntegratorStats<double>& s) {
  return {{"steps", s.steps}, {"rejected", s.rejected}, {"max_local_error_estimate", s.max_local_error_estimate}};
}

SummaryRow summarize(const ResidualReport<double>& r, double c) {
  return {std::string(to_string(r.equation_id)), c, r.linf, r.l2, r.scale, r.tolerance, r.pass};
}

void check_channel(const ChannelFunctions<double>& funcs, Channel channel) {
  const auto& hits = funcs.singular_points(channel);
  if (!hits.empty()) {
    throw SingularCoefficient(channel_function_name(channel), hits.front());
  }
}

}  // namespace

ScenarioOutcome evaluate_scenario(const ScenarioConfig& cfg) {
  ScenarioOutcome out;
  out.meta["schema_version"] = kSchemaVersion;
  out.meta["config"] = cfg.source;

  const bool need_minus = std::any_of(cfg.run.begin(), cfg.run.end(), is_minus_report);
  const auto& setup = cfg.setup;
  const auto& spec = cfg.potential;

  SolverOptions<double> options;
  options.rel_tol = cfg.tolerances.rel_tol;
  options.eps_sing = cfg.tolerances.eps_sing;

  try {
    const auto funcs = channel_functions(setup, spec, cfg.grid, cfg.tolerances.eps_sing);
    check_channel(funcs, Channel::theta);
    if (need_minus) {
      check_channel(funcs, Channel::phi);
    }

    const auto theta_pair = solve_pair(setup, spec, cfg.grid, Channel::theta, options);
    const auto s0 = build_reduced_action(theta_pair, cfg.mixing, setup, spec);
    const auto amp_a = build_amplitude(s0, cfg.mixing, setup, spec);

    std::optional<SolutionPair<double>> phi_pair;
    std::optional<ReducedAction<double>> z0;
    std::optional<Amplitude<double>> amp_b;
    if (need_minus) {
      phi_pair = solve_pair(setup, spec, cfg.grid, Channel::phi, options);
      z0 = build_reduced_action(*phi_pair, cfg.mixing, setup, spec);
      amp_b = build_amplitude(*z0, cfg.mixing, setup, spec);
    }

    auto& t = out.pointwise;
    t.add("x", to_vector(theta_pair.first.xs));
    t.add("theta1", to_vector(theta_pair.first.y));
    t.add("theta2", to_vector(theta_pair.second.y));
    t.add("dtheta1", to_vector(theta_pair.first.dy));
    t.add("dtheta2", to_vector(theta_pair.second.dy));
    t.add("S0", to_vector(s0.value));
    t.add("dS0", to_vector(s0.d1));
    if (z0) {
      t.add("Z0", to_vector(z0->value));
      t.add("dZ0", to_vector(z0->d1));
    }
    t.add("A", to_vector(amp_a.value));
    if (amp_b) {
      t.add("B_or_flag", to_vector(amp_b->value));
    }

    const double tol = cfg.tolerances.residual;
    std::vector<ResidualReport<double>> reports;
    std::optional<std::vector<ResidualReport<double>>> amp_plus, amp_minus;
    for (EquationId id : cfg.run) {
      switch (id) {
        case EquationId::RQSHJE_spinless:
          reports.push_back(residual_rqshje_spinless(s0, setup, spec, tol));
          break;
        case EquationId::RQSHJE_half_plus:
          reports.push_back(residual_rqshje_half(s0, setup, spec, SpinProjection::plus, tol));
          break;
        case EquationId::RQSHJE_half_minus:
          reports.push_back(residual_rqshje_half(*z0, setup, spec, SpinProjection::minus, tol));
          break;
        case EquationId::amp_eq_16:
        case EquationId::phase_eq_18:
          if (!amp_plus) {
            amp_plus = residual_amplitude_equations(s0, amp_a, setup, spec, tol);
          }
          reports.push_back((*amp_plus)[id == EquationId::amp_eq_16 ? 0 : 1]);
          break;
        case EquationId::amp_eq_17:
        case EquationId::phase_eq_19:
          if (!amp_minus) {
            amp_minus = residual_amplitude_equations(*z0, *amp_b, setup, spec, tol);
          }
          reports.push_back((*amp_minus)[id == EquationId::amp_eq_17 ? 0 : 1]);
          break;
        case EquationId::dirac_10_11: {
          const auto match = match_lower_row(s0, amp_a, cfg.mixing, *phi_pair, setup, spec);
          const auto spinor = reconstruct_spinor(s0, match.z0, amp_a, match.b, match.mix);
          reports.push_back(coupled_system_residual(setup, spec, spinor.spinor, tol));
          out.meta["dirac_match"] = {{"d", match.mix.d},
                                     {"e", match.mix.e},
                                     {"beta_plus", match.mix.beta_plus},
                                     {"beta_minus", match.mix.beta_minus},
                                     {"k2", match.mix.k2},
                                     {"z_offset", match.z_offset}};
          break;
        }
        case EquationId::nonrel_34:
        case EquationId::nonrel_35:
          break;
      }
    }
    for (const auto& r : reports) {
      t.add("residual_" + std::string(to_string(r.equation_id)), to_vector(r.residual));
      out.summary.push_back(summarize(r, setup.c));
      if (!r.pass) {
        out.exit_status = kExitResidualFailed;
      }
    }

    const auto spins = spin_terms(setup, spec, cfg.grid);
    t.add("spin_term_plus", to_vector(spins.term_plus));
    t.add("spin_term_minus", to_vector(spins.term_minus));

    json integrator;
    integrator["theta"] = stats_json(theta_pair.first.stats);
    json wronskian;
    wronskian["theta"] = {{"alpha", theta_pair.wronskian_constant}, {"spread", theta_pair.wronskian_spread}};
    if (phi_pair) {
      integrator["phi"] = stats_json(phi_pair->first.stats);
      wronskian["phi"] = {{"alpha", phi_pair->wronskian_constant}, {"spread", phi_pair->wronskian_spread}};
    }
    out.meta["integrator"] = integrator;
    out.meta["wronskian"] = wronskian;

    const bool want34 = std::find(cfg.run.begin(), cfg.run.end(), EquationId::nonrel_34) != cfg.run.end();
    const bool want35 = std::find(cfg.run.begin(), cfg.run.end(), EquationId::nonrel_35) != cfg.run.end();
    if (want34 || want35) {
      const auto study = nonrelativistic_limit_study(spec, cfg.grid, cfg.nonrel.e_prime, cfg.nonrel.c_values,
                                                     setup.hbar, setup.m0, cfg.mixing, options, tol);
      json points = json::array();
      for (const auto& pt : study.points) {
        if (want34) {
          auto row = summarize(pt.eq34, pt.c);
          row.pass = study.monotone_34;
          out.summary.push_back(row);
        }
        if (want35) {
          auto row = summarize(pt.eq35, pt.c);
          row.pass = study.monotone_35;
          out.summary.push_back(row);
        }
        points.push_back({{"c", pt.c},
                          {"linf_34", pt.eq34.linf},
                          {"linf_35", pt.eq35.linf},
                          {"extra_term_rel_diff", pt.extra_term_rel_diff}});
      }
      out.meta["nonrel"] = {{"E_prime", cfg.nonrel.e_prime},
                            {"points", points},
                            {"decay_exponent_34", study.decay_exponent_34},
                            {"decay_exponent_35", study.decay_exponent_35},
                            {"monotone_34", study.monotone_34},
                            {"monotone_35", study.monotone_35}};
      if ((want34 && !study.monotone_34) || (want35 && !study.monotone_35)) {
        out.exit_status = kExitResidualFailed;
      }
    }
  } catch (const rqhj::Error& e) {
    out.exit_status = kExitConfigError;
    out.diagnostic = std::string("error: ") + e.what();
  }

  json verdicts = json::array();
  for (const auto& row : out.summary) {
    verdicts.push_back({{"equation_id", row.equation_id},
                        {"c", row.c},
                        {"linf", row.linf},
                        {"l2", row.l2},
                        {"scale", row.scale},
                        {"tolerance", row.tolerance},
                        {"pass", row.pass}});
  }
  out.meta["reports"] = verdicts;
  out.meta["exit_status"] = out.exit_status;
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) {
    return "NA";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.names.size(); ++j) {
    out += (j ? "," : "") + table.names[j];
  }
  out += '\n';
  const std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      if (j) {
        out += ',';
      }
      out += format_number(table.columns[j][i]);
    }
    out += '\n';
  }
  return out;
}

std::string render_summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "equation_id,c,linf,l2,scale,tolerance,pass\n";
  for (const auto& r : rows) {
    out += r.equation_id + ',' + format_number(r.c) + ',' + format_number(r.linf) + ',' + format_number(r.l2) + ',' +
           format_number(r.scale) + ',' + format_number(r.tolerance) + ',' + (r.pass ? "true" : "false") + '\n';
  }
  return out;
}

std::string render_json(const ScenarioOutcome& outcome) {
  json columns = json::object();
  for (std::size_t j = 0; j < outcome.pointwise.names.size(); ++j) {
    json values = json::array();
    for (double v : outcome.pointwise.columns[j]) {
      values.push_back(std::isnan(v) ? json(nullptr) : json(v));
    }
    columns[outcome.pointwise.names[j]] = std::move(values);
  }
  json doc;
  doc["column_order"] = outcome.pointwise.names;
  doc["columns"] = std::move(columns);
  doc["meta"] = outcome.meta;
  return doc.dump(2) + "\n";
}

std::filesystem::path summary_path(const std::filesystem::path& path) {
  auto out = path;
  out.replace_extension();
  out += ".summary";
  out += path.has_extension() ? path.extension() : std::filesystem::path(".csv");
  return out;
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw ConfigError("cannot write " + tmp.string());
    }
    f << contents;
    if (!f.flush()) {
      throw ConfigError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

int run_scenario(const ScenarioConfig& cfg, std::ostream& diagnostics) {
  if (cfg.path.empty()) {
    diagnostics << "error: no output path (set output.path or pass --out)\n";
    return kExitConfigError;
  }
  auto outcome = evaluate_scenario(cfg);
  if (outcome.exit_status == kExitConfigError) {
    diagnostics << outcome.diagnostic << '\n';
    return outcome.exit_status;
  }
  try {
    if (cfg.format == OutputFormat::csv) {
      write_atomically(cfg.path, render_csv(outcome.pointwise));
      write_atomically(summary_path(cfg.path), render_summary_csv(outcome.summary));
    } else {
      write_atomically(cfg.path, render_json(outcome));
    }
  } catch (const std::exception& e) {
    diagnostics << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  for (const auto& row : outcome.summary) {
    diagnostics << (row.pass ? "PASS " : "FAIL ") << row.equation_id << " c=" << format_number(row.c)
                << " linf=" << format_number(row.linf) << '\n';
  }
  return outcome.exit_status;
}

}  // namespace rqhj::cli
