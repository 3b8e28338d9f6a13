#include "adamlab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include "adamlab/adam.hpp"
#include "adamlab/errors.hpp"
#include "adamlab/experiments.hpp"
#include "adamlab/rng.hpp"
#include "adamlab/selftest.hpp"
#include "adamlab/vectorfield.hpp"

namespace adamlab {

namespace {

using I = std::int64_t;

I as_int(std::size_t n) { return static_cast<I>(n); }

ResultTable new_table(const RunConfig& cfg, std::vector<std::string> columns) {
  ResultTable t;
  t.command = std::string(command_name(cfg.command));
  t.columns = std::move(columns);
  for (const auto& k : config_schema()) {
    if (k.name == "out") continue;
    t.config.emplace_back(std::string(k.name), cfg.value(k.name));
  }
  return t;
}

std::pair<double, double> zero_bracket(const RunConfig& cfg,
                                       const QuadraticSOP& sop) {
  auto b = default_bracket(sop.data);
  if (cfg.lo) b.first = *cfg.lo;
  if (cfg.hi) b.second = *cfg.hi;
  if (!(b.first < b.second)) throw config_error("hi", "must exceed lo");
  return b;
}

ResultTable cmd_run(const RunConfig& cfg) {
  ResultTable t = new_table(cfg, {"n", "theta"});
  const auto grid = geometric_grid(cfg.steps, cfg.per_decade);
  RandomStream rng = make_stream(cfg.seed, 0);
  const Trajectory tr = run_trajectory(cfg.sop(), cfg.optimizer, cfg.schedule,
                                       cfg.batch, cfg.steps, Point{cfg.theta0},
                                       rng, grid);
  for (std::size_t k = 0; k < tr.steps.size(); ++k) {
    t.add_row({as_int(tr.steps[k]), tr.thetas[k][0]});
  }
  return t;
}

ResultTable cmd_ensemble(const RunConfig& cfg) {
  ResultTable t = new_table(cfg, {"n", "mean", "stderr"});
  const ErrorSeries s = run_ensemble(cfg.ensemble());
  t.notes.emplace_back("reference", format_double(s.reference[0]));
  if (s.zero) {
    t.notes.emplace_back("reference_residual",
                         format_double(s.zero->residual.value[0]));
    t.notes.emplace_back("reference_uncertainty",
                         format_double(s.zero->uncertainty));
  }
  for (const auto& p : s.points) t.add_row({as_int(p.n), p.mean, p.std_error});
  return t;
}

ResultTable cmd_vf_eval(const RunConfig& cfg) {
  ResultTable t = new_table(
      cfg, {"theta", "value", "stderr", "truncation_N", "replications"});
  const QuadraticSOP sop = cfg.sop();
  const VFPathSet paths(sop.data, cfg.batch, cfg.hp, cfg.policy, cfg.vf_reps,
                        cfg.seed);
  const VFEstimator est = cfg.estimator.value_or(VFEstimator::plain);
  for (double theta : cfg.theta) {
    const double th[1] = {theta};
    const VFEstimate e = paths.evaluate(th, est);
    t.add_row({theta, e.value[0], e.std_error[0], as_int(e.truncation_N),
               as_int(e.replications)});
  }
  return t;
}

ResultTable cmd_vf_zero(const RunConfig& cfg) {
  ResultTable t = new_table(
      cfg, {"theta_star", "lo", "hi", "residual", "residual_stderr",
            "iterations", "monotonicity_verified", "slope", "uncertainty"});
  const QuadraticSOP sop = cfg.sop();
  ZeroSearchOptions opt;
  opt.estimator = cfg.estimator.value_or(VFEstimator::conditioned);
  // same seed derivation as an ensemble's vfzero reference
  const ZeroResult z =
      find_zero_1d(sop, cfg.hp, cfg.batch, cfg.policy, cfg.vf_reps,
                   zero_bracket(cfg, sop), cfg.zero_tol,
                   derive_seed(cfg.seed, 0x7A), opt);
  t.add_row({z.theta_star, z.bracket.first, z.bracket.second,
             z.residual.value[0], z.residual.std_error[0], as_int(z.iterations),
             I{z.monotonicity_verified ? 1 : 0}, z.slope, z.uncertainty});
  return t;
}

ResultTable sweep_table(const RunConfig& cfg, const std::string& param,
                        const std::vector<SweepRow>& rows) {
  ResultTable t = new_table(
      cfg, {param, "final_mean", "stderr", "theta_star", "residual"});
  for (const auto& r : rows) {
    Cell p = param == "M" ? Cell{static_cast<I>(r.parameter)} : Cell{r.parameter};
    t.add_row({p, r.final_mean, r.final_std_error, r.zero.theta_star,
               r.zero.residual.value[0]});
  }
  return t;
}

ResultTable cmd_sweep(const RunConfig& cfg) {
  const EnsembleConfig base = cfg.ensemble();
  SweepOptions opt;
  opt.run_ensembles = cfg.ensembles;
  switch (cfg.command) {
    case Command::sweep_beta2:
      return sweep_table(cfg, "beta2", sweep_beta2(base, cfg.beta2_grid, opt));
    case Command::sweep_batch:
      return sweep_table(cfg, "M", sweep_batch(base, cfg.batch_grid, opt));
    default:
      break;
  }
  ResultTable t = new_table(
      cfg, {"w", "p_v", "mean_theta", "stderr", "theta_star", "residual"});
  for (const auto& r : sweep_asymmetry(base, cfg.w_grid, opt)) {
    t.add_row({r.parameter, r.p_v, r.final_mean, r.final_std_error,
               r.zero.theta_star, r.zero.residual.value[0]});
  }
  return t;
}

ResultTable cmd_check_schedule(const RunConfig& cfg) {
  ResultTable t = new_table(
      cfg, {"n_max", "p", "tail_ratio_max", "tail_ratio_end",
            "ratio_decreasing", "partial_sum_p", "partial_sum_p_increment",
            "divergence_proxy", "consistent", "verdict"});
  const ScheduleReport r = schedule_diagnostics(cfg.schedule, cfg.n_max, cfg.p);
  t.add_row({as_int(r.n_max), r.p, r.tail_ratio_max, r.tail_ratio_end,
             I{r.ratio_decreasing ? 1 : 0}, r.partial_sum_p,
             r.partial_sum_p_increment, r.divergence_proxy,
             I{r.consistent ? 1 : 0}, r.verdict});
  return t;
}

bool all_positive(const ResultTable& t, const std::string& col) {
  const std::size_t c = t.column_index(col);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!(t.number(r, c) > 0.0)) return false;
  }
  return !t.rows.empty();
}

}  // namespace

ResultTable execute(const RunConfig& config) {
  switch (config.command) {
    case Command::run:
      return cmd_run(config);
    case Command::ensemble:
      return cmd_ensemble(config);
    case Command::vf_eval:
      return cmd_vf_eval(config);
    case Command::vf_zero:
      return cmd_vf_zero(config);
    case Command::sweep_beta2:
    case Command::sweep_batch:
    case Command::sweep_asym:
      return cmd_sweep(config);
    case Command::check_schedule:
      return cmd_check_schedule(config);
    case Command::selftest:
      break;
  }
  throw std::invalid_argument("selftest has no result table");
}

PlotSpec plot_spec(const ResultTable& t) {
  PlotSpec s;
  s.title = t.command;
  auto ys_positive = [&](const std::vector<std::string>& ys) {
    return std::all_of(ys.begin(), ys.end(),
                       [&](const std::string& y) { return all_positive(t, y); });
  };
  if (t.command == "run") {
    s.x_column = "n";
    s.y_columns = {"theta"};
    s.log_x = true;
  } else if (t.command == "ensemble") {
    s.x_column = "n";
    s.y_columns = {"mean"};
    s.log_x = true;
  } else if (t.command == "vf-eval") {
    s.x_column = "theta";
    s.y_columns = {"value"};
  } else if (t.command == "vf-zero") {
    s.x_column = "iterations";
    s.y_columns = {"theta_star"};
  } else if (t.command == "sweep-beta2") {
    s.x_column = "beta2";
    s.y_columns = {"final_mean", "theta_star"};
  } else if (t.command == "sweep-batch") {
    s.x_column = "M";
    s.y_columns = {"final_mean", "theta_star"};
    s.log_x = true;
  } else if (t.command == "sweep-asym") {
    s.x_column = "p_v";
    s.y_columns = {"mean_theta", "theta_star"};
  } else {
    s.x_column = "n_max";
    s.y_columns = {"tail_ratio_end"};
  }
  // final_mean is 0 when ensembles are off; plot only what is present
  if (t.command.rfind("sweep-", 0) == 0 && t.command != "sweep-asym" &&
      !all_positive(t, "final_mean")) {
    s.y_columns = {"theta_star"};
  }
  if (t.command == "sweep-beta2") {
    // 1 - beta2 would be the natural log axis; keep beta2 linear
    s.log_y = ys_positive(s.y_columns);
  } else if (t.command == "ensemble" || t.command == "sweep-batch") {
    s.log_y = ys_positive(s.y_columns);
  }
  return s;
}

std::string summarize(const ResultTable& t) {
  std::string s = t.command + ": " + std::to_string(t.rows.size()) + " rows";
  if (t.rows.empty()) return s;
  const auto& last = t.rows.back();
  if (t.command == "ensemble") {
    s += ", final mean " + format_cell(last[1]) + " +- " + format_cell(last[2]) +
         " at n = " + format_cell(last[0]);
  } else if (t.command == "vf-zero") {
    s += ", theta* = " + format_cell(last[0]) + " (residual " +
         format_cell(last[3]) + " +- " + format_cell(last[4]) + ")";
  } else if (t.command == "check-schedule") {
    s += ", " + std::get<std::string>(last.back());
  } else if (t.command == "run") {
    s += ", theta = " + format_cell(last[1]) + " at n = " + format_cell(last[0]);
  }
  return s;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  try {
    const Invocation inv = parse_args(argc, argv);
    if (inv.help) {
      out << usage();
      return 0;
    }
    const RunConfig& cfg = inv.config;
    if (cfg.command == Command::selftest) {
      const auto results = run_selftest();
      out << format_report(results, true);
      const auto failed = std::find_if(results.begin(), results.end(),
                                       [](const SuiteResult& r) { return !r.passed; });
      if (failed != results.end()) {
        err << "selftest failed: " << failed->name << ": " << failed->failure
            << "\n";
        return 1;
      }
      return 0;
    }
    const ResultTable table = execute(cfg);
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (ec) throw io_error("cannot create " + cfg.out.string() + ": " + ec.message());
    const auto csv = cfg.out / (table.command + ".csv");
    emit_csv(table, csv);
    out << summarize(table) << "\n" << "wrote " << csv.string() << "\n";
    if (cfg.plot) {
      const auto svg = cfg.out / (table.command + ".svg");
      emit_svg_plot(table, plot_spec(table), svg);
      out << "wrote " << svg.string() << "\n";
    }
    return 0;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return 4;
  } catch (const numeric_error& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace adamlab
