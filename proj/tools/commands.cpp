#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "netfrag/error.hpp"
#include "netfrag/io.hpp"
#include "netfrag/recovery.hpp"
#include "netfrag/stochastic.hpp"

namespace netfrag::cli {
namespace {

namespace fs = std::filesystem;
using Config = std::vector<std::pair<std::string, std::string>>;

std::string num(double v) { return format_double(v); }

struct ResolvedMfd {
  PiecewiseLinearMfd mfd;
  Config config;
  std::vector<fs::path> inputs;
};

ResolvedMfd resolve(const MfdSource& s) {
  const int kinds = (s.params ? 1 : 0) + (s.cuts ? 1 : 0) + (s.a_f || s.a_w || s.m_max ? 1 : 0);
  if (kinds != 1) {
    throw ParameterError("give exactly one MFD source: --params, --cuts or --af/--aw/--mmax");
  }
  if (s.cuts) {
    return {load_cuts(*s.cuts), {{"cuts", s.cuts->string()}}, {*s.cuts}};
  }
  if (s.params) {
    const NetworkParams p = load_params(*s.params);
    const double green = s.green.value_or(p.green_time);
    const MocOptions moc{parse_delay(s.delay)};
    return {build_moc_mfd(p, green, moc),
            {{"params", s.params->string()}, {"green_s", num(green)}, {"delay", s.delay}},
            {*s.params}};
  }
  if (!s.a_f || !s.a_w || !s.m_max) {
    throw ParameterError("a unit MFD needs all of --af, --aw and --mmax");
  }
  return {build_unit_mfd(*s.a_f, *s.a_w, *s.m_max),
          {{"a_f", num(*s.a_f)}, {"a_w_abs", num(*s.a_w)}, {"m_max", num(*s.m_max)}},
          {}};
}

void finish(const fs::path& out, RunManifest manifest) {
  manifest.outputs.push_back("run.json");
  write_file(out / "run.json", [&](std::ostream& os) { os << manifest_json(manifest); });
}

Horizon parse_horizon(const std::string& text) {
  if (text == "inf" || text == "unbounded") return Horizon::unbounded();
  std::size_t used = 0;
  double t = 0.0;
  try {
    t = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ParameterError("--horizon must be a number of seconds or 'inf'");
  }
  return Horizon::seconds(t);
}

Heatmap heatmap_from(const HeatmapOptions& o) {
  const std::vector<double> a_f = linspace(o.lo, o.hi, o.rows);
  const std::vector<double> a_w = linspace(o.lo, o.hi, o.cols);
  return compute_heatmap(a_f, a_w, o.m_max, {}, o.threads);
}

Config heatmap_config(const HeatmapOptions& o) {
  return {{"m_max", num(o.m_max)},
          {"grid", std::to_string(o.rows) + "x" + std::to_string(o.cols)},
          {"lo", num(o.lo)},
          {"hi", num(o.hi)}};
}

}  // namespace

SignalDelay parse_delay(const std::string& name) {
  if (name == "mean-stop") return SignalDelay::kMeanStop;
  if (name == "full-red") return SignalDelay::kFullRed;
  if (name == "random-arrival") return SignalDelay::kRandomArrival;
  throw ParameterError("unknown --delay '" + name +
                       "' (expected mean-stop, full-red or random-arrival)");
}

int run_mfd(const MfdOptions& o) {
  const ResolvedMfd r = resolve(o.source);
  write_file(o.out / "mfd.csv", [&](std::ostream& os) { write_mfd_csv(os, r.mfd, o.points); });
  write_file(o.out / "cuts.txt", [&](std::ostream& os) { write_cuts(os, r.mfd); });
  RunManifest m{"mfd", r.config, std::nullopt, r.inputs, {"mfd.csv", "cuts.txt"}};
  m.config.emplace_back("points", std::to_string(o.points));
  finish(o.out, m);
  std::cout << "n_max " << num(r.mfd.n_max()) << "  m_max " << num(r.mfd.m_max())
            << "  n_c " << num(r.mfd.critical_accumulation()) << '\n';
  return 0;
}

int run_recover(const RecoverOptions& o) {
  if (o.demand.has_value() == o.supply.has_value()) {
    throw ParameterError("give exactly one of --demand and --supply");
  }
  const ResolvedMfd r = resolve(o.source);
  const Horizon horizon = parse_horizon(o.horizon);
  const RecoveryResult result =
      o.demand ? total_tts_demand(*o.demand, horizon, r.mfd, o.base_demand)
               : total_tts_supply(*o.supply, horizon, r.mfd, o.base_demand);
  const auto trajectory = sample_trajectory(result, r.mfd, o.dt);
  write_file(o.out / "recovery.csv", [&](std::ostream& os) { write_segments_csv(os, result); });
  write_file(o.out / "trajectory.csv",
             [&](std::ostream& os) { write_trajectory_csv(os, trajectory); });
  RunManifest m{"recover", r.config, std::nullopt, r.inputs, {"recovery.csv", "trajectory.csv"}};
  m.config.emplace_back(o.demand ? "demand_veh" : "supply_r", num(o.demand ? *o.demand : *o.supply));
  m.config.emplace_back("m0", num(o.base_demand));
  m.config.emplace_back("horizon", o.horizon);
  m.config.emplace_back("dt", num(o.dt));
  finish(o.out, m);
  std::cout << "n0 " << num(result.equilibrium) << "  tts " << num(result.tts) << "  excess_tts "
            << num(result.excess_tts) << "  segments " << result.segments.size() << '\n';
  return 0;
}

int run_heatmap(const HeatmapOptions& o) {
  const Heatmap hm = heatmap_from(o);
  write_file(o.out / "heatmap.csv", [&](std::ostream& os) { write_heatmap_csv(os, hm); });
  finish(o.out, {"heatmap", heatmap_config(o), std::nullopt, {}, {"heatmap.csv"}});
  std::cout << "upper-triangular mean skewness " << num(hm.upper_triangular_mean())
            << "  missing cells " << hm.missing() << '\n';
  return 0;
}

int run_fit(const FitOptionsCli& o) {
  Heatmap hm;
  Config config;
  std::vector<fs::path> inputs;
  if (o.heatmap) {
    std::ifstream in(*o.heatmap);
    if (!in) throw ParseError("cannot open heatmap file " + o.heatmap->string());
    hm = parse_heatmap_csv(in, o.heatmap->string());
    config.emplace_back("heatmap", o.heatmap->string());
    inputs.push_back(*o.heatmap);
  } else {
    hm = heatmap_from(o.grid);
    config = heatmap_config(o.grid);
  }
  FitOptions fo;
  fo.trim_lo = o.trim_lo;
  fo.trim_hi = o.trim_hi;
  const FitResult fit = fit_betas(hm, fo);
  config.emplace_back("trim_lo", num(o.trim_lo));
  config.emplace_back("trim_hi", num(o.trim_hi));

  std::vector<std::string> outputs{"betas.txt", "contours.csv", "table2.csv"};
  write_file(o.out / "betas.txt", [&](std::ostream& os) { write_betas(os, fit); });
  write_file(o.out / "contours.csv",
             [&](std::ostream& os) { write_contours_csv(os, fit.summaries); });

  std::vector<ActivationEvaluation> rows;
  for (const Activation& a : standard_activations()) {
    rows.push_back(evaluate_activation(hm, fit.betas, a));
    const std::string name = "errors_" + a.name() + ".csv";
    write_file(o.out / name, [&](std::ostream& os) { write_cell_errors_csv(os, hm, rows.back()); });
    outputs.push_back(name);
  }
  write_file(o.out / "table2.csv", [&](std::ostream& os) { write_table2_csv(os, rows); });

  if (!o.eval_m_max.empty()) {
    const Activation act = Activation::parse(o.activation);
    config.emplace_back("activation", act.name());
    std::ostringstream list;
    write_file(o.out / "table2_mmax.csv", [&](std::ostream& os) {
      os << "m_max,MAE,MSE,RMSE\n";
      for (double mm : o.eval_m_max) {
        HeatmapOptions g = o.grid;
        g.m_max = mm;
        const Heatmap other = heatmap_from(g);
        const ErrorMetrics e = evaluate_activation(other, fit.betas, act).metrics;
        os << num(mm) << ',' << num(e.mae) << ',' << num(e.mse) << ',' << num(e.rmse) << '\n';
        list << (list.tellp() > 0 ? "," : "") << num(mm);
      }
    });
    config.emplace_back("eval_m_max", list.str());
    outputs.push_back("table2_mmax.csv");
  }
  finish(o.out, {"fit", config, std::nullopt, inputs, outputs});

  std::cout << "beta1 " << num(fit.betas.b1) << "  beta2 " << num(fit.betas.b2) << "  beta3 "
            << num(fit.betas.b3) << "  beta4 " << num(fit.betas.b4) << "  beta5 "
            << num(fit.betas.b5) << '\n';
  for (const ActivationEvaluation& r : rows) {
    std::cout << r.activation.name() << "  MAE " << num(r.metrics.mae) << "  RMSE "
              << num(r.metrics.rmse) << "  unsolved " << r.unsolved << '\n';
  }
  return 0;
}

int run_indicator(const IndicatorOptions& o) {
  const ResolvedMfd r = resolve(o.source);
  const UnitScaling unit = scale_to_unit(r.mfd);
  const auto cuts = unit.mfd.cuts();
  if (cuts.size() != 3) throw ParameterError("the indicator needs a three-cut trapezoidal MFD");
  const double a_f = cuts[2].slope;
  const double a_w = -cuts[0].slope;
  const double m_max = unit.mfd.m_max();
  const double s = skewness(sample_tts(unit.mfd));

  const Activation act = Activation::parse(o.activation);
  std::optional<double> approx;
  Config config = r.config;
  std::vector<fs::path> inputs = r.inputs;
  if (o.betas) {
    approx = solve_skewness(a_f, a_w, m_max, load_betas(*o.betas), act);
    config.emplace_back("betas", o.betas->string());
    config.emplace_back("activation", act.name());
    inputs.push_back(*o.betas);
  }
  std::cout << "gamma " << num(unit.gamma) << "  a_f " << num(a_f) << "  a_w_abs " << num(a_w)
            << "  m_max " << num(m_max) << "  skewness " << num(s);
  if (approx) std::cout << "  approx_skewness " << num(*approx) << "  (" << act.name() << ")";
  std::cout << '\n';
  if (o.out) {
    write_file(*o.out / "indicator.csv", [&](std::ostream& os) {
      os << "a_f,a_w_abs,m_max,gamma,skewness,approx_skewness,activation\n"
         << num(a_f) << ',' << num(a_w) << ',' << num(m_max) << ',' << num(unit.gamma) << ','
         << num(s) << ',' << (approx ? num(*approx) : "nan") << ','
         << (approx ? act.name() : "none") << '\n';
    });
    finish(*o.out, {"indicator", config, std::nullopt, inputs, {"indicator.csv"}});
  }
  return 0;
}

int run_zurich(const ZurichOptions& o) {
  StochasticConfig c;
  Config config;
  std::vector<fs::path> inputs;
  if (o.params) {
    c.params = load_params(*o.params);
    config.emplace_back("params", o.params->string());
    inputs.push_back(*o.params);
  }
  c.seed = o.seed;
  c.sample_count = o.samples;
  c.dt = o.dt;
  c.horizon = o.horizon;
  c.base_demand = o.base_demand;
  c.moc.delay = parse_delay(o.delay);
  c.threads = o.threads;
  c.validate();
  config.insert(config.end(), {{"mode", o.mode},
                               {"samples", std::to_string(o.samples)},
                               {"dt", num(o.dt)},
                               {"horizon", num(o.horizon)},
                               {"m0", num(o.base_demand)},
                               {"delay", o.delay}});

  if (o.mode == "trajectory") {
    config.emplace_back("start_veh", num(o.start));
    std::mt19937_64 rng = sample_rng(c.seed, 0);
    const StochasticRun run = stochastic_recovery(o.start, ExperimentKind::kDemand, c, rng, true);
    const PiecewiseLinearMfd mean_mfd = build_moc_mfd(c.params, c.params.green_time, c.moc);
    const RecoveryResult det =
        recover(mean_mfd, o.start, c.base_demand, Horizon::seconds(c.horizon));
    write_file(o.out / "trajectory.csv",
               [&](std::ostream& os) { write_stochastic_trajectory_csv(os, run, c.dt, c); });
    write_file(o.out / "trajectory_det.csv", [&](std::ostream& os) {
      write_trajectory_csv(os, sample_trajectory(det, mean_mfd, c.dt));
    });
    finish(o.out, {"zurich", config, c.seed, inputs, {"trajectory.csv", "trajectory_det.csv"}});
    std::cout << "stochastic tts " << num(run.tts) << "  deterministic tts " << num(det.tts)
              << '\n';
    return 0;
  }

  ExperimentKind kind;
  if (o.mode == "demand") {
    kind = ExperimentKind::kDemand;
  } else if (o.mode == "supply") {
    kind = ExperimentKind::kSupply;
  } else {
    throw ParameterError("zurich mode must be demand, supply or trajectory");
  }
  const ExperimentResult r = run_experiment(kind, c);
  write_file(o.out / "samples.csv", [&](std::ostream& os) { write_samples_csv(os, r); });
  write_file(o.out / "deterministic.csv", [&](std::ostream& os) { write_deterministic_csv(os, r); });
  write_file(o.out / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, {r}); });
  finish(o.out, {"zurich", config, c.seed, inputs, {"samples.csv", "deterministic.csv", "summary.csv"}});
  std::cout << o.mode << "  s_det " << num(r.s_det) << "  s_stoch " << num(r.s_stoch)
            << "  discarded " << r.discarded << '\n';
  return 0;
}

}  // namespace netfrag::cli
