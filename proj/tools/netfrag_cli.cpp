#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "netfrag/error.hpp"
#include "netfrag/io.hpp"

namespace {

using netfrag::cli::MfdSource;

void add_mfd_source(CLI::App* cmd, MfdSource& s) {
  cmd->add_option("--params", s.params, "Network parameter file (Method of Cuts MFD)");
  cmd->add_option("--cuts,--mfd", s.cuts, "Cut file written by the mfd command");
  cmd->add_option("--green", s.green, "Green time in s (defaults to green_time of --params)");
  cmd->add_option("--delay", s.delay, "Signal delay model: mean-stop, full-red, random-arrival");
  cmd->add_option("--af", s.a_f, "Unit MFD free-flow slope a_f (1/s)");
  cmd->add_option("--aw", s.a_w, "Unit MFD backward slope |a_w| (1/s)");
  cmd->add_option("--mmax", s.m_max, "Unit MFD maximal completion m_max (veh/s)");
}

// Accepts "50" or "50x40".
void parse_grid(const std::string& text, std::size_t& rows, std::size_t& cols) {
  const auto x = text.find('x');
  try {
    rows = std::stoul(text.substr(0, x));
    cols = x == std::string::npos ? rows : std::stoul(text.substr(x + 1));
  } catch (const std::exception&) {
    throw netfrag::ParameterError("--grid must look like 50 or 50x50");
  }
  if (rows < 2 || cols < 2) throw netfrag::ParameterError("--grid needs at least 2 points per axis");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network fragility toolkit: MFDs, disruption recovery, fragility indicator"};
  app.set_version_flag("--version", netfrag::tool_version());
  app.require_subcommand(1);

  netfrag::cli::MfdOptions mfd;
  auto* c_mfd = app.add_subcommand("mfd", "Export an MFD as CSV");
  add_mfd_source(c_mfd, mfd.source);
  c_mfd->add_option("--points", mfd.points, "Number of n samples")->check(CLI::PositiveNumber);
  c_mfd->add_option("--out", mfd.out, "Output directory")->required();

  netfrag::cli::RecoverOptions rec;
  auto* c_rec = app.add_subcommand("recover", "Closed-form recovery trajectory and TTS");
  add_mfd_source(c_rec, rec.source);
  c_rec->add_option("--demand", rec.demand, "Demand disruption n' (veh)");
  c_rec->add_option("--supply", rec.supply, "Supply disruption coefficient r");
  c_rec->add_option("--m0", rec.base_demand, "Base demand m0 (veh/s)");
  c_rec->add_option("--horizon", rec.horizon, "Horizon in s, or inf");
  c_rec->add_option("--dt", rec.dt, "Trajectory sampling step (s)");
  c_rec->add_option("--out", rec.out, "Output directory")->required();

  netfrag::cli::HeatmapOptions hm;
  std::string hm_grid = "50";
  auto* c_hm = app.add_subcommand("heatmap", "Skewness heatmap over (a_f, |a_w|)");
  c_hm->add_option("--mmax", hm.m_max, "m_max (veh/s)");
  c_hm->add_option("--grid", hm_grid, "Grid size N or NxM");
  c_hm->add_option("--lo", hm.lo, "Lower slope bound (1/s)");
  c_hm->add_option("--hi", hm.hi, "Upper slope bound (1/s)");
  c_hm->add_option("--threads", hm.threads, "Worker threads (0: all cores)");
  c_hm->add_option("--out", hm.out, "Output directory")->required();

  netfrag::cli::FitOptionsCli fit;
  std::string fit_grid = "50";
  auto* c_fit = app.add_subcommand("fit", "Fit beta coefficients and tabulate activation errors");
  c_fit->add_option("--heatmap", fit.heatmap, "Heatmap CSV (computed when omitted)");
  c_fit->add_option("--mmax", fit.grid.m_max, "m_max for a computed heatmap");
  c_fit->add_option("--grid", fit_grid, "Grid size for computed heatmaps");
  c_fit->add_option("--lo", fit.grid.lo, "Lower slope bound (1/s)");
  c_fit->add_option("--hi", fit.grid.hi, "Upper slope bound (1/s)");
  c_fit->add_option("--threads", fit.grid.threads, "Worker threads (0: all cores)");
  c_fit->add_option("--trim-lo", fit.trim_lo, "Lowest skewness level in the fit");
  c_fit->add_option("--trim-hi", fit.trim_hi, "Highest skewness level in the fit");
  c_fit->add_option("--activation", fit.activation, "Activation for --eval-mmax");
  c_fit->add_option("--eval-mmax", fit.eval_m_max, "Also evaluate the fit at these m_max values")
      ->delimiter(',');
  c_fit->add_option("--out", fit.out, "Output directory")->required();

  netfrag::cli::IndicatorOptions ind;
  auto* c_ind = app.add_subcommand("indicator", "Skewness indicator of one MFD");
  add_mfd_source(c_ind, ind.source);
  c_ind->add_option("--activation", ind.activation, "tanh, erf, gd, arctan, isru, kappa<k>");
  c_ind->add_option("--betas", ind.betas, "Betas file from the fit command");
  c_ind->add_option("--out", ind.out, "Output directory");

  netfrag::cli::ZurichOptions zur;
  auto* c_zur = app.add_subcommand("zurich", "Stochastic Zurich experiments");
  c_zur->add_option("mode", zur.mode, "demand, supply or trajectory")
      ->required()
      ->check(CLI::IsMember({"demand", "supply", "trajectory"}));
  c_zur->add_option("--params", zur.params, "Network parameter file (Zurich defaults)");
  c_zur->add_option("--seed", zur.seed, "RNG seed");
  c_zur->add_option("--samples", zur.samples, "Monte Carlo samples");
  c_zur->add_option("--dt", zur.dt, "Euler step (s)");
  c_zur->add_option("--horizon", zur.horizon, "Simulation horizon (s)");
  c_zur->add_option("--m0", zur.base_demand, "Base demand (veh/s)");
  c_zur->add_option("--start", zur.start, "Initial accumulation for trajectory mode (veh)");
  c_zur->add_option("--delay", zur.delay, "Signal delay model");
  c_zur->add_option("--threads", zur.threads, "Worker threads (0: all cores)");
  c_zur->add_option("--out", zur.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_mfd->parsed()) return netfrag::cli::run_mfd(mfd);
    if (c_rec->parsed()) return netfrag::cli::run_recover(rec);
    if (c_hm->parsed()) {
      parse_grid(hm_grid, hm.rows, hm.cols);
      return netfrag::cli::run_heatmap(hm);
    }
    if (c_fit->parsed()) {
      parse_grid(fit_grid, fit.grid.rows, fit.grid.cols);
      return netfrag::cli::run_fit(fit);
    }
    if (c_ind->parsed()) return netfrag::cli::run_indicator(ind);
    if (c_zur->parsed()) return netfrag::cli::run_zurich(zur);
  } catch (const netfrag::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
