#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "netfrag/indicator.hpp"
#include "netfrag/mfd.hpp"

namespace netfrag::cli {

/// Where an MFD comes from: a parameter file (Method of Cuts), a cut file,
/// or a unit-MFD triple.
struct MfdSource {
  std::optional<std::filesystem::path> params;
  std::optional<std::filesystem::path> cuts;
  std::optional<double> green;
  std::optional<double> a_f;
  std::optional<double> a_w;
  std::optional<double> m_max;
  std::string delay = "mean-stop";
};

SignalDelay parse_delay(const std::string& name);

struct MfdOptions {
  MfdSource source;
  std::size_t points = 1000;
  std::filesystem::path out;
};

struct RecoverOptions {
  MfdSource source;
  std::optional<double> demand;
  std::optional<double> supply;
  double base_demand = 0.0;
  std::string horizon = "inf";
  double dt = 1.0;
  std::filesystem::path out;
};

struct HeatmapOptions {
  double m_max = 1.0;
  std::size_t rows = kHeatmapSize;
  std::size_t cols = kHeatmapSize;
  double lo = kHeatmapLo;
  double hi = kHeatmapHi;
  unsigned threads = 0;
  std::filesystem::path out;
};

struct FitOptionsCli {
  std::optional<std::filesystem::path> heatmap;
  HeatmapOptions grid;  // used when no heatmap file is given
  double trim_lo = 0.9;
  double trim_hi = 1.5;
  std::string activation = "kappa5";
  std::vector<double> eval_m_max;
  std::filesystem::path out;
};

struct IndicatorOptions {
  MfdSource source;
  std::string activation = "kappa5";
  std::optional<std::filesystem::path> betas;
  std::optional<std::filesystem::path> out;
};

struct ZurichOptions {
  std::string mode;  // demand, supply or trajectory
  std::optional<std::filesystem::path> params;
  std::uint64_t seed = 42;
  std::size_t samples = 1000;
  double dt = 1.0;
  double horizon = 7200.0;
  double base_demand = 0.6;
  double start = 7000.0;  // trajectory mode only
  std::string delay = "mean-stop";
  unsigned threads = 0;
  std::filesystem::path out;
};

int run_mfd(const MfdOptions& o);
int run_recover(const RecoverOptions& o);
int run_heatmap(const HeatmapOptions& o);
int run_fit(const FitOptionsCli& o);
int run_indicator(const IndicatorOptions& o);
int run_zurich(const ZurichOptions& o);

}  // namespace netfrag::cli
