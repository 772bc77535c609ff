#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netfrag/indicator.hpp"
#include "netfrag/mfd.hpp"
#include "netfrag/recovery.hpp"
#include "netfrag/stochastic.hpp"

namespace netfrag {

/// 17 significant digits; "nan" and "inf" for non-finite values.
std::string format_double(double v);

/// Flat `key = value` text with '#' comments. Every NetworkParams field must
/// appear exactly once; unknown keys are rejected. Throws ParseError, then
/// ParameterError from validation.
NetworkParams parse_params(std::istream& in, const std::string& source = "<input>");
NetworkParams load_params(const std::filesystem::path& path);
void write_params(std::ostream& out, const NetworkParams& params);

/// Cut file: `n_max = <veh>` followed by `cut = <slope>, <intercept>` lines
/// in index order (backward cut first).
PiecewiseLinearMfd parse_cuts(std::istream& in, const std::string& source = "<input>");
PiecewiseLinearMfd load_cuts(const std::filesystem::path& path);
void write_cuts(std::ostream& out, const PiecewiseLinearMfd& mfd);

void write_mfd_csv(std::ostream& out, const PiecewiseLinearMfd& mfd, std::size_t points = 1000);
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& points);
/// One row per segment plus a final `total` row.
void write_segments_csv(std::ostream& out, const RecoveryResult& result);

void write_heatmap_csv(std::ostream& out, const Heatmap& heatmap);
/// Reads a heatmap written by write_heatmap_csv (row-major a_f, then a_w).
Heatmap parse_heatmap_csv(std::istream& in, const std::string& source = "<input>");

void write_betas(std::ostream& out, const FitResult& fit);
Betas parse_betas(std::istream& in, const std::string& source = "<input>");
Betas load_betas(const std::filesystem::path& path);

void write_contours_csv(std::ostream& out, const std::vector<ContourSummary>& summaries);
void write_table2_csv(std::ostream& out, const std::vector<ActivationEvaluation>& rows);
void write_cell_errors_csv(std::ostream& out, const Heatmap& heatmap,
                           const ActivationEvaluation& evaluation);

void write_samples_csv(std::ostream& out, const ExperimentResult& result);
void write_deterministic_csv(std::ostream& out, const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const std::vector<ExperimentResult>& results);
void write_stochastic_trajectory_csv(std::ostream& out, const StochasticRun& run, double dt,
                                     const StochasticConfig& config);

/// 64-bit FNV-1a digest of a file, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;  // resolved options
  std::optional<std::uint64_t> seed;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::string> outputs;  // file names relative to the output directory
};

/// Deterministic JSON text (no timestamps) with input digests.
std::string manifest_json(const RunManifest& manifest);

/// Creates parent directories and writes through `body`; throws Error on I/O failure.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

std::string tool_version();

}  // namespace netfrag
