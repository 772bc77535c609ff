#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netfrag/mfd.hpp"

namespace netfrag {

/// Population skewness (1/N moments, population sigma).
/// Throws DegenerateError for fewer than 3 samples or zero spread.
double skewness(std::span<const double> samples);

/// Grid of demand disruptions used for the indicator.
struct SamplingProtocol {
  double fraction_lo = 0.05;
  double fraction_hi = 0.95;
  double step = 50.0;  // veh, at the reference n_max
  double reference_n_max = kUnitNMax;
  double base_demand = 0.0;

  std::size_t count() const;
  /// n' values for an MFD with the given n_max; the step scales with n_max.
  std::vector<double> disruptions(double n_max) const;
};

/// Excess TTS over an unbounded horizon for every disruption of the protocol.
std::vector<double> sample_tts(const PiecewiseLinearMfd& mfd, const SamplingProtocol& protocol = {});

/// Skewness of the unit MFD (a_f, |a_w|, m_max). Throws ConstructionError for
/// a degenerate trapezoid.
double unit_skewness(double a_f, double a_w_abs, double m_max,
                     const SamplingProtocol& protocol = {});

std::vector<double> linspace(double lo, double hi, std::size_t count);

inline constexpr double kHeatmapLo = 1.2e-4;
inline constexpr double kHeatmapHi = 6.9e-4;
inline constexpr std::size_t kHeatmapSize = 50;

/// Skewness over a (a_f, |a_w|) grid at fixed m_max. Row i is a_f[i],
/// column j is a_w[j]; degenerate cells hold NaN.
struct Heatmap {
  std::vector<double> a_f;
  std::vector<double> a_w;
  double m_max = 0.0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * a_w.size() + j]; }
  std::size_t missing() const;
  /// Mean over finite cells with |a_w| <= a_f.
  double upper_triangular_mean() const;
};

Heatmap compute_heatmap(std::span<const double> a_f, std::span<const double> a_w, double m_max,
                        const SamplingProtocol& protocol = {}, unsigned threads = 0);

struct ContourPoint {
  double a_f = 0.0;
  double a_w = 0.0;
};

/// For each a_f row, the first crossing of `level` along increasing a_w,
/// linearly interpolated between neighbouring finite cells.
std::vector<ContourPoint> extract_contour(const Heatmap& heatmap, double level);

struct ContourSummary {
  double level = 0.0;
  std::size_t points = 0;
  double plateau = 0.0;          // |a_w| as a_f grows
  double origin_gradient = 0.0;  // |a_w| / a_f near the origin
};

struct FitOptions {
  std::vector<double> levels{0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
  double plateau_window = 0.1;   // rightmost fraction of contour points
  double gradient_window = 0.1;  // leftmost fraction
  double trim_lo = 0.9;
  double trim_hi = 1.5;
  std::size_t min_points = 5;
  std::optional<double> beta3;  // defaults to the mean fitted level
};

/// Returns nullopt when the contour has fewer than `min_points` points.
std::optional<ContourSummary> summarize_contour(const Heatmap& heatmap, double level,
                                                const FitOptions& options = {});

/// Plateau law |a_w| / m_max = b1 exp(b2 (s - b3)); origin law |a_w/a_f| = b4 s + b5.
struct Betas {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  double b4 = 0.0;
  double b5 = 0.0;
};

struct FitResult {
  Betas betas;
  std::vector<ContourSummary> summaries;  // every level that was extracted
  std::size_t levels_used = 0;
  double plateau_rmse = 0.0;   // residual of ln(plateau / m_max)
  double gradient_rmse = 0.0;  // residual of the origin gradient
  double trim_lo = 0.0;
  double trim_hi = 0.0;
  double m_max = 0.0;
};

FitResult fit_betas(const Heatmap& heatmap, const FitOptions& options = {});
FitResult fit_betas(std::span<const ContourSummary> summaries, double m_max,
                    const FitOptions& options = {});

enum class ActivationKind { kTanh, kErf, kGd, kArctan, kIsru, kKappa };

/// Sigmoid with f(0) = 0, f'(0) = 1 and f(inf) = 1.
struct Activation {
  ActivationKind kind = ActivationKind::kTanh;
  double kappa = 5.0;

  double operator()(double x) const;
  std::string name() const;
  /// Accepts tanh, erf, gd, arctan, isru and kappa<k> (also kappa=<k>).
  static Activation parse(const std::string& text);
};

/// |a_w| on the approximated contour of skewness s at free-flow slope a_f.
double approx_curve(double a_f, double m_max, double s, const Betas& betas,
                    const Activation& activation);

/// Inverts approx_curve in s by bisection on [0, 3], widened once to
/// [-1.5, 4.5]. Throws OutOfRegionError when no sign change is found.
double solve_skewness(double a_f, double a_w_abs, double m_max, const Betas& betas,
                      const Activation& activation);

struct ErrorMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

/// Metrics over cells where mask is set and both values are finite.
/// Throws DegenerateError when no cell qualifies.
ErrorMetrics error_metrics(std::span<const double> truth, std::span<const double> approx,
                           const std::vector<bool>& mask);

struct ActivationEvaluation {
  Activation activation;
  ErrorMetrics metrics;
  std::size_t unsolved = 0;     // upper-triangular cells outside the fitted region
  std::vector<double> approx;   // NaN where unsolved or masked out
};

/// Approximated skewness on the upper-triangular (|a_w| <= a_f) part of the grid.
ActivationEvaluation evaluate_activation(const Heatmap& heatmap, const Betas& betas,
                                         const Activation& activation);

/// tanh, erf, gd, arctan, isru and kappa 4, 5, 6.
std::vector<Activation> standard_activations();

}  // namespace netfrag
