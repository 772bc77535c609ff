#include "netfrag/indicator.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "netfrag/error.hpp"
#include "netfrag/parallel.hpp"
#include "netfrag/recovery.hpp"

namespace netfrag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Banker's rounding of a window size, at least one point.
std::size_t window_size(double fraction, std::size_t points) {
  const double k = std::nearbyint(fraction * static_cast<double>(points));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rmse = 0.0;
};

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw FitError("fit levels are not distinct");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.rmse = std::sqrt(ss / n);
  return fit;
}

}  // namespace

double skewness(std::span<const double> samples) {
  if (samples.size() < 3) {
    throw DegenerateError("skewness needs at least 3 samples");
  }
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  double scale = 0.0;
  for (double x : samples) {
    mean += x;
    scale = std::max(scale, std::abs(x));
  }
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  const double sigma = std::sqrt(m2);
  if (!(sigma > 1e-14 * scale)) {
    throw DegenerateError("skewness undefined for a zero-variance sample");
  }
  return m3 / (m2 * sigma);
}

std::size_t SamplingProtocol::count() const {
  return static_cast<std::size_t>(
      std::llround((fraction_hi - fraction_lo) * reference_n_max / step));
}

std::vector<double> SamplingProtocol::disruptions(double n_max) const {
  if (!(step > 0.0) || !(fraction_lo >= 0.0) || !(fraction_hi <= 1.0) ||
      !(fraction_lo < fraction_hi)) {
    throw ParameterError("invalid sampling protocol");
  }
  const std::size_t total = count();
  const double relative_step = step / reference_n_max;
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) {
    out[i] = n_max * (fraction_lo + static_cast<double>(i) * relative_step);
  }
  return out;
}

std::vector<double> sample_tts(const PiecewiseLinearMfd& mfd, const SamplingProtocol& protocol) {
  const std::vector<double> grid = protocol.disruptions(mfd.n_max());
  std::vector<double> out;
  out.reserve(grid.size());
  for (double n_prime : grid) {
    out.push_back(recover(mfd, n_prime, protocol.base_demand, Horizon::unbounded()).excess_tts);
  }
  return out;
}

double unit_skewness(double a_f, double a_w_abs, double m_max, const SamplingProtocol& protocol) {
  const std::vector<double> tts = sample_tts(build_unit_mfd(a_f, a_w_abs, m_max), protocol);
  return skewness(tts);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
  if (count > 1) out.back() = hi;
  return out;
}

std::size_t Heatmap::missing() const {
  std::size_t n = 0;
  for (double v : values) n += std::isnan(v) ? 1 : 0;
  return n;
}

double Heatmap::upper_triangular_mean() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a_f.size(); ++i) {
    for (std::size_t j = 0; j < a_w.size(); ++j) {
      const double v = at(i, j);
      if (a_w[j] <= a_f[i] && std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
  }
  if (n == 0) throw DegenerateError("heatmap has no finite upper-triangular cell");
  return sum / static_cast<double>(n);
}

Heatmap compute_heatmap(std::span<const double> a_f, std::span<const double> a_w, double m_max,
                        const SamplingProtocol& protocol, unsigned threads) {
  Heatmap hm;
  hm.a_f.assign(a_f.begin(), a_f.end());
  hm.a_w.assign(a_w.begin(), a_w.end());
  hm.m_max = m_max;
  hm.values.assign(a_f.size() * a_w.size(), kNaN);
  const std::size_t cols = a_w.size();
  parallel_for(
      hm.values.size(),
      [&](std::size_t cell) {
        try {
          hm.values[cell] = unit_skewness(hm.a_f[cell / cols], hm.a_w[cell % cols], m_max, protocol);
        } catch (const ConstructionError&) {
          hm.values[cell] = kNaN;
        }
      },
      threads);
  return hm;
}

std::vector<ContourPoint> extract_contour(const Heatmap& heatmap, double level) {
  std::vector<ContourPoint> out;
  const std::size_t cols = heatmap.a_w.size();
  for (std::size_t i = 0; i < heatmap.a_f.size(); ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      const double a = heatmap.at(i, j);
      const double b = heatmap.at(i, j + 1);
      if (std::isnan(a) || std::isnan(b) || a == b) continue;
      if ((a - level) * (b - level) <= 0.0) {
        const double t = (a - level) / (a - b);
        const double w0 = heatmap.a_w[j];
        out.push_back({heatmap.a_f[i], w0 + t * (heatmap.a_w[j + 1] - w0)});
        break;
      }
    }
  }
  return out;
}

std::optional<ContourSummary> summarize_contour(const Heatmap& heatmap, double level,
                                                const FitOptions& options) {
  const std::vector<ContourPoint> pts = extract_contour(heatmap, level);
  if (pts.size() < std::max<std::size_t>(options.min_points, 1)) return std::nullopt;
  ContourSummary s;
  s.level = level;
  s.points = pts.size();

  const std::size_t kp = window_size(options.plateau_window, pts.size());
  double plateau = 0.0;
  for (std::size_t i = pts.size() - kp; i < pts.size(); ++i) plateau += pts[i].a_w;
  s.plateau = plateau / static_cast<double>(kp);

  // Least-squares slope through the origin.
  const std::size_t kg = window_size(options.gradient_window, pts.size());
  double xy = 0.0;
  double xx = 0.0;
  for (std::size_t i = 0; i < kg; ++i) {
    xy += pts[i].a_f * pts[i].a_w;
    xx += pts[i].a_f * pts[i].a_f;
  }
  s.origin_gradient = xy / xx;
  return s;
}

FitResult fit_betas(const Heatmap& heatmap, const FitOptions& options) {
  std::vector<ContourSummary> summaries;
  for (double level : options.levels) {
    if (auto s = summarize_contour(heatmap, level, options)) summaries.push_back(*s);
  }
  return fit_betas(summaries, heatmap.m_max, options);
}

FitResult fit_betas(std::span<const ContourSummary> summaries, double m_max,
                    const FitOptions& options) {
  if (!(m_max > 0.0)) throw ParameterError("m_max must be positive");
  constexpr double kLevelTol = 1e-9;
  std::vector<double> s;
  std::vector<double> log_plateau;
  std::vector<double> gradient;
  for (const ContourSummary& c : summaries) {
    if (c.level < options.trim_lo - kLevelTol || c.level > options.trim_hi + kLevelTol) continue;
    if (!(c.plateau > 0.0)) continue;
    s.push_back(c.level);
    log_plateau.push_back(std::log(c.plateau / m_max));
    gradient.push_back(c.origin_gradient);
  }
  if (s.size() < 3) {
    std::ostringstream os;
    os << "only " << s.size() << " contour levels extractable in [" << options.trim_lo << ", "
       << options.trim_hi << "]; at least 3 are needed";
    throw FitError(os.str());
  }

  const LineFit plateau_fit = least_squares_line(s, log_plateau);
  const LineFit gradient_fit = least_squares_line(s, gradient);

  FitResult out;
  out.summaries.assign(summaries.begin(), summaries.end());
  out.levels_used = s.size();
  out.trim_lo = options.trim_lo;
  out.trim_hi = options.trim_hi;
  out.m_max = m_max;
  out.plateau_rmse = plateau_fit.rmse;
  out.gradient_rmse = gradient_fit.rmse;

  double mean_level = 0.0;
  for (double v : s) mean_level += v;
  mean_level /= static_cast<double>(s.size());
  out.betas.b2 = plateau_fit.slope;
  out.betas.b3 = options.beta3.value_or(mean_level);
  out.betas.b1 = std::exp(plateau_fit.intercept + out.betas.b2 * out.betas.b3);
  out.betas.b4 = gradient_fit.slope;
  out.betas.b5 = gradient_fit.intercept;
  return out;
}

double Activation::operator()(double x) const {
  using std::numbers::pi;
  switch (kind) {
    case ActivationKind::kTanh:
      return std::tanh(x);
    case ActivationKind::kErf:
      // Rescaled so that f'(0) = 1.
      return std::erf(std::sqrt(pi) / 2.0 * x);
    case ActivationKind::kGd:
      return 4.0 / pi * std::atan(std::tanh(pi * x / 4.0));
    case ActivationKind::kArctan:
      return 2.0 / pi * std::atan(pi * x / 2.0);
    case ActivationKind::kIsru:
      return x / std::sqrt(1.0 + x * x);
    case ActivationKind::kKappa:
      return x / std::pow(1.0 + std::pow(std::abs(x), kappa), 1.0 / kappa);
  }
  return 0.0;
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kErf:
      return "erf";
    case ActivationKind::kGd:
      return "gd";
    case ActivationKind::kArctan:
      return "arctan";
    case ActivationKind::kIsru:
      return "isru";
    case ActivationKind::kKappa: {
      std::ostringstream os;
      os << "kappa" << kappa;
      return os.str();
    }
  }
  return {};
}

Activation Activation::parse(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "tanh") return {ActivationKind::kTanh};
  if (t == "erf") return {ActivationKind::kErf};
  if (t == "gd") return {ActivationKind::kGd};
  if (t == "arctan") return {ActivationKind::kArctan};
  if (t == "isru") return {ActivationKind::kIsru};
  if (t.rfind("kappa", 0) == 0) {
    std::string rest = t.substr(5);
    if (!rest.empty() && rest.front() == '=') rest.erase(0, 1);
    std::size_t used = 0;
    double k = 0.0;
    try {
      k = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size() || !(k > 0.0) || !std::isfinite(k)) {
      throw ParameterError("activation '" + text + "': kappa must be a positive number");
    }
    return {ActivationKind::kKappa, k};
  }
  throw ParameterError("unknown activation '" + text +
                       "' (expected tanh, erf, gd, arctan, isru or kappa<k>)");
}

double approx_curve(double a_f, double m_max, double s, const Betas& betas,
                    const Activation& activation) {
  const double plateau = betas.b1 * std::exp(betas.b2 * (s - betas.b3));
  const double gradient = betas.b4 * s + betas.b5;
  return m_max * plateau * activation(gradient / plateau * a_f / m_max);
}

double solve_skewness(double a_f, double a_w_abs, double m_max, const Betas& betas,
                      const Activation& activation) {
  if (!(a_f > 0.0) || !(a_w_abs > 0.0) || !(m_max > 0.0)) {
    throw ParameterError("a_f, |a_w| and m_max must be positive");
  }
  auto residual = [&](double s) { return approx_curve(a_f, m_max, s, betas, activation) - a_w_abs; };
  double lo = 0.0;
  double hi = 3.0;
  double f_lo = residual(lo);
  double f_hi = residual(hi);
  if (f_lo * f_hi > 0.0) {
    lo = -1.5;
    hi = 4.5;
    f_lo = residual(lo);
    f_hi = residual(hi);
  }
  if (!(f_lo * f_hi <= 0.0)) {
    std::ostringstream os;
    os << "(a_f, |a_w|, m_max) = (" << a_f << ", " << a_w_abs << ", " << m_max
       << ") lies outside the fitted region: no root for s in [" << lo << ", " << hi << "]";
    throw OutOfRegionError(os.str());
  }
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = residual(mid);
    if (f_mid == 0.0) return mid;
    if ((f_lo < 0.0) == (f_mid < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ErrorMetrics error_metrics(std::span<const double> truth, std::span<const double> approx,
                           const std::vector<bool>& mask) {
  if (truth.size() != approx.size() || truth.size() != mask.size()) {
    throw ParameterError("error grids are not aligned");
  }
  ErrorMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!mask[i] || !std::isfinite(truth[i]) || !std::isfinite(approx[i])) continue;
    const double e = approx[i] - truth[i];
    m.mae += std::abs(e);
    m.mse += e * e;
    ++m.count;
  }
  if (m.count == 0) throw DegenerateError("error mask selects no cell");
  m.mae /= static_cast<double>(m.count);
  m.mse /= static_cast<double>(m.count);
  m.rmse = std::sqrt(m.mse);
  return m;
}

ActivationEvaluation evaluate_activation(const Heatmap& heatmap, const Betas& betas,
                                         const Activation& activation) {
  ActivationEvaluation out;
  out.activation = activation;
  out.approx.assign(heatmap.values.size(), kNaN);
  std::vector<bool> mask(heatmap.values.size(), false);
  const std::size_t cols = heatmap.a_w.size();
  for (std::size_t i = 0; i < heatmap.a_f.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t cell = i * cols + j;
      if (!(heatmap.a_w[j] <= heatmap.a_f[i]) || !std::isfinite(heatmap.values[cell])) continue;
      mask[cell] = true;
      try {
        out.approx[cell] =
            solve_skewness(heatmap.a_f[i], heatmap.a_w[j], heatmap.m_max, betas, activation);
      } catch (const OutOfRegionError&) {
        ++out.unsolved;
      }
    }
  }
  out.metrics = error_metrics(heatmap.values, out.approx, mask);
  return out;
}

std::vector<Activation> standard_activations() {
  return {{ActivationKind::kTanh},   {ActivationKind::kErf},       {ActivationKind::kGd},
          {ActivationKind::kArctan}, {ActivationKind::kIsru},      {ActivationKind::kKappa, 4.0},
          {ActivationKind::kKappa, 5.0}, {ActivationKind::kKappa, 6.0}};
}

}  // namespace netfrag
