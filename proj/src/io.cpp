#include "netfrag/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "netfrag/error.hpp"

#ifndef NETFRAG_VERSION
#define NETFRAG_VERSION "0.0.0"
#endif

namespace netfrag {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

double parse_number(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ParseError(where + "'" + text + "' is not a number");
  }
  return v;
}

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line;
};

// Splits `key = value` lines; '#' starts a comment.
std::vector<KeyValue> read_key_values(std::istream& in, const std::string& source) {
  std::vector<KeyValue> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ParseError(at_line(source, line) + "expected 'key = value', got '" + text + "'");
    }
    out.push_back({trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line});
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_csv_number(const std::string& text, const std::string& where) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  return parse_number(text, where);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

NetworkParams parse_params(std::istream& in, const std::string& source) {
  NetworkParams p;
  const std::map<std::string, double NetworkParams::*> fields{
      {"free_flow_speed", &NetworkParams::free_flow_speed},
      {"backward_wave_speed", &NetworkParams::backward_wave_speed},
      {"max_density", &NetworkParams::max_density},
      {"lane_capacity", &NetworkParams::lane_capacity},
      {"total_lane_length", &NetworkParams::total_lane_length},
      {"avg_lane_length", &NetworkParams::avg_lane_length},
      {"avg_trip_length", &NetworkParams::avg_trip_length},
      {"cycle_time", &NetworkParams::cycle_time},
      {"green_time", &NetworkParams::green_time},
      {"green_time_std", &NetworkParams::green_time_std},
      {"offset", &NetworkParams::offset},
  };
  std::map<std::string, std::size_t> seen;
  for (const KeyValue& kv : read_key_values(in, source)) {
    const std::string where = at_line(source, kv.line);
    if (auto prev = seen.find(kv.key); prev != seen.end()) {
      throw ParseError(where + "duplicate key '" + kv.key + "' (first on line " +
                       std::to_string(prev->second) + ")");
    }
    seen.emplace(kv.key, kv.line);
    if (kv.key == "allow_fast_backward_wave") {
      if (kv.value == "true") {
        p.allow_fast_backward_wave = true;
      } else if (kv.value == "false") {
        p.allow_fast_backward_wave = false;
      } else {
        throw ParseError(where + "allow_fast_backward_wave must be true or false");
      }
      continue;
    }
    const auto field = fields.find(kv.key);
    if (field == fields.end()) {
      throw ParseError(where + "unknown key '" + kv.key + "'");
    }
    p.*(field->second) = parse_number(kv.value, where + kv.key + ": ");
  }
  for (const auto& [name, member] : fields) {
    if (!seen.count(name)) throw ParseError(source + ": missing key '" + name + "'");
  }
  p.validate();
  return p;
}

NetworkParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open parameter file " + path.string());
  return parse_params(in, path.string());
}

void write_params(std::ostream& out, const NetworkParams& p) {
  out << "free_flow_speed = " << format_double(p.free_flow_speed) << '\n'
      << "backward_wave_speed = " << format_double(p.backward_wave_speed) << '\n'
      << "max_density = " << format_double(p.max_density) << '\n'
      << "lane_capacity = " << format_double(p.lane_capacity) << '\n'
      << "total_lane_length = " << format_double(p.total_lane_length) << '\n'
      << "avg_lane_length = " << format_double(p.avg_lane_length) << '\n'
      << "avg_trip_length = " << format_double(p.avg_trip_length) << '\n'
      << "cycle_time = " << format_double(p.cycle_time) << '\n'
      << "green_time = " << format_double(p.green_time) << '\n'
      << "green_time_std = " << format_double(p.green_time_std) << '\n'
      << "offset = " << format_double(p.offset) << '\n';
  if (p.allow_fast_backward_wave) out << "allow_fast_backward_wave = true\n";
}

PiecewiseLinearMfd parse_cuts(std::istream& in, const std::string& source) {
  std::optional<double> n_max;
  std::vector<Cut> cuts;
  for (const KeyValue& kv : read_key_values(in, source)) {
    const std::string where = at_line(source, kv.line);
    if (kv.key == "n_max") {
      if (n_max) throw ParseError(where + "duplicate key 'n_max'");
      n_max = parse_number(kv.value, where + "n_max: ");
    } else if (kv.key == "cut") {
      const auto parts = split_csv(kv.value);
      if (parts.size() != 2) throw ParseError(where + "cut needs 'slope, intercept'");
      cuts.push_back(Cut{parse_number(parts[0], where + "slope: "),
                         parse_number(parts[1], where + "intercept: ")});
    } else {
      throw ParseError(where + "unknown key '" + kv.key + "'");
    }
  }
  if (!n_max) throw ParseError(source + ": missing key 'n_max'");
  return PiecewiseLinearMfd(std::move(cuts), *n_max);
}

PiecewiseLinearMfd load_cuts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open cut file " + path.string());
  return parse_cuts(in, path.string());
}

void write_cuts(std::ostream& out, const PiecewiseLinearMfd& mfd) {
  out << "n_max = " << format_double(mfd.n_max()) << '\n';
  for (const Cut& c : mfd.cuts()) {
    out << "cut = " << format_double(c.slope) << ", " << format_double(c.intercept) << '\n';
  }
}

void write_mfd_csv(std::ostream& out, const PiecewiseLinearMfd& mfd, std::size_t points) {
  out << "n_veh,m_veh_per_s,cut_index\n";
  for (const auto& [n, e] : mfd.sample(points)) {
    out << format_double(n) << ',' << format_double(e.completion) << ',' << e.cut << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& points) {
  out << "t_s,n_veh,m_veh_per_s,cut_index\n";
  for (const TrajectoryPoint& p : points) {
    out << format_double(p.t) << ',' << format_double(p.n) << ',' << format_double(p.m) << ','
        << p.cut << '\n';
  }
}

void write_segments_csv(std::ostream& out, const RecoveryResult& r) {
  out << "cut_index,n_entry_veh,n_exit_veh,t_entry_s,duration_s,tts_veh_s,excess_tts_veh_s\n";
  for (const Segment& s : r.segments) {
    out << s.cut << ',' << format_double(s.n_entry) << ','
        << format_double(s.n_exit) << ',' << format_double(s.t_entry) << ','
        << format_double(s.duration) << ',' << format_double(s.tts) << ','
        << format_double(s.excess_tts) << '\n';
  }
  out << "total," << format_double(r.n_start) << ',' << format_double(r.n_end) << ",0,"
      << format_double(r.horizon) << ',' << format_double(r.tts) << ','
      << format_double(r.excess_tts) << '\n';
}

void write_heatmap_csv(std::ostream& out, const Heatmap& hm) {
  out << "a_f,a_w_abs,m_max,skewness\n";
  for (std::size_t i = 0; i < hm.a_f.size(); ++i) {
    for (std::size_t j = 0; j < hm.a_w.size(); ++j) {
      out << format_double(hm.a_f[i]) << ',' << format_double(hm.a_w[j]) << ','
          << format_double(hm.m_max) << ',' << format_double(hm.at(i, j)) << '\n';
    }
  }
}

Heatmap parse_heatmap_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "a_f,a_w_abs,m_max,skewness") {
    throw ParseError(source + ": expected header 'a_f,a_w_abs,m_max,skewness'");
  }
  struct Row {
    double a_f, a_w, m_max, s;
  };
  std::vector<Row> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = at_line(source, n);
    if (cells.size() != 4) throw ParseError(where + "expected 4 columns");
    rows.push_back({parse_csv_number(cells[0], where), parse_csv_number(cells[1], where),
                    parse_csv_number(cells[2], where), parse_csv_number(cells[3], where)});
  }
  if (rows.empty()) throw ParseError(source + ": heatmap has no rows");
  Heatmap hm;
  hm.m_max = rows.front().m_max;
  for (const Row& r : rows) {
    if (r.a_f == rows.front().a_f) hm.a_w.push_back(r.a_w);
    if (hm.a_f.empty() || hm.a_f.back() != r.a_f) hm.a_f.push_back(r.a_f);
  }
  if (hm.a_f.size() * hm.a_w.size() != rows.size()) {
    throw ParseError(source + ": rows do not form a full a_f x a_w grid");
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].a_f != hm.a_f[k / hm.a_w.size()] || rows[k].a_w != hm.a_w[k % hm.a_w.size()] ||
        rows[k].m_max != hm.m_max) {
      throw ParseError(at_line(source, k + 2) + "row out of grid order");
    }
    hm.values.push_back(rows[k].s);
  }
  return hm;
}

void write_betas(std::ostream& out, const FitResult& fit) {
  out << "# plateau law |a_w|/m_max = beta1 exp(beta2 (s - beta3))\n"
      << "# origin law |a_w/a_f| = beta4 s + beta5\n"
      << "beta1 = " << format_double(fit.betas.b1) << '\n'
      << "beta2 = " << format_double(fit.betas.b2) << '\n'
      << "beta3 = " << format_double(fit.betas.b3) << '\n'
      << "beta4 = " << format_double(fit.betas.b4) << '\n'
      << "beta5 = " << format_double(fit.betas.b5) << '\n'
      << "plateau_rmse = " << format_double(fit.plateau_rmse) << '\n'
      << "gradient_rmse = " << format_double(fit.gradient_rmse) << '\n'
      << "trim_lo = " << format_double(fit.trim_lo) << '\n'
      << "trim_hi = " << format_double(fit.trim_hi) << '\n'
      << "levels_used = " << fit.levels_used << '\n'
      << "m_max = " << format_double(fit.m_max) << '\n';
}

Betas parse_betas(std::istream& in, const std::string& source) {
  Betas b;
  const std::map<std::string, double Betas::*> fields{
      {"beta1", &Betas::b1}, {"beta2", &Betas::b2}, {"beta3", &Betas::b3},
      {"beta4", &Betas::b4}, {"beta5", &Betas::b5}};
  const std::vector<std::string> informational{"plateau_rmse", "gradient_rmse", "trim_lo",
                                               "trim_hi",      "levels_used",   "m_max"};
  std::map<std::string, bool> seen;
  for (const KeyValue& kv : read_key_values(in, source)) {
    const std::string where = at_line(source, kv.line);
    if (seen[kv.key]) throw ParseError(where + "duplicate key '" + kv.key + "'");
    seen[kv.key] = true;
    if (auto f = fields.find(kv.key); f != fields.end()) {
      b.*(f->second) = parse_number(kv.value, where + kv.key + ": ");
    } else if (std::find(informational.begin(), informational.end(), kv.key) ==
               informational.end()) {
      throw ParseError(where + "unknown key '" + kv.key + "'");
    }
  }
  for (const auto& [name, member] : fields) {
    if (!seen[name]) throw ParseError(source + ": missing key '" + name + "'");
  }
  if (!(b.b1 > 0.0)) throw ParseError(source + ": beta1 must be positive");
  return b;
}

Betas load_betas(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open betas file " + path.string());
  return parse_betas(in, path.string());
}

void write_contours_csv(std::ostream& out, const std::vector<ContourSummary>& summaries) {
  out << "level,points,plateau_a_w_abs,origin_gradient\n";
  for (const ContourSummary& s : summaries) {
    out << format_double(s.level) << ',' << s.points << ',' << format_double(s.plateau) << ','
        << format_double(s.origin_gradient) << '\n';
  }
}

void write_table2_csv(std::ostream& out, const std::vector<ActivationEvaluation>& rows) {
  out << "function,MAE,MSE,RMSE\n";
  for (const ActivationEvaluation& r : rows) {
    out << r.activation.name() << ',' << format_double(r.metrics.mae) << ','
        << format_double(r.metrics.mse) << ',' << format_double(r.metrics.rmse) << '\n';
  }
}

void write_cell_errors_csv(std::ostream& out, const Heatmap& hm, const ActivationEvaluation& ev) {
  out << "a_f,a_w_abs,skewness,approx_skewness,error\n";
  for (std::size_t i = 0; i < hm.a_f.size(); ++i) {
    for (std::size_t j = 0; j < hm.a_w.size(); ++j) {
      const std::size_t cell = i * hm.a_w.size() + j;
      if (!(hm.a_w[j] <= hm.a_f[i])) continue;
      const double s = hm.values[cell];
      const double a = ev.approx[cell];
      out << format_double(hm.a_f[i]) << ',' << format_double(hm.a_w[j]) << ','
          << format_double(s) << ',' << format_double(a) << ',' << format_double(a - s) << '\n';
    }
  }
}

void write_samples_csv(std::ostream& out, const ExperimentResult& r) {
  out << "magnitude,tts_veh_s,seed_index\n";
  for (std::size_t i = 0; i < r.tts.size(); ++i) {
    if (std::isnan(r.tts[i])) continue;
    out << format_double(r.magnitudes[i]) << ',' << format_double(r.tts[i]) << ',' << i << '\n';
  }
}

void write_deterministic_csv(std::ostream& out, const ExperimentResult& r) {
  out << "magnitude,tts_lo,tts_mid,tts_hi\n";
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    out << format_double(r.grid[i]) << ',' << format_double(r.curves[0][i]) << ','
        << format_double(r.curves[1][i]) << ',' << format_double(r.curves[2][i]) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  out << "experiment,s_det,s_stoch,n_samples,discarded\n";
  for (const ExperimentResult& r : results) {
    out << (r.kind == ExperimentKind::kDemand ? "demand" : "supply") << ','
        << format_double(r.s_det) << ',' << format_double(r.s_stoch) << ','
        << (r.tts.size() - r.discarded) << ',' << r.discarded << '\n';
  }
}

void write_stochastic_trajectory_csv(std::ostream& out, const StochasticRun& run, double dt,
                                     const StochasticConfig& config) {
  out << "t_s,n_veh,m_veh_per_s,green_s\n";
  for (std::size_t k = 0; k < run.green.size(); ++k) {
    const auto cuts = moc_cuts(config.params, run.green[k], config.moc);
    const double n = run.n[k];
    const double m = std::min({cuts[0].at(n), cuts[1].at(n), cuts[2].at(n)});
    out << format_double(static_cast<double>(k) * dt) << ',' << format_double(n) << ','
        << format_double(m) << ',' << format_double(run.green[k]) << '\n';
  }
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
  return hex;
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["tool_version"] = tool_version();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) config[k] = v;
  j["config"] = config;
  j["rng_seed"] = m.seed ? nlohmann::ordered_json(*m.seed) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const auto& p : m.inputs) {
    inputs.push_back({{"path", p.string()}, {"fnv1a64", file_digest(p)}});
  }
  j["inputs"] = inputs;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  body(out);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

std::string tool_version() { return NETFRAG_VERSION; }

}  // namespace netfrag
