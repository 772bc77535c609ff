#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "netfrag/error.hpp"
#include "netfrag/io.hpp"

using namespace netfrag;

namespace {

std::string params_text(const NetworkParams& p) {
  std::ostringstream s;
  write_params(s, p);
  return s.str();
}

std::string message_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_params(in);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("format_double") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(NAN) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("params round trip") {
  const NetworkParams p = NetworkParams::zurich();
  std::istringstream in(params_text(p));
  const NetworkParams q = parse_params(in);
  CHECK(q.free_flow_speed == p.free_flow_speed);
  CHECK(q.green_time == p.green_time);
  CHECK(q.green_time_std == p.green_time_std);
  CHECK(q.total_lane_length == p.total_lane_length);
  CHECK(q.offset == p.offset);
}

TEST_CASE("params parser names the offending key") {
  const std::string base = params_text(NetworkParams::zurich());
  CHECK(message_of(base + "bogus_key = 1\n").find("bogus_key") != std::string::npos);
  CHECK(message_of(base + "green_time = 12\n").find("green_time") != std::string::npos);

  std::string missing;
  std::istringstream lines(base);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("cycle_time", 0) != 0) missing += line + "\n";
  }
  CHECK(message_of(missing).find("cycle_time") != std::string::npos);

  std::string bad_green;
  std::istringstream lines2(base);
  for (std::string line; std::getline(lines2, line);) {
    bad_green += (line.rfind("green_time ", 0) == 0 ? std::string("green_time = 0") : line) + "\n";
  }
  std::istringstream in(bad_green);
  CHECK_THROWS_AS(parse_params(in), ParameterError);
  CHECK(message_of(base + "offset = abc\n").size() > 0);
}

TEST_CASE("shipped parameter file matches the built-in set") {
  const auto path = std::filesystem::path(NETFRAG_SOURCE_DIR) / "data" / "zurich.params";
  const NetworkParams q = load_params(path);
  const NetworkParams p = NetworkParams::zurich();
  CHECK(q.free_flow_speed == p.free_flow_speed);
  CHECK(q.backward_wave_speed == p.backward_wave_speed);
  CHECK(q.max_density == p.max_density);
  CHECK(q.lane_capacity == p.lane_capacity);
  CHECK(q.total_lane_length == p.total_lane_length);
  CHECK(q.avg_lane_length == p.avg_lane_length);
  CHECK(q.avg_trip_length == p.avg_trip_length);
  CHECK(q.cycle_time == p.cycle_time);
  CHECK(q.green_time == p.green_time);
  CHECK(q.green_time_std == p.green_time_std);
  CHECK(q.offset == p.offset);
}

TEST_CASE("cut file round trip") {
  const auto mfd = build_unit_mfd(4e-4, 3e-4, 1.2);
  std::ostringstream out;
  write_cuts(out, mfd);
  std::istringstream in(out.str());
  const auto back = parse_cuts(in);
  REQUIRE(back.size() == mfd.size());
  CHECK(back.n_max() == mfd.n_max());
  for (std::size_t k = 0; k < mfd.size(); ++k) {
    CHECK(back.cut(k).slope == mfd.cut(k).slope);
    CHECK(back.cut(k).intercept == mfd.cut(k).intercept);
  }
  std::istringstream bad("n_max = 100\ncut = 1, 2\ncut = 3\n");
  CHECK_THROWS_AS(parse_cuts(bad), ParseError);
}

TEST_CASE("heatmap csv round trip") {
  Heatmap hm;
  hm.a_f = {1e-4, 2e-4};
  hm.a_w = {3e-4, 4e-4, 5e-4};
  hm.m_max = 1.5;
  hm.values = {0.1, NAN, 0.3, 0.4, 0.5, 0.6};
  std::ostringstream out;
  write_heatmap_csv(out, hm);
  std::istringstream in(out.str());
  const Heatmap back = parse_heatmap_csv(in);
  CHECK(back.a_f == hm.a_f);
  CHECK(back.a_w == hm.a_w);
  CHECK(back.m_max == hm.m_max);
  CHECK(std::isnan(back.at(0, 1)));
  CHECK(back.at(1, 2) == 0.6);
}

TEST_CASE("betas round trip") {
  FitResult fit;
  fit.betas = {2.8e-4, -1.4, 1.2, -1.7, 3.05};
  fit.m_max = 1.0;
  std::ostringstream out;
  write_betas(out, fit);
  std::istringstream in(out.str());
  const Betas b = parse_betas(in);
  CHECK(b.b1 == fit.betas.b1);
  CHECK(b.b2 == fit.betas.b2);
  CHECK(b.b3 == fit.betas.b3);
  CHECK(b.b4 == fit.betas.b4);
  CHECK(b.b5 == fit.betas.b5);
}

TEST_CASE("manifest is deterministic and records digests") {
  const auto dir = std::filesystem::temp_directory_path() / "netfrag_io_test";
  const auto input = dir / "in.txt";
  write_file(input, [](std::ostream& o) { o << "hello"; });
  CHECK(file_digest(input) == "a430d84680aabd0b");

  RunManifest m;
  m.command = "heatmap";
  m.config = {{"m_max", "1"}, {"grid", "50x50"}};
  m.seed = 42;
  m.inputs = {input};
  m.outputs = {"heatmap.csv"};
  const std::string a = manifest_json(m);
  CHECK(a == manifest_json(m));
  CHECK(a.find("a430d84680aabd0b") != std::string::npos);
  CHECK(a.find("\"rng_seed\": 42") != std::string::npos);
  CHECK(a.find(tool_version()) != std::string::npos);
  std::filesystem::remove_all(dir);
}
