#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "floquet/error.hpp"
#include "floquet/io.hpp"
#include "support/random.hpp"

using namespace floquet;
using json = nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "floquet_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("explicit and built-in models parse to the same Hamiltonian") {
  const json explicit_model = json::parse(R"({
    "dim": 2, "omega": 1.5,
    "harmonics": [
      {"m": 0, "re": [[0.5, 0], [0, -0.5]]},
      {"m": 1, "re": [[0, 0], [0.2, 0]], "im": [[0, 0], [0, 0]]},
      {"m": -1, "re": [[0, 0.2], [0, 0]]}
    ]})");
  const auto a = io::parse_model(explicit_model);
  const auto b = io::parse_model(json::parse(R"({"builtin": "two_level_circular", "params": {"V": 0.4}})"));
  CHECK(model_hash(a) == model_hash(b));
  CHECK(model_hash(io::parse_model(io::model_to_json(a))) == model_hash(a));
}

TEST_CASE("model errors are reported together") {
  const json bad = json::parse(R"({
    "dim": 2, "omega": 1.0,
    "harmonics": [
      {"m": 0, "re": [[1, 0, 0], [0, 1]]},
      {"re": [[0, 0], [0, 0]]},
      {"m": 2}
    ]})");
  try {
    io::parse_model(bad);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("harmonics[0]") != std::string::npos);
    CHECK(what.find("harmonics[1]") != std::string::npos);
    CHECK(what.find("harmonics[2]") != std::string::npos);
  }
  CHECK_THROWS_AS(io::parse_model(json::parse(R"({"dim": 2})")), ConfigError);
  CHECK_THROWS_AS(io::parse_model(json::parse(R"([1, 2])")), ConfigError);
  CHECK_THROWS_AS(io::parse_model(json::parse(R"({"builtin": "static", "params": {"e0": "x"}})")), ConfigError);
  CHECK_THROWS_AS(
      io::parse_model(json::parse(R"({"dim": 1, "omega": 1, "harmonics": [{"m": 1, "re": [[1]]}]})")),
      ConfigError);  // no Hermitian partner
  CHECK_THROWS_AS(io::load_model(scratch("does_not_exist.json")), ConfigError);

  const auto garbage = scratch("garbage.json");
  io::write_text(garbage, "{not json");
  CHECK_THROWS_AS(io::load_model(garbage), ConfigError);
}

TEST_CASE("modes round-trip bit for bit") {
  support::Engine rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = support::random_mode(rng, 3, 4);
    const auto back = io::mode_from_json(json::parse(io::mode_to_json(m).dump()));
    CHECK(back.coeffs() == m.coeffs());
  }
  CHECK_THROWS_AS(io::mode_from_json(json::parse(R"({"dim": 2, "truncation": 1, "re": [1], "im": [0]})")),
                  ConfigError);
}

TEST_CASE("spectra round-trip bit for bit through a file") {
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto s = sambe::solve(builtin_model({name, {}}));
    const auto path = scratch(name + ".json");
    io::write_json(path, io::spectrum_to_json(s));
    const auto back = io::load_spectrum(path);
    REQUIRE(back.triplets.size() == s.triplets.size());
    CHECK(back.meta.omega == s.meta.omega);
    CHECK(back.meta.truncation == s.meta.truncation);
    CHECK(back.meta.model_hash == s.meta.model_hash);
    CHECK(back.meta.truncation_change == s.meta.truncation_change);
    for (std::size_t i = 0; i < s.triplets.size(); ++i) {
      CHECK(back.triplets[i].quasi_energy == s.triplets[i].quasi_energy);
      CHECK(back.triplets[i].avg_energy == s.triplets[i].avg_energy);
      CHECK(back.triplets[i].replica == s.triplets[i].replica);
      CHECK(back.triplets[i].mode.coeffs() == s.triplets[i].mode.coeffs());
    }
  }
}

TEST_CASE("shortest round-trip numbers") {
  support::Engine rng(79);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    CHECK(std::strtod(io::number(x).c_str(), nullptr) == x);
  }
  CHECK(io::number(0.3) == "0.3");
  CHECK(io::number(0.0) == "0");
}

TEST_CASE("spectrum CSV for the static model") {
  const auto s = sambe::solve(builtin_model({"static", {}}));
  std::ostringstream out;
  io::write_spectrum_csv(out, s);
  const auto rows = lines(out.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "state,eps,ebar,residual,centroid");
  CHECK(rows[1].rfind("0,", 0) == 0);
  double eps = 0, ebar = 0;
  CHECK(std::sscanf(rows[2].c_str(), "1,%lf,%lf", &eps, &ebar) == 2);
  CHECK(std::abs(eps - 0.3) < 1e-10);
  CHECK(std::abs(ebar - 1.0) < 1e-10);
}

TEST_CASE("tracking and sweep CSV layout") {
  const auto f = analysis::degenerate_pair_fixture();
  std::ostringstream t;
  io::write_tracking_csv(t, analysis::perturb_and_track(f.h, f.v, f.strength));
  const auto trows = lines(t.str());
  REQUIRE(trows.size() == 3);
  CHECK(trows[0] == "state,eps0,ebar0,eps,ebar,overlap_qorder,overlap_label");

  std::vector<analysis::SweepPoint> points(2);
  points[0].lambda = 0.5;
  points[0].spectrum = sambe::solve(builtin_model({"static", {}}));
  points[0].identity = {1, 0};
  points[1].lambda = 0.6;
  points[1].error = "failed";
  std::ostringstream w;
  io::write_sweep_csv(w, points);
  const auto wrows = lines(w.str());
  REQUIRE(wrows.size() == 3);
  CHECK(wrows[0] == "lambda,state,eps,ebar");
  CAPTURE(wrows[1]);
  CHECK(wrows[1].rfind("0.5,0,0.3", 0) == 0);  // label 0 is the second triplet
}
