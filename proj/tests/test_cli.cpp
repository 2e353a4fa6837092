#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "floquet/cli.hpp"
#include "floquet/io.hpp"

using namespace floquet;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

fs::path workdir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "floquet_cli_tests" / name;
  fs::remove_all(dir);
  return dir;
}

Run run(std::vector<std::string> args, const fs::path& dir) {
  args.push_back("--out");
  args.push_back(dir.string());
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream l(line);
    for (std::string cell; std::getline(l, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double num(const std::string& s) { return std::stod(s); }

}  // namespace

TEST_CASE("solve writes the static triplets") {
  const auto dir = workdir("solve_static");
  const auto r = run({"solve", "--builtin", "static", "--param", "omega=0.7"}, dir);
  REQUIRE(r.code == cli::ok);
  const auto rows = csv(dir / "spectrum.csv");
  REQUIRE(rows.size() == 3);
  CHECK(std::abs(num(rows[1][1]) - 0.0) < 1e-10);
  CHECK(std::abs(num(rows[1][2]) - 0.0) < 1e-10);
  CHECK(std::abs(num(rows[2][1]) - 0.3) < 1e-10);
  CHECK(std::abs(num(rows[2][2]) - 1.0) < 1e-10);
  CHECK(fs::exists(dir / "spectrum.json"));
  CHECK(io::load_spectrum(dir / "spectrum.json").triplets.size() == 2);
}

TEST_CASE("solve on the circular drive pairs eps and Ebar") {
  const auto dir = workdir("solve_circular");
  REQUIRE(run({"solve", "--builtin", "two_level_circular"}, dir).code == cli::ok);
  const auto rows = csv(dir / "spectrum.csv");
  REQUIRE(rows.size() == 3);
  CHECK(std::abs(num(rows[1][1]) - 1.070156) < 1e-6);
  CHECK(std::abs(num(rows[1][2]) - -0.265496) < 1e-6);
  CHECK(std::abs(num(rows[2][1]) - 0.429844) < 1e-6);
  CHECK(std::abs(num(rows[2][2]) - 0.265496) < 1e-6);
}

TEST_CASE("model files are read") {
  const auto dir = workdir("model_file");
  io::write_text(dir / "model.json", R"({"builtin": "two_level_linear", "params": {"V": 0.2}})");
  CHECK(run({"solve", "--model", (dir / "model.json").string()}, dir).code == cli::ok);
}

TEST_CASE("configuration errors exit 2 with a JSON error") {
  SUBCASE("missing model file") {
    const auto dir = workdir("missing_model");
    const auto r = run({"solve", "--model", (dir / "nope.json").string()}, dir);
    CHECK(r.code == cli::config);
    const auto j = json::parse(slurp(dir / "error.json"));
    CHECK(j["kind"] == "config");
    CHECK(json::parse(r.err)["kind"] == "config");
  }
  SUBCASE("no model at all") {
    CHECK(run({"solve"}, workdir("no_model")).code == cli::config);
  }
  SUBCASE("both model sources") {
    CHECK(run({"solve", "--builtin", "static", "--model", "x.json"}, workdir("both")).code == cli::config);
  }
  SUBCASE("unknown parameter") {
    CHECK(run({"solve", "--builtin", "static", "--param", "gamma=1"}, workdir("param")).code == cli::config);
    CHECK(run({"solve", "--builtin", "static", "--param", "omega"}, workdir("param2")).code == cli::config);
  }
  SUBCASE("bad subcommand or flag") {
    CHECK(run({"frobnicate"}, workdir("sub")).code == cli::config);
    CHECK(run({"solve", "--builtin", "static", "--harmonics", "-3"}, workdir("harm")).code == cli::config);
  }
}

TEST_CASE("compare passes on the static and circular models") {
  for (const std::string model : {"static", "two_level_circular"}) {
    CAPTURE(model);
    const auto dir = workdir("compare_" + model);
    REQUIRE(run({"compare", "--builtin", model}, dir).code == cli::ok);
    const auto rows = csv(dir / "compare.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"state", "eps_sambe", "eps_oracle", "d_eps", "ebar_sambe",
                                              "ebar_oracle", "d_ebar", "overlap", "pass"});
    const double bound = model == "static" ? 1e-12 : 1e-6;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(num(rows[i][3]) <= bound);
      CHECK(num(rows[i][6]) <= bound);
      CHECK(rows[i][8] == "1");
    }
  }
}

TEST_CASE("compare with a tiny cutoff on a strong drive fails the gate") {
  const auto dir = workdir("compare_tiny");
  const auto r = run({"compare", "--builtin", "two_level_linear", "--param", "V=3", "--harmonics", "1"}, dir);
  CHECK(r.code == cli::gate);
  CHECK(json::parse(slurp(dir / "error.json"))["kind"] == "gate");
}

TEST_CASE("variational ground state matches solve") {
  const auto a = workdir("var_static");
  const auto b = workdir("var_static_solve");
  REQUIRE(run({"variational", "--builtin", "static"}, a).code == cli::ok);
  REQUIRE(run({"solve", "--builtin", "static"}, b).code == cli::ok);
  const auto v = csv(a / "variational.csv");
  const auto s = csv(b / "spectrum.csv");
  REQUIRE(v.size() == 2);
  CHECK(v[0].back() == "converged");
  CHECK(std::abs(num(v[1][1]) - num(s[1][1])) <= 1e-6);
  CHECK(std::abs(num(v[1][2]) - num(s[1][2])) <= 1e-6);
  const auto j = json::parse(slurp(a / "variational.json"));
  CHECK(j["triplets"][0]["converged"] == true);
  CHECK(j["triplets"][0].contains("trace"));

  const auto two = workdir("var_two");
  REQUIRE(run({"variational", "--builtin", "two_level_circular", "--states", "2"}, two).code == cli::ok);
  const auto rows = csv(two / "variational.csv");
  REQUIRE(rows.size() == 3);
  CHECK(std::abs(num(rows[2][2]) - 0.265496) < 1e-6);
}

TEST_CASE("variational with a one-iteration budget exits 4") {
  const auto dir = workdir("var_budget");
  const auto r = run({"variational", "--builtin", "two_level_circular", "--max-iters", "1", "--restarts", "0"}, dir);
  CHECK(r.code == cli::nonconvergence);
  const auto rows = csv(dir / "variational.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].back() == "0");
  CHECK(json::parse(slurp(dir / "error.json"))["kind"] == "convergence");
}

TEST_CASE("perturb fixture reproduces the pairing contrast") {
  const auto dir = workdir("perturb");
  const auto r = run({"perturb", "--fixture", "degenerate_pair"}, dir);
  REQUIRE(r.code == cli::ok);
  const auto rows = csv(dir / "tracking.csv");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(num(rows[i][5]) <= 0.9);
    CHECK(num(rows[i][6]) >= 0.999);
  }
  CHECK(run({"perturb", "--fixture", "nope"}, workdir("perturb_bad")).code == cli::config);
  CHECK(run({"perturb", "--fixture", "degenerate_pair", "--strength", "1"}, workdir("perturb_strong")).code ==
        cli::config);

  const auto custom = workdir("perturb_file");
  io::write_text(custom / "v.json", R"({"dim": 2, "omega": 0.7, "harmonics": [{"m": 0, "re": [[1, 0], [0, 0]]}]})");
  CHECK(run({"perturb", "--builtin", "static", "--perturbation", (custom / "v.json").string()}, custom).code ==
        cli::ok);
}

TEST_CASE("sweeps") {
  SUBCASE("zero-length axis gives one point") {
    const auto dir = workdir("sweep_point");
    REQUIRE(run({"sweep", "--builtin", "two_level_circular", "--axis", "V", "--from", "0.2", "--to", "0.2"}, dir)
                .code == cli::ok);
    const auto rows = csv(dir / "sweep.csv");
    CHECK(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"lambda", "state", "eps", "ebar"});
  }
  SUBCASE("unknown axis") {
    CHECK(run({"sweep", "--builtin", "static", "--axis", "zeta", "--from", "0", "--to", "1"}, workdir("sweep_bad"))
              .code == cli::config);
  }
  SUBCASE("range with a failing point completes") {
    const auto dir = workdir("sweep_fail");
    REQUIRE(run({"sweep", "--builtin", "static", "--axis", "omega", "--from", "-0.5", "--to", "0.5", "--count", "3"},
                dir)
                .code == cli::ok);
    CHECK(csv(dir / "sweep.csv").size() == 3);  // header + one good point with two states
    const auto failures = json::parse(slurp(dir / "sweep_failures.json"));
    CHECK(failures.size() == 2);
  }
}

TEST_CASE("repeated runs write identical results apart from the timestamp") {
  const auto a = workdir("det_a");
  const auto b = workdir("det_b");
  REQUIRE(run({"solve", "--builtin", "driven_ring"}, a).code == cli::ok);
  REQUIRE(run({"solve", "--builtin", "driven_ring"}, b).code == cli::ok);
  auto ja = json::parse(slurp(a / "spectrum.json"));
  auto jb = json::parse(slurp(b / "spectrum.json"));
  ja["meta"].erase("timestamp");
  jb["meta"].erase("timestamp");
  CHECK(ja == jb);
  CHECK(slurp(a / "spectrum.csv") == slurp(b / "spectrum.csv"));
}

TEST_CASE("help exits 0") {
  std::ostringstream out, err;
  CHECK(cli::run({"--help"}, out, err) == cli::ok);
  CHECK(out.str().find("solve") != std::string::npos);
}
