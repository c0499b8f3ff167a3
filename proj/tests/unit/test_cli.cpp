#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "cli.hpp"
#include "qgs/analysis.hpp"
#include "qgs/linedata.hpp"
#include "qgs/paths.hpp"

using namespace qgs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qgs_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"qgs"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A quick run: 2 frames of 50 ms.
const std::string kFrames = "frames=2";
const std::string kExposure = "exposure_s=0.05";

}  // namespace

TEST_CASE("help and usage errors") {
  auto r = run({"--help"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("simulate") != std::string::npos);
  CHECK(run({"simulate", "--help"}).code == cli::kOk);
  CHECK(run({}).code == cli::kUsageError);
  CHECK(run({"frobnicate"}).code == cli::kUsageError);
  r = run({"simulate", "--out", "x"});
  CHECK(r.code == cli::kUsageError);
  CHECK(r.out.empty());
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("presets verb") {
  auto r = run({"presets"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == "acetylene\ncalibration\nco2\ndcm\nethanol\n");
  r = run({"presets", "--show", "co2"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("\"pressure_total_atm\"") != std::string::npos);
  CHECK(run({"presets", "--show", "nope"}).code == cli::kUsageError);
}

TEST_CASE("simulate errors") {
  TempDir dir;
  auto r = run({"simulate", "--preset", "unobtainium", "--out", (dir.path / "a").string()});
  CHECK(r.code == cli::kUsageError);
  CHECK(r.err.find("ethanol") != std::string::npos);
  r = run({"simulate", "--preset", "ethanol", "--out", (dir.path / "b").string(), "--set",
           "pump.colour=3"});
  CHECK(r.code == cli::kUsageError);
  CHECK(r.err.find("pump.pair_rate_hz") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "b"));
  r = run({"simulate", "--preset", "ethanol", "--out", (dir.path / "c").string(), "--set",
           "frames=0"});
  CHECK(r.code == cli::kUsageError);
}

TEST_CASE("simulate is deterministic and worker independent") {
  TempDir dir;
  const auto a = dir.path / "a";
  const auto b = dir.path / "b";
  const auto c = dir.path / "c";
  REQUIRE(run({"simulate", "--preset", "ethanol", "--out", a.string(), "--set", "seed=7", kFrames,
               kExposure})
              .code == cli::kOk);
  REQUIRE(run({"simulate", "--preset", "ethanol", "--out", b.string(), "--set", "seed=7", kFrames,
               kExposure})
              .code == cli::kOk);
  REQUIRE(run({"simulate", "--preset", "ethanol", "--out", c.string(), "--set", "seed=7", kFrames,
               kExposure, "--workers", "2"})
              .code == cli::kOk);
  for (const char* f : {"blank.csv", "blank_axis.csv", "sample.csv", "sample_axis.csv",
                        "preset.json"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
}

TEST_CASE("analyze writes spectra and an alert report") {
  TempDir dir;
  const auto m = dir.path / "m";
  REQUIRE(run({"simulate", "--preset", "ethanol", "--out", m.string(), "--set", kFrames,
               kExposure})
              .code == cli::kOk);
  const auto out = dir.path / "out";
  const auto plot = dir.path / "fig.svg";
  auto r = run({"analyze", "--in", m.string(), "--out", out.string(), "--plot", plot.string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("alert=") == 0);
  for (const char* f : {"counts_blank_signal.csv", "transmittance_signal.csv",
                        "absorbance_signal.csv", "absorbance_idler.csv",
                        "absorbance_idler_smoothed.csv", "alert.json"}) {
    CHECK(fs::exists(out / f));
  }
  const auto a = read_spectrum_csv(out / "absorbance_idler.csv");
  CHECK(a.axis == AxisKind::idler);
  CHECK(a.kind == SpectrumKind::absorbance);
  CHECK(slurp(plot).find("<svg") != std::string::npos);
  CHECK_NOTHROW(parse_alert_json(slurp(out / "alert.json")));

  const auto raw = dir.path / "raw";
  REQUIRE(run({"analyze", "--in", m.string(), "--out", raw.string(), "--no-smooth"}).code ==
          cli::kOk);
  for (const char* f : {"counts_blank_signal.csv", "transmittance_signal.csv",
                        "absorbance_signal.csv", "transmittance_idler.csv",
                        "absorbance_idler.csv"}) {
    CHECK(slurp(out / f) == slurp(raw / f));
  }
  CHECK(slurp(out / "absorbance_idler_smoothed.csv") !=
        slurp(raw / "absorbance_idler_smoothed.csv"));

  r = run({"analyze", "--in", m.string(), "--out", raw.string(), "--window", "4"});
  CHECK(r.code == cli::kUsageError);
}

TEST_CASE("analyze of a blank-only set raises no alert") {
  TempDir dir;
  const auto m = dir.path / "m";
  REQUIRE(run({"simulate", "--preset", "ethanol", "--out", m.string(), "--set", "sample.kind=blank",
               "frames=4", "exposure_s=0.1"})
              .code == cli::kOk);
  const auto r = run({"analyze", "--in", m.string(), "--out", (dir.path / "o").string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("alert=clear") == 0);
  const auto a = read_spectrum_csv(dir.path / "o" / "absorbance_signal_smoothed.csv");
  double sum = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.is_masked(i) || a.sigma[i] <= 0.0) continue;
    sum += a.values[i] / (a.sigma[i] * a.sigma[i]);
    weight += 1.0 / (a.sigma[i] * a.sigma[i]);
  }
  REQUIRE(weight > 0.0);
  CHECK(std::abs(sum / weight) < 5.0 / std::sqrt(weight));
}

TEST_CASE("analyze of a malformed directory") {
  TempDir dir;
  auto r = run({"analyze", "--in", (dir.path / "missing").string(), "--out",
                (dir.path / "o").string()});
  CHECK(r.code == cli::kUsageError);
  fs::create_directories(dir.path / "broken");
  std::ofstream(dir.path / "broken" / "blank.csv") << "garbage\n";
  r = run({"analyze", "--in", (dir.path / "broken").string(), "--out", (dir.path / "o").string()});
  CHECK(r.code == cli::kUsageError);
}

TEST_CASE("lines verb") {
  TempDir dir;
  const std::string par = (data_dir() / "lines" / "c2h2_nu1nu3.par").string();
  const auto lines = load_linelist(par);
  const double centre = 1e7 / lines[10].nu0_wavenumber;
  const auto p1 = dir.path / "p1.csv";
  const auto p2 = dir.path / "p2.csv";
  const std::string lo = std::to_string(centre - 0.2);
  const std::string hi = std::to_string(centre + 0.2);
  for (const auto& p : {p1, p2}) {
    REQUIRE(run({"lines", "--linelist", par, "--temperature", "300", "--pressure", "0.001",
                 "--self-fraction", "1", "--mass", "26.04", "--lambda-min", lo, "--lambda-max", hi,
                 "--step", "0.0001", "--out", p.string()})
                .code == cli::kOk);
  }
  CHECK(slurp(p1) == slurp(p2));
  const auto profile = parse_profile_csv(slurp(p1));
  double mu = 0.0;
  REQUIRE(profile.mu_at(centre, mu));
  CHECK(mu > 0.0);

  std::ofstream(dir.path / "empty.par").close();
  auto r = run({"lines", "--linelist", (dir.path / "empty.par").string(), "--lambda-min", "1500",
                "--lambda-max", "1501", "--out", "-"});
  REQUIRE(r.code == cli::kOk);
  const auto zero = parse_profile_csv(r.out);
  for (double v : zero.mu_per_cm) CHECK(v == 0.0);

  std::ofstream(dir.path / "bad.par") << slurp(par).substr(0, 161) << "short line\n";
  r = run({"lines", "--linelist", (dir.path / "bad.par").string(), "--lambda-min", "1500",
           "--lambda-max", "1501"});
  CHECK(r.code == cli::kUsageError);
  CHECK(r.err.find("line 2") != std::string::npos);

  r = run({"lines", "--linelist", par, "--lambda-min", "1501", "--lambda-max", "1500"});
  CHECK(r.code == cli::kUsageError);
}

TEST_CASE("calibrate verb") {
  const auto r = run({"calibrate", "--set", "frames=40"});
  INFO(r.out << r.err);
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("calibration=ok") != std::string::npos);
}

TEST_CASE("analyze of an acetylene simulation triggers an alert") {
  TempDir dir;
  const auto m = dir.path / "m";
  REQUIRE(run({"simulate", "--preset", "acetylene", "--out", m.string(), "--set", "frames=60"})
              .code == cli::kOk);
  const auto r = run({"analyze", "--in", m.string(), "--out", (dir.path / "o").string()});
  INFO(r.out);
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("alert=triggered") == 0);
}
