#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "qgs/error.hpp"
#include "qgs/paths.hpp"
#include "qgs/run.hpp"

using namespace qgs;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("qgs_run_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Noise-free 256-column chip around 810 nm with the JSI matched to it.
ApparatusPreset ideal_preset() {
  ApparatusPreset p = load_preset("ethanol");
  p.sample = SampleSpec{};
  p.bucket.efficiency_eta_i = 1.0;
  p.bucket.dark_rate_hz = 0.0;
  p.bucket.dead_time_ns = 0.0;
  p.spectrometer.pixels_x = 256;
  p.spectrometer.pixels_y = 32;
  p.spectrometer.beam_sigma_px = 3.0;
  p.spectrometer.resolution_fwhm_nm = 0.0;
  p.spectrometer.camera_qe = 1.0;
  p.spectrometer.camera_dark_rate_hz_per_pixel = 0.0;
  p.jsi.signal_min_nm = p.spectrometer.lambda_min_nm();
  p.jsi.signal_max_nm = p.spectrometer.lambda_min_nm() + 256 * 0.12;
  p.jsi.signal_points = 256;
  p.jsi.idler_points = 256;
  p.frames = 6;
  return p;
}

std::vector<double> column_sums(const CountImage& image) {
  std::vector<double> sums(static_cast<std::size_t>(image.pixels_x), 0.0);
  for (int y = 0; y < image.pixels_y; ++y) {
    for (int x = 0; x < image.pixels_x; ++x) sums[x] += static_cast<double>(image.at(y, x));
  }
  return sums;
}

}  // namespace

TEST_CASE("shipped presets load and validate") {
  const auto names = builtin_preset_names();
  CHECK(names == std::vector<std::string>{"acetylene", "calibration", "co2", "dcm", "ethanol"});
  for (const auto& name : names) {
    const auto p = load_preset(name);
    CHECK(p.name == name);
    CHECK_NOTHROW(p.validate());
  }
  CHECK(load_preset("acetylene").crystal.thickness_mm == 3.0);
  CHECK(load_preset("acetylene").spectrometer.grating_lines_per_mm == 1200);
  CHECK(load_preset("dcm").sample.path_length_cm == 4.0);
  CHECK(load_preset("co2").sample.passes == 2);
  CHECK_THROWS_AS(load_preset("benzene"), ConfigError);
}

TEST_CASE("preset text round trip") {
  for (const auto& name : builtin_preset_names()) {
    const auto p = load_preset(name);
    const std::string text = preset_to_text(p);
    const auto again = parse_preset(text, "/");
    CHECK(preset_to_text(again) == text);
  }
}

TEST_CASE("preset parsing errors") {
  CHECK_THROWS_AS(parse_preset("{\"pump\": {\"colour\": 1}}", "/"), ConfigError);
  CHECK_THROWS_AS(parse_preset("{\"frames\": 0}", "/"), ConfigError);
  CHECK_THROWS_AS(parse_preset("{\"exposure_s\": -1}", "/"), ConfigError);
  CHECK_THROWS_AS(parse_preset("{not json", "/"), Error);
  CHECK_THROWS_AS(parse_preset("{\"coincidence\": {\"mode\": \"sometimes\"}}", "/"), ConfigError);
  try {
    parse_preset("{\"spectrometer\": {\"pixel_x\": 3}}", "/");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("spectrometer.pixel_x") != std::string::npos);
  }
}

TEST_CASE("phase matching target sets the cut angle") {
  const auto p = load_preset("ethanol");
  CHECK(p.crystal.cut_angle_rad * 180.0 / std::numbers::pi ==
        doctest::Approx(22.124005257).epsilon(1e-8));
  CHECK(p.pump.bandwidth_nm == doctest::Approx(0.05207706526).epsilon(1e-8));
}

TEST_CASE("apply_overrides") {
  const auto base = load_preset("ethanol");
  const auto p = apply_overrides(base, {"frames=3", "coincidence.mode=ungated",
                                        "spectrometer.lambda_center_nm=805.5"});
  CHECK(p.frames == 3);
  CHECK(p.coincidence.mode == GateMode::ungated);
  CHECK(p.spectrometer.lambda_center_nm == 805.5);
  CHECK_THROWS_AS(apply_overrides(base, {"frame=3"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(base, {"frames"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(base, {"frames=-2"}), ConfigError);

  const auto angled = apply_overrides(base, {"crystal.cut_angle_rad=0.4"});
  CHECK(angled.crystal.cut_angle_rad == 0.4);
  CHECK(angled.phase_match_signal_nm == 0.0);

  const auto keys = preset_keys();
  CHECK(std::find(keys.begin(), keys.end(), "bucket.efficiency_eta_i") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "sample.gas.pressure_total_atm") != keys.end());
}

TEST_CASE("instrument width on the idler axis") {
  auto p = load_preset("ethanol");
  p.pump.bandwidth_nm = 0.0;
  const double li = conjugate_wavelength(532.0, 810.0);
  CHECK(instrument_fwhm_idler_nm(p, 810.0) ==
        doctest::Approx(p.spectrometer.resolution_fwhm_nm * (li / 810.0) * (li / 810.0)));
  p.spectrometer.resolution_fwhm_nm = 0.0;
  p.pump.bandwidth_nm = 0.1;
  CHECK(instrument_fwhm_idler_nm(p, 810.0) == doctest::Approx(0.1 * (li / 532.0) * (li / 532.0)));
}

TEST_CASE("configuration errors surface before any event") {
  auto p = ideal_preset();
  p.sample.kind = SampleKind::gas_cell;
  p.sample.path_length_cm = 10.0;
  p.sample.linelist = "/nonexistent/lines.par";
  CHECK_THROWS_AS(Experiment{p}, Error);
  p = ideal_preset();
  p.sample.kind = SampleKind::liquid_cuvette;
  p.sample.path_length_cm = 1.0;
  CHECK_THROWS_AS(Experiment{p}, ConfigError);
  p = ideal_preset();
  p.jsi.signal_min_nm = 1500.0;
  CHECK_THROWS_AS(Experiment{p}, Error);
}

TEST_CASE("zero pair rate and no darks give an empty image") {
  auto p = ideal_preset();
  p.pump.pair_rate_hz = 0.0;
  AcquisitionStats stats;
  const auto image = run_acquisition(p, false, {}, &stats);
  CHECK(image.total() == 0);
  CHECK(stats.pairs == 0);
  CHECK(image.frames == p.frames);
  CHECK(image.exposure_s == p.exposure_s);
}

TEST_CASE("blank sample config matches use_sample = false") {
  const auto p = ideal_preset();
  const Experiment e(p);
  // Only the role label in the metadata differs.
  CHECK(e.acquire(false, 17).counts == e.acquire(true, 17).counts);
}

TEST_CASE("acquisition is deterministic across worker counts") {
  auto p = load_preset("ethanol");
  p.frames = 5;
  p.exposure_s = 0.05;
  const Experiment e(p);
  AcquisitionStats s1;
  AcquisitionStats s3;
  const auto one = e.acquire(true, 5, {1}, &s1);
  const auto three = e.acquire(true, 5, {3}, &s3);
  CHECK(one == three);
  CHECK(s1.pairs == s3.pairs);
  CHECK(s1.gated_signal == s3.gated_signal);
  CHECK(one.total() > 0);
  CHECK(e.acquire(true, 6, {1}) != one);
}

TEST_CASE("metadata records role, seed and preset") {
  auto p = ideal_preset();
  p.frames = 1;
  const auto image = run_acquisition(p, true);
  REQUIRE(image.metadata.size() == 3);
  CHECK(image.metadata[0] == std::pair<std::string, std::string>{"role", "sample"});
  CHECK(image.metadata[1].second == std::to_string(p.seed));
  CHECK(image.metadata[2].second == preset_to_compact_text(Experiment(p).preset()));
}

TEST_CASE("flat T = 0.5 filter halves every populated column") {
  TempDir dir;
  write(dir.path / "half.csv", "lambda_nm,T\n1000,0.5\n2500,0.5\n");
  auto p = ideal_preset();
  p.sample.kind = SampleKind::calibration_filter;
  p.sample.curve = (dir.path / "half.csv").string();
  const auto set = run_measurement_set(p);
  const auto blank = column_sums(set.blank);
  const auto sample = column_sums(set.with_sample);
  int checked = 0;
  for (std::size_t x = 0; x < blank.size(); ++x) {
    if (blank[x] < 1000.0) continue;
    ++checked;
    const double ratio = sample[x] / blank[x];
    // Sample counts are binomial(n_blank-like, 0.5) against an independent blank.
    const double sigma = 0.5 * std::sqrt(1.0 / sample[x] + 1.0 / blank[x]);
    CHECK(std::abs(ratio - 0.5) < 4.5 * sigma);
  }
  CHECK(checked > 200);
}

TEST_CASE("a narrow idler line appears at the conjugate signal pixel") {
  TempDir dir;
  const double line_nm = 1560.0;
  std::string curve = "lambda_nm,mu_per_cm\n";
  for (double l = 1400.0; l <= 1700.0 + 1e-9; l += 0.02) {
    const double d = (l - line_nm) / 0.2;
    curve += std::to_string(l) + "," + std::to_string(10.0 * std::exp(-0.5 * d * d)) + "\n";
  }
  write(dir.path / "line.csv", curve);
  auto p = ideal_preset();
  p.sample.kind = SampleKind::liquid_cuvette;
  p.sample.path_length_cm = 0.3;
  p.sample.curve = (dir.path / "line.csv").string();
  const auto set = run_measurement_set(p);
  const auto blank = column_sums(set.blank);
  const auto sample = column_sums(set.with_sample);
  std::size_t best = 0;
  double best_ratio = 2.0;
  for (std::size_t x = 0; x < blank.size(); ++x) {
    if (blank[x] < 500.0) continue;
    const double r = sample[x] / blank[x];
    if (r < best_ratio) {
      best_ratio = r;
      best = x;
    }
  }
  const auto want = pixel_of_wavelength(conjugate_wavelength(532.0, line_nm), p.spectrometer);
  REQUIRE(want);
  CHECK(std::abs(static_cast<int>(best) - *want) <= 1);
  CHECK(best_ratio < 0.5);
}

TEST_CASE("measurement sets use distinct seeds and persist exactly") {
  TempDir dir;
  auto p = ideal_preset();
  p.frames = 2;
  const auto set = run_measurement_set(p, {2});
  CHECK(set.blank != set.with_sample);
  CHECK(set.blank.metadata[1].second == std::to_string(derive_seed(p.seed, "blank")));
  save_measurement_set(set, dir.path / "m");
  const auto back = load_measurement_set(dir.path / "m");
  CHECK(back.blank == set.blank);
  CHECK(back.with_sample == set.with_sample);
  CHECK(preset_to_text(back.preset) == preset_to_text(set.preset));
  save_measurement_set(back, dir.path / "again");
  for (const char* f : {"blank.csv", "blank_axis.csv", "sample.csv", "sample_axis.csv",
                        "preset.json"}) {
    CHECK(slurp(dir.path / "m" / f) == slurp(dir.path / "again" / f));
  }
  std::filesystem::remove(dir.path / "m" / "sample_axis.csv");
  CHECK_THROWS_AS(load_measurement_set(dir.path / "m"), Error);
}

TEST_CASE("acetylene preset shows absorption at the line clusters") {
  auto p = load_preset("acetylene");
  p.frames = 40;
  const Experiment e(p);
  const auto blank = column_sums(e.acquire(false, derive_seed(p.seed, "blank")));
  const auto sample = column_sums(e.acquire(true, derive_seed(p.seed, "sample")));
  const auto axis = wavelength_axis(p.spectrometer);
  const auto lines = load_linelist(data_dir() / "lines" / "c2h2_nu1nu3.par");
  double band_lo = 1e9;
  double band_hi = 0.0;
  for (const auto& l : lines) {
    band_lo = std::min(band_lo, 1e7 / l.nu0_wavenumber);
    band_hi = std::max(band_hi, 1e7 / l.nu0_wavenumber);
  }
  int dips = 0;
  int misplaced = 0;
  for (std::size_t x = 0; x < axis.size(); ++x) {
    if (blank[x] < 100.0) continue;
    const double r = sample[x] / blank[x];
    const double sigma = r * std::sqrt(1.0 / std::max(sample[x], 1.0) + 1.0 / blank[x]);
    const double li = conjugate_wavelength(p.pump.wavelength_nm, axis[x]);
    const double tol = 2.0 * instrument_fwhm_idler_nm(p, axis[x]);
    const bool in_band = li >= band_lo - tol && li <= band_hi + tol;
    if (in_band && r < 0.9) ++dips;
    // A significant dip away from the lines would be misplaced absorption.
    if (!in_band && 1.0 - r > 5.0 * sigma) ++misplaced;
  }
  CHECK(dips >= 3);
  CHECK(misplaced == 0);
}
