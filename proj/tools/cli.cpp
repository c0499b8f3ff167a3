#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pipeline.hpp"
#include "plot.hpp"
#include "qgs/error.hpp"
#include "qgs/linedata.hpp"
#include "qgs/run.hpp"

namespace qgs::cli {

namespace {

// Input and configuration problems map to the usage exit code.
class UsageError : public Error {
 public:
  using Error::Error;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

struct SimulateArgs {
  std::string preset;
  std::string out;
  std::vector<std::string> overrides;
  unsigned workers = 1;
};

struct AnalyzeArgs {
  std::string in;
  std::string out;
  bool no_smooth = false;
  AnalysisOptions options;
  std::string plot;
};

struct LinesArgs {
  std::string linelist;
  GasConditions gas;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double step = 0.01;
  std::string out = "-";
};

struct CalibrateArgs {
  std::string preset = "calibration";
  std::vector<std::string> overrides;
  unsigned workers = 1;
  std::string out;
};

ApparatusPreset resolve_preset(const std::string& ref, const std::vector<std::string>& overrides) {
  return apply_overrides(load_preset(ref), overrides);
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const ApparatusPreset preset = resolve_preset(a.preset, a.overrides);
  RunOptions options;
  options.workers = a.workers;
  err << "simulating '" << preset.name << "': " << preset.frames << " frames of "
      << preset.exposure_s << " s, blank then sample\n";
  const MeasurementSet set = run_measurement_set(preset, options);
  save_measurement_set(set, a.out);
  out << "blank_counts=" << set.blank.total() << "\n";
  out << "sample_counts=" << set.with_sample.total() << "\n";
  out << "out_dir=" << a.out << "\n";
  return kOk;
}

void write_products(const AnalysisProducts& p, const std::filesystem::path& dir) {
  auto put = [&](const std::string& name, const Spectrum& s) {
    write_spectrum_csv(s, dir / (name + ".csv"));
  };
  put("counts_blank_signal", p.blank_counts);
  put("counts_sample_signal", p.sample_counts);
  put("counts_blank_signal_smoothed", p.blank_smoothed);
  put("counts_sample_signal_smoothed", p.sample_smoothed);
  put("transmittance_signal", p.transmittance);
  put("absorbance_signal", p.absorbance);
  put("transmittance_signal_smoothed", p.transmittance_smoothed);
  put("absorbance_signal_smoothed", p.absorbance_smoothed);
  put("counts_blank_idler", p.blank_counts_idler);
  put("counts_sample_idler", p.sample_counts_idler);
  put("transmittance_idler", p.transmittance_idler);
  put("absorbance_idler", p.absorbance_idler);
  put("transmittance_idler_smoothed", p.transmittance_smoothed_idler);
  put("absorbance_idler_smoothed", p.absorbance_smoothed_idler);
  if (p.reference_absorbance_idler) put("reference_absorbance_idler", *p.reference_absorbance_idler);
  write_file(dir / "alert.json", alert_to_json(p.alert));
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  MeasurementSet set;
  try {
    set = load_measurement_set(a.in);
  } catch (const Error& e) {
    throw UsageError("cannot read measurement set '" + a.in + "': " + e.what());
  }
  AnalysisOptions options = a.options;
  options.smooth = !a.no_smooth;
  const AnalysisProducts p = analyze_measurement(set, options);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw Error("cannot create '" + a.out + "': " + ec.message());
  write_products(p, a.out);

  if (!a.plot.empty()) {
    std::vector<PlotPanel> panels;
    panels.push_back({"Measurement", "counts",
                      {{"blank", "#1f77b4", &p.blank_counts_idler},
                       {"sample", "#ff7f0e", &p.sample_counts_idler}}});
    panels.push_back({"Transmittance", "T", {{"T", "#2ca02c", &p.transmittance_smoothed_idler}}});
    PlotPanel absorb{"Absorbance", "A", {{"measured", "#d62728", &p.absorbance_smoothed_idler}}};
    if (p.reference_absorbance_idler) {
      absorb.series.push_back({"reference", "#7f7f7f", &*p.reference_absorbance_idler});
    }
    panels.push_back(absorb);
    write_file(a.plot, render_svg(panels, "idler wavelength (nm)"));
  }

  const std::size_t above = bins_above_one(p.transmittance_smoothed);
  if (above > 0) err << "note: " << above << " transmittance bins exceed 1 (kept as measured)\n";
  out << "alert=" << (p.alert.triggered ? "triggered" : "clear") << "\n";
  out << "bands=" << p.alert.bands.size() << "\n";
  for (const auto& b : p.alert.bands) {
    out << "band " << fixed(b.lambda_lo_nm, 3) << "-" << fixed(b.lambda_hi_nm, 3)
        << " nm mean_A=" << fixed(b.mean_absorbance, 4) << " z=" << fixed(b.z_score, 2) << "\n";
  }
  if (p.reference_score) out << "reference_score=" << fixed(*p.reference_score, 4) << "\n";
  return kOk;
}

int cmd_lines(const LinesArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<LineRecord> lines;
  try {
    lines = load_linelist(a.linelist);
  } catch (const FormatError& e) {
    throw UsageError(a.linelist + ": " + e.what());
  }
  const auto grid = wavelength_grid(a.lambda_min, a.lambda_max, a.step);
  const AbsorptionProfile profile = absorption_profile(lines, a.gas, grid);
  err << lines.size() << " lines, " << grid.size() << " grid points\n";
  if (a.out == "-") {
    write_profile_csv(out, profile);
  } else {
    std::ostringstream text;
    write_profile_csv(text, profile);
    write_file(a.out, text.str());
  }
  return kOk;
}

// T-weighted centroid of the contiguous region above half maximum.
double passband_centre(const std::vector<double>& lambda, const std::vector<double>& t,
                       const std::vector<std::uint8_t>* masked) {
  std::size_t peak = lambda.size();
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (masked && (*masked)[i]) continue;
    if (peak == lambda.size() || t[i] > t[peak]) peak = i;
  }
  if (peak == lambda.size()) throw EmptyResultError("no transmittance data");
  const double half = 0.5 * t[peak];
  auto inside = [&](std::size_t i) { return !(masked && (*masked)[i]) && t[i] >= half; };
  std::size_t lo = peak;
  std::size_t hi = peak;
  while (lo > 0 && inside(lo - 1)) --lo;
  while (hi + 1 < lambda.size() && inside(hi + 1)) ++hi;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    num += lambda[i] * t[i];
    den += t[i];
  }
  return num / den;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  const ApparatusPreset preset = resolve_preset(a.preset, a.overrides);
  if (preset.sample.kind != SampleKind::calibration_filter) {
    throw UsageError("calibrate needs a calibration_filter preset, '" + preset.name + "' has " +
                     std::string(to_string(preset.sample.kind)));
  }
  RunOptions options;
  options.workers = a.workers;
  err << "simulating calibration run '" << preset.name << "'\n";
  const MeasurementSet set = run_measurement_set(preset, options);
  const AnalysisProducts p = analyze_measurement(set, AnalysisOptions{});
  if (!a.out.empty()) {
    save_measurement_set(set, a.out);
    write_products(p, a.out);
  }
  const auto& t = p.transmittance_smoothed_idler;
  const double measured = passband_centre(t.lambda_nm, t.values, &t.masked);
  const SampleConfig sample =
      build_sample(preset.sample, t.lambda_nm.front(), t.lambda_nm.back());
  const double reference =
      passband_centre(sample.transmittance.lambda_nm, sample.transmittance.values, nullptr);
  const double offset = measured - reference;
  out << "measured_centre_nm=" << fixed(measured, 3) << "\n";
  out << "reference_centre_nm=" << fixed(reference, 3) << "\n";
  out << "offset_nm=" << fixed(offset, 3) << "\n";
  out << "instrument_fwhm_nm=" << fixed(p.instrument_fwhm_nm, 3) << "\n";
  const bool ok = std::abs(offset) <= p.instrument_fwhm_nm;
  out << "calibration=" << (ok ? "ok" : "off") << "\n";
  if (!ok) err << "passband centre is off by more than the instrument FWHM\n";
  return ok ? kOk : kRuntimeError;
}

int cmd_presets(const std::string& show, std::ostream& out) {
  if (!show.empty()) {
    out << preset_to_text(load_preset(show));
    return kOk;
  }
  for (const auto& name : builtin_preset_names()) out << name << "\n";
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum ghost spectroscopy simulator and analysis toolkit", "qgs"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run blank and sample acquisitions");
  simulate->add_option("--preset", sim.preset, "Preset name or path")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--set", sim.overrides, "Override, dotted.key=value")->take_all();
  simulate->add_option("--workers", sim.workers, "Worker threads (results do not change)")
      ->check(CLI::PositiveNumber);

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Spectra, transmittance, absorbance and alert");
  analyze->add_option("--in", ana.in, "Measurement directory")->required();
  analyze->add_option("--out", ana.out, "Output directory")->required();
  analyze->add_flag("--no-smooth", ana.no_smooth, "Skip Savitzky-Golay smoothing");
  analyze->add_option("--window", ana.options.window_bins, "Smoothing window (odd)")->capture_default_str();
  analyze->add_option("--order", ana.options.poly_order, "Smoothing polynomial order")->capture_default_str();
  analyze->add_option("--threshold", ana.options.threshold_z, "Alert threshold (z)")->capture_default_str();
  analyze->add_option("--min-bins", ana.options.min_band_bins, "Minimum band width in bins")->capture_default_str();
  analyze->add_option("--plot", ana.plot, "Write an SVG figure");

  LinesArgs lin;
  auto* lines = app.add_subcommand("lines", "Absorption coefficient from a line list");
  lines->add_option("--linelist", lin.linelist, ".par or .csv line list")->required();
  lines->add_option("--temperature", lin.gas.temperature_K, "Temperature (K)")->capture_default_str();
  lines->add_option("--pressure", lin.gas.pressure_total_atm, "Total pressure (atm)")->capture_default_str();
  lines->add_option("--self-fraction", lin.gas.self_fraction, "Absorber mole fraction")->capture_default_str();
  lines->add_option("--mass", lin.gas.molar_mass_amu, "Molar mass (amu)")->capture_default_str();
  lines->add_option("--lambda-min", lin.lambda_min, "Grid start (nm)")->required();
  lines->add_option("--lambda-max", lin.lambda_max, "Grid end (nm)")->required();
  lines->add_option("--step", lin.step, "Grid step (nm)")->capture_default_str();
  lines->add_option("--out", lin.out, "Output CSV, '-' for stdout")->capture_default_str();

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Check the wavelength scale with a filter");
  calibrate->add_option("--preset", cal.preset, "Calibration preset")->capture_default_str();
  calibrate->add_option("--set", cal.overrides, "Override, dotted.key=value")->take_all();
  calibrate->add_option("--workers", cal.workers, "Worker threads")->check(CLI::PositiveNumber);
  calibrate->add_option("--out", cal.out, "Also save the run and its spectra here");

  std::string show;
  auto* presets = app.add_subcommand("presets", "List shipped presets");
  presets->add_option("--show", show, "Print one resolved preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help arrives as CallForHelp from the subcommand parser.
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out, err);
    if (*analyze) return cmd_analyze(ana, out, err);
    if (*lines) return cmd_lines(lin, out, err);
    if (*calibrate) return cmd_calibrate(cal, out, err);
    if (*presets) return cmd_presets(show, out);
  } catch (const UsageError& e) {
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  } catch (const ParameterError& e) {
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  } catch (const FormatError& e) {
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  } catch (const SchemaError& e) {
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  } catch (const ValidationError& e) {
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  } catch (const NoSolutionError& e) {
    err << "qgs: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "qgs: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace qgs::cli
