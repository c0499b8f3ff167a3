#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qgs/detection.hpp"
#include "qgs/linedata.hpp"
#include "qgs/sample.hpp"
#include "qgs/source.hpp"

namespace qgs {

/// Sample as described in a preset file; data is loaded by Experiment.
struct SampleSpec {
  SampleKind kind = SampleKind::blank;
  double path_length_cm = 0.0;
  int passes = 1;
  double round_trip_loss = 1.0;
  /// mu curve (liquid_cuvette) or T curve (calibration_filter).
  std::string curve;
  /// .par or .csv line list (gas_cell).
  std::string linelist;
  GasConditions gas;
  /// Wavelength step of the synthesized gas profile.
  double grid_step_nm = 0.005;
};

struct ApparatusPreset {
  std::string name;
  PumpConfig pump;
  CrystalConfig crystal;
  /// When > 0, crystal.cut_angle_rad is solved so this signal wavelength is
  /// phase matched with its conjugate idler.
  double phase_match_signal_nm = 0.0;
  JsiGrid jsi;
  BucketConfig bucket;
  SpectrometerConfig spectrometer;
  CoincidenceConfig coincidence;
  SampleSpec sample;
  double exposure_s = 0.3;  // per frame
  int frames = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Parses preset text (JSON). Relative data paths resolve against base_dir.
/// Missing keys keep their defaults; unknown keys are a ConfigError.
ApparatusPreset parse_preset(std::string_view text, const std::filesystem::path& base_dir);
/// Complete, resolved preset as pretty-printed JSON with a trailing newline.
std::string preset_to_text(const ApparatusPreset& preset);
/// Same content on a single line (embedded in image headers).
std::string preset_to_compact_text(const ApparatusPreset& preset);

/// Names of the shipped presets.
std::vector<std::string> builtin_preset_names();
/// An existing file path, or the name of a shipped preset.
ApparatusPreset load_preset(const std::string& name_or_path);

/// Every dotted key accepted by apply_overrides.
std::vector<std::string> preset_keys();
/// Applies `dotted.key=value` assignments. Values are read as JSON when they
/// parse, otherwise as strings. Unknown keys throw ConfigError.
ApparatusPreset apply_overrides(const ApparatusPreset& preset,
                                const std::vector<std::string>& assignments);

/// Idler-axis FWHM of the instrument at a signal wavelength: the optical blur
/// mapped through the conjugation, in quadrature with the pump bandwidth.
double instrument_fwhm_idler_nm(const ApparatusPreset& preset, double lambda_s_nm);

struct RunOptions {
  /// Frames are dealt round-robin to workers; results do not depend on this.
  unsigned workers = 1;
};

struct AcquisitionStats {
  std::uint64_t pairs = 0;
  std::uint64_t idler_survived = 0;
  std::uint64_t true_clicks = 0;
  std::uint64_t dark_clicks = 0;
  std::uint64_t dead_time_losses = 0;
  std::uint64_t gated_signal = 0;
  std::uint64_t camera_signal_counts = 0;
  std::uint64_t camera_dark_counts = 0;
  double gate_open_ns = 0.0;
  std::uint64_t out_of_coverage = 0;

  AcquisitionStats& operator+=(const AcquisitionStats& other);
};

/// A validated preset with its JSI table and sample data loaded.
class Experiment {
 public:
  /// All configuration errors surface here, before any event is generated.
  explicit Experiment(ApparatusPreset preset);

  const ApparatusPreset& preset() const { return preset_; }
  const SampleConfig& sample() const { return sample_; }
  const PairSource& source() const { return source_; }

  /// Pipeline per pair: sample_pair -> apply_sample (idler) -> spad click
  /// train -> coincidence gate -> camera. Frame seeds derive from `seed`.
  CountImage acquire(bool use_sample, std::uint64_t seed, const RunOptions& options = {},
                     AcquisitionStats* stats = nullptr) const;

 private:
  void simulate_frame(bool use_sample, std::uint64_t seed, int frame, CountImage& image,
                      AcquisitionStats& stats) const;

  ApparatusPreset preset_;
  SampleConfig sample_;
  PairSource source_;
};

/// Build the sample data (profile synthesis, curve loading) for a preset.
SampleConfig build_sample(const SampleSpec& spec, double idler_lo_nm, double idler_hi_nm);

CountImage run_acquisition(const ApparatusPreset& preset, bool use_sample,
                           const RunOptions& options = {}, AcquisitionStats* stats = nullptr);

struct MeasurementSet {
  CountImage blank;
  CountImage with_sample;
  ApparatusPreset preset;
};

/// Blank with seed derive_seed(seed, "blank"), then sample with
/// derive_seed(seed, "sample").
MeasurementSet run_measurement_set(const ApparatusPreset& preset, const RunOptions& options = {});

/// Directory with blank.csv, blank_axis.csv, sample.csv, sample_axis.csv, preset.json.
void save_measurement_set(const MeasurementSet& set, const std::filesystem::path& dir);
MeasurementSet load_measurement_set(const std::filesystem::path& dir);

}  // namespace qgs
