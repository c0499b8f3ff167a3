#pragma once

#include <optional>
#include <vector>

#include "qgs/analysis.hpp"
#include "qgs/run.hpp"

namespace qgs::cli {

struct AnalysisOptions {
  bool smooth = true;
  int window_bins = 11;
  int poly_order = 3;
  double threshold_z = 5.0;
  int min_band_bins = 3;
};

/// Absorption the sample was generated from, as mu over an idler axis.
struct Reference {
  std::vector<double> lambda_nm;
  std::vector<double> mu_per_cm;
  double path_cm = 1.0;
};

/// Every spectrum the analyze command writes. "Smoothed" products come from
/// smoothed count spectra and equal the raw ones when smoothing is off.
struct AnalysisProducts {
  Spectrum blank_counts;
  Spectrum sample_counts;
  Spectrum blank_smoothed;
  Spectrum sample_smoothed;
  Spectrum transmittance;
  Spectrum absorbance;
  Spectrum transmittance_smoothed;
  Spectrum absorbance_smoothed;
  // Conjugated (idler-axis) versions of the above.
  Spectrum blank_counts_idler;
  Spectrum sample_counts_idler;
  Spectrum transmittance_idler;
  Spectrum absorbance_idler;
  Spectrum transmittance_smoothed_idler;
  Spectrum absorbance_smoothed_idler;
  /// Computed on absorbance_smoothed_idler.
  AlertReport alert;
  std::optional<Reference> reference;
  /// Reference blurred to the instrument and resampled to the idler bins.
  std::optional<Spectrum> reference_absorbance_idler;
  std::optional<double> reference_score;
  double instrument_fwhm_nm = 0.0;
};

/// Sample data of a preset as a reference curve over [lo, hi]; nothing for
/// a blank sample. Gas references only span the line list plus `pad_nm` on
/// either side, since the absorption is zero elsewhere.
std::optional<Reference> sample_reference(const ApparatusPreset& preset, double idler_lo_nm,
                                          double idler_hi_nm, double pad_nm);

/// Gas references are padded by this many instrument FWHM.
inline constexpr double kReferencePadFwhm = 5.0;

AnalysisProducts analyze_measurement(const MeasurementSet& set, const AnalysisOptions& options);

}  // namespace qgs::cli
