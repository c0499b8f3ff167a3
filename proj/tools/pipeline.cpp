#include "pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "qgs/error.hpp"

namespace qgs::cli {

std::optional<Reference> sample_reference(const ApparatusPreset& preset, double idler_lo_nm,
                                          double idler_hi_nm, double pad_nm) {
  const SampleSpec& spec = preset.sample;
  if (spec.kind == SampleKind::blank) return std::nullopt;
  if (spec.kind == SampleKind::gas_cell) {
    const auto lines = load_linelist(spec.linelist);
    if (lines.empty()) return std::nullopt;
    double lo = idler_hi_nm;
    double hi = idler_lo_nm;
    for (const auto& line : lines) {
      const double lambda = 1e7 / line.nu0_wavenumber;
      lo = std::min(lo, lambda);
      hi = std::max(hi, lambda);
    }
    lo = std::max(lo - pad_nm, idler_lo_nm);
    hi = std::min(hi + pad_nm, idler_hi_nm);
    if (!(hi > lo)) return std::nullopt;
    const auto grid = wavelength_grid(lo, hi, spec.grid_step_nm);
    const AbsorptionProfile profile = absorption_profile(lines, spec.gas, grid);
    Reference ref;
    ref.lambda_nm = profile.grid_lambda_nm;
    ref.mu_per_cm = profile.mu_per_cm;
    ref.path_cm = spec.path_length_cm * spec.passes;
    return ref;
  }
  const SampleConfig sample = build_sample(spec, idler_lo_nm, idler_hi_nm);
  Reference ref;
  if (spec.kind == SampleKind::calibration_filter) {
    ref.lambda_nm = sample.transmittance.lambda_nm;
    ref.mu_per_cm.reserve(ref.lambda_nm.size());
    for (double t : sample.transmittance.values) {
      ref.mu_per_cm.push_back(-std::log(std::max(t, 1e-12)));
    }
    ref.path_cm = 1.0;
  } else {
    ref.lambda_nm = sample.mu.grid_lambda_nm;
    ref.mu_per_cm = sample.mu.mu_per_cm;
    ref.path_cm = sample.effective_path_cm();
  }
  return ref;
}

AnalysisProducts analyze_measurement(const MeasurementSet& set, const AnalysisOptions& options) {
  const double lp = set.preset.pump.wavelength_nm;
  AnalysisProducts r;
  r.blank_counts = vertical_bin(set.blank);
  r.sample_counts = vertical_bin(set.with_sample);
  if (options.smooth) {
    r.blank_smoothed = savgol_smooth(r.blank_counts, options.window_bins, options.poly_order);
    r.sample_smoothed = savgol_smooth(r.sample_counts, options.window_bins, options.poly_order);
  } else {
    r.blank_smoothed = r.blank_counts;
    r.sample_smoothed = r.sample_counts;
  }
  r.transmittance = transmittance(r.sample_counts, r.blank_counts);
  r.absorbance = absorbance(r.transmittance);
  r.transmittance_smoothed = transmittance(r.sample_smoothed, r.blank_smoothed);
  r.absorbance_smoothed = absorbance(r.transmittance_smoothed);

  r.blank_counts_idler = conjugate_axis(r.blank_counts, lp);
  r.sample_counts_idler = conjugate_axis(r.sample_counts, lp);
  r.transmittance_idler = conjugate_axis(r.transmittance, lp);
  r.absorbance_idler = conjugate_axis(r.absorbance, lp);
  r.transmittance_smoothed_idler = conjugate_axis(r.transmittance_smoothed, lp);
  r.absorbance_smoothed_idler = conjugate_axis(r.absorbance_smoothed, lp);

  r.alert = detect_features(r.absorbance_smoothed_idler, options.threshold_z,
                            options.min_band_bins);

  const auto& axis = r.absorbance_smoothed_idler.lambda_nm;
  const double centre_signal = set.preset.spectrometer.lambda_center_nm;
  r.instrument_fwhm_nm = instrument_fwhm_idler_nm(set.preset, centre_signal);
  r.reference = sample_reference(set.preset, axis.front(), axis.back(),
                                kReferencePadFwhm * r.instrument_fwhm_nm);
  if (r.reference) {
    r.reference_absorbance_idler =
        reference_absorbance(r.absorbance_smoothed_idler, r.reference->lambda_nm,
                             r.reference->mu_per_cm, r.reference->path_cm, r.instrument_fwhm_nm);
    try {
      r.reference_score =
          compare_reference(r.absorbance_smoothed_idler, r.reference->lambda_nm,
                            r.reference->mu_per_cm, r.reference->path_cm, r.instrument_fwhm_nm);
    } catch (const DomainError&) {
      r.reference_score.reset();
    }
  }
  return r;
}

}  // namespace qgs::cli
