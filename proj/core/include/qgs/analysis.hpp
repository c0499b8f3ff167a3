#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qgs/detection.hpp"
#include "qgs/linedata.hpp"

namespace qgs {

enum class SpectrumKind { counts, transmittance, absorbance };
/// Which photon the wavelength axis refers to.
enum class AxisKind { signal, idler };

std::string_view to_string(SpectrumKind kind);
std::string_view to_string(AxisKind axis);

struct Spectrum {
  std::vector<double> lambda_nm;  // ascending
  std::vector<double> values;
  std::vector<double> sigma;  // one standard deviation
  /// Nonzero marks a bin with no usable estimate.
  std::vector<std::uint8_t> masked;
  SpectrumKind kind = SpectrumKind::counts;
  AxisKind axis = AxisKind::signal;

  std::size_t size() const { return lambda_nm.size(); }
  bool is_masked(std::size_t i) const { return masked[i] != 0; }
  /// Equal lengths, finite sigma >= 0 on unmasked bins.
  void validate() const;
};

/// Unmasked transmittance bins above 1. They are kept as measured.
std::size_t bins_above_one(const Spectrum& transmittance);

/// Column sums with Poisson sigma.
Spectrum vertical_bin(const CountImage& image);

/// Savitzky-Golay smoothing with least-squares polynomial fits over a sliding
/// window. Near the edges the window is held against the boundary and the fit
/// is evaluated off-centre. Sigma is propagated through the filter weights;
/// a masked bin masks every output whose window contains it.
Spectrum savgol_smooth(const Spectrum& spectrum, int window_bins, int poly_order);

/// Weights that produce the fitted value at `position` (0-based) within a
/// window of `window_bins` samples.
std::vector<double> savgol_weights(int window_bins, int poly_order, int position);

/// T = I / I0 with sigma_T = T sqrt((sI/I)^2 + (sI0/I0)^2), which is
/// T sqrt(1/I + 1/I0) for Poisson inputs. Bins with I0 <= 0 are masked.
/// Throws EmptyResultError when every bin is masked.
Spectrum transmittance(const Spectrum& sample, const Spectrum& blank);

/// A = -ln T, sigma_A = sigma_T / T. Bins with T <= 0 are masked.
Spectrum absorbance(const Spectrum& transmittance);

/// Relabels each bin with its conjugate wavelength and reverses the order so
/// the axis stays ascending. Signal axes become idler axes and vice versa.
Spectrum conjugate_axis(const Spectrum& spectrum, double lambda_p_nm);

struct AlertBand {
  std::size_t first_bin = 0;
  std::size_t last_bin = 0;
  double lambda_lo_nm = 0.0;
  double lambda_hi_nm = 0.0;
  double mean_absorbance = 0.0;
  /// mean A over the band divided by the standard error of that mean.
  double z_score = 0.0;
};

struct AlertReport {
  std::vector<AlertBand> bands;  // ascending, disjoint
  bool triggered = false;
  double threshold_z = 5.0;
  int min_band_bins = 3;
  AxisKind axis = AxisKind::signal;
};

/// Bands are maximal runs of at least min_band_bins unmasked bins with
/// A / sigma_A > threshold_z.
AlertReport detect_features(const Spectrum& absorbance, double threshold_z, int min_band_bins);

/// Pearson correlation between the measured absorbance and mu * path_cm
/// blurred by a Gaussian of the given FWHM (0 means no blur) and resampled to
/// the measured bins. Only unmasked bins inside the reference coverage count.
/// Throws DomainError when fewer than 2 bins overlap or either side is flat.
double compare_reference(const Spectrum& measured_absorbance, std::span<const double> ref_lambda_nm,
                         std::span<const double> ref_mu_per_cm, double path_cm,
                         double instrument_fwhm_nm);
double compare_reference(const Spectrum& measured_absorbance, const AbsorptionProfile& reference,
                         double path_cm, double instrument_fwhm_nm);

/// The blurred, resampled reference absorbance used by compare_reference;
/// bins outside coverage are masked.
Spectrum reference_absorbance(const Spectrum& measured_absorbance,
                              std::span<const double> ref_lambda_nm,
                              std::span<const double> ref_mu_per_cm, double path_cm,
                              double instrument_fwhm_nm);

/// `lambda_nm,value,sigma,masked` preceded by `# kind=` and `# axis=` lines.
std::string spectrum_to_csv(const Spectrum& spectrum);
Spectrum parse_spectrum_csv(std::string_view text);
void write_spectrum_csv(const Spectrum& spectrum, const std::filesystem::path& path);
Spectrum read_spectrum_csv(const std::filesystem::path& path);

/// JSON document with the bands, their intervals and z-scores.
std::string alert_to_json(const AlertReport& report);
AlertReport parse_alert_json(std::string_view text);

}  // namespace qgs
