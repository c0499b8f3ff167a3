#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "qgs/linedata.hpp"
#include "qgs/random.hpp"
#include "qgs/source.hpp"

namespace qgs {

enum class SampleKind { blank, liquid_cuvette, gas_cell, calibration_filter };

std::string_view to_string(SampleKind kind);
SampleKind sample_kind_from_string(std::string_view name);

/// Tabulated curve y(lambda), ascending lambda, linear interpolation.
struct TabulatedCurve {
  std::vector<double> lambda_nm;
  std::vector<double> values;

  void validate() const;
  bool at(double lambda, double& value) const;
};

/// `lambda_nm,T` CSV for calibration filters.
TabulatedCurve parse_transmittance_csv(std::string_view text);
TabulatedCurve load_transmittance_csv(const std::filesystem::path& path);

struct SampleConfig {
  SampleKind kind = SampleKind::blank;
  double path_length_cm = 0.0;
  int passes = 1;
  /// Fixed multiplicative loss applied once per measurement (double-pass optics).
  double round_trip_loss = 1.0;
  AbsorptionProfile mu;         // liquid_cuvette, gas_cell
  TabulatedCurve transmittance;  // calibration_filter

  void validate() const;
  double effective_path_cm() const { return path_length_cm * passes; }
};

struct TransmittanceResult {
  std::vector<double> T;
  /// Bins outside the sample data; they are reported as T = 1.
  std::size_t out_of_coverage = 0;
};

TransmittanceResult transmittance_profile(const SampleConfig& sample,
                                          std::span<const double> grid_lambda_nm);

/// Per-photon view of a sample; counts lookups that fell outside its data.
class SampleTransmission {
 public:
  explicit SampleTransmission(const SampleConfig& sample);

  double at(double lambda_nm) const;
  std::size_t out_of_coverage() const { return misses_; }

 private:
  const SampleConfig* sample_;
  mutable std::size_t misses_ = 0;
};

/// Bernoulli thinning of the idler with p = T(lambda_i).
bool apply_sample(const PhotonPairEvent& event, const SampleTransmission& sample, Rng& rng);

}  // namespace qgs
