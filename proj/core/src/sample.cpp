#include "qgs/sample.hpp"

#include <algorithm>
#include <cmath>

#include "qgs/error.hpp"
#include "text_util.hpp"

namespace qgs {

std::string_view to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::blank:
      return "blank";
    case SampleKind::liquid_cuvette:
      return "liquid_cuvette";
    case SampleKind::gas_cell:
      return "gas_cell";
    case SampleKind::calibration_filter:
      return "calibration_filter";
  }
  return "blank";
}

SampleKind sample_kind_from_string(std::string_view name) {
  for (auto kind : {SampleKind::blank, SampleKind::liquid_cuvette, SampleKind::gas_cell,
                    SampleKind::calibration_filter}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown sample kind '" + std::string(name) +
                    "' (blank, liquid_cuvette, gas_cell, calibration_filter)");
}

void TabulatedCurve::validate() const {
  if (lambda_nm.size() != values.size() || lambda_nm.empty()) {
    throw ValidationError("tabulated curve needs equal, nonzero lengths");
  }
  for (std::size_t k = 1; k < lambda_nm.size(); ++k) {
    if (!(lambda_nm[k] > lambda_nm[k - 1])) {
      throw ValidationError("tabulated curve wavelengths must be strictly ascending");
    }
  }
}

bool TabulatedCurve::at(double lambda, double& value) const {
  if (lambda_nm.empty() || lambda < lambda_nm.front() || lambda > lambda_nm.back()) return false;
  if (lambda_nm.size() == 1) {
    value = values.front();
    return true;
  }
  auto it = std::upper_bound(lambda_nm.begin(), lambda_nm.end(), lambda);
  std::size_t hi = static_cast<std::size_t>(it - lambda_nm.begin());
  if (hi >= lambda_nm.size()) hi = lambda_nm.size() - 1;
  const std::size_t lo = hi - 1;
  const double t = (lambda - lambda_nm[lo]) / (lambda_nm[hi] - lambda_nm[lo]);
  value = values[lo] + t * (values[hi] - values[lo]);
  return true;
}

TabulatedCurve parse_transmittance_csv(std::string_view text) {
  TabulatedCurve curve;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (!header_seen) {
      if (cells.size() != 2 || detail::trim(cells[0]) != "lambda_nm" ||
          detail::trim(cells[1]) != "T") {
        throw SchemaError("expected header 'lambda_nm,T'");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 2) throw FormatError("expected two columns", line_no);
    try {
      curve.lambda_nm.push_back(detail::parse_double(cells[0]));
      curve.values.push_back(detail::parse_double(cells[1]));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), line_no);
    }
    if (curve.values.back() < 0.0 || curve.values.back() > 1.0) {
      throw ValidationError("filter transmittance must lie in [0, 1] (line " +
                            std::to_string(line_no) + ")");
    }
  }
  if (!header_seen || curve.lambda_nm.empty()) throw SchemaError("filter curve has no data");
  curve.validate();
  return curve;
}

TabulatedCurve load_transmittance_csv(const std::filesystem::path& path) {
  return parse_transmittance_csv(detail::read_text_file(path));
}

void SampleConfig::validate() const {
  if (kind == SampleKind::blank) return;
  if (!(path_length_cm > 0.0) && kind != SampleKind::calibration_filter) {
    throw ConfigError("sample.path_length_cm must be > 0");
  }
  if (passes != 1 && passes != 2) throw ConfigError("sample.passes must be 1 or 2");
  if (!(round_trip_loss > 0.0 && round_trip_loss <= 1.0)) {
    throw ConfigError("sample.round_trip_loss must lie in (0, 1]");
  }
  if (kind == SampleKind::calibration_filter) {
    transmittance.validate();
  } else {
    if (mu.grid_lambda_nm.empty()) throw ConfigError("sample has no absorption profile loaded");
    mu.validate();
  }
}

namespace {

// T at one wavelength; false when outside the sample data.
bool transmittance_at(const SampleConfig& sample, double lambda_nm, double& T) {
  switch (sample.kind) {
    case SampleKind::blank:
      T = 1.0;
      return true;
    case SampleKind::calibration_filter:
      return sample.transmittance.at(lambda_nm, T);
    case SampleKind::liquid_cuvette:
    case SampleKind::gas_cell: {
      double mu = 0.0;
      if (!sample.mu.mu_at(lambda_nm, mu)) return false;
      T = std::exp(-mu * sample.effective_path_cm()) * sample.round_trip_loss;
      return true;
    }
  }
  return false;
}

}  // namespace

TransmittanceResult transmittance_profile(const SampleConfig& sample,
                                          std::span<const double> grid_lambda_nm) {
  sample.validate();
  TransmittanceResult out;
  out.T.resize(grid_lambda_nm.size());
  for (std::size_t k = 0; k < grid_lambda_nm.size(); ++k) {
    double T = 1.0;
    if (!transmittance_at(sample, grid_lambda_nm[k], T)) {
      T = 1.0;
      ++out.out_of_coverage;
    }
    out.T[k] = T;
  }
  return out;
}

SampleTransmission::SampleTransmission(const SampleConfig& sample) : sample_(&sample) {
  sample.validate();
}

double SampleTransmission::at(double lambda_nm) const {
  double T = 1.0;
  if (!transmittance_at(*sample_, lambda_nm, T)) {
    ++misses_;
    return 1.0;
  }
  return T;
}

bool apply_sample(const PhotonPairEvent& event, const SampleTransmission& sample, Rng& rng) {
  const double T = sample.at(event.lambda_i_nm);
  if (T >= 1.0) return true;
  if (T <= 0.0) return false;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  return uniform(rng) < T;
}

}  // namespace qgs
