#include "qgs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "qgs/error.hpp"
#include "qgs/source.hpp"
#include "text_util.hpp"

namespace qgs {

namespace {

Spectrum like(const Spectrum& s, SpectrumKind kind) {
  Spectrum out;
  out.lambda_nm = s.lambda_nm;
  out.values.assign(s.size(), 0.0);
  out.sigma.assign(s.size(), 0.0);
  out.masked.assign(s.size(), 0);
  out.kind = kind;
  out.axis = s.axis;
  return out;
}

// Rows of the hat matrix Q Q^T for a Legendre basis on the window; row r
// evaluates the least-squares fit at sample r.
Eigen::MatrixXd savgol_projection(int window, int order) {
  if (window < 3 || window % 2 == 0) {
    throw ParameterError("Savitzky-Golay window must be odd and >= 3, got " +
                         std::to_string(window));
  }
  if (order < 0 || order >= window) {
    throw ParameterError("Savitzky-Golay order must be in [0, window), got " +
                         std::to_string(order));
  }
  const int half = window / 2;
  Eigen::MatrixXd basis(window, order + 1);
  for (int j = 0; j < window; ++j) {
    const double x = static_cast<double>(j - half) / half;
    double p_prev = 1.0;
    double p = x;
    basis(j, 0) = 1.0;
    if (order >= 1) basis(j, 1) = x;
    for (int k = 1; k < order; ++k) {
      const double next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
      p_prev = p;
      p = next;
      basis(j, k + 1) = p;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(window, order + 1);
  return q * q.transpose();
}

AxisKind axis_from_string(std::string_view s) {
  if (s == "signal") return AxisKind::signal;
  if (s == "idler") return AxisKind::idler;
  throw FormatError("unknown axis '" + std::string(s) + "'");
}

SpectrumKind kind_from_string(std::string_view s) {
  if (s == "counts") return SpectrumKind::counts;
  if (s == "transmittance") return SpectrumKind::transmittance;
  if (s == "absorbance") return SpectrumKind::absorbance;
  throw FormatError("unknown spectrum kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::counts: return "counts";
    case SpectrumKind::transmittance: return "transmittance";
    case SpectrumKind::absorbance: return "absorbance";
  }
  return "counts";
}

std::string_view to_string(AxisKind axis) {
  return axis == AxisKind::signal ? "signal" : "idler";
}

void Spectrum::validate() const {
  const std::size_t n = lambda_nm.size();
  if (values.size() != n || sigma.size() != n || masked.size() != n) {
    throw ValidationError("spectrum arrays differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lambda_nm[i])) throw ValidationError("non-finite wavelength");
    if (i > 0 && !(lambda_nm[i] > lambda_nm[i - 1])) {
      throw ValidationError("spectrum axis must be strictly ascending");
    }
    if (masked[i]) continue;
    if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i])) {
      throw ValidationError("sigma must be finite and >= 0 at bin " + std::to_string(i));
    }
  }
}

std::size_t bins_above_one(const Spectrum& t) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!t.is_masked(i) && t.values[i] > 1.0) ++n;
  }
  return n;
}

Spectrum vertical_bin(const CountImage& image) {
  image.validate();
  Spectrum s;
  s.lambda_nm = image.wavelength_axis_nm;
  s.values.assign(image.pixels_x, 0.0);
  s.sigma.assign(image.pixels_x, 0.0);
  s.masked.assign(image.pixels_x, 0);
  std::vector<std::uint64_t> sums(image.pixels_x, 0);
  for (int y = 0; y < image.pixels_y; ++y) {
    for (int x = 0; x < image.pixels_x; ++x) sums[x] += image.at(y, x);
  }
  for (int x = 0; x < image.pixels_x; ++x) {
    s.values[x] = static_cast<double>(sums[x]);
    s.sigma[x] = std::sqrt(s.values[x]);
  }
  return s;
}

std::vector<double> savgol_weights(int window_bins, int poly_order, int position) {
  const Eigen::MatrixXd p = savgol_projection(window_bins, poly_order);
  if (position < 0 || position >= window_bins) {
    throw ParameterError("Savitzky-Golay position outside the window");
  }
  std::vector<double> w(window_bins);
  for (int j = 0; j < window_bins; ++j) w[j] = p(position, j);
  return w;
}

Spectrum savgol_smooth(const Spectrum& s, int window_bins, int poly_order) {
  const Eigen::MatrixXd p = savgol_projection(window_bins, poly_order);
  const std::size_t n = s.size();
  const std::size_t m = static_cast<std::size_t>(window_bins);
  if (n < m) {
    throw ParameterError("spectrum has " + std::to_string(n) + " bins, fewer than the window " +
                         std::to_string(window_bins));
  }
  Spectrum out = like(s, s.kind);
  const std::size_t half = m / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = std::min(i > half ? i - half : 0, n - m);
    const std::size_t row = i - start;
    double v = 0.0;
    double var = 0.0;
    bool masked = false;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t k = start + j;
      if (s.is_masked(k)) {
        masked = true;
        break;
      }
      const double c = p(row, j);
      v += c * s.values[k];
      var += c * c * s.sigma[k] * s.sigma[k];
    }
    if (masked) {
      out.masked[i] = 1;
      continue;
    }
    out.values[i] = v;
    out.sigma[i] = std::sqrt(var);
  }
  return out;
}

Spectrum transmittance(const Spectrum& sample, const Spectrum& blank) {
  if (sample.size() != blank.size()) throw DomainError("sample and blank axes differ in length");
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (std::abs(sample.lambda_nm[i] - blank.lambda_nm[i]) > 1e-9) {
      throw DomainError("sample and blank axes differ at bin " + std::to_string(i));
    }
  }
  if (sample.axis != blank.axis) throw DomainError("sample and blank axes differ in kind");
  Spectrum t = like(sample, SpectrumKind::transmittance);
  std::size_t usable = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double i1 = sample.values[i];
    const double i0 = blank.values[i];
    if (sample.is_masked(i) || blank.is_masked(i) || !(i0 > 0.0)) {
      t.masked[i] = 1;
      continue;
    }
    const double ratio = i1 / i0;
    // Relative error of I; a zero count still carries one count of uncertainty.
    const double rel1 = i1 > 0.0 ? sample.sigma[i] / i1 : 0.0;
    const double rel0 = blank.sigma[i] / i0;
    double sigma = ratio * std::sqrt(rel1 * rel1 + rel0 * rel0);
    if (!(i1 > 0.0)) sigma = std::max(sample.sigma[i], 1.0) / i0;
    t.values[i] = ratio;
    t.sigma[i] = sigma;
    ++usable;
  }
  if (usable == 0) throw EmptyResultError("every transmittance bin is masked");
  return t;
}

Spectrum absorbance(const Spectrum& t) {
  Spectrum a = like(t, SpectrumKind::absorbance);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.is_masked(i) || !(t.values[i] > 0.0)) {
      a.masked[i] = 1;
      continue;
    }
    a.values[i] = -std::log(t.values[i]);
    a.sigma[i] = t.sigma[i] / t.values[i];
  }
  return a;
}

Spectrum conjugate_axis(const Spectrum& s, double lambda_p_nm) {
  for (double l : s.lambda_nm) {
    if (!(l > lambda_p_nm)) {
      throw DomainError("bin at " + detail::format_double(l) +
                        " nm is not longer than the pump wavelength");
    }
  }
  const std::size_t n = s.size();
  Spectrum out;
  out.kind = s.kind;
  out.axis = s.axis == AxisKind::signal ? AxisKind::idler : AxisKind::signal;
  out.lambda_nm.resize(n);
  out.values.resize(n);
  out.sigma.resize(n);
  out.masked.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n - 1 - i;
    out.lambda_nm[i] = conjugate_wavelength(lambda_p_nm, s.lambda_nm[j]);
    out.values[i] = s.values[j];
    out.sigma[i] = s.sigma[j];
    out.masked[i] = s.masked[j];
  }
  return out;
}

AlertReport detect_features(const Spectrum& a, double threshold_z, int min_band_bins) {
  AlertReport report;
  report.threshold_z = threshold_z;
  report.min_band_bins = min_band_bins;
  report.axis = a.axis;
  const std::size_t min_bins = static_cast<std::size_t>(std::max(min_band_bins, 1));
  auto close_run = [&](std::size_t first, std::size_t end) {
    if (end - first < min_bins) return;
    AlertBand band;
    band.first_bin = first;
    band.last_bin = end - 1;
    band.lambda_lo_nm = a.lambda_nm[first];
    band.lambda_hi_nm = a.lambda_nm[end - 1];
    double sum = 0.0;
    double var = 0.0;
    for (std::size_t k = first; k < end; ++k) {
      sum += a.values[k];
      var += a.sigma[k] * a.sigma[k];
    }
    const double n = static_cast<double>(end - first);
    band.mean_absorbance = sum / n;
    band.z_score = var > 0.0 ? band.mean_absorbance / (std::sqrt(var) / n)
                             : std::numeric_limits<double>::infinity();
    report.bands.push_back(band);
  };
  std::size_t run_start = 0;
  bool in_run = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool hit = false;
    if (!a.is_masked(i)) {
      const double v = a.values[i];
      const double s = a.sigma[i];
      hit = s > 0.0 ? v / s > threshold_z : v > 0.0;
    }
    if (hit && !in_run) {
      run_start = i;
      in_run = true;
    } else if (!hit && in_run) {
      close_run(run_start, i);
      in_run = false;
    }
  }
  if (in_run) close_run(run_start, a.size());
  report.triggered = !report.bands.empty();
  return report;
}

Spectrum reference_absorbance(const Spectrum& measured, std::span<const double> ref_lambda,
                              std::span<const double> ref_mu, double path_cm,
                              double fwhm_nm) {
  if (ref_lambda.size() != ref_mu.size() || ref_lambda.size() < 2) {
    throw DomainError("reference needs at least two (lambda, mu) samples of equal length");
  }
  if (!(fwhm_nm >= 0.0)) throw DomainError("instrument FWHM must be >= 0");
  Spectrum out = like(measured, SpectrumKind::absorbance);
  const double lo = ref_lambda.front();
  const double hi = ref_lambda.back();
  const double sigma = fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const std::size_t n = ref_lambda.size();
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double x = measured.lambda_nm[i];
    if (x < lo || x > hi) {
      out.masked[i] = 1;
      continue;
    }
    double value = 0.0;
    const auto it = std::lower_bound(ref_lambda.begin(), ref_lambda.end(), x);
    const std::size_t right = std::clamp<std::size_t>(it - ref_lambda.begin(), 1, n - 1);
    const double f = (x - ref_lambda[right - 1]) / (ref_lambda[right] - ref_lambda[right - 1]);
    const double interp = ref_mu[right - 1] + f * (ref_mu[right] - ref_mu[right - 1]);
    if (sigma > 0.0) {
      // Trapezoid-weighted kernel sum over the reference samples within 4 sigma.
      const auto first = std::lower_bound(ref_lambda.begin(), ref_lambda.end(), x - 4.0 * sigma);
      const auto last = std::upper_bound(ref_lambda.begin(), ref_lambda.end(), x + 4.0 * sigma);
      double num = 0.0;
      double den = 0.0;
      for (auto p = first; p != last; ++p) {
        const std::size_t k = static_cast<std::size_t>(p - ref_lambda.begin());
        const double left_gap = k > 0 ? ref_lambda[k] - ref_lambda[k - 1] : 0.0;
        const double right_gap = k + 1 < n ? ref_lambda[k + 1] - ref_lambda[k] : 0.0;
        const double d = (ref_lambda[k] - x) / sigma;
        const double w = 0.5 * (left_gap + right_gap) * std::exp(-0.5 * d * d);
        num += w * ref_mu[k];
        den += w;
      }
      value = den > 0.0 ? num / den : interp;
    } else {
      value = interp;
    }
    out.values[i] = value * path_cm;
  }
  return out;
}

double compare_reference(const Spectrum& measured, std::span<const double> ref_lambda,
                         std::span<const double> ref_mu, double path_cm, double fwhm_nm) {
  const Spectrum ref = reference_absorbance(measured, ref_lambda, ref_mu, path_cm, fwhm_nm);
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    if (measured.is_masked(i) || ref.is_masked(i)) continue;
    a.push_back(measured.values[i]);
    b.push_back(ref.values[i]);
  }
  if (a.size() < 2) throw DomainError("measured spectrum and reference do not overlap");
  // Flat up to rounding: the range is negligible against the magnitude.
  auto flat = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo <= 1e-12 * std::max(std::abs(*lo), std::abs(*hi));
  };
  if (flat(a) || flat(b)) throw DomainError("correlation undefined for a flat input");
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DomainError("correlation undefined for a flat input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double compare_reference(const Spectrum& measured, const AbsorptionProfile& reference,
                         double path_cm, double fwhm_nm) {
  return compare_reference(measured, reference.grid_lambda_nm, reference.mu_per_cm, path_cm,
                           fwhm_nm);
}

std::string spectrum_to_csv(const Spectrum& s) {
  std::string out = "# kind=" + std::string(to_string(s.kind)) + "\n";
  out += "# axis=" + std::string(to_string(s.axis)) + "\n";
  out += "lambda_nm,value,sigma,masked\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += detail::format_double(s.lambda_nm[i]);
    out += ',';
    out += detail::format_double(s.values[i]);
    out += ',';
    out += detail::format_double(s.sigma[i]);
    out += s.is_masked(i) ? ",1\n" : ",0\n";
  }
  return out;
}

Spectrum parse_spectrum_csv(std::string_view text) {
  Spectrum s;
  bool header = false;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = detail::trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = detail::trim(body.substr(0, eq));
      const std::string value = detail::trim(body.substr(eq + 1));
      if (key == "kind") s.kind = kind_from_string(value);
      if (key == "axis") s.axis = axis_from_string(value);
      continue;
    }
    if (!header) {
      if (line != "lambda_nm,value,sigma,masked") {
        throw FormatError("expected header 'lambda_nm,value,sigma,masked'", line_no);
      }
      header = true;
      continue;
    }
    const auto cols = detail::split(line, ',');
    if (cols.size() != 4) throw FormatError("expected 4 columns", line_no);
    try {
      s.lambda_nm.push_back(detail::parse_double(cols[0]));
      s.values.push_back(detail::parse_double(cols[1]));
      s.sigma.push_back(detail::parse_double(cols[2]));
      const long long m = detail::parse_int(cols[3]);
      if (m != 0 && m != 1) throw std::invalid_argument("masked must be 0 or 1");
      s.masked.push_back(static_cast<std::uint8_t>(m));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  if (!header) throw FormatError("missing spectrum header");
  s.validate();
  return s;
}

void write_spectrum_csv(const Spectrum& spectrum, const std::filesystem::path& path) {
  detail::write_text_file(path, spectrum_to_csv(spectrum));
}

Spectrum read_spectrum_csv(const std::filesystem::path& path) {
  return parse_spectrum_csv(detail::read_text_file(path));
}

std::string alert_to_json(const AlertReport& report) {
  nlohmann::json j;
  j["triggered"] = report.triggered;
  j["threshold_z"] = report.threshold_z;
  j["min_band_bins"] = report.min_band_bins;
  j["axis"] = std::string(to_string(report.axis));
  j["bands"] = nlohmann::json::array();
  for (const auto& b : report.bands) {
    j["bands"].push_back({{"first_bin", b.first_bin},
                          {"last_bin", b.last_bin},
                          {"lambda_lo_nm", b.lambda_lo_nm},
                          {"lambda_hi_nm", b.lambda_hi_nm},
                          {"mean_absorbance", b.mean_absorbance},
                          {"z_score", std::isfinite(b.z_score) ? nlohmann::json(b.z_score)
                                                                : nlohmann::json("inf")}});
  }
  return j.dump(2) + "\n";
}

AlertReport parse_alert_json(std::string_view text) {
  AlertReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.triggered = j.at("triggered").get<bool>();
    r.threshold_z = j.at("threshold_z").get<double>();
    r.min_band_bins = j.at("min_band_bins").get<int>();
    r.axis = axis_from_string(j.at("axis").get<std::string>());
    for (const auto& b : j.at("bands")) {
      AlertBand band;
      band.first_bin = b.at("first_bin").get<std::size_t>();
      band.last_bin = b.at("last_bin").get<std::size_t>();
      band.lambda_lo_nm = b.at("lambda_lo_nm").get<double>();
      band.lambda_hi_nm = b.at("lambda_hi_nm").get<double>();
      band.mean_absorbance = b.at("mean_absorbance").get<double>();
      const auto& z = b.at("z_score");
      band.z_score = z.is_string() ? std::numeric_limits<double>::infinity() : z.get<double>();
      r.bands.push_back(band);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed alert report: ") + e.what());
  }
  return r;
}

}  // namespace qgs
