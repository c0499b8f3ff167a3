#include "qgs/detection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "qgs/error.hpp"
#include "text_util.hpp"

namespace qgs {

// ---------------------------------------------------------------------------
// Bucket detector

void BucketConfig::validate() const {
  if (!(efficiency_eta_i >= 0.0 && efficiency_eta_i <= 1.0)) {
    throw ConfigError("bucket.efficiency_eta_i must lie in [0, 1]");
  }
  if (!(dark_rate_hz >= 0.0)) throw ConfigError("bucket.dark_rate_hz must be >= 0");
  if (!(gate_width_ns > 0.0)) throw ConfigError("bucket.gate_width_ns must be > 0");
  if (!(dead_time_ns >= 0.0)) throw ConfigError("bucket.dead_time_ns must be >= 0");
  if (!(latency_ns >= 0.0)) throw ConfigError("bucket.latency_ns must be >= 0");
}

double spad_duty_cycle(const BucketConfig& bucket, double rep_rate_hz) {
  return std::min(1.0, bucket.gate_width_ns * 1e-9 * rep_rate_hz);
}

std::optional<double> spad_detect(std::optional<double> idler_arrival_ns, double window_start_ns,
                                  double window_length_ns, const BucketConfig& bucket,
                                  double rep_rate_hz, SpadState& state, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> candidates;
  if (idler_arrival_ns && uniform(rng) < bucket.efficiency_eta_i) {
    candidates.push_back(*idler_arrival_ns);
  }
  const double mean =
      bucket.dark_rate_hz * spad_duty_cycle(bucket, rep_rate_hz) * window_length_ns * 1e-9;
  if (mean > 0.0) {
    std::poisson_distribution<long long> poisson(mean);
    for (long long n = poisson(rng); n > 0; --n) {
      candidates.push_back(window_start_ns + window_length_ns * uniform(rng));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    if (t - state.last_click_ns >= bucket.dead_time_ns) {
      state.last_click_ns = t;
      return t;
    }
  }
  return std::nullopt;
}

ClickTrain spad_click_train(std::span<const double> idler_arrivals_ns, double start_ns,
                            double duration_ns, const BucketConfig& bucket, double rep_rate_hz,
                            Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> real;
  real.reserve(static_cast<std::size_t>(
      static_cast<double>(idler_arrivals_ns.size()) * bucket.efficiency_eta_i * 1.1 + 16));
  for (double t : idler_arrivals_ns) {
    if (uniform(rng) < bucket.efficiency_eta_i) real.push_back(t);
  }

  std::vector<double> dark;
  const double mean =
      bucket.dark_rate_hz * spad_duty_cycle(bucket, rep_rate_hz) * duration_ns * 1e-9;
  if (mean > 0.0) {
    std::poisson_distribution<long long> poisson(mean);
    const long long n = poisson(rng);
    dark.resize(static_cast<std::size_t>(n));
    for (double& t : dark) t = start_ns + duration_ns * uniform(rng);
    std::sort(dark.begin(), dark.end());
  }

  ClickTrain train;
  train.times_ns.reserve(real.size() + dark.size());
  double last = -1e300;
  std::size_t ir = 0;
  std::size_t id = 0;
  while (ir < real.size() || id < dark.size()) {
    const bool take_real = id >= dark.size() || (ir < real.size() && real[ir] <= dark[id]);
    const double t = take_real ? real[ir++] : dark[id++];
    if (t - last < bucket.dead_time_ns) {
      ++train.dead_time_losses;
      continue;
    }
    last = t;
    train.times_ns.push_back(t);
    if (take_real) {
      ++train.true_clicks;
    } else {
      ++train.dark_clicks;
    }
  }
  return train;
}

// ---------------------------------------------------------------------------
// Spectrometer

void SpectrometerConfig::validate() const {
  if (grating_lines_per_mm <= 0) throw ConfigError("spectrometer.grating_lines_per_mm must be > 0");
  if (pixels_x <= 0 || pixels_y <= 0) throw ConfigError("spectrometer pixel counts must be > 0");
  if (!(dispersion_nm_per_pixel > 0.0)) {
    throw ConfigError("spectrometer.dispersion_nm_per_pixel must be > 0");
  }
  if (!(resolution_fwhm_nm == 0.0 || resolution_fwhm_nm >= dispersion_nm_per_pixel)) {
    throw ConfigError("spectrometer.resolution_fwhm_nm must be 0 (off) or >= one pixel");
  }
  if (!(camera_qe >= 0.0 && camera_qe <= 1.0)) {
    throw ConfigError("spectrometer.camera_qe must lie in [0, 1]");
  }
  if (!(camera_dark_rate_hz_per_pixel >= 0.0)) {
    throw ConfigError("spectrometer.camera_dark_rate_hz_per_pixel must be >= 0");
  }
  if (!(beam_sigma_px >= 0.0)) throw ConfigError("spectrometer.beam_sigma_px must be >= 0");
  if (!(lambda_min_nm() > 0.0)) throw ConfigError("spectrometer window extends below 0 nm");
}

double grating_dispersion_nm_per_pixel(int lines_per_mm) {
  if (lines_per_mm <= 0) throw DomainError("grating lines per mm must be > 0");
  return 0.12 * 600.0 / lines_per_mm;
}

SpectrometerConfig spectrometer_preset(int lines_per_mm, double lambda_center_nm) {
  SpectrometerConfig spec;
  spec.grating_lines_per_mm = lines_per_mm;
  spec.lambda_center_nm = lambda_center_nm;
  spec.dispersion_nm_per_pixel = grating_dispersion_nm_per_pixel(lines_per_mm);
  spec.resolution_fwhm_nm = 3.0 * spec.dispersion_nm_per_pixel;
  return spec;
}

std::optional<int> pixel_of_wavelength(double lambda_s_nm, const SpectrometerConfig& spec) {
  const double x = std::round((lambda_s_nm - spec.lambda_min_nm()) / spec.dispersion_nm_per_pixel);
  if (!(x >= 0.0) || x >= spec.pixels_x) return std::nullopt;
  return static_cast<int>(x);
}

std::vector<double> wavelength_axis(const SpectrometerConfig& spec) {
  std::vector<double> axis(static_cast<std::size_t>(spec.pixels_x));
  const double lo = spec.lambda_min_nm();
  for (std::size_t x = 0; x < axis.size(); ++x) {
    axis[x] = lo + spec.dispersion_nm_per_pixel * static_cast<double>(x);
  }
  return axis;
}

// ---------------------------------------------------------------------------
// Coincidences

void CoincidenceConfig::validate() const {
  if (!(gate_width_ns > 0.0)) throw ConfigError("coincidence.gate_width_ns must be > 0");
  if (!(fiber_delay_ns >= 0.0) || !(fpga_delay_ns >= 0.0)) {
    throw ConfigError("coincidence delays must be >= 0");
  }
  if (!(jitter_sigma_ns >= 0.0)) throw ConfigError("coincidence.jitter_sigma_ns must be >= 0");
}

double gate_offset_ns(double bucket_time_ns, double signal_time_ns,
                      const CoincidenceConfig& coinc) {
  return (signal_time_ns + coinc.fiber_delay_ns) - (bucket_time_ns + coinc.fpga_delay_ns);
}

bool coincidence_gate(double bucket_time_ns, double signal_time_ns,
                      const CoincidenceConfig& coinc, Rng& rng) {
  double offset = gate_offset_ns(bucket_time_ns, signal_time_ns, coinc);
  if (coinc.jitter_sigma_ns > 0.0) {
    std::normal_distribution<double> jitter(0.0, coinc.jitter_sigma_ns);
    offset += jitter(rng);
  }
  return std::abs(offset) <= 0.5 * coinc.gate_width_ns;
}

// ---------------------------------------------------------------------------
// Images

CountImage::CountImage(const SpectrometerConfig& spec, double exposure, int frame_count)
    : pixels_y(spec.pixels_y),
      pixels_x(spec.pixels_x),
      counts(static_cast<std::size_t>(spec.pixels_y) * static_cast<std::size_t>(spec.pixels_x), 0),
      exposure_s(exposure),
      frames(frame_count),
      wavelength_axis_nm(wavelength_axis(spec)) {}

std::uint64_t CountImage::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void CountImage::validate() const {
  if (pixels_x <= 0 || pixels_y <= 0) throw ValidationError("image has no pixels");
  if (counts.size() != static_cast<std::size_t>(pixels_x) * static_cast<std::size_t>(pixels_y)) {
    throw ValidationError("image count array does not match its dimensions");
  }
  if (wavelength_axis_nm.size() != static_cast<std::size_t>(pixels_x)) {
    throw ValidationError("wavelength axis length differs from pixels_x");
  }
  for (std::size_t k = 1; k < wavelength_axis_nm.size(); ++k) {
    if ((wavelength_axis_nm[k] > wavelength_axis_nm[k - 1]) !=
        (wavelength_axis_nm[1] > wavelength_axis_nm[0]) ||
        wavelength_axis_nm[k] == wavelength_axis_nm[k - 1]) {
      throw ValidationError("wavelength axis must be strictly monotone");
    }
  }
}

CountImage& CountImage::operator+=(const CountImage& other) {
  if (other.pixels_x != pixels_x || other.pixels_y != pixels_y) {
    throw ValidationError("cannot merge images of different geometry");
  }
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  return *this;
}

void deposit_photons(CountImage& image, std::span<const double> lambda_nm,
                     const SpectrometerConfig& spec, Rng& rng, std::size_t* detected) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double blur_sigma = spec.resolution_fwhm_nm * 0.42466090014400953;
  const double y_center = 0.5 * (spec.pixels_y - 1);
  std::size_t n = 0;
  for (double lambda : lambda_nm) {
    if (spec.camera_qe < 1.0 && !(uniform(rng) < spec.camera_qe)) continue;
    if (blur_sigma > 0.0) lambda += blur_sigma * normal(rng);
    const auto x = pixel_of_wavelength(lambda, spec);
    double yf = y_center;
    if (spec.beam_sigma_px > 0.0) yf += spec.beam_sigma_px * normal(rng);
    const double y = std::round(yf);
    if (!x || y < 0.0 || y >= spec.pixels_y) continue;
    ++image.at(static_cast<int>(y), *x);
    ++n;
  }
  if (detected) *detected += n;
}

std::uint64_t add_dark_counts(CountImage& image, double mean_per_pixel, Rng& rng) {
  if (!(mean_per_pixel > 0.0)) return 0;
  std::uint64_t added = 0;
  if (mean_per_pixel > 1.0) {
    std::poisson_distribution<std::uint64_t> poisson(mean_per_pixel);
    for (auto& c : image.counts) {
      const auto n = poisson(rng);
      c += n;
      added += n;
    }
    return added;
  }
  // Sparse case: Poisson total scattered uniformly is the same distribution.
  const double npix = static_cast<double>(image.counts.size());
  std::poisson_distribution<std::uint64_t> poisson(mean_per_pixel * npix);
  std::uniform_int_distribution<std::size_t> pick(0, image.counts.size() - 1);
  added = poisson(rng);
  for (std::uint64_t k = 0; k < added; ++k) ++image.counts[pick(rng)];
  return added;
}

CountImage accumulate_image(const GatedSignal& gated, const SpectrometerConfig& spec,
                            double exposure_s, int frames, Rng& rng) {
  spec.validate();
  if (!(exposure_s > 0.0) || frames < 1) throw ConfigError("exposure_s > 0 and frames >= 1 needed");
  CountImage image(spec, exposure_s, frames);
  deposit_photons(image, gated.lambda_nm, spec, rng);
  add_dark_counts(image,
                  spec.camera_dark_rate_hz_per_pixel * gated.gate_duty * exposure_s * frames, rng);
  return image;
}

double snr_ratio(double eta_i, double noise_rate_hz, double delta_t_s) {
  if (!(noise_rate_hz > 0.0) || !(delta_t_s > 0.0)) {
    throw DomainError("snr_ratio needs N_i > 0 and delta_t > 0");
  }
  return eta_i / (noise_rate_hz * delta_t_s);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr const char* kImageMagic = "# qgs count image v1";

}  // namespace

void write_count_image(const CountImage& image, const std::filesystem::path& image_path,
                       const std::filesystem::path& axis_path) {
  image.validate();
  std::string out;
  out.reserve(image.counts.size() * 2 + 4096);
  out += kImageMagic;
  out += '\n';
  out += "# pixels_y=" + std::to_string(image.pixels_y) + '\n';
  out += "# pixels_x=" + std::to_string(image.pixels_x) + '\n';
  out += "# exposure_s=" + detail::format_double(image.exposure_s) + '\n';
  out += "# frames=" + std::to_string(image.frames) + '\n';
  for (const auto& [key, value] : image.metadata) {
    if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw ValidationError("metadata key/value not representable: '" + key + "'");
    }
    out += "# meta." + key + '=' + value + '\n';
  }
  char buf[24];
  for (int y = 0; y < image.pixels_y; ++y) {
    for (int x = 0; x < image.pixels_x; ++x) {
      if (x) out += ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), image.at(y, x));
      out.append(buf, ptr);
    }
    out += '\n';
  }
  detail::write_text_file(image_path, out);

  std::string axis = "lambda_nm\n";
  for (double v : image.wavelength_axis_nm) axis += detail::format_double(v) + '\n';
  detail::write_text_file(axis_path, axis);
}

CountImage read_count_image(const std::filesystem::path& image_path,
                            const std::filesystem::path& axis_path) {
  const auto lines = detail::split_lines(detail::read_text_file(image_path));
  if (lines.empty() || lines[0] != kImageMagic) {
    throw FormatError("'" + image_path.string() + "' is not a count image", 1);
  }
  CountImage image;
  std::size_t k = 1;
  bool has_y = false;
  bool has_x = false;
  try {
    for (; k < lines.size() && !lines[k].empty() && lines[k][0] == '#'; ++k) {
      const std::string body = lines[k].substr(std::min<std::size_t>(2, lines[k].size()));
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw FormatError("bad header line", k + 1);
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key == "pixels_y") {
        image.pixels_y = static_cast<int>(detail::parse_int(value));
        has_y = true;
      } else if (key == "pixels_x") {
        image.pixels_x = static_cast<int>(detail::parse_int(value));
        has_x = true;
      } else if (key == "exposure_s") {
        image.exposure_s = detail::parse_double(value);
      } else if (key == "frames") {
        image.frames = static_cast<int>(detail::parse_int(value));
      } else if (key.rfind("meta.", 0) == 0) {
        image.metadata.emplace_back(key.substr(5), value);
      } else {
        throw FormatError("unknown header key '" + key + "'", k + 1);
      }
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), k + 1);
  }
  if (!has_x || !has_y || image.pixels_x <= 0 || image.pixels_y <= 0) {
    throw FormatError("count image header lacks dimensions");
  }
  image.counts.assign(static_cast<std::size_t>(image.pixels_x) * image.pixels_y, 0);
  for (int y = 0; y < image.pixels_y; ++y, ++k) {
    if (k >= lines.size()) throw FormatError("count image has too few rows", k + 1);
    const std::string& row = lines[k];
    const char* p = row.data();
    const char* end = row.data() + row.size();
    for (int x = 0; x < image.pixels_x; ++x) {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw FormatError("bad count", k + 1);
      image.at(y, x) = v;
      p = ptr;
      if (x + 1 < image.pixels_x) {
        if (p >= end || *p != ',') throw FormatError("expected ','", k + 1);
        ++p;
      }
    }
    if (p != end) throw FormatError("trailing data in row", k + 1);
  }
  for (; k < lines.size(); ++k) {
    if (!lines[k].empty()) throw FormatError("unexpected data after the last row", k + 1);
  }

  const auto axis_lines = detail::split_lines(detail::read_text_file(axis_path));
  if (axis_lines.empty() || axis_lines[0] != "lambda_nm") {
    throw FormatError("'" + axis_path.string() + "' is not a wavelength axis file", 1);
  }
  for (std::size_t j = 1; j < axis_lines.size(); ++j) {
    if (axis_lines[j].empty()) continue;
    try {
      image.wavelength_axis_nm.push_back(detail::parse_double(axis_lines[j]));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), j + 1);
    }
  }
  image.validate();
  return image;
}

}  // namespace qgs
