#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qgs/random.hpp"

namespace qgs {

// ---------------------------------------------------------------------------
// Bucket detector (idler SPAD)

struct BucketConfig {
  double efficiency_eta_i = 0.25;
  double dark_rate_hz = 1000.0;
  /// Laser-synchronized SPAD gate; dark counts accrue only inside it.
  double gate_width_ns = 5.0;
  double dead_time_ns = 50.0;
  /// Electronic delay from photon arrival to the timestamp the FPGA sees.
  double latency_ns = 20.0;

  void validate() const;
};

/// Fraction of time the SPAD is armed: min(1, gate_width * rep_rate).
double spad_duty_cycle(const BucketConfig& bucket, double rep_rate_hz);

struct SpadState {
  double last_click_ns = -1e300;
};

/// One observation window [start, start + length). A real photon (if any) fires
/// with probability eta; dark counts are Poisson at dark_rate * duty. Returns
/// the first click not blocked by dead time, or nothing.
std::optional<double> spad_detect(std::optional<double> idler_arrival_ns, double window_start_ns,
                                  double window_length_ns, const BucketConfig& bucket,
                                  double rep_rate_hz, SpadState& state, Rng& rng);

struct ClickTrain {
  std::vector<double> times_ns;  // optical detection times, ascending
  std::size_t true_clicks = 0;
  std::size_t dark_clicks = 0;
  std::size_t dead_time_losses = 0;
};

/// Batch form of spad_detect for a sorted list of idler arrivals over
/// [start, start + duration), with dead time applied across the merged stream.
ClickTrain spad_click_train(std::span<const double> idler_arrivals_ns, double start_ns,
                            double duration_ns, const BucketConfig& bucket, double rep_rate_hz,
                            Rng& rng);

// ---------------------------------------------------------------------------
// Spectrometer and camera

struct SpectrometerConfig {
  int grating_lines_per_mm = 600;
  double lambda_center_nm = 810.0;
  int pixels_x = 1024;
  int pixels_y = 256;
  double dispersion_nm_per_pixel = 0.12;
  /// Gaussian optical blur; 0 disables blurring.
  double resolution_fwhm_nm = 0.36;
  double camera_qe = 0.2;
  double camera_dark_rate_hz_per_pixel = 0.05;
  /// Vertical spot profile.
  double beam_sigma_px = 10.0;

  void validate() const;
  double lambda_min_nm() const {
    return lambda_center_nm - dispersion_nm_per_pixel * pixels_x / 2.0;
  }
};

/// Linear dispersion preset: 600 l/mm -> 0.12 nm/px, scaling as 1/lines.
double grating_dispersion_nm_per_pixel(int lines_per_mm);

/// Spectrometer at the grating's preset dispersion with a 3-pixel resolution.
SpectrometerConfig spectrometer_preset(int lines_per_mm, double lambda_center_nm);

/// x = round((lambda - lambda_min) / dispersion); nothing when off-chip.
std::optional<int> pixel_of_wavelength(double lambda_s_nm, const SpectrometerConfig& spec);

/// Nominal wavelength of each pixel column.
std::vector<double> wavelength_axis(const SpectrometerConfig& spec);

// ---------------------------------------------------------------------------
// Coincidence gate

enum class GateMode { heralded, ungated };

struct CoincidenceConfig {
  double fiber_delay_ns = 60.0;
  /// Delay the FPGA adds to the bucket timestamp before opening the camera.
  double fpga_delay_ns = 40.0;
  double gate_width_ns = 10.0;
  double jitter_sigma_ns = 0.3;
  GateMode mode = GateMode::heralded;

  void validate() const;
};

/// (signal_time + fiber_delay) - (bucket_time + fpga_delay); zero when the
/// delays are compensated. bucket_time is the electronic timestamp.
double gate_offset_ns(double bucket_time_ns, double signal_time_ns,
                      const CoincidenceConfig& coinc);

/// |offset + jitter| <= gate_width / 2, jitter ~ N(0, jitter_sigma).
/// Consumes no randomness when jitter_sigma is zero.
bool coincidence_gate(double bucket_time_ns, double signal_time_ns,
                      const CoincidenceConfig& coinc, Rng& rng);

// ---------------------------------------------------------------------------
// Count images

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct CountImage {
  int pixels_y = 0;
  int pixels_x = 0;
  std::vector<std::uint64_t> counts;  // row-major [y][x]
  double exposure_s = 0.0;            // per frame
  int frames = 1;
  std::vector<double> wavelength_axis_nm;
  Metadata metadata;

  CountImage() = default;
  CountImage(const SpectrometerConfig& spec, double exposure_s, int frames);

  std::uint64_t& at(int y, int x) { return counts[static_cast<std::size_t>(y) * pixels_x + x]; }
  std::uint64_t at(int y, int x) const {
    return counts[static_cast<std::size_t>(y) * pixels_x + x];
  }
  std::uint64_t total() const;
  void validate() const;
  /// Integer merge of a partial image with identical geometry.
  CountImage& operator+=(const CountImage& other);

  bool operator==(const CountImage&) const = default;
};

/// Signal photons that reached the camera inside an open gate.
struct GatedSignal {
  std::vector<double> lambda_nm;
  /// Fraction of the exposure the intensifier was open (1 when ungated).
  double gate_duty = 1.0;
};

/// Each photon: detected with camera_qe, blurred, binned to a column, spread
/// vertically with the beam profile. Camera dark counts are Poisson with mean
/// dark_rate * gate_duty * exposure_s * frames per pixel.
CountImage accumulate_image(const GatedSignal& gated, const SpectrometerConfig& spec,
                            double exposure_s, int frames, Rng& rng);

/// Photons landing on the chip from a list of wavelengths; no dark counts.
void deposit_photons(CountImage& image, std::span<const double> lambda_nm,
                     const SpectrometerConfig& spec, Rng& rng, std::size_t* detected = nullptr);
/// Adds Poisson dark counts with the given per-pixel mean.
std::uint64_t add_dark_counts(CountImage& image, double mean_per_pixel, Rng& rng);

/// Heralding gain over ungated detection: eta_i / (N_i dt).
double snr_ratio(double eta_i, double noise_rate_hz, double delta_t_s);

/// Header + row-major CSV counts, and a one-column wavelength axis file.
void write_count_image(const CountImage& image, const std::filesystem::path& image_path,
                       const std::filesystem::path& axis_path);
CountImage read_count_image(const std::filesystem::path& image_path,
                            const std::filesystem::path& axis_path);

}  // namespace qgs
