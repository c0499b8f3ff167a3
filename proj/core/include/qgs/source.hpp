#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qgs/random.hpp"

namespace qgs {

enum class Polarization { ordinary, extraordinary };

/// One dispersion fit for one polarization of one material.
///
/// Two functional forms are understood, both in microns:
///   quadratic:  n^2 = A + B / (l^2 - C) - D l^2          (coefficients A, B, C, D)
///   sellmeier:  n^2 = 1 + sum_k B_k l^2 / (l^2 - C_k)      (coefficients B1, C1, B2, C2, ...)
struct SellmeierSet {
  enum class Form { quadratic, sellmeier };

  std::string material_id;
  Polarization polarization = Polarization::ordinary;
  Form form = Form::quadratic;
  std::vector<double> coefficients;
  double min_um = 0.0;
  double max_um = 0.0;

  /// Throws RangeError outside [min_um, max_um].
  double index(double wavelength_um) const;
};

/// Collection of dispersion fits parsed from the key-value material file.
class MaterialLibrary {
 public:
  MaterialLibrary() = default;

  static MaterialLibrary parse(std::string_view text);
  static MaterialLibrary load(const std::filesystem::path& path);
  /// `materials.txt` from the shipped data directory.
  static const MaterialLibrary& builtin();

  void add(SellmeierSet set);
  const SellmeierSet& find(std::string_view material_id, Polarization pol) const;
  bool contains(std::string_view material_id) const;

 private:
  std::vector<SellmeierSet> sets_;
};

struct PumpConfig {
  double wavelength_nm = 532.0;
  /// FWHM of the pump spectrum in wavelength; 0 means monochromatic.
  double bandwidth_nm = 0.0;
  double pulse_width_ps = 8.0;
  double rep_rate_hz = 4.0e7;
  double pair_rate_hz = 1.0e4;

  void validate() const;
};

/// Transform-limited Gaussian pulse: dnu = 0.4413 / tau, dlambda = lambda^2 dnu / c.
double transform_limited_bandwidth_nm(double wavelength_nm, double pulse_width_ps);

struct CrystalConfig {
  double thickness_mm = 1.0;
  /// Angle between propagation direction and optic axis.
  double cut_angle_rad = 0.0;
  std::string material_id = "BBO";

  void validate() const;
};

struct PhotonPairEvent {
  double lambda_s_nm = 0.0;
  double lambda_i_nm = 0.0;
  /// Emission time, quantized to the start of its pump pulse slot.
  double t_s = 0.0;
};

double sellmeier_index(const MaterialLibrary& lib, std::string_view material_id, Polarization pol,
                       double wavelength_um);

/// Extraordinary index seen at angle theta to the optic axis (index ellipse).
double effective_e_index(const MaterialLibrary& lib, std::string_view material_id,
                         double wavelength_um, double theta_rad);

/// Idler wavelength from energy conservation 1/lp = 1/ls + 1/li.
double conjugate_wavelength(double lambda_p_nm, double lambda_s_nm);

/// Collinear type-I (e -> o + o) wave-vector mismatch in rad/mm.
double phase_mismatch(const MaterialLibrary& lib, double lambda_p_nm, double lambda_s_nm,
                      double lambda_i_nm, const CrystalConfig& crystal);

/// Cut angle that zeroes phase_mismatch. Bisection on (0, pi/2), run to the
/// floating-point limit; throws NoSolutionError without a sign change.
double phase_matching_angle(const MaterialLibrary& lib, double lambda_p_nm, double lambda_s_nm,
                            double lambda_i_nm, std::string_view material_id);

/// Pump envelope (Gaussian in 1/ls + 1/li, peak 1) times sinc^2(dk L / 2).
double joint_spectral_intensity(const MaterialLibrary& lib, double lambda_s_nm, double lambda_i_nm,
                                const PumpConfig& pump, const CrystalConfig& crystal);

struct JsiGrid {
  double signal_min_nm = 790.0;
  double signal_max_nm = 830.0;
  std::size_t signal_points = 512;
  std::size_t idler_points = 512;

  void validate(double lambda_p_nm) const;
};

/// JSI tabulated on a rectangular (signal, idler) cell grid.
///
/// A cell's weight is sinc^2 at the cell center times the pump-envelope mass
/// falling inside the cell's range of total inverse wavelength. The envelope
/// is far narrower than an idler cell for realistic pumps, so integrating it
/// per cell keeps the ridge visible even in the monochromatic limit.
struct JsiTable {
  std::vector<double> signal_edges_nm;  // ascending, signal_points + 1
  std::vector<double> idler_edges_nm;   // ascending, idler_points + 1
  std::vector<double> weights;          // row-major [signal][idler]

  std::size_t signal_cells() const { return signal_edges_nm.size() - 1; }
  std::size_t idler_cells() const { return idler_edges_nm.size() - 1; }
  double at(std::size_t is, std::size_t ii) const { return weights[is * idler_cells() + ii]; }
  double signal_center(std::size_t is) const {
    return 0.5 * (signal_edges_nm[is] + signal_edges_nm[is + 1]);
  }
  double idler_center(std::size_t ii) const {
    return 0.5 * (idler_edges_nm[ii] + idler_edges_nm[ii + 1]);
  }
  /// Row sums, i.e. the signal marginal (unnormalized).
  std::vector<double> signal_marginal() const;
};

JsiTable tabulate_jsi(const MaterialLibrary& lib, const PumpConfig& pump,
                      const CrystalConfig& crystal, const JsiGrid& grid);

/// Sampler state: the tabulated JSI and the running emission clock.
class PairSource {
 public:
  /// Throws ConfigError if the table carries no weight.
  PairSource(JsiTable table, const PumpConfig& pump);

  const JsiTable& table() const { return *table_; }
  const PumpConfig& pump() const { return pump_; }
  double clock_ns() const { return clock_ns_; }
  void reset_clock(double t_ns = 0.0) { clock_ns_ = t_ns; }

  /// Draws only the wavelengths; the clock is untouched.
  PhotonPairEvent sample_wavelengths(Rng& rng) const;

 private:
  friend PhotonPairEvent sample_pair(PairSource& source, Rng& rng);

  std::shared_ptr<const JsiTable> table_;  // shared between copies
  PumpConfig pump_;
  std::vector<double> cdf_;  // normalized signal marginal
  double inv_sigma_ = 0.0;   // pump envelope std-dev in 1/nm
  double clock_ns_ = 0.0;
};

/// Next pair: signal row from the tabulated marginal (uniform within the
/// cell), total inverse wavelength from the pump envelope truncated at
/// 4 sigma, emission time from a Poisson process at pair_rate_hz quantized to
/// pulse slots of 1/rep_rate_hz.
PhotonPairEvent sample_pair(PairSource& source, Rng& rng);

}  // namespace qgs
