#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qgs {

/// One spectroscopic transition in HITRAN units.
struct LineRecord {
  int molecule_id = 0;
  int isotopologue_id = 0;
  double nu0_wavenumber = 0.0;      // cm^-1
  double intensity_S = 0.0;         // cm^-1 / (molecule cm^-2) at 296 K
  double einstein_A = 0.0;          // s^-1, carried but unused
  double gamma_air = 0.0;           // cm^-1 / atm, HWHM
  double gamma_self = 0.0;          // cm^-1 / atm, HWHM
  double lower_state_energy = 0.0;  // cm^-1
  double n_air = 0.0;
  double delta_air = 0.0;           // cm^-1 / atm
  /// Source text of a parsed .par record; empty for records built in code.
  /// Unchanged fields and columns 68-160 are re-emitted from it verbatim.
  std::string raw;

  void validate() const;
};

inline constexpr std::size_t kParRecordLength = 160;

/// Decodes one 160-character .par record (trailing newline already stripped).
LineRecord parse_par_record(std::string_view line);

/// Encodes a record back to 160 characters. Parsed-and-unchanged records are
/// byte-identical to their source; modified fields use the Fortran formats.
std::string serialize_par_record(const LineRecord& record);

/// Whole .par file; blank lines are skipped, errors carry the line number.
std::vector<LineRecord> parse_par_file(std::string_view text);

/// CSV with header nu0_cm,S,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso.
/// Returned sorted by nu0.
std::vector<LineRecord> parse_csv_linelist(std::string_view text);
std::string write_csv_linelist(std::span<const LineRecord> lines);

/// Dispatches on extension: ".csv" is the CSV list, anything else is .par.
std::vector<LineRecord> load_linelist(const std::filesystem::path& path);

struct GasConditions {
  double temperature_K = 296.0;
  double pressure_total_atm = 1.0;
  double self_fraction = 1.0;
  double molar_mass_amu = 26.0;

  void validate() const;
  double self_pressure_atm() const { return pressure_total_atm * self_fraction; }
};

/// Absorber number density in cm^-3 from the ideal gas law at (T, p_self).
double number_density_per_cm3(const GasConditions& conditions);

/// Doppler HWHM in cm^-1: (nu0 / c) sqrt(2 ln2 k T / m).
double doppler_width(double nu0_cm, double temperature_K, double molar_mass_amu);

/// Pressure HWHM in cm^-1: (296/T)^n_air [gamma_air (P - p_self) + gamma_self p_self].
double lorentz_width(const LineRecord& record, const GasConditions& conditions);

/// Area-normalized Voigt density in cm (Weideman's N = 32 rational
/// approximation of the Faddeeva function).
double voigt_value(double nu_cm, double nu0_cm, double gamma_D, double gamma_L);

/// mu sampled on a vacuum-wavelength grid.
struct AbsorptionProfile {
  std::vector<double> grid_lambda_nm;  // strictly ascending
  std::vector<double> mu_per_cm;
  GasConditions conditions;

  void validate() const;
  /// Linear interpolation; false when lambda is outside the grid.
  bool mu_at(double lambda_nm, double& mu) const;
};

/// Ascending grid from lo to hi (inclusive when it lands on a step).
std::vector<double> wavelength_grid(double lo_nm, double hi_nm, double step_nm);

/// mu(nu) = N sum_j S_j f_j(nu; gamma_D, gamma_L, nu0 + delta_air P). Lines
/// centred more than 100 combined half-widths beyond the grid are skipped.
AbsorptionProfile absorption_profile(std::span<const LineRecord> lines,
                                     const GasConditions& conditions,
                                     std::span<const double> grid_lambda_nm);

/// `lambda_nm,mu_per_cm` CSV.
void write_profile_csv(std::ostream& out, const AbsorptionProfile& profile);
AbsorptionProfile parse_profile_csv(std::string_view text);
AbsorptionProfile load_profile_csv(const std::filesystem::path& path);

}  // namespace qgs
