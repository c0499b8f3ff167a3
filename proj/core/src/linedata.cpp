#include "qgs/linedata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qgs/error.hpp"
#include "text_util.hpp"

namespace qgs {

namespace {

// ---------------------------------------------------------------------------
// Fixed-width layout

enum class Kind { integer, isotope, fixed, exponent };

struct Column {
  const char* name;
  std::size_t begin;  // 0-based
  std::size_t width;
  Kind kind;
  int decimals;
};

constexpr std::array<Column, 10> kColumns{{
    {"molecule", 0, 2, Kind::integer, 0},
    {"isotopologue", 2, 1, Kind::isotope, 0},
    {"nu", 3, 12, Kind::fixed, 6},
    {"S", 15, 10, Kind::exponent, 3},
    {"A", 25, 10, Kind::exponent, 3},
    {"gamma_air", 35, 5, Kind::fixed, 4},
    {"gamma_self", 40, 5, Kind::fixed, 4},
    {"E_lower", 45, 10, Kind::fixed, 4},
    {"n_air", 55, 4, Kind::fixed, 2},
    {"delta_air", 59, 8, Kind::fixed, 6},
}};

// Field values in column order, as doubles.
std::array<double, 10> field_values(const LineRecord& r) {
  return {static_cast<double>(r.molecule_id), static_cast<double>(r.isotopologue_id),
          r.nu0_wavenumber, r.intensity_S, r.einstein_A, r.gamma_air, r.gamma_self,
          r.lower_state_energy, r.n_air, r.delta_air};
}

double decode_field(std::string_view line, const Column& col) {
  const std::string_view text = line.substr(col.begin, col.width);
  const std::string t = detail::trim(text);
  try {
    if (col.kind == Kind::isotope) {
      if (t.size() != 1) throw std::invalid_argument("bad isotopologue");
      const char c = t[0];
      // HITRAN writes isotopologue 10 as '0' and 11, 12, ... as 'A', 'B', ...
      if (c >= '1' && c <= '9') return c - '0';
      if (c == '0') return 10;
      if (c >= 'A' && c <= 'Z') return 11 + (c - 'A');
      throw std::invalid_argument("bad isotopologue");
    }
    if (col.kind == Kind::integer) return static_cast<double>(detail::parse_int(t));
    return detail::parse_double(t);
  } catch (const std::invalid_argument&) {
    throw FieldError(col.name, col.begin + 1, col.begin + col.width, std::string(text));
  }
}

// Fortran-style Fw.d: drops the leading zero when the field would overflow,
// then gives up decimals rather than printing asterisks.
std::string fortran_fixed(double v, std::size_t width, int decimals, const char* name) {
  for (int d = decimals; d >= 0; --d) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", d, v);
    std::string s(buf);
    if (s.size() > width) {
      if (s.rfind("0.", 0) == 0) {
        s.erase(0, 1);
      } else if (s.rfind("-0.", 0) == 0) {
        s.erase(1, 1);
      }
    }
    if (s.size() <= width) return std::string(width - s.size(), ' ') + s;
  }
  throw ValidationError(std::string("value of '") + name + "' does not fit its column");
}

std::string encode_field(double v, const Column& col) {
  char buf[64];
  switch (col.kind) {
    case Kind::isotope: {
      const int iso = static_cast<int>(v);
      char c = '?';
      if (iso >= 1 && iso <= 9) {
        c = static_cast<char>('0' + iso);
      } else if (iso == 10) {
        c = '0';
      } else if (iso >= 11 && iso < 11 + 26) {
        c = static_cast<char>('A' + iso - 11);
      } else {
        throw ValidationError("isotopologue id does not fit its column");
      }
      return std::string(1, c);
    }
    case Kind::integer:
      std::snprintf(buf, sizeof(buf), "%*d", static_cast<int>(col.width), static_cast<int>(v));
      break;
    case Kind::exponent:
      std::snprintf(buf, sizeof(buf), "%*.*E", static_cast<int>(col.width), col.decimals, v);
      break;
    case Kind::fixed:
      return fortran_fixed(v, col.width, col.decimals, col.name);
  }
  std::string s(buf);
  if (s.size() != col.width) {
    throw ValidationError(std::string("value of '") + col.name + "' does not fit its column");
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Records

void LineRecord::validate() const {
  if (!(nu0_wavenumber > 0.0)) throw ValidationError("line position must be > 0");
  if (!(intensity_S >= 0.0)) throw ValidationError("line intensity must be >= 0");
  if (!(gamma_air >= 0.0) || !(gamma_self >= 0.0)) {
    throw ValidationError("broadening coefficients must be >= 0");
  }
}

LineRecord parse_par_record(std::string_view line) {
  if (line.size() != kParRecordLength) {
    throw FormatError(".par record must be 160 characters, got " + std::to_string(line.size()));
  }
  std::array<double, 10> v{};
  for (std::size_t k = 0; k < kColumns.size(); ++k) v[k] = decode_field(line, kColumns[k]);

  LineRecord r;
  r.molecule_id = static_cast<int>(v[0]);
  r.isotopologue_id = static_cast<int>(v[1]);
  r.nu0_wavenumber = v[2];
  r.intensity_S = v[3];
  r.einstein_A = v[4];
  r.gamma_air = v[5];
  r.gamma_self = v[6];
  r.lower_state_energy = v[7];
  r.n_air = v[8];
  r.delta_air = v[9];
  r.raw = std::string(line);
  r.validate();
  return r;
}

std::string serialize_par_record(const LineRecord& record) {
  const bool has_raw = record.raw.size() == kParRecordLength;
  std::string out = has_raw ? record.raw : std::string(kParRecordLength, ' ');
  const auto values = field_values(record);
  for (std::size_t k = 0; k < kColumns.size(); ++k) {
    const Column& col = kColumns[k];
    if (has_raw) {
      try {
        if (decode_field(record.raw, col) == values[k]) continue;
      } catch (const FieldError&) {
        // raw text unusable for this field; re-encode it
      }
    }
    out.replace(col.begin, col.width, encode_field(values[k], col));
  }
  return out;
}

std::vector<LineRecord> parse_par_file(std::string_view text) {
  std::vector<LineRecord> lines;
  std::size_t line_no = 0;
  for (const auto& line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      lines.push_back(parse_par_record(line));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), line_no);
    } catch (const ValidationError& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  return lines;
}

namespace {

constexpr std::array<const char*, 9> kCsvColumns{"nu0_cm",  "S",        "gamma_air",
                                                 "gamma_self", "n_air", "E_lower",
                                                 "delta_air", "molecule", "iso"};

}  // namespace

std::vector<LineRecord> parse_csv_linelist(std::string_view text) {
  std::vector<std::string> rows;
  for (auto& line : detail::split_lines(text)) {
    if (!detail::trim(detail::strip_comment(line)).empty()) rows.push_back(std::move(line));
  }
  if (rows.empty()) throw SchemaError("line list is empty (no header)");

  const auto header = detail::split(rows.front(), ',');
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < header.size(); ++k) index[detail::trim(header[k])] = k;
  std::array<std::size_t, kCsvColumns.size()> pos{};
  for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
    const auto it = index.find(kCsvColumns[k]);
    if (it == index.end()) {
      throw SchemaError(std::string("line list header is missing column '") + kCsvColumns[k] +
                        "'");
    }
    pos[k] = it->second;
  }
  if (rows.size() < 2) throw SchemaError("line list has a header but no data rows");

  std::vector<LineRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = detail::split(rows[r], ',');
    if (cells.size() != header.size()) {
      throw SchemaError("row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(header.size()));
    }
    LineRecord rec;
    try {
      rec.nu0_wavenumber = detail::parse_double(cells[pos[0]]);
      rec.intensity_S = detail::parse_double(cells[pos[1]]);
      rec.gamma_air = detail::parse_double(cells[pos[2]]);
      rec.gamma_self = detail::parse_double(cells[pos[3]]);
      rec.n_air = detail::parse_double(cells[pos[4]]);
      rec.lower_state_energy = detail::parse_double(cells[pos[5]]);
      rec.delta_air = detail::parse_double(cells[pos[6]]);
      rec.molecule_id = static_cast<int>(detail::parse_int(cells[pos[7]]));
      rec.isotopologue_id = static_cast<int>(detail::parse_int(cells[pos[8]]));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), r + 1);
    }
    try {
      rec.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(r) + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  std::stable_sort(out.begin(), out.end(), [](const LineRecord& a, const LineRecord& b) {
    return a.nu0_wavenumber < b.nu0_wavenumber;
  });
  return out;
}

std::string write_csv_linelist(std::span<const LineRecord> lines) {
  std::ostringstream out;
  for (std::size_t k = 0; k < kCsvColumns.size(); ++k) out << (k ? "," : "") << kCsvColumns[k];
  out << '\n';
  for (const auto& r : lines) {
    out << detail::format_double(r.nu0_wavenumber) << ',' << detail::format_double(r.intensity_S)
        << ',' << detail::format_double(r.gamma_air) << ','
        << detail::format_double(r.gamma_self) << ',' << detail::format_double(r.n_air) << ','
        << detail::format_double(r.lower_state_energy) << ','
        << detail::format_double(r.delta_air) << ',' << r.molecule_id << ','
        << r.isotopologue_id << '\n';
  }
  return out.str();
}

std::vector<LineRecord> load_linelist(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  if (path.extension() == ".csv") return parse_csv_linelist(text);
  return parse_par_file(text);
}

// ---------------------------------------------------------------------------
// Line shapes

namespace {

constexpr double kBoltzmann = 1.380649e-23;        // J/K
constexpr double kAtomicMass = 1.66053906660e-27;  // kg
constexpr double kSpeedOfLight = 299792458.0;      // m/s
constexpr double kAtm = 101325.0;                  // Pa
constexpr double kReferenceT = 296.0;

// Weideman, SIAM J. Numer. Anal. 31 (1994) 1497: w(z) for Im z >= 0 as a
// degree N-1 polynomial in Z = (L + iz) / (L - iz).
class Faddeeva {
 public:
  static constexpr int kN = 32;

  Faddeeva() {
    constexpr int m = 2 * kN;
    constexpr int m2 = 2 * m;
    length_ = std::sqrt(kN / std::numbers::sqrt2);
    // f_k on k = -m+1 .. m-1 (f_{-m} = 0); a_n = (1/m2) sum_k f_k cos(pi k n / m)
    std::array<double, 2 * m> f{};
    for (int k = -m + 1; k < m; ++k) {
      const double t = length_ * std::tan(k * std::numbers::pi / m2);
      f[static_cast<std::size_t>(k + m)] = std::exp(-t * t) * (length_ * length_ + t * t);
    }
    for (int n = 1; n <= kN; ++n) {
      double sum = 0.0;
      for (int k = -m + 1; k < m; ++k) {
        sum += f[static_cast<std::size_t>(k + m)] * std::cos(2.0 * std::numbers::pi * k * n / m2);
      }
      coeff_[static_cast<std::size_t>(n - 1)] = sum / m2;
    }
  }

  std::complex<double> operator()(std::complex<double> z) const {
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> denom = length_ - i * z;
    const std::complex<double> big_z = (length_ + i * z) / denom;
    std::complex<double> p = 0.0;
    for (int n = kN - 1; n >= 0; --n) p = p * big_z + coeff_[static_cast<std::size_t>(n)];
    return 2.0 * p / (denom * denom) + 1.0 / (std::sqrt(std::numbers::pi) * denom);
  }

 private:
  double length_ = 0.0;
  std::array<double, kN> coeff_{};
};

const Faddeeva& faddeeva() {
  static const Faddeeva w;
  return w;
}

}  // namespace

void GasConditions::validate() const {
  if (!(temperature_K > 0.0)) throw ConfigError("temperature_K must be > 0");
  if (!(pressure_total_atm >= 0.0)) throw ConfigError("pressure_total_atm must be >= 0");
  if (!(self_fraction >= 0.0 && self_fraction <= 1.0)) {
    throw ConfigError("self_fraction must lie in [0, 1]");
  }
  if (!(molar_mass_amu > 0.0)) throw ConfigError("molar_mass_amu must be > 0");
}

double number_density_per_cm3(const GasConditions& conditions) {
  conditions.validate();
  return conditions.self_pressure_atm() * kAtm / (kBoltzmann * conditions.temperature_K) * 1e-6;
}

double doppler_width(double nu0_cm, double temperature_K, double molar_mass_amu) {
  if (!(temperature_K > 0.0) || !(molar_mass_amu > 0.0) || !(nu0_cm >= 0.0)) {
    throw DomainError("Doppler width needs T > 0, mass > 0 and nu0 >= 0");
  }
  const double v = std::sqrt(2.0 * std::numbers::ln2 * kBoltzmann * temperature_K /
                             (molar_mass_amu * kAtomicMass));
  return nu0_cm * v / kSpeedOfLight;
}

double lorentz_width(const LineRecord& record, const GasConditions& conditions) {
  conditions.validate();
  const double p_self = conditions.self_pressure_atm();
  const double p_air = conditions.pressure_total_atm - p_self;
  return std::pow(kReferenceT / conditions.temperature_K, record.n_air) *
         (record.gamma_air * p_air + record.gamma_self * p_self);
}

double voigt_value(double nu_cm, double nu0_cm, double gamma_D, double gamma_L) {
  if (!(gamma_D >= 0.0) || !(gamma_L >= 0.0)) throw DomainError("line widths must be >= 0");
  if (gamma_D == 0.0 && gamma_L == 0.0) {
    throw DomainError("degenerate line shape: both widths are zero");
  }
  const double dx = std::abs(nu_cm - nu0_cm);
  if (gamma_D == 0.0) return gamma_L / (std::numbers::pi * (dx * dx + gamma_L * gamma_L));
  const double scale = std::sqrt(std::numbers::ln2) / gamma_D;
  const double norm = std::sqrt(std::numbers::ln2 / std::numbers::pi) / gamma_D;
  if (gamma_L == 0.0) {
    const double x = dx * scale;
    return norm * std::exp(-x * x);
  }
  const std::complex<double> z(dx * scale, gamma_L * scale);
  return norm * faddeeva()(z).real();
}

// ---------------------------------------------------------------------------
// Profiles

void AbsorptionProfile::validate() const {
  if (grid_lambda_nm.size() != mu_per_cm.size()) {
    throw ValidationError("profile grid and mu have different lengths");
  }
  for (std::size_t k = 0; k < grid_lambda_nm.size(); ++k) {
    if (k > 0 && !(grid_lambda_nm[k] > grid_lambda_nm[k - 1])) {
      throw ValidationError("profile grid must be strictly ascending");
    }
    if (!(mu_per_cm[k] >= 0.0)) throw ValidationError("profile mu must be >= 0");
  }
}

bool AbsorptionProfile::mu_at(double lambda_nm, double& mu) const {
  const auto& g = grid_lambda_nm;
  if (g.empty() || lambda_nm < g.front() || lambda_nm > g.back()) return false;
  if (g.size() == 1) {
    mu = mu_per_cm.front();
    return true;
  }
  auto it = std::upper_bound(g.begin(), g.end(), lambda_nm);
  std::size_t hi = static_cast<std::size_t>(it - g.begin());
  if (hi >= g.size()) hi = g.size() - 1;
  const std::size_t lo = hi - 1;
  const double t = (lambda_nm - g[lo]) / (g[hi] - g[lo]);
  mu = mu_per_cm[lo] + t * (mu_per_cm[hi] - mu_per_cm[lo]);
  return true;
}

std::vector<double> wavelength_grid(double lo_nm, double hi_nm, double step_nm) {
  if (!(lo_nm > 0.0) || !(hi_nm > lo_nm) || !(step_nm > 0.0)) {
    throw ConfigError("wavelength grid needs 0 < lo < hi and step > 0");
  }
  const auto n = static_cast<std::size_t>(std::floor((hi_nm - lo_nm) / step_nm + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) grid[k] = lo_nm + step_nm * static_cast<double>(k);
  return grid;
}

AbsorptionProfile absorption_profile(std::span<const LineRecord> lines,
                                     const GasConditions& conditions,
                                     std::span<const double> grid_lambda_nm) {
  conditions.validate();
  if (grid_lambda_nm.empty()) throw ConfigError("absorption profile needs a nonempty grid");
  AbsorptionProfile profile;
  profile.grid_lambda_nm.assign(grid_lambda_nm.begin(), grid_lambda_nm.end());
  profile.mu_per_cm.assign(grid_lambda_nm.size(), 0.0);
  profile.conditions = conditions;
  for (std::size_t k = 0; k < grid_lambda_nm.size(); ++k) {
    if (!(grid_lambda_nm[k] > 0.0) || (k > 0 && !(grid_lambda_nm[k] > grid_lambda_nm[k - 1]))) {
      throw ConfigError("absorption grid must be positive and strictly ascending");
    }
  }

  std::vector<double> nu(grid_lambda_nm.size());
  for (std::size_t k = 0; k < nu.size(); ++k) nu[k] = 1e7 / grid_lambda_nm[k];
  const double nu_min = nu.back();
  const double nu_max = nu.front();
  const double density = number_density_per_cm3(conditions);

  for (const auto& line : lines) {
    line.validate();
    const double center = line.nu0_wavenumber + line.delta_air * conditions.pressure_total_atm;
    const double gd = doppler_width(line.nu0_wavenumber, conditions.temperature_K,
                                    conditions.molar_mass_amu);
    const double gl = lorentz_width(line, conditions);
    // Olivero & Longbothum estimate of the Voigt HWHM.
    const double hw = 0.5346 * gl + std::sqrt(0.2166 * gl * gl + gd * gd);
    if (center < nu_min - 100.0 * hw || center > nu_max + 100.0 * hw) continue;
    if (line.intensity_S == 0.0 || (gd == 0.0 && gl == 0.0)) continue;
    const double amplitude = density * line.intensity_S;
    for (std::size_t k = 0; k < nu.size(); ++k) {
      profile.mu_per_cm[k] += amplitude * voigt_value(nu[k], center, gd, gl);
    }
  }
  return profile;
}

void write_profile_csv(std::ostream& out, const AbsorptionProfile& profile) {
  out << "lambda_nm,mu_per_cm\n";
  for (std::size_t k = 0; k < profile.grid_lambda_nm.size(); ++k) {
    out << detail::format_double(profile.grid_lambda_nm[k]) << ','
        << detail::format_double(profile.mu_per_cm[k]) << '\n';
  }
}

AbsorptionProfile parse_profile_csv(std::string_view text) {
  AbsorptionProfile profile;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (!header_seen) {
      if (cells.size() != 2 || detail::trim(cells[0]) != "lambda_nm" ||
          detail::trim(cells[1]) != "mu_per_cm") {
        throw SchemaError("expected header 'lambda_nm,mu_per_cm'");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 2) throw FormatError("expected two columns", line_no);
    try {
      profile.grid_lambda_nm.push_back(detail::parse_double(cells[0]));
      profile.mu_per_cm.push_back(detail::parse_double(cells[1]));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  if (!header_seen) throw SchemaError("expected header 'lambda_nm,mu_per_cm'");
  if (profile.grid_lambda_nm.empty()) throw SchemaError("mu curve has no data rows");
  profile.validate();
  return profile;
}

AbsorptionProfile load_profile_csv(const std::filesystem::path& path) {
  return parse_profile_csv(detail::read_text_file(path));
}

}  // namespace qgs
