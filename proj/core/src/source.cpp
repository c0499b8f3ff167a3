#include "qgs/source.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "qgs/error.hpp"
#include "qgs/paths.hpp"
#include "text_util.hpp"

namespace qgs {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kFwhmToSigma = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))
constexpr double kEnvelopeCut = 4.0;                  // pump envelope truncation, in sigma

const char* polarization_name(Polarization pol) {
  return pol == Polarization::ordinary ? "ordinary" : "extraordinary";
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace

// ---------------------------------------------------------------------------
// Materials

double SellmeierSet::index(double wavelength_um) const {
  if (!(wavelength_um >= min_um && wavelength_um <= max_um)) {
    std::ostringstream msg;
    msg << material_id << " (" << polarization_name(polarization) << "): wavelength "
        << wavelength_um << " um outside valid range [" << min_um << ", " << max_um << "] um";
    throw RangeError(msg.str());
  }
  const double l2 = wavelength_um * wavelength_um;
  double n2 = 0.0;
  if (form == Form::quadratic) {
    n2 = coefficients[0] + coefficients[1] / (l2 - coefficients[2]) - coefficients[3] * l2;
  } else {
    n2 = 1.0;
    for (std::size_t k = 0; k + 1 < coefficients.size(); k += 2) {
      n2 += coefficients[k] * l2 / (l2 - coefficients[k + 1]);
    }
  }
  return std::sqrt(n2);
}

MaterialLibrary MaterialLibrary::parse(std::string_view text) {
  MaterialLibrary lib;
  SellmeierSet current;
  bool open = false;
  bool has_pol = false;
  bool has_coeffs = false;
  bool has_range = false;
  std::size_t record_line = 0;

  auto finish = [&]() {
    if (!open) return;
    if (current.material_id.empty() || !has_pol || !has_coeffs || !has_range) {
      throw FormatError("incomplete material record (needs material, polarization, "
                        "coefficients, valid_um)",
                        record_line);
    }
    const std::size_t need = current.form == SellmeierSet::Form::quadratic ? 4 : 2;
    if (current.coefficients.size() < need ||
        (current.form == SellmeierSet::Form::sellmeier && current.coefficients.size() % 2 != 0)) {
      throw FormatError("wrong number of coefficients for form", record_line);
    }
    if (!(current.min_um > 0.0 && current.max_um > current.min_um)) {
      throw FormatError("valid_um must be an increasing positive interval", record_line);
    }
    lib.add(current);
    current = SellmeierSet{};
    open = has_pol = has_coeffs = has_range = false;
  };

  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) {
      finish();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("expected 'key = value'", line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!open) {
      open = true;
      record_line = line_no;
    }
    try {
      if (key == "material") {
        current.material_id = value;
      } else if (key == "polarization") {
        if (value == "ordinary" || value == "o") {
          current.polarization = Polarization::ordinary;
        } else if (value == "extraordinary" || value == "e") {
          current.polarization = Polarization::extraordinary;
        } else {
          throw FormatError("unknown polarization '" + value + "'", line_no);
        }
        has_pol = true;
      } else if (key == "form") {
        if (value == "quadratic") {
          current.form = SellmeierSet::Form::quadratic;
        } else if (value == "sellmeier") {
          current.form = SellmeierSet::Form::sellmeier;
        } else {
          throw FormatError("unknown form '" + value + "'", line_no);
        }
      } else if (key == "coefficients") {
        current.coefficients = detail::parse_number_list(value);
        has_coeffs = true;
      } else if (key == "valid_um") {
        const auto range = detail::parse_number_list(value);
        if (range.size() != 2) throw FormatError("valid_um needs two numbers", line_no);
        current.min_um = range[0];
        current.max_um = range[1];
        has_range = true;
      } else {
        throw FormatError("unknown key '" + key + "'", line_no);
      }
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  finish();
  return lib;
}

MaterialLibrary MaterialLibrary::load(const std::filesystem::path& path) {
  return parse(detail::read_text_file(path));
}

const MaterialLibrary& MaterialLibrary::builtin() {
  static const MaterialLibrary lib = load(data_dir() / "materials" / "materials.txt");
  return lib;
}

void MaterialLibrary::add(SellmeierSet set) {
  auto it = std::find_if(sets_.begin(), sets_.end(), [&](const SellmeierSet& s) {
    return s.material_id == set.material_id && s.polarization == set.polarization;
  });
  if (it != sets_.end()) {
    *it = std::move(set);
  } else {
    sets_.push_back(std::move(set));
  }
}

const SellmeierSet& MaterialLibrary::find(std::string_view material_id, Polarization pol) const {
  for (const auto& s : sets_) {
    if (s.material_id == material_id && s.polarization == pol) return s;
  }
  throw ConfigError("no " + std::string(polarization_name(pol)) + " dispersion for material '" +
                    std::string(material_id) + "'");
}

bool MaterialLibrary::contains(std::string_view material_id) const {
  return std::any_of(sets_.begin(), sets_.end(),
                     [&](const SellmeierSet& s) { return s.material_id == material_id; });
}

// ---------------------------------------------------------------------------
// Configs

void PumpConfig::validate() const {
  if (!(wavelength_nm > 0.0)) throw ConfigError("pump.wavelength_nm must be > 0");
  if (!(bandwidth_nm >= 0.0)) throw ConfigError("pump.bandwidth_nm must be >= 0");
  if (!(rep_rate_hz > 0.0)) throw ConfigError("pump.rep_rate_hz must be > 0");
  if (!(pair_rate_hz >= 0.0)) throw ConfigError("pump.pair_rate_hz must be >= 0");
}

double transform_limited_bandwidth_nm(double wavelength_nm, double pulse_width_ps) {
  if (!(wavelength_nm > 0.0) || !(pulse_width_ps > 0.0)) {
    throw DomainError("transform limit needs positive wavelength and pulse width");
  }
  const double dnu_hz = 0.4413 / (pulse_width_ps * 1e-12);
  const double lambda_m = wavelength_nm * 1e-9;
  return lambda_m * lambda_m * dnu_hz / kSpeedOfLight * 1e9;
}

void CrystalConfig::validate() const {
  if (!(thickness_mm > 0.0)) throw ConfigError("crystal.thickness_mm must be > 0");
  if (!(cut_angle_rad >= 0.0 && cut_angle_rad <= std::numbers::pi / 2)) {
    throw ConfigError("crystal.cut_angle_rad must lie in [0, pi/2]");
  }
  if (material_id.empty()) throw ConfigError("crystal.material_id is empty");
}

void JsiGrid::validate(double lambda_p_nm) const {
  if (!(signal_min_nm > lambda_p_nm && signal_max_nm > signal_min_nm)) {
    throw ConfigError("JSI signal range must be increasing and above the pump wavelength");
  }
  if (signal_min_nm >= 2.0 * lambda_p_nm) {
    throw ConfigError("JSI signal range must stay on the signal side of degeneracy");
  }
  if (signal_points < 2 || idler_points < 2) throw ConfigError("JSI grid needs >= 2 points per axis");
}

// ---------------------------------------------------------------------------
// Phase matching

double sellmeier_index(const MaterialLibrary& lib, std::string_view material_id, Polarization pol,
                       double wavelength_um) {
  return lib.find(material_id, pol).index(wavelength_um);
}

double effective_e_index(const MaterialLibrary& lib, std::string_view material_id,
                         double wavelength_um, double theta_rad) {
  if (!(theta_rad >= 0.0 && theta_rad <= std::numbers::pi / 2)) {
    throw DomainError("theta must lie in [0, pi/2]");
  }
  const double no = sellmeier_index(lib, material_id, Polarization::ordinary, wavelength_um);
  const double ne = sellmeier_index(lib, material_id, Polarization::extraordinary, wavelength_um);
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  return 1.0 / std::sqrt(c * c / (no * no) + s * s / (ne * ne));
}

double conjugate_wavelength(double lambda_p_nm, double lambda_s_nm) {
  if (!(lambda_p_nm > 0.0) || !(lambda_s_nm > lambda_p_nm)) {
    throw DomainError("conjugate wavelength needs lambda_s > lambda_p > 0");
  }
  return 1.0 / (1.0 / lambda_p_nm - 1.0 / lambda_s_nm);
}

double phase_mismatch(const MaterialLibrary& lib, double lambda_p_nm, double lambda_s_nm,
                      double lambda_i_nm, const CrystalConfig& crystal) {
  const auto& id = crystal.material_id;
  const double np = effective_e_index(lib, id, lambda_p_nm * 1e-3, crystal.cut_angle_rad);
  const double ns = sellmeier_index(lib, id, Polarization::ordinary, lambda_s_nm * 1e-3);
  const double ni = sellmeier_index(lib, id, Polarization::ordinary, lambda_i_nm * 1e-3);
  // n / lambda[nm] -> rad/mm needs 2 pi * 1e6
  return 2.0 * std::numbers::pi * 1e6 * (np / lambda_p_nm - ns / lambda_s_nm - ni / lambda_i_nm);
}

double phase_matching_angle(const MaterialLibrary& lib, double lambda_p_nm, double lambda_s_nm,
                            double lambda_i_nm, std::string_view material_id) {
  CrystalConfig crystal;
  crystal.material_id = std::string(material_id);
  auto mismatch = [&](double theta) {
    crystal.cut_angle_rad = theta;
    return phase_mismatch(lib, lambda_p_nm, lambda_s_nm, lambda_i_nm, crystal);
  };

  double lo = 0.0;
  double hi = std::numbers::pi / 2;
  double f_lo = mismatch(lo);
  const double f_hi = mismatch(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw NoSolutionError("no type-I phase-matching angle in (0, pi/2) for " +
                          std::string(material_id));
  }
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = mismatch(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(mismatch(lo)) <= std::abs(mismatch(hi)) ? lo : hi;
}

// ---------------------------------------------------------------------------
// Joint spectral intensity

namespace {

double envelope_sigma_inv_nm(const PumpConfig& pump) {
  return pump.bandwidth_nm / (pump.wavelength_nm * pump.wavelength_nm) * kFwhmToSigma;
}

}  // namespace

double joint_spectral_intensity(const MaterialLibrary& lib, double lambda_s_nm, double lambda_i_nm,
                                const PumpConfig& pump, const CrystalConfig& crystal) {
  const double offset = 1.0 / lambda_s_nm + 1.0 / lambda_i_nm - 1.0 / pump.wavelength_nm;
  const double sigma = envelope_sigma_inv_nm(pump);
  double envelope = 0.0;
  if (sigma > 0.0) {
    envelope = std::exp(-0.5 * offset * offset / (sigma * sigma));
  } else {
    envelope = offset == 0.0 ? 1.0 : 0.0;
  }
  if (envelope == 0.0) return 0.0;
  const double dk = phase_mismatch(lib, pump.wavelength_nm, lambda_s_nm, lambda_i_nm, crystal);
  const double s = sinc(0.5 * dk * crystal.thickness_mm);
  return envelope * s * s;
}

std::vector<double> JsiTable::signal_marginal() const {
  std::vector<double> out(signal_cells(), 0.0);
  const std::size_t ni = idler_cells();
  for (std::size_t is = 0; is < out.size(); ++is) {
    double sum = 0.0;
    for (std::size_t ii = 0; ii < ni; ++ii) sum += weights[is * ni + ii];
    out[is] = sum;
  }
  return out;
}

JsiTable tabulate_jsi(const MaterialLibrary& lib, const PumpConfig& pump,
                      const CrystalConfig& crystal, const JsiGrid& grid) {
  pump.validate();
  crystal.validate();
  grid.validate(pump.wavelength_nm);

  JsiTable table;
  const std::size_t ns = grid.signal_points;
  const std::size_t ni = grid.idler_points;
  table.signal_edges_nm.resize(ns + 1);
  for (std::size_t k = 0; k <= ns; ++k) {
    table.signal_edges_nm[k] =
        grid.signal_min_nm + (grid.signal_max_nm - grid.signal_min_nm) * static_cast<double>(k) /
                                 static_cast<double>(ns);
  }
  const double idler_lo = conjugate_wavelength(pump.wavelength_nm, grid.signal_max_nm);
  const double idler_hi = conjugate_wavelength(pump.wavelength_nm, grid.signal_min_nm);
  table.idler_edges_nm.resize(ni + 1);
  for (std::size_t k = 0; k <= ni; ++k) {
    table.idler_edges_nm[k] =
        idler_lo + (idler_hi - idler_lo) * static_cast<double>(k) / static_cast<double>(ni);
  }
  table.weights.assign(ns * ni, 0.0);

  const double center = 1.0 / pump.wavelength_nm;
  const double sigma = envelope_sigma_inv_nm(pump);
  const double norm = sigma > 0.0 ? 1.0 / (1.0 - 2.0 * std_normal_cdf(-kEnvelopeCut)) : 1.0;
  // Envelope mass in [lo, hi) of total inverse wavelength.
  auto mass = [&](double lo, double hi) {
    if (sigma == 0.0) return (center >= lo && center < hi) ? 1.0 : 0.0;
    const double zlo = std::clamp((lo - center) / sigma, -kEnvelopeCut, kEnvelopeCut);
    const double zhi = std::clamp((hi - center) / sigma, -kEnvelopeCut, kEnvelopeCut);
    if (zhi <= zlo) return 0.0;
    return (std_normal_cdf(zhi) - std_normal_cdf(zlo)) * norm;
  };

  for (std::size_t is = 0; is < ns; ++is) {
    const double ls = table.signal_center(is);
    for (std::size_t ii = 0; ii < ni; ++ii) {
      // Longer idler edge gives the smaller total inverse wavelength.
      const double m = mass(1.0 / ls + 1.0 / table.idler_edges_nm[ii + 1],
                            1.0 / ls + 1.0 / table.idler_edges_nm[ii]);
      if (m <= 0.0) continue;
      const double dk =
          phase_mismatch(lib, pump.wavelength_nm, ls, table.idler_center(ii), crystal);
      const double s = sinc(0.5 * dk * crystal.thickness_mm);
      table.weights[is * ni + ii] = m * s * s;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Sampling

PairSource::PairSource(JsiTable table, const PumpConfig& pump)
    : table_(std::make_shared<const JsiTable>(std::move(table))), pump_(pump) {
  pump_.validate();
  const auto marginal = table_->signal_marginal();
  cdf_.resize(marginal.size());
  double total = 0.0;
  for (std::size_t k = 0; k < marginal.size(); ++k) {
    total += marginal[k];
    cdf_[k] = total;
  }
  if (!(total > 0.0)) throw ConfigError("JSI table is empty or all zero");
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
  inv_sigma_ = envelope_sigma_inv_nm(pump_);
}

PhotonPairEvent PairSource::sample_wavelengths(Rng& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  const auto row = static_cast<std::size_t>(
      std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  const std::size_t is = std::min(row, cdf_.size() - 1);
  const double lo = table_->signal_edges_nm[is];
  const double hi = table_->signal_edges_nm[is + 1];

  PhotonPairEvent ev;
  ev.lambda_s_nm = lo + (hi - lo) * uniform(rng);
  double total_inv = 1.0 / pump_.wavelength_nm;
  if (inv_sigma_ > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double z = 0.0;
    do {
      z = normal(rng);
    } while (std::abs(z) > kEnvelopeCut);
    total_inv += inv_sigma_ * z;
  }
  ev.lambda_i_nm = 1.0 / (total_inv - 1.0 / ev.lambda_s_nm);
  return ev;
}

PhotonPairEvent sample_pair(PairSource& source, Rng& rng) {
  PhotonPairEvent ev = source.sample_wavelengths(rng);
  const double slot_ns = 1e9 / source.pump_.rep_rate_hz;
  if (source.pump_.pair_rate_hz > 0.0) {
    std::exponential_distribution<double> gap(source.pump_.pair_rate_hz * 1e-9);
    source.clock_ns_ += gap(rng);
  } else {
    source.clock_ns_ = std::numeric_limits<double>::infinity();
  }
  ev.t_s = std::floor(source.clock_ns_ / slot_ns) * slot_ns;
  return ev;
}

}  // namespace qgs
