#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "qgs/error.hpp"
#include "qgs/linedata.hpp"
#include "qgs/paths.hpp"

using namespace qgs;

namespace {

// Columns 68-160 are opaque text (quantum numbers, references, weights).
const std::string kTail =
    "          V1 V2          V0 V0                    R 12e     454332 1 1 1 1 1 1    75.0   "
    "69.0";

// Hand-built record: mol 26, iso 1, nu 6500.123456, S 1.000E-21, A 23.45,
// gamma_air .0812, gamma_self .1456, E'' 1234.5678, n_air .75, delta -.008.
const std::string kRecord = std::string("26") + "1" + " 6500.123456" + " 1.000E-21" +
                            " 2.345E+01" + ".0812" + ".1456" + " 1234.5678" + "0.75" +
                            "-.008000" + kTail;

std::string read_fixture(const char* name) {
  std::ifstream in(data_dir() / "lines" / name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Voigt by direct convolution, t = gamma_L tan(u) to map the Lorentzian onto
// a finite interval. Independent of the rational approximation.
double voigt_oracle(double x, double gd, double gl) {
  const double sg = gd / std::sqrt(2.0 * std::log(2.0));
  const int n = 400000;
  const double h = std::numbers::pi / n;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = -std::numbers::pi / 2 + (k + 0.5) * h;
    const double t = gl * std::tan(u);
    const double d = (x - t) / sg;
    sum += std::exp(-0.5 * d * d);
  }
  return sum * h / std::numbers::pi / (sg * std::sqrt(2.0 * std::numbers::pi));
}

// Integral of the Voigt density over the whole line by the same substitution.
double voigt_integral(double gd, double gl) {
  const double scale = gd + gl;
  const int n = 200000;
  const double h = std::numbers::pi / n;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = -std::numbers::pi / 2 + (k + 0.5) * h;
    const double c = std::cos(u);
    sum += voigt_value(1000.0 + scale * std::tan(u), 1000.0, gd, gl) * scale / (c * c);
  }
  return sum * h;
}

LineRecord simple_line(double nu0, double s, double g_air, double g_self) {
  LineRecord r;
  r.molecule_id = 2;
  r.isotopologue_id = 1;
  r.nu0_wavenumber = nu0;
  r.intensity_S = s;
  r.gamma_air = g_air;
  r.gamma_self = g_self;
  r.n_air = 0.75;
  return r;
}

}  // namespace

TEST_CASE("parse_par_record decodes the fixed columns exactly") {
  REQUIRE(kRecord.size() == 160);
  const LineRecord r = parse_par_record(kRecord);
  CHECK(r.molecule_id == 26);
  CHECK(r.isotopologue_id == 1);
  CHECK(r.nu0_wavenumber == 6500.123456);
  CHECK(r.intensity_S == 1.000e-21);
  CHECK(r.einstein_A == 2.345e+01);
  CHECK(r.gamma_air == 0.0812);
  CHECK(r.gamma_self == 0.1456);
  CHECK(r.lower_state_energy == 1234.5678);
  CHECK(r.n_air == 0.75);
  CHECK(r.delta_air == -0.008);
  CHECK(serialize_par_record(r) == kRecord);
}

TEST_CASE("parse_par_record length and field errors") {
  try {
    parse_par_record(kRecord.substr(0, 159));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("159") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_par_record(kRecord + " "), FormatError);

  std::string bad = kRecord;
  bad.replace(3, 12, "   abcdefghi");
  try {
    parse_par_record(bad);
    FAIL("expected FieldError");
  } catch (const FieldError& e) {
    const std::string what = e.what();
    CHECK(what.find("4-15") != std::string::npos);
  }
  std::string negative = kRecord;
  negative.replace(15, 10, "-1.000E-21");
  CHECK_THROWS_AS(parse_par_record(negative), ValidationError);
}

TEST_CASE("isotopologue codes beyond 9") {
  std::string r0 = kRecord;
  r0[2] = '0';
  CHECK(parse_par_record(r0).isotopologue_id == 10);
  std::string ra = kRecord;
  ra[2] = 'A';
  CHECK(parse_par_record(ra).isotopologue_id == 11);
  CHECK(serialize_par_record(parse_par_record(ra)) == ra);
}

TEST_CASE("every fixture record round-trips byte for byte") {
  for (const char* name : {"c2h2_nu1nu3.par", "co2_30012.par"}) {
    const std::string text = read_fixture(name);
    REQUIRE(!text.empty());
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      REQUIRE(serialize_par_record(parse_par_record(line)) == line);
      ++n;
    }
    CHECK(n >= 20);
    CHECK(parse_par_file(text).size() == static_cast<std::size_t>(n));
  }
}

TEST_CASE("modified records are re-encoded in the Fortran formats") {
  LineRecord r = parse_par_record(kRecord);
  r.intensity_S = 2.5e-23;
  r.gamma_air = 0.07;
  r.delta_air = -0.0123;
  const std::string out = serialize_par_record(r);
  REQUIRE(out.size() == 160);
  CHECK(out.substr(15, 10) == " 2.500E-23");
  CHECK(out.substr(35, 5) == ".0700");
  CHECK(out.substr(59, 8) == "-.012300");
  CHECK(out.substr(67) == kTail);
  const LineRecord back = parse_par_record(out);
  CHECK(back.intensity_S == 2.5e-23);
  CHECK(back.gamma_air == 0.07);
  CHECK(back.delta_air == -0.0123);

  LineRecord fresh = simple_line(6350.5, 1.8e-23, 0.08, 0.1);
  const LineRecord parsed = parse_par_record(serialize_par_record(fresh));
  CHECK(parsed.nu0_wavenumber == 6350.5);
  CHECK(parsed.intensity_S == 1.8e-23);
  fresh.nu0_wavenumber = 1e13;
  CHECK_THROWS_AS(serialize_par_record(fresh), ValidationError);
}

TEST_CASE("parse_par_file reports the failing line") {
  const std::string text = kRecord + "\n\n" + kRecord.substr(0, 100) + "\n";
  try {
    parse_par_file(text);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("parse_csv_linelist sorts rows and checks the schema") {
  const auto two = parse_csv_linelist(
      "nu0_cm,S,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso\n"
      "6600.5,1e-21,0.08,0.1,0.75,10,-0.005,26,1\n"
      "6500.25,2e-21,0.07,0.12,0.7,20,-0.004,26,1\n");
  REQUIRE(two.size() == 2);
  CHECK(two[0].nu0_wavenumber == 6500.25);
  CHECK(two[1].nu0_wavenumber == 6600.5);
  CHECK(two[0].intensity_S == 2e-21);
  CHECK(two[0].lower_state_energy == 20.0);

  const auto reordered = parse_csv_linelist(
      "S,nu0_cm,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso\n"
      "1e-21,6600.5,0.08,0.1,0.75,10,-0.005,26,1\n");
  CHECK(reordered[0].nu0_wavenumber == 6600.5);

  CHECK_THROWS_AS(
      parse_csv_linelist("nu0_cm,S,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso\n"),
      SchemaError);
  CHECK_THROWS_AS(parse_csv_linelist("nu0_cm,S,gamma_air\n6500,1e-21,0.1\n"), SchemaError);
  CHECK_THROWS_AS(
      parse_csv_linelist("nu0_cm,S,gamma_air,gamma_self,n_air,E_lower,delta_air,molecule,iso\n"
                         "6500,-1e-21,0.08,0.1,0.75,10,-0.005,26,1\n"),
      ValidationError);
}

TEST_CASE("CSV and .par fixtures describe the same lines") {
  const auto par = parse_par_file(read_fixture("co2_30012.par"));
  const auto csv = parse_csv_linelist(read_fixture("co2_30012.csv"));
  REQUIRE(par.size() == csv.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].nu0_wavenumber == csv[i].nu0_wavenumber);
    CHECK(par[i].intensity_S == csv[i].intensity_S);
    CHECK(par[i].gamma_self == csv[i].gamma_self);
  }
  const auto again = parse_csv_linelist(write_csv_linelist(csv));
  REQUIRE(again.size() == csv.size());
  CHECK(again[3].delta_air == csv[3].delta_air);
}

TEST_CASE("doppler_width HWHM") {
  // (nu0/c) sqrt(2 ln2 k T / m), CODATA constants, evaluated by hand.
  CHECK(doppler_width(6500.0, 300.0, 26.0) == doctest::Approx(0.0079069943).epsilon(1e-8));
  CHECK(doppler_width(6500.0, 1200.0, 26.0) ==
        doctest::Approx(2.0 * doppler_width(6500.0, 300.0, 26.0)).epsilon(1e-14));
  CHECK(doppler_width(13000.0, 300.0, 26.0) ==
        doctest::Approx(2.0 * doppler_width(6500.0, 300.0, 26.0)).epsilon(1e-14));
  CHECK(doppler_width(0.0, 300.0, 26.0) == 0.0);
  CHECK_THROWS_AS(doppler_width(6500.0, 0.0, 26.0), DomainError);
  CHECK_THROWS_AS(doppler_width(6500.0, 300.0, -1.0), DomainError);
}

TEST_CASE("lorentz_width follows the HITRAN convention") {
  LineRecord r = simple_line(6500.0, 1e-21, 0.08, 0.15);
  GasConditions g;
  g.temperature_K = 296.0;
  g.pressure_total_atm = 0.7;
  g.self_fraction = 0.0;
  CHECK(lorentz_width(r, g) == doctest::Approx(0.08 * 0.7).epsilon(1e-15));
  g.self_fraction = 0.25;
  CHECK(lorentz_width(r, g) ==
        doctest::Approx(0.08 * 0.7 * 0.75 + 0.15 * 0.7 * 0.25).epsilon(1e-15));
  const double w1 = lorentz_width(r, g);
  g.pressure_total_atm = 1.4;
  CHECK(lorentz_width(r, g) == doctest::Approx(2.0 * w1).epsilon(1e-15));
  g.pressure_total_atm = 0.0;
  CHECK(lorentz_width(r, g) == 0.0);
  g.pressure_total_atm = 1.0;
  g.temperature_K = 592.0;
  r.n_air = 1.0;
  const double hot = lorentz_width(r, g);
  g.temperature_K = 296.0;
  CHECK(hot == doctest::Approx(0.5 * lorentz_width(r, g)).epsilon(1e-14));
}

TEST_CASE("number density from the ideal gas law") {
  GasConditions g;
  g.temperature_K = 1.0;
  g.pressure_total_atm = 1.0;
  g.self_fraction = 1.0;
  CHECK(number_density_per_cm3(g) == doctest::Approx(7.338939875e21).epsilon(1e-9));
  g.temperature_K = 296.0;
  g.self_fraction = 0.5;
  CHECK(number_density_per_cm3(g) == doctest::Approx(0.5 * 7.338939875e21 / 296.0).epsilon(1e-9));
  g.self_fraction = 1.5;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("voigt_value limits and symmetry") {
  const double gd = 0.01;
  const double gl = 0.05;
  CHECK(voigt_value(1000.0, 1000.0, gd, 0.0) ==
        doctest::Approx(std::sqrt(std::log(2.0) / std::numbers::pi) / gd).epsilon(1e-3));
  CHECK(voigt_value(1000.0, 1000.0, 0.0, gl) ==
        doctest::Approx(1.0 / (std::numbers::pi * gl)).epsilon(1e-3));
  CHECK(voigt_value(1000.0, 1000.0, 1e-9, gl) ==
        doctest::Approx(1.0 / (std::numbers::pi * gl)).epsilon(1e-3));
  CHECK(voigt_value(1000.0, 1000.0, gd, 1e-9) ==
        doctest::Approx(std::sqrt(std::log(2.0) / std::numbers::pi) / gd).epsilon(1e-3));
  CHECK_THROWS_AS(voigt_value(1000.0, 1000.0, 0.0, 0.0), DomainError);

  const double peak = voigt_value(1000.0, 1000.0, gd, gl);
  for (double x = 0.001; x < 2.0; x *= 1.7) {
    const double a = voigt_value(1000.0 + x, 1000.0, gd, gl);
    const double b = voigt_value(1000.0 - x, 1000.0, gd, gl);
    CHECK(a >= 0.0);
    CHECK(std::abs(a - b) < 1e-12 * peak);
  }
}

TEST_CASE("voigt_value agrees with direct convolution in the core") {
  for (double ratio : {0.1, 1.0, 10.0}) {
    const double gd = 0.02;
    const double gl = gd * ratio;
    for (double x : {0.0, 0.5 * gd, gd + gl}) {
      const double want = voigt_oracle(x, gd, gl);
      CHECK(voigt_value(1000.0 + x, 1000.0, gd, gl) == doctest::Approx(want).epsilon(1e-4));
    }
  }
}

TEST_CASE("voigt_value integrates to one") {
  for (double gd : {0.003, 0.01, 0.03, 0.1}) {
    for (double gl : {0.001, 0.01, 0.05, 0.2, 1.0}) {
      CHECK(voigt_integral(gd, gl) == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("absorption_profile basics") {
  GasConditions g;
  g.temperature_K = 296.0;
  g.pressure_total_atm = 1.0;
  g.self_fraction = 0.5;
  g.molar_mass_amu = 44.0;
  const auto grid = wavelength_grid(1570.0, 1580.0, 0.001);

  const auto empty = absorption_profile({}, g, grid);
  for (double mu : empty.mu_per_cm) CHECK(mu == 0.0);

  // Lorentz-dominated single line, no shift: mu(nu0) = N S / (pi gamma_L).
  LineRecord line = simple_line(1e7 / 1575.0, 1e-22, 0.1, 0.1);
  const std::vector<LineRecord> one{line};
  const auto fine = wavelength_grid(1574.9, 1575.1, 0.0001);
  const auto prof = absorption_profile(one, g, fine);
  double peak = 0.0;
  for (double mu : prof.mu_per_cm) peak = std::max(peak, mu);
  const double expected = number_density_per_cm3(g) * 1e-22 / (std::numbers::pi * 0.1);
  CHECK(peak == doctest::Approx(expected).epsilon(0.01));

  // Doubling the absorber fraction at fixed P with equal broadening doubles mu.
  GasConditions g2 = g;
  g2.self_fraction = 1.0;
  const auto prof2 = absorption_profile(one, g2, fine);
  double peak2 = 0.0;
  for (double mu : prof2.mu_per_cm) peak2 = std::max(peak2, mu);
  CHECK(peak2 == doctest::Approx(2.0 * peak).epsilon(1e-12));

  // Linear in S.
  LineRecord strong = line;
  strong.intensity_S *= 3.0;
  const std::vector<LineRecord> three{strong};
  const auto prof3 = absorption_profile(three, g, fine);
  for (std::size_t k = 0; k < fine.size(); k += 97) {
    CHECK(prof3.mu_per_cm[k] == doctest::Approx(3.0 * prof.mu_per_cm[k]).epsilon(1e-12));
  }
}

TEST_CASE("absorption_profile is the sum of single-line profiles") {
  std::ifstream in(data_dir() / "lines" / "co2_30012.par");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto lines = parse_par_file(ss.str());
  GasConditions g;
  g.temperature_K = 300.0;
  g.pressure_total_atm = 2.0;
  g.molar_mass_amu = 44.0;
  const auto grid = wavelength_grid(1565.0, 1590.0, 0.01);
  const auto all = absorption_profile(lines, g, grid);
  std::vector<double> sum(grid.size(), 0.0);
  for (const auto& l : lines) {
    const std::vector<LineRecord> one{l};
    const auto p = absorption_profile(one, g, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) sum[k] += p.mu_per_cm[k];
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(all.mu_per_cm[k] >= 0.0);
    CHECK(std::abs(all.mu_per_cm[k] - sum[k]) <= 1e-12 * std::max(sum[k], 1e-300));
  }
  CHECK_NOTHROW(all.validate());
}

TEST_CASE("pressure shift moves the line centre") {
  LineRecord line = simple_line(6400.0, 1e-22, 0.05, 0.05);
  line.delta_air = -0.01;
  GasConditions g;
  g.pressure_total_atm = 2.0;
  g.self_fraction = 0.0;
  g.molar_mass_amu = 44.0;
  // Centre at 6400 - 0.02 cm^-1.
  const double shifted_nm = 1e7 / (6400.0 - 0.02);
  const auto grid = wavelength_grid(1e7 / 6400.2, 1e7 / 6399.8, 0.00005);
  const std::vector<LineRecord> one{line};
  g.self_fraction = 0.0001;
  const auto prof = absorption_profile(one, g, grid);
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (prof.mu_per_cm[k] > prof.mu_per_cm[best]) best = k;
  }
  CHECK(std::abs(grid[best] - shifted_nm) < 0.0002);
}

TEST_CASE("profile CSV round trip") {
  AbsorptionProfile p;
  p.grid_lambda_nm = {1500.0, 1500.5, 1501.0};
  p.mu_per_cm = {0.0, 0.125, 1e-7};
  std::ostringstream out;
  write_profile_csv(out, p);
  const auto back = parse_profile_csv(out.str());
  CHECK(back.grid_lambda_nm == p.grid_lambda_nm);
  CHECK(back.mu_per_cm == p.mu_per_cm);
  CHECK_THROWS_AS(parse_profile_csv("wavelength,mu\n1,2\n"), SchemaError);
  CHECK_THROWS_AS(parse_profile_csv("lambda_nm,mu_per_cm\n1500,abc\n"), FormatError);
  double mu = 0.0;
  CHECK(back.mu_at(1500.25, mu));
  CHECK(mu == doctest::Approx(0.0625));
  CHECK_FALSE(back.mu_at(1400.0, mu));
}
