#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "qgs/error.hpp"
#include "qgs/paths.hpp"
#include "qgs/run.hpp"
#include "text_util.hpp"

namespace qgs {

namespace {

using nlohmann::json;

// Reads the members of one JSON object and rejects any it did not ask for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + name(key) + "' has the wrong type");
    }
  }

  bool has(const char* key) const {
    const auto it = object_.find(key);
    return it != object_.end() && !it->is_null();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown preset key '" + name(key.c_str()) + "'");
    }
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve_path(const std::string& p, const std::filesystem::path& base_dir) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_relative()) path = base_dir / path;
  return std::filesystem::absolute(path).lexically_normal().string();
}

json to_json(const ApparatusPreset& p) {
  json j;
  j["name"] = p.name;
  j["pump"] = {{"wavelength_nm", p.pump.wavelength_nm},
               {"bandwidth_nm", p.pump.bandwidth_nm},
               {"pulse_width_ps", p.pump.pulse_width_ps},
               {"rep_rate_hz", p.pump.rep_rate_hz},
               {"pair_rate_hz", p.pump.pair_rate_hz}};
  j["crystal"] = {{"thickness_mm", p.crystal.thickness_mm},
                  {"cut_angle_rad", p.crystal.cut_angle_rad},
                  {"material_id", p.crystal.material_id},
                  {"phase_match_signal_nm", p.phase_match_signal_nm}};
  j["jsi"] = {{"signal_min_nm", p.jsi.signal_min_nm},
              {"signal_max_nm", p.jsi.signal_max_nm},
              {"signal_points", p.jsi.signal_points},
              {"idler_points", p.jsi.idler_points}};
  j["bucket"] = {{"efficiency_eta_i", p.bucket.efficiency_eta_i},
                 {"dark_rate_hz", p.bucket.dark_rate_hz},
                 {"gate_width_ns", p.bucket.gate_width_ns},
                 {"dead_time_ns", p.bucket.dead_time_ns},
                 {"latency_ns", p.bucket.latency_ns}};
  const auto& s = p.spectrometer;
  j["spectrometer"] = {{"grating_lines_per_mm", s.grating_lines_per_mm},
                       {"lambda_center_nm", s.lambda_center_nm},
                       {"pixels_x", s.pixels_x},
                       {"pixels_y", s.pixels_y},
                       {"dispersion_nm_per_pixel", s.dispersion_nm_per_pixel},
                       {"resolution_fwhm_nm", s.resolution_fwhm_nm},
                       {"camera_qe", s.camera_qe},
                       {"camera_dark_rate_hz_per_pixel", s.camera_dark_rate_hz_per_pixel},
                       {"beam_sigma_px", s.beam_sigma_px}};
  const auto& c = p.coincidence;
  j["coincidence"] = {{"fiber_delay_ns", c.fiber_delay_ns},
                      {"fpga_delay_ns", c.fpga_delay_ns},
                      {"gate_width_ns", c.gate_width_ns},
                      {"jitter_sigma_ns", c.jitter_sigma_ns},
                      {"mode", c.mode == GateMode::heralded ? "heralded" : "ungated"}};
  const auto& m = p.sample;
  j["sample"] = {{"kind", std::string(to_string(m.kind))},
                 {"path_length_cm", m.path_length_cm},
                 {"passes", m.passes},
                 {"round_trip_loss", m.round_trip_loss},
                 {"curve", m.curve},
                 {"linelist", m.linelist},
                 {"grid_step_nm", m.grid_step_nm},
                 {"gas",
                  {{"temperature_K", m.gas.temperature_K},
                   {"pressure_total_atm", m.gas.pressure_total_atm},
                   {"self_fraction", m.gas.self_fraction},
                   {"molar_mass_amu", m.gas.molar_mass_amu}}}};
  j["exposure_s"] = p.exposure_s;
  j["frames"] = p.frames;
  j["seed"] = p.seed;
  return j;
}

ApparatusPreset from_json(const json& j, const std::filesystem::path& base_dir) {
  ApparatusPreset p;
  ObjectReader top(j, "");
  top.get("name", p.name);
  top.get("exposure_s", p.exposure_s);
  top.get("frames", p.frames);
  top.get("seed", p.seed);

  bool has_bandwidth = false;
  if (const json* o = top.child("pump")) {
    ObjectReader r(*o, "pump");
    r.get("wavelength_nm", p.pump.wavelength_nm);
    has_bandwidth = r.has("bandwidth_nm");
    r.get("bandwidth_nm", p.pump.bandwidth_nm);
    r.get("pulse_width_ps", p.pump.pulse_width_ps);
    r.get("rep_rate_hz", p.pump.rep_rate_hz);
    r.get("pair_rate_hz", p.pump.pair_rate_hz);
    r.finish();
  }
  if (!has_bandwidth) {
    p.pump.bandwidth_nm = transform_limited_bandwidth_nm(p.pump.wavelength_nm, p.pump.pulse_width_ps);
  }
  if (const json* o = top.child("crystal")) {
    ObjectReader r(*o, "crystal");
    r.get("thickness_mm", p.crystal.thickness_mm);
    r.get("cut_angle_rad", p.crystal.cut_angle_rad);
    r.get("material_id", p.crystal.material_id);
    r.get("phase_match_signal_nm", p.phase_match_signal_nm);
    r.finish();
  }
  if (const json* o = top.child("jsi")) {
    ObjectReader r(*o, "jsi");
    r.get("signal_min_nm", p.jsi.signal_min_nm);
    r.get("signal_max_nm", p.jsi.signal_max_nm);
    r.get("signal_points", p.jsi.signal_points);
    r.get("idler_points", p.jsi.idler_points);
    r.finish();
  }
  if (const json* o = top.child("bucket")) {
    ObjectReader r(*o, "bucket");
    r.get("efficiency_eta_i", p.bucket.efficiency_eta_i);
    r.get("dark_rate_hz", p.bucket.dark_rate_hz);
    r.get("gate_width_ns", p.bucket.gate_width_ns);
    r.get("dead_time_ns", p.bucket.dead_time_ns);
    r.get("latency_ns", p.bucket.latency_ns);
    r.finish();
  }
  if (const json* o = top.child("spectrometer")) {
    ObjectReader r(*o, "spectrometer");
    auto& s = p.spectrometer;
    r.get("grating_lines_per_mm", s.grating_lines_per_mm);
    // Dispersion and resolution follow the grating unless given explicitly.
    s.dispersion_nm_per_pixel = grating_dispersion_nm_per_pixel(s.grating_lines_per_mm);
    s.resolution_fwhm_nm = 3.0 * s.dispersion_nm_per_pixel;
    r.get("lambda_center_nm", s.lambda_center_nm);
    r.get("pixels_x", s.pixels_x);
    r.get("pixels_y", s.pixels_y);
    r.get("dispersion_nm_per_pixel", s.dispersion_nm_per_pixel);
    r.get("resolution_fwhm_nm", s.resolution_fwhm_nm);
    r.get("camera_qe", s.camera_qe);
    r.get("camera_dark_rate_hz_per_pixel", s.camera_dark_rate_hz_per_pixel);
    r.get("beam_sigma_px", s.beam_sigma_px);
    r.finish();
  }
  if (const json* o = top.child("coincidence")) {
    ObjectReader r(*o, "coincidence");
    auto& c = p.coincidence;
    r.get("fiber_delay_ns", c.fiber_delay_ns);
    r.get("fpga_delay_ns", c.fpga_delay_ns);
    r.get("gate_width_ns", c.gate_width_ns);
    r.get("jitter_sigma_ns", c.jitter_sigma_ns);
    std::string mode = "heralded";
    r.get("mode", mode);
    if (mode == "heralded") {
      c.mode = GateMode::heralded;
    } else if (mode == "ungated") {
      c.mode = GateMode::ungated;
    } else {
      throw ConfigError("coincidence.mode must be 'heralded' or 'ungated'");
    }
    r.finish();
  }
  if (const json* o = top.child("sample")) {
    ObjectReader r(*o, "sample");
    auto& m = p.sample;
    std::string kind = "blank";
    r.get("kind", kind);
    m.kind = sample_kind_from_string(kind);
    r.get("path_length_cm", m.path_length_cm);
    r.get("passes", m.passes);
    r.get("round_trip_loss", m.round_trip_loss);
    r.get("curve", m.curve);
    r.get("linelist", m.linelist);
    r.get("grid_step_nm", m.grid_step_nm);
    if (const json* g = r.child("gas")) {
      ObjectReader rg(*g, "sample.gas");
      rg.get("temperature_K", m.gas.temperature_K);
      rg.get("pressure_total_atm", m.gas.pressure_total_atm);
      rg.get("self_fraction", m.gas.self_fraction);
      rg.get("molar_mass_amu", m.gas.molar_mass_amu);
      rg.finish();
    }
    r.finish();
    m.curve = resolve_path(m.curve, base_dir);
    m.linelist = resolve_path(m.linelist, base_dir);
  }
  top.finish();

  if (p.phase_match_signal_nm > 0.0) {
    const double idler = conjugate_wavelength(p.pump.wavelength_nm, p.phase_match_signal_nm);
    p.crystal.cut_angle_rad =
        phase_matching_angle(MaterialLibrary::builtin(), p.pump.wavelength_nm,
                             p.phase_match_signal_nm, idler, p.crystal.material_id);
  }
  p.validate();
  return p;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten(value, name, out);
    } else {
      out.push_back(name);
    }
  }
}

}  // namespace

void ApparatusPreset::validate() const {
  pump.validate();
  crystal.validate();
  jsi.validate(pump.wavelength_nm);
  bucket.validate();
  spectrometer.validate();
  coincidence.validate();
  if (!(exposure_s > 0.0)) throw ConfigError("exposure_s must be > 0");
  if (frames < 1) throw ConfigError("frames must be >= 1");
  if (sample.kind != SampleKind::blank) {
    if (sample.passes != 1 && sample.passes != 2) throw ConfigError("sample.passes must be 1 or 2");
    if (sample.kind != SampleKind::calibration_filter && !(sample.path_length_cm > 0.0)) {
      throw ConfigError("sample.path_length_cm must be > 0");
    }
    if (sample.kind == SampleKind::gas_cell) {
      if (sample.linelist.empty()) throw ConfigError("gas_cell sample needs sample.linelist");
      sample.gas.validate();
      if (!(sample.grid_step_nm > 0.0)) throw ConfigError("sample.grid_step_nm must be > 0");
    } else if (sample.curve.empty()) {
      throw ConfigError(std::string(to_string(sample.kind)) + " sample needs sample.curve");
    }
  }
}

ApparatusPreset parse_preset(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("preset is not valid JSON: ") + e.what());
  }
  return from_json(j, base_dir);
}

std::string preset_to_text(const ApparatusPreset& preset) {
  return to_json(preset).dump(2) + "\n";
}

std::string preset_to_compact_text(const ApparatusPreset& preset) {
  return to_json(preset).dump();
}

std::vector<std::string> builtin_preset_names() {
  std::vector<std::string> names;
  const auto dir = data_dir() / "presets";
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

ApparatusPreset load_preset(const std::string& name_or_path) {
  std::filesystem::path path(name_or_path);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    path = data_dir() / "presets" / (name_or_path + ".json");
    if (name_or_path.empty() || !std::filesystem::is_regular_file(path, ec)) {
      std::string known;
      for (const auto& n : builtin_preset_names()) known += (known.empty() ? "" : ", ") + n;
      throw ConfigError("unknown preset '" + name_or_path + "' (known: " + known + ")");
    }
  }
  std::string text;
  try {
    text = detail::read_text_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_preset(text, std::filesystem::absolute(path).parent_path());
}

std::vector<std::string> preset_keys() {
  std::vector<std::string> keys;
  flatten(to_json(ApparatusPreset{}), "", keys);
  return keys;
}

ApparatusPreset apply_overrides(const ApparatusPreset& preset,
                                const std::vector<std::string>& assignments) {
  if (assignments.empty()) return preset;
  json j = to_json(preset);
  const auto keys = preset_keys();
  bool angle_set = false;
  bool match_set = false;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + a + "' is not of the form key=value");
    }
    const std::string key = detail::trim(a.substr(0, eq));
    const std::string text = detail::trim(a.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      std::string valid;
      for (const auto& k : keys) valid += "\n  " + k;
      throw ConfigError("unknown override key '" + key + "'; valid keys:" + valid);
    }
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    j[json::json_pointer(pointer)] = value;
    angle_set = angle_set || key == "crystal.cut_angle_rad";
    match_set = match_set || key == "crystal.phase_match_signal_nm";
  }
  // An explicit angle wins over the stored phase-matching target.
  if (angle_set && !match_set) j["crystal"]["phase_match_signal_nm"] = 0.0;
  return from_json(j, std::filesystem::current_path());
}

double instrument_fwhm_idler_nm(const ApparatusPreset& preset, double lambda_s_nm) {
  const double lp = preset.pump.wavelength_nm;
  const double li = conjugate_wavelength(lp, lambda_s_nm);
  const double optical = preset.spectrometer.resolution_fwhm_nm * (li / lambda_s_nm) *
                         (li / lambda_s_nm);
  const double pump = preset.pump.bandwidth_nm * (li / lp) * (li / lp);
  return std::hypot(optical, pump);
}

}  // namespace qgs
