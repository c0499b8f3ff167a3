#include "qgs/run.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "qgs/error.hpp"
#include "qgs/random.hpp"
#include "text_util.hpp"

namespace qgs {

namespace {

// Gas profiles extend past the JSI idler range so blurred edges stay covered.
constexpr double kProfileMarginNm = 2.0;

JsiTable build_table(const ApparatusPreset& preset) {
  preset.validate();
  return tabulate_jsi(MaterialLibrary::builtin(), preset.pump, preset.crystal, preset.jsi);
}

}  // namespace

AcquisitionStats& AcquisitionStats::operator+=(const AcquisitionStats& o) {
  pairs += o.pairs;
  idler_survived += o.idler_survived;
  true_clicks += o.true_clicks;
  dark_clicks += o.dark_clicks;
  dead_time_losses += o.dead_time_losses;
  gated_signal += o.gated_signal;
  camera_signal_counts += o.camera_signal_counts;
  camera_dark_counts += o.camera_dark_counts;
  gate_open_ns += o.gate_open_ns;
  out_of_coverage += o.out_of_coverage;
  return *this;
}

SampleConfig build_sample(const SampleSpec& spec, double idler_lo_nm, double idler_hi_nm) {
  SampleConfig s;
  s.kind = spec.kind;
  s.path_length_cm = spec.path_length_cm;
  s.passes = spec.passes;
  s.round_trip_loss = spec.round_trip_loss;
  switch (spec.kind) {
    case SampleKind::blank:
      break;
    case SampleKind::liquid_cuvette:
      s.mu = load_profile_csv(spec.curve);
      break;
    case SampleKind::gas_cell: {
      const auto lines = load_linelist(spec.linelist);
      const auto grid = wavelength_grid(idler_lo_nm - kProfileMarginNm,
                                        idler_hi_nm + kProfileMarginNm, spec.grid_step_nm);
      s.mu = absorption_profile(lines, spec.gas, grid);
      break;
    }
    case SampleKind::calibration_filter:
      s.transmittance = load_transmittance_csv(spec.curve);
      break;
  }
  s.validate();
  return s;
}

Experiment::Experiment(ApparatusPreset preset)
    : preset_(std::move(preset)), source_(build_table(preset_), preset_.pump) {
  const auto& edges = source_.table().idler_edges_nm;
  sample_ = build_sample(preset_.sample, edges.front(), edges.back());
}

void Experiment::simulate_frame(bool use_sample, std::uint64_t seed, int frame, CountImage& image,
                                AcquisitionStats& stats) const {
  const std::uint64_t frame_seed = derive_seed(seed, "frame/" + std::to_string(frame));
  Rng rng_pairs = make_rng(frame_seed, "pairs");
  Rng rng_sample = make_rng(frame_seed, "sample");
  Rng rng_bucket = make_rng(frame_seed, "bucket");
  Rng rng_gate = make_rng(frame_seed, "gate");
  Rng rng_camera = make_rng(frame_seed, "camera");

  const double duration_ns = preset_.exposure_s * 1e9;
  PairSource source = source_;
  source.reset_clock();
  SampleTransmission transmission(sample_);

  std::vector<double> signal_t;
  std::vector<double> signal_lambda;
  std::vector<double> idler_t;
  for (;;) {
    const PhotonPairEvent ev = sample_pair(source, rng_pairs);
    if (!(ev.t_s < duration_ns)) break;
    signal_t.push_back(ev.t_s);
    signal_lambda.push_back(ev.lambda_s_nm);
    if (!use_sample || apply_sample(ev, transmission, rng_sample)) idler_t.push_back(ev.t_s);
  }
  stats.pairs += signal_t.size();
  stats.idler_survived += idler_t.size();
  stats.out_of_coverage += transmission.out_of_coverage();

  const auto& coinc = preset_.coincidence;
  std::vector<double> gated;
  double duty = 1.0;
  if (coinc.mode == GateMode::ungated) {
    gated = signal_lambda;
  } else {
    const ClickTrain clicks = spad_click_train(idler_t, 0.0, duration_ns, preset_.bucket,
                                               preset_.pump.rep_rate_hz, rng_bucket);
    stats.true_clicks += clicks.true_clicks;
    stats.dark_clicks += clicks.dark_clicks;
    stats.dead_time_losses += clicks.dead_time_losses;
    const double open_ns = static_cast<double>(clicks.times_ns.size()) * coinc.gate_width_ns;
    stats.gate_open_ns += open_ns;
    duty = std::min(1.0, open_ns / duration_ns);

    // Candidate clicks for a signal at t lie near t + fiber - latency - fpga.
    const double shift = coinc.fiber_delay_ns - preset_.bucket.latency_ns - coinc.fpga_delay_ns;
    const double reach = 0.5 * coinc.gate_width_ns + 8.0 * coinc.jitter_sigma_ns;
    const auto& ct = clicks.times_ns;
    std::size_t lo = 0;
    for (std::size_t k = 0; k < signal_t.size(); ++k) {
      const double centre = signal_t[k] + shift;
      while (lo < ct.size() && ct[lo] < centre - reach) ++lo;
      for (std::size_t c = lo; c < ct.size() && ct[c] <= centre + reach; ++c) {
        if (coincidence_gate(ct[c] + preset_.bucket.latency_ns, signal_t[k], coinc, rng_gate)) {
          gated.push_back(signal_lambda[k]);
          break;
        }
      }
    }
  }
  stats.gated_signal += gated.size();

  std::size_t detected = 0;
  deposit_photons(image, gated, preset_.spectrometer, rng_camera, &detected);
  stats.camera_signal_counts += detected;
  const double dark_mean =
      preset_.spectrometer.camera_dark_rate_hz_per_pixel * duty * preset_.exposure_s;
  stats.camera_dark_counts += add_dark_counts(image, dark_mean, rng_camera);
}

CountImage Experiment::acquire(bool use_sample, std::uint64_t seed, const RunOptions& options,
                               AcquisitionStats* stats) const {
  const int frames = preset_.frames;
  const unsigned workers =
      std::clamp<unsigned>(options.workers, 1u, static_cast<unsigned>(frames));
  std::vector<CountImage> images(workers,
                                 CountImage(preset_.spectrometer, preset_.exposure_s, frames));
  std::vector<AcquisitionStats> partial(workers);

  auto work = [&](unsigned w) {
    for (int f = static_cast<int>(w); f < frames; f += static_cast<int>(workers)) {
      simulate_frame(use_sample, seed, f, images[w], partial[w]);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  CountImage image = std::move(images[0]);
  AcquisitionStats total = partial[0];
  for (unsigned w = 1; w < workers; ++w) {
    image += images[w];
    total += partial[w];
  }
  image.metadata = {{"role", use_sample ? "sample" : "blank"},
                    {"seed", std::to_string(seed)},
                    {"preset", preset_to_compact_text(preset_)}};
  if (stats) *stats = total;
  return image;
}

CountImage run_acquisition(const ApparatusPreset& preset, bool use_sample,
                           const RunOptions& options, AcquisitionStats* stats) {
  const Experiment experiment(preset);
  return experiment.acquire(use_sample, preset.seed, options, stats);
}

MeasurementSet run_measurement_set(const ApparatusPreset& preset, const RunOptions& options) {
  const Experiment experiment(preset);
  MeasurementSet set;
  set.preset = experiment.preset();
  set.blank = experiment.acquire(false, derive_seed(preset.seed, "blank"), options);
  set.with_sample = experiment.acquire(true, derive_seed(preset.seed, "sample"), options);
  return set;
}

void save_measurement_set(const MeasurementSet& set, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
  write_count_image(set.blank, dir / "blank.csv", dir / "blank_axis.csv");
  write_count_image(set.with_sample, dir / "sample.csv", dir / "sample_axis.csv");
  detail::write_text_file(dir / "preset.json", preset_to_text(set.preset));
}

MeasurementSet load_measurement_set(const std::filesystem::path& dir) {
  MeasurementSet set;
  set.blank = read_count_image(dir / "blank.csv", dir / "blank_axis.csv");
  set.with_sample = read_count_image(dir / "sample.csv", dir / "sample_axis.csv");
  set.preset = parse_preset(detail::read_text_file(dir / "preset.json"), dir);
  if (set.blank.pixels_x != set.with_sample.pixels_x ||
      set.blank.pixels_y != set.with_sample.pixels_y) {
    throw FormatError("blank and sample images differ in geometry");
  }
  return set;
}

}  // namespace qgs
