// nasometry: batch command-line front end.
//
//   nasometry synth     SPEC --out PREFIX
//   nasometry calibrate WAV --out PROFILE.json
//   nasometry track     WAV --out TRACK.csv [--intensity-out LEVELS.csv]
//   nasometry analyze   WAV TEXTGRID [WAV TEXTGRID ...] --wordlist WL.csv --out TOKENS.csv
//   nasometry stats     TOKENS.csv [...] --out RESULTS.csv
//
// Exit codes: 0 success, 1 usage, 2 input format, 3 numeric/degenerate model.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "nasometry/audio_io.hpp"
#include "nasometry/calibration.hpp"
#include "nasometry/csv.hpp"
#include "nasometry/error.hpp"
#include "nasometry/pipeline.hpp"
#include "nasometry/stats.hpp"
#include "nasometry/synth.hpp"

namespace fs = std::filesystem;
using namespace nasometry;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFormat = 2;
constexpr int kExitNumeric = 3;

struct SignalOptions {
  double frame_ms = 32.0;
  double step_ms = 8.0;
  std::string window = "hann";
  std::string bandpass;
  double silence_floor_db = -60.0;
  std::string channel_map = "left";
  std::string vowels;
  std::string calibration;
  std::string method = "nearest";
  bool power = false;
};

void add_signal_options(CLI::App* cmd, SignalOptions& o, bool sampling) {
  cmd->add_option("--frame-ms", o.frame_ms, "Analysis frame length in ms")->capture_default_str();
  cmd->add_option("--step-ms", o.step_ms, "Frame hop in ms")->capture_default_str();
  cmd->add_option("--window", o.window, "Analysis window")
      ->check(CLI::IsMember({"hann", "rectangular"}))
      ->capture_default_str();
  cmd->add_option("--bandpass", o.bandpass, "Zero-phase Butterworth band-pass LOW:HIGH in Hz");
  cmd->add_option("--silence-floor-db", o.silence_floor_db, "Frames below this in both channels "
                  "carry no nasalance")
      ->capture_default_str();
  cmd->add_option("--channel-map", o.channel_map, "Stereo channel holding the nasal signal")
      ->check(CLI::IsMember({"left", "right"}))
      ->capture_default_str();
  if (sampling) {
    cmd->add_option("--vowels", o.vowels, "Comma-separated vowel labels (default IH,EH,AE,AH,EY)");
    cmd->add_option("--calibration", o.calibration, "Calibration profile JSON to apply");
    cmd->add_option("--method", o.method, "Midpoint sampling")
        ->check(CLI::IsMember({"nearest", "linear"}))
        ->capture_default_str();
    cmd->add_flag("--power", o.power, "Use mean-square energy instead of RMS amplitude");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

AnalysisConfig make_config(const SignalOptions& o) {
  AnalysisConfig cfg;
  cfg.frames.frame_length_ms = o.frame_ms;
  cfg.frames.step_ms = o.step_ms;
  cfg.frames.window = o.window == "hann" ? WindowType::kHann : WindowType::kRectangular;
  cfg.frames.silence_floor_db = o.silence_floor_db;
  if (!o.bandpass.empty()) {
    const auto parts = split(o.bandpass, ':');
    if (parts.size() != 2) throw InvalidArgument("--bandpass expects LOW:HIGH");
    try {
      cfg.bandpass = BandpassSpec{std::stod(parts[0]), std::stod(parts[1]), 4};
    } catch (const std::logic_error&) {
      throw InvalidArgument(fmt::format("--bandpass: cannot parse '{}'", o.bandpass));
    }
  }
  if (!o.vowels.empty()) {
    cfg.vowel_labels.clear();
    for (const auto& v : split(o.vowels, ',')) cfg.vowel_labels.insert(strip_stress(v));
  }
  if (!o.calibration.empty()) cfg.calibration = load_profile(o.calibration);
  cfg.method = o.method == "linear" ? SampleMethod::kLinear : SampleMethod::kNearest;
  cfg.amplitude = o.power ? AmplitudeMode::kPower : AmplitudeMode::kLinear;
  return cfg;
}

ChannelMap channel_map(const SignalOptions& o) {
  return o.channel_map == "right" ? ChannelMap::nasal_right() : ChannelMap::nasal_left();
}

// "NASAL.wav+ORAL.wav" loads two mono files unless a file of that name exists.
StereoRecording load_recording(const std::string& arg, const SignalOptions& o) {
  const auto plus = arg.find('+');
  if (plus != std::string::npos && !fs::exists(arg)) {
    return load_pair(arg.substr(0, plus), arg.substr(plus + 1));
  }
  return load_stereo(arg, channel_map(o));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path));
  return out;
}

int report(int code, const std::exception& e) {
  fmt::print(std::cerr, "error: {}\n", e.what());
  return code;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const RankDeficientError& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    for (const auto& c : e.aliased()) fmt::print(std::cerr, "  aliased: {}\n", c);
    return kExitNumeric;
  } catch (const FormatError& e) {
    return report(kExitFormat, e);
  } catch (const InvalidArgument& e) {
    return report(kExitFormat, e);
  } catch (const NumericError& e) {
    return report(kExitNumeric, e);
  } catch (const Error& e) {
    return report(kExitFormat, e);
  }
}

// --- subcommands ----------------------------------------------------------

int run_synth(const std::string& spec_path, const std::string& prefix, const std::string& format) {
  std::ifstream in(spec_path);
  if (!in) throw FormatError(fmt::format("cannot open {}", spec_path), 0);
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const SynthSpec spec = parse_synth_spec(text);
  const SynthResult res = synthesize(spec);

  write_stereo(prefix + ".wav", res.recording,
               format == "pcm16" ? SampleFormat::kPcm16 : SampleFormat::kFloat32);
  auto truth = open_out(prefix + ".truth.csv");
  write_truth_csv(truth, res.truth);
  if (!spec.tokens.empty()) {
    auto tg = open_out(prefix + ".TextGrid");
    tg << serialize_textgrid(tokens_textgrid(spec));
  }
  fmt::print(std::cerr, "synth: {} samples, {} truth frames\n", res.recording.size(),
             res.truth.times.size());
  return 0;
}

int run_calibrate(const std::string& wav, const std::string& out_path, const SignalOptions& o) {
  const StereoRecording rec = load_recording(wav, o);
  const AnalysisConfig cfg = make_config(o);
  CalibrationProfile profile;
  try {
    profile = estimate_gain_offset(analysis_intensity(rec, AnalysisConfig{cfg.frames,
                                                                          cfg.bandpass}),
                                   rec.source_id);
  } catch (const NumericError& e) {
    return report(kExitFormat, e);
  }
  if (out_path.empty()) {
    std::cout << profile_to_json(profile);
  } else {
    save_profile(out_path, profile);
  }
  fmt::print(std::cerr, "calibrate: gain offset {:.4f} dB (nasal - oral)\n", profile.gain_offset_db);
  return 0;
}

int run_track(const std::string& wav, const std::string& out_path,
              const std::string& intensity_out, const SignalOptions& o) {
  const StereoRecording rec = load_recording(wav, o);
  const AnalysisConfig cfg = make_config(o);
  const IntensityTrack it = analysis_intensity(rec, cfg);
  if (!intensity_out.empty()) {
    auto f = open_out(intensity_out);
    write_intensity_csv(f, it);
  }
  const NasalanceTrack nt = nasalance_track(it, cfg.amplitude);
  if (out_path.empty()) {
    write_nasalance_csv(std::cout, nt);
  } else {
    auto f = open_out(out_path);
    write_nasalance_csv(f, nt);
  }
  return 0;
}

std::string rejects_path_for(const std::string& out) {
  fs::path p(out);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + ".rejects.csv")).string();
}

int run_analyze(const std::vector<std::string>& inputs, const std::string& wordlist_path,
                const std::string& out_path, std::string rejects_path, const std::string& speaker,
                const std::string& system, const SignalOptions& o) {
  if (inputs.size() % 2 != 0) {
    throw InvalidArgument("analyze expects WAV TEXTGRID pairs");
  }
  AnalysisConfig cfg = make_config(o);
  cfg.speaker = speaker;
  cfg.system = system;
  const auto wordlist = read_wordlist_file(wordlist_path);

  std::vector<std::future<AnalysisResult>> jobs;
  for (std::size_t i = 0; i < inputs.size(); i += 2) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      const StereoRecording rec = load_recording(inputs[i], o);
      const TextGrid grid = read_textgrid(inputs[i + 1]);
      return analyze_recording(rec, grid, wordlist, cfg);
    }));
  }
  std::vector<TokenRecord> tokens;
  std::vector<RejectRecord> rejects;
  std::vector<std::string> warnings;
  for (auto& j : jobs) {
    AnalysisResult r = j.get();
    tokens.insert(tokens.end(), r.tokens.begin(), r.tokens.end());
    rejects.insert(rejects.end(), r.rejects.begin(), r.rejects.end());
    warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
  }

  if (rejects_path.empty()) rejects_path = rejects_path_for(out_path);
  auto out = open_out(out_path);
  write_token_csv(out, tokens);
  auto rej = open_out(rejects_path);
  write_rejects_csv(rej, rejects);

  for (const auto& w : warnings) fmt::print(std::cerr, "warning: {}\n", w);
  fmt::print(std::cerr, "analyze: {} tokens, {} rejected ({})\n", tokens.size(), rejects.size(),
             rejects_path);
  return 0;
}

int run_stats(const std::vector<std::string>& inputs, const std::string& out_path,
              std::optional<std::size_t> family_size, const std::string& system_order,
              const std::string& env_order) {
  std::vector<TokenRecord> records;
  for (const auto& path : inputs) {
    auto part = read_token_csv_file(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  if (records.empty()) throw InvalidArgument("no token records");

  LevelOrder order;
  order.system = split(system_order, ',');
  order.environment = split(env_order, ',');

  // One model per speaker, in order of first appearance.
  std::vector<std::string> speakers;
  for (const auto& r : records) {
    if (std::find(speakers.begin(), speakers.end(), r.speaker) == speakers.end()) {
      speakers.push_back(r.speaker);
    }
  }
  struct SpeakerResult {
    FitResult fit;
    std::string rows;
  };
  std::vector<std::future<SpeakerResult>> jobs;
  for (const auto& spk : speakers) {
    jobs.push_back(std::async(std::launch::async, [&, spk] {
      std::vector<TokenRecord> subset;
      std::copy_if(records.begin(), records.end(), std::back_inserter(subset),
                   [&](const TokenRecord& r) { return r.speaker == spk; });
      SpeakerResult res{fit_model(subset, order), {}};
      std::ostringstream rows;
      const std::string tag = spk.empty() ? std::string{} : spk + "/";
      write_results_rows(rows, coefficient_table(res.fit), tag + "coef/");

      const EmmTable emms = emmeans(res.fit);
      ContrastTable emm_rows;
      for (Eigen::Index k = 0; k < emms.linfct.rows(); ++k) {
        const auto& cell = emms.rows[static_cast<std::size_t>(k)];
        emm_rows.rows.push_back(linear_contrast(fmt::format("{}:{}", cell.system, cell.environment),
                                                emms.linfct.row(k), emms.estimates,
                                                emms.covariance, emms.df));
      }
      write_results_rows(rows, emm_rows, tag + "emm/");
      for (const auto& sys : emms.systems) {
        write_results_rows(rows, pairwise_env_contrasts(emms, sys, family_size), tag + "pair/");
      }
      if (emms.systems.size() == 2) {
        write_results_rows(rows, difference_of_differences_table(res.fit, family_size),
                           tag + "dod/");
      }
      res.rows = rows.str();
      return res;
    }));
  }

  std::ostringstream body;
  body << kResultsHeader << '\n';
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    SpeakerResult r = jobs[i].get();
    body << r.rows;
    fmt::print(std::cerr, "stats[{}]: n={} p={} df={} sigma={:.6g}\n", speakers[i],
               r.fit.n_observations, r.fit.estimates.size(), r.fit.residual_df,
               std::sqrt(r.fit.residual_variance));
  }
  if (out_path.empty()) {
    std::cout << body.str();
  } else {
    auto out = open_out(out_path);
    out << body.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nasalance analysis toolkit: synth, calibrate, track, analyze, stats"};
  app.require_subcommand(1);

  std::string synth_spec, synth_out, synth_format = "float32";
  auto* synth = app.add_subcommand("synth", "Render a synthetic two-channel fixture");
  synth->add_option("spec", synth_spec, "Key-value synth spec")->required();
  synth->add_option("--out", synth_out, "Output prefix (.wav, .truth.csv, .TextGrid)")->required();
  synth->add_option("--format", synth_format, "WAV sample format")
      ->check(CLI::IsMember({"float32", "pcm16"}))
      ->capture_default_str();

  SignalOptions cal_opts;
  std::string cal_wav, cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate nasal/oral gain offset");
  calibrate->add_option("wav", cal_wav, "Same-stimulus calibration take")->required();
  calibrate->add_option("--out", cal_out, "Profile JSON (stdout if omitted)");
  add_signal_options(calibrate, cal_opts, false);

  SignalOptions track_opts;
  std::string track_wav, track_out, track_int_out;
  auto* track = app.add_subcommand("track", "Dump the full nasalance time series");
  track->add_option("wav", track_wav, "Stereo WAV (or NASAL.wav+ORAL.wav)")->required();
  track->add_option("--out", track_out, "Nasalance CSV (stdout if omitted)");
  track->add_option("--intensity-out", track_int_out, "Also write per-channel dB levels");
  add_signal_options(track, track_opts, true);

  SignalOptions an_opts;
  std::vector<std::string> an_inputs;
  std::string an_wordlist, an_out, an_rejects, an_speaker = "NA", an_system = "NA";
  auto* analyze = app.add_subcommand("analyze", "Midpoint nasalance per vowel token");
  analyze->add_option("inputs", an_inputs, "WAV TEXTGRID pairs")->required();
  analyze->add_option("--wordlist", an_wordlist, "word,vowel,environment CSV")->required();
  analyze->add_option("--out", an_out, "Token CSV")->required();
  analyze->add_option("--rejects", an_rejects, "Rejects CSV (default <out stem>.rejects.csv)");
  analyze->add_option("--speaker", an_speaker, "Speaker label")->capture_default_str();
  analyze->add_option("--system", an_system, "Recording system label")->capture_default_str();
  add_signal_options(analyze, an_opts, true);

  std::vector<std::string> st_inputs;
  std::string st_out, st_sys_order, st_env_order;
  std::optional<std::size_t> st_family;
  auto* stats = app.add_subcommand("stats", "Linear model, EMMs and adjusted contrasts");
  stats->add_option("inputs", st_inputs, "Token CSV file(s)")->required();
  stats->add_option("--out", st_out, "Results CSV (stdout if omitted)");
  stats->add_option("--family-size", st_family, "Bonferroni family size for every contrast table")
      ->check(CLI::PositiveNumber);
  stats->add_option("--system-order", st_sys_order, "Comma-separated system level order");
  stats->add_option("--env-order", st_env_order, "Comma-separated environment level order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*synth) return guarded([&] { return run_synth(synth_spec, synth_out, synth_format); });
  if (*calibrate) return guarded([&] { return run_calibrate(cal_wav, cal_out, cal_opts); });
  if (*track) {
    return guarded([&] { return run_track(track_wav, track_out, track_int_out, track_opts); });
  }
  if (*analyze) {
    return guarded([&] {
      return run_analyze(an_inputs, an_wordlist, an_out, an_rejects, an_speaker, an_system,
                         an_opts);
    });
  }
  if (*stats) {
    return guarded(
        [&] { return run_stats(st_inputs, st_out, st_family, st_sys_order, st_env_order); });
  }
  return kExitUsage;
}
