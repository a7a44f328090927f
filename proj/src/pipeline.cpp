#include "nasometry/pipeline.hpp"

#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nasometry/error.hpp"

namespace nasometry {

IntensityTrack analysis_intensity(const StereoRecording& rec, const AnalysisConfig& cfg) {
  IntensityTrack it = cfg.bandpass ? intensity_track(bandpass(rec, *cfg.bandpass), cfg.frames)
                                   : intensity_track(rec, cfg.frames);
  if (cfg.calibration) it = apply_calibration(it, *cfg.calibration);
  return it;
}

NasalanceTrack analysis_track(const StereoRecording& rec, const AnalysisConfig& cfg) {
  return nasalance_track(analysis_intensity(rec, cfg), cfg.amplitude);
}

namespace {

const IntervalTier& tier_named(const TextGrid& grid, std::string_view singular) {
  for (const auto& t : grid.tiers) {
    const std::string name = lowercase(t.name);
    if (name == singular || name == std::string(singular) + "s") return t;
  }
  throw FormatError(fmt::format("TextGrid has no '{}' interval tier", singular), 0);
}

}  // namespace

const IntervalTier& phone_tier(const TextGrid& grid) { return tier_named(grid, "phone"); }
const IntervalTier& word_tier(const TextGrid& grid) { return tier_named(grid, "word"); }

AnalysisResult analyze_recording(const StereoRecording& rec, const TextGrid& grid,
                                 const std::map<std::string, WordInfo>& wordlist,
                                 const AnalysisConfig& cfg) {
  AnalysisResult out;
  const auto selections = select_vowel_tokens(phone_tier(grid), word_tier(grid), cfg.vowel_labels);
  out.warnings = grid.warnings;
  if (selections.empty()) {
    out.warnings.push_back(fmt::format("{}: no vowel intervals selected", rec.source_id));
    return out;
  }
  const NasalanceTrack nt = analysis_track(rec, cfg);

  for (const auto& sel : selections) {
    auto reject = [&](std::string reason) {
      out.rejects.push_back({rec.source_id, sel.word, sel.vowel_label, sel.midpoint,
                             std::move(reason)});
    };
    if (sel.flag) {
      reject(*sel.flag);
      continue;
    }
    const auto entry = wordlist.find(lowercase(sel.word));
    if (entry == wordlist.end()) {
      reject("unmapped word");
      continue;
    }
    double value = 0.0;
    try {
      value = value_at(nt, sel.midpoint, cfg.method,
                       fmt::format("{}@{:.6f}", sel.word, sel.midpoint));
    } catch (const UnmeasurableError& e) {
      reject(fmt::format("unmeasurable at midpoint: {}", e.what()));
      continue;
    }
    out.tokens.push_back({rec.source_id, cfg.speaker, cfg.system, sel.word, entry->second.vowel,
                          entry->second.environment, sel.midpoint, value});
  }
  return out;
}

void write_rejects_csv(std::ostream& out, const std::vector<RejectRecord>& rejects) {
  out << kRejectHeader << '\n';
  for (const auto& r : rejects) {
    fmt::print(out, "{},{},{},{:.6f},{}\n", csv_field(r.source_id), csv_field(r.word),
               csv_field(r.vowel_label), r.t_mid_s, csv_field(r.reason));
  }
}

}  // namespace nasometry
