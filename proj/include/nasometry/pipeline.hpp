#ifndef NASOMETRY_PIPELINE_HPP
#define NASOMETRY_PIPELINE_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nasometry/calibration.hpp"
#include "nasometry/csv.hpp"
#include "nasometry/intensity.hpp"
#include "nasometry/nasalance.hpp"
#include "nasometry/stats.hpp"
#include "nasometry/textgrid.hpp"

namespace nasometry {

struct AnalysisConfig {
  FrameConfig frames;
  std::optional<BandpassSpec> bandpass;
  std::set<std::string> vowel_labels = default_vowel_labels();
  AmplitudeMode amplitude = AmplitudeMode::kLinear;
  SampleMethod method = SampleMethod::kNearest;
  std::optional<CalibrationProfile> calibration;
  std::string speaker = "NA";
  std::string system = "NA";
};

struct RejectRecord {
  std::string source_id;
  std::string word;
  std::string vowel_label;
  double t_mid_s = 0.0;
  std::string reason;
};

struct AnalysisResult {
  std::vector<TokenRecord> tokens;
  std::vector<RejectRecord> rejects;
  std::vector<std::string> warnings;
};

// Optional band-pass, framing, optional calibration, then nasalance.
IntensityTrack analysis_intensity(const StereoRecording& rec, const AnalysisConfig& cfg);
NasalanceTrack analysis_track(const StereoRecording& rec, const AnalysisConfig& cfg);

// Phone tier: first tier named phone/phones; word tier: word/words (case
// insensitive). Throws FormatError when either is missing.
const IntervalTier& phone_tier(const TextGrid& grid);
const IntervalTier& word_tier(const TextGrid& grid);

// One token per selected vowel, in time order. Tokens that cannot be
// measured or mapped go to rejects with a reason; none are dropped.
AnalysisResult analyze_recording(const StereoRecording& rec, const TextGrid& grid,
                                 const std::map<std::string, WordInfo>& wordlist,
                                 const AnalysisConfig& cfg);

inline constexpr std::string_view kRejectHeader = "source_id,word,vowel_label,t_mid_s,reason";
void write_rejects_csv(std::ostream& out, const std::vector<RejectRecord>& rejects);

}  // namespace nasometry

#endif  // NASOMETRY_PIPELINE_HPP
