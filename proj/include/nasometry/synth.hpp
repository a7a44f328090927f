#ifndef NASOMETRY_SYNTH_HPP
#define NASOMETRY_SYNTH_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "nasometry/audio_io.hpp"
#include "nasometry/intensity.hpp"
#include "nasometry/textgrid.hpp"

namespace nasometry {

struct EnvelopePoint {
  double t = 0.0;
  double amplitude = 0.0;
};

// Piecewise-linear amplitude over time, held constant outside the
// breakpoints.
class Envelope {
 public:
  Envelope() = default;
  explicit Envelope(std::vector<EnvelopePoint> points);
  static Envelope constant(double amplitude) { return Envelope({{0.0, amplitude}}); }

  double operator()(double t) const;
  const std::vector<EnvelopePoint>& points() const { return points_; }

 private:
  std::vector<EnvelopePoint> points_;
};

struct Carrier {
  enum class Kind { kSine, kHarmonic };
  Kind kind = Kind::kSine;
  double f_hz = 200.0;  // sine frequency, or f0 for harmonic
  int n_partials = 1;

  static Carrier sine(double f) { return {Kind::kSine, f, 1}; }
  static Carrier harmonic(double f0, int n) { return {Kind::kHarmonic, f0, n}; }
};

// One annotated word in the companion TextGrid; the vowel spans the word.
struct SynthToken {
  double tmin = 0.0;
  double tmax = 0.0;
  std::string word;
  std::string phone;
};

struct SynthSpec {
  double duration_s = 1.0;
  double sample_rate = 16000.0;
  Carrier carrier;
  Envelope nasal_env = Envelope::constant(0.0);
  Envelope oral_env = Envelope::constant(0.0);
  double bleed = 0.0;
  double noise_rms = 0.0;
  std::uint64_t seed = 1;
  // Frame grid on which ground truth is reported.
  FrameConfig frames;
  std::vector<SynthToken> tokens;

  // Throws InvalidArgument on a bad duration, rate, carrier, bleed or noise.
  void validate() const;
};

struct GroundTruth {
  std::vector<double> times;
  std::vector<double> expected_nasalance_pct;
};

struct SynthResult {
  StereoRecording recording;
  GroundTruth truth;
};

// Expected nasalance of the coherent bleed model:
// (a_n + b*a_o) / ((a_n + b*a_o) + (a_o + b*a_n)) * 100.
double bleed_nasalance(double a_n, double a_o, double bleed);

// Unit-RMS carrier value at time t.
double carrier_value(const Carrier& c, double t);

// Renders both channels and the per-frame ground truth. Frames where both
// emitted envelopes are zero have no truth value and are omitted. Throws
// InvalidArgument if any sample would leave [-1, 1].
SynthResult synthesize(const SynthSpec& spec);

// Key-value spec file, one `key = value` per line, `#` comments:
//   duration_s, sample_rate, seed, bleed, noise_rms, frame_ms, step_ms,
//   window (hann|rectangular), carrier (`sine F` | `harmonic F0 N`),
//   nasal_env / oral_env (`t:a t:a ...`), token (`tmin tmax word PHONE`,
//   repeatable). Throws FormatError with the offending line.
SynthSpec parse_synth_spec(std::string_view text);

// Phone and word tiers for spec.tokens; gaps are labelled "sil" / "sp".
TextGrid tokens_textgrid(const SynthSpec& spec);

// CSV `t_s,expected_nasalance_pct`, six decimals.
void write_truth_csv(std::ostream& out, const GroundTruth& truth);

}  // namespace nasometry

#endif  // NASOMETRY_SYNTH_HPP
