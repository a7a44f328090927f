#ifndef NASOMETRY_INTENSITY_HPP
#define NASOMETRY_INTENSITY_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "nasometry/audio_io.hpp"

namespace nasometry {

enum class WindowType { kRectangular, kHann };

// dB value used for frames whose RMS underflows (silence).
inline constexpr double kClampFloorDb = -300.0;

struct FrameConfig {
  double frame_length_ms = 32.0;
  double step_ms = 8.0;
  WindowType window = WindowType::kHann;
  // Frames with both channels at or below this level carry no nasalance.
  double silence_floor_db = -60.0;

  // Frame length in samples at `sample_rate`.
  std::size_t frame_samples(double sample_rate) const;
  // Throws InvalidArgument on step <= 0, step > frame, or frames < 2 samples.
  void validate(double sample_rate) const;
};

// Per-frame dBFS levels of both channels on a shared time axis. times are
// frame centers: times[i] = frame_length/2 + i*step.
struct IntensityTrack {
  std::vector<double> times;
  std::vector<double> nasal_db;
  std::vector<double> oral_db;
  FrameConfig config;

  std::size_t size() const { return times.size(); }
};

// Analysis window weights for a frame of n samples. The hann variant is
// sampled at half-sample offsets so no weight is zero, even for n = 2.
std::vector<double> make_window(WindowType type, std::size_t n);

// 20*log10 of the window-weighted RMS, sqrt(sum w*x^2 / sum w), clamped to
// kClampFloorDb. Throws InvalidArgument on an empty frame.
double frame_intensity_db(std::span<const double> frame, WindowType window);

// Same, with precomputed weights (size must match the frame).
double frame_intensity_db(std::span<const double> frame, std::span<const double> weights);

// Start sample of every complete frame over `n_samples` samples.
std::vector<std::size_t> frame_starts(std::size_t n_samples, double sample_rate,
                                      const FrameConfig& cfg);

// Frames both channels identically from t = 0 with hop step_ms; the trailing
// partial frame is dropped. Frame i starts at sample round(i*step*rate).
IntensityTrack intensity_track(const StereoRecording& rec, const FrameConfig& cfg = {});

struct BandpassSpec {
  double low_hz = 0.0;
  double high_hz = 0.0;
  // Total filter order (number of poles); must be even.
  int order = 4;

  void validate(double sample_rate) const;
};

// Butterworth band-pass applied forward and backward to both channels, so
// the combined response has zero phase. Output is clipped to [-1, 1].
StereoRecording bandpass(const StereoRecording& rec, const BandpassSpec& spec);

// Single-channel version of the same filter, exposed for testing.
std::vector<double> bandpass_channel(std::span<const double> x, double sample_rate,
                                     const BandpassSpec& spec);

// CSV dump with header `t_s,nasal_db,oral_db`, six decimals.
void write_intensity_csv(std::ostream& out, const IntensityTrack& track);

}  // namespace nasometry

#endif  // NASOMETRY_INTENSITY_HPP
