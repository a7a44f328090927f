#ifndef NASOMETRY_CALIBRATION_HPP
#define NASOMETRY_CALIBRATION_HPP

#include <filesystem>
#include <string>
#include <utility>

#include "nasometry/audio_io.hpp"
#include "nasometry/intensity.hpp"

namespace nasometry {

// Nasal-minus-oral level difference measured when both microphones receive
// the same stimulus. Positive means the nasal channel reads hot.
struct CalibrationProfile {
  double gain_offset_db = 0.0;
  std::string created_from;
  std::pair<double, double> stimulus_window{0.0, 0.0};

  bool operator==(const CalibrationProfile&) const = default;
};

inline constexpr std::size_t kMinCalibrationFrames = 10;

// Median of (nasal_db - oral_db) over frames above the silence floor.
// stimulus_window spans the first to last such frame center. Throws
// NumericError("insufficient calibration signal") below 10 valid frames.
CalibrationProfile estimate_gain_offset(const StereoRecording& rec, const FrameConfig& cfg = {});
CalibrationProfile estimate_gain_offset(const IntensityTrack& track, std::string created_from);

// Subtracts the offset from every nasal frame level (clamped at the dB
// floor); times and oral levels are untouched.
IntensityTrack apply_calibration(const IntensityTrack& it, const CalibrationProfile& profile);

std::string profile_to_json(const CalibrationProfile& profile);
// Throws FormatError on missing/mistyped fields or a non-finite offset.
CalibrationProfile profile_from_json(const std::string& text);

void save_profile(const std::filesystem::path& path, const CalibrationProfile& profile);
CalibrationProfile load_profile(const std::filesystem::path& path);

}  // namespace nasometry

#endif  // NASOMETRY_CALIBRATION_HPP
