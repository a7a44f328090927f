#include "nasometry/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

#include <fmt/format.h>
#include "json.hpp"

#include "nasometry/error.hpp"

namespace nasometry {

CalibrationProfile estimate_gain_offset(const IntensityTrack& track, std::string created_from) {
  const double floor_db = track.config.silence_floor_db;
  std::vector<double> diffs;
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (!(std::max(track.nasal_db[i], track.oral_db[i]) > floor_db)) continue;
    if (diffs.empty()) first = track.times[i];
    last = track.times[i];
    diffs.push_back(track.nasal_db[i] - track.oral_db[i]);
  }
  if (diffs.size() < kMinCalibrationFrames) {
    throw NumericError(fmt::format("insufficient calibration signal: {} frames above {} dB, "
                                   "need {}",
                                   diffs.size(), floor_db, kMinCalibrationFrames));
  }
  std::sort(diffs.begin(), diffs.end());
  const std::size_t mid = diffs.size() / 2;
  const double median =
      diffs.size() % 2 ? diffs[mid] : 0.5 * (diffs[mid - 1] + diffs[mid]);
  return {median, std::move(created_from), {first, last}};
}

CalibrationProfile estimate_gain_offset(const StereoRecording& rec, const FrameConfig& cfg) {
  return estimate_gain_offset(intensity_track(rec, cfg), rec.source_id);
}

IntensityTrack apply_calibration(const IntensityTrack& it, const CalibrationProfile& profile) {
  IntensityTrack out = it;
  for (double& db : out.nasal_db) db = std::max(kClampFloorDb, db - profile.gain_offset_db);
  return out;
}

std::string profile_to_json(const CalibrationProfile& profile) {
  const nlohmann::ordered_json j = {
      {"gain_offset_db", profile.gain_offset_db},
      {"created_from", profile.created_from},
      {"stimulus_window", {profile.stimulus_window.first, profile.stimulus_window.second}},
  };
  return j.dump(2) + "\n";
}

CalibrationProfile profile_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(fmt::format("calibration profile is not valid JSON: {}", e.what()),
                      e.byte);
  }
  try {
    CalibrationProfile p;
    p.gain_offset_db = j.at("gain_offset_db").get<double>();
    p.created_from = j.at("created_from").get<std::string>();
    const auto& w = j.at("stimulus_window");
    if (!w.is_array() || w.size() != 2) {
      throw FormatError("stimulus_window must be a two-element array", 0);
    }
    p.stimulus_window = {w[0].get<double>(), w[1].get<double>()};
    if (!std::isfinite(p.gain_offset_db)) throw FormatError("gain_offset_db is not finite", 0);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("malformed calibration profile: {}", e.what()), 0);
  }
}

void save_profile(const std::filesystem::path& path, const CalibrationProfile& profile) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << profile_to_json(profile);
}

CalibrationProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()), 0);
  return profile_from_json({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

}  // namespace nasometry
