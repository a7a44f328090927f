#ifndef NASOMETRY_NASALANCE_HPP
#define NASOMETRY_NASALANCE_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "nasometry/error.hpp"
#include "nasometry/intensity.hpp"

namespace nasometry {

// How frame levels are turned into the A_n / A_o quantities.
enum class AmplitudeMode {
  kLinear,  // a = 10^(dB/20), RMS amplitude
  kPower,   // a = 10^(dB/10), mean-square energy
};

enum class SampleMethod { kNearest, kLinear };

struct NasalanceTrack {
  std::vector<double> times;
  std::vector<double> nasalance_pct;  // meaningless where !valid
  std::vector<bool> valid;

  std::size_t size() const { return times.size(); }
};

// Thrown by value_at when the requested time cannot be measured.
class UnmeasurableError : public NumericError {
 public:
  UnmeasurableError(const std::string& what, std::string token)
      : NumericError(what), token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// a_n / (a_n + a_o) * 100. Throws NumericError when both are zero and
// InvalidArgument on negative input.
double nasalance_frame(double a_n, double a_o);

// Frame i is valid iff max(nasal_db, oral_db) exceeds the track's silence
// floor; valid frames carry nasalance_frame of the recovered amplitudes.
NasalanceTrack nasalance_track(const IntensityTrack& it,
                               AmplitudeMode mode = AmplitudeMode::kLinear);

// Nasalance at time t. `nearest` picks the closest frame center (earlier
// frame on ties); `linear` interpolates between the bracketing centers.
// Throws UnmeasurableError, tagged with `token`, if t lies outside the track
// or the frame(s) used are invalid.
double value_at(const NasalanceTrack& nt, double t,
                SampleMethod method = SampleMethod::kNearest,
                std::string_view token = {});

// CSV dump `t_s,nasalance_pct,valid`; invalid frames print NA.
void write_nasalance_csv(std::ostream& out, const NasalanceTrack& nt);

}  // namespace nasometry

#endif  // NASOMETRY_NASALANCE_HPP
