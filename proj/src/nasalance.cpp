#include "nasometry/nasalance.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nasometry/error.hpp"

namespace nasometry {

double nasalance_frame(double a_n, double a_o) {
  if (!(a_n >= 0.0) || !(a_o >= 0.0)) {
    throw InvalidArgument(fmt::format("amplitudes must be non-negative, got {} and {}", a_n, a_o));
  }
  const double total = a_n + a_o;
  if (!(total > 0.0)) throw NumericError("nasalance undefined: both amplitudes are zero");
  return a_n / total * 100.0;
}

NasalanceTrack nasalance_track(const IntensityTrack& it, AmplitudeMode mode) {
  const double floor_db = it.config.silence_floor_db;
  const double divisor = mode == AmplitudeMode::kLinear ? 20.0 : 10.0;

  NasalanceTrack nt;
  nt.times = it.times;
  nt.nasalance_pct.assign(it.size(), 0.0);
  nt.valid.assign(it.size(), false);
  for (std::size_t i = 0; i < it.size(); ++i) {
    const double n_db = it.nasal_db[i];
    const double o_db = it.oral_db[i];
    const double top = std::max(n_db, o_db);
    if (!(top > floor_db)) continue;
    // Levels are taken relative to the louder channel so a common dB shift
    // cancels before exponentiation. A clamped channel is silence, not 1e-15.
    auto amplitude = [&](double db) {
      return db <= kClampFloorDb ? 0.0 : std::pow(10.0, (db - top) / divisor);
    };
    const double a_n = amplitude(n_db);
    const double a_o = amplitude(o_db);
    nt.nasalance_pct[i] = nasalance_frame(a_n, a_o);
    nt.valid[i] = true;
  }
  return nt;
}

double value_at(const NasalanceTrack& nt, double t, SampleMethod method,
                std::string_view token) {
  const std::string tok(token);
  auto fail = [&](const std::string& why) -> UnmeasurableError {
    return UnmeasurableError(
        fmt::format("unmeasurable at t={:.6f} s{}: {}", t,
                    tok.empty() ? std::string{} : fmt::format(" (token {})", tok), why),
        tok);
  };
  if (nt.size() == 0 || !(t >= nt.times.front()) || !(t <= nt.times.back())) {
    throw fail("outside track");
  }

  // First center >= t.
  const auto hi_it = std::lower_bound(nt.times.begin(), nt.times.end(), t);
  const auto hi = static_cast<std::size_t>(hi_it - nt.times.begin());
  if (nt.times[hi] == t) {
    if (!nt.valid[hi]) throw fail("invalid frame");
    return nt.nasalance_pct[hi];
  }
  const std::size_t lo = hi - 1;

  if (method == SampleMethod::kNearest) {
    const std::size_t pick = (t - nt.times[lo] <= nt.times[hi] - t) ? lo : hi;
    if (!nt.valid[pick]) throw fail("invalid frame");
    return nt.nasalance_pct[pick];
  }
  if (!nt.valid[lo] || !nt.valid[hi]) throw fail("invalid bracketing frame");
  const double frac = (t - nt.times[lo]) / (nt.times[hi] - nt.times[lo]);
  return nt.nasalance_pct[lo] + frac * (nt.nasalance_pct[hi] - nt.nasalance_pct[lo]);
}

void write_nasalance_csv(std::ostream& out, const NasalanceTrack& nt) {
  out << "t_s,nasalance_pct,valid\n";
  for (std::size_t i = 0; i < nt.size(); ++i) {
    if (nt.valid[i]) {
      fmt::print(out, "{:.6f},{:.6f},1\n", nt.times[i], nt.nasalance_pct[i]);
    } else {
      fmt::print(out, "{:.6f},NA,0\n", nt.times[i]);
    }
  }
}

}  // namespace nasometry
