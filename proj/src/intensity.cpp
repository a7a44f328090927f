#include "nasometry/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nasometry/error.hpp"

namespace nasometry {

std::size_t FrameConfig::frame_samples(double sample_rate) const {
  return static_cast<std::size_t>(std::llround(frame_length_ms * sample_rate / 1000.0));
}

void FrameConfig::validate(double sample_rate) const {
  if (!(step_ms > 0.0) || !(step_ms <= frame_length_ms)) {
    throw InvalidArgument(fmt::format("need 0 < step_ms <= frame_length_ms, got step {} ms, "
                                      "frame {} ms",
                                      step_ms, frame_length_ms));
  }
  if (frame_samples(sample_rate) < 2) {
    throw InvalidArgument(fmt::format("frame of {} ms is shorter than 2 samples at {} Hz",
                                      frame_length_ms, sample_rate));
  }
  if (!std::isfinite(silence_floor_db)) throw InvalidArgument("silence floor must be finite");
}

std::vector<double> make_window(WindowType type, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (type == WindowType::kHann) {
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) /
                           static_cast<double>(n);
      w[i] = 0.5 - 0.5 * std::cos(phase);
    }
  }
  return w;
}

double frame_intensity_db(std::span<const double> frame, std::span<const double> weights) {
  if (frame.empty()) throw InvalidArgument("empty analysis frame");
  if (weights.size() != frame.size()) {
    throw InvalidArgument("window length does not match frame length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    num += weights[i] * frame[i] * frame[i];
    den += weights[i];
  }
  const double mean_square = num / den;
  if (!(mean_square > 0.0)) return kClampFloorDb;
  // 10*log10(ms) == 20*log10(rms)
  return std::max(kClampFloorDb, 10.0 * std::log10(mean_square));
}

double frame_intensity_db(std::span<const double> frame, WindowType window) {
  const auto w = make_window(window, frame.size());
  return frame_intensity_db(frame, w);
}

std::vector<std::size_t> frame_starts(std::size_t n_samples, double sample_rate,
                                      const FrameConfig& cfg) {
  cfg.validate(sample_rate);
  const std::size_t n = cfg.frame_samples(sample_rate);
  const double step_s = cfg.step_ms / 1000.0;
  std::vector<std::size_t> starts;
  for (std::size_t i = 0;; ++i) {
    const auto start = static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * step_s * sample_rate));
    if (start + n > n_samples) break;
    starts.push_back(start);
  }
  return starts;
}

IntensityTrack intensity_track(const StereoRecording& rec, const FrameConfig& cfg) {
  const auto starts = frame_starts(rec.size(), rec.sample_rate, cfg);
  const std::size_t n = cfg.frame_samples(rec.sample_rate);
  if (starts.empty()) {
    throw InvalidArgument(fmt::format("recording of {} samples is shorter than one frame "
                                      "({} samples)",
                                      rec.size(), n));
  }
  const double step_s = cfg.step_ms / 1000.0;
  const double half_frame_s = cfg.frame_length_ms / 2000.0;
  const auto window = make_window(cfg.window, n);

  IntensityTrack track;
  track.config = cfg;
  const std::span<const double> nasal(rec.nasal);
  const std::span<const double> oral(rec.oral);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    track.times.push_back(half_frame_s + static_cast<double>(i) * step_s);
    track.nasal_db.push_back(frame_intensity_db(nasal.subspan(starts[i], n), window));
    track.oral_db.push_back(frame_intensity_db(oral.subspan(starts[i], n), window));
  }
  return track;
}

void BandpassSpec::validate(double sample_rate) const {
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < sample_rate / 2.0)) {
    throw InvalidArgument(fmt::format("band-pass corners must satisfy 0 < low < high < "
                                      "rate/2, got {}..{} Hz at {} Hz",
                                      low_hz, high_hz, sample_rate));
  }
  if (order < 2 || order % 2 != 0) {
    throw InvalidArgument(fmt::format("band-pass order must be even and >= 2, got {}", order));
  }
}

namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;

  void run(std::vector<double>& x) const {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = b0 * in + s1;
      s1 = b1 * in - a1 * out + s2;
      s2 = b2 * in - a2 * out;
      v = out;
    }
  }

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

// Bilinear-transformed Butterworth band-pass as a cascade of order/2
// sections, each with one zero at z = 1 and one at z = -1.
std::vector<Biquad> design_bandpass(double fs, const BandpassSpec& spec) {
  using cd = std::complex<double>;
  const int proto_order = spec.order / 2;
  const double pi = std::numbers::pi;
  const double w1 = 2.0 * fs * std::tan(pi * spec.low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(pi * spec.high_hz / fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<cd> complex_poles;
  std::vector<double> real_poles;
  for (int k = 0; k < proto_order; ++k) {
    const cd p = std::polar(1.0, pi * (2.0 * k + proto_order + 1) / (2.0 * proto_order));
    const cd disc = std::sqrt(p * bw * p * bw - 4.0 * w0 * w0);
    for (const cd s : {(p * bw + disc) / 2.0, (p * bw - disc) / 2.0}) {
      const cd z = (2.0 * fs + s) / (2.0 * fs - s);
      if (std::abs(z.imag()) < 1e-12) {
        real_poles.push_back(z.real());
      } else if (z.imag() > 0.0) {
        complex_poles.push_back(z);
      }
    }
  }

  std::vector<Biquad> sections;
  for (const cd z : complex_poles) {
    sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  }
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double r1 = real_poles[i], r2 = real_poles[i + 1];
    sections.push_back({1.0, 0.0, -1.0, -(r1 + r2), r1 * r2});
  }

  const double center = 2.0 * std::atan(w0 / (2.0 * fs));
  for (Biquad& q : sections) {
    const double g = 1.0 / std::abs(q.response(center));
    q.b0 *= g;
    q.b2 *= g;
  }
  return sections;
}

}  // namespace

std::vector<double> bandpass_channel(std::span<const double> x, double sample_rate,
                                     const BandpassSpec& spec) {
  spec.validate(sample_rate);
  const auto sections = design_bandpass(sample_rate, spec);
  const std::size_t len = x.size();
  if (len == 0) return {};

  // Odd reflection at both ends absorbs the start-up transient of each pass.
  const auto reach = static_cast<std::size_t>(std::ceil(4.0 * sample_rate / spec.low_hz));
  const std::size_t pad = std::min(len - 1, reach);
  std::vector<double> y;
  y.reserve(len + 2 * pad);
  for (std::size_t i = pad; i > 0; --i) y.push_back(2.0 * x[0] - x[i]);
  y.insert(y.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) y.push_back(2.0 * x[len - 1] - x[len - 1 - i]);

  for (const Biquad& q : sections) q.run(y);
  std::reverse(y.begin(), y.end());
  for (const Biquad& q : sections) q.run(y);
  std::reverse(y.begin(), y.end());

  return {y.begin() + static_cast<std::ptrdiff_t>(pad),
          y.begin() + static_cast<std::ptrdiff_t>(pad + len)};
}

StereoRecording bandpass(const StereoRecording& rec, const BandpassSpec& spec) {
  auto clip = [](std::vector<double> v) {
    for (double& s : v) s = std::clamp(s, -1.0, 1.0);
    return v;
  };
  return StereoRecording::make(clip(bandpass_channel(rec.nasal, rec.sample_rate, spec)),
                               clip(bandpass_channel(rec.oral, rec.sample_rate, spec)),
                               rec.sample_rate, rec.source_id);
}

void write_intensity_csv(std::ostream& out, const IntensityTrack& track) {
  out << "t_s,nasal_db,oral_db\n";
  for (std::size_t i = 0; i < track.size(); ++i) {
    fmt::print(out, "{:.6f},{:.6f},{:.6f}\n", track.times[i], track.nasal_db[i],
               track.oral_db[i]);
  }
}

}  // namespace nasometry
