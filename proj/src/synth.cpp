#include "nasometry/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nasometry/error.hpp"

namespace nasometry {

Envelope::Envelope(std::vector<EnvelopePoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw InvalidArgument("envelope needs at least one breakpoint");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i].amplitude >= 0.0) || !std::isfinite(points_[i].amplitude)) {
      throw InvalidArgument(fmt::format("envelope amplitude {} at t={} is negative",
                                        points_[i].amplitude, points_[i].t));
    }
    if (i > 0 && !(points_[i].t > points_[i - 1].t)) {
      throw InvalidArgument(fmt::format("envelope breakpoints not strictly increasing at t={}",
                                        points_[i].t));
    }
  }
}

double Envelope::operator()(double t) const {
  if (points_.empty()) return 0.0;
  if (t <= points_.front().t) return points_.front().amplitude;
  if (t >= points_.back().t) return points_.back().amplitude;
  const auto hi = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double x, const EnvelopePoint& p) { return x < p.t; });
  const auto lo = hi - 1;
  const double frac = (t - lo->t) / (hi->t - lo->t);
  return lo->amplitude + frac * (hi->amplitude - lo->amplitude);
}

void SynthSpec::validate() const {
  if (!(duration_s > 0.0)) throw InvalidArgument("duration_s must be positive");
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample_rate must be positive");
  if (!(bleed >= 0.0 && bleed < 1.0)) {
    throw InvalidArgument(fmt::format("bleed must lie in [0, 1), got {}", bleed));
  }
  if (!(noise_rms >= 0.0)) throw InvalidArgument("noise_rms must be non-negative");
  if (!(carrier.f_hz > 0.0) || carrier.n_partials < 1) {
    throw InvalidArgument("carrier needs a positive frequency and at least one partial");
  }
  if (carrier.f_hz * carrier.n_partials >= sample_rate / 2.0) {
    throw InvalidArgument(fmt::format("carrier partial at {} Hz is above Nyquist",
                                      carrier.f_hz * carrier.n_partials));
  }
  frames.validate(sample_rate);
}

double bleed_nasalance(double a_n, double a_o, double bleed) {
  const double n = a_n + bleed * a_o;
  const double o = a_o + bleed * a_n;
  return n / (n + o) * 100.0;
}

double carrier_value(const Carrier& c, double t) {
  const double w = 2.0 * std::numbers::pi * c.f_hz * t;
  if (c.kind == Carrier::Kind::kSine) return std::numbers::sqrt2 * std::sin(w);
  const double amp = std::sqrt(2.0 / c.n_partials);
  double v = 0.0;
  for (int k = 1; k <= c.n_partials; ++k) v += amp * std::sin(k * w);
  return v;
}

namespace {

// Gaussian noise from a fully specified engine so fixtures are identical on
// every platform (std::normal_distribution is implementation-defined).
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace

SynthResult synthesize(const SynthSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
  if (n == 0) throw InvalidArgument("duration shorter than one sample");

  std::vector<double> nasal(n), oral(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    const double a_n = spec.nasal_env(t);
    const double a_o = spec.oral_env(t);
    const double c = carrier_value(spec.carrier, t);
    nasal[i] = (a_n + spec.bleed * a_o) * c;
    oral[i] = (a_o + spec.bleed * a_n) * c;
  }
  if (spec.noise_rms > 0.0) {
    NoiseSource noise(spec.seed);
    for (double& v : nasal) v += spec.noise_rms * noise.next();
    for (double& v : oral) v += spec.noise_rms * noise.next();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double peak = std::max(std::fabs(nasal[i]), std::fabs(oral[i]));
    if (peak > 1.0) {
      throw InvalidArgument(fmt::format("synth spec clips: |sample| = {:.4f} at t = {:.6f} s",
                                        peak, static_cast<double>(i) / spec.sample_rate));
    }
  }

  SynthResult result{StereoRecording::make(std::move(nasal), std::move(oral), spec.sample_rate,
                                           "synth"),
                     {}};
  const auto starts = frame_starts(n, spec.sample_rate, spec.frames);
  const double step_s = spec.frames.step_ms / 1000.0;
  const double half_s = spec.frames.frame_length_ms / 2000.0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double t = half_s + static_cast<double>(i) * step_s;
    const double a_n = spec.nasal_env(t);
    const double a_o = spec.oral_env(t);
    if (!(a_n + a_o > 0.0)) continue;
    result.truth.times.push_back(t);
    result.truth.expected_nasalance_pct.push_back(bleed_nasalance(a_n, a_o, spec.bleed));
  }
  return result;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_number(const std::string& s, std::size_t line, std::string_view key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw FormatError(fmt::format("line {}: {} expects a number, got '{}'", line, key, s), 0,
                      line);
  }
  return v;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Envelope parse_envelope(const std::string& value, std::size_t line, std::string_view key) {
  std::vector<EnvelopePoint> pts;
  for (const auto& item : split_ws(value)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw FormatError(fmt::format("line {}: {} point '{}' is not t:amplitude", line, key, item),
                        0, line);
    }
    pts.push_back({to_number(item.substr(0, colon), line, key),
                   to_number(item.substr(colon + 1), line, key)});
  }
  try {
    return Envelope(std::move(pts));
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("line {}: {}", line, e.what()), 0, line);
  }
}

}  // namespace

SynthSpec parse_synth_spec(std::string_view text) {
  SynthSpec spec;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(fmt::format("line {}: expected key = value", line_no), 0, line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "duration_s") {
      spec.duration_s = to_number(value, line_no, key);
    } else if (key == "sample_rate") {
      spec.sample_rate = to_number(value, line_no, key);
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(to_number(value, line_no, key));
    } else if (key == "bleed") {
      spec.bleed = to_number(value, line_no, key);
    } else if (key == "noise_rms") {
      spec.noise_rms = to_number(value, line_no, key);
    } else if (key == "frame_ms") {
      spec.frames.frame_length_ms = to_number(value, line_no, key);
    } else if (key == "step_ms") {
      spec.frames.step_ms = to_number(value, line_no, key);
    } else if (key == "window") {
      if (value == "hann") {
        spec.frames.window = WindowType::kHann;
      } else if (value == "rectangular") {
        spec.frames.window = WindowType::kRectangular;
      } else {
        throw FormatError(fmt::format("line {}: unknown window '{}'", line_no, value), 0, line_no);
      }
    } else if (key == "carrier") {
      const auto parts = split_ws(value);
      if (parts.size() == 2 && parts[0] == "sine") {
        spec.carrier = Carrier::sine(to_number(parts[1], line_no, key));
      } else if (parts.size() == 3 && parts[0] == "harmonic") {
        spec.carrier = Carrier::harmonic(to_number(parts[1], line_no, key),
                                         static_cast<int>(to_number(parts[2], line_no, key)));
      } else {
        throw FormatError(
            fmt::format("line {}: carrier must be 'sine F' or 'harmonic F0 N'", line_no), 0,
            line_no);
      }
    } else if (key == "nasal_env") {
      spec.nasal_env = parse_envelope(value, line_no, key);
    } else if (key == "oral_env") {
      spec.oral_env = parse_envelope(value, line_no, key);
    } else if (key == "token") {
      const auto parts = split_ws(value);
      if (parts.size() != 4) {
        throw FormatError(fmt::format("line {}: token must be 'tmin tmax word PHONE'", line_no),
                          0, line_no);
      }
      SynthToken tok{to_number(parts[0], line_no, key), to_number(parts[1], line_no, key),
                     parts[2], parts[3]};
      if (!(tok.tmax > tok.tmin)) {
        throw FormatError(fmt::format("line {}: token has tmax <= tmin", line_no), 0, line_no);
      }
      spec.tokens.push_back(std::move(tok));
    } else {
      throw FormatError(fmt::format("line {}: unknown key '{}'", line_no, key), 0, line_no);
    }
  }
  return spec;
}

TextGrid tokens_textgrid(const SynthSpec& spec) {
  auto tokens = spec.tokens;
  std::sort(tokens.begin(), tokens.end(),
            [](const SynthToken& a, const SynthToken& b) { return a.tmin < b.tmin; });
  TextGrid grid;
  grid.tmin = 0.0;
  grid.tmax = spec.duration_s;
  IntervalTier phones{"phone", 0.0, spec.duration_s, {}};
  IntervalTier words{"word", 0.0, spec.duration_s, {}};
  double cursor = 0.0;
  for (const auto& tok : tokens) {
    if (tok.tmin < cursor || tok.tmax > spec.duration_s) {
      throw InvalidArgument(fmt::format("token '{}' at {}..{} overlaps another token or the end "
                                        "of the recording",
                                        tok.word, tok.tmin, tok.tmax));
    }
    if (tok.tmin > cursor) {
      phones.intervals.push_back({cursor, tok.tmin, "sil"});
      words.intervals.push_back({cursor, tok.tmin, "sp"});
    }
    phones.intervals.push_back({tok.tmin, tok.tmax, tok.phone});
    words.intervals.push_back({tok.tmin, tok.tmax, tok.word});
    cursor = tok.tmax;
  }
  if (cursor < spec.duration_s) {
    phones.intervals.push_back({cursor, spec.duration_s, "sil"});
    words.intervals.push_back({cursor, spec.duration_s, "sp"});
  }
  grid.tiers = {std::move(phones), std::move(words)};
  return grid;
}

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
  out << "t_s,expected_nasalance_pct\n";
  for (std::size_t i = 0; i < truth.times.size(); ++i) {
    fmt::print(out, "{:.6f},{:.6f}\n", truth.times[i], truth.expected_nasalance_pct[i]);
  }
}

}  // namespace nasometry
