#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "nasometry/error.hpp"
#include "nasometry/intensity.hpp"
#include "oracles.hpp"

using namespace nasometry;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tone(double f, double amp, double rate, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * kPi * f * i / rate);
  return x;
}

}  // namespace

TEST(FrameIntensity, UnitSineRectangular) {
  const auto x = tone(100, 1.0, 8000, 800);  // 10 periods
  EXPECT_NEAR(frame_intensity_db(x, WindowType::kRectangular), -3.0103, 1e-4);
  EXPECT_NEAR(frame_intensity_db(x, WindowType::kRectangular), 20 * std::log10(1 / std::sqrt(2.0)),
              1e-12);
}

TEST(FrameIntensity, SilenceClamps) {
  std::vector<double> z(256, 0.0);
  EXPECT_EQ(frame_intensity_db(z, WindowType::kHann), kClampFloorDb);
  EXPECT_EQ(frame_intensity_db(z, WindowType::kRectangular), -300.0);
  std::vector<double> tiny(256, 1e-300);
  EXPECT_EQ(frame_intensity_db(tiny, WindowType::kRectangular), -300.0);
}

TEST(FrameIntensity, DcHalf) {
  std::vector<double> dc(100, 0.5);
  EXPECT_NEAR(frame_intensity_db(dc, WindowType::kRectangular), -6.0206, 1e-4);
}

TEST(FrameIntensity, EmptyFrameIsInvalid) {
  std::vector<double> none;
  EXPECT_THROW(frame_intensity_db(none, WindowType::kHann), InvalidArgument);
  std::vector<double> x(4, 0.1), w(3, 1.0);
  EXPECT_THROW(frame_intensity_db(x, w), InvalidArgument);
}

TEST(FrameIntensity, ConstantSignalSameUnderBothWindows) {
  for (double c : {0.9, 0.3, -0.01}) {
    std::vector<double> x(1536, c);
    EXPECT_NEAR(frame_intensity_db(x, WindowType::kHann),
                frame_intensity_db(x, WindowType::kRectangular), 1e-12);
  }
}

TEST(FrameIntensity, HannWindowHasNoZeroWeight) {
  const auto w = make_window(WindowType::kHann, 2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_GT(w[0], 0.0);
  EXPECT_GT(w[1], 0.0);
  const auto r = make_window(WindowType::kRectangular, 5);
  for (double v : r) EXPECT_EQ(v, 1.0);
}

TEST(IntensityTrack, FrameCountAt48k) {
  const auto rec = fixtures::make_recording(
      48000, 48000, [](double t) { return 0.5 * std::sin(2 * kPi * 220 * t); },
      [](double t) { return 0.25 * std::sin(2 * kPi * 220 * t); });
  const auto it = intensity_track(rec);
  // Direct enumeration of frame starts at k*384 that fit a 1536-sample frame.
  std::size_t expected = 0;
  for (std::size_t s = 0; s + 1536 <= 48000; s += 384) ++expected;
  EXPECT_EQ(expected, 122u);
  EXPECT_EQ(it.size(), 122u);
  EXPECT_NEAR(it.times[0], 0.016, 1e-12);
  EXPECT_EQ(it.nasal_db.size(), it.size());
  EXPECT_EQ(it.oral_db.size(), it.size());
}

TEST(IntensityTrack, ExactlyOneFrame) {
  const auto rec = fixtures::make_recording(
      1536, 48000, [](double) { return 0.1; }, [](double) { return 0.2; });
  EXPECT_EQ(intensity_track(rec).size(), 1u);
}

TEST(IntensityTrack, ShorterThanFrameIsError) {
  const auto rec = fixtures::make_recording(
      1535, 48000, [](double) { return 0.1; }, [](double) { return 0.2; });
  EXPECT_THROW(intensity_track(rec), InvalidArgument);
}

TEST(IntensityTrack, SilentRecording) {
  const auto rec = fixtures::make_recording(
      16000, 16000, [](double) { return 0.0; }, [](double) { return 0.0; });
  const auto it = intensity_track(rec);
  ASSERT_GT(it.size(), 0u);
  for (std::size_t i = 0; i < it.size(); ++i) {
    EXPECT_EQ(it.nasal_db[i], -300.0);
    EXPECT_EQ(it.oral_db[i], -300.0);
  }
}

TEST(IntensityTrack, InvalidConfigs) {
  const auto rec = fixtures::make_recording(
      16000, 16000, [](double) { return 0.1; }, [](double) { return 0.1; });
  FrameConfig c;
  c.step_ms = 0;
  EXPECT_THROW(intensity_track(rec, c), InvalidArgument);
  c = {};
  c.step_ms = 40;
  EXPECT_THROW(intensity_track(rec, c), InvalidArgument);
  c = {};
  c.frame_length_ms = 0.05;  // 0.8 samples
  c.step_ms = 0.05;
  EXPECT_THROW(intensity_track(rec, c), InvalidArgument);
}

TEST(IntensityTrack, GainShiftMovesOnlyThatChannel) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::uniform_real_distribution<double> gain(0.05, 2.4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> n(8000), o(8000);
    for (auto& v : n) v = u(rng);
    for (auto& v : o) v = u(rng);
    const double g = gain(rng);
    std::vector<double> ng(n);
    for (auto& v : ng) v *= g;
    const auto a = intensity_track(StereoRecording::make(n, o, 16000, "a"));
    const auto b = intensity_track(StereoRecording::make(ng, o, 16000, "b"));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(b.nasal_db[i] - a.nasal_db[i], 20 * std::log10(g), 1e-9);
      EXPECT_EQ(b.oral_db[i], a.oral_db[i]);
    }
  }
}

TEST(IntensityTrack, TimeBaseIsUniform) {
  const std::vector<std::pair<double, double>> cfgs{{32, 8}, {25, 10}, {20, 7.3}, {10, 10}};
  for (auto [len, step] : cfgs) {
    FrameConfig c;
    c.frame_length_ms = len;
    c.step_ms = step;
    const auto rec = fixtures::make_recording(
        44100, 44100, [](double) { return 0.2; }, [](double) { return 0.3; });
    const auto it = intensity_track(rec, c);
    EXPECT_NEAR(it.times[0], len / 2000.0, 1e-12);
    for (std::size_t i = 1; i < it.size(); ++i) {
      EXPECT_NEAR(it.times[i] - it.times[i - 1], step / 1000.0, 1e-9);
    }
  }
}

TEST(IntensityTrack, LevelsMatchDirectRms) {
  const auto rec = fixtures::make_recording(
      16000, 16000, [](double t) { return 0.3 * std::sin(2 * kPi * 150 * t) + 0.05; },
      [](double t) { return 0.6 * std::sin(2 * kPi * 90 * t); });
  FrameConfig c;
  c.window = WindowType::kRectangular;
  const auto it = intensity_track(rec, c);
  const std::size_t frame = 512, step = 128;
  for (std::size_t i = 0; i < it.size(); i += 17) {
    const double r = oracle::rms(rec.nasal, i * step, i * step + frame);
    EXPECT_NEAR(it.nasal_db[i], 20 * std::log10(r), 1e-9);
  }
}

TEST(IntensityTrack, CsvDump) {
  const auto rec = fixtures::make_recording(
      1536, 48000, [](double) { return 0.5; }, [](double) { return 0.0; });
  std::ostringstream out;
  write_intensity_csv(out, intensity_track(rec));
  EXPECT_EQ(out.str(), "t_s,nasal_db,oral_db\n0.016000,-6.020600,-300.000000\n");
}

TEST(Bandpass, PassbandToneKeepsLevel) {
  const double rate = 16000;
  const auto x = tone(500, 0.5, rate, 16000);
  const auto y = bandpass_channel(x, rate, {300, 750, 4});
  const double in = oracle::rms(x, 2000, 14000), out = oracle::rms(y, 2000, 14000);
  EXPECT_LT(std::fabs(20 * std::log10(out / in)), 1.0);
}

TEST(Bandpass, StopbandToneIsAttenuated) {
  const double rate = 16000;
  const auto x = tone(50, 0.5, rate, 16000);
  const auto y = bandpass_channel(x, rate, {300, 750, 4});
  const double in = oracle::rms(x, 2000, 14000), out = oracle::rms(y, 2000, 14000);
  EXPECT_LE(20 * std::log10(out / in), -24.0);
}

TEST(Bandpass, ZeroPhaseKeepsToneAligned) {
  const double rate = 16000;
  const auto x = tone(500, 0.5, rate, 8000);
  const auto y = bandpass_channel(x, rate, {300, 750, 4});
  // Filtered and original tone stay in phase in the steady state.
  double dot = 0, xx = 0, yy = 0;
  for (std::size_t i = 2000; i < 6000; ++i) {
    dot += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  EXPECT_GT(dot / std::sqrt(xx * yy), 0.999);
}

TEST(Bandpass, BothChannelsFilteredIdentically) {
  const auto rec = fixtures::make_recording(
      8000, 16000, [](double t) { return 0.4 * std::sin(2 * kPi * 400 * t); },
      [](double t) { return 0.4 * std::sin(2 * kPi * 400 * t); });
  const auto out = bandpass(rec, {300, 750, 4});
  EXPECT_EQ(out.nasal, out.oral);
  EXPECT_EQ(out.sample_rate, rec.sample_rate);
}

TEST(Bandpass, InvalidSpecs) {
  const auto rec = fixtures::make_recording(
      1000, 16000, [](double) { return 0.0; }, [](double) { return 0.0; });
  EXPECT_THROW(bandpass(rec, {750, 300, 4}), InvalidArgument);
  EXPECT_THROW(bandpass(rec, {500, 500, 4}), InvalidArgument);
  EXPECT_THROW(bandpass(rec, {0, 300, 4}), InvalidArgument);
  EXPECT_THROW(bandpass(rec, {300, 8000, 4}), InvalidArgument);
  EXPECT_THROW(bandpass(rec, {300, 750, 3}), InvalidArgument);
}
