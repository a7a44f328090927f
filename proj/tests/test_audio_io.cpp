#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "nasometry/audio_io.hpp"
#include "nasometry/error.hpp"

using namespace nasometry;

namespace {

// Hand-assembled 16-bit PCM image, independent of encode_wav.
std::vector<std::uint8_t> pcm16_image(std::uint16_t channels, std::uint32_t rate,
                                      const std::vector<std::int16_t>& samples) {
  std::vector<std::uint8_t> b;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
  const auto data = static_cast<std::uint32_t>(samples.size() * 2);
  tag("RIFF");
  u32(36 + data);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(1);
  u16(channels);
  u32(rate);
  u32(rate * channels * 2);
  u16(static_cast<std::uint16_t>(channels * 2));
  u16(16);
  tag("data");
  u32(data);
  for (auto s : samples) u16(static_cast<std::uint16_t>(s));
  return b;
}

}  // namespace

TEST(AudioIo, Pcm16LeftNasalNormalizesByFullScale) {
  const auto img = pcm16_image(2, 48000, {16384, -8192, -32768, 32767});
  const auto rec = stereo_from_wav(decode_wav(img), ChannelMap::nasal_left(), "x");
  ASSERT_EQ(rec.size(), 2u);
  EXPECT_EQ(rec.nasal[0], 0.5);
  EXPECT_EQ(rec.oral[0], -0.25);
  EXPECT_EQ(rec.nasal[1], -1.0);
  EXPECT_EQ(rec.oral[1], 32767.0 / 32768.0);
  EXPECT_EQ(rec.sample_rate, 48000.0);
}

TEST(AudioIo, Float32PassesThroughUnchanged) {
  WavData wav{2, 44100, SampleFormat::kFloat32, {1.0, -1.0, 0.25, 0.0}};
  const auto rec = stereo_from_wav(decode_wav(encode_wav(wav)), {}, "f");
  EXPECT_EQ(rec.nasal[0], 1.0);
  EXPECT_EQ(rec.oral[0], -1.0);
  EXPECT_EQ(rec.nasal[1], 0.25);
}

TEST(AudioIo, Pcm24And32Decode) {
  for (auto fmt : {SampleFormat::kPcm24, SampleFormat::kPcm32}) {
    WavData wav{2, 16000, fmt, {0.5, -0.25, -1.0, 0.125}};
    const auto back = decode_wav(encode_wav(wav));
    EXPECT_EQ(back.format, fmt);
    EXPECT_EQ(back.interleaved, wav.interleaved);
  }
}

TEST(AudioIo, MonoFileIsRejectedForStereoLoad) {
  const auto img = pcm16_image(1, 48000, {1, 2, 3});
  try {
    stereo_from_wav(decode_wav(img), {}, "m");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("channel count 1 != 2"), std::string::npos);
    EXPECT_EQ(e.byte_offset(), 22u);  // fmt body at 20, channels at +2
  }
}

TEST(AudioIo, TruncatedDataReportsOffset) {
  auto img = pcm16_image(2, 48000, {1, 2, 3, 4});
  img.resize(img.size() - 3);
  try {
    decode_wav(img);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    EXPECT_GT(e.byte_offset(), 0u);
  }
}

TEST(AudioIo, UnsupportedCodecAndDepth) {
  auto img = pcm16_image(2, 8000, {0, 0});
  img[20] = 2;  // ADPCM tag
  EXPECT_THROW(decode_wav(img), FormatError);

  auto eight = pcm16_image(2, 8000, {0, 0});
  eight[34] = 8;  // bits per sample
  eight[32] = 2;  // block align
  EXPECT_THROW(decode_wav(eight), FormatError);

  const std::vector<std::uint8_t> junk{'R', 'I', 'F', 'X', 0, 0, 0, 0, 'W', 'A', 'V', 'E'};
  EXPECT_THROW(decode_wav(junk), FormatError);
}

TEST(AudioIo, FloatOutOfRangeIsRejected) {
  WavData wav{2, 8000, SampleFormat::kFloat32, {1.5, 0.0}};
  EXPECT_THROW(decode_wav(encode_wav(wav)), FormatError);
}

TEST(AudioIo, Pcm16NormalizationRoundTripIsExact) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> dist(-32768, 32767);
  std::vector<std::int16_t> samples(2000);
  for (auto& s : samples) s = static_cast<std::int16_t>(dist(rng));
  const auto img = pcm16_image(2, 16000, samples);
  const auto decoded = decode_wav(img);
  EXPECT_EQ(encode_wav(decoded), img);
}

TEST(AudioIo, SwappedMapExchangesChannels) {
  const auto img = pcm16_image(2, 8000, {100, -200, 300, -400, 5, 6});
  const auto wav = decode_wav(img);
  const auto a = stereo_from_wav(wav, ChannelMap::nasal_left(), "a");
  const auto b = stereo_from_wav(wav, ChannelMap::nasal_right(), "a");
  EXPECT_EQ(a.nasal, b.oral);
  EXPECT_EQ(a.oral, b.nasal);
}

TEST(AudioIo, SameChannelMapIsInvalid) {
  const auto wav = decode_wav(pcm16_image(2, 8000, {1, 2}));
  EXPECT_THROW(stereo_from_wav(wav, {ChannelSource::kLeft, ChannelSource::kLeft}, "x"),
               InvalidArgument);
}

TEST(AudioIo, LoadPairEqualLengths) {
  WavData n{1, 48000, SampleFormat::kPcm16, std::vector<double>(48000, 0.25)};
  WavData o{1, 48000, SampleFormat::kPcm16, std::vector<double>(48000, -0.25)};
  const auto rec = pair_from_wavs(n, o, "p");
  EXPECT_EQ(rec.size(), 48000u);
  EXPECT_EQ(rec.source_id, "p");
}

TEST(AudioIo, LoadPairPadsShorterChannel) {
  WavData n{1, 48000, SampleFormat::kPcm16, std::vector<double>(48000, 0.25)};
  WavData o{1, 48000, SampleFormat::kPcm16, std::vector<double>(47990, -0.25)};
  const auto rec = pair_from_wavs(n, o, "p");
  EXPECT_EQ(rec.size(), 48000u);
  for (std::size_t i = 47990; i < 48000; ++i) EXPECT_EQ(rec.oral[i], 0.0);
  EXPECT_EQ(rec.oral[47989], -0.25);
  EXPECT_NE(rec.source_id.find("pad_oral=10"), std::string::npos);
}

TEST(AudioIo, LoadPairRateMismatch) {
  WavData n{1, 48000, SampleFormat::kPcm16, {0.1}};
  WavData o{1, 44100, SampleFormat::kPcm16, {0.1}};
  try {
    pair_from_wavs(n, o, "p");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("sample-rate mismatch"), std::string::npos);
  }
}

TEST(AudioIo, LoadPairRequiresMono) {
  WavData n{2, 48000, SampleFormat::kPcm16, {0.1, 0.1}};
  WavData o{1, 48000, SampleFormat::kPcm16, {0.1}};
  EXPECT_THROW(pair_from_wavs(n, o, "p"), FormatError);
}

TEST(AudioIo, FilesRoundTripThroughDisk) {
  fixtures::TempDir dir("audio");
  const auto rec = fixtures::make_recording(
      800, 8000, [](double t) { return 0.5 * std::sin(2 * 3.14159 * 200 * t); },
      [](double t) { return 0.25 * std::cos(2 * 3.14159 * 200 * t); });
  write_stereo(dir / "s.wav", rec);
  const auto back = load_stereo(dir / "s.wav");
  ASSERT_EQ(back.size(), rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    EXPECT_EQ(back.nasal[i], static_cast<float>(rec.nasal[i]));
  }
  EXPECT_EQ(back.source_id, "s.wav");

  write_wav(dir / "n.wav", {1, 8000, SampleFormat::kPcm16, {0.5, 0.5, 0.5}});
  write_wav(dir / "o.wav", {1, 8000, SampleFormat::kPcm16, {0.25}});
  const auto pair = load_pair(dir / "n.wav", dir / "o.wav");
  EXPECT_EQ(pair.size(), 3u);
  EXPECT_EQ(pair.oral[1], 0.0);
}

TEST(AudioIo, RecordingInvariants) {
  EXPECT_THROW(StereoRecording::make({0.1}, {0.1, 0.2}, 8000, "x"), InvalidArgument);
  EXPECT_THROW(StereoRecording::make({}, {}, 8000, "x"), InvalidArgument);
  EXPECT_THROW(StereoRecording::make({0.1}, {0.1}, 0, "x"), InvalidArgument);
  EXPECT_THROW(StereoRecording::make({1.1}, {0.1}, 8000, "x"), InvalidArgument);
}
