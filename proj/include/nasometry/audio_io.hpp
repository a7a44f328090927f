#ifndef NASOMETRY_AUDIO_IO_HPP
#define NASOMETRY_AUDIO_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nasometry {

// Paired nasal/oral channels at a common rate. Samples are normalized to
// [-1, 1]. Construct through make() so the invariants are checked.
struct StereoRecording {
  std::vector<double> nasal;
  std::vector<double> oral;
  double sample_rate = 0.0;
  std::string source_id;

  std::size_t size() const { return nasal.size(); }
  double duration_s() const { return static_cast<double>(size()) / sample_rate; }

  // Throws InvalidArgument unless lengths match and are >= 1, the rate is
  // positive, and every sample is finite and within [-1, 1].
  static StereoRecording make(std::vector<double> nasal, std::vector<double> oral,
                              double sample_rate, std::string source_id);
  void validate() const;
};

enum class ChannelSource { kLeft, kRight, kFileA, kFileB };

struct ChannelMap {
  ChannelSource nasal_source = ChannelSource::kLeft;
  ChannelSource oral_source = ChannelSource::kRight;

  static ChannelMap nasal_left() { return {}; }
  static ChannelMap nasal_right() {
    return {ChannelSource::kRight, ChannelSource::kLeft};
  }
};

enum class SampleFormat { kPcm16, kPcm24, kPcm32, kFloat32 };

// Raw decoded WAV contents; samples interleaved and already normalized.
struct WavData {
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  SampleFormat format = SampleFormat::kPcm16;
  std::vector<double> interleaved;
  // Byte offset of the channel-count field, for error reporting.
  std::size_t channels_offset = 0;

  std::size_t frames() const { return channels ? interleaved.size() / channels : 0; }
};

// Decodes a RIFF/WAVE byte image. Accepts PCM 16/24/32-bit integer and 32-bit
// float, including WAVE_FORMAT_EXTENSIBLE wrappers of those. Integer samples
// are divided by 2^(bits-1). Errors carry the byte offset of the problem.
WavData decode_wav(std::span<const std::uint8_t> bytes);
WavData read_wav(const std::filesystem::path& path);

// Encodes interleaved samples. Integer formats round to nearest and saturate
// at full scale.
std::vector<std::uint8_t> encode_wav(const WavData& wav);
void write_wav(const std::filesystem::path& path, const WavData& wav);

// Loads a two-channel file and assigns channels per `map` (left/right only).
StereoRecording load_stereo(const std::filesystem::path& path, ChannelMap map = {});

// Builds a recording from an already decoded stereo image.
StereoRecording stereo_from_wav(const WavData& wav, ChannelMap map,
                                std::string source_id);

// Loads one mono file per channel. The shorter channel is zero-padded at the
// end and the padding is noted in source_id as "|pad_<role>=<n>".
StereoRecording load_pair(const std::filesystem::path& nasal_path,
                          const std::filesystem::path& oral_path);

StereoRecording pair_from_wavs(const WavData& nasal, const WavData& oral,
                               std::string source_id);

// Writes `rec` as a stereo file with nasal on the left channel.
void write_stereo(const std::filesystem::path& path, const StereoRecording& rec,
                  SampleFormat format = SampleFormat::kFloat32);

}  // namespace nasometry

#endif  // NASOMETRY_AUDIO_IO_HPP
