#include "nasometry/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include <fmt/format.h>

#include "nasometry/error.hpp"

namespace nasometry {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

int bits_of(SampleFormat f) {
  switch (f) {
    case SampleFormat::kPcm16: return 16;
    case SampleFormat::kPcm24: return 24;
    case SampleFormat::kPcm32: return 32;
    case SampleFormat::kFloat32: return 32;
  }
  return 0;
}

struct FmtChunk {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
  std::size_t offset = 0;
};

FmtChunk parse_fmt(std::span<const std::uint8_t> b, std::size_t body, std::uint32_t size) {
  if (size < 16) {
    throw FormatError(fmt::format("fmt chunk too short ({} bytes) at byte {}", size, body),
                      body);
  }
  FmtChunk f;
  f.offset = body;
  f.tag = le16(b, body);
  f.channels = le16(b, body + 2);
  f.rate = le32(b, body + 4);
  f.block_align = le16(b, body + 12);
  f.bits = le16(b, body + 14);
  if (f.tag == kFormatExtensible) {
    if (size < 40) {
      throw FormatError(
          fmt::format("extensible fmt chunk too short ({} bytes) at byte {}", size, body),
          body);
    }
    // First two bytes of the sub-format GUID hold the plain format tag.
    f.tag = le16(b, body + 24);
  }
  return f;
}

SampleFormat classify(const FmtChunk& f) {
  if (f.tag == kFormatPcm) {
    switch (f.bits) {
      case 16: return SampleFormat::kPcm16;
      case 24: return SampleFormat::kPcm24;
      case 32: return SampleFormat::kPcm32;
      default: break;
    }
    throw FormatError(fmt::format("unsupported PCM bit depth {} at byte {}", f.bits,
                                  f.offset + 14),
                      f.offset + 14);
  }
  if (f.tag == kFormatFloat) {
    if (f.bits == 32) return SampleFormat::kFloat32;
    throw FormatError(fmt::format("unsupported float bit depth {} at byte {}", f.bits,
                                  f.offset + 14),
                      f.offset + 14);
  }
  throw FormatError(
      fmt::format("unsupported codec 0x{:04x} at byte {}", f.tag, f.offset), f.offset);
}

double decode_sample(std::span<const std::uint8_t> b, std::size_t at, SampleFormat fmt_) {
  switch (fmt_) {
    case SampleFormat::kPcm16:
      return static_cast<std::int16_t>(le16(b, at)) / 32768.0;
    case SampleFormat::kPcm24: {
      std::int32_t v = static_cast<std::int32_t>(b[at] | (b[at + 1] << 8) | (b[at + 2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case SampleFormat::kPcm32:
      return static_cast<std::int32_t>(le32(b, at)) / 2147483648.0;
    case SampleFormat::kFloat32: {
      const double v = std::bit_cast<float>(le32(b, at));
      if (!std::isfinite(v) || std::fabs(v) > 1.0) {
        throw FormatError(
            fmt::format("float sample {} outside [-1, 1] at byte {}", v, at), at);
      }
      return v;
    }
  }
  return 0.0;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

StereoRecording StereoRecording::make(std::vector<double> nasal, std::vector<double> oral,
                                      double sample_rate, std::string source_id) {
  StereoRecording rec{std::move(nasal), std::move(oral), sample_rate, std::move(source_id)};
  rec.validate();
  return rec;
}

void StereoRecording::validate() const {
  if (nasal.size() != oral.size()) {
    throw InvalidArgument(fmt::format("channel lengths differ: nasal {} vs oral {}",
                                      nasal.size(), oral.size()));
  }
  if (nasal.empty()) throw InvalidArgument("recording has no samples");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw InvalidArgument(fmt::format("sample rate must be positive, got {}", sample_rate));
  }
  auto in_range = [](double x) { return std::isfinite(x) && std::fabs(x) <= 1.0; };
  for (std::size_t i = 0; i < nasal.size(); ++i) {
    if (!in_range(nasal[i]) || !in_range(oral[i])) {
      throw InvalidArgument(fmt::format("sample {} is not finite or outside [-1, 1]", i));
    }
  }
}

WavData decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12) throw FormatError("truncated RIFF header at byte 0", 0);
  if (!tag_is(b, 0, "RIFF")) throw FormatError("missing RIFF tag at byte 0", 0);
  if (!tag_is(b, 8, "WAVE")) throw FormatError("missing WAVE tag at byte 8", 8);

  std::optional<FmtChunk> fmt_chunk;
  std::size_t data_at = 0;
  std::uint32_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    const bool is_data = tag_is(b, pos, "data");
    if (body + size > b.size()) {
      if (!is_data) {
        throw FormatError(
            fmt::format("truncated chunk '{}' at byte {}: declares {} bytes, {} remain",
                        std::string(reinterpret_cast<const char*>(b.data() + pos), 4), pos,
                        size, b.size() - body),
            pos);
      }
      throw FormatError(fmt::format("truncated data chunk at byte {}: declares {} bytes, "
                                    "{} remain",
                                    pos, size, b.size() - body),
                        b.size());
    }
    if (tag_is(b, pos, "fmt ")) {
      fmt_chunk = parse_fmt(b, body, size);
    } else if (is_data) {
      data_at = body;
      data_size = size;
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (pos < b.size() && pos + 8 > b.size() && !have_data) {
    throw FormatError(fmt::format("truncated chunk header at byte {}", pos), pos);
  }
  if (!fmt_chunk) throw FormatError("no fmt chunk found", 12);
  if (!have_data) throw FormatError("no data chunk found", b.size());

  const FmtChunk& f = *fmt_chunk;
  const SampleFormat format = classify(f);
  if (f.channels == 0) {
    throw FormatError(fmt::format("channel count 0 at byte {}", f.offset + 2), f.offset + 2);
  }
  if (f.rate == 0) {
    throw FormatError(fmt::format("sample rate 0 at byte {}", f.offset + 4), f.offset + 4);
  }
  const std::size_t bytes_per_sample = static_cast<std::size_t>(bits_of(format) / 8);
  const std::size_t frame_bytes = bytes_per_sample * f.channels;
  if (f.block_align != frame_bytes) {
    throw FormatError(fmt::format("block align {} inconsistent with {} channels x {} bits "
                                  "at byte {}",
                                  f.block_align, f.channels, f.bits, f.offset + 12),
                      f.offset + 12);
  }
  if (data_size % frame_bytes != 0) {
    const std::size_t partial = data_at + (data_size / frame_bytes) * frame_bytes;
    throw FormatError(fmt::format("truncated sample frame at byte {}", partial), partial);
  }

  WavData wav;
  wav.channels = f.channels;
  wav.sample_rate = f.rate;
  wav.format = format;
  wav.channels_offset = f.offset + 2;
  const std::size_t n = data_size / bytes_per_sample;
  wav.interleaved.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    wav.interleaved[i] = decode_sample(b, data_at + i * bytes_per_sample, format);
  }
  return wav;
}

WavData read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const WavData& wav) {
  const int bits = bits_of(wav.format);
  const std::uint32_t bytes_per_sample = static_cast<std::uint32_t>(bits / 8);
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(wav.interleaved.size()) * bytes_per_sample;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, wav.format == SampleFormat::kFloat32 ? kFormatFloat : kFormatPcm);
  put16(out, wav.channels);
  put32(out, wav.sample_rate);
  put32(out, wav.sample_rate * wav.channels * bytes_per_sample);
  put16(out, static_cast<std::uint16_t>(wav.channels * bytes_per_sample));
  put16(out, static_cast<std::uint16_t>(bits));
  put_tag(out, "data");
  put32(out, data_size);

  const double scale = std::ldexp(1.0, bits - 1);
  for (double x : wav.interleaved) {
    if (wav.format == SampleFormat::kFloat32) {
      put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
      continue;
    }
    const double q = std::clamp(std::nearbyint(x * scale), -scale, scale - 1.0);
    const auto v = static_cast<std::int64_t>(q);
    for (int i = 0; i < bits / 8; ++i) {
      out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }
  }
  if (data_size & 1u) out.push_back(0);
  return out;
}

void write_wav(const std::filesystem::path& path, const WavData& wav) {
  const auto bytes = encode_wav(wav);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

StereoRecording stereo_from_wav(const WavData& wav, ChannelMap map, std::string source_id) {
  if (wav.channels != 2) {
    throw FormatError(fmt::format("channel count {} != 2 at byte {}", wav.channels,
                                  wav.channels_offset),
                      wav.channels_offset);
  }
  auto index_of = [](ChannelSource s) -> std::size_t {
    switch (s) {
      case ChannelSource::kLeft: return 0;
      case ChannelSource::kRight: return 1;
      default: break;
    }
    throw InvalidArgument("stereo channel map must use left/right sources");
  };
  const std::size_t ni = index_of(map.nasal_source);
  const std::size_t oi = index_of(map.oral_source);
  if (ni == oi) throw InvalidArgument("nasal and oral map to the same channel");

  const std::size_t frames = wav.frames();
  std::vector<double> nasal(frames), oral(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    nasal[i] = wav.interleaved[2 * i + ni];
    oral[i] = wav.interleaved[2 * i + oi];
  }
  return StereoRecording::make(std::move(nasal), std::move(oral), wav.sample_rate,
                               std::move(source_id));
}

StereoRecording load_stereo(const std::filesystem::path& path, ChannelMap map) {
  return stereo_from_wav(read_wav(path), map, path.filename().string());
}

StereoRecording pair_from_wavs(const WavData& nasal, const WavData& oral,
                               std::string source_id) {
  for (const WavData* w : {&nasal, &oral}) {
    if (w->channels != 1) {
      throw FormatError(fmt::format("channel count {} != 1 at byte {}", w->channels,
                                    w->channels_offset),
                        w->channels_offset);
    }
  }
  if (nasal.sample_rate != oral.sample_rate) {
    throw InvalidArgument(fmt::format("sample-rate mismatch: nasal {} Hz vs oral {} Hz",
                                      nasal.sample_rate, oral.sample_rate));
  }
  std::vector<double> n = nasal.interleaved;
  std::vector<double> o = oral.interleaved;
  if (n.size() < o.size()) {
    source_id += fmt::format("|pad_nasal={}", o.size() - n.size());
    n.resize(o.size(), 0.0);
  } else if (o.size() < n.size()) {
    source_id += fmt::format("|pad_oral={}", n.size() - o.size());
    o.resize(n.size(), 0.0);
  }
  return StereoRecording::make(std::move(n), std::move(o), nasal.sample_rate,
                               std::move(source_id));
}

StereoRecording load_pair(const std::filesystem::path& nasal_path,
                          const std::filesystem::path& oral_path) {
  return pair_from_wavs(read_wav(nasal_path), read_wav(oral_path),
                        nasal_path.filename().string() + "+" +
                            oral_path.filename().string());
}

void write_stereo(const std::filesystem::path& path, const StereoRecording& rec,
                  SampleFormat format) {
  WavData wav;
  wav.channels = 2;
  wav.sample_rate = static_cast<std::uint32_t>(std::lround(rec.sample_rate));
  wav.format = format;
  wav.interleaved.resize(2 * rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    wav.interleaved[2 * i] = rec.nasal[i];
    wav.interleaved[2 * i + 1] = rec.oral[i];
  }
  write_wav(path, wav);
}

}  // namespace nasometry
