#ifndef NASOMETRY_TESTS_FIXTURES_HPP
#define NASOMETRY_TESTS_FIXTURES_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "nasometry/audio_io.hpp"
#include "nasometry/intensity.hpp"
#include "nasometry/stats.hpp"

namespace fixtures {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("nasometry_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Noise-free residual pattern shared across systems when `shared_noise` is
// true; otherwise every observation gets independent noise.
struct TokenDesign {
  std::vector<std::string> systems{"icspeech", "nosey"};
  std::vector<std::string> environments{"bent", "bin", "bend", "mid"};
  std::vector<std::string> vowels{"kit", "dress"};
  int repetitions = 6;
  double noise_sd = 2.0;
  bool shared_noise = false;
  std::uint64_t seed = 7;
  // Noise-free cell value for (system, environment, vowel) indices.
  std::function<double(std::size_t, std::size_t, std::size_t)> cell;
};

inline std::vector<nasometry::TokenRecord> make_tokens(const TokenDesign& d) {
  std::mt19937_64 rng(d.seed);
  std::normal_distribution<double> noise(0.0, d.noise_sd);
  // Draw the per-(env, vowel, rep) residuals once when they are shared.
  std::vector<double> shared;
  for (std::size_t k = 0; k < d.environments.size() * d.vowels.size() * d.repetitions; ++k) {
    shared.push_back(noise(rng));
  }
  std::vector<nasometry::TokenRecord> out;
  for (std::size_t s = 0; s < d.systems.size(); ++s) {
    std::size_t k = 0;
    for (std::size_t e = 0; e < d.environments.size(); ++e) {
      for (std::size_t v = 0; v < d.vowels.size(); ++v) {
        for (int r = 0; r < d.repetitions; ++r, ++k) {
          const double eps = d.shared_noise ? shared[k] : noise(rng);
          nasometry::TokenRecord t;
          t.source_id = "sim";
          t.speaker = "S1";
          t.system = d.systems[s];
          t.word = d.environments[e] + "_" + d.vowels[v];
          t.vowel = d.vowels[v];
          t.environment = d.environments[e];
          t.t_mid_s = 0.5 + r;
          t.nasalance_pct = d.cell(s, e, v) + eps;
          out.push_back(t);
        }
      }
    }
  }
  return out;
}

// A stereo recording of `n` samples from two generator callables.
inline nasometry::StereoRecording make_recording(std::size_t n, double rate,
                                                 const std::function<double(double)>& nasal,
                                                 const std::function<double(double)>& oral) {
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    a[i] = nasal(t);
    b[i] = oral(t);
  }
  return nasometry::StereoRecording::make(std::move(a), std::move(b), rate, "test");
}

}  // namespace fixtures

#endif  // NASOMETRY_TESTS_FIXTURES_HPP
