#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cli_runner.hpp"
#include "fixtures.hpp"
#include "nasometry/audio_io.hpp"
#include "nasometry/calibration.hpp"
#include "nasometry/csv.hpp"
#include "nasometry/stats.hpp"
#include "nasometry/synth.hpp"

using namespace nasometry;
using fixtures::q;
using fixtures::run_cli;

namespace {

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

void write_stim(const fixtures::TempDir& dir, const std::string& name, double nasal_gain,
                double oral_gain) {
  const auto rec = fixtures::make_recording(
      16000, 16000, [&](double t) { return nasal_gain * 0.3 * std::sin(2 * 3.141592653589793 * 200 * t); },
      [&](double t) { return oral_gain * 0.3 * std::sin(2 * 3.141592653589793 * 200 * t); });
  write_stereo(dir / name, rec);
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  fixtures::TempDir dir("cli");
  EXPECT_EQ(run_cli(dir, "").exit_code, 1);
  EXPECT_EQ(run_cli(dir, "frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli(dir, "calibrate").exit_code, 1);
  EXPECT_EQ(run_cli(dir, "--help").exit_code, 0);
}

TEST(Cli, SynthWritesWavTruthAndTextGrid) {
  fixtures::TempDir dir("cli");
  fixtures::spit(dir / "s.spec", fixtures::session_spec(1.0, 3));
  const auto r = run_cli(dir, "synth " + q(dir / "s.spec") + " --out " + q(dir / "s"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto rec = load_stereo(dir / "s.wav");
  EXPECT_EQ(rec.size(), 64000u);
  EXPECT_EQ(fixtures::slurp(dir / "s.truth.csv").rfind("t_s,expected_nasalance_pct\n", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "s.TextGrid"));
}

TEST(Cli, SynthExamples) {
  fixtures::TempDir dir("cli");
  struct Case {
    std::string env;
    double want;
  };
  const Case cases[] = {
      {"nasal_env = 0:0.5\noral_env = 0:0\n", 100.0},
      {"nasal_env = 0:0.3\noral_env = 0:0.3\nbleed = 0.4\n", 50.0},
      {"nasal_env = 0:0.2\noral_env = 0:0.6\nbleed = 0.1\n", 0.26 / 0.88 * 100},
  };
  for (const auto& c : cases) {
    fixtures::spit(dir / "c.spec", "duration_s = 0.5\n" + c.env);
    ASSERT_EQ(run_cli(dir, "synth " + q(dir / "c.spec") + " --out " + q(dir / "c")).exit_code, 0);
    std::istringstream in(fixtures::slurp(dir / "c.truth.csv"));
    std::string line;
    std::getline(in, line);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      EXPECT_NEAR(std::stod(line.substr(line.find(',') + 1)), c.want, 1e-6);
    }
    EXPECT_GT(rows, 0u);
  }
  fixtures::spit(dir / "clip.spec", "nasal_env = 0:1\n");
  EXPECT_EQ(run_cli(dir, "synth " + q(dir / "clip.spec") + " --out " + q(dir / "x")).exit_code, 2);
}

TEST(Cli, CalibrateExamples) {
  fixtures::TempDir dir("cli");
  write_stim(dir, "same.wav", 1.0, 1.0);
  write_stim(dir, "half.wav", 0.5, 1.0);
  write_stim(dir, "silent.wav", 0.0, 0.0);
  ASSERT_EQ(run_cli(dir, "calibrate " + q(dir / "same.wav") + " --out " + q(dir / "p.json")).exit_code, 0);
  EXPECT_EQ(load_profile(dir / "p.json").gain_offset_db, 0.0);
  ASSERT_EQ(run_cli(dir, "calibrate " + q(dir / "half.wav") + " --out " + q(dir / "h.json")).exit_code, 0);
  EXPECT_NEAR(load_profile(dir / "h.json").gain_offset_db, -6.0206, 1e-4);
  const auto silent = run_cli(dir, "calibrate " + q(dir / "silent.wav"));
  EXPECT_EQ(silent.exit_code, 2);
  EXPECT_NE(silent.err.find("insufficient calibration signal"), std::string::npos);
}

TEST(Cli, AnalyzeMatchesTruthAndRejects) {
  fixtures::TempDir dir("cli");
  fixtures::spit(dir / "s.spec", fixtures::session_spec(1.0, 3));
  ASSERT_EQ(run_cli(dir, "synth " + q(dir / "s.spec") + " --out " + q(dir / "s")).exit_code, 0);
  // Drop one word from the list so it is rejected as unmapped.
  fixtures::spit(dir / "words.csv",
                 "word,vowel,environment\nbin,kit,nasal\nbid,kit,oral\nbend,dress,nasal\n");
  const auto r = run_cli(dir, "analyze " + q(dir / "s.wav") + " " + q(dir / "s.TextGrid") +
                                  " --wordlist " + q(dir / "words.csv") + " --out " +
                                  q(dir / "tok.csv") + " --speaker S1 --system nosey");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto toks = read_token_csv_file((dir / "tok.csv").string());
  EXPECT_EQ(toks.size(), 6u);
  const auto spec = parse_synth_spec(fixtures::session_spec(1.0, 3));
  for (const auto& t : toks) {
    const double want = bleed_nasalance(spec.nasal_env(t.t_mid_s), spec.oral_env(t.t_mid_s), 0);
    EXPECT_NEAR(t.nasalance_pct, want, 1.0);
    EXPECT_EQ(t.system, "nosey");
  }
  const auto rejects = fixtures::slurp(dir / "tok.rejects.csv");
  EXPECT_EQ(count_lines(rejects), 3u);
  EXPECT_NE(rejects.find("unmapped word"), std::string::npos);
  EXPECT_NE(r.err.find("2"), std::string::npos);
}

TEST(Cli, AnalyzeWithoutVowelsWritesHeaderOnly) {
  fixtures::TempDir dir("cli");
  write_stim(dir, "a.wav", 1.0, 1.0);
  TextGrid g;
  g.tmax = 1.0;
  g.tiers = {{"phone", 0, 1, {{0, 1, "sil"}}}, {"word", 0, 1, {{0, 1, ""}}}};
  fixtures::spit(dir / "a.TextGrid", serialize_textgrid(g));
  fixtures::spit(dir / "w.csv", fixtures::kSessionWordlist);
  const auto r = run_cli(dir, "analyze " + q(dir / "a.wav") + " " + q(dir / "a.TextGrid") +
                                  " --wordlist " + q(dir / "w.csv") + " --out " + q(dir / "t.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(fixtures::slurp(dir / "t.csv"), std::string(kTokenHeader) + "\n");
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Cli, AnalyzeBadInputExitsTwo) {
  fixtures::TempDir dir("cli");
  write_stim(dir, "a.wav", 1.0, 1.0);
  fixtures::spit(dir / "bad.TextGrid", "not a textgrid\n");
  fixtures::spit(dir / "w.csv", fixtures::kSessionWordlist);
  const auto r = run_cli(dir, "analyze " + q(dir / "a.wav") + " " + q(dir / "bad.TextGrid") +
                                  " --wordlist " + q(dir / "w.csv") + " --out " + q(dir / "t.csv"));
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, TrackDump) {
  fixtures::TempDir dir("cli");
  write_stim(dir, "a.wav", 1.0, 1.0);
  ASSERT_EQ(run_cli(dir, "track " + q(dir / "a.wav") + " --out " + q(dir / "n.csv") +
                             " --intensity-out " + q(dir / "i.csv"))
                .exit_code,
            0);
  const auto n = fixtures::slurp(dir / "n.csv");
  EXPECT_EQ(n.rfind("t_s,nasalance_pct,valid\n0.016000,50.000000,1\n", 0), 0u);
  EXPECT_EQ(count_lines(n), 1u + 122u);
  EXPECT_EQ(fixtures::slurp(dir / "i.csv").rfind("t_s,nasal_db,oral_db\n", 0), 0u);
}

TEST(Cli, StatsExitCodes) {
  fixtures::TempDir dir("cli");
  fixtures::TokenDesign d;
  d.cell = [](std::size_t s, std::size_t e, std::size_t) { return 30.0 + 4 * s + 3 * e; };
  auto recs = fixtures::make_tokens(d);
  {
    std::ofstream out(dir / "ok.csv");
    write_token_csv(out, recs);
  }
  const auto ok = run_cli(dir, "stats " + q(dir / "ok.csv") + " --out " + q(dir / "r.csv"));
  ASSERT_EQ(ok.exit_code, 0) << ok.err;
  const auto results = fixtures::slurp(dir / "r.csv");
  EXPECT_EQ(results.rfind(std::string(kResultsHeader) + "\n", 0), 0u);
  EXPECT_NE(results.find("S1/dod/"), std::string::npos);
  EXPECT_NE(results.find("S1/pair/nosey: "), std::string::npos);
  EXPECT_NE(results.find("S1/emm/"), std::string::npos);

  auto one_env = recs;
  for (auto& r : one_env) r.environment = "bin";
  {
    std::ofstream out(dir / "one.csv");
    write_token_csv(out, one_env);
  }
  EXPECT_EQ(run_cli(dir, "stats " + q(dir / "one.csv")).exit_code, 2);

  auto missing = recs;
  std::erase_if(missing, [](const TokenRecord& r) { return r.system == "nosey" && r.environment == "mid"; });
  {
    std::ofstream out(dir / "rd.csv");
    write_token_csv(out, missing);
  }
  const auto rd = run_cli(dir, "stats " + q(dir / "rd.csv"));
  EXPECT_EQ(rd.exit_code, 3);
  EXPECT_NE(rd.err.find(":sys."), std::string::npos) << rd.err;

  fixtures::spit(dir / "schema.csv", "a,b,c\n1,2,3\n");
  EXPECT_EQ(run_cli(dir, "stats " + q(dir / "schema.csv")).exit_code, 2);
}

TEST(Cli, StatsOffsetFixtureGivesZeroDod) {
  fixtures::TempDir dir("cli");
  fixtures::TokenDesign d;
  d.shared_noise = true;
  d.cell = [](std::size_t s, std::size_t e, std::size_t v) {
    const double env[] = {22, 14, 31, 6};
    return 20 + 9.0 * s + env[e] + 2.0 * v;
  };
  {
    std::ofstream out(dir / "t.csv");
    write_token_csv(out, fixtures::make_tokens(d));
  }
  ASSERT_EQ(run_cli(dir, "stats " + q(dir / "t.csv") + " --out " + q(dir / "r.csv")).exit_code, 0);
  std::istringstream in(fixtures::slurp(dir / "r.csv"));
  std::string line;
  std::size_t dod = 0;
  while (std::getline(in, line)) {
    if (line.find("/dod/") == std::string::npos) continue;
    ++dod;
    const auto f = split_csv_line(line);
    ASSERT_EQ(f.size(), 7u);
    EXPECT_NEAR(std::stod(f[1]), 0.0, 1e-8);
    EXPECT_EQ(f[6], "1");
  }
  EXPECT_EQ(dod, 6u);
}
