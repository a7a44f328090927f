#include "nasometry/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace nasometry {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back().push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"' && fields.back().empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  if (quoted) {
    throw FormatError(fmt::format("line {}: unterminated quoted field", line_no), 0, line_no);
  }
  return fields;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    out.push_back(c);
    if (c == '"') out.push_back('"');
  }
  out.push_back('"');
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

namespace {

double parse_double(const std::string& s, std::size_t line, std::string_view column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw FormatError(fmt::format("line {}: column {} is not a number: '{}'", line, column, s), 0,
                      line);
  }
  return v;
}

std::string strip_bom(std::string line) {
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<TokenRecord> read_token_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("token CSV is empty (header required)", 0, 1);
  if (strip_bom(line) != kTokenHeader) {
    throw FormatError(fmt::format("line 1: token CSV header must be '{}'", kTokenHeader), 0, 1);
  }
  std::vector<TokenRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 8) {
      throw FormatError(fmt::format("line {}: expected 8 columns, found {}", line_no, f.size()), 0,
                        line_no);
    }
    TokenRecord r{f[0], f[1], f[2], f[3], f[4], f[5],
                  parse_double(f[6], line_no, "t_mid_s"),
                  parse_double(f[7], line_no, "nasalance_pct")};
    if (r.system.empty() || r.vowel.empty() || r.environment.empty()) {
      throw FormatError(fmt::format("line {}: system, vowel and environment must be non-empty",
                                    line_no),
                        0, line_no);
    }
    if (r.nasalance_pct < 0.0 || r.nasalance_pct > 100.0) {
      throw FormatError(fmt::format("line {}: nasalance_pct {} outside [0, 100]", line_no,
                                    r.nasalance_pct),
                        0, line_no);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TokenRecord> read_token_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open {}", path), 0);
  return read_token_csv(in);
}

void write_token_csv(std::ostream& out, const std::vector<TokenRecord>& records) {
  out << kTokenHeader << '\n';
  for (const auto& r : records) {
    fmt::print(out, "{},{},{},{},{},{},{:.6f},{:.6f}\n", csv_field(r.source_id),
               csv_field(r.speaker), csv_field(r.system), csv_field(r.word), csv_field(r.vowel),
               csv_field(r.environment), r.t_mid_s, r.nasalance_pct);
  }
}

std::map<std::string, WordInfo> read_wordlist(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("wordlist is empty (header required)", 0, 1);
  const auto header = split_csv_line(strip_bom(line), 1);
  if (header != std::vector<std::string>{"word", "vowel", "environment"}) {
    throw FormatError("line 1: wordlist header must be 'word,vowel,environment'", 0, 1);
  }
  std::map<std::string, WordInfo> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw FormatError(fmt::format("line {}: expected non-empty word,vowel,environment", line_no),
                        0, line_no);
    }
    const auto [it, inserted] = out.emplace(lowercase(f[0]), WordInfo{f[1], f[2]});
    if (!inserted) {
      throw FormatError(fmt::format("line {}: duplicate word '{}'", line_no, f[0]), 0, line_no);
    }
  }
  return out;
}

std::map<std::string, WordInfo> read_wordlist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open {}", path), 0);
  return read_wordlist(in);
}

std::string format_sig9(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{:.9g}", v);
}

void write_results_rows(std::ostream& out, const ContrastTable& table, std::string_view prefix) {
  for (const auto& r : table.rows) {
    fmt::print(out, "{},{},{},{},{},{},{}\n", csv_field(fmt::format("{}{}", prefix, r.description)),
               format_sig9(r.estimate), format_sig9(r.se), format_sig9(r.t), format_sig9(r.df),
               format_sig9(r.p), format_sig9(r.p_adjusted));
  }
}

}  // namespace nasometry
