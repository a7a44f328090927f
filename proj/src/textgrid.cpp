#include "nasometry/textgrid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "nasometry/error.hpp"

namespace nasometry {

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string utf16_to_utf8(std::string_view bytes, bool big_endian) {
  if (bytes.size() % 2 != 0) {
    throw FormatError("UTF-16 text has an odd number of bytes", bytes.size() - 1);
  }
  auto unit = [&](std::size_t i) -> char16_t {
    const auto a = static_cast<unsigned char>(bytes[2 * i]);
    const auto b = static_cast<unsigned char>(bytes[2 * i + 1]);
    return static_cast<char16_t>(big_endian ? (a << 8) | b : (b << 8) | a);
  };
  const std::size_t n = bytes.size() / 2;
  std::string out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char16_t u = unit(i);
    if (u >= 0xD800 && u <= 0xDBFF && i + 1 < n) {
      const char16_t low = unit(i + 1);
      if (low >= 0xDC00 && low <= 0xDFFF) {
        append_utf8(out, 0x10000 + ((static_cast<char32_t>(u) - 0xD800) << 10) + (low - 0xDC00));
        ++i;
        continue;
      }
    }
    if (u >= 0xD800 && u <= 0xDFFF) {
      append_utf8(out, 0xFFFD);
    } else {
      append_utf8(out, u);
    }
  }
  return out;
}

enum class TokKind { kNumber, kString, kFlag, kWord, kValueWord, kBadNumber, kEnd };

struct Token {
  TokKind kind = TokKind::kEnd;
  std::string text;
  double number = 0.0;
  std::size_t line = 0;
};

bool is_delim(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '[' || c == ']' ||
         c == '<' || c == '>' || c == '=' || c == ':' || c == '?' || c == '!';
}

// Praat text files are a stream of numbers, quoted strings and <flags>; the
// long format interleaves them with `key =`, `item [i]:` decoration, which
// is dropped here except for words in value position.
std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> toks;
  std::size_t line = 1;
  bool after_eq = false;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '!') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    if (c == '=') {
      after_eq = true;
      ++i;
      continue;
    }
    if (c == ':' || c == '?' || c == ']' || c == '>') {
      after_eq = false;
      ++i;
      continue;
    }
    if (c == '[') {
      while (i < s.size() && s[i] != ']') {
        if (s[i] == '\n') ++line;
        ++i;
      }
      continue;
    }
    if (c == '"') {
      const std::size_t start_line = line;
      std::string text;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '"') {
          if (i + 1 < s.size() && s[i + 1] == '"') {
            text.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        if (s[i] == '\n') ++line;
        text.push_back(s[i]);
        ++i;
      }
      if (!closed) {
        throw FormatError(fmt::format("unterminated string starting at line {}", start_line),
                          0, start_line);
      }
      toks.push_back({TokKind::kString, std::move(text), 0.0, start_line});
      after_eq = false;
      continue;
    }
    if (c == '<') {
      const std::size_t close = s.find('>', i);
      if (close == std::string_view::npos) {
        throw FormatError(fmt::format("unterminated flag at line {}", line), 0, line);
      }
      toks.push_back({TokKind::kFlag, std::string(s.substr(i + 1, close - i - 1)), 0.0, line});
      i = close + 1;
      after_eq = false;
      continue;
    }

    std::size_t j = i;
    while (j < s.size() && !is_delim(s[j])) ++j;
    const std::string_view word = s.substr(i, j - i);
    const bool numeric_start =
        std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
    if (numeric_start) {
      double v = 0.0;
      const std::string_view body = (c == '+') ? word.substr(1) : word;
      const auto [end, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
      if (ec == std::errc() && end == body.data() + body.size()) {
        toks.push_back({TokKind::kNumber, std::string(word), v, line});
      } else {
        toks.push_back({TokKind::kBadNumber, std::string(word), 0.0, line});
      }
    } else {
      toks.push_back({after_eq ? TokKind::kValueWord : TokKind::kWord, std::string(word), 0.0,
                      line});
    }
    after_eq = false;
    i = j;
  }
  toks.push_back({TokKind::kEnd, {}, 0.0, line});
  return toks;
}

class Reader {
 public:
  explicit Reader(std::vector<Token> toks) : toks_(std::move(toks)) {}

  // Next meaningful token; decoration words are skipped.
  const Token& peek() {
    while (toks_[pos_].kind == TokKind::kWord) ++pos_;
    return toks_[pos_];
  }

  double number(std::string_view what) {
    const Token& t = peek();
    if (t.kind != TokKind::kNumber) fail(t, what, "a number");
    ++pos_;
    return t.number;
  }

  std::string string(std::string_view what) {
    const Token& t = peek();
    if (t.kind != TokKind::kString) fail(t, what, "a quoted string");
    ++pos_;
    return t.text;
  }

  std::string flag(std::string_view what) {
    const Token& t = peek();
    if (t.kind != TokKind::kFlag) fail(t, what, "a <flag>");
    ++pos_;
    return t.text;
  }

  std::size_t line() { return peek().line; }

  [[noreturn]] static void fail(const Token& t, std::string_view what, std::string_view want) {
    std::string got;
    switch (t.kind) {
      case TokKind::kEnd: got = "end of file"; break;
      case TokKind::kNumber: got = fmt::format("number {}", t.text); break;
      case TokKind::kString: got = fmt::format("string \"{}\"", t.text); break;
      case TokKind::kFlag: got = fmt::format("flag <{}>", t.text); break;
      default: got = fmt::format("non-numeric '{}'", t.text); break;
    }
    throw FormatError(fmt::format("line {}: expected {} for {}, found {}", t.line, want, what, got),
                      0, t.line);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::size_t count_of(Reader& r, std::string_view what) {
  const std::size_t line = r.line();
  const double v = r.number(what);
  if (v < 0 || v != static_cast<double>(static_cast<long long>(v))) {
    throw FormatError(fmt::format("line {}: {} must be a non-negative integer, got {}", line,
                                  what, v),
                      0, line);
  }
  return static_cast<std::size_t>(v);
}

bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
}

}  // namespace

std::string decode_text(std::string_view bytes) {
  if (bytes.size() >= 2) {
    const auto b0 = static_cast<unsigned char>(bytes[0]);
    const auto b1 = static_cast<unsigned char>(bytes[1]);
    if (b0 == 0xFF && b1 == 0xFE) return utf16_to_utf8(bytes.substr(2), false);
    if (b0 == 0xFE && b1 == 0xFF) return utf16_to_utf8(bytes.substr(2), true);
  }
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xEF\xBB\xBF") {
    return std::string(bytes.substr(3));
  }
  return std::string(bytes);
}

const IntervalTier* TextGrid::find(std::string_view name) const {
  for (const auto& t : tiers) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

TextGrid parse_textgrid(std::string_view raw) {
  std::string text;
  {
    const std::string decoded = decode_text(raw);
    text.reserve(decoded.size());
    for (std::size_t i = 0; i < decoded.size(); ++i) {
      if (decoded[i] != '\r') {
        text.push_back(decoded[i]);
      } else if (i + 1 >= decoded.size() || decoded[i + 1] != '\n') {
        text.push_back('\n');
      }
    }
  }
  Reader r(tokenize(text));

  {
    const std::size_t line = r.line();
    const std::string file_type = r.string("file type");
    if (file_type != "ooTextFile" && file_type != "ooTextFile short") {
      throw FormatError(fmt::format("line {}: malformed header, file type \"{}\"", line, file_type),
                        0, line);
    }
    const std::size_t cls_line = r.line();
    const std::string cls = r.string("object class");
    if (cls != "TextGrid") {
      throw FormatError(
          fmt::format("line {}: malformed header, object class \"{}\"", cls_line, cls), 0,
          cls_line);
    }
  }

  TextGrid grid;
  grid.tmin = r.number("xmin");
  grid.tmax = r.number("xmax");
  const std::string tiers_flag = r.flag("tiers");
  std::size_t tier_count = 0;
  if (tiers_flag == "exists") {
    tier_count = count_of(r, "tier count");
  } else if (tiers_flag != "absent") {
    throw FormatError(fmt::format("unknown tiers flag <{}>", tiers_flag), 0, 0);
  }

  for (std::size_t t = 0; t < tier_count; ++t) {
    const std::size_t tier_line = r.line();
    const std::string cls = r.string(fmt::format("class of tier {}", t + 1));
    const std::string name = r.string(fmt::format("name of tier {}", t + 1));
    const double tmin = r.number(fmt::format("xmin of tier '{}'", name));
    const double tmax = r.number(fmt::format("xmax of tier '{}'", name));
    const std::size_t n = count_of(r, fmt::format("size of tier '{}'", name));

    if (cls == "TextTier") {
      for (std::size_t k = 0; k < n; ++k) {
        r.number(fmt::format("time of point {} in tier '{}' (declared size {})", k + 1, name, n));
        r.string(fmt::format("mark of point {} in tier '{}'", k + 1, name));
      }
      grid.warnings.push_back(
          fmt::format("skipped point tier '{}' at line {}", name, tier_line));
      continue;
    }
    if (cls != "IntervalTier") {
      throw FormatError(fmt::format("line {}: unknown tier class \"{}\"", tier_line, cls), 0,
                        tier_line);
    }

    IntervalTier tier{name, tmin, tmax, {}};
    tier.intervals.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t line = r.line();
      Interval iv;
      iv.tmin = r.number(fmt::format("xmin of interval {} in tier '{}' (declared size {})",
                                     k + 1, name, n));
      iv.tmax = r.number(fmt::format("xmax of interval {} in tier '{}'", k + 1, name));
      iv.label = r.string(fmt::format("text of interval {} in tier '{}'", k + 1, name));
      if (iv.tmin > iv.tmax) {
        throw FormatError(fmt::format("line {}: interval {} in tier '{}' has xmin > xmax", line,
                                      k + 1, name),
                          0, line);
      }
      const double expected = k == 0 ? tier.tmin : tier.intervals.back().tmax;
      if (!same_time(iv.tmin, expected)) {
        throw FormatError(fmt::format("line {}: interval {} in tier '{}' starts at {} but "
                                      "previous boundary is {}",
                                      line, k + 1, name, iv.tmin, expected),
                          0, line);
      }
      tier.intervals.push_back(std::move(iv));
    }
    if (!tier.intervals.empty() && !same_time(tier.intervals.back().tmax, tier.tmax)) {
      throw FormatError(fmt::format("line {}: last interval of tier '{}' ends at {}, tier ends "
                                    "at {}",
                                    tier_line, name, tier.intervals.back().tmax, tier.tmax),
                        0, tier_line);
    }
    grid.tiers.push_back(std::move(tier));
  }

  const std::size_t trailing_line = r.line();
  if (r.peek().kind != TokKind::kEnd) {
    throw FormatError(fmt::format("line {}: unexpected content after the last declared tier",
                                  trailing_line),
                      0, trailing_line);
  }
  return grid;
}

TextGrid read_textgrid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path), 0);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_textgrid(bytes);
}

std::string serialize_textgrid(const TextGrid& grid) {
  auto quote = [](std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
      out.push_back(c);
      if (c == '"') out.push_back('"');
    }
    out.push_back('"');
    return out;
  };

  std::string out;
  auto line = [&out](std::string_view s) {
    out.append(s);
    out.push_back('\n');
  };
  line("File type = \"ooTextFile\"");
  line("Object class = \"TextGrid\"");
  line("");
  line(fmt::format("xmin = {:.6f} ", grid.tmin));
  line(fmt::format("xmax = {:.6f} ", grid.tmax));
  if (grid.tiers.empty()) {
    line("tiers? <absent> ");
    return out;
  }
  line("tiers? <exists> ");
  line(fmt::format("size = {} ", grid.tiers.size()));
  line("item []: ");
  for (std::size_t t = 0; t < grid.tiers.size(); ++t) {
    const IntervalTier& tier = grid.tiers[t];
    line(fmt::format("    item [{}]:", t + 1));
    line("        class = \"IntervalTier\" ");
    line(fmt::format("        name = {} ", quote(tier.name)));
    line(fmt::format("        xmin = {:.6f} ", tier.tmin));
    line(fmt::format("        xmax = {:.6f} ", tier.tmax));
    line(fmt::format("        intervals: size = {} ", tier.intervals.size()));
    for (std::size_t k = 0; k < tier.intervals.size(); ++k) {
      const Interval& iv = tier.intervals[k];
      line(fmt::format("        intervals [{}]:", k + 1));
      line(fmt::format("            xmin = {:.6f} ", iv.tmin));
      line(fmt::format("            xmax = {:.6f} ", iv.tmax));
      line(fmt::format("            text = {} ", quote(iv.label)));
    }
  }
  return out;
}

std::set<std::string> default_vowel_labels() { return {"IH", "EH", "AE", "AH", "EY"}; }

std::string strip_stress(std::string_view label) {
  std::size_t end = label.size();
  while (end > 0 && std::isdigit(static_cast<unsigned char>(label[end - 1]))) --end;
  std::string out(label.substr(0, end));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::vector<TokenSelection> select_vowel_tokens(const IntervalTier& phone_tier,
                                                const IntervalTier& word_tier,
                                                const std::set<std::string>& vowel_labels) {
  std::vector<TokenSelection> out;
  for (const Interval& phone : phone_tier.intervals) {
    if (phone.label.empty() || !(phone.tmax > phone.tmin)) continue;
    std::string vowel = strip_stress(phone.label);
    if (!vowel_labels.contains(vowel)) continue;

    TokenSelection tok;
    tok.vowel_label = std::move(vowel);
    tok.interval = phone;
    tok.midpoint = (phone.tmin + phone.tmax) / 2.0;

    const auto& words = word_tier.intervals;
    // Last word interval starting at or before the midpoint.
    auto it = std::upper_bound(words.begin(), words.end(), tok.midpoint,
                               [](double t, const Interval& w) { return t < w.tmin; });
    if (it == words.begin() || tok.midpoint > words.back().tmax) {
      tok.flag = "outside word tier";
    } else {
      --it;
      tok.word = it->label;
      if (tok.word.empty()) tok.flag = "empty word interval";
    }
    out.push_back(std::move(tok));
  }
  return out;
}

}  // namespace nasometry
