#ifndef NASOMETRY_TEXTGRID_HPP
#define NASOMETRY_TEXTGRID_HPP

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace nasometry {

struct Interval {
  double tmin = 0.0;
  double tmax = 0.0;
  std::string label;

  bool operator==(const Interval&) const = default;
};

struct IntervalTier {
  std::string name;
  double tmin = 0.0;
  double tmax = 0.0;
  std::vector<Interval> intervals;

  bool operator==(const IntervalTier&) const = default;
};

struct TextGrid {
  double tmin = 0.0;
  double tmax = 0.0;
  std::vector<IntervalTier> tiers;
  // Non-fatal notes, e.g. skipped point tiers.
  std::vector<std::string> warnings;

  const IntervalTier* find(std::string_view name) const;
};

// Parses long or short text format. `text` may be UTF-8 (with or without a
// BOM) or UTF-16 with a byte-order mark. Point tiers are skipped with a
// warning. Throws FormatError carrying the 1-based line of the problem.
TextGrid parse_textgrid(std::string_view text);
TextGrid read_textgrid(const std::string& path);

// Long text format, UTF-8, six-decimal times, LF line endings.
std::string serialize_textgrid(const TextGrid& grid);

// Returns UTF-8 text for a byte image that may carry a UTF-8 or UTF-16 BOM.
std::string decode_text(std::string_view bytes);

// ARPAbet labels for the lexical sets kit, dress, trap, strut, face.
std::set<std::string> default_vowel_labels();

// Removes trailing stress digits: "IH1" -> "IH".
std::string strip_stress(std::string_view label);

struct TokenSelection {
  std::string word;
  std::string vowel_label;  // stress stripped
  Interval interval;        // phone interval, original label
  double midpoint = 0.0;
  // Set when the token cannot be attributed (e.g. "empty word interval").
  std::optional<std::string> flag;
};

// Every non-empty, non-zero-length phone interval whose stress-stripped label
// is in `vowel_labels`, with the word whose interval contains its midpoint.
std::vector<TokenSelection> select_vowel_tokens(const IntervalTier& phone_tier,
                                                const IntervalTier& word_tier,
                                                const std::set<std::string>& vowel_labels);

}  // namespace nasometry

#endif  // NASOMETRY_TEXTGRID_HPP
