#ifndef NASOMETRY_CSV_HPP
#define NASOMETRY_CSV_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nasometry/stats.hpp"

namespace nasometry {

// Splits one CSV record. Double-quoted fields may contain commas and "".
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no = 0);
// Quotes a field only when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

inline constexpr std::string_view kTokenHeader =
    "source_id,speaker,system,word,vowel,environment,t_mid_s,nasalance_pct";

// Reads a token CSV; the header row is mandatory. Throws FormatError with the
// offending line on schema violations.
std::vector<TokenRecord> read_token_csv(std::istream& in);
std::vector<TokenRecord> read_token_csv_file(const std::string& path);

// t_mid_s and nasalance_pct are written with six decimals.
void write_token_csv(std::ostream& out, const std::vector<TokenRecord>& records);

struct WordInfo {
  std::string vowel;
  std::string environment;
};

// `word,vowel,environment` with a header row. Words are matched
// case-insensitively (keys are stored lower-case).
std::map<std::string, WordInfo> read_wordlist(std::istream& in);
std::map<std::string, WordInfo> read_wordlist_file(const std::string& path);

std::string lowercase(std::string_view s);

inline constexpr std::string_view kResultsHeader = "contrast,estimate,se,t,df,p,p_adj";

// Appends rows as `prefix + description`, numbers to 9 significant digits.
void write_results_rows(std::ostream& out, const ContrastTable& table, std::string_view prefix);

// Nine significant digits; +-inf as "Inf"/"-Inf", NaN as "NA".
std::string format_sig9(double v);

}  // namespace nasometry

#endif  // NASOMETRY_CSV_HPP
