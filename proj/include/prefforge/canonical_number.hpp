#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace prefforge {

// Canonical answer value: an exact rational when the source string is an
// integer or finite decimal (after stripping "$", "," and a trailing "."),
// otherwise the trimmed source text compared verbatim.
class CanonicalNumber {
 public:
  CanonicalNumber() = default;

  // Numeric parse; nullopt when the (normalized) string is not a plain
  // integer/finite decimal or would overflow 64-bit exact storage.
  static std::optional<CanonicalNumber> parse_numeric(std::string_view raw);

  // Textual fallback: keeps the trimmed string.
  static CanonicalNumber of_text(std::string_view raw);

  // Numeric first, textual fallback. Empty (after trim) yields nullopt.
  static std::optional<CanonicalNumber> canonicalize(std::string_view raw);

  static CanonicalNumber of_rational(long long num, long long den);

  bool is_numeric() const { return numeric_; }
  double as_double() const;
  long long numerator() const { return num_; }
  long long denominator() const { return den_; }

  // Canonical rendering: minimal decimal expansion for numeric values,
  // trimmed source text otherwise. Stable across round-trips.
  const std::string& str() const { return text_; }

  // Exact rational equality when both numeric, falling back to a relative
  // tolerance; trimmed string equality for textual values. Mixed kinds never
  // match.
  bool equals(const CanonicalNumber& other, double rel_tol = 1e-6) const;

  bool operator==(const CanonicalNumber& other) const {
    return numeric_ == other.numeric_ && num_ == other.num_ && den_ == other.den_ &&
           text_ == other.text_;
  }

 private:
  bool numeric_ = false;
  long long num_ = 0;
  long long den_ = 1;
  std::string text_;
};

std::string trim(std::string_view s);

}  // namespace prefforge
