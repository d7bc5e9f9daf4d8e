#include "prefforge/canonical_number.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace prefforge {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (!std::isdigit(c)) return false;
  }
  return true;
}

// 18 digits keeps intermediate products inside __int128 comfortably.
constexpr std::size_t kMaxDigits = 18;

std::string render_rational(long long num, long long den) {
  // den is a product of 2s and 5s after reduction from a power of ten; find
  // the smallest k with den | 10^k.
  long long d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  int k = std::max(twos, fives);
  __int128 scale = 1;
  for (int i = 0; i < k; ++i) scale *= 10;
  __int128 digits = static_cast<__int128>(num < 0 ? -num : num) * (scale / den);

  std::string raw;
  if (digits == 0) raw = "0";
  while (digits > 0) {
    raw.insert(raw.begin(), static_cast<char>('0' + static_cast<int>(digits % 10)));
    digits /= 10;
  }
  std::string out;
  if (num < 0) out.push_back('-');
  if (k == 0) {
    out += raw;
    return out;
  }
  while (raw.size() <= static_cast<std::size_t>(k)) raw.insert(raw.begin(), '0');
  std::string frac = raw.substr(raw.size() - k);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  out += raw.substr(0, raw.size() - k);
  if (!frac.empty()) {
    out.push_back('.');
    out += frac;
  }
  return out;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<CanonicalNumber> CanonicalNumber::parse_numeric(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : trim(raw)) {
    if (c == '$' || c == ',') continue;
    s.push_back(c);
  }
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s.empty()) return std::nullopt;

  bool negative = false;
  std::size_t pos = 0;
  if (s[0] == '+' || s[0] == '-') {
    negative = s[0] == '-';
    pos = 1;
  }
  std::string_view body = std::string_view(s).substr(pos);
  if (body.empty()) return std::nullopt;

  std::string int_part, frac_part;
  auto dot = body.find('.');
  if (dot == std::string_view::npos) {
    int_part = std::string(body);
  } else {
    int_part = std::string(body.substr(0, dot));
    frac_part = std::string(body.substr(dot + 1));
    if (frac_part.empty()) return std::nullopt;
  }
  if (int_part.empty() && frac_part.empty()) return std::nullopt;
  if (!int_part.empty() && !all_digits(int_part)) return std::nullopt;
  if (!frac_part.empty() && !all_digits(frac_part)) return std::nullopt;
  if (int_part.size() + frac_part.size() > kMaxDigits) return std::nullopt;

  long long num = 0;
  for (char c : int_part) num = num * 10 + (c - '0');
  long long den = 1;
  for (char c : frac_part) {
    num = num * 10 + (c - '0');
    den *= 10;
  }
  if (negative) num = -num;
  return of_rational(num, den);
}

CanonicalNumber CanonicalNumber::of_text(std::string_view raw) {
  CanonicalNumber n;
  n.numeric_ = false;
  n.text_ = trim(raw);
  return n;
}

std::optional<CanonicalNumber> CanonicalNumber::canonicalize(std::string_view raw) {
  if (auto numeric = parse_numeric(raw)) return numeric;
  CanonicalNumber text = of_text(raw);
  if (text.text_.empty()) return std::nullopt;
  return text;
}

CanonicalNumber CanonicalNumber::of_rational(long long num, long long den) {
  long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  CanonicalNumber n;
  n.numeric_ = true;
  n.num_ = num;
  n.den_ = den;
  n.text_ = render_rational(num, den);
  return n;
}

double CanonicalNumber::as_double() const {
  return static_cast<double>(num_) / static_cast<double>(den_);
}

bool CanonicalNumber::equals(const CanonicalNumber& other, double rel_tol) const {
  if (numeric_ != other.numeric_) return false;
  if (!numeric_) return text_ == other.text_;
  if (static_cast<__int128>(num_) * other.den_ == static_cast<__int128>(other.num_) * den_) {
    return true;
  }
  double a = as_double();
  double b = other.as_double();
  return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace prefforge
