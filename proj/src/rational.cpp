#include "ergolock/rational.hpp"

#include <cctype>

#include "ergolock/errors.hpp"

namespace ergolock {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = trim(text);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational out;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = trim(s.substr(0, slash));
    auto den = trim(s.substr(slash + 1));
    if (!all_digits(num) || !all_digits(den))
      throw Error(ErrorKind::InvalidArgument, "parse_rational", "malformed '" + std::string(text) + "'");
    mpz_class d{std::string(den)};
    if (d == 0) throw Error(ErrorKind::InvalidArgument, "parse_rational", "zero denominator");
    out = Rational(mpz_class(std::string(num)), d);
  } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
    auto ip = s.substr(0, dot);
    auto fp = s.substr(dot + 1);
    if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)) || (ip.empty() && fp.empty()))
      throw Error(ErrorKind::InvalidArgument, "parse_rational", "malformed '" + std::string(text) + "'");
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, fp.size());
    mpz_class whole{ip.empty() ? std::string("0") : std::string(ip)};
    mpz_class frac{fp.empty() ? std::string("0") : std::string(fp)};
    out = Rational(whole * scale + frac, scale);
  } else {
    if (!all_digits(s))
      throw Error(ErrorKind::InvalidArgument, "parse_rational", "malformed '" + std::string(text) + "'");
    out = Rational(mpz_class(std::string(s)));
  }
  out.canonicalize();
  return negative ? Rational(-out) : out;
}

std::string to_string(const Rational& q) {
  Rational c = q;
  c.canonicalize();
  return c.get_str();
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::TooFar: return "TooFar";
    case ErrorKind::CellMismatch: return "CellMismatch";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::NotCloseable: return "NotCloseable";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::NetTooLarge: return "NetTooLarge";
    case ErrorKind::InfeasibleCertificate: return "InfeasibleCertificate";
    case ErrorKind::SplitStalled: return "SplitStalled";
    case ErrorKind::GapTooSmall: return "GapTooSmall";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::CacheMismatch: return "CacheMismatch";
  }
  return "Unknown";
}

}  // namespace ergolock
