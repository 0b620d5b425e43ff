#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace ergolock {

/// Exact arbitrary-precision rational used for all times, fibers and roof heights.
using Rational = mpq_class;

/// Parses "p/q", "p" or a decimal literal such as "0.25" (the decimal is read exactly).
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& q);

inline double to_double(const Rational& q) { return q.get_d(); }

/// Exact conversion of a finite binary64 value.
inline Rational from_double(double x) { return Rational(x); }

}  // namespace ergolock
