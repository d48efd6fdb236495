#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace todacert {

/// Arbitrary-precision rational, the scalar type of every exact code path.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using RatVec = std::vector<Rational>;

inline std::string to_string(const Rational& r) {
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

/// Parses "p", "-p" or "p/q" (sign on the numerator only). Throws on anything else.
inline Rational parse_rational(std::string_view text) {
    auto fail = [&] { throw std::invalid_argument("not a rational: '" + std::string(text) + "'"); };
    if (text.empty()) fail();
    const auto slash = text.find('/');
    auto parse_int = [&](std::string_view part, bool allow_sign) -> BigInt {
        if (part.empty()) fail();
        std::size_t i = 0;
        if (allow_sign && (part[0] == '-' || part[0] == '+')) i = 1;
        if (i == part.size()) fail();
        for (std::size_t k = i; k < part.size(); ++k)
            if (part[k] < '0' || part[k] > '9') fail();
        return BigInt(std::string(part));
    };
    if (slash == std::string_view::npos) return Rational(parse_int(text, true));
    const BigInt num = parse_int(text.substr(0, slash), true);
    const BigInt den = parse_int(text.substr(slash + 1), false);
    if (den == 0) fail();
    return Rational(num, den);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Best rational approximation with denominator <= max_den (continued fractions).
inline Rational rationalize(double x, std::int64_t max_den = 1000000) {
    if (!std::isfinite(x)) throw std::invalid_argument("rationalize: non-finite input");
    if (max_den < 1) throw std::invalid_argument("rationalize: max_den < 1");
    const bool neg = x < 0;
    double v = neg ? -x : x;
    // convergents p/q of the continued fraction of v
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 64; ++iter) {
        const double fl = std::floor(v);
        if (fl > 9e17) break;
        const auto a = static_cast<std::int64_t>(fl);
        if (q1 != 0 && a > (max_den - q0) / q1) break;  // next q would exceed the cap
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        const double rem = v - fl;
        if (rem < 1e-18) break;
        v = 1.0 / rem;
    }
    Rational r(p1, q1);
    return neg ? Rational(-r) : r;
}

inline Rational dot(const RatVec& a, const RatVec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline bool is_zero_vec(const RatVec& v) {
    for (const auto& x : v)
        if (x != 0) return false;
    return true;
}

// Named functions rather than operators: overloads on std::vector would take
// part in unqualified lookup next to Eigen expressions.
inline RatVec vadd(const RatVec& a, const RatVec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vadd: dimension mismatch");
    RatVec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline RatVec vneg(const RatVec& a) {
    RatVec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
    return r;
}

inline RatVec vsub(const RatVec& a, const RatVec& b) { return vadd(a, vneg(b)); }

inline RatVec vscale(const Rational& c, const RatVec& a) {
    RatVec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

}  // namespace todacert
