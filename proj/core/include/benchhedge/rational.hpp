#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace benchhedge {

// Exact rational scalar for the tree laboratory. Arithmetic is checked
// against 64-bit overflow through 128-bit intermediates; trees are small so
// denominators stay modest.
class Rational {
public:
    Rational() = default;
    Rational(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    static Rational from_string(const std::string& text);
    // Smallest-denominator rational within |x| * 1e-12 (continued fractions);
    // recovers decimal literals like 0.4 exactly.
    static Rational from_double(double x);

    long long num() const { return num_; }
    long long den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational operator-() const { return Rational(-num_, den_); }
    Rational operator+(const Rational& o) const {
        return Rational(checked(static_cast<__int128>(num_) * o.den_ +
                                static_cast<__int128>(o.num_) * den_),
                        checked(static_cast<__int128>(den_) * o.den_));
    }
    Rational operator-(const Rational& o) const { return *this + (-o); }
    Rational operator*(const Rational& o) const {
        return Rational(checked(static_cast<__int128>(num_) * o.num_),
                        checked(static_cast<__int128>(den_) * o.den_));
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw std::domain_error("Rational: division by zero");
        return Rational(checked(static_cast<__int128>(num_) * o.den_),
                        checked(static_cast<__int128>(den_) * o.num_));
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const {
        return static_cast<__int128>(num_) * o.den_ < static_cast<__int128>(o.num_) * den_;
    }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator<=(const Rational& o) const { return !(o < *this); }
    bool operator>=(const Rational& o) const { return !(*this < o); }

    std::string to_string() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    static long long checked(__int128 v) {
        if (v > INT64_MAX || v < INT64_MIN)
            throw std::overflow_error("Rational: 64-bit overflow; tree data too large for exact mode");
        return static_cast<long long>(v);
    }

    void normalize() {
        if (den_ == 0) throw std::domain_error("Rational: zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    long long num_ = 0;
    long long den_ = 1;
};

inline Rational Rational::from_string(const std::string& text) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    }
    return from_double(std::stod(text));
}

inline Rational Rational::from_double(double x) {
    if (x == 0.0) return Rational(0);
    const bool neg = x < 0.0;
    double v = neg ? -x : x;
    // Continued-fraction expansion, stop when the convergent matches to 1e-12.
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = v;
    for (int iter = 0; iter < 64; ++iter) {
        const double ip = std::floor(frac);
        if (ip > 9e17) throw std::overflow_error("Rational::from_double: value too large");
        const long long a = static_cast<long long>(ip);
        const long long p2 = a * p1 + p0;
        const long long q2 = a * q1 + q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double approx = static_cast<double>(p1) / static_cast<double>(q1);
        if (std::fabs(approx - v) <= 1e-12 * v) break;
        const double rem = frac - ip;
        if (rem <= 0.0) break;
        frac = 1.0 / rem;
    }
    return Rational(neg ? -p1 : p1, q1);
}

// Scalar shims so tree algorithms can be written once for double and Rational.
inline double scalar_abs(double v) { return v < 0.0 ? -v : v; }
inline Rational scalar_abs(const Rational& v) { return v < Rational(0) ? -v : v; }
inline double scalar_from_int(int v, double) { return static_cast<double>(v); }
inline Rational scalar_from_int(int v, const Rational&) { return Rational(v); }
inline double scalar_to_double(double v) { return v; }
inline double scalar_to_double(const Rational& v) { return v.to_double(); }

}  // namespace benchhedge
