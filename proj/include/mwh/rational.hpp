#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mwh {

/// Exact rational arithmetic for cube geometry.
///
/// Coordinates arising in this library are dyadic rationals m*2^e plus the
/// exact thirds introduced by shifted dyadic grids, so every denominator that
/// actually occurs is of the form 3^a*2^b with small b. A reduced int64
/// fraction covers all of them without rounding.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    /// Dyadic value mantissa * 2^exp.
    static Rational dyadic(std::int64_t mantissa, int exp) {
        if (exp >= 0) return Rational(mantissa << exp, 1);
        return Rational(mantissa, std::int64_t(1) << (-exp));
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return double(num_) / double(den_); }

    bool is_dyadic() const {
        std::int64_t d = den_;
        while (d % 2 == 0) d /= 2;
        return d == 1;
    }

    Rational operator+(const Rational& o) const { return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_); }
    Rational operator-(const Rational& o) const { return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_); }
    Rational operator*(const Rational& o) const { return Rational(num_ * o.num_, den_ * o.den_); }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw std::domain_error("Rational: division by zero");
        return Rational(num_ * o.den_, den_ * o.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const { return num_ * o.den_ < o.num_ * den_; }
    bool operator<=(const Rational& o) const { return num_ * o.den_ <= o.num_ * den_; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    /// Largest integer <= value.
    std::int64_t floor() const {
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ < 0) --q;
        return q;
    }

    Rational pow(int k) const {
        Rational r(1);
        for (int i = 0; i < k; ++i) r = r * (*this);
        return r;
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    void normalize() {
        if (den_ == 0) throw std::domain_error("Rational: zero denominator");
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }

    std::int64_t num_;
    std::int64_t den_;
};

}  // namespace mwh
