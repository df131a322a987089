#pragma once

#include <mpfr.h>

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace modgen {

/// Bits needed so that one rounding has relative error below 10^(1 - digits).
inline mpfr_prec_t digits_to_bits(int digits)
{
    if (digits < 1) digits = 1;
    return static_cast<mpfr_prec_t>(std::ceil(digits * 3.321928094887362)) + 4;
}

inline int bits_to_digits(mpfr_prec_t bits)
{
    return static_cast<int>(std::floor((bits - 4) / 3.321928094887362));
}

namespace detail {
inline mpfr_prec_t& thread_default_bits()
{
    thread_local mpfr_prec_t bits = digits_to_bits(30);
    return bits;
}
} // namespace detail

inline mpfr_prec_t default_bits() { return detail::thread_default_bits(); }
inline int default_digits() { return bits_to_digits(default_bits()); }

struct PrecisionBits {
    mpfr_prec_t value;
};

/// Sets the working precision for values created on this thread until the
/// guard goes out of scope. Precision of existing values is unaffected.
class ScopedPrecision {
public:
    explicit ScopedPrecision(int digits) : ScopedPrecision(PrecisionBits{digits_to_bits(digits)}) {}
    explicit ScopedPrecision(PrecisionBits b) : saved_(detail::thread_default_bits())
    {
        detail::thread_default_bits() = b.value;
    }
    ~ScopedPrecision() { detail::thread_default_bits() = saved_; }
    ScopedPrecision(const ScopedPrecision&) = delete;
    ScopedPrecision& operator=(const ScopedPrecision&) = delete;

private:
    mpfr_prec_t saved_;
};

/// Arbitrary-precision real backed by an MPFR value. Arithmetic between two
/// BigReals is carried out at the smaller of the operand precisions.
class BigReal {
public:
    BigReal() { init(default_bits()); mpfr_set_zero(v_, 1); }
    BigReal(int x) { init(default_bits()); mpfr_set_si(v_, x, MPFR_RNDN); }
    BigReal(long x) { init(default_bits()); mpfr_set_si(v_, x, MPFR_RNDN); }
    BigReal(unsigned long x) { init(default_bits()); mpfr_set_ui(v_, x, MPFR_RNDN); }
    BigReal(double x) { init(default_bits()); mpfr_set_d(v_, x, MPFR_RNDN); }

    BigReal(const BigReal& o)
    {
        init(mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    BigReal(BigReal&& o) noexcept
    {
        std::memcpy(v_, o.v_, sizeof(mpfr_t));
        o.v_->_mpfr_d = nullptr;
    }
    BigReal& operator=(const BigReal& o)
    {
        if (this == &o) return *this;
        if (!v_->_mpfr_d) init(mpfr_get_prec(o.v_));
        else if (mpfr_get_prec(v_) != mpfr_get_prec(o.v_)) mpfr_set_prec(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    BigReal& operator=(BigReal&& o) noexcept
    {
        std::swap(*v_, *o.v_);
        return *this;
    }
    ~BigReal()
    {
        if (v_->_mpfr_d) mpfr_clear(v_);
    }

    /// Zero with an explicit precision in bits.
    static BigReal with_bits(mpfr_prec_t bits)
    {
        BigReal r(uninit{});
        r.init(bits);
        mpfr_set_zero(r.v_, 1);
        return r;
    }
    static BigReal with_digits(int digits) { return with_bits(digits_to_bits(digits)); }

    /// Parses a decimal (or "inf"/"nan") string at the given precision.
    static BigReal parse(std::string_view text) { return parse_bits(text, default_bits()); }
    static BigReal parse(std::string_view text, int digits) { return parse_bits(text, digits_to_bits(digits)); }
    static BigReal parse_bits(std::string_view text, mpfr_prec_t bits)
    {
        BigReal r = with_bits(bits);
        std::string s(text);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.pop_back();
        std::size_t start = s.find_first_not_of(" \t");
        if (start == std::string::npos) throw std::invalid_argument("empty numeric field");
        s = s.substr(start);
        if (mpfr_set_str(r.v_, s.c_str(), 10, MPFR_RNDN) != 0)
            throw std::invalid_argument("not a decimal number: '" + s + "'");
        return r;
    }

    /// The shortest decimal that round-trips the double, read at working precision.
    /// 0.163 becomes exactly 163/1000 rather than the nearest binary double.
    static BigReal decimal(double x) { return decimal_bits(x, default_bits()); }
    static BigReal decimal(double x, int digits) { return decimal_bits(x, digits_to_bits(digits)); }
    static BigReal decimal_bits(double x, mpfr_prec_t bits)
    {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), x);
        return parse_bits(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)), bits);
    }

    static BigReal pi(mpfr_prec_t bits)
    {
        BigReal r = with_bits(bits);
        mpfr_const_pi(r.v_, MPFR_RNDN);
        return r;
    }
    static BigReal pi() { return pi(default_bits()); }
    static BigReal euler_gamma(mpfr_prec_t bits)
    {
        BigReal r = with_bits(bits);
        mpfr_const_euler(r.v_, MPFR_RNDN);
        return r;
    }
    static BigReal log2_const(mpfr_prec_t bits)
    {
        BigReal r = with_bits(bits);
        mpfr_const_log2(r.v_, MPFR_RNDN);
        return r;
    }

    /// Same value rounded to a new precision.
    BigReal with_precision_bits(mpfr_prec_t bits) const
    {
        BigReal r = with_bits(bits);
        mpfr_set(r.v_, v_, MPFR_RNDN);
        return r;
    }
    BigReal with_precision(int digits) const { return with_precision_bits(digits_to_bits(digits)); }

    mpfr_prec_t bits() const { return mpfr_get_prec(v_); }
    int digits() const { return bits_to_digits(bits()); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    explicit operator double() const { return to_double(); }

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    /// Decimal string that reads back to the identical value at this precision.
    std::string to_string() const { return to_string(static_cast<int>(mpfr_get_str_ndigits(10, bits()))); }

    std::string to_string(int significant) const
    {
        if (mpfr_nan_p(v_)) return "nan";
        if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
        if (mpfr_zero_p(v_)) return "0";
        mpfr_exp_t exp = 0;
        char* raw = mpfr_get_str(nullptr, &exp, 10, static_cast<std::size_t>(significant), v_, MPFR_RNDN);
        std::string mant(raw);
        mpfr_free_str(raw);
        std::string sign;
        if (mant[0] == '-') {
            sign = "-";
            mant.erase(0, 1);
        }
        while (mant.size() > 1 && mant.back() == '0') mant.pop_back();
        std::string out = sign + mant.substr(0, 1);
        if (mant.size() > 1) out += "." + mant.substr(1);
        long e10 = static_cast<long>(exp) - 1;
        if (e10 != 0) out += "e" + std::to_string(e10);
        return out;
    }

    BigReal& operator+=(const BigReal& o) { return binary_inplace(o, mpfr_add); }
    BigReal& operator-=(const BigReal& o) { return binary_inplace(o, mpfr_sub); }
    BigReal& operator*=(const BigReal& o) { return binary_inplace(o, mpfr_mul); }
    BigReal& operator/=(const BigReal& o) { return binary_inplace(o, mpfr_div); }
    BigReal& operator+=(double d) { mpfr_add_d(v_, v_, d, MPFR_RNDN); return *this; }
    BigReal& operator-=(double d) { mpfr_sub_d(v_, v_, d, MPFR_RNDN); return *this; }
    BigReal& operator*=(double d) { mpfr_mul_d(v_, v_, d, MPFR_RNDN); return *this; }
    BigReal& operator/=(double d) { mpfr_div_d(v_, v_, d, MPFR_RNDN); return *this; }

    BigReal operator-() const
    {
        BigReal r(*this);
        mpfr_neg(r.v_, r.v_, MPFR_RNDN);
        return r;
    }

    friend BigReal operator+(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_add); }
    friend BigReal operator-(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_sub); }
    friend BigReal operator*(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_mul); }
    friend BigReal operator/(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_div); }

    friend BigReal operator+(BigReal a, double d) { a += d; return a; }
    friend BigReal operator-(BigReal a, double d) { a -= d; return a; }
    friend BigReal operator*(BigReal a, double d) { a *= d; return a; }
    friend BigReal operator/(BigReal a, double d) { a /= d; return a; }
    friend BigReal operator+(double d, BigReal a) { a += d; return a; }
    friend BigReal operator-(double d, const BigReal& a)
    {
        BigReal r = with_bits(a.bits());
        mpfr_d_sub(r.v_, d, a.v_, MPFR_RNDN);
        return r;
    }
    friend BigReal operator*(double d, BigReal a) { a *= d; return a; }
    friend BigReal operator/(double d, const BigReal& a)
    {
        BigReal r = with_bits(a.bits());
        mpfr_d_div(r.v_, d, a.v_, MPFR_RNDN);
        return r;
    }

    friend bool operator==(const BigReal& a, const BigReal& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend std::partial_ordering operator<=>(const BigReal& a, const BigReal& b)
    {
        if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
        int c = mpfr_cmp(a.v_, b.v_);
        return c < 0 ? std::partial_ordering::less
                     : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
    }
    friend bool operator==(const BigReal& a, double d) { return mpfr_cmp_d(a.v_, d) == 0; }
    friend std::partial_ordering operator<=>(const BigReal& a, double d)
    {
        if (mpfr_nan_p(a.v_) || std::isnan(d)) return std::partial_ordering::unordered;
        int c = mpfr_cmp_d(a.v_, d);
        return c < 0 ? std::partial_ordering::less
                     : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
    }

    friend std::ostream& operator<<(std::ostream& os, const BigReal& x) { return os << x.to_string(); }

    template <class Fn>
    friend BigReal apply_unary(const BigReal& x, Fn fn)
    {
        BigReal r = with_bits(x.bits());
        fn(r.v_, x.v_, MPFR_RNDN);
        return r;
    }

private:
    struct uninit {};
    explicit BigReal(uninit) { v_->_mpfr_d = nullptr; }

    void init(mpfr_prec_t bits) { mpfr_init2(v_, bits < MPFR_PREC_MIN ? MPFR_PREC_MIN : bits); }

    template <class Op>
    static BigReal binary(const BigReal& a, const BigReal& b, Op op)
    {
        BigReal r = with_bits(std::min(a.bits(), b.bits()));
        op(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }

    template <class Op>
    BigReal& binary_inplace(const BigReal& o, Op op)
    {
        if (o.bits() < bits()) {
            BigReal r = binary(*this, o, op);
            *this = std::move(r);
        } else {
            op(v_, v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }

    mpfr_t v_;
};

inline BigReal abs(const BigReal& x) { return apply_unary(x, mpfr_abs); }
inline BigReal sqrt(const BigReal& x) { return apply_unary(x, mpfr_sqrt); }
inline BigReal log(const BigReal& x) { return apply_unary(x, mpfr_log); }
inline BigReal log1p(const BigReal& x) { return apply_unary(x, mpfr_log1p); }
inline BigReal exp(const BigReal& x) { return apply_unary(x, mpfr_exp); }
inline BigReal expm1(const BigReal& x) { return apply_unary(x, mpfr_expm1); }
inline BigReal sin(const BigReal& x) { return apply_unary(x, mpfr_sin); }
inline BigReal cos(const BigReal& x) { return apply_unary(x, mpfr_cos); }
inline BigReal tan(const BigReal& x) { return apply_unary(x, mpfr_tan); }
inline BigReal cot(const BigReal& x) { return apply_unary(x, mpfr_cot); }
inline BigReal csc(const BigReal& x) { return apply_unary(x, mpfr_csc); }
inline BigReal sinh(const BigReal& x) { return apply_unary(x, mpfr_sinh); }
inline BigReal cosh(const BigReal& x) { return apply_unary(x, mpfr_cosh); }
inline BigReal tanh(const BigReal& x) { return apply_unary(x, mpfr_tanh); }
inline BigReal atanh(const BigReal& x) { return apply_unary(x, mpfr_atanh); }
inline BigReal atan(const BigReal& x) { return apply_unary(x, mpfr_atan); }
inline BigReal erf(const BigReal& x) { return apply_unary(x, mpfr_erf); }
inline BigReal floor(const BigReal& x) { return apply_unary(x, [](mpfr_ptr r, mpfr_srcptr a, mpfr_rnd_t) { mpfr_floor(r, a); }); }
inline BigReal round(const BigReal& x) { return apply_unary(x, [](mpfr_ptr r, mpfr_srcptr a, mpfr_rnd_t) { mpfr_round(r, a); }); }

inline BigReal pow(const BigReal& x, long k)
{
    BigReal r = BigReal::with_bits(x.bits());
    mpfr_pow_si(r.get(), x.get(), k, MPFR_RNDN);
    return r;
}

inline BigReal pow10(long k, mpfr_prec_t bits)
{
    BigReal r = BigReal::with_bits(bits);
    mpfr_ui_pow_ui(r.get(), 10, static_cast<unsigned long>(k < 0 ? -k : k), MPFR_RNDN);
    if (k < 0) mpfr_ui_div(r.get(), 1, r.get(), MPFR_RNDN);
    return r;
}

/// 10^e for a real exponent, at working precision.
inline BigReal pow10(double e)
{
    BigReal r;
    BigReal ex = BigReal::decimal(e);
    mpfr_ui_pow(r.get(), 10, ex.get(), MPFR_RNDN);
    return r;
}

inline bool isfinite(const BigReal& x) { return x.is_finite(); }
inline bool is_zero(const BigReal& x) { return x.is_zero(); }
inline bool is_zero(double x) { return x == 0.0; }
inline std::string to_short_string(const BigReal& x) { return x.to_string(6); }
inline std::string to_short_string(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}
inline bool signbit(const BigReal& x) { return mpfr_signbit(x.get()) != 0; }

inline const BigReal& max(const BigReal& a, const BigReal& b) { return a < b ? b : a; }
inline const BigReal& min(const BigReal& a, const BigReal& b) { return b < a ? b : a; }

/// acc += a * b with a single rounding.
inline void fma_acc(BigReal& acc, const BigReal& a, const BigReal& b)
{
    mpfr_fma(acc.get(), a.get(), b.get(), acc.get(), MPFR_RNDN);
}
inline void fma_acc(double& acc, double a, double b) { acc = std::fma(a, b, acc); }

/// (x, y) <- (c x - s y, s x + c y), in place.
inline void rotate_pair(BigReal& x, BigReal& y, const BigReal& c, const BigReal& s)
{
    thread_local BigReal t1, t2;
    if (t1.bits() != x.bits()) {
        mpfr_set_prec(t1.get(), x.bits());
        mpfr_set_prec(t2.get(), x.bits());
    }
    // t2 = s x, t1 = c x, x = -(s y - t1), y = c y + t2
    mpfr_mul(t2.get(), s.get(), x.get(), MPFR_RNDN);
    mpfr_mul(t1.get(), c.get(), x.get(), MPFR_RNDN);
    mpfr_fms(x.get(), s.get(), y.get(), t1.get(), MPFR_RNDN);
    mpfr_neg(x.get(), x.get(), MPFR_RNDN);
    mpfr_fma(y.get(), c.get(), y.get(), t2.get(), MPFR_RNDN);
}
inline void rotate_pair(double& x, double& y, double c, double s)
{
    double nx = c * x - s * y;
    y = s * x + c * y;
    x = nx;
}

} // namespace modgen
