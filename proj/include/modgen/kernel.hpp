#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"
#include "modgen/grid.hpp"
#include "modgen/matrix.hpp"
#include "modgen/quadrature.hpp"
#include "modgen/special.hpp"

#include <algorithm>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace modgen {

struct KernelSpec {
    Ambient ambient = Ambient::minkowski;
    double mass = 0.0;
    double extent = 1.0; // cutoff b (Minkowski) or period l (cylinder)
    int xi = 0;          // cylinder boundary condition: 0 periodic, 1 antiperiodic
    double r = 1.0;      // upper bound of the massless Minkowski antiderivatives

    double mu() const { return ambient == Ambient::cylinder ? mass * extent / (2 * std::numbers::pi) : 0.0; }

    void validate() const
    {
        if (!(mass >= 0)) throw ConfigError("mass must be >= 0");
        if (!(extent > 0)) throw ConfigError("kernel extent (b or l) must be positive");
        if (xi != 0 && xi != 1) throw ConfigError("xi must be 0 or 1");
        if (!(r > 0)) throw ConfigError("r must be positive");
    }
};

/// F0, F1 with F(x) = x F0(x) - F1(x); F' = F0 and F0' = f(-x) for the
/// convolution kernel f. Only F enters the assembled matrix.
class Antiderivatives {
public:
    virtual ~Antiderivatives() = default;
    virtual BigReal F0(const BigReal& x) const = 0;
    virtual BigReal F1(const BigReal& x) const = 0;
    virtual BigReal F(const BigReal& x) const
    {
        if (x.is_zero()) return -F1(x);
        return x * F0(x) - F1(x);
    }
};

class MinkowskiMassless : public Antiderivatives {
public:
    MinkowskiMassless(mpfr_prec_t bits, double r = 1.0) : r_(BigReal::decimal_bits(r, bits)), log_r_(log(r_)) {}
    BigReal F0(const BigReal& x) const override
    {
        if (!(x > 0)) throw DomainError("F0 requires x > 0");
        return log_r_ - log(x);
    }
    BigReal F1(const BigReal& x) const override { return r_ - x; }

private:
    BigReal r_, log_r_;
};

class MinkowskiMassive : public Antiderivatives {
public:
    MinkowskiMassive(mpfr_prec_t bits, double m) : m_(BigReal::decimal_bits(m, bits))
    {
        if (!(m > 0)) throw DomainError("massive antiderivatives need m > 0");
    }
    BigReal F0(const BigReal& x) const override
    {
        if (!(x > 0)) throw DomainError("F0 requires x > 0");
        return expint_e1(m_ * x);
    }
    BigReal F1(const BigReal& x) const override { return exp(-(m_ * x)) / m_; }

private:
    BigReal m_;
};

/// Cylinder antiderivatives with r = l/2, massless part in closed form plus
/// the mass integral over m̃ in [0, m] when m > 0. Arguments in (l/2, l] are
/// reflected: F(x) = -F(l - x) for ξ = 0 and F(x) = F(l - x) for ξ = 1.
class CylinderAntiderivatives : public Antiderivatives {
public:
    CylinderAntiderivatives(mpfr_prec_t bits, double l, int xi, double m)
        : bits_(bits), xi_(xi), l_(BigReal::decimal_bits(l, bits)), m_(BigReal::decimal_bits(m, bits)),
          pi_(BigReal::pi(bits))
    {
        half_ = l_ / 2.0;
    }

    BigReal F0(const BigReal& x) const override
    {
        ScopedPrecision guard(PrecisionBits{bits_});
        if (!(x > 0)) throw DomainError("F0 requires x > 0");
        BigReal v = xi_ == 0 ? -log(abs(sin(pi_ * x / l_))) : -log(abs(tan(pi_ * x / (l_ * 2.0))));
        if (m_ > 0) v += integrate([&](const BigReal& mt) { return f0(mt, x); }, BigReal::with_bits(bits_), m_);
        return v;
    }

    BigReal F1(const BigReal& x) const override
    {
        ScopedPrecision guard(PrecisionBits{bits_});
        BigReal lo = pi_ * x / l_;
        BigReal hi = pi_ / 2.0;
        BigReal v = BigReal::with_bits(bits_);
        if (lo != hi) {
            if (xi_ == 0) v = integrate([](const BigReal& t) { return t.is_zero() ? BigReal(1) : t * cot(t); }, lo, hi);
            else v = integrate([](const BigReal& t) { return t.is_zero() ? BigReal(1) : t * csc(t); }, lo, hi);
            v *= l_ / pi_;
        }
        if (m_ > 0) v += integrate([&](const BigReal& mt) { return f1(mt, x); }, BigReal::with_bits(bits_), m_);
        return v;
    }

    BigReal F(const BigReal& x) const override
    {
        ScopedPrecision guard(PrecisionBits{bits_});
        if (x > half_) {
            BigReal y = l_ - x;
            BigReal v = Antiderivatives::F(y);
            return xi_ == 0 ? -v : v;
        }
        if (x == half_) return BigReal::with_bits(bits_);
        return Antiderivatives::F(x);
    }

    // Integrands of the mass correction, continuous at m̃ = 0.
    BigReal f0(const BigReal& mt, const BigReal& x) const
    {
        BigReal d = half_ - x;
        if (mt.is_zero()) return xi_ == 0 ? -(d * d) / l_ : -d;
        if (xi_ == 0) {
            BigReal s = sinh(mt * d / 2.0);
            return -(s * s * 2.0) / (mt * sinh(mt * half_));
        }
        return -sinh(mt * d) / (mt * cosh(mt * half_));
    }

    BigReal f1(const BigReal& mt, const BigReal& x) const
    {
        BigReal d = half_ - x;
        if (mt.is_zero()) return xi_ == 0 ? -(x * d * d) / l_ - d * d * d / (l_ * 3.0) : -(x * d) - d * d / 2.0;
        BigReal a = x * f0(mt, x);
        if (xi_ == 0) {
            // (sinh(m̃ d)/m̃ - d) = (sinh y - y)/m̃ with y = m̃ d
            BigReal y = mt * d;
            return a - sinh_minus_identity(y) / (mt * mt * sinh(mt * half_));
        }
        BigReal s = sinh(mt * d / 2.0);
        return a - (s * s * 2.0) / (mt * mt * cosh(mt * half_));
    }

private:
    static BigReal sinh_minus_identity(const BigReal& y)
    {
        if (abs(y) >= 0.5) return sinh(y) - y;
        BigReal y2 = y * y;
        BigReal term = y * y2 / 6.0;
        BigReal sum = term;
        BigReal eps = pow10(-static_cast<long>(y.digits()) - 2, y.bits());
        for (int k = 2; k < 10000; ++k) {
            term *= y2;
            term /= static_cast<double>((2 * k) * (2 * k + 1));
            sum += term;
            if (abs(term) <= eps * abs(sum)) break;
        }
        return sum;
    }

    mpfr_prec_t bits_;
    int xi_;
    BigReal l_, m_, pi_, half_;
};

inline std::unique_ptr<Antiderivatives> make_antiderivatives(const KernelSpec& k, mpfr_prec_t bits)
{
    k.validate();
    ScopedPrecision guard(PrecisionBits{bits});
    if (k.ambient == Ambient::minkowski) {
        if (k.mass > 0) return std::make_unique<MinkowskiMassive>(bits, k.mass);
        return std::make_unique<MinkowskiMassless>(bits, k.r);
    }
    return std::make_unique<CylinderAntiderivatives>(bits, k.extent, k.xi, k.mass);
}

/// S_ij = n_i n_j (F(b_j - a_i) - F(b_j - b_i) - F(a_j - a_i) + F(a_j - b_i)) for
/// i < j, S_ji = -S_ij, zero diagonal. Each distinct argument is evaluated once.
inline BigMatrix assemble_s(const GridSpec& g, const KernelSpec& k)
{
    if (g.ambient() != k.ambient) throw ConfigMismatch("grid and kernel ambient differ");
    if (k.ambient == Ambient::cylinder && std::abs(k.extent - g.region.extent) > 1e-12 * k.extent)
        throw ConfigMismatch("cylinder period differs between grid and kernel");
    ScopedPrecision guard(PrecisionBits{g.bits});
    auto fn = make_antiderivatives(k, g.bits);
    const std::size_t n = g.size();
    const auto& x = g.boundaries;

    struct Arg {
        BigReal value;
        std::size_t slot;
    };
    std::vector<Arg> args;
    args.reserve(n * (n - 1) * 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            std::size_t base = (i * n + j) * 4;
            args.push_back({x[j + 1] - x[i], base});
            args.push_back({x[j + 1] - x[i + 1], base + 1});
            args.push_back({x[j] - x[i], base + 2});
            args.push_back({x[j] - x[i + 1], base + 3});
        }
    std::stable_sort(args.begin(), args.end(), [](const Arg& a, const Arg& b) { return a.value < b.value; });

    // Arguments that differ only by rounding share one evaluation.
    const BigReal merge = pow10(-static_cast<long>(g.digits()) + 5, g.bits) * (x.back() - x.front());
    std::vector<BigReal> values(n * n * 4, BigReal::with_bits(g.bits));
    std::size_t s = 0;
    while (s < args.size()) {
        std::size_t e = s + 1;
        while (e < args.size() && args[e].value - args[s].value <= merge) ++e;
        BigReal v = args[s].value.is_zero() || abs(args[s].value) <= merge ? fn->F(BigReal::with_bits(g.bits))
                                                                              : fn->F(args[s].value);
        for (std::size_t t = s; t < e; ++t) values[args[t].slot] = v;
        s = e;
    }

    BigMatrix S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            std::size_t base = (i * n + j) * 4;
            BigReal v = values[base] - values[base + 1] - values[base + 2] + values[base + 3];
            v *= g.normalizers[i] * g.normalizers[j];
            S(j, i) = -v;
            S(i, j) = std::move(v);
        }
    S.set_structure(Structure::skew);
    return S;
}

} // namespace modgen
