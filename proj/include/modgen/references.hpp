#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"
#include "modgen/matrix.hpp"
#include "modgen/pipeline.hpp"
#include "modgen/quadrature.hpp"
#include "modgen/smearing.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace modgen {

using Intervals = std::vector<std::pair<double, double>>;

// ---- closed-form wedge elements ------------------------------------------

/// Smeared Bisognano-Wichmann elements of the right wedge [0, ∞):
/// sym = π m (x_i + x_j) E, skew = -π (x_i² - x_j²)/(2σ²) E, E = exp(-(x_i - x_j)²/(4σ²)).
inline SymSkew wedge_smeared_elements(double m, const std::vector<double>& peaks, double sigma, int digits = 30)
{
    ScopedPrecision guard(digits);
    const std::size_t p = peaks.size();
    SymSkew out{BigMatrix(p, p), BigMatrix(p, p)};
    BigReal pi = BigReal::pi();
    BigReal bm = BigReal::decimal(m);
    BigReal s = BigReal::decimal(sigma);
    std::vector<BigReal> x;
    for (double v : peaks) x.push_back(BigReal::decimal(v));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            BigReal d = x[i] - x[j];
            BigReal e = exp(-(d * d) / (s * s * 4.0));
            out.sym(i, j) = pi * bm * (x[i] + x[j]) * e;
            out.skew(i, j) = -(pi * (x[i] * x[i] - x[j] * x[j]) / (s * s * 2.0)) * e;
        }
    out.sym.set_structure(Structure::symmetric);
    out.skew.set_structure(Structure::skew);
    return out;
}

// ---- profile functions z'(x)^{-1} ------------------------------------------

template <class Real>
Real profile_single_cone_cylinder(double l, double w, const Real& x)
{
    using std::cos;
    using std::sin;
    const double pi = std::numbers::pi;
    if (!(l > w && w > 0)) throw DomainError("single cone profile needs l > w > 0");
    Real c = cos(x * (2 * pi / l));
    return (c - std::cos(pi * w / l)) * (l / (2 * pi) / std::sin(pi * w / l));
}

template <>
inline BigReal profile_single_cone_cylinder<BigReal>(double l, double w, const BigReal& x)
{
    if (!(l > w && w > 0)) throw DomainError("single cone profile needs l > w > 0");
    ScopedPrecision guard(PrecisionBits{x.bits()});
    BigReal pi = BigReal::pi();
    BigReal bl = BigReal::decimal(l), bw = BigReal::decimal(w);
    return bl / (pi * 2.0) * csc(pi * bw / bl) * (cos(pi * x * 2.0 / bl) - cos(pi * bw / bl));
}

/// Symmetric two-cone layout [-3l/8, -l/8] ∪ [l/8, 3l/8]: -(l/4π) cos(4πx/l).
template <class Real>
Real profile_two_cones_cylinder(double l, const Real& x)
{
    using std::cos;
    const double pi = std::numbers::pi;
    return cos(x * (4 * pi / l)) * (-l / (4 * pi));
}

template <>
inline BigReal profile_two_cones_cylinder<BigReal>(double l, const BigReal& x)
{
    ScopedPrecision guard(PrecisionBits{x.bits()});
    BigReal pi = BigReal::pi();
    BigReal bl = BigReal::decimal(l);
    return -(bl / (pi * 4.0)) * cos(pi * x * 4.0 / bl);
}

/// x + l/2 reduced to [-l/2, l/2).
inline double v_map(double l, double x)
{
    double y = x + l / 2;
    y -= l * std::floor((y + l / 2) / l);
    return y;
}

inline bool is_symmetric_two_cones(const Intervals& iv, double l)
{
    if (iv.size() != 2) return false;
    auto near = [&](double a, double b) { return std::abs(a - b) <= 1e-12 * l; };
    return near(iv[0].first, -3 * l / 8) && near(iv[0].second, -l / 8) && near(iv[1].first, l / 8) &&
           near(iv[1].second, 3 * l / 8);
}

/// Minkowski double cone [-w/2, w/2]: ((w/2)² - x²)/w.
template <class Real>
Real profile_minkowski_cone(double w, const Real& x)
{
    return (x * x * -1.0 + w * w / 4) / w;
}

/// Intersection-of-wedges bound min(x + w/2, -x + w/2).
template <class Real>
Real wedge_bound_profile(double w, const Real& x)
{
    Real a = x + w / 2;
    Real b = x * -1.0 + w / 2;
    return a < b ? a : b;
}

// ---- multi-interval z(x) -----------------------------------------------------

/// z'(x) = (π/l) Σ_j [cot(π(x - a_j)/l) - cot(π(x - b_j)/l)], real on the real line.
inline double general_z_prime(const Intervals& iv, double l, double x)
{
    const double pi = std::numbers::pi;
    double s = 0;
    for (auto [a, b] : iv) s += 1 / std::tan(pi * (x - a) / l) - 1 / std::tan(pi * (x - b) / l);
    return pi / l * s;
}

inline BigReal general_z_prime(const Intervals& iv, double l, const BigReal& x)
{
    ScopedPrecision guard(PrecisionBits{x.bits()});
    BigReal pi = BigReal::pi();
    BigReal bl = BigReal::decimal(l);
    BigReal s = BigReal::with_bits(x.bits());
    for (auto [a, b] : iv)
        s += cot(pi * (x - BigReal::decimal(a)) / bl) - cot(pi * (x - BigReal::decimal(b)) / bl);
    return pi / bl * s;
}

/// z(x) from the product formula at x + iε, Richardson-extrapolated to ε → 0⁺.
/// The logarithm is taken factor by factor, so the imaginary part is
/// continuous away from the interval endpoints.
inline std::complex<double> general_z(const Intervals& iv, double l, double x, double eps = 1e-6)
{
    const double pi = std::numbers::pi;
    const std::complex<double> I(0, 1);
    auto at = [&](double e) {
        std::complex<double> q = std::exp(2.0 * pi * I * std::complex<double>(x, e) / l);
        std::complex<double> z = iv.size() % 2 == 0 ? std::complex<double>(0, pi) : 0.0; // (-1)^(n-1)
        for (auto [a, b] : iv) {
            std::complex<double> ea = std::exp(2.0 * pi * I * a / l);
            std::complex<double> eb = std::exp(2.0 * pi * I * b / l);
            z += std::log(q - ea) - std::log(eb - q);
        }
        return z;
    };
    std::complex<double> z1 = at(eps), z2 = at(eps / 2), z4 = at(eps / 4);
    // first- and second-order Richardson in ε
    std::complex<double> r1 = 2.0 * z2 - z1, r2 = 2.0 * z4 - z2;
    return (4.0 * r2 - r1) / 3.0;
}

/// Re z(x) = log|Π sin(π(x - a_j)/l) / sin(π(b_j - x)/l)|.
inline double general_z_real(const Intervals& iv, double l, double x)
{
    const double pi = std::numbers::pi;
    double s = 0;
    for (auto [a, b] : iv) s += std::log(std::abs(std::sin(pi * (x - a) / l))) - std::log(std::abs(std::sin(pi * (b - x) / l)));
    return s;
}

/// Non-trivial solutions y = v_k(x) of z(y) = z(x), one per other region
/// component (x inside the region) or other complement component (x outside).
/// Positions are reported in [-l/2, l/2).
inline std::vector<double> solve_vk(const Intervals& iv, double l, double x)
{
    auto reduce = [&](double t) { return t - l * std::floor((t + l / 2) / l); };
    x = reduce(x);
    // components on the circle as (start, end) with start < end, possibly end > l/2
    std::vector<std::pair<double, double>> region(iv.begin(), iv.end()), comp;
    for (std::size_t k = 0; k < iv.size(); ++k) {
        double s = iv[k].second;
        double e = k + 1 < iv.size() ? iv[k + 1].first : iv[0].first + l;
        if (e > s) comp.emplace_back(s, e);
    }
    auto contains = [&](const std::pair<double, double>& c, double t) {
        for (double shift : {0.0, l, -l})
            if (t + shift > c.first && t + shift < c.second) return true;
        return false;
    };
    bool inside = false;
    for (const auto& c : region) inside = inside || contains(c, x);
    const auto& pool = inside ? region : comp;
    const double target = general_z_real(iv, l, x);
    std::vector<double> out;
    for (const auto& c : pool) {
        if (contains(c, x)) continue;
        double lo = c.first, hi = c.second;
        double margin = 1e-14 * l;
        double flo = general_z_real(iv, l, lo + margin) - target;
        double fhi = general_z_real(iv, l, hi - margin) - target;
        if (!(flo < 0 && fhi > 0) && !(flo > 0 && fhi < 0))
            throw RootNotBracketed("no sign change of z(y) - z(x) on component [" + std::to_string(lo) + ", " +
                                   std::to_string(hi) + "]");
        bool increasing = fhi > flo;
        lo += margin;
        hi -= margin;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * l; ++it) {
            double mid = 0.5 * (lo + hi);
            double f = general_z_real(iv, l, mid) - target;
            ((f < 0) == increasing ? lo : hi) = mid;
        }
        out.push_back(reduce(0.5 * (lo + hi)));
    }
    return out;
}

// ---- smeared reference elements --------------------------------------------

struct ReferenceKernel {
    enum class Kind { wedge, cylinder_cones, minkowski_cone, wedge_bound };
    Kind kind = Kind::cylinder_cones;
    Intervals intervals;
    double period = 0; // l for cylinder kinds
    int xi = 1;
    double width = 0;  // w for the Minkowski cone and the wedge bound
    double mass = 0;   // wedge only

    std::string name() const
    {
        switch (kind) {
        case Kind::wedge: return "wedge";
        case Kind::cylinder_cones: return intervals.size() == 1 ? "cylinder_cone" : "cylinder_cones";
        case Kind::minkowski_cone: return "minkowski_cone";
        case Kind::wedge_bound: return "wedge_bound";
        }
        return "unknown";
    }
};

namespace detail {

struct ProfilePair {
    std::function<BigReal(const BigReal&)> p, dp;
};

inline ProfilePair reference_profile(const ReferenceKernel& k)
{
    using Kind = ReferenceKernel::Kind;
    switch (k.kind) {
    case Kind::wedge:
        return {[](const BigReal& x) { return x; }, [](const BigReal& x) { return x * 0.0 + 1.0; }};
    case Kind::minkowski_cone: {
        double w = k.width;
        return {[w](const BigReal& x) { return profile_minkowski_cone(w, x); },
                [w](const BigReal& x) { return x * (-2.0 / w); }};
    }
    case Kind::wedge_bound: {
        double w = k.width;
        return {[w](const BigReal& x) { return wedge_bound_profile(w, x); },
                [](const BigReal& x) { return x * 0.0 + (x < 0 ? 1.0 : -1.0); }};
    }
    case Kind::cylinder_cones:
        break;
    }
    const double l = k.period;
    if (k.intervals.size() == 1) {
        double c = 0.5 * (k.intervals[0].first + k.intervals[0].second);
        double w = k.intervals[0].second - k.intervals[0].first;
        return {[l, w, c](const BigReal& x) { return profile_single_cone_cylinder(l, w, x - c); },
                [l, w, c](const BigReal& x) {
                    ScopedPrecision guard(PrecisionBits{x.bits()});
                    BigReal pi = BigReal::pi();
                    BigReal bl = BigReal::decimal(l);
                    return -csc(pi * BigReal::decimal(w) / bl) * sin(pi * (x - c) * 2.0 / bl);
                }};
    }
    if (is_symmetric_two_cones(k.intervals, l)) {
        return {[l](const BigReal& x) { return profile_two_cones_cylinder(l, x); },
                [l](const BigReal& x) {
                    ScopedPrecision guard(PrecisionBits{x.bits()});
                    BigReal pi = BigReal::pi();
                    return sin(pi * x * 4.0 / BigReal::decimal(l));
                }};
    }
    // general layout: p = 1/z', p' = -z''/z'² with z'' from the cot sum
    auto iv = k.intervals;
    return {[iv, l](const BigReal& x) { return 1.0 / general_z_prime(iv, l, x); },
            [iv, l](const BigReal& x) {
                ScopedPrecision guard(PrecisionBits{x.bits()});
                BigReal pi = BigReal::pi();
                BigReal bl = BigReal::decimal(l);
                BigReal zpp = BigReal::with_bits(x.bits());
                for (auto [a, b] : iv) {
                    BigReal ca = csc(pi * (x - BigReal::decimal(a)) / bl);
                    BigReal cb = csc(pi * (x - BigReal::decimal(b)) / bl);
                    zpp += cb * cb - ca * ca;
                }
                zpp *= pi * pi / (bl * bl);
                BigReal zp = general_z_prime(iv, l, x);
                return -zpp / (zp * zp);
            }};
}

} // namespace detail

struct ReferenceOptions {
    int digits = 30;
    double rel_tol = 1e-14;
};

/// Smeared reference elements split into (sym, skew):
///   local δ' term  ∫ h_i(x) [∂_y(π(p(x) + p(y)) h_j(y))]_{y=x} dx      (skew)
///   bilocal term   ∫ h_i(x) c(x) h_j(v(x)) dx                         (two or more cones)
///   zero mode      ∫ h_i(x) c₀(x) h_j(s₁ - x) dx                       (ξ = 0, one interval; sym)
/// The wedge kind uses its closed form.
inline SymSkew reference_smeared_elements(const ReferenceKernel& k, const SmearSpec& spec, const ReferenceOptions& opt = {})
{
    using Kind = ReferenceKernel::Kind;
    if (k.kind == Kind::wedge) return wedge_smeared_elements(k.mass, spec.peaks, spec.sigma, opt.digits);

    ScopedPrecision guard(opt.digits);
    const mpfr_prec_t bits = default_bits();
    TestFunctions tf(spec, bits);
    const std::size_t np = tf.size();
    SymSkew out{BigMatrix(np, np), BigMatrix(np, np)};
    const BigReal pi = BigReal::pi();
    QuadOptions<BigReal> q;
    q.rel_tol = BigReal::decimal(opt.rel_tol);
    q.abs_tol = BigReal::decimal(opt.rel_tol * 1e-3);

    const bool cyl = spec.kind == SmearKind::theta;
    const double l = k.period;
    const double reach = spec.sigma * std::sqrt(2.0 * (opt.digits + 2) * std::log(10.0));
    // integration window around a centre: one period on the cylinder, ±reach on the line
    auto window = [&](double centre) -> std::pair<BigReal, BigReal> {
        if (cyl) return {BigReal::decimal(centre - l / 2), BigReal::decimal(centre + l / 2)};
        return {BigReal::decimal(centre - reach), BigReal::decimal(centre + reach)};
    };

    auto prof = detail::reference_profile(k);
    // local term
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = i + 1; j < np; ++j) {
            double centre = 0.5 * (spec.peaks[i] + spec.peaks[j]);
            if (cyl) {
                // nearest image of peak j to peak i
                double d = spec.peaks[j] - spec.peaks[i];
                d -= l * std::round(d / l);
                centre = spec.peaks[i] + 0.5 * d;
            }
            auto [a, b] = window(centre);
            BigReal v = integrate(
                [&](const BigReal& x) {
                    return tf.value(i, x) * pi * (prof.dp(x) * tf.value(j, x) + prof.p(x) * tf.derivative(j, x) * 2.0);
                },
                a, b, q);
            out.skew(i, j) = v;
            out.skew(j, i) = -v;
        }

    if (k.kind == Kind::cylinder_cones && k.intervals.size() >= 2) {
        const bool symmetric_layout = is_symmetric_two_cones(k.intervals, l);
        const BigReal bl = BigReal::decimal(l);
        const BigReal coef = pi * pi * 2.0 / bl;
        for (std::size_t i = 0; i < np; ++i)
            for (std::size_t j = 0; j < np; ++j) {
                auto [a, b] = window(spec.peaks[i]);
                auto term = [&](const BigReal& x, const BigReal& y, bool sym_part) {
                    // y is v(x) shifted by whole periods so that y - x ∈ (-l, l)
                    BigReal theta = pi * (x - y) / bl;
                    BigReal py = prof.p(y);
                    if (k.xi == 1) return sym_part ? BigReal::with_bits(bits) : -coef * csc(theta) * py * tf.value(j, y);
                    return sym_part ? coef * py * tf.value(j, y) : -coef * cot(theta) * py * tf.value(j, y);
                };
                auto integrand = [&](const BigReal& x, bool sym_part) {
                    BigReal total = BigReal::with_bits(bits);
                    if (symmetric_layout) {
                        total = term(x, x + bl / 2.0, sym_part);
                    } else {
                        for (double y : solve_vk(k.intervals, l, x.to_double())) {
                            BigReal by = BigReal::decimal(y);
                            // keep the branch continuous in x: y within half a period of x + l/2
                            double shift = std::round((x.to_double() + l / 2 - y) / l);
                            by += bl * shift;
                            total += term(x, by, sym_part);
                        }
                    }
                    return tf.value(i, x) * total;
                };
                out.skew(i, j) += integrate([&](const BigReal& x) { return integrand(x, false); }, a, b, q);
                if (k.xi == 0) out.sym(i, j) += integrate([&](const BigReal& x) { return integrand(x, true); }, a, b, q);
            }
    }

    if (k.kind == Kind::cylinder_cones && k.xi == 0) {
        if (k.intervals.size() != 1) throw ConfigMismatch("the zero-mode reference is implemented for a single interval");
        const double s1 = k.intervals[0].first + k.intervals[0].second;
        const double w1 = k.intervals[0].second - k.intervals[0].first;
        const BigReal bl = BigReal::decimal(l);
        const BigReal bs1 = BigReal::decimal(s1);
        const BigReal cw = cos(pi * BigReal::decimal(w1) / bl);
        const BigReal sw = sin(pi * BigReal::decimal(w1) / bl);
        for (std::size_t i = 0; i < np; ++i)
            for (std::size_t j = i; j < np; ++j) {
                auto [a, b] = window(spec.peaks[i]);
                BigReal v = integrate(
                    [&](const BigReal& x) {
                        BigReal y = bs1 - x;
                        return tf.value(i, x) * pi * (cos(pi * (x - y) / bl) - cw) / sw * tf.value(j, y);
                    },
                    a, b, q);
                out.sym(i, j) += v;
                if (j != i) out.sym(j, i) += v;
            }
    }
    out.sym.set_structure(Structure::symmetric);
    out.skew.set_structure(Structure::skew);
    return out;
}

} // namespace modgen
