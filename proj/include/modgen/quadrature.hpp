#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace modgen {

template <class Real>
struct GaussRule {
    std::vector<Real> nodes;   // on [-1, 1], ascending
    std::vector<Real> weights;
};

namespace detail {

template <class Real>
mpfr_prec_t scalar_bits(const Real& x)
{
    if constexpr (std::is_same_v<Real, BigReal>) return x.bits();
    else return 53;
}

template <class Real>
int scalar_digits(const Real& x)
{
    if constexpr (std::is_same_v<Real, BigReal>) return x.digits();
    else return 15;
}

template <class Real>
Real make_real(double v, mpfr_prec_t bits)
{
    if constexpr (std::is_same_v<Real, BigReal>) {
        BigReal r = BigReal::with_bits(bits);
        r += v;
        return r;
    } else {
        (void)bits;
        return v;
    }
}

template <class Real>
Real scalar_pow10(double e, mpfr_prec_t bits)
{
    if constexpr (std::is_same_v<Real, BigReal>) {
        ScopedPrecision guard(PrecisionBits{bits});
        return pow10(e);
    } else {
        (void)bits;
        return std::pow(10.0, e);
    }
}

// P_n(x) and P_n'(x) by the three-term recurrence.
template <class Real>
std::pair<Real, Real> legendre(int n, const Real& x)
{
    Real p0 = x * 0.0 + 1.0;
    Real p1 = x;
    for (int k = 2; k <= n; ++k) {
        Real p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = std::move(p1);
        p1 = std::move(p2);
    }
    Real dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

template <class Real>
GaussRule<Real> compute_gauss_legendre(int n, mpfr_prec_t bits)
{
    using std::abs;
    GaussRule<Real> rule;
    rule.nodes.resize(n, make_real<Real>(0.0, bits));
    rule.weights.resize(n, make_real<Real>(0.0, bits));
    // a few dozen ulps; Newton stalls at rounding level once converged
    const Real eps = scalar_pow10<Real>(-(static_cast<double>(bits) - 6.0) * std::log10(2.0), bits);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Real x = make_real<Real>(std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5)), bits);
        Real dp = make_real<Real>(0.0, bits);
        for (int it = 0; it < 200; ++it) {
            auto [p, d] = legendre(n, x);
            Real dx = p / d;
            x -= dx;
            dp = d;
            if (abs(dx) <= eps) {
                dp = legendre(n, x).second;
                break;
            }
            if (it == 199) throw NonConvergence("Gauss-Legendre node iteration did not converge");
        }
        Real w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = make_real<Real>(0.0, bits);
    return rule;
}

} // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1] at the given precision, cached per thread.
template <class Real>
const GaussRule<Real>& gauss_legendre(int n, mpfr_prec_t bits = 53)
{
    thread_local std::map<std::pair<int, mpfr_prec_t>, std::unique_ptr<GaussRule<Real>>> cache;
    auto key = std::make_pair(n, bits);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    auto rule = std::make_unique<GaussRule<Real>>(detail::compute_gauss_legendre<Real>(n, bits));
    return *cache.emplace(key, std::move(rule)).first->second;
}

template <class Real>
struct QuadOptions {
    std::optional<Real> rel_tol; // default 10^(-0.75 p)
    std::optional<Real> abs_tol; // default rel_tol times a one-panel estimate of ∫|f|
    int order = 0;               // default clamp(0.6 p, 20, 160)
    int max_depth = 48;
};

inline int default_quadrature_order(int digits) { return std::clamp(static_cast<int>(0.6 * digits), 20, 160); }

namespace detail {

template <class Real, class F>
Real gauss_panel(F& f, const Real& a, const Real& b, const GaussRule<Real>& rule)
{
    Real half = (b - a) / 2.0;
    Real mid = (a + b) / 2.0;
    Real sum = a * 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        Real x = mid + half * rule.nodes[k];
        Real fx = f(x);
        fma_acc(sum, rule.weights[k], fx);
    }
    return sum * half;
}

template <class Real, class F>
Real adaptive(F& f, const Real& a, const Real& b, const Real& whole, const GaussRule<Real>& rule,
              const Real& rel, const Real& abs_floor, int depth, int max_depth)
{
    using std::abs;
    Real mid = (a + b) / 2.0;
    Real left = gauss_panel(f, a, mid, rule);
    Real right = gauss_panel(f, mid, b, rule);
    Real both = left + right;
    Real err = abs(both - whole);
    if (err <= rel * abs(both) || err <= abs_floor) return both;
    if (depth >= max_depth)
        throw QuadratureFailure("adaptive quadrature reached depth " + std::to_string(max_depth) +
                                " on [" + to_short_string(a) + ", " + to_short_string(b) + "], error estimate " +
                                to_short_string(err));
    Real l = adaptive(f, a, mid, left, rule, rel, abs_floor, depth + 1, max_depth);
    Real r = adaptive(f, mid, b, right, rule, rel, abs_floor, depth + 1, max_depth);
    return l + r;
}

} // namespace detail

/// ∫_a^b f(x) dx by Gauss-Legendre panels with recursive bisection. The
/// working precision is that of a. A panel is accepted when a one-level
/// refinement changes it by less than the tolerance.
template <class Real, class F>
Real integrate(F&& f, const Real& a, const Real& b, const QuadOptions<Real>& opts = {})
{
    using std::abs;
    const mpfr_prec_t bits = detail::scalar_bits(a);
    const int p = bits_to_digits(bits);
    std::optional<ScopedPrecision> guard;
    if constexpr (std::is_same_v<Real, BigReal>) guard.emplace(PrecisionBits{bits});
    if (a == b) return a * 0.0;
    const int order = opts.order > 0 ? opts.order : default_quadrature_order(p);
    const auto& rule = gauss_legendre<Real>(order, bits);
    const Real rel = opts.rel_tol ? *opts.rel_tol : detail::scalar_pow10<Real>(-0.75 * p, bits);
    Real whole = detail::gauss_panel(f, a, b, rule);
    Real abs_floor = a * 0.0;
    if (opts.abs_tol) {
        abs_floor = *opts.abs_tol;
    } else {
        // Scale for integrands that cancel: rel times an estimate of ∫|f|.
        auto g = [&f](const Real& x) { using std::abs; return abs(f(x)); };
        abs_floor = rel * detail::gauss_panel(g, a, b, rule);
    }
    return detail::adaptive(f, a, b, whole, rule, rel, abs_floor, 0, opts.max_depth);
}

} // namespace modgen
