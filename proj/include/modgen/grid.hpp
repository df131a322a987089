#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"
#include "modgen/matrix.hpp"
#include "modgen/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace modgen {

enum class Ambient { minkowski, cylinder };

inline const char* ambient_name(Ambient a) { return a == Ambient::minkowski ? "minkowski" : "cylinder"; }

/// Union of disjoint intervals on the time-zero slice. extent is the cutoff b
/// (Minkowski, domain [-b, b]) or the period l (cylinder, domain [-l/2, l/2)).
struct RegionSpec {
    Ambient ambient = Ambient::minkowski;
    double extent = 1.0;
    std::vector<std::pair<double, double>> intervals;

    double lower() const { return ambient == Ambient::minkowski ? -extent : -extent / 2; }
    double upper() const { return ambient == Ambient::minkowski ? extent : extent / 2; }

    /// Intervals of the domain not covered by the region, in ascending order.
    std::vector<std::pair<double, double>> complement() const
    {
        std::vector<std::pair<double, double>> out;
        double cur = lower();
        for (const auto& [a, b] : intervals) {
            if (a > cur) out.emplace_back(cur, a);
            cur = b;
        }
        if (cur < upper()) out.emplace_back(cur, upper());
        return out;
    }

    void validate() const
    {
        if (!(extent > 0)) throw InvalidRegion("region extent must be positive");
        if (intervals.empty()) throw InvalidRegion("region has no intervals");
        double prev = lower();
        for (std::size_t k = 0; k < intervals.size(); ++k) {
            auto [a, b] = intervals[k];
            if (!(a < b)) throw InvalidRegion("degenerate interval [" + std::to_string(a) + ", " + std::to_string(b) + "]");
            if (a < prev || (k > 0 && a <= prev))
                throw InvalidRegion("intervals must be sorted, disjoint and inside [" + std::to_string(lower()) + ", " +
                                    std::to_string(upper()) + "]");
            prev = b;
        }
        if (prev > upper()) throw InvalidRegion("interval exceeds the domain upper end " + std::to_string(upper()));
        if (complement().empty()) throw InvalidRegion("region has empty complement");
    }

    bool touches_boundary() const
    {
        return intervals.front().first <= lower() || intervals.back().second >= upper();
    }
};

struct GridPolicy {
    double growth = 1.2; // maximal width ratio of neighbouring outside cells (Minkowski double cones)
};

/// Box-function grid: cell k is [boundaries[k], boundaries[k+1]].
struct GridSpec {
    RegionSpec region;
    int n = 0;
    GridPolicy policy;
    mpfr_prec_t bits = 0;

    std::vector<BigReal> boundaries; // n + 1 entries
    std::vector<BigReal> normalizers;
    std::vector<bool> mask;          // true inside the region

    std::size_t size() const { return mask.size(); }
    BigReal width(std::size_t k) const { return boundaries[k + 1] - boundaries[k]; }
    BigReal lower(std::size_t k) const { return boundaries[k]; }
    BigReal upper(std::size_t k) const { return boundaries[k + 1]; }
    int digits() const { return bits_to_digits(bits); }
    Ambient ambient() const { return region.ambient; }

    GridSpec complement_mask() const
    {
        GridSpec g = *this;
        for (std::size_t k = 0; k < g.mask.size(); ++k) g.mask[k] = !mask[k];
        return g;
    }
};

namespace detail {

// cells per piece: proportional to width, remainder to the widest piece,
// at least one cell each.
inline std::vector<int> allocate_cells(const std::vector<std::pair<double, double>>& pieces, int total)
{
    std::vector<int> counts(pieces.size(), 0);
    if (static_cast<int>(pieces.size()) > total)
        throw InvalidRegion("not enough cells (" + std::to_string(total) + ") for " + std::to_string(pieces.size()) +
                            " intervals");
    double sum = 0;
    for (const auto& [a, b] : pieces) sum += b - a;
    int used = 0;
    std::size_t widest = 0;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        double w = pieces[k].second - pieces[k].first;
        counts[k] = std::max(1, static_cast<int>(std::floor(total * w / sum)));
        used += counts[k];
        if (w > pieces[widest].second - pieces[widest].first) widest = k;
    }
    counts[widest] += total - used;
    if (counts[widest] < 1) throw InvalidRegion("cell allocation failed");
    return counts;
}

inline void push_uniform(std::vector<BigReal>& out, const BigReal& a, const BigReal& b, int k)
{
    BigReal w = (b - a) / static_cast<double>(k);
    for (int j = 1; j < k; ++j) out.push_back(a + w * static_cast<double>(j));
    out.push_back(b);
}

// Widths w0 g^d_k with d_k given per cell; returns (w0, g) so that the sum is
// `length`, g <= gmax, and w0 equals `inside` whenever that is achievable.
inline std::pair<double, double> geometric_widths(const std::vector<int>& d, double length, double inside, double gmax)
{
    auto total = [&](double w0, double g) {
        double s = 0;
        for (int e : d) s += w0 * std::pow(g, e);
        return s;
    };
    double k = static_cast<double>(d.size());
    if (inside * k >= length) return {length / k, 1.0};
    if (total(inside, gmax) <= length) return {length / total(1.0, gmax), gmax};
    double lo = 1.0, hi = gmax;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (total(inside, mid) < length ? lo : hi) = mid;
    }
    double g = 0.5 * (lo + hi);
    return {inside, g};
}

inline void push_geometric(std::vector<BigReal>& out, const BigReal& a, const BigReal& b, const std::vector<int>& d,
                           double inside, double gmax)
{
    double length = (b - a).to_double();
    auto [w0, g] = geometric_widths(d, length, inside, gmax);
    BigReal cur = a;
    BigReal bw0 = BigReal::decimal(w0);
    BigReal bg = BigReal::decimal(g);
    for (std::size_t j = 0; j + 1 < d.size(); ++j) {
        cur += bw0 * pow(bg, d[j]);
        out.push_back(cur);
    }
    out.push_back(b);
}

} // namespace detail

/// Builds the box grid with n/2 cells in the region and n/2 in the complement.
inline GridSpec build_grid(const RegionSpec& region, int n, const GridPolicy& policy = {}, int digits = default_digits())
{
    region.validate();
    if (n < 2 || n % 2 != 0) throw InvalidRegion("resolution n must be even and >= 2, got " + std::to_string(n));
    if (!(policy.growth >= 1.0)) throw InvalidRegion("grid growth factor must be >= 1");

    ScopedPrecision guard(digits);
    GridSpec g;
    g.region = region;
    g.n = n;
    g.policy = policy;
    g.bits = digits_to_bits(digits);

    auto inside = region.intervals;
    auto outside = region.complement();
    auto in_counts = detail::allocate_cells(inside, n / 2);
    auto out_counts = detail::allocate_cells(outside, n / 2);

    double inside_width = 0;
    for (std::size_t k = 0; k < inside.size(); ++k)
        inside_width = std::max(inside_width, (inside[k].second - inside[k].first) / in_counts[k]);

    const bool geometric = region.ambient == Ambient::minkowski && !region.touches_boundary() && policy.growth > 1.0;

    struct Piece {
        double a, b;
        int cells;
        bool in;
    };
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k < inside.size(); ++k) pieces.push_back({inside[k].first, inside[k].second, in_counts[k], true});
    for (std::size_t k = 0; k < outside.size(); ++k)
        pieces.push_back({outside[k].first, outside[k].second, out_counts[k], false});
    std::sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });

    g.boundaries.push_back(BigReal::decimal(pieces.front().a));
    for (const auto& p : pieces) {
        BigReal a = BigReal::decimal(p.a);
        BigReal b = BigReal::decimal(p.b);
        if (p.in || !geometric || p.cells == 1) {
            detail::push_uniform(g.boundaries, a, b, p.cells);
        } else {
            std::vector<int> d(p.cells);
            bool left_end = p.a <= region.lower();
            bool right_end = p.b >= region.upper();
            for (int j = 0; j < p.cells; ++j) {
                if (left_end) d[j] = p.cells - 1 - j;
                else if (right_end) d[j] = j;
                else d[j] = std::min(j, p.cells - 1 - j);
            }
            detail::push_geometric(g.boundaries, a, b, d, inside_width, policy.growth);
        }
        for (int j = 0; j < p.cells; ++j) g.mask.push_back(p.in);
    }

    g.normalizers.reserve(n);
    for (int k = 0; k < n; ++k) {
        BigReal w = g.width(k);
        if (!(w > 0)) throw InvalidRegion("grid construction produced a non-positive cell width");
        g.normalizers.push_back(1.0 / sqrt(w));
    }
    return g;
}

/// Same grid inputs rebuilt at a different working precision.
inline GridSpec rebuild_grid(const GridSpec& g, int digits)
{
    GridSpec r = build_grid(g.region, g.n, g.policy, digits);
    r.mask = g.mask;
    return r;
}

inline BigMatrix chi_matrix(const GridSpec& g)
{
    ScopedPrecision guard(PrecisionBits{g.bits});
    BigMatrix chi(g.size(), g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.mask[k]) chi(k, k) = BigReal(1);
    chi.set_structure(Structure::symmetric);
    return chi;
}

/// ⟨e_k, h⟩ = n_k ∫ h over cell k, by adaptive quadrature.
template <class F>
std::vector<BigReal> project_function(const GridSpec& g, F&& h)
{
    ScopedPrecision guard(PrecisionBits{g.bits});
    std::vector<BigReal> out;
    out.reserve(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) out.push_back(g.normalizers[k] * integrate(h, g.boundaries[k], g.boundaries[k + 1]));
    return out;
}

/// ⟨e_k, h⟩ = n_k (H(b_k) - H(a_k)) from an antiderivative H of h.
template <class F>
std::vector<BigReal> project_antiderivative(const GridSpec& g, F&& antiderivative)
{
    ScopedPrecision guard(PrecisionBits{g.bits});
    std::vector<BigReal> values;
    values.reserve(g.boundaries.size());
    for (const auto& x : g.boundaries) values.push_back(antiderivative(x));
    std::vector<BigReal> out;
    out.reserve(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) out.push_back(g.normalizers[k] * (values[k + 1] - values[k]));
    return out;
}

} // namespace modgen
