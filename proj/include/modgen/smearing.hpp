#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"
#include "modgen/grid.hpp"
#include "modgen/matrix.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace modgen {

enum class SmearKind { gaussian, theta };

struct SmearSpec {
    std::vector<double> peaks;
    double sigma = 0.1;
    SmearKind kind = SmearKind::gaussian;
    double period = 0; // l, theta kind only
    int xi = 0;        // sign (-1)^(ξk) of the k-th image, theta kind only
};

/// Equally spaced peaks lo, lo + spacing, ... up to hi (inclusive within 1e-9 spacing).
inline std::vector<double> peak_lattice(double lo, double hi, double spacing)
{
    if (!(spacing > 0)) throw ConfigError("peak spacing must be positive");
    std::vector<double> out;
    for (long k = 0;; ++k) {
        double x = lo + spacing * static_cast<double>(k);
        if (x > hi + 1e-9 * spacing) break;
        out.push_back(x);
    }
    return out;
}

namespace detail {

// Range of image indices k whose Gaussian term can exceed 10^-p of the peak
// for x within one period of the peak.
inline int image_count(const SmearSpec& s, int digits)
{
    if (s.kind == SmearKind::gaussian) return 0;
    double reach = s.sigma * std::sqrt(2.0 * (digits + 1) * std::log(10.0));
    return static_cast<int>(std::ceil(reach / s.period)) + 1;
}

} // namespace detail

/// Evaluates h_i, h_i' and the antiderivative of h_i at the precision of x.
class TestFunctions {
public:
    TestFunctions(const SmearSpec& spec, mpfr_prec_t bits) : spec_(spec), bits_(bits)
    {
        if (!(spec.sigma > 0)) throw ConfigError("sigma must be positive");
        if (spec.kind == SmearKind::theta && !(spec.period > 0)) throw ConfigError("theta smearing needs a period");
        ScopedPrecision guard(PrecisionBits{bits});
        sigma_ = BigReal::decimal(spec.sigma);
        BigReal pi = BigReal::pi();
        norm_ = 1.0 / sqrt(sqrt(pi * sigma_ * sigma_));
        two_s2_ = sigma_ * sigma_ * 2.0;
        erf_scale_ = norm_ * sigma_ * sqrt(pi / 2.0);
        inv_sqrt2s_ = 1.0 / (sigma_ * sqrt(BigReal(2)));
        period_ = BigReal::decimal(spec.period);
        images_ = detail::image_count(spec, bits_to_digits(bits));
        for (double p : spec.peaks) peaks_.push_back(BigReal::decimal(p));
    }

    std::size_t size() const { return peaks_.size(); }
    const BigReal& peak(std::size_t i) const { return peaks_[i]; }
    int images() const { return images_; }

    BigReal value(std::size_t i, const BigReal& x) const
    {
        return sum_images(i, x, [&](const BigReal& d) { return exp(-(d * d) / two_s2_); });
    }

    BigReal derivative(std::size_t i, const BigReal& x) const
    {
        return sum_images(i, x, [&](const BigReal& d) { return -(d / (sigma_ * sigma_)) * exp(-(d * d) / two_s2_); });
    }

    /// ∫^x h_i, via erf.
    BigReal antiderivative(std::size_t i, const BigReal& x) const
    {
        BigReal v = sum_images(i, x, [&](const BigReal& d) { return erf(d * inv_sqrt2s_); });
        return v * erf_scale_ / norm_;
    }

private:
    template <class Term>
    BigReal sum_images(std::size_t i, const BigReal& x, Term term) const
    {
        ScopedPrecision guard(PrecisionBits{bits_});
        BigReal d = x - peaks_[i];
        if (spec_.kind == SmearKind::gaussian) return norm_ * term(d);
        BigReal sum = BigReal::with_bits(bits_);
        for (int k = -images_; k <= images_; ++k) {
            BigReal t = term(d - period_ * static_cast<double>(k));
            if (spec_.xi == 1 && (k % 2 != 0)) sum -= t;
            else sum += t;
        }
        return norm_ * sum;
    }

    SmearSpec spec_;
    mpfr_prec_t bits_;
    BigReal sigma_, norm_, two_s2_, erf_scale_, inv_sqrt2s_, period_;
    int images_ = 0;
    std::vector<BigReal> peaks_;
};

/// Row i holds ⟨e_k, h_i⟩ for every cell k.
inline BigMatrix projection_matrix(const GridSpec& g, const SmearSpec& spec)
{
    TestFunctions tf(spec, g.bits);
    ScopedPrecision guard(PrecisionBits{g.bits});
    BigMatrix h(tf.size(), g.size());
    for (std::size_t i = 0; i < tf.size(); ++i) {
        auto row = project_antiderivative(g, [&](const BigReal& x) { return tf.antiderivative(i, x); });
        for (std::size_t k = 0; k < g.size(); ++k) h(i, k) = std::move(row[k]);
    }
    return h;
}

/// Entry (i, j) = h_iᵀ M h_j.
inline BigMatrix smeared_matrix(const BigMatrix& m, const BigMatrix& projections)
{
    return multiply(multiply(projections, m), transpose(projections));
}

inline BigMatrix smeared_matrix(const BigMatrix& m, const GridSpec& g, const SmearSpec& spec)
{
    return smeared_matrix(m, projection_matrix(g, spec));
}

enum class LineKind { diagonal_offset, antidiagonal, cross_diagonal };

struct LineSpec {
    LineKind kind = LineKind::diagonal_offset;
    double parameter = 0; // offset k, center c, or position offset
    std::string part = "full";

    std::string name() const
    {
        char buf[64];
        switch (kind) {
        case LineKind::diagonal_offset: std::snprintf(buf, sizeof buf, "diagonal(%g)", parameter); break;
        case LineKind::antidiagonal: std::snprintf(buf, sizeof buf, "antidiagonal(%g)", parameter); break;
        case LineKind::cross_diagonal: std::snprintf(buf, sizeof buf, "cross(%g)", parameter); break;
        }
        return buf;
    }
};

struct SliceSeries {
    LineSpec line;
    std::vector<double> abscissa;
    std::vector<BigReal> values;
    std::vector<std::pair<std::size_t, std::size_t>> index; // (row, column) in the smeared matrix
};

/// Index pairs of a line on the peak lattice. Positions match within 1e-9
/// of the lattice scale; on the cylinder (period > 0) modulo the period.
inline std::vector<std::pair<std::size_t, std::size_t>> line_indices(const std::vector<double>& peaks, const LineSpec& line,
                                                                     double period = 0)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t p = peaks.size();
    if (line.kind == LineKind::diagonal_offset) {
        long k = std::lround(line.parameter);
        for (std::size_t j = 0; j < p; ++j) {
            long i = static_cast<long>(j) + k;
            if (i >= 0 && i < static_cast<long>(p)) out.emplace_back(static_cast<std::size_t>(i), j);
        }
    } else {
        double scale = 1;
        if (p > 1) scale = std::abs(peaks.back() - peaks.front());
        double tol = 1e-9 * std::max(scale, 1.0);
        auto same = [&](double a, double b) {
            double d = a - b;
            if (period > 0) d -= period * std::round(d / period);
            return std::abs(d) <= tol;
        };
        for (std::size_t i = 0; i < p; ++i) {
            double target = line.kind == LineKind::antidiagonal ? 2 * line.parameter - peaks[i] : peaks[i] + line.parameter;
            for (std::size_t j = 0; j < p; ++j)
                if (same(peaks[j], target)) {
                    out.emplace_back(i, j);
                    break;
                }
        }
    }
    if (out.empty()) throw IndexError("line " + line.name() + " has no points on the peak lattice");
    return out;
}

inline SliceSeries extract_slice(const BigMatrix& smeared, const std::vector<double>& peaks, const LineSpec& line,
                                 double period = 0)
{
    if (smeared.rows() != peaks.size() || smeared.cols() != peaks.size())
        throw IndexError("smeared matrix does not match the peak lattice");
    SliceSeries s;
    s.line = line;
    s.index = line_indices(peaks, line, period);
    for (auto [i, j] : s.index) {
        s.abscissa.push_back(peaks[i]);
        s.values.push_back(smeared(i, j));
    }
    return s;
}

} // namespace modgen
