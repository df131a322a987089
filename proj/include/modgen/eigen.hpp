#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"
#include "modgen/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace modgen {

template <class Real>
struct SymmetricEigen {
    std::vector<Real> eigenvalues; // ascending
    Matrix<Real> Q;                // columns are eigenvectors
    int sweeps = 0;
};

template <class Real>
struct SkewCanonical {
    std::vector<Real> thetas; // ascending, one per 2x2 block
    Matrix<Real> Q;           // columns: zero block first, then (u_k, v_k) pairs
    int zero_count = 0;
};

template <class Real>
struct JacobiOptions {
    std::optional<Real> tol; // absolute off-diagonal Frobenius tolerance
    int max_sweeps = 100;
};

namespace detail {

template <class Real>
Real real_pow10(double e, int digits)
{
    if constexpr (std::is_same_v<Real, BigReal>) {
        ScopedPrecision guard(digits);
        return pow10(e);
    } else {
        (void)digits;
        return std::pow(10.0, e);
    }
}

} // namespace detail

/// 10^(-0.9 p) * ||M||_max.
template <class Real>
Real default_jacobi_tolerance(const Matrix<Real>& m)
{
    int p = matrix_digits(m);
    return detail::real_pow10<Real>(-0.9 * p, p) * max_norm(m);
}

/// Cyclic-by-row Jacobi for a symmetric matrix. Only the upper triangle is
/// read; the lower triangle is assumed to mirror it.
template <class Real>
SymmetricEigen<Real> jacobi_eigen_sym(const Matrix<Real>& m, const JacobiOptions<Real>& opts = {})
{
    using std::abs;
    using std::sqrt;
    if (!m.square()) throw std::invalid_argument("jacobi_eigen_sym: matrix not square");
    const std::size_t n = m.rows();
    const int p = matrix_digits(m);
    MatrixPrecision<Real> guard(m);

    Matrix<Real> a = m;
    Matrix<Real> q = Matrix<Real>::identity(n);
    SymmetricEigen<Real> out;

    const Real tol = opts.tol ? *opts.tol : default_jacobi_tolerance(m);
    const Real skip = tol / static_cast<double>(2 * std::max<std::size_t>(n, 1));

    auto off_norm = [&] {
        Real s(0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) fma_acc(s, a(i, j), a(i, j));
        return sqrt(s * 2.0);
    };

    int sweep = 0;
    Real theta, t, c, s, h;
    for (;; ++sweep) {
        if (off_norm() <= tol) break;
        if (sweep >= opts.max_sweeps)
            throw NonConvergence("Jacobi eigensolver did not converge in " + std::to_string(opts.max_sweeps) +
                                 " sweeps (n=" + std::to_string(n) + ", digits=" + std::to_string(p) + ")");
        for (std::size_t ip = 0; ip + 1 < n; ++ip) {
            for (std::size_t iq = ip + 1; iq < n; ++iq) {
                const Real& apq = a(ip, iq);
                if (abs(apq) <= skip) continue;
                theta = (a(iq, iq) - a(ip, ip)) / (apq * 2.0);
                t = 1.0 / (abs(theta) + sqrt(theta * theta + 1.0));
                if (theta < 0) t = -t;
                c = 1.0 / sqrt(t * t + 1.0);
                s = t * c;
                h = t * apq;
                a(ip, ip) -= h;
                a(iq, iq) += h;
                a(ip, iq) = Real(0);
                for (std::size_t k = 0; k < ip; ++k) rotate_pair(a(k, ip), a(k, iq), c, s);
                for (std::size_t k = ip + 1; k < iq; ++k) rotate_pair(a(ip, k), a(k, iq), c, s);
                for (std::size_t k = iq + 1; k < n; ++k) rotate_pair(a(ip, k), a(iq, k), c, s);
                for (std::size_t k = 0; k < n; ++k) rotate_pair(q(k, ip), q(k, iq), c, s);
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    out.eigenvalues.reserve(n);
    out.Q = Matrix<Real>(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues.push_back(a(order[k], order[k]));
        for (std::size_t i = 0; i < n; ++i) out.Q(i, k) = q(i, order[k]);
    }
    out.sweeps = sweep;
    return out;
}

/// Real canonical form of a skew matrix, obtained from the eigenvectors of
/// K = SᵀS. Accuracy of the individual 2-planes degrades to about sqrt(tol)
/// inside tight clusters of angles, which is why the pipeline uses
/// orthogonal_function_of_skew (backward stable) rather than this form.
template <class Real>
SkewCanonical<Real> skew_canonical(const Matrix<Real>& s, const JacobiOptions<Real>& opts = {})
{
    using std::abs;
    using std::sqrt;
    if (!s.square()) throw std::invalid_argument("skew_canonical: matrix not square");
    const std::size_t n = s.rows();
    const int p = matrix_digits(s);
    MatrixPrecision<Real> guard(s);

    SkewCanonical<Real> out;
    out.Q = Matrix<Real>(n, n);
    const Real snorm = max_norm(s);
    if (n == 0) return out;
    if (is_zero(snorm)) {
        out.Q = Matrix<Real>::identity(n);
        out.zero_count = static_cast<int>(n);
        return out;
    }

    Matrix<Real> k = symmetrized(multiply(transpose(s), s));
    auto eig = jacobi_eigen_sym(k, opts);

    const Real zero_cut = detail::real_pow10<Real>(-0.45 * p, p) * snorm * static_cast<double>(n);
    const Real cluster_cut = detail::real_pow10<Real>(-0.3 * p, p) * snorm;

    auto column = [&](const Matrix<Real>& m, std::size_t j) {
        std::vector<Real> v;
        v.reserve(n);
        for (std::size_t i = 0; i < n; ++i) v.push_back(m(i, j));
        return v;
    };
    auto dot = [&](const std::vector<Real>& x, const std::vector<Real>& y) {
        Real r(0);
        for (std::size_t i = 0; i < n; ++i) fma_acc(r, x[i], y[i]);
        return r;
    };
    auto apply_s = [&](const std::vector<Real>& x) {
        std::vector<Real> y(n, Real(0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) fma_acc(y[i], s(i, j), x[j]);
        return y;
    };
    auto normalize = [&](std::vector<Real>& x) {
        Real nr = sqrt(dot(x, x));
        for (auto& e : x) e /= nr;
    };

    std::vector<Real> theta(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Real& lam = eig.eigenvalues[i];
        theta[i] = lam > 0 ? sqrt(lam) : Real(0);
    }

    std::vector<std::vector<Real>> zero_vecs;
    std::vector<std::pair<std::vector<Real>, std::vector<Real>>> pairs;

    std::size_t i = 0;
    while (i < n && theta[i] <= zero_cut) zero_vecs.push_back(column(eig.Q, i++));
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && theta[j] - theta[j - 1] <= cluster_cut) ++j;
        std::size_t size = j - i;
        if (size == 2) {
            auto u = column(eig.Q, i);
            auto v = column(eig.Q, i + 1);
            // orient so that uᵀ S v > 0
            if (dot(u, apply_s(v)) < 0) std::swap(u, v);
            pairs.emplace_back(std::move(u), std::move(v));
        } else {
            // Gram-Schmidt pairing inside the cluster: (u, Sᵀu / |Sᵀu|).
            std::vector<std::vector<Real>> basis;
            for (std::size_t c = i; c < j; ++c) basis.push_back(column(eig.Q, c));
            std::vector<std::vector<Real>> taken;
            auto orth = [&](std::vector<Real>& x) {
                for (int pass = 0; pass < 2; ++pass)
                    for (const auto& t : taken) {
                        Real d = dot(x, t);
                        for (std::size_t r = 0; r < n; ++r) x[r] -= d * t[r];
                    }
            };
            for (auto& b : basis) {
                if (taken.size() + 2 > size) break;
                auto u = b;
                orth(u);
                Real nu = sqrt(dot(u, u));
                if (nu < 0.5) continue;
                for (auto& e : u) e /= nu;
                auto v = apply_s(u);
                for (auto& e : v) e = -e; // v = Sᵀu
                orth(v);
                {
                    Real d = dot(v, u);
                    for (std::size_t r = 0; r < n; ++r) v[r] -= d * u[r];
                }
                normalize(v);
                taken.push_back(u);
                taken.push_back(v);
                pairs.emplace_back(std::move(u), std::move(v));
            }
            if (taken.size() != size)
                throw NonConvergence("skew_canonical: odd-sized angle cluster, tolerance too loose");
        }
        i = j;
    }

    std::vector<std::pair<Real, std::size_t>> keyed;
    for (std::size_t k = 0; k < pairs.size(); ++k) keyed.emplace_back(dot(pairs[k].first, apply_s(pairs[k].second)), k);
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    std::size_t col = 0;
    for (const auto& z : zero_vecs) {
        for (std::size_t r = 0; r < n; ++r) out.Q(r, col) = z[r];
        ++col;
    }
    for (const auto& [t, k] : keyed) {
        out.thetas.push_back(t);
        for (std::size_t r = 0; r < n; ++r) {
            out.Q(r, col) = pairs[k].first[r];
            out.Q(r, col + 1) = pairs[k].second[r];
        }
        col += 2;
    }
    out.zero_count = static_cast<int>(zero_vecs.size());
    return out;
}

/// Q blockdiag(R(g(θ_k))) Qᵀ for a skew S, where f_cos = cos∘g and
/// f_sin = sin∘g for an odd angle map g. Evaluated as
///   C(K) + S·D(K),  K = SᵀS,  C = f_cos(√K),  D = f_sin(√K)/√K,
/// which needs only a symmetric eigensolve and stays accurate when angles
/// cluster.
template <class Real>
class SkewSpectrum {
public:
    explicit SkewSpectrum(const Matrix<Real>& s, const JacobiOptions<Real>& opts = {}) : s_(s)
    {
        using std::sqrt;
        const int p = matrix_digits(s);
        MatrixPrecision<Real> guard(s);
        Matrix<Real> k = symmetrized(multiply(transpose(s), s));
        eig_ = jacobi_eigen_sym(k, opts);
        theta_.reserve(eig_.eigenvalues.size());
        for (const auto& lam : eig_.eigenvalues) theta_.push_back(lam > 0 ? sqrt(lam) : Real(0));
        Real scale = max_norm(s);
        if (is_zero(scale)) scale = Real(1);
        small_ = detail::real_pow10<Real>(-0.25 * p, p) * scale;
    }

    template <class FCos, class FSin>
    Matrix<Real> apply(FCos f_cos, FSin f_sin) const
    {
        const std::size_t n = s_.rows();
        MatrixPrecision<Real> guard(s_);
        std::vector<Real> cv, dv;
        cv.reserve(n);
        dv.reserve(n);
        for (const auto& th : theta_) {
            cv.push_back(f_cos(th));
            // sin(g(θ))/θ has a finite limit at θ → 0; use the chord at a small h.
            const Real& arg = th > small_ ? th : small_;
            dv.push_back(f_sin(arg) / arg);
        }
        const Matrix<Real> qt = transpose(eig_.Q);
        Matrix<Real> c = multiply_diag(eig_.Q, std::span<const Real>(cv), qt);
        Matrix<Real> d = multiply_diag(eig_.Q, std::span<const Real>(dv), qt);
        Matrix<Real> r = c + multiply(s_, d);
        r.set_structure(Structure::general);
        return r;
    }

    /// exp(t S).
    Matrix<Real> exp(double t) const
    {
        return apply([t](const Real& th) { using std::cos; return cos(th * t); },
                     [t](const Real& th) { using std::sin; return sin(th * t); });
    }

    const std::vector<Real>& thetas() const { return theta_; }

private:
    Matrix<Real> s_;
    SymmetricEigen<Real> eig_;
    std::vector<Real> theta_;
    Real small_;
};

template <class Real, class FCos, class FSin>
Matrix<Real> orthogonal_function_of_skew(const Matrix<Real>& s, FCos f_cos, FSin f_sin,
                                         const JacobiOptions<Real>& opts = {})
{
    return SkewSpectrum<Real>(s, opts).apply(f_cos, f_sin);
}

template <class Real>
struct ArtanhResult {
    Matrix<Real> value;
    Real margin;                  // min_k (1 - |λ_k|)
    std::vector<Real> eigenvalues; // ascending
};

/// 10^(-0.9p + 2): a hundred times the Jacobi tolerance.
template <class Real>
Real default_margin_floor(int digits)
{
    return detail::real_pow10<Real>(-0.9 * digits + 2.0, digits);
}

template <class Real>
Real artanh_scalar(const Real& x)
{
    using std::log1p;
    return (log1p(x) - log1p(-x)) / 2.0;
}

template <class Real>
ArtanhResult<Real> artanh_sym(const Matrix<Real>& m, std::optional<Real> margin_floor = std::nullopt,
                              const JacobiOptions<Real>& opts = {})
{
    using std::abs;
    const int p = matrix_digits(m);
    MatrixPrecision<Real> guard(m);
    const Real floor_value = margin_floor ? *margin_floor : default_margin_floor<Real>(p);

    auto eig = jacobi_eigen_sym(m, opts);
    ArtanhResult<Real> out;
    out.margin = Real(1);
    std::vector<Real> f;
    f.reserve(eig.eigenvalues.size());
    for (const auto& lam : eig.eigenvalues) {
        Real gap = 1.0 - abs(lam);
        if (gap < out.margin) out.margin = gap;
    }
    if (out.margin <= floor_value) {
        std::string detail = "spectral margin " + to_short_string(out.margin) + " at or below floor " +
                             to_short_string(floor_value) + " with " + std::to_string(p) +
                             " digits; rerun with more digits";
        throw SpectrumOutOfRange(detail);
    }
    for (const auto& lam : eig.eigenvalues) f.push_back(artanh_scalar(lam));
    out.value = symmetrized(multiply_diag(eig.Q, std::span<const Real>(f), transpose(eig.Q)));
    out.eigenvalues = std::move(eig.eigenvalues);
    return out;
}

template <class Real>
Matrix<Real> tanh_sym(const Matrix<Real>& m, const JacobiOptions<Real>& opts = {})
{
    using std::tanh;
    MatrixPrecision<Real> guard(m);
    auto eig = jacobi_eigen_sym(m, opts);
    std::vector<Real> f;
    for (const auto& lam : eig.eigenvalues) f.push_back(tanh(lam));
    return symmetrized(multiply_diag(eig.Q, std::span<const Real>(f), transpose(eig.Q)));
}

} // namespace modgen
