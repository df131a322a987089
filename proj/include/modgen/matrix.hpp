#pragma once

#include "modgen/bigreal.hpp"

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <optional>
#include <type_traits>
#include <span>
#include <stdexcept>
#include <vector>

namespace modgen {

enum class Structure { general, symmetric, skew };

/// Dense row-major matrix. For BigReal entries all entries carry the
/// precision that was current when the matrix was created.
template <class Real>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Real(0)) {}

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Real(1);
        m.structure_ = Structure::symmetric;
        return m;
    }

    static Matrix diagonal(std::span<const Real> d)
    {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        m.structure_ = Structure::symmetric;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    Real& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Real& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<Real> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const Real> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<Real>& data() { return data_; }
    const std::vector<Real>& data() const { return data_; }

    /// Declared structure; see is_symmetric()/is_skew() for verification.
    Structure structure() const { return structure_; }
    void set_structure(Structure s) { structure_ = s; }

    friend bool operator==(const Matrix& a, const Matrix& b)
    {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Real> data_;
    Structure structure_ = Structure::general;
};

using BigMatrix = Matrix<BigReal>;

template <class Real>
int matrix_digits(const Matrix<Real>& m)
{
    if constexpr (std::is_same_v<Real, BigReal>) {
        return m.data().empty() ? default_digits() : m.data().front().digits();
    } else {
        return 15;
    }
}

/// While alive, new scalars are created at the precision of the given matrix.
template <class Real>
class MatrixPrecision {
public:
    explicit MatrixPrecision(const Matrix<Real>& m) : guard_(PrecisionBits{bits_of(m)}) {}

private:
    static mpfr_prec_t bits_of(const Matrix<Real>& m)
    {
        if constexpr (std::is_same_v<Real, BigReal>)
            if (!m.data().empty()) return m.data().front().bits();
        return default_bits();
    }

    ScopedPrecision guard_;
};

template <class Real>
Matrix<Real> transpose(const Matrix<Real>& a)
{
    Matrix<Real> t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    t.set_structure(a.structure());
    return t;
}

template <class Real>
Matrix<Real> multiply(const Matrix<Real>& a, const Matrix<Real>& b)
{
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape mismatch");
    Matrix<Real> c(a.rows(), b.cols());
    // i-k-j order with fused multiply-add; summation order is fixed.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Real& aik = a(i, k);
            if (is_zero(aik)) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) fma_acc(crow[j], aik, brow[j]);
        }
    }
    return c;
}

/// a * diag(d) * b, used for spectral reconstructions Q f(Λ) Qᵀ.
template <class Real>
Matrix<Real> multiply_diag(const Matrix<Real>& a, std::span<const Real> d, const Matrix<Real>& b)
{
    Matrix<Real> ad = a;
    for (std::size_t i = 0; i < ad.rows(); ++i)
        for (std::size_t k = 0; k < ad.cols(); ++k) ad(i, k) *= d[k];
    return multiply(ad, b);
}

template <class Real>
Matrix<Real> operator+(const Matrix<Real>& a, const Matrix<Real>& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
    Matrix<Real> c = a;
    for (std::size_t k = 0; k < c.data().size(); ++k) c.data()[k] += b.data()[k];
    c.set_structure(a.structure() == b.structure() ? a.structure() : Structure::general);
    return c;
}

template <class Real>
Matrix<Real> operator-(const Matrix<Real>& a, const Matrix<Real>& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("sub: shape mismatch");
    Matrix<Real> c = a;
    for (std::size_t k = 0; k < c.data().size(); ++k) c.data()[k] -= b.data()[k];
    c.set_structure(a.structure() == b.structure() ? a.structure() : Structure::general);
    return c;
}

template <class Real>
Matrix<Real> scaled(Matrix<Real> a, const Real& s)
{
    for (auto& x : a.data()) x *= s;
    return a;
}

template <class Real>
Real max_norm(const Matrix<Real>& a)
{
    using std::abs;
    Real m(0);
    for (const auto& x : a.data()) {
        Real ax = abs(x);
        if (ax > m) m = ax;
    }
    return m;
}

template <class Real>
Real max_abs_diff(const Matrix<Real>& a, const Matrix<Real>& b)
{
    using std::abs;
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("diff: shape mismatch");
    Real m(0);
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        Real d = abs(a.data()[k] - b.data()[k]);
        if (d > m) m = d;
    }
    return m;
}

/// Largest |a_ij - a_ji| (symmetric) or |a_ij + a_ji| (skew).
template <class Real>
Real structure_defect(const Matrix<Real>& a, Structure s)
{
    using std::abs;
    Real m(0);
    if (s == Structure::general) return m;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i; j < a.cols(); ++j) {
            Real d = s == Structure::symmetric ? abs(a(i, j) - a(j, i)) : abs(a(i, j) + a(j, i));
            if (d > m) m = d;
        }
    return m;
}

template <class Real>
bool is_symmetric(const Matrix<Real>& a, const Real& tol)
{
    return a.square() && structure_defect(a, Structure::symmetric) <= tol;
}

template <class Real>
bool is_skew(const Matrix<Real>& a, const Real& tol)
{
    return a.square() && structure_defect(a, Structure::skew) <= tol;
}

/// (M + Mᵀ)/2, forced exactly symmetric.
template <class Real>
Matrix<Real> symmetrized(const Matrix<Real>& m)
{
    Matrix<Real> s(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = i; j < m.cols(); ++j) {
            Real v = (m(i, j) + m(j, i)) / 2;
            s(j, i) = v;
            s(i, j) = std::move(v);
        }
    }
    s.set_structure(Structure::symmetric);
    return s;
}

} // namespace modgen
