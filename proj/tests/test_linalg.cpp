#include "modgen/eigen.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace modgen;

namespace {

BigMatrix random_symmetric(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BigMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            BigReal v = u(rng);
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

BigMatrix random_skew(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BigMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            BigReal v = u(rng);
            m(i, j) = v;
            m(j, i) = -v;
        }
    return m;
}

// Orthogonal matrix as a product of Givens rotations with random angles.
BigMatrix random_rotation(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
    BigMatrix q = BigMatrix::identity(n);
    for (int rep = 0; rep < 3; ++rep)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                BigReal a = u(rng);
                BigReal c = cos(a), s = sin(a);
                for (std::size_t k = 0; k < n; ++k) rotate_pair(q(k, i), q(k, j), c, s);
            }
    return q;
}

double tol_half(int digits) { return std::pow(10.0, -digits / 2.0); }

BigReal reconstruction_residual(const BigMatrix& m, const SymmetricEigen<BigReal>& e)
{
    auto r = multiply_diag(e.Q, std::span<const BigReal>(e.eigenvalues), transpose(e.Q));
    return max_abs_diff(r, m);
}

} // namespace

TEST(Jacobi, TwoByTwo)
{
    ScopedPrecision p(40);
    BigMatrix m(2, 2);
    m(0, 0) = 2; m(0, 1) = 1; m(1, 0) = 1; m(1, 1) = 2;
    auto e = jacobi_eigen_sym(m);
    EXPECT_LT(abs(e.eigenvalues[0] - 1.0).to_double(), 1e-35);
    EXPECT_LT(abs(e.eigenvalues[1] - 3.0).to_double(), 1e-35);
}

TEST(Jacobi, DiagonalInput)
{
    ScopedPrecision p(40);
    std::vector<BigReal> d(5, BigReal(5));
    auto m = BigMatrix::diagonal(std::span<const BigReal>(d));
    auto e = jacobi_eigen_sym(m);
    for (const auto& l : e.eigenvalues) EXPECT_EQ(l, BigReal(5));
    EXPECT_EQ(e.Q, BigMatrix::identity(5));
    EXPECT_EQ(e.sweeps, 0);
}

TEST(Jacobi, RandomReconstructionAt50Digits)
{
    ScopedPrecision p(50);
    auto m = random_symmetric(8, 7);
    auto e = jacobi_eigen_sym(m);
    EXPECT_LT(reconstruction_residual(m, e).to_double(), 1e-25);
    auto qtq = multiply(transpose(e.Q), e.Q);
    EXPECT_LT(max_abs_diff(qtq, BigMatrix::identity(8)).to_double(), 1e-25);
    for (std::size_t k = 1; k < 8; ++k) EXPECT_LE(e.eigenvalues[k - 1], e.eigenvalues[k]);
}

TEST(Jacobi, ResidualInvariantAcrossPrecisions)
{
    for (int digits : {20, 60, 120}) {
        ScopedPrecision p(digits);
        auto m = random_symmetric(12, 100 + digits);
        auto e = jacobi_eigen_sym(m);
        EXPECT_LT(reconstruction_residual(m, e).to_double(), tol_half(digits) * max_norm(m).to_double()) << digits;
    }
}

TEST(Jacobi, Deterministic)
{
    ScopedPrecision p(60);
    auto m = random_symmetric(10, 3);
    auto a = jacobi_eigen_sym(m);
    auto b = jacobi_eigen_sym(m);
    EXPECT_EQ(a.Q, b.Q);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
}

TEST(Jacobi, SweepBudgetExhausted)
{
    ScopedPrecision p(40);
    auto m = random_symmetric(6, 9);
    JacobiOptions<BigReal> opts;
    opts.max_sweeps = 1;
    EXPECT_THROW(jacobi_eigen_sym(m, opts), NonConvergence);
}

TEST(Jacobi, DoubleInstantiation)
{
    Matrix<double> m(2, 2);
    m(0, 0) = 2; m(0, 1) = 1; m(1, 0) = 1; m(1, 1) = 2;
    auto e = jacobi_eigen_sym(m);
    EXPECT_NEAR(e.eigenvalues[0], 1.0, 1e-12);
    EXPECT_NEAR(e.eigenvalues[1], 3.0, 1e-12);
}

TEST(SkewCanonical, AlreadyCanonical)
{
    ScopedPrecision p(40);
    BigMatrix s(2, 2);
    s(0, 1) = 1; s(1, 0) = -1;
    auto c = skew_canonical(s);
    ASSERT_EQ(c.thetas.size(), 1u);
    EXPECT_LT(abs(c.thetas[0] - 1.0).to_double(), 1e-30);
    EXPECT_EQ(c.zero_count, 0);
}

TEST(SkewCanonical, ZeroMatrix)
{
    ScopedPrecision p(40);
    BigMatrix s(5, 5);
    auto c = skew_canonical(s);
    EXPECT_TRUE(c.thetas.empty());
    EXPECT_EQ(c.zero_count, 5);
}

TEST(SkewCanonical, RecoversConjugatedBlocks)
{
    ScopedPrecision p(60);
    BigMatrix blocks(4, 4);
    blocks(0, 1) = 1; blocks(1, 0) = -1;
    blocks(2, 3) = 2; blocks(3, 2) = -2;
    auto r = random_rotation(4, 11);
    auto s = multiply(multiply(r, blocks), transpose(r));
    auto c = skew_canonical(s);
    ASSERT_EQ(c.thetas.size(), 2u);
    EXPECT_LT(abs(c.thetas[0] - 1.0).to_double(), 1e-25);
    EXPECT_LT(abs(c.thetas[1] - 2.0).to_double(), 1e-25);
    auto back = multiply(multiply(transpose(c.Q), s), c.Q);
    EXPECT_LT(max_abs_diff(back, blocks).to_double(), tol_half(60) * 2);
}

TEST(SkewCanonical, OddDimensionHasZeroBlock)
{
    ScopedPrecision p(60);
    auto s = random_skew(7, 5);
    auto c = skew_canonical(s);
    EXPECT_EQ(c.zero_count, 1);
    EXPECT_EQ(c.thetas.size(), 3u);
    auto back = multiply(multiply(transpose(c.Q), s), c.Q);
    BigMatrix expect(7, 7);
    for (std::size_t k = 0; k < 3; ++k) {
        expect(1 + 2 * k, 2 + 2 * k) = c.thetas[k];
        expect(2 + 2 * k, 1 + 2 * k) = -c.thetas[k];
    }
    EXPECT_LT(max_abs_diff(back, expect).to_double(), tol_half(60) * max_norm(s).to_double());
}

TEST(OrthogonalFunction, RotationByPi)
{
    ScopedPrecision p(50);
    BigMatrix s(2, 2);
    BigReal pi = BigReal::pi();
    s(0, 1) = pi; s(1, 0) = -pi;
    auto r = orthogonal_function_of_skew(s, [](const BigReal& t) { return cos(t); }, [](const BigReal& t) { return sin(t); });
    BigMatrix minus_identity = scaled(BigMatrix::identity(2), BigReal(-1));
    EXPECT_LT(max_abs_diff(r, minus_identity).to_double(), 1e-40);
}

TEST(OrthogonalFunction, ZeroGivesIdentity)
{
    ScopedPrecision p(50);
    BigMatrix s(4, 4);
    auto r = SkewSpectrum<BigReal>(s).exp(0.25);
    EXPECT_LT(max_abs_diff(r, BigMatrix::identity(4)).to_double(), 1e-45);
}

TEST(OrthogonalFunction, GroupInverse)
{
    ScopedPrecision p(60);
    auto s = random_skew(16, 21);
    SkewSpectrum<BigReal> spec(s);
    auto a = spec.exp(0.25);
    auto b = spec.exp(-0.25);
    EXPECT_LT(max_abs_diff(multiply(a, b), BigMatrix::identity(16)).to_double(), tol_half(60));
    EXPECT_LT(max_abs_diff(multiply(transpose(a), a), BigMatrix::identity(16)).to_double(), tol_half(60));
}

TEST(OrthogonalFunction, Semigroup)
{
    ScopedPrecision p(60);
    auto s = random_skew(10, 4);
    SkewSpectrum<BigReal> spec(s);
    auto q = spec.exp(0.25);
    auto h = spec.exp(0.5);
    EXPECT_LT(max_abs_diff(multiply(q, q), h).to_double(), tol_half(60));
}

TEST(OrthogonalFunction, MatchesCanonicalForm)
{
    // Q blockdiag(R(θ/4)) Qᵀ from the explicit canonical form.
    ScopedPrecision p(60);
    auto s = random_skew(6, 8);
    auto c = skew_canonical(s);
    BigMatrix blocks(6, 6);
    for (std::size_t k = 0; k < c.thetas.size(); ++k) {
        std::size_t o = c.zero_count + 2 * k;
        BigReal t = c.thetas[k] / 4.0;
        blocks(o, o) = cos(t); blocks(o + 1, o + 1) = cos(t);
        blocks(o, o + 1) = sin(t); blocks(o + 1, o) = -sin(t);
    }
    for (int k = 0; k < c.zero_count; ++k) blocks(k, k) = 1;
    auto via_canonical = multiply(multiply(c.Q, blocks), transpose(c.Q));
    auto via_spectrum = SkewSpectrum<BigReal>(s).exp(0.25);
    EXPECT_LT(max_abs_diff(via_canonical, via_spectrum).to_double(), tol_half(60));
}

TEST(ArtanhSym, Zero)
{
    ScopedPrecision p(40);
    auto r = artanh_sym(BigMatrix(3, 3));
    EXPECT_EQ(max_norm(r.value).to_double(), 0.0);
    EXPECT_EQ(r.margin, BigReal(1));
}

TEST(ArtanhSym, DiagonalHalf)
{
    ScopedPrecision p(40);
    BigMatrix m(2, 2);
    m(0, 0) = 0.5; m(1, 1) = -0.5;
    auto r = artanh_sym(m);
    // artanh x = Σ x^(2k+1)/(2k+1)
    BigReal series = 0, x = BigReal(0.5), pw = x;
    for (int k = 0; k < 200; ++k) {
        series += pw / static_cast<double>(2 * k + 1);
        pw *= x * x;
    }
    EXPECT_LT(abs(r.value(0, 0) - series).to_double(), 1e-35);
    EXPECT_LT(abs(r.value(1, 1) + series).to_double(), 1e-35);
    EXPECT_NEAR(r.value(0, 0).to_double(), 0.5493061443340549, 1e-15);
}

TEST(ArtanhSym, MarginBelowFloor)
{
    ScopedPrecision p(60);
    BigMatrix m(2, 2);
    m(0, 0) = BigReal(1) - pow10(-80, default_bits());
    m(1, 1) = 0.25;
    EXPECT_THROW(artanh_sym(m), SpectrumOutOfRange);
    BigMatrix one = BigMatrix::identity(2);
    EXPECT_THROW(artanh_sym(one), SpectrumOutOfRange);
}

TEST(ArtanhSym, ReportsMargin)
{
    ScopedPrecision p(60);
    BigMatrix m(2, 2);
    m(0, 0) = BigReal(1) - pow10(-30, default_bits());
    m(1, 1) = -0.5;
    auto r = artanh_sym(m);
    EXPECT_NEAR(r.margin.to_double(), 1e-30, 1e-40);
}

TEST(ArtanhSym, TanhRoundTrip)
{
    ScopedPrecision p(60);
    auto m = random_symmetric(8, 13);
    m = scaled(m, BigReal(2) / max_norm(m));
    auto t = tanh_sym(m);
    auto back = artanh_sym(t).value;
    EXPECT_LT(max_abs_diff(back, m).to_double(), std::pow(10.0, -20));
}
