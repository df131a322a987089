#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/eigen.hpp"
#include "modgen/errors.hpp"
#include "modgen/grid.hpp"
#include "modgen/kernel.hpp"
#include "modgen/matrix.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>

namespace modgen {

/// ceil(1.5 n) decimal digits on the cylinder, ceil(1.75 n) on Minkowski.
inline int required_digits(int n, Ambient ambient)
{
    if (n < 2) throw ConfigError("resolution must be >= 2");
    return ambient == Ambient::cylinder ? (3 * n + 1) / 2 : (7 * n + 3) / 4;
}

struct PipelineOptions {
    std::optional<int> digits;        // overrides required_digits
    bool retry_on_spectrum = false;   // one retry at 1.5x digits after SpectrumOutOfRange
    std::optional<double> margin_floor_exponent; // floor = 10^e; default 10^(-0.9p+2)
};

struct ModularResult {
    BigMatrix S, Aq, AqInv, B, Mminus, Mplus;
    BigReal margin;                 // min(1 - |eig B|)
    std::vector<BigReal> b_eigenvalues;
    BigReal symmetrization_defect;  // max |B - Bᵀ| / 2 before symmetrizing
    int digits = 0;
    std::map<std::string, double> stage_seconds;
};

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink, std::string name)
        : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now())
    {
    }
    ~StageTimer()
    {
        std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
        sink_[name_] += d.count();
    }

private:
    std::map<std::string, double>& sink_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

/// A^{±1/4} = exp(±S/4) from a single spectral decomposition of SᵀS.
inline std::pair<BigMatrix, BigMatrix> quarter_powers(const BigMatrix& S)
{
    SkewSpectrum<BigReal> spec(S);
    return {spec.exp(0.25), spec.exp(-0.25)};
}

/// B = Aq χ AqInv + AqInv χ Aq - 1 for the diagonal projector given by mask.
/// Returns (B, max |B - Bᵀ|/2); B itself is exactly symmetrized.
inline std::pair<BigMatrix, BigReal> build_b(const BigMatrix& Aq, const BigMatrix& AqInv, const std::vector<bool>& mask)
{
    MatrixPrecision<BigReal> guard(Aq);
    const std::size_t n = Aq.rows();
    // Aq χ AqInv = Σ_{k in region} Aq[:,k] AqInv[k,:]
    BigMatrix raw(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = raw.row(i);
        for (std::size_t k = 0; k < n; ++k) {
            if (!mask[k]) continue;
            const BigReal& a = Aq(i, k);
            const BigReal& b = AqInv(i, k);
            auto inv_row = AqInv.row(k);
            auto aq_row = Aq.row(k);
            for (std::size_t j = 0; j < n; ++j) {
                fma_acc(row[j], a, inv_row[j]);
                fma_acc(row[j], b, aq_row[j]);
            }
        }
        row[i] -= 1.0;
    }
    BigReal defect = structure_defect(raw, Structure::symmetric) / 2.0;
    return {symmetrized(raw), defect};
}

/// Everything downstream of S, for a given region mask.
inline ModularResult modular_from_quarter_powers(const BigMatrix& S, const BigMatrix& Aq, const BigMatrix& AqInv,
                                                 const std::vector<bool>& mask, const PipelineOptions& opts = {})
{
    MatrixPrecision<BigReal> guard(S);
    ModularResult r;
    r.digits = matrix_digits(S);
    r.S = S;
    r.Aq = Aq;
    r.AqInv = AqInv;
    {
        StageTimer t(r.stage_seconds, "B");
        auto [b, defect] = build_b(Aq, AqInv, mask);
        r.B = std::move(b);
        r.symmetrization_defect = std::move(defect);
    }
    ArtanhResult<BigReal> at;
    {
        StageTimer t(r.stage_seconds, "artanh");
        std::optional<BigReal> floor;
        if (opts.margin_floor_exponent) floor = pow10(*opts.margin_floor_exponent);
        at = artanh_sym(r.B, floor);
    }
    r.margin = at.margin;
    r.b_eigenvalues = at.eigenvalues;
    {
        StageTimer t(r.stage_seconds, "M");
        BigMatrix twice = scaled(at.value, BigReal(2));
        r.Mminus = multiply(multiply(AqInv, twice), AqInv);
        r.Mplus = multiply(multiply(Aq, twice), Aq);
    }
    return r;
}

inline ModularResult compute_modular_once(const GridSpec& grid, const KernelSpec& kernel, int digits,
                                          const PipelineOptions& opts)
{
    GridSpec g = grid.bits == digits_to_bits(digits) ? grid : rebuild_grid(grid, digits);
    std::map<std::string, double> times;
    BigMatrix S;
    {
        StageTimer t(times, "S");
        S = assemble_s(g, kernel);
    }
    std::pair<BigMatrix, BigMatrix> q;
    {
        StageTimer t(times, "A");
        q = quarter_powers(S);
    }
    ModularResult r = modular_from_quarter_powers(S, q.first, q.second, g.mask, opts);
    for (const auto& [k, v] : times) r.stage_seconds[k] += v;
    return r;
}

/// S -> A^{±1/4} -> B -> artanh(B) -> M∓ at the configured precision.
inline ModularResult compute_modular(const GridSpec& grid, const KernelSpec& kernel, const PipelineOptions& opts = {})
{
    int digits = opts.digits ? *opts.digits : required_digits(grid.n, grid.ambient());
    try {
        return compute_modular_once(grid, kernel, digits, opts);
    } catch (const SpectrumOutOfRange&) {
        if (!opts.retry_on_spectrum) throw;
        int more = static_cast<int>(std::ceil(1.5 * digits));
        return compute_modular_once(grid, kernel, more, opts);
    }
}

struct SymSkew {
    BigMatrix sym, skew;
};

inline SymSkew split_sym_skew(const BigMatrix& m)
{
    MatrixPrecision<BigReal> guard(m);
    SymSkew out{BigMatrix(m.rows(), m.cols()), BigMatrix(m.rows(), m.cols())};
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out.sym(i, j) = (m(i, j) + m(j, i)) / 2.0;
            out.skew(i, j) = (m(i, j) - m(j, i)) / 2.0;
        }
    out.sym.set_structure(Structure::symmetric);
    out.skew.set_structure(Structure::skew);
    return out;
}

struct InvariantReport {
    bool s_exactly_skew = false;
    double orthogonality = 0;   // ||Aqᵀ Aq - I||
    double b_symmetry = 0;      // symmetrization correction
    double max_abs_eig_b = 0;   // as 1 - margin
    double margin = 0;
    double intertwining = 0;    // ||Mplus - A^{1/2} Mminus A^{1/2}|| / ||Mminus||
    std::optional<double> complement_duality; // ||Mminus(Bᶜ) + Mminus(B)|| / ||Mminus||
    int digits = 0;

    double bound_half() const { return std::pow(10.0, -digits / 2.0); }
    double bound_third() const { return std::pow(10.0, -digits / 3.0); }
    bool ok() const
    {
        return s_exactly_skew && orthogonality <= bound_half() && b_symmetry <= bound_half() && margin > 0 &&
               intertwining <= bound_third() && (!complement_duality || *complement_duality <= bound_third());
    }
};

/// Pipeline invariants; complement duality is evaluated only when requested
/// since it repeats the B/artanh stages for the complementary mask.
inline InvariantReport check_invariants(const ModularResult& r, const std::vector<bool>& mask, bool with_complement)
{
    MatrixPrecision<BigReal> guard(r.S);
    InvariantReport rep;
    rep.digits = r.digits;
    rep.s_exactly_skew = is_zero(structure_defect(r.S, Structure::skew));
    for (std::size_t i = 0; i < r.S.rows(); ++i) rep.s_exactly_skew = rep.s_exactly_skew && r.S(i, i).is_zero();
    const std::size_t n = r.S.rows();
    rep.orthogonality = max_abs_diff(multiply(transpose(r.Aq), r.Aq), BigMatrix::identity(n)).to_double();
    rep.b_symmetry = r.symmetrization_defect.to_double();
    rep.margin = r.margin.to_double();
    rep.max_abs_eig_b = (BigReal(1) - r.margin).to_double();
    BigMatrix half = multiply(r.Aq, r.Aq);
    BigReal mnorm = max_norm(r.Mminus);
    rep.intertwining = (max_abs_diff(r.Mplus, multiply(multiply(half, r.Mminus), half)) / mnorm).to_double();
    if (with_complement) {
        std::vector<bool> flipped(mask.size());
        for (std::size_t k = 0; k < mask.size(); ++k) flipped[k] = !mask[k];
        auto c = modular_from_quarter_powers(r.S, r.Aq, r.AqInv, flipped);
        BigMatrix sum = c.Mminus + r.Mminus;
        rep.complement_duality = (max_norm(sum) / mnorm).to_double();
    }
    return rep;
}

} // namespace modgen
