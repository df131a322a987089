#pragma once

#include "modgen/bigreal.hpp"
#include "modgen/errors.hpp"

#include <mpfr.h>

namespace modgen {

/// Exponential integral E₁(x) = Γ(0, x) for x > 0, at the precision of x.
/// MPFR's eint evaluates -E₁(-y) for negative arguments.
inline BigReal expint_e1(const BigReal& x)
{
    if (!(x > 0)) throw DomainError("expint_e1 requires x > 0, got " + to_short_string(x));
    BigReal neg = -x;
    BigReal r = BigReal::with_bits(x.bits());
    mpfr_eint(r.get(), neg.get(), MPFR_RNDN);
    return -r;
}

} // namespace modgen
