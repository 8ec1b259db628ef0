#pragma once

// Maximal operators on grid functions: the fractional maximal M_{alpha,r},
// a mean-oscillation sharp maximal, and the grand maximal truncations that
// drive the sparse construction.  Suprema run over the base lattice and the
// 3^n shifted lattices, truncated to the frame; the essential sup is
// discretized as the max over finest-cell centers.

#include "fracsparse/gridfn.hpp"
#include "fracsparse/kernels.hpp"

namespace fracsparse {

/// M_{alpha,r} f: per cell, max over all lattice cubes containing it of
/// |Q|^(alpha/n) ((1/|Q|) int_Q |f|^r)^(1/r).
GridFunction frac_maximal(const GridFunction& f, double alpha, double r);

/// M^# g: per cell, max over all lattice cubes containing it of
/// (1/|Q|) int_Q |g - avg_Q g|.  Exact for constant cells and, in n = 1,
/// for power cells.
GridFunction sharp_maximal(const GridFunction& g);

/// M_{T,Q0} f: per cell x in Q0, max over base-lattice Q with x in Q within
/// Q0 of max_{xi in Q} |T(f chi_{3Q0 \ 3Q})(xi)|; zero outside Q0.
GridFunction grand_truncated(const KernelSpec& k, const GridFunction& f, const DyadicCube& q0);

/// M_T f with Q ranging over every base cube of the frame.
GridFunction grand_maximal(const KernelSpec& k, const GridFunction& f);

}  // namespace fracsparse
