#pragma once

// Fractional kernels K(z) ~ |z|^(alpha-n): evaluation, application of the
// convolution operator T_alpha to grid functions (exact cell integrals in
// n = 1, including the singular cell), and numerical certification of the
// fractional size and Hormander conditions on dyadic annuli.

#include <array>
#include <string>
#include <vector>

#include "fracsparse/gridfn.hpp"

namespace fracsparse {

enum class KernelVariant { Power, Rough, Perturbed };

/// Piecewise-linear radial modulation, interpolated in log-radius and
/// clamped to the end values outside the sampled range.
struct RadialProfile {
  std::vector<double> radii;   // ascending, positive
  std::vector<double> values;  // positive

  double operator()(double r) const;
};

struct KernelSpec {
  KernelVariant variant = KernelVariant::Power;
  int dim = 1;
  double alpha = 0.5;
  double coeff = 1.0;      // power / perturbed
  double omega_pos = 1.0;  // rough (n = 1): coefficient on z > 0
  double omega_neg = 1.0;  // rough (n = 1): coefficient on z < 0
  RadialProfile profile;   // perturbed
};

/// "power:<alpha>:<c>", "rough:<alpha>:<w+>:<w->",
/// "perturbed:<alpha>:<c>:<profile-file>".
KernelSpec parse_kernel(const std::string& spec, int dim = 1);
std::string kernel_spec_string(const KernelSpec& k);

RadialProfile read_profile(std::istream& is);

double kernel_eval(const KernelSpec& k, const std::array<double, 3>& z);
double kernel_eval_1d(const KernelSpec& k, double z);

// --- annulus norms ---------------------------------------------------------

/// || K ||_{r', |y| ~ s} with the normalized convention: the L^r' average
/// over B(0, 2s) of K restricted to the annulus s < |y| <= 2s; r' = inf
/// gives the essential sup over the annulus.
double annulus_norm(const KernelSpec& k, double rprime, double s);

/// || K(. - x) - K(.) ||_{r', |y| ~ s}; zero offset gives zero.
double annulus_diff_norm(const KernelSpec& k, double rprime, double s,
                         const std::array<double, 3>& x);

// --- condition reports -------------------------------------------------------

struct ConditionSample {
  double arg;    // dyadic scale s, or annulus index m
  double value;  // scale-normalized norm, or series term
};

struct ConditionReport {
  std::string condition;  // "size" or "hormander"
  double rprime = 0.0;
  std::vector<ConditionSample> samples;
  double supremum = 0.0;
  double sum = 0.0;    // hormander: partial sum
  double ratio = 0.0;  // size: fitted per-scale growth factor; hormander: last-terms ratio
  double tail = 0.0;   // hormander: extrapolated tail
  bool pass = false;
  std::string message;
};

/// sup over dyadic s in [s_min, s_max] of s^(n-alpha) ||K||_{r',|y|~s}.
/// Verdict: per-scale values flat within slope_tol doublings per scale.
ConditionReport size_constant(const KernelSpec& k, double alpha, double rprime, double s_min,
                              double s_max, double slope_tol = 0.05);

/// Partial sum over m = 1..M of (2^m R)^(n-alpha) || K(.-x) - K(.) ||_{r',|y|~2^m R}
/// with R > 2|x|; verdict: last-terms ratio < 1 and extrapolated tail < tail_tol.
ConditionReport hormander_sum(const KernelSpec& k, double alpha, double rprime,
                              const std::array<double, 3>& x, double R, int M,
                              double tail_tol = 1e-3);

// --- operator application ----------------------------------------------------

/// Reusable application context: caches cell geometry so repeated partial
/// applications (the grand maximal truncations) stay in plain doubles.
class KernelApplier {
 public:
  KernelApplier(KernelSpec k, const GridFunction& f);

  /// T(f chi_source)(center of target cell); the source box is clipped to
  /// the domain and visited in ascending flat order.  absolute integrates
  /// |K| |f| instead.
  double apply(const IntBox& source, long long target_cell, bool absolute = false) const;

  const KernelSpec& kernel() const { return k_; }
  const GridFunction& fn() const { return *f_; }

 private:
  KernelSpec k_;
  const GridFunction* f_;
  std::array<std::vector<double>, kMaxDim> bounds_;

  double apply_1d(const IntBox& source, long long target, bool absolute) const;
  double apply_nd(const IntBox& source, long long target, bool absolute) const;
};

double apply_to_box(const KernelSpec& k, const GridFunction& f, const IntBox& source,
                    long long target_cell, bool absolute = false);

/// T f at every finest-cell center, as a piecewise-constant grid function.
GridFunction apply_kernel(const KernelSpec& k, const GridFunction& f);

/// T(f chi_support) at every cell center of the frame.
GridFunction apply_kernel_restricted(const KernelSpec& k, const GridFunction& f,
                                     const IntBox& support);

/// Per-cell integral of |K(x - .)| |f| over the tripled cell around x: the
/// ess-sup discretization slack of the grand maximal truncations.
GridFunction singular_slack(const KernelSpec& k, const GridFunction& f);

}  // namespace fracsparse
