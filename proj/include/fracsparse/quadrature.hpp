#pragma once

// Small deterministic quadrature kit: adaptive Gauss-Kronrod (G7,K15) on an
// interval, power-singularity endpoint transforms, and a recursive box rule
// for dimensions 2 and 3.  Used where no elementary closed form exists and
// as the independent oracle in tests.

#include <array>
#include <functional>

namespace fracsparse::quad {

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_depth = 48;
};

/// Adaptive G7/K15 on [a, b].  The integrand must be finite on the open
/// interval; integrable endpoint singularities converge but slowly (prefer
/// the transformed variants below when the exponent is known).
double integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opt = {});

/// ∫_a^b (x-a)^gamma g(x) dx with g smooth and gamma > -1, via the
/// substitution u = (x-a)^(gamma+1) which removes the singularity.
double integrate_power_left(const std::function<double(double)>& g, double a, double b,
                            double gamma, const Options& opt = {});

/// ∫_a^b (b-x)^gamma g(x) dx, mirrored.
double integrate_power_right(const std::function<double(double)>& g, double a, double b,
                             double gamma, const Options& opt = {});

/// Adaptive integral of f over an axis-aligned box in R^n (n = 1..3).
/// gamma_origin declares a known |x|^gamma singularity at the coordinate
/// origin (gamma > -n); boxes touching the origin are shrunk until their
/// crude bound falls below tolerance.
double box_integrate(int dim, const std::array<double, 3>& lo, const std::array<double, 3>& hi,
                     const std::function<double(const std::array<double, 3>&)>& f,
                     double gamma_origin = 0.0, double rel_tol = 1e-8);

}  // namespace fracsparse::quad
