#include "fracsparse/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fracsparse::quad {

namespace {

// Kronrod-15 nodes/weights on [-1,1] with embedded Gauss-7.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double integral;
  double error;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double resk = kWgk[7] * fc, resg = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    double x = h * kXgk[j];
    double v = f(c - x) + f(c + x);
    resk += kWgk[j] * v;
    if (j % 2 == 1) resg += kWg[j / 2] * v;
  }
  Panel p;
  p.integral = resk * h;
  p.error = std::abs((resk - resg) * h);
  return p;
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol_abs,
             int depth, const Options& opt) {
  Panel p = gk15(f, a, b);
  if (p.error <= tol_abs || depth >= opt.max_depth) return p.integral;
  double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol_abs, depth + 1, opt) +
         adapt(f, m, b, 0.5 * tol_abs, depth + 1, opt);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opt) {
  if (!(a <= b)) throw std::invalid_argument("integrate: bad interval");
  if (a == b) return 0.0;
  Panel first = gk15(f, a, b);
  double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(first.integral));
  if (first.error <= tol) return first.integral;
  double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol, 1, opt) + adapt(f, m, b, 0.5 * tol, 1, opt);
}

double integrate_power_left(const std::function<double(double)>& g, double a, double b,
                            double gamma, const Options& opt) {
  if (gamma <= -1.0) throw std::domain_error("integrate_power_left: gamma <= -1");
  if (b <= a) return 0.0;
  const double e = gamma + 1.0;
  const double umax = std::pow(b - a, e);
  auto h = [&](double u) { return g(a + std::pow(u, 1.0 / e)); };
  return integrate(h, 0.0, umax, opt) / e;
}

double integrate_power_right(const std::function<double(double)>& g, double a, double b,
                             double gamma, const Options& opt) {
  if (gamma <= -1.0) throw std::domain_error("integrate_power_right: gamma <= -1");
  if (b <= a) return 0.0;
  const double e = gamma + 1.0;
  const double umax = std::pow(b - a, e);
  auto h = [&](double u) { return g(b - std::pow(u, 1.0 / e)); };
  return integrate(h, 0.0, umax, opt) / e;
}

namespace {

using Point = std::array<double, 3>;
using BoxFn = std::function<double(const Point&)>;

double box_volume(int dim, const Point& lo, const Point& hi) {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= hi[a] - lo[a];
  return v;
}

bool touches_origin(int dim, const Point& lo, const Point& hi) {
  for (int a = 0; a < dim; ++a)
    if (lo[a] > 0.0 || hi[a] < 0.0) return false;
  return true;
}

// Tensor 2-point Gauss estimate.
double gauss2(int dim, const Point& lo, const Point& hi, const BoxFn& f) {
  const double g = 0.5773502691896257645091488;
  double sum = 0.0;
  int pts = 1 << dim;
  for (int m = 0; m < pts; ++m) {
    Point x{};
    for (int a = 0; a < dim; ++a) {
      double c = 0.5 * (lo[a] + hi[a]), h = 0.5 * (hi[a] - lo[a]);
      x[a] = c + ((m >> a) & 1 ? g : -g) * h;
    }
    sum += f(x);
  }
  return sum * box_volume(dim, lo, hi) / pts;
}

double box_adapt(int dim, const Point& lo, const Point& hi, const BoxFn& f,
                 double gamma_origin, double tol, int depth) {
  constexpr int kMaxDepth = 30;
  if (touches_origin(dim, lo, hi)) {
    // Bound the origin box by the radial envelope and subdivide until small.
    double rad = 0.0;
    for (int a = 0; a < dim; ++a) rad += std::max(hi[a] * hi[a], lo[a] * lo[a]);
    rad = std::sqrt(rad);
    double shell = std::pow(rad, dim + gamma_origin);
    if ((shell * 8.0 < tol && depth > 4) || depth >= kMaxDepth) return 0.0;
    double sum = 0.0;
    int parts = 1 << dim;
    for (int m = 0; m < parts; ++m) {
      Point l = lo, h = hi;
      for (int a = 0; a < dim; ++a) {
        double mid = 0.5 * (lo[a] + hi[a]);
        if ((m >> a) & 1)
          l[a] = mid;
        else
          h[a] = mid;
      }
      sum += box_adapt(dim, l, h, f, gamma_origin, tol / parts, depth + 1);
    }
    return sum;
  }
  double coarse = gauss2(dim, lo, hi, f);
  double fine = 0.0;
  int parts = 1 << dim;
  for (int m = 0; m < parts; ++m) {
    Point l = lo, h = hi;
    for (int a = 0; a < dim; ++a) {
      double mid = 0.5 * (lo[a] + hi[a]);
      if ((m >> a) & 1)
        l[a] = mid;
      else
        h[a] = mid;
    }
    fine += gauss2(dim, l, h, f);
  }
  if (std::abs(fine - coarse) <= tol || depth >= kMaxDepth) return fine;
  double sum = 0.0;
  for (int m = 0; m < parts; ++m) {
    Point l = lo, h = hi;
    for (int a = 0; a < dim; ++a) {
      double mid = 0.5 * (lo[a] + hi[a]);
      if ((m >> a) & 1)
        l[a] = mid;
      else
        h[a] = mid;
    }
    sum += box_adapt(dim, l, h, f, gamma_origin, tol / parts, depth + 1);
  }
  return sum;
}

}  // namespace

double box_integrate(int dim, const std::array<double, 3>& lo, const std::array<double, 3>& hi,
                     const std::function<double(const std::array<double, 3>&)>& f,
                     double gamma_origin, double rel_tol) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("box_integrate: dim must be 1..3");
  // First pass with a generous absolute scale, then refine relative to it.
  double scale = std::abs(gauss2(dim, lo, hi, f));
  if (!(scale > 0.0)) scale = 1.0;
  double tol = rel_tol * scale;
  double v1 = box_adapt(dim, lo, hi, f, gamma_origin, tol, 0);
  double v2 = box_adapt(dim, lo, hi, f, gamma_origin, rel_tol * std::abs(v1) + 1e-300, 0);
  return v2;
}

}  // namespace fracsparse::quad
