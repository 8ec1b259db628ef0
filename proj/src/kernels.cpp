#include "fracsparse/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fracsparse/quadrature.hpp"

namespace fracsparse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_inf_norm(double rprime) { return std::isinf(rprime) || rprime >= 1e300; }

double ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return 3.14159265358979323846;
    case 3: return 4.0 * 3.14159265358979323846 / 3.0;
    default: throw std::invalid_argument("ball volume: dim must be 1..3");
  }
}

}  // namespace

double RadialProfile::operator()(double r) const {
  if (radii.empty()) return 1.0;
  if (!(r > 0.0)) throw std::domain_error("radial profile evaluated at r <= 0");
  if (r <= radii.front()) return values.front();
  if (r >= radii.back()) return values.back();
  auto it = std::upper_bound(radii.begin(), radii.end(), r);
  size_t hi = static_cast<size_t>(it - radii.begin());
  size_t lo = hi - 1;
  double t = (std::log(r) - std::log(radii[lo])) / (std::log(radii[hi]) - std::log(radii[lo]));
  return values[lo] + t * (values[hi] - values[lo]);
}

KernelSpec parse_kernel(const std::string& spec, int dim) {
  std::vector<std::string> parts;
  std::istringstream is(spec);
  std::string tok;
  while (std::getline(is, tok, ':')) parts.push_back(tok);
  if (parts.empty()) throw std::invalid_argument("empty kernel spec");
  KernelSpec k;
  k.dim = dim;
  auto need = [&](size_t n) {
    if (parts.size() != n) throw std::invalid_argument("bad kernel spec: " + spec);
  };
  if (parts[0] == "power") {
    need(3);
    k.variant = KernelVariant::Power;
    k.alpha = std::stod(parts[1]);
    k.coeff = std::stod(parts[2]);
  } else if (parts[0] == "rough") {
    need(4);
    if (dim != 1) throw std::invalid_argument("rough kernels are defined for n=1");
    k.variant = KernelVariant::Rough;
    k.alpha = std::stod(parts[1]);
    k.omega_pos = std::stod(parts[2]);
    k.omega_neg = std::stod(parts[3]);
  } else if (parts[0] == "perturbed") {
    need(4);
    k.variant = KernelVariant::Perturbed;
    k.alpha = std::stod(parts[1]);
    k.coeff = std::stod(parts[2]);
    std::ifstream pf(parts[3]);
    if (!pf) throw std::invalid_argument("cannot open profile file: " + parts[3]);
    k.profile = read_profile(pf);
  } else {
    throw std::invalid_argument("unknown kernel variant: " + parts[0]);
  }
  if (!(k.alpha > 0.0 && k.alpha < static_cast<double>(dim)))
    throw std::invalid_argument("kernel alpha must lie in (0, n)");
  return k;
}

std::string kernel_spec_string(const KernelSpec& k) {
  std::ostringstream os;
  switch (k.variant) {
    case KernelVariant::Power: os << "power:" << k.alpha << ':' << k.coeff; break;
    case KernelVariant::Rough:
      os << "rough:" << k.alpha << ':' << k.omega_pos << ':' << k.omega_neg;
      break;
    case KernelVariant::Perturbed: os << "perturbed:" << k.alpha << ':' << k.coeff << ":<profile>"; break;
  }
  return os.str();
}

RadialProfile read_profile(std::istream& is) {
  RadialProfile p;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double r, v;
    if (!(ls >> r >> v)) throw std::invalid_argument("bad profile record: " + line);
    if (r <= 0.0 || v <= 0.0) throw std::invalid_argument("profile entries must be positive");
    if (!p.radii.empty() && r <= p.radii.back())
      throw std::invalid_argument("profile radii must be ascending");
    p.radii.push_back(r);
    p.values.push_back(v);
  }
  if (p.radii.empty()) throw std::invalid_argument("empty profile");
  return p;
}

double kernel_eval(const KernelSpec& k, const std::array<double, 3>& z) {
  double r2 = 0.0;
  for (int a = 0; a < k.dim; ++a) r2 += z[a] * z[a];
  if (r2 == 0.0) throw std::domain_error("kernel evaluated at the singularity");
  double r = std::sqrt(r2);
  double radial = std::pow(r, k.alpha - static_cast<double>(k.dim));
  switch (k.variant) {
    case KernelVariant::Power: return k.coeff * radial;
    case KernelVariant::Rough: return (z[0] > 0.0 ? k.omega_pos : k.omega_neg) * radial;
    case KernelVariant::Perturbed: return k.coeff * k.profile(r) * radial;
  }
  return 0.0;
}

double kernel_eval_1d(const KernelSpec& k, double z) { return kernel_eval(k, {z, 0.0, 0.0}); }

namespace {

// Side coefficient for z = x - y: y < x means z > 0.
double side_coeff(const KernelSpec& k, bool left_of_x, bool absolute) {
  double c;
  switch (k.variant) {
    case KernelVariant::Power: c = k.coeff; break;
    case KernelVariant::Rough: c = left_of_x ? k.omega_pos : k.omega_neg; break;
    case KernelVariant::Perturbed: c = k.coeff; break;
  }
  return absolute ? std::abs(c) : c;
}

// int_a^b |x-y|^(alpha-1) dy for [a,b] entirely on one side of x (n=1).
double power_kernel_patch(double alpha, double x, double a, double b) {
  if (b <= a) return 0.0;
  if (b <= x) return (std::pow(x - a, alpha) - std::pow(x - b, alpha)) / alpha;
  return (std::pow(b - x, alpha) - std::pow(a - x, alpha)) / alpha;
}

// Constant source piece on [a,b] (one side of x): exact for power/rough,
// quadrature with the singular-endpoint transform for perturbed kernels.
double kcell_const_side(const KernelSpec& k, double x, double a, double b, double v,
                        bool absolute) {
  if (b <= a) return 0.0;
  bool left = b <= x;
  double c = side_coeff(k, left, absolute) * (absolute ? std::abs(v) : v);
  if (c == 0.0) return 0.0;
  if (k.variant != KernelVariant::Perturbed) return c * power_kernel_patch(k.alpha, x, a, b);
  auto g = [&](double y) { return k.profile(std::abs(x - y)); };
  double am1 = k.alpha - 1.0;
  if (left) {
    if (b == x) return c * quad::integrate_power_right(g, a, b, am1);
    return c * quad::integrate([&](double y) { return g(y) * std::pow(x - y, am1); }, a, b);
  }
  if (a == x) return c * quad::integrate_power_left(g, a, b, am1);
  return c * quad::integrate([&](double y) { return g(y) * std::pow(y - x, am1); }, a, b);
}

// Power source piece c_f |y|^gamma on [a,b] with both singular points {0, x}
// outside the open interval; endpoints may coincide with them.
double kcell_power_patch(const KernelSpec& k, double x, double a, double b, double cf,
                         double gamma, bool absolute) {
  if (b <= a) return 0.0;
  bool left = b <= x;
  double c = side_coeff(k, left, absolute) * cf;
  if (c == 0.0) return 0.0;
  double am1 = k.alpha - 1.0;
  auto smooth = [&](double y) {
    double val = std::pow(std::abs(y), gamma) * std::pow(std::abs(x - y), am1);
    if (k.variant == KernelVariant::Perturbed) val *= k.profile(std::abs(x - y));
    return val;
  };
  const bool sing_a = (a == 0.0) || (a == x);
  const bool sing_b = (b == 0.0) || (b == x);
  if (sing_a && sing_b) {
    double m = 0.5 * (a + b);
    return kcell_power_patch(k, x, a, m, cf, gamma, absolute) +
           kcell_power_patch(k, x, m, b, cf, gamma, absolute);
  }
  if (sing_a) {
    double e = (a == 0.0) ? gamma : am1;
    auto g = [&](double y) {
      double val = (a == 0.0) ? std::pow(std::abs(x - y), am1) : std::pow(std::abs(y), gamma);
      if (k.variant == KernelVariant::Perturbed) val *= k.profile(std::abs(x - y));
      return val;
    };
    return c * quad::integrate_power_left(g, a, b, e);
  }
  if (sing_b) {
    double e = (b == 0.0) ? gamma : am1;
    auto g = [&](double y) {
      double val = (b == 0.0) ? std::pow(std::abs(x - y), am1) : std::pow(std::abs(y), gamma);
      if (k.variant == KernelVariant::Perturbed) val *= k.profile(std::abs(x - y));
      return val;
    };
    return c * quad::integrate_power_right(g, a, b, e);
  }
  return c * quad::integrate(smooth, a, b);
}

// Full power-piece cell integral: split [a,b] at 0 and x.
double kcell_power(const KernelSpec& k, double x, double a, double b, double cf, double gamma,
                   bool absolute) {
  std::vector<double> cuts{a, b};
  if (0.0 > a && 0.0 < b) cuts.push_back(0.0);
  if (x > a && x < b) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    total += kcell_power_patch(k, x, cuts[i], cuts[i + 1], cf, gamma, absolute);
  return total;
}

double kcell_const(const KernelSpec& k, double x, double a, double b, double v, bool absolute) {
  if (v == 0.0 || b <= a) return 0.0;
  if (x > a && x < b)
    return kcell_const_side(k, x, a, x, v, absolute) + kcell_const_side(k, x, x, b, v, absolute);
  return kcell_const_side(k, x, a, b, v, absolute);
}

}  // namespace

KernelApplier::KernelApplier(KernelSpec k, const GridFunction& f) : k_(std::move(k)), f_(&f) {
  const DyadicFrame& fr = f_->frame();
  for (int a = 0; a < fr.dim(); ++a) {
    auto& b = bounds_[static_cast<size_t>(a)];
    b.resize(static_cast<size_t>(fr.cells_per_axis()) + 1);
    for (long long i = 0; i <= fr.cells_per_axis(); ++i)
      b[static_cast<size_t>(i)] = fr.coord_d(i, a);
  }
}

double KernelApplier::apply(const IntBox& source, long long target_cell, bool absolute) const {
  return f_->frame().dim() == 1 ? apply_1d(source, target_cell, absolute)
                                : apply_nd(source, target_cell, absolute);
}

double KernelApplier::apply_1d(const IntBox& source, long long target, bool absolute) const {
  const DyadicFrame& fr = f_->frame();
  IntBox clip = source.intersect(fr.domain_box());
  if (clip.empty()) return 0.0;
  const auto& b = bounds_[0];
  const double x = 0.5 * (b[static_cast<size_t>(target)] + b[static_cast<size_t>(target) + 1]);
  double sum = 0.0;
  for (long long i = clip.lo[0]; i < clip.hi[0]; ++i) {
    const CellPiece& p = f_->piece(i);
    double lo = b[static_cast<size_t>(i)], hi = b[static_cast<size_t>(i) + 1];
    if (p.kind == PieceKind::Constant) {
      sum += kcell_const(k_, x, lo, hi, p.value, absolute);
    } else {
      sum += kcell_power(k_, x, lo, hi, p.value, p.gamma, absolute);
    }
  }
  return sum;
}

double KernelApplier::apply_nd(const IntBox& source, long long target, bool absolute) const {
  const DyadicFrame& fr = f_->frame();
  const int n = fr.dim();
  std::array<double, 3> x{};
  {
    auto t = fr.cell_tuple(target);
    for (int a = 0; a < n; ++a)
      x[a] = 0.5 * (bounds_[static_cast<size_t>(a)][static_cast<size_t>(t[a])] +
                    bounds_[static_cast<size_t>(a)][static_cast<size_t>(t[a]) + 1]);
  }
  double gamma = k_.alpha - static_cast<double>(n);
  double sum = 0.0;
  for (long long cell : cells_in_box(fr, source)) {
    const CellPiece& p = f_->piece(cell);
    if (p.kind != PieceKind::Constant)
      throw std::domain_error("power-piece kernel application is closed-form only in n=1");
    if (p.value == 0.0) continue;
    auto t = fr.cell_tuple(cell);
    std::array<double, 3> lo{}, hi{};
    for (int a = 0; a < n; ++a) {
      // z = x - y over the reflected box
      double ylo = bounds_[static_cast<size_t>(a)][static_cast<size_t>(t[a])];
      double yhi = bounds_[static_cast<size_t>(a)][static_cast<size_t>(t[a]) + 1];
      lo[a] = x[a] - yhi;
      hi[a] = x[a] - ylo;
    }
    double c = absolute ? std::abs(k_.coeff * p.value) : k_.coeff * p.value;
    const KernelSpec& kk = k_;
    auto fn = [&kk, gamma, n](const std::array<double, 3>& z) {
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) r2 += z[a] * z[a];
      double val = std::pow(r2, 0.5 * gamma);
      if (kk.variant == KernelVariant::Perturbed) val *= kk.profile(std::sqrt(r2));
      return val;
    };
    sum += c * quad::box_integrate(n, lo, hi, fn, gamma, 1e-8);
  }
  return sum;
}

double apply_to_box(const KernelSpec& k, const GridFunction& f, const IntBox& source,
                    long long target_cell, bool absolute) {
  KernelApplier ap(k, f);
  return ap.apply(source, target_cell, absolute);
}

GridFunction apply_kernel(const KernelSpec& k, const GridFunction& f) {
  return apply_kernel_restricted(k, f, f.frame().domain_box());
}

GridFunction apply_kernel_restricted(const KernelSpec& k, const GridFunction& f,
                                     const IntBox& support) {
  const DyadicFrame& fr = f.frame();
  KernelApplier ap(k, f);
  std::vector<double> out(static_cast<size_t>(fr.cell_count()));
  for (long long i = 0; i < fr.cell_count(); ++i)
    out[static_cast<size_t>(i)] = ap.apply(support, i, false);
  return GridFunction::from_values(fr, out);
}

GridFunction singular_slack(const KernelSpec& k, const GridFunction& f) {
  const DyadicFrame& fr = f.frame();
  KernelApplier ap(k, f);
  std::vector<double> out(static_cast<size_t>(fr.cell_count()));
  for (long long i = 0; i < fr.cell_count(); ++i) {
    auto t = fr.cell_tuple(i);
    IntBox cell;
    cell.dim = fr.dim();
    for (int a = 0; a < fr.dim(); ++a) {
      cell.lo[a] = t[a];
      cell.hi[a] = t[a] + 1;
    }
    IntBox tri = triple_box(cell);
    out[static_cast<size_t>(i)] = ap.apply(tri, i, true);
  }
  return GridFunction::from_values(fr, out);
}

// --- annulus norms ----------------------------------------------------------

namespace {

// int_s^{2s} t^e dt
double radial_patch(double e, double s) {
  if (e == -1.0) return std::log(2.0);
  return (std::pow(2.0 * s, e + 1.0) - std::pow(s, e + 1.0)) / (e + 1.0);
}

double annulus_sup_1d(const KernelSpec& k, double s) {
  double am1 = k.alpha - 1.0;
  switch (k.variant) {
    case KernelVariant::Power: return std::abs(k.coeff) * std::pow(s, am1);
    case KernelVariant::Rough:
      return std::max(std::abs(k.omega_pos), std::abs(k.omega_neg)) * std::pow(s, am1);
    case KernelVariant::Perturbed: {
      double best = 0.0;
      const int samples = 2048;
      for (int i = 0; i <= samples; ++i) {
        double t = s * std::pow(2.0, static_cast<double>(i) / samples);
        best = std::max(best, std::abs(k.coeff) * k.profile(t) * std::pow(t, am1));
      }
      return best;
    }
  }
  return 0.0;
}

}  // namespace

double annulus_norm(const KernelSpec& k, double rprime, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("annulus scale must be positive");
  if (!is_inf_norm(rprime) && rprime < 1.0)
    throw std::invalid_argument("annulus norm requires r' >= 1");
  const int n = k.dim;
  if (is_inf_norm(rprime)) {
    if (n == 1) return annulus_sup_1d(k, s);
    // radial kernels: sup on the inner edge
    return std::abs(k.coeff) * std::pow(s, k.alpha - n);
  }
  double normalizer = ball_volume(n) * std::pow(2.0 * s, n);
  double e = (k.alpha - n) * rprime;
  double integral = 0.0;
  switch (k.variant) {
    case KernelVariant::Power:
      integral = std::pow(std::abs(k.coeff), rprime) * (n == 1 ? 2.0 : n * ball_volume(n)) *
                 radial_patch(e + (n - 1), s);
      break;
    case KernelVariant::Rough:
      integral = (std::pow(std::abs(k.omega_pos), rprime) +
                  std::pow(std::abs(k.omega_neg), rprime)) *
                 radial_patch(e, s);
      break;
    case KernelVariant::Perturbed: {
      auto g = [&](double t) {
        return std::pow(std::abs(k.coeff) * k.profile(t) * std::pow(t, k.alpha - n), rprime) *
               std::pow(t, static_cast<double>(n - 1));
      };
      integral = (n == 1 ? 2.0 : n * ball_volume(n)) * quad::integrate(g, s, 2.0 * s);
      break;
    }
  }
  return std::pow(integral / normalizer, 1.0 / rprime);
}

namespace {

// |K(y - x) - K(y)| in n=1.
double diff_1d(const KernelSpec& k, double x, double y) {
  return std::abs(kernel_eval_1d(k, y - x) - kernel_eval_1d(k, y));
}

// sup over [a,b] by dense sampling with endpoints; singular points must lie
// outside the open interval.
double sup_on_interval(const KernelSpec& k, double x, double a, double b) {
  const int samples = 2048;
  double best = 0.0;
  for (int i = 0; i <= samples; ++i) {
    double y = a + (b - a) * static_cast<double>(i) / samples;
    if (y == 0.0 || y == x) continue;
    best = std::max(best, diff_1d(k, x, y));
  }
  return best;
}

// integral of |K(.-x)-K(.)|^{r'} over [a,b]; splits at interior singular
// points and removes the endpoint power singularity by substitution.
double diff_pow_integral(const KernelSpec& k, double rprime, double x, double a, double b) {
  if (b <= a) return 0.0;
  std::vector<double> cuts{a, b};
  if (0.0 > a && 0.0 < b) cuts.push_back(0.0);
  if (x > a && x < b) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  double e = (k.alpha - 1.0) * rprime;  // local exponent of |D|^{r'} at a singular endpoint
  double total = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double u = cuts[i], v = cuts[i + 1];
    bool sing_u = (u == 0.0 || u == x);
    bool sing_v = (v == 0.0 || v == x);
    if (sing_u || sing_v) {
      if (e <= -1.0) return kInf;
      if (sing_u && sing_v) {
        double m = 0.5 * (u + v);
        total += diff_pow_integral(k, rprime, x, u, m) + diff_pow_integral(k, rprime, x, m, v);
        continue;
      }
      if (sing_u) {
        auto g = [&](double y) {
          return std::pow(diff_1d(k, x, y), rprime) * std::pow(y - u, -e);
        };
        total += quad::integrate_power_left(g, u, v, e);
      } else {
        auto g = [&](double y) {
          return std::pow(diff_1d(k, x, y), rprime) * std::pow(v - y, -e);
        };
        total += quad::integrate_power_right(g, u, v, e);
      }
      continue;
    }
    total += quad::integrate([&](double y) { return std::pow(diff_1d(k, x, y), rprime); }, u, v);
  }
  return total;
}

}  // namespace

double annulus_diff_norm(const KernelSpec& k, double rprime, double s,
                         const std::array<double, 3>& x) {
  if (!(s > 0.0)) throw std::invalid_argument("annulus scale must be positive");
  double xnorm = 0.0;
  for (int a = 0; a < k.dim; ++a) xnorm += x[a] * x[a];
  xnorm = std::sqrt(xnorm);
  if (xnorm == 0.0) return 0.0;
  if (k.dim != 1)
    throw std::domain_error("difference annulus norms are implemented for n=1");
  const double x0 = x[0];
  if (is_inf_norm(rprime)) {
    bool singular_inside = (x0 > s && x0 <= 2.0 * s) || (-x0 > s && -x0 <= 2.0 * s);
    if (singular_inside) return kInf;
    return std::max(sup_on_interval(k, x0, s, 2.0 * s), sup_on_interval(k, x0, -2.0 * s, -s));
  }
  if (rprime < 1.0) throw std::invalid_argument("annulus norm requires r' >= 1");
  double integral =
      diff_pow_integral(k, rprime, x0, s, 2.0 * s) + diff_pow_integral(k, rprime, x0, -2.0 * s, -s);
  if (std::isinf(integral)) return kInf;
  return std::pow(integral / (4.0 * s), 1.0 / rprime);
}

// --- condition reports -------------------------------------------------------

ConditionReport size_constant(const KernelSpec& k, double alpha, double rprime, double s_min,
                              double s_max, double slope_tol) {
  if (!(s_min > 0.0) || !(s_max > s_min))
    throw std::invalid_argument("size check needs 0 < s_min < s_max");
  ConditionReport rep;
  rep.condition = "size";
  rep.rprime = rprime;
  const int n = k.dim;
  for (double s = s_min; s <= s_max * (1.0 + 1e-12); s *= 2.0) {
    double v = std::pow(s, static_cast<double>(n) - alpha) * annulus_norm(k, rprime, s);
    rep.samples.push_back({s, v});
  }
  if (rep.samples.size() < 6)
    throw std::invalid_argument("size check needs at least 6 dyadic scales");
  double sup = 0.0;
  bool finite = true;
  for (const auto& smp : rep.samples) {
    if (!std::isfinite(smp.value)) finite = false;
    sup = std::max(sup, smp.value);
  }
  rep.supremum = sup;
  // least-squares slope of log2(value) per scale step
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(rep.samples.size());
  for (size_t i = 0; i < rep.samples.size(); ++i) {
    double xi = static_cast<double>(i), yi = std::log2(rep.samples[i].value);
    sx += xi;
    sy += yi;
    sxx += xi * xi;
    sxy += xi * yi;
  }
  double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.ratio = std::pow(2.0, slope);
  rep.pass = finite && std::abs(slope) <= slope_tol;
  std::ostringstream msg;
  msg << "sup=" << sup << " growth/scale=" << rep.ratio;
  rep.message = msg.str();
  return rep;
}

ConditionReport hormander_sum(const KernelSpec& k, double alpha, double rprime,
                              const std::array<double, 3>& x, double R, int M,
                              double tail_tol) {
  double xnorm = 0.0;
  for (int a = 0; a < k.dim; ++a) xnorm += x[a] * x[a];
  xnorm = std::sqrt(xnorm);
  if (!(R > 2.0 * xnorm))
    throw std::invalid_argument("hormander sum requires R > 2|x|");
  if (M < 2) throw std::invalid_argument("hormander sum needs M >= 2");
  ConditionReport rep;
  rep.condition = "hormander";
  rep.rprime = rprime;
  double sum = 0.0;
  bool finite = true;
  for (int m = 1; m <= M; ++m) {
    double s = std::ldexp(R, m);
    double term = std::pow(s, static_cast<double>(k.dim) - alpha) *
                  annulus_diff_norm(k, rprime, s, x);
    if (!std::isfinite(term)) finite = false;
    rep.samples.push_back({static_cast<double>(m), term});
    sum += term;
    rep.supremum = std::max(rep.supremum, term);
  }
  rep.sum = sum;
  double tm = rep.samples[static_cast<size_t>(M - 1)].value;
  double tm1 = rep.samples[static_cast<size_t>(M - 2)].value;
  rep.ratio = (tm1 > 0.0) ? tm / tm1 : 0.0;
  rep.tail = (rep.ratio < 1.0) ? tm * rep.ratio / (1.0 - rep.ratio) : kInf;
  rep.pass = finite && rep.ratio < 1.0 && rep.tail < tail_tol;
  std::ostringstream msg;
  msg << "sum=" << sum << " tail_ratio=" << rep.ratio << " tail<=" << rep.tail;
  rep.message = msg.str();
  return rep;
}

}  // namespace fracsparse
