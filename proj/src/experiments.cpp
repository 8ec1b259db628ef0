#include "fracsparse/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fracsparse/maximal.hpp"
#include "fracsparse/weights.hpp"

namespace fracsparse {

namespace {

constexpr double kLn2 = 0.6931471805599453094;

// Example 2 keeps the f exponent at alpha - eps/4 below zero; the fixed
// margin-to-eps ratio keeps every shape constant stable across the grid.
constexpr double kExample2Margin = 0.25;

double splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

ExponentTuple ExponentTuple::make(int n, double alpha, double r, double p) {
  if (n < 1 || n > 3) throw std::invalid_argument("tuple needs n in 1..3");
  double nd = static_cast<double>(n);
  if (!(alpha > 0.0 && alpha < nd)) throw std::invalid_argument("tuple needs 0 < alpha < n");
  if (!(r >= 1.0)) throw std::invalid_argument("tuple needs r >= 1");
  if (!(r < p && p < nd / alpha)) throw std::invalid_argument("tuple needs r < p < n/alpha");
  ExponentTuple t;
  t.n = n;
  t.alpha = alpha;
  t.r = r;
  t.p = p;
  t.q = 1.0 / (1.0 / p - alpha / nd);
  t.pprime = p / (p - 1.0);
  t.rprime = (r == 1.0) ? std::numeric_limits<double>::infinity() : r / (r - 1.0);
  double pr = p / r;
  t.prp = pr / (pr - 1.0);
  t.gamma1 = 1.0 - alpha / nd;
  t.gamma2 = (t.prp / t.q) * (1.0 - alpha * r / nd);
  t.sharp = std::max(t.gamma1, t.gamma2);
  return t;
}

double ExponentTuple::identity_residual_first() const {
  return (1.0 + prp * r / q) - (1.0 - alpha * r / n) * prp;
}

double ExponentTuple::identity_residual_second() const {
  return (1.0 / q + 1.0 / pprime) - (1.0 - alpha / n);
}

double sharp_exponent(const ExponentTuple& t) { return std::max(t.gamma1, t.gamma2); }

double alt_second_exponent(const ExponentTuple& t) {
  return (1.0 / t.q) * (1.0 + t.prp * t.r / t.p);
}

SparseFamily centered_family(const DyadicFrame& frame) {
  for (int a = 0; a < frame.dim(); ++a)
    if (Rat(2) * frame.origin(a) + frame.side() != 0)
      throw std::invalid_argument("centered family needs an origin-symmetric frame");
  const long long half = frame.cells_per_axis() / 2;
  SparseFamily s{frame, Rat(1, 2), {}, std::nullopt};
  const int kmax = frame.depth() - 1;
  for (int k = 0; k <= kmax; ++k) {
    IntBox b;
    b.dim = frame.dim();
    long long radius = half >> k;
    for (int a = 0; a < frame.dim(); ++a) {
      b.lo[a] = half - radius;
      b.hi[a] = half + radius;
    }
    s.members.push_back(FamilyMember{b, std::nullopt});
  }
  std::vector<std::vector<long long>> assign;
  for (int k = 0; k <= kmax; ++k) {
    const IntBox& outer = s.members[static_cast<size_t>(k)].box;
    std::vector<long long> e;
    if (k < kmax) {
      const IntBox& inner = s.members[static_cast<size_t>(k + 1)].box;
      for (long long c : cells_in_box(frame, outer)) {
        auto t = frame.cell_tuple(c);
        bool in_inner = true;
        for (int a = 0; a < frame.dim(); ++a)
          if (t[a] < inner.lo[a] || t[a] >= inner.hi[a]) in_inner = false;
        if (!in_inner) e.push_back(c);
      }
    } else {
      e = cells_in_box(frame, outer);
    }
    assign.push_back(std::move(e));
  }
  s.assignment = std::move(assign);
  return s;
}

namespace {

struct PairExponents {
  double af = 0.0;  // f = |x|^af chi_B(0,1)
  double aw = 0.0;  // w = |x|^aw
};

PairExponents example_pair(int example, const ExponentTuple& t, double eps) {
  PairExponents pe;
  double nd = static_cast<double>(t.n);
  if (example == 1) {
    pe.af = (eps - nd) / t.r;
    pe.aw = (nd - eps) / (t.r * t.prp);
  } else if (example == 2) {
    pe.aw = (eps - nd) / t.q;
    pe.af = kExample2Margin * eps - t.alpha;
  } else {
    throw std::invalid_argument("sharpness example must be 1 or 2");
  }
  return pe;
}

// ln of term_j = |Q_j|^alpha ||f||_{r,Q_j} = A0 * rho^j over the centered
// cubes of side 2^{1-j} (n = 1).
struct CenteredSeries {
  double lnA0 = 0.0;
  double lnrho = 0.0;  // per-level log factor; may be positive (growing)

  CenteredSeries(const ExponentTuple& t, double af, double eps) {
    (void)eps;
    double afr = af * t.r;
    if (afr <= -1.0) throw std::domain_error("f^r not integrable at the origin");
    lnA0 = t.alpha * kLn2 - std::log(afr + 1.0) / t.r;
    lnrho = -(afr / t.r + t.alpha) * kLn2;
  }

  double ln_vk(int k) const {  // ln of sum_{j<=k} A0 rho^j
    double kk = static_cast<double>(k);
    if (std::abs(lnrho) < 1e-14) return lnA0 + std::log(kk + 1.0);
    if (lnrho > 0.0)
      return lnA0 + (kk + 1.0) * lnrho + std::log1p(-std::exp(-(kk + 1.0) * lnrho)) -
             std::log(std::expm1(lnrho));
    return lnA0 + std::log1p(-std::exp((kk + 1.0) * lnrho)) - std::log(-std::expm1(lnrho));
  }
};

}  // namespace

double centered_af_on_shell(const ExponentTuple& t, int example, double eps, int k) {
  if (t.n != 1) throw std::invalid_argument("sharpness evaluation is n=1");
  PairExponents pe = example_pair(example, t, eps);
  CenteredSeries series(t, pe.af, eps);
  return std::exp(series.ln_vk(k));
}

ExperimentResult sharpness_run(int example, const ExponentTuple& t,
                               const std::vector<double>& eps_list, const DyadicFrame& frame,
                               double slope_tol) {
  if (t.n != 1 || frame.dim() != 1)
    throw std::invalid_argument("sharpness experiments run in n=1");
  if (eps_list.size() < 5) throw std::invalid_argument("need at least 5 eps points");
  for (double e : eps_list)
    if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("eps values must lie in (0,1)");
  if (frame.depth() < 4) throw std::invalid_argument("frame too shallow for the cube family");

  ExperimentResult res;
  res.example = example;
  res.target = (example == 1) ? t.gamma2 : t.gamma1;
  res.alt = alt_second_exponent(t);

  // the representable prefix of the family, with its explicit assignment
  SparseFamily family = centered_family(frame);
  res.family_verified = verify_sparse(family, Rat(1, 2)).pass;

  std::vector<double> eps_sorted = eps_list;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<double>());

  for (double eps : eps_sorted) {
    SharpnessRow row;
    row.eps = eps;
    try {
      PairExponents pe = example_pair(example, t, eps);
      // denominator || f w ||_p
      double e_den = t.p * (pe.af + pe.aw);
      if (e_den <= -1.0) throw std::domain_error("||f w||_p divergent");
      row.den_norm = std::pow(2.0 / (e_den + 1.0), 1.0 / t.p);
      // numerator || (A f) w ||_q over the full centered family
      double W = t.q * pe.aw;
      if (W <= -1.0) throw std::domain_error("w^q mass divergent near the origin");
      CenteredSeries series(t, pe.af, eps);
      double lnB = std::log(2.0 * (1.0 - std::pow(2.0, -(W + 1.0))) / (W + 1.0));
      double lnz = -(W + 1.0) * kLn2;
      double rate = t.q * std::max(series.lnrho, 0.0) + lnz;
      if (rate >= 0.0) throw std::domain_error("A-norm series divergent");
      double ref = 0.0, scaled = 0.0;
      bool have_ref = false;
      for (long long k = 0;; ++k) {
        double lt = t.q * series.ln_vk(static_cast<int>(k)) + lnB +
                    static_cast<double>(k) * lnz;
        if (!have_ref) {
          ref = lt;
          have_ref = true;
        }
        double term = std::exp(lt - ref);
        scaled += term;
        if (term < 1e-18 * scaled && k > 4) break;
        if (k > 50'000'000) throw std::domain_error("A-norm series did not converge");
      }
      row.num_norm = std::exp((ref + std::log(scaled)) / t.q);
      row.ratio = row.num_norm / row.den_norm;
      // characteristic of w^r over the frame's lattices
      row.t = apq_char(PowerWeight{pe.aw * t.r, 1.0}, t.p / t.r, t.q / t.r, frame);
    } catch (const std::domain_error& err) {
      row.dropped = true;
      row.warning = err.what();
    }
    res.rows.push_back(row);
  }

  // least squares of ln(ratio) on ln(t)
  int kept = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& row : res.rows) {
    if (row.dropped) continue;
    double x = std::log(row.t), y = std::log(row.ratio);
    ++kept;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += y * x;
  }
  if (kept < 2) throw std::domain_error("sharpness run: fewer than 2 valid rows");
  double denom = kept * sxx - sx * sx;
  res.slope = (kept * sxy - sx * sy) / denom;
  double mean_x = sx / kept;
  double ss = 0.0, sxxc = 0.0;
  double intercept = (sy - res.slope * sx) / kept;
  for (const auto& row : res.rows) {
    if (row.dropped) continue;
    double x = std::log(row.t), y = std::log(row.ratio);
    double e = y - (intercept + res.slope * x);
    ss += e * e;
    sxxc += (x - mean_x) * (x - mean_x);
  }
  res.stderr_ = (kept > 2) ? std::sqrt(ss / (kept - 2) / sxxc) : 0.0;
  res.pass = std::abs(res.slope - res.target) <= slope_tol * res.target && res.family_verified;
  return res;
}

void write_sharpness_csv(std::ostream& os, const ExperimentResult& result) {
  os << "eps,t,num_norm,den_norm,ratio\n";
  os.precision(17);
  for (const auto& row : result.rows) {
    if (row.dropped) {
      os << "# dropped eps=" << row.eps << ' ' << row.warning << '\n';
      continue;
    }
    os << row.eps << ',' << row.t << ',' << row.num_norm << ',' << row.den_norm << ','
       << row.ratio << '\n';
  }
  os << "slope," << result.slope << ",stderr," << result.stderr_ << '\n';
  os << "theory," << result.target << ",alt," << result.alt << '\n';
}

BoundRunResult bound_run(const ExponentTuple& t,
                         const std::vector<std::pair<Weight, GridFunction>>& corpus,
                         const DyadicFrame& frame, double budget) {
  BoundRunResult out;
  SparseFamily family = centered_family(frame);
  int idx = 0;
  for (const auto& [w, f] : corpus) {
    GridFunction af = sparse_apply(family, f, t.alpha, t.r);
    double num = weighted_norm(af, t.q, w);
    double den = weighted_norm(f, t.p, w);
    if (!(den > 0.0)) throw std::domain_error("bound run: ||f w||_p vanished");
    double tch = apq_char(weight_pow(w, t.r), t.p / t.r, t.q / t.r, frame);
    BoundRow row;
    row.label = weight_spec(w) + "#" + std::to_string(idx++);
    row.t = tch;
    row.ratio = num / den;
    row.normalized = row.ratio / std::pow(tch, t.sharp);
    out.max_normalized = std::max(out.max_normalized, row.normalized);
    out.rows.push_back(row);
  }
  out.pass = out.max_normalized <= budget;
  return out;
}

double weak_type_ratio(const KernelSpec& k, const GridFunction& f, const Weight& w,
                       const ExponentTuple& t, int lambda_grid) {
  if (!(t.alpha * t.r < static_cast<double>(t.n)))
    throw std::invalid_argument("weak type needs alpha r < n");
  if (lambda_grid < 2) throw std::invalid_argument("weak type needs a lambda grid");
  GridFunction tf = apply_kernel(k, f);
  double tmax = 0.0;
  for (long long i = 0; i < f.frame().cell_count(); ++i)
    tmax = std::max(tmax, std::abs(tf.value_at_center(i)));
  if (tmax == 0.0) return 0.0;
  double denom = 0.0;
  for (long long i = 0; i < f.frame().cell_count(); ++i)
    denom += cell_weighted_integral(f, i, t.r, w, t.r);
  if (!(denom > 0.0)) throw std::domain_error("weak type: zero denominator");
  Weight mu = weight_pow(w, t.r * t.n / (t.n - t.alpha * t.r));
  double best = 0.0;
  for (int i = 0; i < lambda_grid; ++i) {
    double frac = static_cast<double>(i) / (lambda_grid - 1);
    double lambda = tmax * 0.999 * std::pow(1e-4, 1.0 - frac);
    double measure = superlevel_measure(tf, lambda, mu);
    best = std::max(best, std::pow(lambda, t.r) * measure / denom);
  }
  return best;
}

KurtzResult kurtz_check(const KernelSpec& k, const GridFunction& f, const ExponentTuple& t) {
  if (!f.nonnegative()) throw std::invalid_argument("kurtz check needs f >= 0");
  GridFunction tf = apply_kernel(k, f);
  GridFunction sharp = sharp_maximal(tf);
  GridFunction mf = frac_maximal(f, t.alpha, t.r);
  KurtzResult out;
  bool nonzero = false;
  for (long long i = 0; i < f.frame().cell_count(); ++i) {
    double m = mf.value_at_center(i);
    if (m > 0.0) nonzero = true;
  }
  if (!nonzero) throw std::invalid_argument("kurtz check needs f not identically zero");
  for (long long i = 0; i < f.frame().cell_count(); ++i) {
    double m = mf.value_at_center(i);
    if (!(m > 0.0)) throw std::domain_error("kurtz check: maximal function vanished");
    double ratio = sharp.value_at_center(i) / m;
    if (ratio > out.ratio) {
      out.ratio = ratio;
      out.argmax_cell = i;
    }
  }
  return out;
}

std::vector<GridFunction> domination_corpus(const DyadicFrame& frame, int count,
                                            std::uint64_t seed, bool nonneg) {
  std::vector<GridFunction> out;
  std::uint64_t state = seed;
  const long long cells = frame.cell_count();
  int block_level = std::min(5, frame.depth() - 1);
  const long long block = 1LL << (frame.depth() - block_level);
  for (int c = 0; c < count; ++c) {
    std::vector<double> v(static_cast<size_t>(cells), 0.0);
    bool any = false;
    do {
      double cur = 0.0;
      for (long long i = 0; i < cells; ++i) {
        if (i % block == 0) {
          double u = splitmix(state);
          if (u < 0.25) {
            cur = 0.0;
          } else {
            double lo = nonneg ? 0.1 : -2.0;
            cur = lo + (2.0 - lo) * splitmix(state);
          }
        }
        v[static_cast<size_t>(i)] = cur;
        if (cur != 0.0) any = true;
      }
    } while (!any);
    out.push_back(GridFunction::from_values(frame, v));
  }
  return out;
}

}  // namespace fracsparse
