#include "fracsparse/weights.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fracsparse/quadrature.hpp"

namespace fracsparse {

namespace {

// Powered-weight integrals over cubes: closed form for power weights over
// any box, cell sums (clipped boxes must be contained) for grid weights.
struct PoweredWeight {
  const DyadicFrame& frame;
  bool global;
  PowTerm term;                        // power weights
  std::optional<CellTable> table;     // grid weights

  PoweredWeight(const DyadicFrame& f, const Weight& w, double e) : frame(f), global(true) {
    if (const auto* p = std::get_if<PowerWeight>(&w)) {
      term = PowTerm{std::pow(p->coeff, e), p->exponent * e};
      return;
    }
    global = false;
    std::vector<double> cellvals(static_cast<size_t>(f.cell_count()));
    for (long long i = 0; i < f.cell_count(); ++i) {
      PowTerm t = weight_cell_term(f, w, e, i);
      auto tup = f.cell_tuple(i);
      IntBox cb;
      cb.dim = f.dim();
      for (int a = 0; a < f.dim(); ++a) {
        cb.lo[a] = tup[a];
        cb.hi[a] = tup[a] + 1;
      }
      cellvals[static_cast<size_t>(i)] = pow_term_box_integral(f, t, cb);
    }
    table.emplace(f, cellvals);
  }

  double integral(const IntBox& box) const {
    if (global) return pow_term_box_integral(frame, term, box);
    return table->box_sum(box);
  }
};

template <typename PerCube>
void scan_cubes(const DyadicFrame& f, bool contained_only, PerCube&& fn) {
  for (int tag = 0; tag <= shifted_family_count(f.dim()); ++tag)
    for (int level = 0; level <= f.depth(); ++level)
      for (const DyadicCube& q : cubes_at(f, tag, level)) {
        if (contained_only && !f.domain_box().contains(cube_box(q, f))) continue;
        fn(q);
      }
}

}  // namespace

CharReport apq_char_report(const Weight& w, double p, double q, const DyadicFrame& frame,
                           bool keep_rows) {
  if (!(p > 1.0) || !(q > 0.0))
    throw std::invalid_argument("apq characteristic needs p > 1 and q > 0");
  const double pprime = p / (p - 1.0);
  PoweredWeight wq(frame, w, q);
  PoweredWeight wdual(frame, w, -pprime);
  const bool contained = !weight_is_global(w);
  CharReport rep;
  scan_cubes(frame, contained, [&](const DyadicCube& cube) {
    IntBox box = cube_box(cube, frame);
    double measure = rat_d(frame.box_measure(box));
    double a = wq.integral(box) / measure;
    double b = wdual.integral(box) / measure;
    double val = a * std::pow(b, q / pprime);
    if (keep_rows) rep.rows.push_back({cube, val});
    if (val > rep.value) {
      rep.value = val;
      rep.argmax = cube;
    }
  });
  return rep;
}

double apq_char(const Weight& w, double p, double q, const DyadicFrame& frame) {
  return apq_char_report(w, p, q, frame, false).value;
}

double as_char(const Weight& w, double s, const DyadicFrame& frame) {
  if (!(s > 1.0)) throw std::invalid_argument("A_s characteristic needs s > 1");
  PoweredWeight w1(frame, w, 1.0);
  PoweredWeight wdual(frame, w, -1.0 / (s - 1.0));
  const bool contained = !weight_is_global(w);
  double best = 0.0;
  scan_cubes(frame, contained, [&](const DyadicCube& cube) {
    IntBox box = cube_box(cube, frame);
    double measure = rat_d(frame.box_measure(box));
    double a = w1.integral(box) / measure;
    double b = wdual.integral(box) / measure;
    best = std::max(best, a * std::pow(b, s - 1.0));
  });
  return best;
}

namespace {

// (running-max of ancestor averages) integrated over the bisection tree of
// one cube, descending to about cell resolution.  Rational corners keep the
// geometry exact; integrals are evaluated in doubles.
struct FujiiWilsonScan {
  const DyadicFrame& frame;
  const PoweredWeight& weight;
  bool aligned_only;  // grid weights can only integrate cell-aligned boxes

  double integral_over(const std::array<Rat, kMaxDim>& lo, const std::array<Rat, kMaxDim>& hi,
                       bool& ok) const {
    ok = true;
    if (weight.global) {
      if (frame.dim() == 1) {
        return weight.term.coeff *
               abs_power_integral_1d(weight.term.gamma, rat_d(lo[0]), rat_d(hi[0]));
      }
      std::array<double, 3> dlo{}, dhi{};
      for (int a = 0; a < frame.dim(); ++a) {
        dlo[a] = rat_d(lo[a]);
        dhi[a] = rat_d(hi[a]);
      }
      // direct box integral in true coordinates
      return pow_term_true_box(dlo, dhi);
    }
    // grid weight: need integer cell alignment
    IntBox box;
    box.dim = frame.dim();
    Rat h = frame.cell_side();
    for (int a = 0; a < frame.dim(); ++a) {
      Rat ulo = (lo[a] - frame.origin(a)) / h;
      Rat uhi = (hi[a] - frame.origin(a)) / h;
      if (ulo.get_den() != 1 || uhi.get_den() != 1) {
        ok = false;
        return 0.0;
      }
      box.lo[a] = static_cast<long long>(ulo.get_num().get_si());
      box.hi[a] = static_cast<long long>(uhi.get_num().get_si());
    }
    return weight.table->box_sum(box);
  }

  double pow_term_true_box(const std::array<double, 3>& lo, const std::array<double, 3>& hi) const {
    // n >= 2 radial power over a true-coordinate box
    auto fn = [this](const std::array<double, 3>& x) {
      double r2 = 0.0;
      for (int a = 0; a < frame.dim(); ++a) r2 += x[a] * x[a];
      return std::pow(r2, 0.5 * weight.term.gamma);
    };
    return weight.term.coeff *
           quad::box_integrate(frame.dim(), lo, hi, fn, weight.term.gamma, 1e-8);
  }

  double descend(const std::array<Rat, kMaxDim>& lo, const std::array<Rat, kMaxDim>& hi,
                 int depth_left, double running_avg) const {
    bool ok = true;
    double integral = integral_over(lo, hi, ok);
    Rat measure = 1;
    for (int a = 0; a < frame.dim(); ++a) measure *= hi[a] - lo[a];
    double dm = rat_d(measure);
    if (!ok) return running_avg * dm;  // stop at misaligned boxes
    double avg = integral / dm;
    double running = std::max(running_avg, avg);
    if (depth_left == 0) return running * dm;
    double sum = 0.0;
    int parts = 1 << frame.dim();
    for (int m = 0; m < parts; ++m) {
      std::array<Rat, kMaxDim> clo = lo, chi = hi;
      for (int a = 0; a < frame.dim(); ++a) {
        Rat mid = (lo[a] + hi[a]) / 2;
        if ((m >> a) & 1)
          clo[a] = mid;
        else
          chi[a] = mid;
      }
      sum += descend(clo, chi, depth_left - 1, running);
    }
    return sum;
  }
};

}  // namespace

double ainfty_char(const Weight& w, const DyadicFrame& frame) {
  PoweredWeight w1(frame, w, 1.0);
  const bool contained = !weight_is_global(w);
  FujiiWilsonScan scan{frame, w1, contained};
  double best = 0.0;
  scan_cubes(frame, contained, [&](const DyadicCube& cube) {
    IntBox box = cube_box(cube, frame);
    std::array<Rat, kMaxDim> lo{}, hi{};
    for (int a = 0; a < frame.dim(); ++a) {
      lo[a] = frame.coord(box.lo[a], a);
      hi[a] = frame.coord(box.hi[a], a);
    }
    // resolve the inner maximal down to about one cell
    long long widest = 0;
    for (int a = 0; a < frame.dim(); ++a) widest = std::max(widest, box.hi[a] - box.lo[a]);
    int depth = 0;
    while ((widest >> depth) > 1) ++depth;
    bool ok = true;
    double wq = scan.integral_over(lo, hi, ok);
    if (!ok || wq <= 0.0) return;
    double fw = scan.descend(lo, hi, depth, 0.0) / wq;
    best = std::max(best, fw);
  });
  return best;
}

RelationReport apq_relations(const Weight& w, double p, double q, const DyadicFrame& frame) {
  RelationReport rep;
  const double pprime = p / (p - 1.0);
  rep.apq = apq_char(w, p, q, frame);
  rep.as_wq = as_char(weight_pow(w, q), 1.0 + q / pprime, frame);
  rep.as_wdual = as_char(weight_pow(w, -pprime), 1.0 + pprime / q, frame);
  double target2 = std::pow(rep.apq, pprime / q);
  rep.dev_first = std::abs(rep.as_wq - rep.apq) / rep.apq;
  rep.dev_second = std::abs(rep.as_wdual - target2) / target2;
  rep.max_dev = std::max(rep.dev_first, rep.dev_second);
  return rep;
}

void write_char_csv(std::ostream& os, const DyadicFrame& frame, const CharReport& report) {
  os << "tag,level";
  for (int a = 0; a < frame.dim(); ++a) os << ",i" << a;
  os << ",value\n";
  for (const CharRow& row : report.rows) {
    os << row.cube.tag << ',' << row.cube.level;
    for (int a = 0; a < frame.dim(); ++a) os << ',' << row.cube.idx[a];
    os << ',' << row.value << '\n';
  }
  os << "sup," << report.value << '\n';
}

}  // namespace fracsparse
