#include "fracsparse/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fracsparse {

namespace {

template <typename PerCube>
void for_all_lattice_cubes(const DyadicFrame& f, PerCube&& fn) {
  for (int tag = 0; tag <= shifted_family_count(f.dim()); ++tag)
    for (int level = 0; level <= f.depth(); ++level)
      for (const DyadicCube& q : cubes_at(f, tag, level)) fn(q);
}

}  // namespace

GridFunction frac_maximal(const GridFunction& f, double alpha, double r) {
  const DyadicFrame& fr = f.frame();
  if (!(alpha >= 0.0 && alpha < static_cast<double>(fr.dim())))
    throw std::invalid_argument("frac_maximal needs 0 <= alpha < n");
  if (r < 1.0) throw std::invalid_argument("frac_maximal needs r >= 1");
  CellTable table = integral_table(f, r);
  std::vector<double> out(static_cast<size_t>(fr.cell_count()), 0.0);
  const double n = static_cast<double>(fr.dim());
  for_all_lattice_cubes(fr, [&](const DyadicCube& q) {
    IntBox box = cube_box(q, fr);
    double measure = rat_d(fr.box_measure(box));
    double val = std::pow(measure, alpha / n) *
                 std::pow(std::max(table.box_sum(box), 0.0) / measure, 1.0 / r);
    for (long long cell : cells_in_box(fr, box)) {
      double& o = out[static_cast<size_t>(cell)];
      o = std::max(o, val);
    }
  });
  return GridFunction::from_values(fr, out);
}

namespace {

// int over [a,b] (one-signed) of |cf |y|^gamma - c| dy, exact via the
// crossing point.
double power_dev_patch(double cf, double gamma, double c, double a, double b) {
  if (b <= a) return 0.0;
  bool neg = b <= 0.0;
  double u = neg ? -b : a, v = neg ? -a : b;  // magnitudes, 0 <= u < v
  auto prim = [&](double y) {  // antiderivative of cf y^gamma - c on (0,inf)
    double first = (gamma == -1.0) ? cf * std::log(y) : cf * std::pow(y, gamma + 1.0) / (gamma + 1.0);
    return first - c * y;
  };
  double cross = 0.0;
  bool has_cross = false;
  if (c > 0.0 && cf > 0.0 && gamma != 0.0) {
    cross = std::pow(c / cf, 1.0 / gamma);
    has_cross = cross > u && cross < v;
  }
  if (!has_cross) {
    double mid = std::sqrt(std::max(u, 1e-300) * v);
    double sign = (cf * std::pow(mid, gamma) - c) >= 0.0 ? 1.0 : -1.0;
    return sign * (prim(v) - prim(u));
  }
  return std::abs(prim(cross) - prim(u)) + std::abs(prim(v) - prim(cross));
}

// exact int over one cell of |g - c|
double cell_abs_dev(const GridFunction& g, long long cell, double c) {
  const DyadicFrame& fr = g.frame();
  const CellPiece& p = g.piece(cell);
  if (p.kind == PieceKind::Constant)
    return std::abs(p.value - c) * rat_d(fr.cell_measure());
  if (fr.dim() != 1)
    throw std::domain_error("sharp maximal of power cells is exact only in n=1");
  auto t = fr.cell_tuple(cell);
  double a = fr.coord_d(t[0], 0), b = fr.coord_d(t[0] + 1, 0);
  if (a < 0.0 && b > 0.0)
    return power_dev_patch(p.value, p.gamma, c, a, 0.0) +
           power_dev_patch(p.value, p.gamma, c, 0.0, b);
  return power_dev_patch(p.value, p.gamma, c, a, b);
}

}  // namespace

GridFunction sharp_maximal(const GridFunction& g) {
  const DyadicFrame& fr = g.frame();
  CellTable means = signed_table(g);
  std::vector<double> out(static_cast<size_t>(fr.cell_count()), 0.0);
  for_all_lattice_cubes(fr, [&](const DyadicCube& q) {
    IntBox box = cube_box(q, fr);
    double measure = rat_d(fr.box_measure(box));
    double avg = means.box_sum(box) / measure;
    double dev = 0.0;
    auto cells = cells_in_box(fr, box);
    for (long long cell : cells) dev += cell_abs_dev(g, cell, avg);
    // zero extension outside the domain still deviates from the average
    double covered = static_cast<double>(cells.size()) * rat_d(fr.cell_measure());
    dev += std::abs(avg) * (measure - covered);
    double val = dev / measure;
    for (long long cell : cells) {
      double& o = out[static_cast<size_t>(cell)];
      o = std::max(o, val);
    }
  });
  return GridFunction::from_values(fr, out);
}

namespace {

struct TruncationScan {
  const DyadicFrame& frame;
  const KernelApplier& applier;
  const std::vector<double>& base;  // T(f chi_{3Q0}) at cells of the frame
  std::vector<double>& out;

  // Depth-first over the dyadic tree under Q0, carrying the running max of
  // m_Q = max_{xi in Q} |base(xi) - T(f chi_{3Q})(xi)| over the ancestors.
  void descend(const DyadicCube& q, double inherited) {
    IntBox box = cube_box(q, frame);
    IntBox tri = triple_box(box);
    double m_q = 0.0;
    for (long long cell : cells_in_box(frame, box)) {
      double v = std::abs(base[static_cast<size_t>(cell)] - applier.apply(tri, cell));
      m_q = std::max(m_q, v);
    }
    double running = std::max(inherited, m_q);
    if (q.level == frame.depth()) {
      long long cell = cells_in_box(frame, box).front();
      out[static_cast<size_t>(cell)] = running;
      return;
    }
    for (const DyadicCube& c : children(q, frame)) descend(c, running);
  }
};

}  // namespace

GridFunction grand_truncated(const KernelSpec& k, const GridFunction& f, const DyadicCube& q0) {
  const DyadicFrame& fr = f.frame();
  if (q0.tag != 0) throw std::invalid_argument("grand_truncated expects a base-lattice cube");
  IntBox box0 = cube_box(q0, fr);
  IntBox tri0 = triple_box(box0);
  KernelApplier applier(k, f);
  std::vector<double> base(static_cast<size_t>(fr.cell_count()), 0.0);
  for (long long cell : cells_in_box(fr, box0))
    base[static_cast<size_t>(cell)] = applier.apply(tri0, cell);
  std::vector<double> out(static_cast<size_t>(fr.cell_count()), 0.0);
  TruncationScan scan{fr, applier, base, out};
  scan.descend(q0, 0.0);
  return GridFunction::from_values(fr, out);
}

GridFunction grand_maximal(const KernelSpec& k, const GridFunction& f) {
  // f lives on the root cube, so chi_{R^n \ 3Q} and chi_{3root \ 3Q} cut the
  // same set and the truncation at the root covers every base cube.
  DyadicCube root;
  root.tag = 0;
  root.level = 0;
  return grand_truncated(k, f, root);
}

}  // namespace fracsparse
