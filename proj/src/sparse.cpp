#include "fracsparse/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fracsparse/maximal.hpp"
#include "fracsparse/quadrature.hpp"

namespace fracsparse {

namespace {

struct Builder {
  const KernelSpec& kernel;
  const GridFunction& f;
  double r;
  Rat theta;
  Rat lambda;
  CellTable norm_table;

  SparseBuildResult result;
  std::vector<std::vector<long long>> raw_assign;

  Builder(const KernelSpec& k_, const GridFunction& f_, double r_, Rat theta_, Rat lambda_)
      : kernel(k_), f(f_), r(r_), theta(std::move(theta_)), lambda(std::move(lambda_)),
        norm_table(integral_table(f_, r_)),
        result{SparseFamily{f_.frame(), Rat(1, 2), {}, std::nullopt},
               SparseFamily{f_.frame(), Rat(1, 2), {}, std::nullopt},
               {},
               0.0,
               0,
               false} {}

  void visit(const DyadicCube& p) {
    const DyadicFrame& fr = f.frame();
    GridFunction m = grand_truncated(kernel, f, p);
    IntBox box = cube_box(p, fr);
    std::vector<long long> cells = cells_in_box(fr, box);
    const long long cell_count = static_cast<long long>(cells.size());

    // (1-theta)-quantile threshold: the smallest tau with |{m > tau}| <= theta |P|
    std::vector<double> values;
    values.reserve(cells.size());
    for (long long c : cells) values.push_back(m.value_at_center(c));
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    // smallest tau with #{m > tau} <= floor(theta |P| / h^n): the (t+1)-th
    // largest value, ties only shrink the superlevel set
    Rat allowed = theta * rat_ll(cell_count);
    long long t = static_cast<long long>(mpz_class(allowed.get_num() / allowed.get_den()).get_si());
    double tau = sorted[static_cast<size_t>(std::min(t, cell_count - 1))];

    std::vector<long long> e_cells;
    for (size_t i = 0; i < cells.size(); ++i)
      if (values[i] > tau) e_cells.push_back(cells[i]);

    // realized constant against the claim scale |3P|^(alpha/n) ||f||_{r,3P}
    IntBox tri = triple_box(box);
    double tri_measure = rat_d(fr.box_measure(tri));
    double scale = std::pow(tri_measure, kernel.alpha / fr.dim()) *
                   local_norm_from_table(fr, norm_table, r, tri);
    double c_realized = scale > 0.0 ? tau / scale : 0.0;

    // children: CZ selection of chi_E at height lambda
    std::vector<DyadicCube> kids;
    if (!e_cells.empty() && p.level < fr.depth()) {
      std::vector<Rat> density(static_cast<size_t>(fr.cell_count()), Rat(0));
      for (long long c : e_cells) density[static_cast<size_t>(c)] = 1;
      kids = cz_select(fr, density, p, lambda);
    }

    long long kid_cells = 0;
    for (const auto& kid : kids) kid_cells += cube_box(kid, fr).cell_count();
    // construction guarantee: sum |children| <= |P| / 2, exactly
    if (rat_ll(kid_cells) > rat_ll(cell_count) / 2)
      throw std::logic_error("sparse construction violated the half-measure bound");

    SparseNode node;
    node.cube = p;
    node.tau = tau;
    node.c_realized = c_realized;
    node.e_fraction = Rat(rat_ll(static_cast<long long>(e_cells.size())) / rat_ll(cell_count));
    node.child_fraction = Rat(rat_ll(kid_cells) / rat_ll(cell_count));
    node.child_count = static_cast<int>(kids.size());
    result.nodes.push_back(node);
    result.max_c = std::max(result.max_c, c_realized);
    result.depth_reached = std::max(result.depth_reached, p.level);
    if (p.level == fr.depth()) result.truncated = true;

    // canonical E of the raw family: P minus the selected children
    std::vector<char> removed(cells.size(), 0);
    for (const auto& kid : kids) {
      auto sub = cells_in_box(fr, cube_box(kid, fr));
      size_t a = 0;
      for (long long c : sub) {
        while (a < cells.size() && cells[a] < c) ++a;
        if (a < cells.size() && cells[a] == c) removed[a] = 1;
      }
    }
    std::vector<long long> e_assign;
    for (size_t i = 0; i < cells.size(); ++i)
      if (!removed[i]) e_assign.push_back(cells[i]);

    result.raw.members.push_back(FamilyMember{box, p});
    auto [tag, host] = triple_host(p, fr);
    (void)tag;
    result.hosted.members.push_back(FamilyMember{cube_box(host, fr), host});
    raw_assign.push_back(std::move(e_assign));

    for (const auto& kid : kids) visit(kid);
  }
};

}  // namespace

SparseBuildResult build_sparse_family(const KernelSpec& k, const GridFunction& f,
                                      const DyadicCube& q0, double r,
                                      std::optional<Rat> theta, std::optional<Rat> lambda) {
  const DyadicFrame& fr = f.frame();
  if (q0.tag != 0) throw std::invalid_argument("sparse construction starts from a base cube");
  if (r < 1.0) throw std::invalid_argument("sparse construction needs r >= 1");
  const int n = fr.dim();
  Rat th = theta.value_or(rat_pow2(-(n + 2)));
  Rat la = lambda.value_or(rat_pow2(-(n + 1)));
  if (!(th > 0 && th < 1) || !(la > 0 && la < 1))
    throw std::invalid_argument("theta and lambda must lie in (0,1)");
  if (Rat(2) * th > la)
    throw std::invalid_argument("need 2 theta <= lambda for the half-measure guarantee");

  Builder b(k, f, r, th, la);
  b.visit(q0);

  // canonical member order, assignment arrays aligned
  std::vector<size_t> order(b.result.raw.members.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    return cube_less(*b.result.raw.members[i].cube, *b.result.raw.members[j].cube);
  });
  // the hosted triples measure 3^n |P|, so |E_P| >= |P|/2 = |3P| / (2*3^n)
  SparseBuildResult out{SparseFamily{fr, Rat(1, 2), {}, std::nullopt},
                        SparseFamily{fr, Rat(1, 2 * shifted_family_count(n)), {}, std::nullopt},
                        {},
                        0.0,
                        0,
                        false};
  out.nodes.reserve(order.size());
  std::vector<std::vector<long long>> assign;
  for (size_t i : order) {
    out.raw.members.push_back(b.result.raw.members[i]);
    out.hosted.members.push_back(b.result.hosted.members[i]);
    assign.push_back(b.raw_assign[i]);
    out.nodes.push_back(b.result.nodes[i]);
  }
  out.raw.assignment = assign;
  out.hosted.assignment = std::move(assign);
  out.max_c = b.result.max_c;
  out.depth_reached = b.result.depth_reached;
  out.truncated = b.result.truncated;
  return out;
}

GridFunction sparse_apply(const SparseFamily& s, const GridFunction& f, double alpha, double r) {
  return sparse_apply(std::vector<SparseFamily>{s}, f, alpha, r);
}

GridFunction sparse_apply(const std::vector<SparseFamily>& families, const GridFunction& f,
                          double alpha, double r) {
  const DyadicFrame& fr = f.frame();
  if (r < 1.0) throw std::invalid_argument("sparse operator needs r >= 1");
  CellTable table = integral_table(f, r);
  std::vector<double> out(static_cast<size_t>(fr.cell_count()), 0.0);
  const double n = static_cast<double>(fr.dim());
  for (const SparseFamily& s : families) {
    if (!(s.frame == fr)) throw std::invalid_argument("family frame mismatch");
    for (const FamilyMember& m : s.members) {
      double measure = rat_d(fr.box_measure(m.box));
      double val = std::pow(measure, alpha / n) * local_norm_from_table(fr, table, r, m.box);
      for (long long cell : cells_in_box(fr, m.box)) out[static_cast<size_t>(cell)] += val;
    }
  }
  return GridFunction::from_values(fr, out);
}

std::vector<SparseFamily> split_by_tag(const SparseFamily& hosted) {
  std::vector<SparseFamily> out;
  for (const FamilyMember& m : hosted.members) {
    int tag = m.cube ? m.cube->tag : 0;
    auto it = std::find_if(out.begin(), out.end(), [&](const SparseFamily& s) {
      return s.members.front().cube && s.members.front().cube->tag == tag;
    });
    SparseFamily* fam;
    if (it == out.end()) {
      out.push_back(SparseFamily{hosted.frame, hosted.eta, {}, std::nullopt});
      fam = &out.back();
    } else {
      fam = &*it;
    }
    fam->members.push_back(m);
  }
  return out;
}

GridFunction gen_sparse_apply(const SparseFamily& s, const GridFunction& g, const Weight& sigma,
                              double beta, double srecip) {
  const DyadicFrame& fr = g.frame();
  if (!(s.frame == fr)) throw std::invalid_argument("family frame mismatch");
  if (!g.nonnegative()) throw std::domain_error("generalized sparse operator needs g >= 0");
  if (!(srecip > 0.0)) throw std::invalid_argument("exponent s must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in (0,1]");
  std::vector<double> cellvals(static_cast<size_t>(fr.cell_count()));
  for (long long i = 0; i < fr.cell_count(); ++i)
    cellvals[static_cast<size_t>(i)] = cell_weighted_integral(g, i, 1.0, sigma, 1.0);
  CellTable table(fr, cellvals);
  std::vector<double> acc(static_cast<size_t>(fr.cell_count()), 0.0);
  for (const FamilyMember& m : s.members) {
    double measure = rat_d(fr.box_measure(m.box));
    double integral = table.box_sum(m.box);
    double val = std::pow(std::pow(measure, -beta) * integral, srecip);
    for (long long cell : cells_in_box(fr, m.box)) acc[static_cast<size_t>(cell)] += val;
  }
  std::vector<double> out(acc.size());
  for (size_t i = 0; i < acc.size(); ++i) out[i] = std::pow(acc[i], 1.0 / srecip);
  return GridFunction::from_values(fr, out);
}

double weight_box_integral(const DyadicFrame& f, const Weight& w, const IntBox& box) {
  if (box.empty()) return 0.0;
  if (const auto* p = std::get_if<PowerWeight>(&w))
    return pow_term_box_integral(f, PowTerm{p->coeff, p->exponent}, box);
  if (!f.domain_box().contains(box))
    throw std::domain_error("grid weights are defined on the domain only");
  double sum = 0.0;
  for (long long cell : cells_in_box(f, box)) {
    PowTerm t = weight_cell_term(f, w, 1.0, cell);
    auto tup = f.cell_tuple(cell);
    IntBox cb;
    cb.dim = f.dim();
    for (int a = 0; a < f.dim(); ++a) {
      cb.lo[a] = tup[a];
      cb.hi[a] = tup[a] + 1;
    }
    sum += pow_term_box_integral(f, t, cb);
  }
  return sum;
}

TwoWeightChar two_weight_char(const SparseFamily& s, const Weight& u, const Weight& sigma,
                              double p, double q, double beta) {
  if (!(p > 1.0) || !(q > 0.0)) throw std::invalid_argument("two-weight char needs p > 1, q > 0");
  const double pprime = p / (p - 1.0);
  TwoWeightChar out;
  for (size_t i = 0; i < s.members.size(); ++i) {
    const IntBox& box = s.members[i].box;
    double measure = rat_d(s.frame.box_measure(box));
    double uq = weight_box_integral(s.frame, u, box);
    double sq = weight_box_integral(s.frame, sigma, box);
    // exponent-combined in log space so exact cancellations stay exact
    double lv = -beta * std::log(measure) + std::log(uq) / q + std::log(sq) / pprime;
    double val = std::exp(lv);
    if (val > out.value) {
      out.value = val;
      out.argmax = i;
    }
  }
  return out;
}

DominationResult domination_ratio(const KernelSpec& k, const GridFunction& f,
                                  const std::vector<SparseFamily>& families, double alpha,
                                  double r) {
  const DyadicFrame& fr = f.frame();
  GridFunction tf = apply_kernel(k, f);
  GridFunction af = sparse_apply(families, f, alpha, r);
  double tmax = 0.0;
  for (long long i = 0; i < fr.cell_count(); ++i)
    tmax = std::max(tmax, std::abs(tf.value_at_center(i)));
  DominationResult out;
  const double tol = 1e-12 * std::max(tmax, 1.0);
  for (long long i = 0; i < fr.cell_count(); ++i) {
    double tv = std::abs(tf.value_at_center(i));
    double av = af.value_at_center(i);
    if (av <= 0.0) {
      if (tv > tol) ++out.violations;
      continue;
    }
    double ratio = tv / av;
    if (ratio > out.ratio) {
      out.ratio = ratio;
      out.argmax_cell = i;
    }
  }
  return out;
}

void write_build_report(std::ostream& os, const SparseBuildResult& result) {
  os << "# node records: tag level idx... tau c_realized |E|/|P| children\n";
  const int dim = result.raw.frame.dim();
  for (const SparseNode& n : result.nodes) {
    os << n.cube.tag << ' ' << n.cube.level;
    for (int a = 0; a < dim; ++a) os << ' ' << n.cube.idx[a];
    os << " tau=" << n.tau << " c=" << n.c_realized << " e_frac=" << rat_str(n.e_fraction)
       << " children=" << n.child_count << '\n';
  }
  os << "summary nodes=" << result.nodes.size() << " depth=" << result.depth_reached
     << " max_c=" << result.max_c << " truncated=" << (result.truncated ? 1 : 0) << '\n';
}

}  // namespace fracsparse
