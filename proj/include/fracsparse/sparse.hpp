#pragma once

// Stopping-time construction of sparse families from the grand maximal
// truncation, the fractional sparse operators, the generalized two-weight
// sparse operator, and the instance domination check.

#include <iosfwd>
#include <optional>

#include "fracsparse/dyadic.hpp"
#include "fracsparse/gridfn.hpp"
#include "fracsparse/kernels.hpp"

namespace fracsparse {

struct SparseNode {
  DyadicCube cube;      // raw base cube P
  double tau = 0.0;     // (1-theta)-quantile of the local grand truncation on P
  double c_realized = 0.0;  // tau / (|3P|^(alpha/n) ||f||_{r,3P})
  Rat e_fraction{0};        // |E| / |P|, exact
  Rat child_fraction{0};    // sum of selected children measures / |P|, exact
  int child_count = 0;
};

struct SparseBuildResult {
  SparseFamily raw;     // base cubes P, explicit E assignment, 1/2-sparse
  SparseFamily hosted;  // the triples 3P in their shifted lattices, same E sets
  std::vector<SparseNode> nodes;
  double max_c = 0.0;
  int depth_reached = 0;
  bool truncated = false;  // the recursion reached the finest level
};

/// Recursive selection: at each node P take the (1-theta)-quantile threshold
/// of the local grand truncation, let E be its strict superlevel set, select
/// the next generation by Calderon-Zygmund selection of chi_E at height
/// lambda, and recurse.  Guarantees sum |children| <= |P| / 2 at every node.
/// Defaults: theta = 2^-(n+2), lambda = 2^-(n+1).
SparseBuildResult build_sparse_family(const KernelSpec& k, const GridFunction& f,
                                      const DyadicCube& q0, double r,
                                      std::optional<Rat> theta = std::nullopt,
                                      std::optional<Rat> lambda = std::nullopt);

/// A^alpha_{r,S} f = sum over members |Q|^(alpha/n) ||f||_{r,Q} chi_Q.
GridFunction sparse_apply(const SparseFamily& s, const GridFunction& f, double alpha, double r);
/// Sum over a list of families (the 3^n hosted lattices).
GridFunction sparse_apply(const std::vector<SparseFamily>& families, const GridFunction& f,
                          double alpha, double r);

/// Split a hosted family into per-lattice families (by member tag).
std::vector<SparseFamily> split_by_tag(const SparseFamily& hosted);

/// Generalized sparse operator (sum over members of (|Q|^-beta int_Q g sigma)^s chi_Q)^(1/s)
/// for g >= 0, 0 < s, 0 < beta <= 1.
GridFunction gen_sparse_apply(const SparseFamily& s, const GridFunction& g, const Weight& sigma,
                              double beta, double srecip);

/// Two-weight characteristic sup over members of |Q|^-beta u(Q)^(1/q) sigma(Q)^(1/p').
struct TwoWeightChar {
  double value = 0.0;
  std::optional<size_t> argmax;
};
TwoWeightChar two_weight_char(const SparseFamily& s, const Weight& u, const Weight& sigma,
                              double p, double q, double beta);

/// max over cells of |T f| / A f (and where it happens); cells where A f
/// vanishes but |T f| does not are reported as violations.
struct DominationResult {
  double ratio = 0.0;
  long long argmax_cell = -1;
  long long violations = 0;
};
DominationResult domination_ratio(const KernelSpec& k, const GridFunction& f,
                                  const std::vector<SparseFamily>& families, double alpha,
                                  double r);

/// Integral of a weight over a box (global closed form for power weights;
/// grid weights require the box to stay inside the domain).
double weight_box_integral(const DyadicFrame& f, const Weight& w, const IntBox& box);

/// Plain-text report: one line per node (cube, tau, c, |E|/|P|) plus summary.
void write_build_report(std::ostream& os, const SparseBuildResult& result);

}  // namespace fracsparse
