#pragma once

// Muckenhoupt-type characteristics over the frame's lattices: A_{p,q}, the
// classical A_s, a Fujii-Wilson A_infty, and the class relations between
// them.  Power weights integrate globally in closed form; grid weights
// restrict the supremum to cubes inside the domain.

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "fracsparse/gridfn.hpp"

namespace fracsparse {

struct CharRow {
  DyadicCube cube;
  double value;
};

struct CharReport {
  double value = 0.0;
  std::optional<DyadicCube> argmax;
  std::vector<CharRow> rows;  // per-cube values in canonical cube order
};

/// sup over lattice cubes of (avg_Q w^q) (avg_Q w^{-p'})^{q/p'}.
double apq_char(const Weight& w, double p, double q, const DyadicFrame& frame);
CharReport apq_char_report(const Weight& w, double p, double q, const DyadicFrame& frame,
                           bool keep_rows = false);

/// sup over lattice cubes of (avg_Q w) (avg_Q w^{-1/(s-1)})^{s-1}, s > 1.
double as_char(const Weight& w, double s, const DyadicFrame& frame);

/// Fujii-Wilson sup over lattice cubes of (1/w(Q)) int_Q M_dyadic(w chi_Q),
/// the inner maximal restricted to Q's own bisection tree at cell resolution.
double ainfty_char(const Weight& w, const DyadicFrame& frame);

struct RelationReport {
  double apq = 0.0;        // [w]_{A_{p,q}}
  double as_wq = 0.0;      // [w^q]_{A_{1+q/p'}}
  double as_wdual = 0.0;   // [w^{-p'}]_{A_{1+p'/q}}
  double dev_first = 0.0;  // |as_wq - apq| / apq
  double dev_second = 0.0; // |as_wdual - apq^{p'/q}| / apq^{p'/q}
  double max_dev = 0.0;
};

/// Class relations [w^q]_{A_{1+q/p'}} = [w]_{A_{p,q}} and
/// [w^{-p'}]_{A_{1+p'/q}} = [w]_{A_{p,q}}^{p'/q}, checked per cube through
/// independent code paths.
RelationReport apq_relations(const Weight& w, double p, double q, const DyadicFrame& frame);

/// CSV rows "tag,level,idx...,value".
void write_char_csv(std::ostream& os, const DyadicFrame& frame, const CharReport& report);

}  // namespace fracsparse
