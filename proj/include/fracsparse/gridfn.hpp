#pragma once

// Discretized functions with exact power-law cell moments.  Every per-cell
// integrand that the library needs (|f|^r, |f w|^p, f*sigma, ...) reduces to
// coeff*|x|^gamma on a cell, which has a closed form in n = 1 and a
// tolerance-driven adaptive rule in n = 2, 3.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "fracsparse/dyadic.hpp"

namespace fracsparse {

enum class PieceKind { Constant, Power };

/// Constant: f = value on the cell.  Power: f = coeff * |x|^gamma with the
/// singular center fixed at the coordinate origin; coeff >= 0 (signs are
/// allowed only on constant pieces).
struct CellPiece {
  PieceKind kind = PieceKind::Constant;
  double value = 0.0;  // constant value, or power coefficient
  double gamma = 0.0;  // power exponent (unused for constants)
};

class GridFunction {
 public:
  GridFunction(DyadicFrame frame, std::vector<CellPiece> cells);

  static GridFunction constant(const DyadicFrame& f, double value);
  static GridFunction power(const DyadicFrame& f, double coeff, double gamma);
  static GridFunction indicator(const DyadicFrame& f, const IntBox& box, double value = 1.0);
  static GridFunction from_values(const DyadicFrame& f, const std::vector<double>& v);

  const DyadicFrame& frame() const { return frame_; }
  const CellPiece& piece(long long flat) const { return cells_.at(static_cast<size_t>(flat)); }
  void set_piece(long long flat, const CellPiece& p);

  double value_at_center(long long flat) const;
  std::vector<double> center_values() const;

  /// Same function one level deeper (pieces copy to the 2^n children).
  GridFunction refined() const;

  GridFunction scaled(double c) const;  // c >= 0 required on power pieces
  bool nonnegative() const;

 private:
  DyadicFrame frame_;
  std::vector<CellPiece> cells_;
};

/// f + g; supported when cell pieces combine exactly (constant+constant, or
/// powers with equal exponents).
GridFunction add(const GridFunction& f, const GridFunction& g);

// --- weights --------------------------------------------------------------

struct PowerWeight {
  double exponent = 0.0;
  double coeff = 1.0;
};

/// Positive piecewise weight living on the frame (no values outside the
/// domain, so characteristics restrict to cubes inside it).
struct GridWeight {
  GridFunction fn;
};

using Weight = std::variant<PowerWeight, GridWeight>;

Weight parse_weight(const std::string& spec);  // "power:<a>:<coeff>"
std::string weight_spec(const Weight& w);
Weight weight_pow(const Weight& w, double e);
bool weight_is_global(const Weight& w);

/// coeff * |x|^gamma, the universal per-cell integrand.
struct PowTerm {
  double coeff = 1.0;
  double gamma = 0.0;
};

/// Closed-form ∫_a^b |x|^gamma dx (n = 1); throws std::domain_error when the
/// interval reaches the origin and gamma <= -1.
double abs_power_integral_1d(double gamma, double a, double b);

/// ∫_box |x|^gamma dx over a box in finest-cell units (true coordinates via
/// the frame; box may extend past the domain).  Exact closed form in n = 1,
/// adaptive to relative tolerance 1e-8 otherwise.
double power_moment(const DyadicFrame& f, double gamma, const IntBox& box);

double pow_term_box_integral(const DyadicFrame& f, const PowTerm& t, const IntBox& box);

/// PowTerm of w^e restricted to one cell (grid weights must own the cell).
PowTerm weight_cell_term(const DyadicFrame& f, const Weight& w, double e, long long flat);

// --- per-cell integrals ----------------------------------------------------

double cell_abs_pow_integral(const GridFunction& f, long long flat, double r);  // ∫ |f|^r
double cell_signed_integral(const GridFunction& f, long long flat);             // ∫ f
/// ∫_cell |f|^p * w^e
double cell_weighted_integral(const GridFunction& f, long long flat, double p, const Weight& w,
                              double e);

// --- prefix-sum table ------------------------------------------------------

/// n-dimensional prefix sums of per-cell values; box sums clip to the domain.
class CellTable {
 public:
  CellTable(const DyadicFrame& frame, const std::vector<double>& cell_values);
  double box_sum(const IntBox& box) const;
  double total() const;
  const DyadicFrame& frame() const { return frame_; }

 private:
  DyadicFrame frame_;
  std::vector<double> prefix_;
  long long stride(int axis) const;
};

CellTable integral_table(const GridFunction& f, double r);
CellTable signed_table(const GridFunction& f);

// --- norms and measures ----------------------------------------------------

/// Normalized local norm ((1/|Q|) ∫_Q |f|^r)^(1/r); Q may extend past the
/// domain (f extended by zero, |Q| unchanged).
double local_norm(const GridFunction& f, double r, const IntBox& q);
double local_norm_from_table(const DyadicFrame& frame, const CellTable& table_r, double r,
                             const IntBox& q);

/// || f w ||_{L^p} over the domain.
double weighted_norm(const GridFunction& f, double p, const Weight& w);

/// mu-measure of { |g| > lambda }; exact for constant cells and (in n = 1)
/// power cells.
double superlevel_measure(const GridFunction& g, double lambda, const Weight& mu);

// --- I/O --------------------------------------------------------------------

/// Header "gridfn dim=<n> depth=<L> side=<rat> origin=<rat>[,<rat>...]",
/// then one record per cell: "const <value>" or "power <coeff> <gamma>".
void write_function(std::ostream& os, const GridFunction& f);
GridFunction read_function(std::istream& is);

}  // namespace fracsparse
