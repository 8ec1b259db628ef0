#pragma once

// Dyadic cube geometry over a bounded root domain: the base lattice, the 3^n
// shifted lattices covering all concentric triples, Calderon-Zygmund
// stopping-time selection, and sparse-family verification.  All geometry and
// all measure comparisons are exact rational arithmetic (GMP).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace fracsparse {

using Rat = mpq_class;

/// 2^k as an exact rational, k may be negative.
Rat rat_pow2(int k);

/// Parse "p/q" or "p"; throws std::invalid_argument on garbage.
Rat rat_parse(const std::string& s);

std::string rat_str(const Rat& x);

inline double rat_d(const Rat& x) { return x.get_d(); }

/// gmpxx has no long long constructor; long is 64-bit on every platform we build on.
inline Rat rat_ll(long long v) { return Rat(static_cast<long>(v)); }

constexpr int kMaxDim = 3;

/// Half-open axis-aligned box in units of the finest-cell side.  Coordinates
/// may lie outside [0, 2^L)^n; the frame's domain_box() clips.
struct IntBox {
  int dim = 1;
  std::array<long long, kMaxDim> lo{};
  std::array<long long, kMaxDim> hi{};

  bool operator==(const IntBox&) const = default;

  bool empty() const;
  bool contains(const IntBox& other) const;      // set inclusion
  bool intersects(const IntBox& other) const;
  IntBox intersect(const IntBox& other) const;   // may be empty
  long long cell_count() const;                  // product of widths (clipped boxes only)
};

/// Bounded dyadic frame: root cube [origin, origin+side)^n subdivided to
/// depth L.  Finest cells have side = root side * 2^-L, exactly representable.
class DyadicFrame {
 public:
  DyadicFrame(int dim, std::vector<Rat> origin, Rat side, int depth);

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  const Rat& side() const { return side_; }
  const Rat& origin(int axis) const { return origin_.at(static_cast<size_t>(axis)); }

  long long cells_per_axis() const { return 1LL << depth_; }
  long long cell_count() const;
  Rat cell_side() const;            // side * 2^-L
  Rat cell_measure() const;         // cell_side^n
  IntBox domain_box() const;        // [0, 2^L)^n

  /// Flat index <-> per-axis tuple (axis 0 is the slowest-varying).
  long long cell_flat(const std::array<long long, kMaxDim>& idx) const;
  std::array<long long, kMaxDim> cell_tuple(long long flat) const;

  /// True coordinate of a lattice position given in finest-cell units.
  Rat coord(long long units, int axis) const;
  double coord_d(long long units, int axis) const;
  /// Center coordinate of a finest cell along one axis.
  double cell_center_d(const std::array<long long, kMaxDim>& idx, int axis) const;

  /// Exact measure of a box (unclipped; widths times cell_side^n).
  Rat box_measure(const IntBox& box) const;

  bool operator==(const DyadicFrame& other) const;

 private:
  int dim_;
  int depth_;
  std::vector<Rat> origin_;
  Rat side_;
};

/// A cube of the base lattice (tag 0) or of one of the 3^n shifted lattices
/// (tags 1..3^n).  Base cubes at level k have side = root*2^-k and per-axis
/// index m in [0, 2^k).  Shifted cubes have side 3*root*2^-k and per-axis
/// origin (3t + rho)*root*2^-k where rho is the lattice residue at level k.
struct DyadicCube {
  int tag = 0;
  int level = 0;
  std::array<long long, kMaxDim> idx{};

  bool operator==(const DyadicCube&) const = default;
};

/// Canonical order: level, then tag, then index (lexicographic).
bool cube_less(const DyadicCube& a, const DyadicCube& b);

/// Residue class (mod 3) of shifted-lattice digit j at level k.  Bisecting a
/// residue-j grid of triples yields the residue-(2j mod 3) grid one level
/// down, so a lattice's residue alternates j, (3-j)%3, j, ... with level.
int shift_residue(int digit, int level);

/// Decode tag 1..3^n into per-axis digits in {0,1,2}.
std::array<int, kMaxDim> tag_digits(int tag, int dim);
int tag_encode(const std::array<int, kMaxDim>& digits, int dim);

int shifted_family_count(int dim);  // 3^n

IntBox cube_box(const DyadicCube& q, const DyadicFrame& f);
Rat cube_side(const DyadicCube& q, const DyadicFrame& f);
Rat cube_measure(const DyadicCube& q, const DyadicFrame& f);

/// Concentric triple 3Q as an integer box (any tag).
IntBox triple_box(const IntBox& box);

/// The 2^n bisection children (same tag, level+1).  Throws on level == depth.
std::vector<DyadicCube> children(const DyadicCube& q, const DyadicFrame& f);

/// For a base cube Q, the unique shifted lattice containing the concentric
/// triple 3Q, and that triple as a member cube R_Q (side 3*side(Q), Q cc R_Q).
std::pair<int, DyadicCube> triple_host(const DyadicCube& q, const DyadicFrame& f);

/// Base cube of the given level containing a finest cell.
DyadicCube base_cube_containing(const DyadicFrame& f, int level, long long cell_flat);
/// Shifted cube of the given tag/level containing a finest cell.
DyadicCube shifted_cube_containing(const DyadicFrame& f, int tag, int level,
                                   long long cell_flat);

/// All cubes of one tag/level whose box intersects the root domain,
/// canonically ordered.
std::vector<DyadicCube> cubes_at(const DyadicFrame& f, int tag, int level);

/// All finest-cell flat indices covered by box (clipped to the domain),
/// ascending.
std::vector<long long> cells_in_box(const DyadicFrame& f, const IntBox& box);

/// Calderon-Zygmund stopping-time selection: the maximal dyadic subcubes
/// P of Q0 whose mean density exceeds lambda (strictly).  density holds one
/// value in [0,1] per finest cell of the frame.  Throws if the mean over Q0
/// already exceeds lambda.
std::vector<DyadicCube> cz_select(const DyadicFrame& f, const std::vector<Rat>& density,
                                  const DyadicCube& q0, const Rat& lambda);

/// A family of cubes with sparsity parameter eta.  Members may be lattice
/// cubes or explicit axis-aligned boxes; an optional assignment maps each
/// member to its set E_Q of finest cells.
struct FamilyMember {
  IntBox box;
  std::optional<DyadicCube> cube;
};

struct SparseFamily {
  DyadicFrame frame;
  Rat eta;
  std::vector<FamilyMember> members;
  /// Per-member sorted finest-cell flats; disjointness etc. is verified, not assumed.
  std::optional<std::vector<std::vector<long long>>> assignment;
};

struct VerifyResult {
  bool pass = false;
  std::optional<size_t> witness;  // first violating member
  std::string detail;
};

/// Checks |E_Q| >= eta |Q| with E_Q pairwise disjoint and E_Q within Q.  When
/// the family carries no assignment, uses the canonical one: E_Q = Q minus
/// the union of the maximal proper sub-members of Q in the family.
VerifyResult verify_sparse(const SparseFamily& s, const Rat& eta);

/// Canonical per-member assignment (cells of Q minus maximal proper
/// sub-members), without the disjointness/size checks.
std::vector<std::vector<long long>> canonical_assignment(const SparseFamily& s);

// --- plain-text (de)serialization ---------------------------------------

/// One cube per line: "tag level i0 [i1 i2]"; explicit boxes as
/// "box lo0 hi0 [lo1 hi1 [lo2 hi2]]".
std::string cube_record(const FamilyMember& m, int dim);
FamilyMember parse_cube_record(const std::string& line, int dim);

/// Family file: header "eta=<rational>", then one member per line, then
/// optional assignment lines "E <member-index> <cell> <cell> ...".
void write_family(std::ostream& os, const SparseFamily& s);
SparseFamily read_family(std::istream& is, const DyadicFrame& frame);

}  // namespace fracsparse
