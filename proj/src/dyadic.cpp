#include "fracsparse/dyadic.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fracsparse {

namespace {

long long floor_div(long long a, long long b) {
  long long d = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? d - 1 : d;
}

long long floor_mod(long long a, long long b) { return a - floor_div(a, b) * b; }

}  // namespace

Rat rat_pow2(int k) {
  mpz_class num = 1, den = 1;
  if (k >= 0)
    num <<= k;
  else
    den <<= -k;
  return Rat(num, den);
}

Rat rat_parse(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty rational");
  try {
    Rat r(s);
    r.canonicalize();
    return r;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad rational: " + s);
  }
}

std::string rat_str(const Rat& x) { return x.get_str(); }

bool IntBox::empty() const {
  for (int a = 0; a < dim; ++a)
    if (hi[a] <= lo[a]) return true;
  return false;
}

bool IntBox::contains(const IntBox& other) const {
  if (other.empty()) return true;
  for (int a = 0; a < dim; ++a)
    if (other.lo[a] < lo[a] || other.hi[a] > hi[a]) return false;
  return true;
}

bool IntBox::intersects(const IntBox& other) const { return !intersect(other).empty(); }

IntBox IntBox::intersect(const IntBox& other) const {
  IntBox r;
  r.dim = dim;
  for (int a = 0; a < dim; ++a) {
    r.lo[a] = std::max(lo[a], other.lo[a]);
    r.hi[a] = std::min(hi[a], other.hi[a]);
    if (r.hi[a] < r.lo[a]) r.hi[a] = r.lo[a];
  }
  return r;
}

long long IntBox::cell_count() const {
  long long c = 1;
  for (int a = 0; a < dim; ++a) {
    if (hi[a] <= lo[a]) return 0;
    c *= hi[a] - lo[a];
  }
  return c;
}

DyadicFrame::DyadicFrame(int dim, std::vector<Rat> origin, Rat side, int depth)
    : dim_(dim), depth_(depth), origin_(std::move(origin)), side_(std::move(side)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw std::invalid_argument("frame dim must be 1..3");
  if (depth_ < 1 || depth_ > 30) throw std::invalid_argument("frame depth must be 1..30");
  if (origin_.size() != static_cast<size_t>(dim_))
    throw std::invalid_argument("frame origin size mismatch");
  if (side_ <= 0) throw std::invalid_argument("frame side must be positive");
}

long long DyadicFrame::cell_count() const {
  long long c = 1;
  for (int a = 0; a < dim_; ++a) c *= cells_per_axis();
  return c;
}

Rat DyadicFrame::cell_side() const { return side_ * rat_pow2(-depth_); }

Rat DyadicFrame::cell_measure() const {
  Rat h = cell_side(), m = 1;
  for (int a = 0; a < dim_; ++a) m *= h;
  return m;
}

IntBox DyadicFrame::domain_box() const {
  IntBox b;
  b.dim = dim_;
  for (int a = 0; a < dim_; ++a) {
    b.lo[a] = 0;
    b.hi[a] = cells_per_axis();
  }
  return b;
}

long long DyadicFrame::cell_flat(const std::array<long long, kMaxDim>& idx) const {
  long long f = 0, c = cells_per_axis();
  for (int a = 0; a < dim_; ++a) {
    if (idx[a] < 0 || idx[a] >= c) throw std::out_of_range("cell index outside frame");
    f = f * c + idx[a];
  }
  return f;
}

std::array<long long, kMaxDim> DyadicFrame::cell_tuple(long long flat) const {
  std::array<long long, kMaxDim> idx{};
  long long c = cells_per_axis();
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = flat % c;
    flat /= c;
  }
  return idx;
}

Rat DyadicFrame::coord(long long units, int axis) const {
  return origin(axis) + rat_ll(units) * cell_side();
}

double DyadicFrame::coord_d(long long units, int axis) const {
  return coord(units, axis).get_d();
}

double DyadicFrame::cell_center_d(const std::array<long long, kMaxDim>& idx, int axis) const {
  Rat c = origin(axis) + (rat_ll(idx[axis]) + Rat(1, 2)) * cell_side();
  return c.get_d();
}

Rat DyadicFrame::box_measure(const IntBox& box) const {
  Rat m = cell_measure();
  for (int a = 0; a < dim_; ++a) {
    if (box.hi[a] <= box.lo[a]) return Rat(0);
    m *= rat_ll(box.hi[a] - box.lo[a]);
  }
  return m;
}

bool DyadicFrame::operator==(const DyadicFrame& other) const {
  return dim_ == other.dim_ && depth_ == other.depth_ && side_ == other.side_ &&
         origin_ == other.origin_;
}

bool cube_less(const DyadicCube& a, const DyadicCube& b) {
  if (a.level != b.level) return a.level < b.level;
  if (a.tag != b.tag) return a.tag < b.tag;
  return a.idx < b.idx;
}

int shift_residue(int digit, int level) {
  if (digit < 0 || digit > 2) throw std::invalid_argument("shift digit must be 0..2");
  return (level % 2 == 0) ? digit : (3 - digit) % 3;
}

std::array<int, kMaxDim> tag_digits(int tag, int dim) {
  if (tag < 1 || tag > shifted_family_count(dim))
    throw std::invalid_argument("shifted tag out of range");
  std::array<int, kMaxDim> d{};
  int t = tag - 1;
  for (int a = 0; a < dim; ++a) {
    d[a] = t % 3;
    t /= 3;
  }
  return d;
}

int tag_encode(const std::array<int, kMaxDim>& digits, int dim) {
  int t = 0;
  for (int a = dim - 1; a >= 0; --a) t = t * 3 + digits[a];
  return t + 1;
}

int shifted_family_count(int dim) {
  int c = 1;
  for (int a = 0; a < dim; ++a) c *= 3;
  return c;
}

namespace {

void check_cube(const DyadicCube& q, const DyadicFrame& f) {
  if (q.level < 0 || q.level > f.depth()) throw std::runtime_error("cube level outside frame");
  if (q.tag < 0 || q.tag > shifted_family_count(f.dim()))
    throw std::runtime_error("cube tag outside frame");
  if (q.tag == 0) {
    long long per = 1LL << q.level;
    for (int a = 0; a < f.dim(); ++a)
      if (q.idx[a] < 0 || q.idx[a] >= per)
        throw std::runtime_error("base cube index outside frame");
  }
}

}  // namespace

IntBox cube_box(const DyadicCube& q, const DyadicFrame& f) {
  check_cube(q, f);
  IntBox b;
  b.dim = f.dim();
  long long g = 1LL << (f.depth() - q.level);  // cell units per level-k grid step
  if (q.tag == 0) {
    for (int a = 0; a < f.dim(); ++a) {
      b.lo[a] = q.idx[a] * g;
      b.hi[a] = b.lo[a] + g;
    }
  } else {
    auto dig = tag_digits(q.tag, f.dim());
    for (int a = 0; a < f.dim(); ++a) {
      long long rho = shift_residue(dig[a], q.level);
      b.lo[a] = (3 * q.idx[a] + rho) * g;
      b.hi[a] = b.lo[a] + 3 * g;
    }
  }
  return b;
}

Rat cube_side(const DyadicCube& q, const DyadicFrame& f) {
  Rat s = f.side() * rat_pow2(-q.level);
  return q.tag == 0 ? s : Rat(3) * s;
}

Rat cube_measure(const DyadicCube& q, const DyadicFrame& f) {
  Rat s = cube_side(q, f), m = 1;
  for (int a = 0; a < f.dim(); ++a) m *= s;
  return m;
}

IntBox triple_box(const IntBox& box) {
  IntBox t = box;
  for (int a = 0; a < box.dim; ++a) {
    long long w = box.hi[a] - box.lo[a];
    t.lo[a] = box.lo[a] - w;
    t.hi[a] = box.hi[a] + w;
  }
  return t;
}

std::vector<DyadicCube> children(const DyadicCube& q, const DyadicFrame& f) {
  check_cube(q, f);
  if (q.level >= f.depth()) throw std::out_of_range("max depth");
  int n = f.dim();
  std::vector<DyadicCube> out;
  out.reserve(1u << n);
  std::array<long long, kMaxDim> base{}, step{};
  if (q.tag == 0) {
    for (int a = 0; a < n; ++a) base[a] = 2 * q.idx[a];
    step.fill(1);
  } else {
    auto dig = tag_digits(q.tag, f.dim());
    for (int a = 0; a < n; ++a) {
      int rho = shift_residue(dig[a], q.level);
      base[a] = 2 * q.idx[a] + (2 * rho) / 3;  // residue doubles mod 3 per level
      step[a] = 1;
    }
  }
  for (int bmask = 0; bmask < (1 << n); ++bmask) {
    DyadicCube c;
    c.tag = q.tag;
    c.level = q.level + 1;
    for (int a = 0; a < n; ++a) c.idx[a] = base[a] + ((bmask >> a) & 1) * step[a];
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), cube_less);
  return out;
}

std::pair<int, DyadicCube> triple_host(const DyadicCube& q, const DyadicFrame& f) {
  check_cube(q, f);
  if (q.tag != 0) throw std::invalid_argument("triple_host expects a base-lattice cube");
  int n = f.dim();
  std::array<int, kMaxDim> dig{};
  DyadicCube host;
  host.level = q.level;
  for (int a = 0; a < n; ++a) {
    long long o = q.idx[a] - 1;  // origin of 3Q in level-k grid steps
    int res = static_cast<int>(floor_mod(o, 3));
    dig[a] = shift_residue(res, q.level);  // involution: solve residue(j,k)=res
    host.idx[a] = floor_div(o - res, 3);
  }
  host.tag = tag_encode(dig, n);
  return {host.tag, host};
}

DyadicCube base_cube_containing(const DyadicFrame& f, int level, long long cell_flat) {
  if (level < 0 || level > f.depth()) throw std::invalid_argument("level outside frame");
  auto t = f.cell_tuple(cell_flat);
  DyadicCube q;
  q.tag = 0;
  q.level = level;
  long long g = 1LL << (f.depth() - level);
  for (int a = 0; a < f.dim(); ++a) q.idx[a] = t[a] / g;
  return q;
}

DyadicCube shifted_cube_containing(const DyadicFrame& f, int tag, int level,
                                   long long cell_flat) {
  if (level < 0 || level > f.depth()) throw std::invalid_argument("level outside frame");
  auto dig = tag_digits(tag, f.dim());
  auto t = f.cell_tuple(cell_flat);
  DyadicCube q;
  q.tag = tag;
  q.level = level;
  long long g = 1LL << (f.depth() - level);
  for (int a = 0; a < f.dim(); ++a) {
    long long u = floor_div(t[a], g);  // position in level-k grid steps
    q.idx[a] = floor_div(u - shift_residue(dig[a], level), 3);
  }
  return q;
}

std::vector<DyadicCube> cubes_at(const DyadicFrame& f, int tag, int level) {
  if (level < 0 || level > f.depth()) throw std::invalid_argument("level outside frame");
  int n = f.dim();
  long long steps = 1LL << level;  // domain width in level-k grid steps
  std::vector<std::vector<long long>> axis_idx(static_cast<size_t>(n));
  if (tag == 0) {
    for (int a = 0; a < n; ++a)
      for (long long m = 0; m < steps; ++m) axis_idx[static_cast<size_t>(a)].push_back(m);
  } else {
    auto dig = tag_digits(tag, n);
    for (int a = 0; a < n; ++a) {
      int rho = shift_residue(dig[a], level);
      // need (3t+rho) < steps and (3t+rho+3) > 0
      long long tmin = floor_div(-rho - 2, 3);
      for (long long t = tmin; 3 * t + rho < steps; ++t)
        axis_idx[static_cast<size_t>(a)].push_back(t);
    }
  }
  std::vector<DyadicCube> out;
  std::array<size_t, kMaxDim> pos{};
  while (true) {
    DyadicCube q;
    q.tag = tag;
    q.level = level;
    for (int a = 0; a < n; ++a) q.idx[a] = axis_idx[static_cast<size_t>(a)][pos[a]];
    out.push_back(q);
    int a = n - 1;
    while (a >= 0) {
      if (++pos[a] < axis_idx[static_cast<size_t>(a)].size()) break;
      pos[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  std::sort(out.begin(), out.end(), cube_less);
  return out;
}

std::vector<long long> cells_in_box(const DyadicFrame& f, const IntBox& box) {
  IntBox c = box.intersect(f.domain_box());
  std::vector<long long> out;
  if (c.empty()) return out;
  out.reserve(static_cast<size_t>(c.cell_count()));
  std::array<long long, kMaxDim> it{};
  for (int a = 0; a < f.dim(); ++a) it[a] = c.lo[a];
  while (true) {
    out.push_back(f.cell_flat(it));
    int a = f.dim() - 1;
    while (a >= 0) {
      if (++it[a] < c.hi[a]) break;
      it[a] = c.lo[a];
      --a;
    }
    if (a < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

Rat box_density_sum(const DyadicFrame& f, const std::vector<Rat>& density, const IntBox& box) {
  Rat s = 0;
  for (long long cell : cells_in_box(f, box)) s += density[static_cast<size_t>(cell)];
  return s;
}

void cz_descend(const DyadicFrame& f, const std::vector<Rat>& density, const DyadicCube& q,
                const Rat& lambda, std::vector<DyadicCube>& out) {
  if (q.level >= f.depth()) return;  // finest cells cannot be subdivided further
  for (const DyadicCube& c : children(q, f)) {
    IntBox b = cube_box(c, f);
    Rat sum = box_density_sum(f, density, b);
    Rat cells = rat_ll(b.cell_count());
    if (sum > lambda * cells) {
      out.push_back(c);
    } else {
      cz_descend(f, density, c, lambda, out);
    }
  }
}

}  // namespace

std::vector<DyadicCube> cz_select(const DyadicFrame& f, const std::vector<Rat>& density,
                                  const DyadicCube& q0, const Rat& lambda) {
  if (lambda <= 0 || lambda >= 1) throw std::invalid_argument("cz height must be in (0,1)");
  if (density.size() != static_cast<size_t>(f.cell_count()))
    throw std::invalid_argument("density size mismatch");
  if (q0.tag != 0) throw std::invalid_argument("cz_select expects a base-lattice root");
  IntBox b0 = cube_box(q0, f);
  for (long long cell : cells_in_box(f, b0)) {
    const Rat& v = density[static_cast<size_t>(cell)];
    if (v < 0 || v > 1) throw std::invalid_argument("density values must lie in [0,1]");
  }
  Rat sum0 = box_density_sum(f, density, b0);
  if (sum0 > lambda * rat_ll(b0.cell_count())) throw std::domain_error("root exceeds height");
  std::vector<DyadicCube> out;
  cz_descend(f, density, q0, lambda, out);
  std::sort(out.begin(), out.end(), cube_less);
  return out;
}

std::vector<std::vector<long long>> canonical_assignment(const SparseFamily& s) {
  const size_t m = s.members.size();
  std::vector<std::vector<long long>> assign(m);
  for (size_t i = 0; i < m; ++i) {
    const IntBox& qi = s.members[i].box;
    // maximal proper sub-members of qi
    std::vector<size_t> subs;
    for (size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const IntBox& qj = s.members[j].box;
      if (qi.contains(qj) && qj != qi) subs.push_back(j);
    }
    std::vector<size_t> maximal;
    for (size_t j : subs) {
      bool dominated = false;
      for (size_t k : subs)
        if (k != j && s.members[k].box.contains(s.members[j].box) &&
            s.members[k].box != s.members[j].box) {
          dominated = true;
          break;
        }
      if (!dominated) maximal.push_back(j);
    }
    std::vector<long long> cells = cells_in_box(s.frame, qi);
    if (!maximal.empty()) {
      std::vector<char> removed(cells.size(), 0);
      for (size_t j : maximal) {
        auto sub = cells_in_box(s.frame, s.members[j].box);
        size_t a = 0;
        for (long long c : sub) {
          while (a < cells.size() && cells[a] < c) ++a;
          if (a < cells.size() && cells[a] == c) removed[a] = 1;
        }
      }
      std::vector<long long> kept;
      for (size_t a = 0; a < cells.size(); ++a)
        if (!removed[a]) kept.push_back(cells[a]);
      cells = std::move(kept);
    }
    assign[i] = std::move(cells);
  }
  return assign;
}

VerifyResult verify_sparse(const SparseFamily& s, const Rat& eta) {
  VerifyResult r;
  if (eta <= 0 || eta >= 1) throw std::invalid_argument("eta must be in (0,1)");
  const auto assign = s.assignment ? *s.assignment : canonical_assignment(s);
  if (assign.size() != s.members.size())
    throw std::invalid_argument("assignment size mismatch");

  std::vector<char> used(static_cast<size_t>(s.frame.cell_count()), 0);
  for (size_t i = 0; i < s.members.size(); ++i) {
    const IntBox& q = s.members[i].box;
    IntBox clip = q.intersect(s.frame.domain_box());
    // E_Q within Q and pairwise disjoint
    for (long long cell : assign[i]) {
      if (cell < 0 || cell >= s.frame.cell_count()) {
        r.witness = i;
        r.detail = "assignment cell outside frame";
        return r;
      }
      auto t = s.frame.cell_tuple(cell);
      bool inside = true;
      for (int a = 0; a < s.frame.dim(); ++a)
        if (t[a] < clip.lo[a] || t[a] >= clip.hi[a]) inside = false;
      if (!inside) {
        r.witness = i;
        r.detail = "E_Q not contained in Q";
        return r;
      }
      if (used[static_cast<size_t>(cell)]) {
        r.witness = i;
        r.detail = "E_Q sets overlap";
        return r;
      }
      used[static_cast<size_t>(cell)] = 1;
    }
    // |E_Q| >= eta |Q| with the full (unclipped) cube measure; the finest
    // cell measure cancels, leaving an exact integer-vs-rational compare.
    Rat full_cells = 1;
    for (int a = 0; a < s.frame.dim(); ++a) full_cells *= rat_ll(q.hi[a] - q.lo[a]);
    if (Rat(static_cast<long>(assign[i].size())) < eta * full_cells) {
      r.witness = i;
      r.detail = "|E_Q| < eta |Q|";
      return r;
    }
  }
  r.pass = true;
  return r;
}

std::string cube_record(const FamilyMember& m, int dim) {
  std::ostringstream os;
  if (m.cube) {
    os << m.cube->tag << ' ' << m.cube->level;
    for (int a = 0; a < dim; ++a) os << ' ' << m.cube->idx[a];
  } else {
    os << "box";
    for (int a = 0; a < dim; ++a) os << ' ' << m.box.lo[a] << ' ' << m.box.hi[a];
  }
  return os.str();
}

FamilyMember parse_cube_record(const std::string& line, int dim) {
  std::istringstream is(line);
  std::string first;
  if (!(is >> first)) throw std::invalid_argument("empty cube record");
  FamilyMember m;
  if (first == "box") {
    m.box.dim = dim;
    for (int a = 0; a < dim; ++a)
      if (!(is >> m.box.lo[a] >> m.box.hi[a]))
        throw std::invalid_argument("bad box record: " + line);
  } else {
    DyadicCube q;
    q.tag = std::stoi(first);
    if (!(is >> q.level)) throw std::invalid_argument("bad cube record: " + line);
    for (int a = 0; a < dim; ++a)
      if (!(is >> q.idx[a])) throw std::invalid_argument("bad cube record: " + line);
    m.cube = q;
  }
  return m;
}

void write_family(std::ostream& os, const SparseFamily& s) {
  os << "eta=" << rat_str(s.eta) << '\n';
  for (const auto& m : s.members) {
    FamilyMember rec = m;
    if (rec.cube) rec.box = cube_box(*rec.cube, s.frame);
    os << cube_record(rec, s.frame.dim()) << '\n';
  }
  if (s.assignment) {
    for (size_t i = 0; i < s.assignment->size(); ++i) {
      os << "E " << i;
      for (long long c : (*s.assignment)[i]) os << ' ' << c;
      os << '\n';
    }
  }
}

SparseFamily read_family(std::istream& is, const DyadicFrame& frame) {
  SparseFamily s{frame, Rat(1, 2), {}, std::nullopt};
  std::string line;
  bool have_eta = false;
  std::vector<std::vector<long long>> assign;
  bool have_assign = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("eta=", 0) == 0) {
      s.eta = rat_parse(line.substr(4));
      have_eta = true;
      continue;
    }
    if (line[0] == 'E' && (line.size() == 1 || line[1] == ' ')) {
      std::istringstream ls(line.substr(1));
      size_t idx;
      if (!(ls >> idx)) throw std::invalid_argument("bad assignment record: " + line);
      if (assign.size() <= idx) assign.resize(idx + 1);
      long long c;
      while (ls >> c) assign[idx].push_back(c);
      have_assign = true;
      continue;
    }
    FamilyMember m = parse_cube_record(line, frame.dim());
    if (m.cube) m.box = cube_box(*m.cube, frame);
    s.members.push_back(std::move(m));
  }
  if (!have_eta) throw std::invalid_argument("family file missing eta header");
  if (have_assign) {
    assign.resize(s.members.size());
    for (auto& v : assign) std::sort(v.begin(), v.end());
    s.assignment = std::move(assign);
  }
  return s;
}

}  // namespace fracsparse
