#include "fracsparse/gridfn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fracsparse/quadrature.hpp"

namespace fracsparse {

namespace {

void cell_bounds(const DyadicFrame& f, long long flat, std::array<double, 3>& lo,
                 std::array<double, 3>& hi) {
  auto t = f.cell_tuple(flat);
  for (int a = 0; a < f.dim(); ++a) {
    lo[a] = f.coord_d(t[a], a);
    hi[a] = f.coord_d(t[a] + 1, a);
  }
}

bool cell_touches_origin(const DyadicFrame& f, long long flat) {
  std::array<double, 3> lo{}, hi{};
  cell_bounds(f, flat, lo, hi);
  for (int a = 0; a < f.dim(); ++a)
    if (lo[a] > 0.0 || hi[a] < 0.0) return false;
  return true;
}

void validate_piece(const DyadicFrame& f, long long flat, const CellPiece& p) {
  if (p.kind == PieceKind::Power) {
    if (p.value < 0.0)
      throw std::invalid_argument("power pieces must have nonnegative coefficients");
    if (cell_touches_origin(f, flat) && p.gamma <= -static_cast<double>(f.dim()))
      throw std::domain_error("power exponent not integrable at the origin");
  }
}

}  // namespace

GridFunction::GridFunction(DyadicFrame frame, std::vector<CellPiece> cells)
    : frame_(std::move(frame)), cells_(std::move(cells)) {
  if (frame_.cell_count() > (1LL << 24)) throw std::invalid_argument("frame too large for cell data");
  if (cells_.size() != static_cast<size_t>(frame_.cell_count()))
    throw std::invalid_argument("cell descriptor count mismatch");
  for (long long i = 0; i < frame_.cell_count(); ++i)
    validate_piece(frame_, i, cells_[static_cast<size_t>(i)]);
}

GridFunction GridFunction::constant(const DyadicFrame& f, double value) {
  return GridFunction(f, std::vector<CellPiece>(static_cast<size_t>(f.cell_count()),
                                                CellPiece{PieceKind::Constant, value, 0.0}));
}

GridFunction GridFunction::power(const DyadicFrame& f, double coeff, double gamma) {
  return GridFunction(f, std::vector<CellPiece>(static_cast<size_t>(f.cell_count()),
                                                CellPiece{PieceKind::Power, coeff, gamma}));
}

GridFunction GridFunction::indicator(const DyadicFrame& f, const IntBox& box, double value) {
  std::vector<CellPiece> cells(static_cast<size_t>(f.cell_count()),
                               CellPiece{PieceKind::Constant, 0.0, 0.0});
  for (long long c : cells_in_box(f, box))
    cells[static_cast<size_t>(c)] = CellPiece{PieceKind::Constant, value, 0.0};
  return GridFunction(f, std::move(cells));
}

GridFunction GridFunction::from_values(const DyadicFrame& f, const std::vector<double>& v) {
  if (v.size() != static_cast<size_t>(f.cell_count()))
    throw std::invalid_argument("value count mismatch");
  std::vector<CellPiece> cells(v.size());
  for (size_t i = 0; i < v.size(); ++i) cells[i] = CellPiece{PieceKind::Constant, v[i], 0.0};
  return GridFunction(f, std::move(cells));
}

void GridFunction::set_piece(long long flat, const CellPiece& p) {
  validate_piece(frame_, flat, p);
  cells_.at(static_cast<size_t>(flat)) = p;
}

double GridFunction::value_at_center(long long flat) const {
  const CellPiece& p = piece(flat);
  if (p.kind == PieceKind::Constant) return p.value;
  auto t = frame_.cell_tuple(flat);
  double r2 = 0.0;
  for (int a = 0; a < frame_.dim(); ++a) {
    double c = frame_.cell_center_d(t, a);
    r2 += c * c;
  }
  return p.value * std::pow(std::sqrt(r2), p.gamma);
}

std::vector<double> GridFunction::center_values() const {
  std::vector<double> v(cells_.size());
  for (long long i = 0; i < frame_.cell_count(); ++i)
    v[static_cast<size_t>(i)] = value_at_center(i);
  return v;
}

GridFunction GridFunction::refined() const {
  std::vector<Rat> origin;
  for (int a = 0; a < frame_.dim(); ++a) origin.push_back(frame_.origin(a));
  DyadicFrame fine(frame_.dim(), origin, frame_.side(), frame_.depth() + 1);
  std::vector<CellPiece> cells(static_cast<size_t>(fine.cell_count()));
  for (long long i = 0; i < fine.cell_count(); ++i) {
    auto t = fine.cell_tuple(i);
    std::array<long long, kMaxDim> coarse{};
    for (int a = 0; a < frame_.dim(); ++a) coarse[a] = t[a] / 2;
    cells[static_cast<size_t>(i)] = piece(frame_.cell_flat(coarse));
  }
  return GridFunction(fine, std::move(cells));
}

GridFunction GridFunction::scaled(double c) const {
  std::vector<CellPiece> cells = cells_;
  for (auto& p : cells) {
    if (p.kind == PieceKind::Power && c < 0.0)
      throw std::invalid_argument("cannot scale power pieces by a negative factor");
    p.value *= c;
  }
  return GridFunction(frame_, std::move(cells));
}

bool GridFunction::nonnegative() const {
  for (const auto& p : cells_)
    if (p.kind == PieceKind::Constant && p.value < 0.0) return false;
  return true;
}

GridFunction add(const GridFunction& f, const GridFunction& g) {
  if (!(f.frame() == g.frame())) throw std::invalid_argument("frame mismatch");
  std::vector<CellPiece> cells(static_cast<size_t>(f.frame().cell_count()));
  for (long long i = 0; i < f.frame().cell_count(); ++i) {
    const CellPiece &a = f.piece(i), &b = g.piece(i);
    if (a.kind == PieceKind::Constant && b.kind == PieceKind::Constant) {
      cells[static_cast<size_t>(i)] = CellPiece{PieceKind::Constant, a.value + b.value, 0.0};
    } else if (a.kind == PieceKind::Power && b.kind == PieceKind::Power && a.gamma == b.gamma) {
      cells[static_cast<size_t>(i)] = CellPiece{PieceKind::Power, a.value + b.value, a.gamma};
    } else if (a.kind == PieceKind::Power && b.kind == PieceKind::Constant && b.value == 0.0) {
      cells[static_cast<size_t>(i)] = a;
    } else if (b.kind == PieceKind::Power && a.kind == PieceKind::Constant && a.value == 0.0) {
      cells[static_cast<size_t>(i)] = b;
    } else {
      throw std::invalid_argument("incompatible cell pieces in add");
    }
  }
  return GridFunction(f.frame(), std::move(cells));
}

Weight parse_weight(const std::string& spec) {
  std::istringstream is(spec);
  std::string kind, a, c;
  if (!std::getline(is, kind, ':')) throw std::invalid_argument("empty weight spec");
  if (kind != "power") throw std::invalid_argument("unknown weight spec: " + spec);
  if (!std::getline(is, a, ':') || !std::getline(is, c, ':'))
    throw std::invalid_argument("weight spec needs power:<a>:<coeff>");
  PowerWeight w;
  w.exponent = std::stod(a);
  w.coeff = std::stod(c);
  if (w.coeff <= 0.0) throw std::invalid_argument("weight coefficient must be positive");
  return w;
}

std::string weight_spec(const Weight& w) {
  if (const auto* p = std::get_if<PowerWeight>(&w)) {
    std::ostringstream os;
    os << "power:" << p->exponent << ':' << p->coeff;
    return os.str();
  }
  return "grid";
}

Weight weight_pow(const Weight& w, double e) {
  if (const auto* p = std::get_if<PowerWeight>(&w))
    return PowerWeight{p->exponent * e, std::pow(p->coeff, e)};
  const GridWeight& gw = std::get<GridWeight>(w);
  const GridFunction& fn = gw.fn;
  std::vector<CellPiece> cells(static_cast<size_t>(fn.frame().cell_count()));
  for (long long i = 0; i < fn.frame().cell_count(); ++i) {
    const CellPiece& p = fn.piece(i);
    if (p.value <= 0.0) throw std::domain_error("grid weight must be strictly positive");
    if (p.kind == PieceKind::Constant)
      cells[static_cast<size_t>(i)] = CellPiece{PieceKind::Constant, std::pow(p.value, e), 0.0};
    else
      cells[static_cast<size_t>(i)] =
          CellPiece{PieceKind::Power, std::pow(p.value, e), p.gamma * e};
  }
  return GridWeight{GridFunction(fn.frame(), std::move(cells))};
}

bool weight_is_global(const Weight& w) { return std::holds_alternative<PowerWeight>(w); }

double abs_power_integral_1d(double gamma, double a, double b) {
  if (b <= a) return 0.0;
  if (a < 0.0 && b > 0.0) {
    if (gamma <= -1.0) throw std::domain_error("divergent power integral at the origin");
    return (std::pow(-a, gamma + 1.0) + std::pow(b, gamma + 1.0)) / (gamma + 1.0);
  }
  double lo = std::min(std::abs(a), std::abs(b));
  double hi = std::max(std::abs(a), std::abs(b));
  if (lo == 0.0) {
    if (gamma <= -1.0) throw std::domain_error("divergent power integral at the origin");
    return std::pow(hi, gamma + 1.0) / (gamma + 1.0);
  }
  if (gamma == -1.0) return std::log(hi / lo);
  return (std::pow(hi, gamma + 1.0) - std::pow(lo, gamma + 1.0)) / (gamma + 1.0);
}

double power_moment(const DyadicFrame& f, double gamma, const IntBox& box) {
  return pow_term_box_integral(f, PowTerm{1.0, gamma}, box);
}

double pow_term_box_integral(const DyadicFrame& f, const PowTerm& t, const IntBox& box) {
  if (box.empty()) return 0.0;
  if (t.coeff == 0.0) return 0.0;
  std::array<double, 3> lo{}, hi{};
  bool touches = true;
  for (int a = 0; a < f.dim(); ++a) {
    lo[a] = f.coord_d(box.lo[a], a);
    hi[a] = f.coord_d(box.hi[a], a);
    if (lo[a] > 0.0 || hi[a] < 0.0) touches = false;
  }
  if (touches && t.gamma <= -static_cast<double>(f.dim()))
    throw std::domain_error("divergent power moment at the origin");
  if (f.dim() == 1) return t.coeff * abs_power_integral_1d(t.gamma, lo[0], hi[0]);
  double g = t.gamma;
  auto fn = [g](const std::array<double, 3>& x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return std::pow(r2, 0.5 * g);
  };
  return t.coeff * quad::box_integrate(f.dim(), lo, hi, fn, g, 1e-8);
}

PowTerm weight_cell_term(const DyadicFrame& f, const Weight& w, double e, long long flat) {
  if (const auto* p = std::get_if<PowerWeight>(&w))
    return PowTerm{std::pow(p->coeff, e), p->exponent * e};
  const GridWeight& gw = std::get<GridWeight>(w);
  if (!(gw.fn.frame() == f)) throw std::invalid_argument("grid weight frame mismatch");
  const CellPiece& p = gw.fn.piece(flat);
  if (p.value <= 0.0) throw std::domain_error("grid weight must be strictly positive");
  if (p.kind == PieceKind::Constant) return PowTerm{std::pow(p.value, e), 0.0};
  return PowTerm{std::pow(p.value, e), p.gamma * e};
}

namespace {

IntBox cell_unit_box(const DyadicFrame& f, long long flat) {
  auto t = f.cell_tuple(flat);
  IntBox b;
  b.dim = f.dim();
  for (int a = 0; a < f.dim(); ++a) {
    b.lo[a] = t[a];
    b.hi[a] = t[a] + 1;
  }
  return b;
}

PowTerm piece_abs_pow_term(const CellPiece& p, double r) {
  if (p.kind == PieceKind::Constant) return PowTerm{std::pow(std::abs(p.value), r), 0.0};
  return PowTerm{std::pow(p.value, r), p.gamma * r};
}

}  // namespace

double cell_abs_pow_integral(const GridFunction& f, long long flat, double r) {
  return pow_term_box_integral(f.frame(), piece_abs_pow_term(f.piece(flat), r),
                               cell_unit_box(f.frame(), flat));
}

double cell_signed_integral(const GridFunction& f, long long flat) {
  const CellPiece& p = f.piece(flat);
  double sign = (p.kind == PieceKind::Constant && p.value < 0.0) ? -1.0 : 1.0;
  return sign * pow_term_box_integral(f.frame(), piece_abs_pow_term(p, 1.0),
                                      cell_unit_box(f.frame(), flat));
}

double cell_weighted_integral(const GridFunction& f, long long flat, double p, const Weight& w,
                              double e) {
  PowTerm tf = piece_abs_pow_term(f.piece(flat), p);
  PowTerm tw = weight_cell_term(f.frame(), w, e, flat);
  return pow_term_box_integral(f.frame(), PowTerm{tf.coeff * tw.coeff, tf.gamma + tw.gamma},
                               cell_unit_box(f.frame(), flat));
}

CellTable::CellTable(const DyadicFrame& frame, const std::vector<double>& cell_values)
    : frame_(frame) {
  if (cell_values.size() != static_cast<size_t>(frame.cell_count()))
    throw std::invalid_argument("cell value count mismatch");
  const long long c = frame_.cells_per_axis();
  const int n = frame_.dim();
  long long total = 1;
  for (int a = 0; a < n; ++a) total *= c + 1;
  prefix_.assign(static_cast<size_t>(total), 0.0);
  // prefix_[i0][i1][..] = sum of cells with index < (i0,..) in every axis,
  // accumulated in ascending flat order for determinism
  std::array<long long, kMaxDim> it{};
  for (long long flat = 0; flat < frame_.cell_count(); ++flat) {
    it = frame_.cell_tuple(flat);
    long long pos = 0;
    for (int a = 0; a < n; ++a) pos = pos * (c + 1) + (it[a] + 1);
    prefix_[static_cast<size_t>(pos)] = cell_values[static_cast<size_t>(flat)];
  }
  // sweep per axis
  for (int a = n - 1; a >= 0; --a) {
    long long st = stride(a);
    for (long long i = 0; i < total; ++i) {
      long long coord = (i / st) % (c + 1);
      if (coord > 0) prefix_[static_cast<size_t>(i)] += prefix_[static_cast<size_t>(i - st)];
    }
  }
}

long long CellTable::stride(int axis) const {
  long long st = 1;
  const long long c = frame_.cells_per_axis();
  for (int a = frame_.dim() - 1; a > axis; --a) st *= c + 1;
  return st;
}

double CellTable::box_sum(const IntBox& box) const {
  IntBox b = box.intersect(frame_.domain_box());
  if (b.empty()) return 0.0;
  const int n = frame_.dim();
  const long long c = frame_.cells_per_axis();
  double sum = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    long long pos = 0;
    int par = 0;
    for (int a = 0; a < n; ++a) {
      long long coord = ((corner >> a) & 1) ? b.hi[a] : b.lo[a];
      if (!((corner >> a) & 1)) ++par;
      pos = pos * (c + 1) + coord;
    }
    sum += (par % 2 == 0 ? 1.0 : -1.0) * prefix_[static_cast<size_t>(pos)];
  }
  return sum;
}

double CellTable::total() const { return box_sum(frame_.domain_box()); }

CellTable integral_table(const GridFunction& f, double r) {
  std::vector<double> v(static_cast<size_t>(f.frame().cell_count()));
  for (long long i = 0; i < f.frame().cell_count(); ++i)
    v[static_cast<size_t>(i)] = cell_abs_pow_integral(f, i, r);
  return CellTable(f.frame(), v);
}

CellTable signed_table(const GridFunction& f) {
  std::vector<double> v(static_cast<size_t>(f.frame().cell_count()));
  for (long long i = 0; i < f.frame().cell_count(); ++i)
    v[static_cast<size_t>(i)] = cell_signed_integral(f, i);
  return CellTable(f.frame(), v);
}

double local_norm(const GridFunction& f, double r, const IntBox& q) {
  if (r < 1.0) throw std::invalid_argument("local norm requires r >= 1");
  double sum = 0.0;
  for (long long cell : cells_in_box(f.frame(), q)) sum += cell_abs_pow_integral(f, cell, r);
  double measure = rat_d(f.frame().box_measure(q));
  if (measure <= 0.0) throw std::invalid_argument("empty cube in local norm");
  return std::pow(sum / measure, 1.0 / r);
}

double local_norm_from_table(const DyadicFrame& frame, const CellTable& table_r, double r,
                             const IntBox& q) {
  if (r < 1.0) throw std::invalid_argument("local norm requires r >= 1");
  double measure = rat_d(frame.box_measure(q));
  return std::pow(std::max(table_r.box_sum(q), 0.0) / measure, 1.0 / r);
}

double weighted_norm(const GridFunction& f, double p, const Weight& w) {
  if (p < 1.0) throw std::invalid_argument("weighted norm requires p >= 1");
  double sum = 0.0;
  for (long long i = 0; i < f.frame().cell_count(); ++i)
    sum += cell_weighted_integral(f, i, p, w, p);
  return std::pow(sum, 1.0 / p);
}

namespace {

// mu-measure of the part of [a,b] (signed 1-d interval) where coeff*|x|^gamma > lambda.
double superlevel_interval(const DyadicFrame& f, const PowTerm& mu_term, double c, double gamma,
                           double lambda, double a, double b) {
  if (b <= a) return 0.0;
  if (a < 0.0 && b > 0.0)
    return superlevel_interval(f, mu_term, c, gamma, lambda, a, 0.0) +
           superlevel_interval(f, mu_term, c, gamma, lambda, 0.0, b);
  auto mu_of = [&](double u, double v) {
    if (v <= u) return 0.0;
    return mu_term.coeff * abs_power_integral_1d(mu_term.gamma, u, v);
  };
  if (gamma == 0.0) return c > lambda ? mu_of(a, b) : 0.0;
  if (c <= 0.0) return 0.0;
  double xs = std::pow(lambda / c, 1.0 / gamma);  // threshold on |x|
  if (a >= 0.0) {                                  // positive side
    if (gamma > 0.0) return mu_of(std::max(a, xs), b);
    return mu_of(a, std::min(b, xs));
  }
  // negative side: |x| = -x
  if (gamma > 0.0) return mu_of(a, std::min(b, -xs));
  return mu_of(std::max(a, -xs), b);
}

}  // namespace

double superlevel_measure(const GridFunction& g, double lambda, const Weight& mu) {
  if (!(lambda > 0.0)) throw std::invalid_argument("superlevel height must be positive");
  const DyadicFrame& f = g.frame();
  double total = 0.0;
  for (long long i = 0; i < f.cell_count(); ++i) {
    const CellPiece& p = g.piece(i);
    if (p.kind == PieceKind::Constant) {
      if (std::abs(p.value) > lambda) {
        PowTerm mu_t = weight_cell_term(f, mu, 1.0, i);
        total += pow_term_box_integral(f, mu_t, cell_unit_box(f, i));
      }
      continue;
    }
    if (f.dim() != 1)
      throw std::domain_error("power-cell level sets are solved analytically only in n=1");
    auto t = f.cell_tuple(i);
    double a = f.coord_d(t[0], 0), b = f.coord_d(t[0] + 1, 0);
    PowTerm mu_t = weight_cell_term(f, mu, 1.0, i);
    total += superlevel_interval(f, mu_t, p.value, p.gamma, lambda, a, b);
  }
  return total;
}

void write_function(std::ostream& os, const GridFunction& f) {
  const DyadicFrame& fr = f.frame();
  os << "gridfn dim=" << fr.dim() << " depth=" << fr.depth() << " side=" << rat_str(fr.side())
     << " origin=";
  for (int a = 0; a < fr.dim(); ++a) os << (a ? "," : "") << rat_str(fr.origin(a));
  os << '\n';
  for (long long i = 0; i < fr.cell_count(); ++i) {
    const CellPiece& p = f.piece(i);
    if (p.kind == PieceKind::Constant)
      os << "const " << p.value << '\n';
    else
      os << "power " << p.value << ' ' << p.gamma << '\n';
  }
}

GridFunction read_function(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("gridfn ", 0) != 0)
    throw std::invalid_argument("function file missing gridfn header");
  int dim = 0, depth = 0;
  Rat side;
  std::vector<Rat> origin;
  std::istringstream hs(header.substr(7));
  std::string tok;
  while (hs >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad header token: " + tok);
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dim")
      dim = std::stoi(val);
    else if (key == "depth")
      depth = std::stoi(val);
    else if (key == "side")
      side = rat_parse(val);
    else if (key == "origin") {
      std::istringstream vs(val);
      std::string part;
      while (std::getline(vs, part, ',')) origin.push_back(rat_parse(part));
    } else {
      throw std::invalid_argument("unknown header key: " + key);
    }
  }
  DyadicFrame frame(dim, origin, side, depth);
  std::vector<CellPiece> cells;
  cells.reserve(static_cast<size_t>(frame.cell_count()));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    CellPiece p;
    if (kind == "const") {
      p.kind = PieceKind::Constant;
      if (!(ls >> p.value)) throw std::invalid_argument("bad const record: " + line);
    } else if (kind == "power") {
      p.kind = PieceKind::Power;
      if (!(ls >> p.value >> p.gamma)) throw std::invalid_argument("bad power record: " + line);
    } else {
      throw std::invalid_argument("unknown cell record: " + line);
    }
    cells.push_back(p);
  }
  if (cells.size() != static_cast<size_t>(frame.cell_count()))
    throw std::invalid_argument("cell record count does not match the frame");
  return GridFunction(frame, std::move(cells));
}

}  // namespace fracsparse
