#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "fracsparse/dyadic.hpp"
#include "test_support.hpp"

using namespace fracsparse;

namespace {

DyadicFrame unit_frame(int depth) { return DyadicFrame(1, {Rat(0)}, Rat(1), depth); }

DyadicFrame square_frame(int depth) {
  return DyadicFrame(2, {Rat(0), Rat(0)}, Rat(1), depth);
}

}  // namespace

TEST_CASE("children bisect the unit interval") {
  DyadicFrame f = unit_frame(4);
  DyadicCube root{0, 0, {0}};
  auto kids = children(root, f);
  REQUIRE(kids.size() == 2);
  CHECK(cube_box(kids[0], f) == IntBox{1, {0}, {8}});
  CHECK(cube_box(kids[1], f) == IntBox{1, {8}, {16}});
  CHECK(cube_side(kids[0], f) == Rat(1, 2));
}

TEST_CASE("children of a square are the four quadrants") {
  DyadicFrame f = square_frame(3);
  DyadicCube root{0, 0, {0, 0}};
  auto kids = children(root, f);
  REQUIRE(kids.size() == 4);
  std::set<std::pair<long long, long long>> corners;
  for (const auto& k : kids) {
    auto b = cube_box(k, f);
    corners.insert({b.lo[0], b.lo[1]});
    CHECK(b.hi[0] - b.lo[0] == 4);
  }
  CHECK(corners == std::set<std::pair<long long, long long>>{{0, 0}, {0, 4}, {4, 0}, {4, 4}});
}

TEST_CASE("children partition their parent exactly (random cubes, all tags)") {
  for (int dim = 1; dim <= 2; ++dim) {
    DyadicFrame f = dim == 1 ? unit_frame(6) : square_frame(4);
    testsup::Rng rng(7 + static_cast<unsigned>(dim));
    for (int trial = 0; trial < 100; ++trial) {
      int tag = static_cast<int>(rng.below(shifted_family_count(dim) + 1));
      int level = static_cast<int>(rng.below(f.depth()));
      DyadicCube q;
      if (tag == 0) {
        q = base_cube_containing(f, level, rng.below(f.cell_count()));
      } else {
        q = shifted_cube_containing(f, tag, level, rng.below(f.cell_count()));
      }
      auto kids = children(q, f);
      REQUIRE(kids.size() == (1u << dim));
      IntBox parent = cube_box(q, f);
      Rat measure_sum = 0;
      for (size_t i = 0; i < kids.size(); ++i) {
        IntBox b = cube_box(kids[i], f);
        CHECK(parent.contains(b));
        CHECK(kids[i].level == q.level + 1);
        CHECK(kids[i].tag == q.tag);
        measure_sum += f.box_measure(b);
        for (size_t j = i + 1; j < kids.size(); ++j)
          CHECK(!b.intersects(cube_box(kids[j], f)));
      }
      CHECK(measure_sum == f.box_measure(parent));
    }
  }
}

TEST_CASE("children at max depth raise") {
  DyadicFrame f = unit_frame(3);
  DyadicCube leaf = base_cube_containing(f, 3, 0);
  CHECK_THROWS_WITH_AS(children(leaf, f), "max depth", std::out_of_range);
}

TEST_CASE("triple_host finds the side-3 host of a base cube") {
  DyadicFrame f = unit_frame(4);
  DyadicCube q{0, 1, {0}};  // [0,1/2)
  auto [tag, host] = triple_host(q, f);
  CHECK(tag >= 1);
  CHECK(tag <= 3);
  CHECK(cube_side(host, f) == Rat(3, 2));
  CHECK(cube_box(host, f).contains(cube_box(q, f)));
  CHECK(cube_box(host, f) == triple_box(cube_box(q, f)));
}

TEST_CASE("every triple appears in exactly one shifted family (depth 6)") {
  for (int dim = 1; dim <= 2; ++dim) {
    int depth = dim == 1 ? 6 : 4;
    DyadicFrame f = dim == 1 ? unit_frame(depth) : square_frame(depth);
    for (int level = 0; level <= depth; ++level) {
      for (const DyadicCube& q : cubes_at(f, 0, level)) {
        auto [tag, host] = triple_host(q, f);
        IntBox t3 = triple_box(cube_box(q, f));
        CHECK(cube_box(host, f) == t3);
        // membership: which families contain this exact box at this level?
        int member_count = 0;
        for (int j = 1; j <= shifted_family_count(dim); ++j) {
          DyadicCube cand = shifted_cube_containing(f, j, level, cells_in_box(f, t3).front());
          if (cube_box(cand, f) == t3) ++member_count;
        }
        CHECK(member_count == 1);
        CHECK(tag == triple_host(q, f).first);
      }
    }
  }
}

TEST_CASE("within each shifted family cubes are nested or disjoint (depth 6)") {
  DyadicFrame f = unit_frame(6);
  for (int tag = 1; tag <= 3; ++tag) {
    std::vector<IntBox> boxes;
    for (int level = 0; level <= 6; ++level)
      for (const DyadicCube& q : cubes_at(f, tag, level)) boxes.push_back(cube_box(q, f));
    for (size_t i = 0; i < boxes.size(); ++i)
      for (size_t j = i + 1; j < boxes.size(); ++j) {
        bool ok = !boxes[i].intersects(boxes[j]) || boxes[i].contains(boxes[j]) ||
                  boxes[j].contains(boxes[i]);
        REQUIRE(ok);
      }
  }
}

TEST_CASE("each tag/level tiles the root domain exactly") {
  for (int dim = 1; dim <= 2; ++dim) {
    DyadicFrame f = dim == 1 ? unit_frame(5) : square_frame(3);
    for (int tag = 0; tag <= shifted_family_count(dim); ++tag) {
      for (int level = 0; level <= f.depth(); ++level) {
        Rat covered = 0;
        auto cubes = cubes_at(f, tag, level);
        for (size_t i = 0; i < cubes.size(); ++i) {
          IntBox clip = cube_box(cubes[i], f).intersect(f.domain_box());
          covered += f.box_measure(clip);
          for (size_t j = i + 1; j < cubes.size(); ++j)
            CHECK(!cube_box(cubes[i], f).intersects(cube_box(cubes[j], f)));
        }
        CHECK(covered == f.box_measure(f.domain_box()));
      }
    }
  }
}

TEST_CASE("cz_select on zero density is empty") {
  DyadicFrame f = unit_frame(5);
  std::vector<Rat> density(static_cast<size_t>(f.cell_count()), Rat(0));
  auto sel = cz_select(f, density, DyadicCube{0, 0, {0}}, Rat(1, 4));
  CHECK(sel.empty());
}

TEST_CASE("cz_select picks the side-2h ancestor of a single hot cell") {
  DyadicFrame f = unit_frame(5);
  std::vector<Rat> density(static_cast<size_t>(f.cell_count()), Rat(0));
  long long hot = 9;
  density[static_cast<size_t>(hot)] = 1;
  auto sel = cz_select(f, density, DyadicCube{0, 0, {0}}, Rat(1, 4));
  REQUIRE(sel.size() == 1);
  // the level L-1 ancestor (side 2h) has density 1/2 > 1/4,
  // the level L-2 ancestor (side 4h) has density exactly 1/4 and is skipped
  CHECK(sel[0] == base_cube_containing(f, f.depth() - 1, hot));
}

TEST_CASE("cz_select root above height raises") {
  DyadicFrame f = unit_frame(3);
  std::vector<Rat> density(static_cast<size_t>(f.cell_count()), Rat(1));
  CHECK_THROWS_AS(cz_select(f, density, DyadicCube{0, 0, {0}}, Rat(1, 4)), std::domain_error);
}

TEST_CASE("cz_select measure bound and coverage for random sets") {
  DyadicFrame f = unit_frame(7);
  const long long cells = f.cell_count();
  testsup::Rng rng(42);
  const Rat lambda(1, 4);  // 2^-(n+1) in n=1
  for (int trial = 0; trial < 50; ++trial) {
    // random E with |E| <= 2^-(n+2) |Q0|
    long long target = 1 + rng.below(cells / 8);
    std::set<long long> e;
    while (static_cast<long long>(e.size()) < target) e.insert(rng.below(cells));
    std::vector<Rat> density(static_cast<size_t>(cells), Rat(0));
    for (long long c : e) density[static_cast<size_t>(c)] = 1;
    auto sel = cz_select(f, density, DyadicCube{0, 0, {0}}, lambda);
    long long selected_cells = 0;
    std::set<long long> covered;
    for (const auto& p : sel) {
      IntBox b = cube_box(p, f);
      selected_cells += b.cell_count();
      for (long long c : cells_in_box(f, b)) covered.insert(c);
      // selected cubes have density strictly above lambda
      Rat sum = 0;
      for (long long c : cells_in_box(f, b)) sum += density[static_cast<size_t>(c)];
      CHECK(sum > lambda * rat_ll(b.cell_count()));
    }
    // Sum |P_j| <= 2^{n+1} |E|
    CHECK(rat_ll(selected_cells) <= Rat(8) * rat_ll(static_cast<long long>(e.size())) / 2);
    // every density-1 cell is covered
    for (long long c : e) CHECK(covered.count(c) == 1);
    // pairwise disjoint
    long long union_cells = 0;
    for (const auto& p : sel) union_cells += cube_box(p, f).cell_count();
    CHECK(union_cells == static_cast<long long>(covered.size()));
  }
}

TEST_CASE("cz_select output does not depend on construction order") {
  DyadicFrame f = unit_frame(6);
  const long long cells = f.cell_count();
  testsup::Rng rng(5);
  std::vector<long long> hot;
  for (int i = 0; i < 6; ++i) hot.push_back(rng.below(cells));
  std::vector<Rat> d1(static_cast<size_t>(cells), Rat(0));
  for (long long c : hot) d1[static_cast<size_t>(c)] = 1;
  std::vector<Rat> d2(static_cast<size_t>(cells), Rat(0));
  for (auto it = hot.rbegin(); it != hot.rend(); ++it) d2[static_cast<size_t>(*it)] = 1;
  auto s1 = cz_select(f, d1, DyadicCube{0, 0, {0}}, Rat(1, 4));
  auto s2 = cz_select(f, d2, DyadicCube{0, 0, {0}}, Rat(1, 4));
  CHECK(s1 == s2);
}

namespace {

SparseFamily family_from_cubes(const DyadicFrame& f, const std::vector<DyadicCube>& cubes,
                               const Rat& eta) {
  SparseFamily s{f, eta, {}, std::nullopt};
  for (const auto& q : cubes) s.members.push_back(FamilyMember{cube_box(q, f), q});
  return s;
}

}  // namespace

TEST_CASE("verify_sparse passes on a descending chain at eta=1/2") {
  DyadicFrame f = unit_frame(4);
  SparseFamily s = family_from_cubes(
      f, {DyadicCube{0, 0, {0}}, DyadicCube{0, 1, {0}}, DyadicCube{0, 2, {0}}}, Rat(1, 2));
  auto r = verify_sparse(s, Rat(1, 2));
  CHECK(r.pass);
  // canonical E of [0,1) is its right half
  auto assign = canonical_assignment(s);
  CHECK(assign[0].size() == 8);
  CHECK(assign[0].front() == 8);
}

TEST_CASE("verify_sparse fails at the root of a full binary tree") {
  DyadicFrame f = unit_frame(4);
  std::vector<DyadicCube> cubes{DyadicCube{0, 0, {0}}};
  for (long long m = 0; m < 2; ++m) cubes.push_back(DyadicCube{0, 1, {m}});
  for (long long m = 0; m < 4; ++m) cubes.push_back(DyadicCube{0, 2, {m}});
  SparseFamily s = family_from_cubes(f, cubes, Rat(1, 2));
  auto r = verify_sparse(s, Rat(1, 2));
  CHECK(!r.pass);
  REQUIRE(r.witness.has_value());
  CHECK(*r.witness == 0);  // root: children cover it, E empty
}

TEST_CASE("centered cubes with E_k = Q_k minus Q_{k+1} form a 1/2-sparse family") {
  // frame [-1,1), centered cubes of side 2^{1-k}
  DyadicFrame f(1, {Rat(-1)}, Rat(2), 6);
  const long long half = f.cells_per_axis() / 2;
  SparseFamily s{f, Rat(1, 2), {}, std::nullopt};
  std::vector<std::vector<long long>> assign;
  int kmax = f.depth() - 1;
  for (int k = 0; k <= kmax; ++k) {
    long long r = half >> k;  // half-width in cells
    IntBox b{1, {half - r}, {half + r}};
    s.members.push_back(FamilyMember{b, std::nullopt});
  }
  for (int k = 0; k <= kmax; ++k) {
    IntBox b = s.members[static_cast<size_t>(k)].box;
    IntBox inner = (k < kmax) ? s.members[static_cast<size_t>(k + 1)].box : IntBox{1, {0}, {0}};
    std::vector<long long> e;
    for (long long c : cells_in_box(f, b)) {
      auto t = f.cell_tuple(c);
      if (inner.empty() || t[0] < inner.lo[0] || t[0] >= inner.hi[0]) e.push_back(c);
    }
    assign.push_back(e);
  }
  s.assignment = assign;
  CHECK(verify_sparse(s, Rat(1, 2)).pass);
  // canonical assignment agrees here
  SparseFamily s2 = s;
  s2.assignment.reset();
  CHECK(verify_sparse(s2, Rat(1, 2)).pass);
}

TEST_CASE("verify_sparse with canonical assignment is monotone under removal") {
  DyadicFrame f = unit_frame(5);
  testsup::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    // random nested-ish family: random chain segments
    std::vector<DyadicCube> cubes{DyadicCube{0, 0, {0}}};
    for (int i = 0; i < 6; ++i) {
      int level = 1 + static_cast<int>(rng.below(f.depth()));
      cubes.push_back(base_cube_containing(f, level, rng.below(f.cell_count())));
    }
    std::sort(cubes.begin(), cubes.end(), cube_less);
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
    SparseFamily s = family_from_cubes(f, cubes, Rat(1, 2));
    if (!verify_sparse(s, Rat(1, 2)).pass) continue;
    for (size_t drop = 0; drop < cubes.size(); ++drop) {
      SparseFamily t = s;
      t.members.erase(t.members.begin() + static_cast<std::ptrdiff_t>(drop));
      CHECK(verify_sparse(t, Rat(1, 2)).pass);
    }
  }
}

TEST_CASE("family files round-trip") {
  DyadicFrame f = unit_frame(4);
  SparseFamily s = family_from_cubes(
      f, {DyadicCube{0, 0, {0}}, DyadicCube{0, 2, {1}}, DyadicCube{1, 1, {0}}}, Rat(1, 3));
  s.members.push_back(FamilyMember{IntBox{1, {2}, {9}}, std::nullopt});
  s.assignment = canonical_assignment(s);
  std::stringstream ss;
  write_family(ss, s);
  SparseFamily back = read_family(ss, f);
  REQUIRE(back.members.size() == s.members.size());
  CHECK(back.eta == s.eta);
  for (size_t i = 0; i < s.members.size(); ++i) CHECK(back.members[i].box == s.members[i].box);
  REQUIRE(back.assignment.has_value());
  CHECK(*back.assignment == *s.assignment);
}

TEST_CASE("rationals parse and print") {
  CHECK(rat_str(rat_parse("3/4")) == "3/4");
  CHECK(rat_parse("-7/12") == Rat(-7, 12));
  CHECK(rat_pow2(-3) == Rat(1, 8));
  CHECK_THROWS_AS(rat_parse("zz"), std::invalid_argument);
}
