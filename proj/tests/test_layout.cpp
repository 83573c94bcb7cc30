#include "doctest.h"

#include "eegcs/error.hpp"
#include "eegcs/layout.hpp"
#include "eegcs/selection.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace eegcs;

namespace {

std::string three_line_layout(int partner_of_two) {
  std::ostringstream s;
  s << "1 0.6 0.8 0 A 2\n";
  s << "2 -0.6 0.8 0 B " << partner_of_two << "\n";
  s << "3 0 0 1 C 3\n";
  return s.str();
}

}  // namespace

TEST_CASE("bundled egi129 layout") {
  const auto layout = resolve_layout("egi129");
  CHECK(layout.size() == 129);
  CHECK(layout.partner(125) == 128);
  CHECK(layout.partner(128) == 125);
  CHECK(layout.partner(17) == 17);
  for (const auto& e : layout.electrodes()) {
    CHECK(layout.partner(e.partner_id) == e.id);
    CHECK(std::abs(dot(e.pos, e.pos) - 1.0) < 1e-9);
  }
}

TEST_CASE("layout parsing rejects a broken partner involution") {
  std::istringstream ok(three_line_layout(1));
  CHECK(parse_layout(ok, "ok").size() == 3);
  std::istringstream bad(three_line_layout(3));
  CHECK_THROWS_AS(parse_layout(bad, "bad"), LayoutError);
}

TEST_CASE("layout parsing rejects off-sphere and duplicate electrodes") {
  std::istringstream off("1 0.5 0.5 0.5 A 1\n");
  CHECK_THROWS_AS(parse_layout(off, "off"), Error);
  std::istringstream dup("1 0 0 1 A 1\n1 0 0 1 B 1\n");
  CHECK_THROWS_AS(parse_layout(dup, "dup"), Error);
}

TEST_CASE("layout text round-trip") {
  const auto layout = resolve_layout("egi129");
  std::stringstream s;
  write_layout(s, layout);
  const auto back = parse_layout(s, "egi129");
  REQUIRE(back.size() == layout.size());
  for (size_t i = 0; i < layout.size(); ++i) {
    CHECK(back[i].id == layout[i].id);
    CHECK(back[i].partner_id == layout[i].partner_id);
    CHECK(back[i].pos.x == layout[i].pos.x);
    CHECK(back[i].pos.y == layout[i].pos.y);
    CHECK(back[i].pos.z == layout[i].pos.z);
  }
}

TEST_CASE("synthetic grid counting and symmetry") {
  const auto g = synthetic_grid_layout(2, 1);
  CHECK(g.size() == 5);
  int self = 0;
  for (const auto& e : g.electrodes()) self += e.partner_id == e.id;
  CHECK(self == 1);

  const auto pair = synthetic_grid_layout(1, 0);
  CHECK(pair.partner(1) == 2);
  CHECK(pair.partner(2) == 1);
  CHECK(pair.by_id(1).pos.x == doctest::Approx(-pair.by_id(2).pos.x));

  CHECK_THROWS_AS(synthetic_grid_layout(0, 1), LayoutError);
  CHECK(resolve_layout("grid3x2").size() == 8);
}

TEST_CASE("grid8x2 frontal count at frontier 0.5 matches the position formula") {
  const auto g = synthetic_grid_layout(8, 2);
  CHECK(g.size() == 18);
  int expected = 0;
  for (int k = 0; k < 8; ++k) {
    const double y = std::sin(std::numbers::pi / 3) * std::cos(std::numbers::pi * (k + 0.5) / 8);
    if (y > 0.5) expected += 2;
  }
  CHECK(expected == 4);
  const auto ids = g.ids();
  CHECK(region_split(g, ids, 0.5).front.electrode_ids.size() == static_cast<size_t>(expected));
}

TEST_CASE("azimuthal projection") {
  const double s = std::sin(std::numbers::pi / 4), c = std::cos(std::numbers::pi / 4);
  ElectrodeLayout l("p", {{1, {0, 0, 1}, "V", 1}, {2, {1, 0, 0}, "R", 3}, {3, {-1, 0, 0}, "L", 2}, {4, {0, s, c}, "F", 4}});
  const auto p = project2d(l);
  CHECK(p[0].x == doctest::Approx(0.0));
  CHECK(p[0].y == doctest::Approx(0.0));
  CHECK(p[1].x == doctest::Approx(1.0));
  CHECK(p[1].y == doctest::Approx(0.0));
  CHECK(p[3].x == doctest::Approx(0.0));
  CHECK(p[3].y == doctest::Approx(0.5));
}

TEST_CASE("unknown ids and layouts") {
  const auto g = synthetic_grid_layout(2, 0);
  CHECK_THROWS_AS(g.index_of(99), LayoutError);
  CHECK_FALSE(g.find(99).has_value());
  CHECK_THROWS_AS(resolve_layout("no_such_layout"), LayoutError);
}
