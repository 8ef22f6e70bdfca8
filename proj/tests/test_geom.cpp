#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flexweld/geom.hpp"

using namespace flexweld;

TEST_CASE("angle normalization") {
  CHECK(Angle(kTwoPi + 1.0).theta == doctest::Approx(1.0));
  CHECK(Angle(-1.0).theta == doctest::Approx(kTwoPi - 1.0));
  CHECK(Angle(0.0).theta == 0.0);
}

TEST_CASE("arcset complement basics") {
  CHECK(arcset_complement(ArcSet::full_circle()).empty());

  ArcSet half = ArcSet::from_arcs({{Angle(0.0), Angle(M_PI)}});
  ArcSet comp = arcset_complement(half);
  REQUIRE(comp.arcs().size() == 1);
  CHECK(comp.arcs()[0].lo.theta == doctest::Approx(M_PI));
  CHECK(comp.arcs()[0].length() == doctest::Approx(M_PI));

  ArcSet two = ArcSet::from_arcs({{Angle(0.0), Angle(1.0)}, {Angle(2.0), Angle(3.0)}});
  ArcSet ctwo = arcset_complement(two);
  REQUIRE(ctwo.arcs().size() == 2);
  CHECK(ctwo.total_length() == doctest::Approx(kTwoPi - 2.0));
}

TEST_CASE("complement is an involution") {
  ArcSet E = ArcSet::from_arcs(
      {{Angle(0.3), Angle(0.9)}, {Angle(2.0), Angle(2.5)}, {Angle(5.5), Angle(0.1)}});
  ArcSet back = arcset_complement(arcset_complement(E));
  REQUIRE(back.arcs().size() == E.arcs().size());
  for (size_t i = 0; i < E.arcs().size(); ++i) {
    CHECK(back.arcs()[i].lo.theta == doctest::Approx(E.arcs()[i].lo.theta).epsilon(1e-10));
    CHECK(back.arcs()[i].length() == doctest::Approx(E.arcs()[i].length()).epsilon(1e-10));
  }
}

TEST_CASE("arcset merging") {
  ArcSet m = ArcSet::from_arcs({{Angle(0.0), Angle(1.0)}, {Angle(1.0), Angle(2.0)}});
  CHECK(m.arcs().size() == 1);
  CHECK(m.total_length() == doctest::Approx(2.0));
  ArcSet full = ArcSet::from_arcs({{Angle(0.0), Angle(M_PI)}, {Angle(M_PI), Angle(0.0)}});
  CHECK(full.is_full());
}

TEST_CASE("polygon area") {
  Polyline sq{{ {0, 0}, {1, 0}, {1, 1}, {0, 1} }, true};
  CHECK(polygon_area(sq) == doctest::Approx(1.0));
  Polyline tri{{ {0, 0}, {1, 0}, {0, 1} }, true};
  CHECK(polygon_area(tri) == doctest::Approx(0.5));
  Polyline rev{{ {0, 1}, {1, 0}, {0, 0} }, true};
  CHECK(polygon_area(rev) == doctest::Approx(0.5));  // sign normalized
  Polyline bad{{ {0, 0}, {1, 1} }, true};
  CHECK_THROWS(polygon_area(bad));
  Polyline open_sq{{ {0, 0}, {1, 0}, {1, 1}, {0, 1} }, false};
  CHECK_THROWS(polygon_area(open_sq));
}

TEST_CASE("polyline simplicity") {
  Polyline bow{{ {0, 0}, {1, 1}, {1, 0}, {0, 1} }, true};
  CHECK(!bow.is_simple());
  Polyline sq{{ {0, 0}, {1, 0}, {1, 1}, {0, 1} }, true};
  CHECK(sq.is_simple());
}

TEST_CASE("circle homeo identity and rotation") {
  auto id = CircleHomeo::identity();
  ArcSet E = ArcSet::from_arcs({{Angle(0.2), Angle(1.2)}});
  ArcSet img = homeo_image(id, E);
  CHECK(img.arcs()[0].lo.theta == doctest::Approx(0.2));
  CHECK(img.arcs()[0].length() == doctest::Approx(1.0));

  auto rot = CircleHomeo::rotation(0.7);
  img = homeo_image(rot, ArcSet::from_arcs({{Angle(0.0), Angle(1.0)}}));
  CHECK(img.arcs()[0].lo.theta == doctest::Approx(0.7));
  CHECK(img.arcs()[0].length() == doctest::Approx(1.0));
}

TEST_CASE("piecewise linear homeo image and inverse") {
  // Slope 2 on [0,1], compensating slope on the rest.
  double a = 1.0, fa = 2.0;
  double rem_slope = (kTwoPi - fa) / (kTwoPi - a);
  auto h = CircleHomeo::from_breakpoints({{0.0, 0.0}, {a, fa}, {4.0, fa + rem_slope * 3.0}});
  ArcSet img = homeo_image(h, ArcSet::from_arcs({{Angle(0.0), Angle(0.5)}}));
  CHECK(img.arcs()[0].lo.theta == doctest::Approx(0.0));
  CHECK(img.arcs()[0].length() == doctest::Approx(1.0));

  auto hinv = h.inverse();
  for (double t : {0.1, 0.9, 2.0, 5.0}) {
    CHECK(hinv.lift(h.lift(t)) == doctest::Approx(t).epsilon(1e-10));
  }
}

TEST_CASE("homeo image preserves disjointness and order") {
  auto h = CircleHomeo::from_breakpoints(
      {{0.0, 0.5}, {1.0, 1.2}, {3.0, 2.0}, {5.0, 5.9}});
  ArcSet E = ArcSet::from_arcs(
      {{Angle(0.1), Angle(0.4)}, {Angle(1.5), Angle(2.2)}, {Angle(4.0), Angle(4.5)}});
  ArcSet img = homeo_image(h, E);
  CHECK(img.arcs().size() == 3);
  for (size_t i = 0; i + 1 < img.arcs().size(); ++i)
    CHECK(img.arcs()[i].hi.theta < img.arcs()[i + 1].lo.theta);
}

TEST_CASE("marked quadrilateral sides") {
  Polyline sq{{ {0, 0}, {3, 0}, {3, 1}, {0, 1} }, true};
  MarkedQuadrilateral q{sq, {0, 1, 2, 3}};
  q.validate();
  auto a1 = q.side(0);
  CHECK(a1.size() == 2);
  CHECK(a1[0] == complexd(0, 0));
  CHECK(a1[1] == complexd(3, 0));
}

TEST_CASE("point in polygon") {
  Polyline sq{{ {0, 0}, {1, 0}, {1, 1}, {0, 1} }, true};
  CHECK(point_in_polygon({0.5, 0.5}, sq));
  CHECK(!point_in_polygon({1.5, 0.5}, sq));
}
