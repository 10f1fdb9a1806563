#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "geomm/model.hpp"
#include "geomm/rng.hpp"

using namespace geomm;

namespace {

GeoMultimediaObject make_object(std::int64_t id, double x, double y,
                                Modality mod, std::size_t dim) {
  GeoMultimediaObject o;
  o.id = id;
  o.location = {x, y};
  o.feature.modality = mod;
  o.feature.values.assign(dim, 0.5);
  return o;
}

Dataset small_valid_dataset() {
  std::vector<GeoMultimediaObject> objs;
  objs.push_back(make_object(0, 0.0, 0.0, Modality::Image, 3));
  objs.push_back(make_object(1, 1.0, 2.0, Modality::Image, 3));
  objs.push_back(make_object(2, -1.0, 0.5, Modality::Text, 2));
  return make_dataset(std::move(objs), 2, 3, 4);
}

}  // namespace

TEST_CASE("well-formed dataset validates clean") {
  auto ds = small_valid_dataset();
  CHECK(validate_dataset(ds).empty());

  SUBCASE("single object") {
    std::vector<GeoMultimediaObject> one;
    one.push_back(make_object(7, 3.0, 4.0, Modality::Image, 3));
    auto single = make_dataset(std::move(one), 2, 3, 4);
    CHECK(validate_dataset(single).empty());
  }
}

TEST_CASE("duplicate id is reported once with the id") {
  auto ds = small_valid_dataset();
  ds.objects.push_back(make_object(7, 0.5, 0.5, Modality::Image, 3));
  ds.objects.push_back(make_object(7, 0.6, 0.6, Modality::Image, 3));
  recompute_bounding_box(ds);
  const auto v = validate_dataset(ds);
  REQUIRE(v.size() == 1);
  CHECK(v[0].object_id == 7);
  CHECK(v[0].reason.find("duplicate") != std::string::npos);
}

TEST_CASE("NaN coordinate is reported") {
  auto ds = small_valid_dataset();
  ds.objects[1].location.x = std::numeric_limits<double>::quiet_NaN();
  const auto v = validate_dataset(ds);
  REQUIRE(v.size() == 1);
  CHECK(v[0].object_id == 1);
  CHECK(v[0].reason.find("non-finite") != std::string::npos);
}

TEST_CASE("each single-field mutation yields exactly the matching violation") {
  SUBCASE("feature dimension") {
    auto ds = small_valid_dataset();
    ds.objects[0].feature.values.push_back(1.0);
    const auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].object_id == 0);
    CHECK(v[0].reason.find("dimension") != std::string::npos);
  }
  SUBCASE("semantic vector must be a distribution") {
    auto ds = small_valid_dataset();
    ds.objects[0].semantic = SemanticVector{{0.5, 0.5, 0.5, 0.5}};
    const auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].reason.find("semantic") != std::string::npos);
  }
  SUBCASE("label range") {
    auto ds = small_valid_dataset();
    ds.objects[2].label = 4;  // classes are 0..3
    const auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].reason.find("label") != std::string::npos);
  }
  SUBCASE("bounding box coverage") {
    auto ds = small_valid_dataset();
    ds.bbox_max.x = 0.5;  // object 1 sits at x=1
    const auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].object_id == 1);
    CHECK(v[0].reason.find("bounding box") != std::string::npos);
  }
}

TEST_CASE("bounding box equals the componentwise min/max of locations") {
  DetRng rng(11);
  std::vector<GeoMultimediaObject> objs;
  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(-50.0, 50.0);
    const double y = rng.uniform(-50.0, 50.0);
    objs.push_back(make_object(i, x, y, Modality::Image, 3));
    lo_x = std::min(lo_x, x);
    lo_y = std::min(lo_y, y);
    hi_x = std::max(hi_x, x);
    hi_y = std::max(hi_y, y);
  }
  const auto ds = make_dataset(std::move(objs), 2, 3, 4);
  CHECK(ds.bbox_min.x == lo_x);
  CHECK(ds.bbox_min.y == lo_y);
  CHECK(ds.bbox_max.x == hi_x);
  CHECK(ds.bbox_max.y == hi_y);
  CHECK(validate_dataset(ds).empty());
}

TEST_CASE("semantic vector invariants") {
  CHECK(is_valid_semantic(SemanticVector{{0.25, 0.25, 0.25, 0.25}}, 4));
  CHECK(is_valid_semantic(SemanticVector{{1.0, 0.0}}, 2));
  CHECK_FALSE(is_valid_semantic(SemanticVector{{0.7, 0.2}}, 2));    // sum != 1
  CHECK_FALSE(is_valid_semantic(SemanticVector{{1.2, -0.2}}, 2));   // range
  CHECK_FALSE(is_valid_semantic(SemanticVector{{0.5, 0.5}}, 3));    // length
  CHECK(argmax_class(SemanticVector{{0.1, 0.7, 0.2}}) == 1);
}

TEST_CASE("query validation") {
  Query q;
  q.text_feature = {Modality::Text, {1.0, 0.0}};
  q.k = 5;
  q.mu = 0.5;
  CHECK_NOTHROW(validate_query(q));

  SUBCASE("k") {
    q.k = 0;
    CHECK_THROWS_AS(validate_query(q), std::invalid_argument);
  }
  SUBCASE("mu") {
    q.mu = 1.5;
    CHECK_THROWS_AS(validate_query(q), std::invalid_argument);
  }
  SUBCASE("modality") {
    q.text_feature.modality = Modality::Image;
    CHECK_THROWS_AS(validate_query(q), std::invalid_argument);
  }
}
