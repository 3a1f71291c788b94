#include "doctest.h"
#include "parisi/errors.hpp"
#include "parisi/io.hpp"

using namespace parisi;
using nlohmann::json;

TEST_SUITE("io") {
  TEST_CASE("model round trip") {
    const auto j = json::parse(R"({"terms":[{"degree":2,"coeff":1.0},{"degree":3,"coeff":0.5}],"dim":1})");
    const auto m = io::model_from_json(j);
    CHECK(m.xi(0.5) == doctest::Approx(0.25 + 0.5 * 0.125));
    const auto m2 = io::model_from_json(io::to_json(m));
    for (double x : {0.0, 0.3, 0.9}) CHECK(m2.xi(x) == m.xi(x));
    CHECK(io::model_from_json(json::parse(R"({"name":"sk"})")).xi(0.7) == doctest::Approx(0.49));
  }

  TEST_CASE("measure and chi round trips") {
    const DiscreteMeasure mu({0.1, 0.5}, {0.25, 0.75});
    CHECK(io::measure_from_json(io::to_json(mu)) == mu);
    const PLConvexFn chi({0.0, 0.5, 1.0}, {0.2, 0.9});
    const auto back = io::chi_from_json(io::to_json(chi));
    CHECK(back.knots() == chi.knots());
    CHECK(back.slopes() == chi.slopes());
  }

  TEST_CASE("bad input raises ValidationError") {
    CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"atoms":[0.1],"weights":[0.5]})")), ValidationError);
    CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"atoms":[0.1]})")), ValidationError);
    CHECK_THROWS_AS(io::model_from_json(json::parse(R"({"name":"nope"})")), ValidationError);
    CHECK_THROWS_AS(io::load("{not json"), ValidationError);
    CHECK_THROWS_AS(io::load("/nonexistent/file.json"), ValidationError);
    CHECK(io::load(R"({"a":1})")["a"] == 1);
  }
}
