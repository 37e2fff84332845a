#include <doctest.h>

#include <cstring>
#include <string>

#include <json.hpp>

#include "capmink/capmink.h"

using nlohmann::json;

TEST_CASE("status names and version") {
  CHECK(std::string(capmink_status_name(CAPMINK_OK)) == "Ok");
  CHECK(std::string(capmink_status_name(CAPMINK_E_SCHEMA)) == "SchemaError");
  CHECK(std::string(capmink_status_name(CAPMINK_E_ARGUMENT)) == "Argument");
  CHECK(std::string(capmink_status_name(99)) == "Unknown");
  CHECK(std::strlen(capmink_version()) > 0);
}

TEST_CASE("null arguments") {
  CHECK(capmink_structure_isotropic(3, 2, nullptr) == CAPMINK_E_ARGUMENT);
  capmink_result* r = nullptr;
  CHECK(capmink_capacity(nullptr, nullptr, nullptr, &r) == CAPMINK_E_ARGUMENT);
  CHECK(r == nullptr);
  CHECK(std::string(capmink_result_json(nullptr)).empty());
  CHECK(capmink_result_pass(nullptr) == 0);
  capmink_result_free(nullptr);
  capmink_structure_free(nullptr);
  capmink_body_free(nullptr);
}

TEST_CASE("structure handles") {
  capmink_structure* s = nullptr;
  REQUIRE(capmink_structure_from_json(R"({"kind":"isotropic","n":3,"p":2})", &s) == CAPMINK_OK);
  capmink_result* r = nullptr;
  REQUIRE(capmink_structure_validate(s, 100, 1, &r) == CAPMINK_OK);
  CHECK(capmink_result_pass(r) == 1);
  capmink_result_free(r);
  REQUIRE(capmink_structure_describe(s, &r) == CAPMINK_OK);
  CHECK(json::parse(capmink_result_json(r))["p"] == 2);
  capmink_result_free(r);
  capmink_structure_free(s);

  CHECK(capmink_structure_from_json("{not json", &s) == CAPMINK_E_SCHEMA);
  CHECK(s == nullptr);
  CHECK(std::strlen(capmink_last_error()) > 0);
  CHECK(capmink_structure_isotropic(3, 1, &s) == CAPMINK_E_DOMAIN);
}

TEST_CASE("body errors map to status codes") {
  capmink_body* b = nullptr;
  CHECK(capmink_body_from_json(R"({"kind":"ball","center":[0,0,0]})", &b) == CAPMINK_E_SCHEMA);
  REQUIRE(capmink_body_from_json(
              R"({"kind":"polytope","normals":[[1,0,0],[-1,0,0],[0,1,0],[0,-1,0],[0,0,1],[0,0,-1]],"heights":[1,1,1,1,0,0]})",
              &b) == CAPMINK_OK);
  capmink_structure* s = nullptr;
  REQUIRE(capmink_structure_isotropic(3, 2, &s) == CAPMINK_OK);
  capmink_result* r = nullptr;
  CHECK(capmink_capacity(s, b, nullptr, &r) == CAPMINK_E_DEGENERATE_BODY);
  CHECK(capmink_capacity(s, b, R"({"bogus":1})", &r) == CAPMINK_E_SCHEMA);
  CHECK(std::string(capmink_last_error()).find("bogus") != std::string::npos);
  capmink_body_free(b);
  capmink_structure_free(s);
}

TEST_CASE("capacity through the C API") {
  capmink_structure* s = nullptr;
  capmink_body* b = nullptr;
  REQUIRE(capmink_structure_isotropic(3, 2, &s) == CAPMINK_OK);
  REQUIRE(capmink_body_from_json(R"({"kind":"ball","center":[0,0,0],"radius":1})", &b) == CAPMINK_OK);
  capmink_result* r = nullptr;
  REQUIRE(capmink_capacity(s, b, R"({"solver":{"h":0.25}})", &r) == CAPMINK_OK);
  auto j = json::parse(capmink_result_json(r));
  CHECK(j["capacity"]["capacity_energy"].get<double>() == doctest::Approx(4 * 3.141592653589793).epsilon(0.06));
  CHECK(j.contains("decay"));
  capmink_result_free(r);
  capmink_body_free(b);
  capmink_structure_free(s);
}

TEST_CASE("instance validation and matrix lemma") {
  capmink_result* r = nullptr;
  const char* hemi =
      R"({"directions":[[0,0,1],[1,0,1],[-1,0,1],[0,1,1],[0,-1,1]],"weights":[1,1,1,1,1],)"
      R"("structure":{"kind":"isotropic","n":3,"p":2}})";
  REQUIRE(capmink_validate_instance(hemi, &r) == CAPMINK_OK);
  CHECK(capmink_result_pass(r) == 0);
  capmink_result_free(r);
  CHECK(capmink_minkowski(hemi, nullptr, &r) == CAPMINK_E_INADMISSIBLE);

  REQUIRE(capmink_matrix_lemma(200, 3, 5, &r) == CAPMINK_OK);
  CHECK(capmink_result_pass(r) == 1);
  CHECK(json::parse(capmink_result_json(r))["violations"] == 0);
  capmink_result_free(r);
}
