// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "ihmp/ihmp.h"

TEST_CASE("version and status names") {
  CHECK(std::strlen(ihmp_version()) > 0);
  CHECK(std::string(ihmp_status_name(IHMP_ERR_PARSE)) != "");
}

TEST_CASE("null handles are rejected with a message") {
  CHECK(ihmp_scenario_create(nullptr) == IHMP_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(ihmp_last_error()) > 0);
  int T = 0, D = 0;
  CHECK(ihmp_dataset_shape(nullptr, &T, &D) == IHMP_ERR_INVALID_ARGUMENT);
  ihmp_scenario_destroy(nullptr);
  ihmp_dataset_destroy(nullptr);
  ihmp_result_destroy(nullptr);
  ihmp_options_destroy(nullptr);
}

TEST_CASE("simulate, fit and score through the C interface") {
  ihmp_scenario* s = nullptr;
  REQUIRE(ihmp_scenario_create(&s) == IHMP_OK);
  CHECK(ihmp_scenario_set(s, "T", "400") == IHMP_OK);
  CHECK(ihmp_scenario_set(s, "seed", "3") == IHMP_OK);
  CHECK(ihmp_scenario_set(s, "kind", "nonsense") == IHMP_ERR_PARSE);
  CHECK(std::string(ihmp_last_error()).find("nonsense") != std::string::npos);

  ihmp_dataset* d = nullptr;
  REQUIRE(ihmp_simulate(s, &d) == IHMP_OK);
  int T = 0, D = 0, labeled = 0;
  CHECK(ihmp_dataset_shape(d, &T, &D) == IHMP_OK);
  CHECK(T == 400);
  CHECK(D == 1);
  CHECK(ihmp_dataset_has_labels(d, &labeled) == IHMP_OK);
  CHECK(labeled == 1);
  std::vector<double> small(3);
  CHECK(ihmp_dataset_values(d, small.data(), small.size()) == IHMP_ERR_INVALID_ARGUMENT);

  ihmp_options* o = nullptr;
  REQUIRE(ihmp_options_create(&o) == IHMP_OK);
  CHECK(ihmp_options_set(o, "max_iter", "60") == IHMP_OK);
  CHECK(ihmp_options_set(o, "max_iter", "many") != IHMP_OK);
  CHECK(ihmp_options_set(o, "no_such_key", "1") != IHMP_OK);

  const int K[3] = {2, 2, 2};
  ihmp_result* r = nullptr;
  REQUIRE(ihmp_fit(d, "svi", K, 3, o, &r) == IHMP_OK);
  double acc = 0.0, mse = 1.0;
  CHECK(ihmp_result_accuracy(r, d, &acc) == IHMP_OK);
  CHECK(acc >= 0.95);
  CHECK(ihmp_result_mse(r, d, &mse) == IHMP_OK);
  CHECK(mse < 0.01);
  int n = 0;
  CHECK(ihmp_result_trace_length(r, &n) == IHMP_OK);
  CHECK(n >= 1);
  std::vector<int> labels(400);
  CHECK(ihmp_result_labels(r, labels.data(), labels.size()) == IHMP_OK);
  char* json = nullptr;
  CHECK(ihmp_result_to_json(r, &json) == IHMP_OK);
  CHECK(std::string(json).find("\"decoded_source\"") != std::string::npos);
  ihmp_string_free(json);

  ihmp_result* g = nullptr;
  CHECK(ihmp_fit(d, "bogus", K, 3, o, &g) == IHMP_ERR_INVALID_ARGUMENT);
  CHECK(g == nullptr);

  ihmp_result_destroy(r);
  ihmp_options_destroy(o);
  ihmp_dataset_destroy(d);
  ihmp_scenario_destroy(s);
}

TEST_CASE("exact EM over the state cap reports a resource error") {
  std::vector<double> v(20);
  for (int i = 0; i < 20; ++i) v[i] = i % 7;
  ihmp_dataset* d = nullptr;
  REQUIRE(ihmp_dataset_create(v.data(), 20, 1, nullptr, &d) == IHMP_OK);
  const int K[4] = {8, 8, 8, 8};
  ihmp_result* r = nullptr;
  CHECK(ihmp_fit(d, "em", K, 4, nullptr, &r) == IHMP_ERR_RESOURCE_CAP);
  CHECK(std::string(ihmp_last_error()).find("svi") != std::string::npos);
  ihmp_dataset_destroy(d);
}

TEST_CASE("missing files report IO errors") {
  ihmp_dataset* d = nullptr;
  CHECK(ihmp_dataset_read("/nonexistent/path.csv", &d) == IHMP_ERR_IO);
  ihmp_scenario* s = nullptr;
  REQUIRE(ihmp_scenario_create(&s) == IHMP_OK);
  CHECK(ihmp_scenario_load(s, "/nonexistent/x.cfg") == IHMP_ERR_IO);
  ihmp_scenario_destroy(s);
}

TEST_CASE("bound and partition counts") {
  double b = 0.0;
  CHECK(ihmp_error_bound(1, 0.3, &b) == IHMP_OK);
  CHECK(b == doctest::Approx(0.0063).epsilon(0.02));
  CHECK(ihmp_error_bound(5, 0.3, &b) == IHMP_ERR_INVALID_ARGUMENT);
  std::uint64_t c = 0;
  CHECK(ihmp_count_partitions(10, 1, &c) == IHMP_OK);
  CHECK(c == 115975);
  CHECK(ihmp_count_partitions(10, 0, &c) == IHMP_OK);
  CHECK(c == 42);
}
