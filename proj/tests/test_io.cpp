#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <functional>

#include "ihmp/io.hpp"

using namespace ihmp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ihmp_io_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string error_text(const std::function<void()>& f, ErrorKind* kind = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing with comments and blanks") {
  const Config c = parse_config("# scenario\nkind = table1_nondisjoint\n\nT=300  # short\nsd = 0.2\n");
  CHECK(c.at("kind").value == "table1_nondisjoint");
  CHECK(c.at("T").value == "300");
  CHECK(c.at("T").line == 4);
  const ScenarioConfig s = scenario_from_config(c, "x.cfg");
  CHECK(s.kind == ScenarioKind::kTable1NonDisjoint);
  CHECK(s.length == 300);
  CHECK(s.sd == doctest::Approx(0.2));
}

TEST_CASE("config diagnostics name the file and line") {
  ErrorKind k{};
  CHECK(error_text([] { parse_config("T = 3\nbroken line\n", "a.cfg"); }, &k).find("a.cfg:2") !=
        std::string::npos);
  CHECK(k == ErrorKind::kParse);
  CHECK(error_text([] { parse_config("T = 3\nT = 4\n", "a.cfg"); }).find("duplicate") != std::string::npos);
  CHECK(error_text([] { scenario_from_config(parse_config("\nsd = abc\n"), "b.cfg"); }).find("b.cfg:2") !=
        std::string::npos);
  CHECK(error_text([] { scenario_from_config(parse_config("colour = red\n"), "b.cfg"); }).find("colour") !=
        std::string::npos);
  CHECK(error_text([] { scenario_from_config(parse_config("missing_ratio = 1.5\n"), "c.cfg"); }) != "");
  CHECK(error_text([] { read_config("/nonexistent/dir/x.cfg"); }, &k) != "");
  CHECK(k == ErrorKind::kIo);
}

TEST_CASE("error scenario kind accepts the numbered spelling") {
  const ScenarioConfig s = scenario_from_config(parse_config("kind = error_scenario2\n"), "x");
  CHECK(s.kind == ScenarioKind::kErrorScenario);
  CHECK(s.error_scenario == 2);
}

TEST_CASE("parameter JSON round-trips exactly") {
  const ModelParams p = table1_params(false, 0.37);
  const ModelParams q = params_from_json(params_to_json(p));
  CHECK(q.state_counts == p.state_counts);
  CHECK(q.switch_trans == p.switch_trans);
  for (int m = 0; m < 3; ++m) {
    CHECK(q.means[m] == p.means[m]);
    CHECK(q.chain_trans[m] == p.chain_trans[m]);
  }
  CHECK(q.shared_cov == p.shared_cov);
  CHECK_THROWS_AS(params_from_json("{not json"), Error);
  CHECK_THROWS_AS(params_from_json("{\"state_counts\": [2]}"), Error);
}

TEST_CASE("dataset CSV and sidecar round-trip") {
  TempDir dir;
  ScenarioConfig c;
  c.length = 50;
  c.seed = 12;
  const Dataset d = make_scenario(c);
  const std::string path = dir.file("d.csv");
  write_dataset(path, d, dataset_meta_json(c, d));
  CHECK(fs::exists(path + ".meta.json"));
  const Dataset r = read_dataset(path);
  CHECK(r.obs.values == d.obs.values);
  CHECK(r.truth.switch_labels == d.truth.switch_labels);
  CHECK(r.truth.states == d.truth.states);
  REQUIRE(r.has_params);
  CHECK(r.params.means[2] == d.params.means[2]);
}

TEST_CASE("dataset without labels reads back unlabeled") {
  TempDir dir;
  const std::string path = dir.file("plain.csv");
  write_text(path, "t,p1\n0,1.5\n1,2.5\n");
  const Dataset r = read_dataset(path);
  CHECK(r.obs.length() == 2);
  CHECK(r.truth.switch_labels.empty());
  CHECK_FALSE(r.has_params);
  write_text(path, "t,p1\n0,oops\n");
  CHECK(error_text([&] { read_dataset(path); }).find("plain.csv") != std::string::npos);
}

TEST_CASE("motion CSV parsing") {
  TempDir dir;
  const std::string good = dir.file("walk.csv");
  write_text(good, "x,y,z\n0.1,0.2,0.9\n0.0,0.1,1.1\n");
  const Mat m = read_motion_csv(good);
  CHECK(m.rows() == 2);
  CHECK(m(1, 2) == doctest::Approx(1.1));
  const std::string bad = dir.file("bad.csv");
  write_text(bad, "0.1,0.2\n");
  const std::string msg = error_text([&] { read_motion_csv(bad); });
  CHECK(msg.find("bad.csv") != std::string::npos);
  CHECK(error_text([&] { read_motion_csv(dir.file("missing.csv")); }) != "");
}

TEST_CASE("fit output files") {
  TempDir dir;
  write_labels_csv(dir.file("l.csv"), {0, 1}, {{0, 0}, {1, 0}});
  CHECK(read_text(dir.file("l.csv")) == "t,z,s1,s2\n0,0,0,1\n1,1,0,0\n");
  write_trace_csv(dir.file("t.csv"), {-3.5, -2.0});
  CHECK(read_text(dir.file("t.csv")).rfind("iteration,objective\n", 0) == 0);
  CHECK(std::string(version()).size() > 0);
}
