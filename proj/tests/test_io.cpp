#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spikelab/errors.hpp"
#include "spikelab/io.hpp"

using namespace spikelab;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  const auto path = fs::temp_directory_path() / ("spikelab_io_" + name);
  std::ofstream(path) << body;
  return path.string();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("matrix csv") {
  auto X = read_matrix_csv(temp_file("a.csv", "1,2,3\n4,5,6.5\n\n"));
  CHECK(X.rows() == 2);
  CHECK(X.cols() == 3);
  CHECK(X(1, 2) == 6.5);
  auto H = read_matrix_csv(temp_file("h.csv", "x,y\n1, 2\n3,4\n"), true);
  CHECK(H.rows() == 2);
  CHECK(H(0, 1) == 2.0);

  Eigen::MatrixXd R = Eigen::MatrixXd::Random(5, 4);
  const auto path = (fs::temp_directory_path() / "spikelab_io_rt.csv").string();
  write_matrix_csv(path, R);
  CHECK((read_matrix_csv(path) - R).cwiseAbs().maxCoeff() == 0.0);

  CHECK(code_of([] { read_matrix_csv(temp_file("r.csv", "1,2\n3\n")); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_matrix_csv(temp_file("n.csv", "1,abc\n")); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_matrix_csv(temp_file("e.csv", "")); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_matrix_csv(temp_file("t.csv", "1,2,\n")); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_matrix_csv("/nonexistent/x.csv"); }) == ErrorCode::ParseError);
}

TEST_CASE("labels csv") {
  CHECK(read_labels_csv(temp_file("l1.csv", "1\n2\n2\n")) == std::vector<int>{1, 2, 2});
  CHECK(read_labels_csv(temp_file("l2.csv", "1,1,2\n")) == std::vector<int>{1, 1, 2});
  CHECK(code_of([] { read_labels_csv(temp_file("l3.csv", "1.5\n")); }) == ErrorCode::ParseError);
}

TEST_CASE("model json") {
  json j = json::parse(R"({"schema":"spikelab/v1","p":6,"fractions":[0.5,0.5],
    "means":[[0,0,0,0,0,0],{"2":1.5}],
    "sigma0":{"kind":"diagonal_blocks","blocks":[[3,1.0],[3,2.0]]},
    "noise":{"name":"bernoulli_t","t":0.7}})");
  auto m = model_from_json(j, 10);
  CHECK(m.p() == 6);
  CHECK(m.tau() == 2);
  CHECK(m.means[1](2) == 1.5);
  CHECK(m.sigma0.a() == doctest::Approx(1.5));
  CHECK(m.noise.kind == NoiseKind::BernoulliT);
  CHECK(m.noise.t == 0.7);

  auto pre = model_from_json(json::parse(R"({"preset":"four_group_clt","p":2000,"noise":"exp_centered"})"), 200);
  CHECK(pre.tau() == 4);
  CHECK(pre.noise.kind == NoiseKind::ExpCentered);

  auto bad = [](const char* s) { return code_of([s] { model_from_json(json::parse(s), 10); }); };
  CHECK(bad(R"({"p":3,"fractions":[1.0]})") == ErrorCode::SchemaError);
  CHECK(bad(R"({"p":3,"fractions":[1.0],"means":[[1,2]]})") == ErrorCode::SchemaError);
  CHECK(bad(R"({"p":3,"fractions":[0.6,0.6],"means":[[1,2,3],[0,0,0]]})") == ErrorCode::SchemaError);
  CHECK(bad(R"({"p":3,"fractions":[1.0],"means":[[1,2,3]],"sigma0":{"kind":"weird"}})") == ErrorCode::SchemaError);
  CHECK(bad(R"({"p":3,"fractions":[1.0],"means":[[1,2,3]],"noise":"cauchy"})") == ErrorCode::SchemaError);
  CHECK(bad(R"({"preset":"nope","p":3})") == ErrorCode::SchemaError);
  CHECK(bad(R"({"schema":"spikelab/v0","p":3})") == ErrorCode::SchemaError);
}

TEST_CASE("study config json") {
  auto c = config_from_json(json::parse(R"({"preset":"table1_c10_caseI","replicates":7,"seed":3})"));
  CHECK(c.study == StudyKind::SpikeClt);
  CHECK(c.replicates == 7);
  CHECK(c.seed == 3);
  CHECK(c.model.noise.kind == NoiseKind::ExpCentered);
  auto d = config_from_json(json::parse(R"({"study":"sesquilinear","n":50,"z":[3,0.5],
     "model":{"preset":"two_group_identity","p":2500}})"));
  CHECK(d.z == cplx(3.0, 0.5));
  CHECK(d.model.p() == 2500);
  for (const auto& name : study_presets()) CHECK_NOTHROW(study_preset(name));
  try {
    study_preset("nope");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("lsd_semicircle") != std::string::npos);
  }
  CHECK(code_of([] { config_from_json(json::parse(R"({"study":"bogus","n":5})")); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { config_from_json(json::parse(R"({"preset":"lsd_semicircle","replicates":0})")); }) ==
        ErrorCode::SchemaError);
}
