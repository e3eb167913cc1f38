#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "cnlasso/error.hpp"
#include "cnlasso/io.hpp"

using namespace cnlasso;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("cnlasso_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("csv round trip with quoting") {
  TempDir dir;
  CsvTable table;
  table.header = {"id", "note", "value"};
  table.rows = {{"a", "plain", "1.5"}, {"b", "with, comma", "2"}, {"c", "say \"hi\"", "3"}};
  const std::string path = dir.file("t.csv");
  write_csv(path, table);
  const CsvTable back = read_csv(path);
  CHECK(back.header == table.header);
  CHECK(back.rows == table.rows);
}

TEST_CASE("number formatting uses six significant digits") {
  CHECK(format_number(0.123456789) == "0.123457");
  CHECK(format_number(1234567.0) == "1.23457e+06");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(-0.5) == "-0.5");
}

TEST_CASE("dataset loader closes counts with zero replacement") {
  TempDir dir;
  const std::string path = dir.file("counts.csv");
  write_file(path,
             "id,bmi,otu1,otu2,otu3\n"
             "s1,21.5,2,2,0\n"
             "s2,25.0,1,1,2\n");
  DatasetSpec spec;
  spec.response = "bmi";
  const CompositionalDataset data = load_dataset_csv(path, spec);
  CHECK(data.n() == 2);
  CHECK(data.p() == 3);
  CHECK(data.compositions()(0, 0) == doctest::Approx(0.4));
  CHECK(data.compositions()(0, 2) == doctest::Approx(0.2));  // zero replaced by one
  CHECK(data.responses()[0] == doctest::Approx(21.5));
  CHECK(data.feature_names() == std::vector<std::string>({"otu1", "otu2", "otu3"}));
  CHECK(data.sample_ids() == std::vector<std::string>({"s1", "s2"}));
}

TEST_CASE("dataset loader accepts proportions and rejects drifting rows") {
  TempDir dir;
  const std::string good = dir.file("props.csv");
  write_file(good,
             "id,y,a,b\n"
             "s1,1.0,0.25,0.75\n"
             "s2,2.0,0.5,0.5\n");
  DatasetSpec spec;
  spec.response = "y";
  CHECK(load_dataset_csv(good, spec).p() == 2);

  const std::string drifting = dir.file("drift.csv");
  write_file(drifting,
             "id,y,a,b\n"
             "s1,1.0,0.26,0.75\n"
             "s2,2.0,0.5,0.5\n");
  DatasetSpec forced = spec;
  forced.input_kind = "proportions";
  CHECK_THROWS_AS(load_dataset_csv(drifting, forced), ValidationError);
  forced.reclose = true;
  const CompositionalDataset reclosed = load_dataset_csv(drifting, forced);
  CHECK(reclosed.compositions()(0, 0) == doctest::Approx(0.26 / 1.01));
}

TEST_CASE("dataset loader splits covariates and detects categorical columns") {
  TempDir dir;
  const std::string path = dir.file("cov.csv");
  write_file(path,
             "id,y,sex,age,grp,a,b\n"
             "s1,1.0,F,20,1,0.25,0.75\n"
             "s2,2.0,M,30,2,0.5,0.5\n");
  DatasetSpec spec;
  spec.response = "y";
  spec.covariates = {"sex", "age", "grp"};
  spec.categorical = {"grp"};  // numeric-looking but declared categorical
  const CompositionalDataset data = load_dataset_csv(path, spec);
  CHECK(data.p() == 2);
  REQUIRE(data.covariates().cols() == 3);
  CHECK(data.covariates().columns()[0].categorical);
  CHECK_FALSE(data.covariates().columns()[1].categorical);
  CHECK(data.covariates().columns()[1].numeric[1] == doctest::Approx(30.0));
  CHECK(data.covariates().columns()[2].categorical);

  DatasetSpec missing = spec;
  missing.covariates = {"nope"};
  CHECK_THROWS_AS(load_dataset_csv(path, missing), ParseError);
  DatasetSpec bad_response = spec;
  bad_response.response = "nope";
  CHECK_THROWS_AS(load_dataset_csv(path, bad_response), ParseError);
}

TEST_CASE("graph files round trip in both formats") {
  TempDir dir;
  Matrix r = Matrix::Zero(3, 3);
  r(0, 1) = r(1, 0) = 1.0;
  r(1, 2) = r(2, 1) = 0.5;
  const SimilarityGraph graph(r);

  const std::string dense = dir.file("g.csv");
  write_graph(dense, graph, "dense");
  CHECK(read_graph(dense, "dense").weights() == r);

  const std::string triplet = dir.file("g3.csv");
  write_graph(triplet, graph, "triplet");
  CHECK(read_graph(triplet, "triplet").weights() == r);
  CHECK(read_graph(triplet, "triplet", 3).size() == 3);
}

TEST_CASE("graph reader rejects malformed input") {
  TempDir dir;
  const std::string asym = dir.file("asym.csv");
  write_file(asym, "0,1\n0,0\n");
  CHECK_THROWS_AS(read_graph(asym, "dense"), ValidationError);

  const std::string no_header = dir.file("nh.csv");
  write_file(no_header, "0,1,1\n");
  CHECK_THROWS_AS(read_graph(no_header, "triplet"), ParseError);
}

TEST_CASE("fit result json round trip") {
  FitResult fit;
  fit.w = RowMatrix(2, 3);
  fit.w << 1, 2, 3, 4, 5, 6;
  fit.b = fit.w;
  fit.b(0, 0) = 0.0;
  fit.iterations = 17;
  fit.converged = true;
  fit.trace = {{0.5, 0.25, 12.0}, {0.1, 0.05, 11.0}};
  fit.cluster_labels = std::vector<int>{0, 1};

  const nlohmann::json j = fit_result_to_json(fit);
  const FitResult back = fit_result_from_json(j);
  CHECK(back.w == fit.w);
  CHECK(back.b == fit.b);
  CHECK(back.iterations == 17);
  CHECK(back.converged);
  REQUIRE(back.trace.size() == 2);
  CHECK(back.trace[1].objective == 11.0);
  REQUIRE(back.cluster_labels.has_value());
  CHECK(*back.cluster_labels == std::vector<int>({0, 1}));
}

TEST_CASE("json files are readable back and parse errors are typed") {
  TempDir dir;
  const std::string path = dir.file("x.json");
  write_json_file(path, {{"a", 1}, {"b", "two"}});
  const nlohmann::json j = read_json_file(path);
  CHECK(j.at("a") == 1);

  const std::string broken = dir.file("broken.json");
  write_file(broken, "{oops");
  CHECK_THROWS_AS(read_json_file(broken), ParseError);
  CHECK_THROWS_AS(read_json_file(dir.file("missing.json")), IoError);
}
