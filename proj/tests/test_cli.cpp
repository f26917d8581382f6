#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sfgw/cli.hpp"
#include "sfgw/errors.hpp"
#include "test_support.hpp"

using namespace sfgw;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("sfgw_cli_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int invoke(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "sfgw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("point cloud parsing") {
  const PointCloud a = parse_point_cloud_text("0,0\n1,0\n");
  CHECK(a.size() == 2);
  CHECK(a.dim() == 2);
  CHECK(a.points()(1, 0) == 1.0);

  const PointCloud b = parse_point_cloud_text("x,y\n0,0\n");
  CHECK(b.size() == 1);

  const PointCloud c = parse_point_cloud_text("1.5, -2e3 ,+4\r\n0,0,0\r\n\n\n");
  CHECK(c.size() == 2);
  CHECK(c.points()(0, 1) == -2000.0);
  CHECK(c.points()(0, 2) == 4.0);

  try {
    parse_point_cloud_text("0,0\n1\n");
    FAIL("expected a ragged-row error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  try {
    parse_point_cloud_text("0,0\n1,abc\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(parse_point_cloud_text("0,nan\n"), ParseError);
  CHECK_THROWS_AS(parse_point_cloud_text("0,inf\n1,1\n"), ParseError);
  CHECK_THROWS_AS(parse_point_cloud_text(""), EmptyInputError);
  CHECK_THROWS_AS(parse_point_cloud_text("\n\n"), EmptyInputError);
  CHECK_THROWS_AS(parse_point_cloud_text("x,y\n"), EmptyInputError);
  // A single column is not a valid cloud.
  CHECK_THROWS_AS(parse_point_cloud_text("1\n2\n"), DimensionError);
}

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(10.0) == "10");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.index(40)) - 20.0);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("written clouds read back identically") {
  TempDir dir;
  Rng rng(2);
  const PointCloud c = sfgw::testing::random_cloud(rng, 50, 4, 1e3);
  write_point_cloud(dir.file("c.csv"), c);
  CHECK(parse_point_cloud(dir.file("c.csv")) == c);
}

TEST_CASE("discrepancy command on identical clouds") {
  TempDir dir;
  write_text(dir.file("a.csv"), "x,y\n0,0\n1,0\n0.5,2\n3,1\n");
  const std::string out = dir.file("r.csv");
  CHECK(invoke({"discrepancy", "--kind", "ssfg", "--beta", "0.1", "--kappa", "10", "--L", "50",
                "--max-iter", "10", "--seed", "7", dir.file("a.csv"), dir.file("a.csv"), "-o",
                out}) == 0);
  CHECK(read_text(out) == "metric,parameter,value,std_error\nssfg,10,0,0\n");
  const std::string meta = read_text(dir.file("r.json"));
  CHECK(meta.find("\"seed\": 7") != std::string::npos);
  CHECK(meta.find("\"kind\": \"ssfg\"") != std::string::npos);
}

TEST_CASE("defaults follow the reference configuration") {
  const RunConfig c;
  CHECK(c.spec.fgw.beta == 0.1);
  CHECK(c.spec.opt.num_projections == 50);
  CHECK(c.spec.opt.max_iter == 10);
  CHECK(c.spec.opt.learning_rate == 0.001);
  CHECK(c.spec.opt.adam_beta1 == 0.5);
  CHECK(c.spec.opt.adam_beta2 == 0.999);
  CHECK(c.components == 10);

  TempDir dir;
  write_text(dir.file("a.csv"), "0,0\n1,0\n0.5,2\n");
  write_text(dir.file("b.csv"), "0,1\n2,0\n1,1\n");
  const std::string out = dir.file("m.csv");
  REQUIRE(invoke({"discrepancy", "--kind", "mssfg", dir.file("a.csv"), dir.file("b.csv"), "-o",
                  out}) == 0);
  const std::string meta = read_text(dir.file("m.json"));
  CHECK(meta.find("\"components\": 10") != std::string::npos);
  CHECK(meta.find("\"L\": 50") != std::string::npos);
}

TEST_CASE("sweep-kappa rows") {
  TempDir dir;
  write_text(dir.file("a.csv"), "0,0\n1,0\n0.5,2\n");
  write_text(dir.file("b.csv"), "0,1\n2,0\n1,1\n");
  const std::string out = dir.file("s.csv");
  REQUIRE(invoke({"sweep-kappa", "--kappas", "1,5,10,50,100", "--seed", "3", dir.file("a.csv"),
                  dir.file("b.csv"), "-o", out}) == 0);
  std::istringstream csv(read_text(out));
  std::string line;
  std::vector<std::string> metrics;
  std::getline(csv, line);
  while (std::getline(csv, line)) metrics.push_back(line.substr(0, line.find(',')));
  CHECK(metrics == std::vector<std::string>{"ssfg", "ssfg", "ssfg", "ssfg", "ssfg", "sfg",
                                            "max_sfg"});
}

TEST_CASE("every command reruns byte-identically") {
  TempDir dir;
  Rng rng(4);
  write_point_cloud(dir.file("a.csv"), sfgw::testing::random_cloud(rng, 16, 2));
  write_point_cloud(dir.file("b.csv"), sfgw::testing::random_cloud(rng, 16, 2, 1.0, 1.0));
  const std::vector<std::vector<std::string>> commands{
      {"discrepancy", "--kind", "pssfg", "--seed", "9", dir.file("a.csv"), dir.file("b.csv")},
      {"sweep-kappa", "--kappas", "1,10", "--trials", "2", dir.file("a.csv"), dir.file("b.csv")},
      {"convergence", "--dim", "2", "--sizes", "4,8", "--trials", "2", "--control"},
      {"flow", "--steps", "20", "--kind", "ssfg", dir.file("b.csv")},
      {"gmm-fit", "--steps", "20", "--k", "2", "--batch", "8", dir.file("b.csv")},
  };
  for (const auto& cmd : commands) {
    CAPTURE(cmd.front());
    std::string first, second;
    for (std::string* text : {&first, &second}) {
      auto args = cmd;
      args.push_back("-o");
      args.push_back(dir.file("out.csv"));
      REQUIRE(invoke(args) == 0);
      *text = read_text(dir.file("out.csv")) + read_text(dir.file("out.json"));
    }
    CHECK(first.size() > 40);
    CHECK(first == second);
  }
}

TEST_CASE("exit codes and rejected flags") {
  TempDir dir;
  write_text(dir.file("a.csv"), "0,0\n1,0\n");
  write_text(dir.file("bad.csv"), "0,0\n1\n");
  write_text(dir.file("c.csv"), "0,0,0\n1,0,0\n");
  std::string err;
  CHECK(invoke({"discrepancy", dir.file("a.csv"), dir.file("bad.csv"), "-o", dir.file("o.csv")},
               &err) == 1);
  CHECK(err.find("line 2") != std::string::npos);
  CHECK(invoke({"discrepancy", dir.file("a.csv"), dir.file("c.csv"), "-o", dir.file("o.csv")}) ==
        1);
  CHECK(invoke({"discrepancy", dir.file("a.csv"), dir.file("missing.csv"), "-o",
                dir.file("o.csv")}) == 1);
  CHECK(invoke({"discrepancy", "--bogus", "1", dir.file("a.csv"), dir.file("a.csv")}) == 1);
  CHECK(invoke({"discrepancy", "--kind", "nope", dir.file("a.csv"), dir.file("a.csv")}) == 1);
  CHECK(invoke({"discrepancy", "--kappa", "-1", dir.file("a.csv"), dir.file("a.csv"), "-o",
                dir.file("o.csv")}) == 1);
  CHECK(invoke({"frobnicate"}) == 1);
  CHECK(invoke({}) == 1);
  CHECK(invoke({"--help"}) == 0);

  // A flow that blows up is a numerical failure.
  write_text(dir.file("t.csv"), "100,0\n-100,0\n0,100\n0,-100\n");
  CHECK(invoke({"flow", "--kind", "sfg", "--step-size", "5", "--steps", "50", dir.file("t.csv"),
                "-o", dir.file("o.csv")},
               &err) == 2);
  CHECK(err.find("step") != std::string::npos);
}
