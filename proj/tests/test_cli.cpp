#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "dnni/integral.hpp"

using namespace dnni;
using cli::Command;
using cli::Sub;
using cli::UsageError;

namespace {

std::string run_ok(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = cli::run(cli::parse_flags(args), out, err);
  CHECK(rc == 0);
  if (err_text) *err_text = err.str();
  return out.str();
}

int exit_code(std::vector<std::string> args) {
  std::vector<char*> argv{const_cast<char*>("dnni")};
  for (std::string& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("train flags") {
  const Command c = cli::parse_flags({"train", "--expr", "a*x", "--domain", "a=1:2", "--domain", "x=0:1",
                                      "--layers", "8,8,8", "--epochs", "50", "--activation", "sigmoid"});
  CHECK(c.sub == Sub::train);
  REQUIRE(c.domains.size() == 2);
  CHECK(c.domains[0].name == "x");
  CHECK(c.domains[1].name == "a");
  CHECK(c.layers == std::vector<int>{8, 8, 8});
  CHECK(c.epochs == 50);
  CHECK(c.activation == Activation::sigmoid);
  CHECK(c.seed == 42);
  CHECK_FALSE(c.anchor.has_value());

  CHECK_THROWS_AS(cli::parse_flags({"train", "--domain", "x=0:1"}), UsageError);
  CHECK_THROWS_AS(cli::parse_flags({"train", "--expr", "x", "--domain", "x=1:0"}), UsageError);
  CHECK_THROWS_AS(cli::parse_flags({"train", "--expr", "x*q", "--domain", "x=0:1"}), UsageError);
  CHECK_THROWS_AS(cli::parse_flags({"train", "--expr", "x+", "--domain", "x=0:1"}), UsageError);
  CHECK_THROWS_AS(cli::parse_flags({"train", "--expr", "x", "--domain", "x=0:1", "--bogus", "1"}), UsageError);
  CHECK_THROWS_AS(cli::parse_flags({"train", "--expr", "x", "--domain", "x=0:1", "--activation", "relu"}),
                  UsageError);
  CHECK_THROWS_AS(cli::parse_flags({"train", "--expr", "x", "--domain", "x=0:1", "--epochs", "nan"}), UsageError);
}

TEST_CASE("domain and param parsing") {
  const Axis a = cli::parse_domain("eta=-2:2.5");
  CHECK(a.name == "eta");
  CHECK(a.domain.lo == -2.0);
  CHECK(a.domain.hi == 2.5);
  CHECK_THROWS_AS(cli::parse_domain("x=1:1"), UsageError);
  CHECK_THROWS_AS(cli::parse_domain("=0:1"), UsageError);
  CHECK_THROWS_AS(cli::parse_domain("x=0"), UsageError);
  CHECK(cli::parse_param("q=1.5") == std::pair<std::string, double>{"q", 1.5});
  CHECK_THROWS_AS(cli::parse_param("q"), UsageError);
}

TEST_CASE("case flags") {
  const Command c = cli::parse_flags({"case", "run", "8"});
  CHECK(c.sub == Sub::case_run);
  CHECK(c.case_id == 8);
  CHECK_FALSE(c.epochs_set);
  const Command v = cli::parse_flags({"case", "run", "6", "--variant", "tail", "--epochs", "10"});
  CHECK(v.variant == "tail");
  CHECK(v.epochs_set);
  CHECK_THROWS_AS(cli::parse_flags({"case", "run", "16"}), UsageError);
  CHECK_THROWS_AS(cli::parse_flags({"case", "run", "6", "--variant", "nope"}), UsageError);
  CHECK(cli::parse_flags({"case", "list"}).sub == Sub::case_list);
  CHECK_THROWS_AS(cli::parse_flags({"case"}), UsageError);
}

TEST_CASE("help lists every flag with its default") {
  const std::string h = run_ok({"--help"});
  for (const char* flag : {"--expr", "--domain", "--anchor", "--layers", "--activation", "--epochs", "--seed", "--lr",
                           "--points", "--sampling", "--zeta", "--threads", "--out", "--model", "--lower", "--upper",
                           "--param", "--grid", "--n", "--tol", "--source", "--alpha", "--beta", "--gamma", "--x0",
                           "--xn", "--u0", "--c", "--nodes", "--strategy", "--n1", "--n2", "--variant", "--cache",
                           "--T", "--t", "--eps", "--m"}) {
    CAPTURE(std::string(flag));
    CHECK(h.find(flag) != std::string::npos);
  }
  for (const char* def : {"10000", "42", "1000000", "1e-10", "0.01", "101", "quadrature"}) {
    CAPTURE(std::string(def));
    CHECK(h.find(def) != std::string::npos);
  }
  const std::string sub = run_ok({"breakeven", "--help"});
  CHECK(sub.find("--eps") != std::string::npos);
  CHECK(sub.find("--expr") == std::string::npos);
}

TEST_CASE("breakeven output") {
  const std::string out = run_ok({"breakeven", "--T", "2.81", "--t", "1.05e-4", "--eps", "5.729e-7", "--m", "2"});
  std::istringstream in(out);
  std::string k1, k2;
  double n_real = 0;
  long n_int = 0;
  in >> k1 >> n_real >> k2 >> n_int;
  CHECK(k1 == "n_real");
  CHECK(k2 == "n_int");
  CHECK(n_real == doctest::Approx(1 + 2 * 2.81 / (2 * (1.05e-4 - 2 * 5.729e-7))).epsilon(1e-12));
  CHECK(n_int == static_cast<long>(std::ceil(n_real)));
  CHECK_THROWS_AS(cli::parse_flags({"breakeven", "--T", "-1", "--t", "1", "--eps", "0"}), UsageError);
  CHECK(exit_code({"breakeven", "--T", "1", "--t", "1e-4", "--eps", "1e-3"}) == 1);
}

TEST_CASE("train, integrate and eval-grid round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "dnni_cli_test";
  std::filesystem::create_directories(dir);
  const std::string model = (dir / "cos.json").string();
  std::string err;
  run_ok({"train", "--expr", "cos(x)", "--domain", "x=0:6.283185307179586", "--points", "100", "--epochs", "3000",
          "--out", model, "--progress", "1000"},
         &err);
  CHECK(err.rfind("# seed 42\n", 0) == 0);
  const Antiderivative ad = Antiderivative::load(model);
  CHECK(ad.summary().epochs == 3000);

  const double v = std::stod(run_ok({"integrate", "--model", model, "--lower", "0", "--upper", "1.5707963267948966"}));
  CHECK(v == ad.definite(0, std::numbers::pi / 2).value);
  CHECK(v == doctest::Approx(1.0).epsilon(2e-2));

  const std::string csv = run_ok({"eval-grid", "--model", model, "--grid", "5"});
  CHECK(csv.rfind("x,prediction\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);

  const std::string cmp = run_ok({"compare", "--model", model, "--lower", "0", "--upper", "3", "--n", "999"});
  CHECK(cmp.rfind("method,value,evaluations,seconds\n", 0) == 0);
  for (const char* m : {"simpson13,", "simpson38,", "adaptive,", "dnni,"}) CHECK(cmp.find(m) != std::string::npos);

  CHECK(exit_code({"integrate", "--model", (dir / "missing.json").string(), "--lower", "0", "--upper", "1"}) == 1);
  CHECK(exit_code({"integrate", "--model", model, "--lower", "0"}) == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("galerkin with quadrature load") {
  const std::string csv = run_ok({"galerkin", "--source", "cos(2*x)", "--nodes", "11"});
  CHECK(csv.rfind("x,quadrature\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
  const std::string last = csv.substr(csv.rfind(',') + 1);
  CHECK(std::stod(last) == doctest::Approx(std::sin(2.0) / 2).epsilon(5e-3));
  CHECK_THROWS_AS(cli::parse_flags({"galerkin", "--source", "cos(2*x)", "--strategy", "fast"}), UsageError);
}
