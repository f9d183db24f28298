#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dnni/errors.hpp"
#include "dnni/train.hpp"

namespace dnni::cli {

/// Bad command line. The message names the offending flag.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Sub { help, train, integrate, eval_grid, compare, galerkin, case_run, case_list, breakeven };

struct Command {
  Sub sub = Sub::help;
  std::string help_text;

  // training (train, galerkin without --n1/--n2, case overrides)
  std::string expr;
  std::vector<Axis> domains;  // x first
  std::optional<double> anchor;
  std::vector<int> layers = {10, 10};
  Activation activation = Activation::tanh;
  long epochs = 10000;
  std::uint64_t seed = 42;
  double lr = 1e-2;
  std::vector<std::size_t> points;  // per axis; empty means defaults
  Sampling sampling = Sampling::uniform_grid;
  std::optional<double> zeta;
  long progress_interval = 1000;
  unsigned threads = 0;
  std::string out;

  // evaluation
  std::string model;
  std::optional<double> lower;
  std::optional<double> upper;
  Bindings params;
  std::size_t grid = 1000;

  // compare
  long n = 1000000;
  double tol = 1e-10;

  // galerkin
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 0.0;
  double x0 = 0.0;
  double xn = 1.0;
  double u0 = 0.0;
  double c = 0.0;
  int nodes = 101;
  std::string strategy = "quadrature";
  std::string n1;
  std::string n2;

  // case
  int case_id = 0;
  std::string variant;
  std::string cache;
  bool epochs_set = false;
  bool seed_set = false;
  bool layers_set = false;
  bool activation_set = false;
  bool sampling_set = false;
  bool lr_set = false;
  bool nodes_set = false;

  // breakeven
  double T = 0.0;
  double t = 0.0;
  double eps = 0.0;
  int m = 1;
};

/// Parses and validates everything before any computation. `args` excludes
/// the program name. Throws UsageError.
Command parse_flags(const std::vector<std::string>& args);

/// `name=lo:hi` with lo < hi.
Axis parse_domain(const std::string& text);

/// `name=value`.
std::pair<std::string, double> parse_param(const std::string& text);

/// Runs a parsed command. Machine output goes to `out` (or the --out file),
/// progress to `err`. Returns the process exit code.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

/// 0 success, 1 usage or input error, 2 numerical failure.
int main(int argc, char** argv);

}  // namespace dnni::cli
