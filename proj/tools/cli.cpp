#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dnni/cases.hpp"
#include "dnni/expr.hpp"
#include "dnni/format.hpp"
#include "dnni/galerkin.hpp"
#include "dnni/integral.hpp"
#include "dnni/quadrature.hpp"

namespace dnni::cli {

namespace {

double parse_number(std::string_view s, const std::string& flag) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    throw UsageError(flag + ": '" + std::string(s) + "' is not a finite number");
  return v;
}

struct Flags {
  std::vector<std::string> domains;
  std::vector<std::string> params;
  std::string activation = "tanh";
  std::string sampling = "grid";
  double anchor = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double zeta = 0.0;
  CLI::Option* anchor_opt = nullptr;
  CLI::Option* lower_opt = nullptr;
  CLI::Option* upper_opt = nullptr;
  CLI::Option* zeta_opt = nullptr;
};

void add_threads(CLI::App* app, Command& cmd) {
  app->add_option("--threads", cmd.threads, "Worker threads (0 = all cores)");
}

void add_training(CLI::App* app, Command& cmd, Flags& f) {
  app->add_option("--layers", cmd.layers, "Hidden layer widths, comma separated")->delimiter(',');
  app->add_option("--activation", f.activation, "tanh or sigmoid");
  app->add_option("--epochs", cmd.epochs, "Training epochs");
  app->add_option("--seed", cmd.seed, "Random seed");
  app->add_option("--lr", cmd.lr, "Initial Adam learning rate");
  app->add_option("--points", cmd.points, "Training points per axis, comma separated (default 100 for x, 8 per parameter)")
      ->delimiter(',');
  app->add_option("--sampling", f.sampling, "grid or random");
  app->add_option("--progress", cmd.progress_interval, "Report the loss every N epochs (0 = quiet)");
  add_threads(app, cmd);
}

void add_params(CLI::App* app, Flags& f) {
  app->add_option("--param", f.params, "Parameter value name=value (repeatable)");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

void finish_training(Command& cmd, const Flags& f) {
  try {
    cmd.activation = parse_activation(f.activation);
  } catch (const Error&) {
    throw UsageError("--activation: expected tanh or sigmoid, got '" + f.activation + "'");
  }
  if (f.sampling == "grid") {
    cmd.sampling = Sampling::uniform_grid;
  } else if (f.sampling == "random") {
    cmd.sampling = Sampling::uniform_random;
  } else {
    throw UsageError("--sampling: expected grid or random, got '" + f.sampling + "'");
  }
  require(!cmd.layers.empty(), "--layers: need at least one hidden layer");
  for (int w : cmd.layers) require(w >= 1, "--layers: widths must be positive");
  require(cmd.epochs >= 1, "--epochs: must be at least 1");
  require(cmd.lr > 0.0 && std::isfinite(cmd.lr), "--lr: must be positive");
  require(cmd.progress_interval >= 0, "--progress: must be >= 0");
  for (std::size_t p : cmd.points) require(p >= 1, "--points: counts must be positive");
}

void finish_params(Command& cmd, const Flags& f) {
  for (const std::string& p : f.params) {
    auto [name, value] = parse_param(p);
    cmd.params[name] = value;
  }
}

std::string nodes_csv(const std::vector<std::pair<std::string, const GalerkinSolution*>>& cols) {
  std::string csv = "x";
  for (const auto& c : cols) csv += "," + c.first;
  csv += "\n";
  const std::vector<double>& xs = cols.front().second->nodes;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    csv += format_double(xs[i]);
    for (const auto& c : cols) csv += "," + format_double(c.second->values[i]);
    csv += "\n";
  }
  return csv;
}

void emit(const Command& cmd, std::ostream& out, const std::string& text) {
  if (cmd.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(cmd.out, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + cmd.out + "' for writing");
  file << text;
  if (!file) throw IoError("failed writing '" + cmd.out + "'");
}

TrainConfig training_config(const Command& cmd, std::vector<Axis> axes, std::ostream& err) {
  TrainConfig cfg;
  cfg.axes = std::move(axes);
  if (cmd.points.empty()) {
    cfg.points_per_axis.assign(cfg.axes.size(), 8);
    cfg.points_per_axis[0] = 100;
  } else {
    if (cmd.points.size() != cfg.axes.size())
      throw UsageError("--points: got " + std::to_string(cmd.points.size()) + " counts for " +
                       std::to_string(cfg.axes.size()) + " axes");
    cfg.points_per_axis = cmd.points;
  }
  cfg.hidden = cmd.layers;
  cfg.activation = cmd.activation;
  cfg.epochs = cmd.epochs;
  cfg.seed = cmd.seed;
  cfg.lr0 = cmd.lr;
  cfg.sampling = cmd.sampling;
  cfg.threads = cmd.threads;
  if (cmd.progress_interval > 0) {
    cfg.progress_interval = cmd.progress_interval;
    cfg.progress = [&err](long epoch, double loss, double lr) {
      err << "epoch " << epoch << " loss " << format_double(loss) << " lr " << format_double(lr) << "\n";
    };
  }
  cfg.validate();
  return cfg;
}

int run_train(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Expr f = Expr::parse(cmd.expr);
  const TrainConfig cfg = training_config(cmd, cmd.domains, err);
  err << "# seed " << cmd.seed << "\n";
  TrainReport rep;
  const Antiderivative ad = Antiderivative::fit(f, cfg, cmd.anchor.value_or(cmd.domains[0].domain.lo), cmd.zeta, &rep);
  err << "final loss " << format_double(rep.final_loss) << " (" << rep.epochs_run << " epochs, "
      << format_double(rep.seconds) << " s)\n";
  if (cmd.out.empty()) {
    out << ad.to_json() << "\n";
  } else {
    ad.save(cmd.out);
    err << "wrote " << cmd.out << "\n";
  }
  return 0;
}

int run_integrate(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Antiderivative ad = Antiderivative::load(cmd.model);
  err << "# seed " << ad.summary().seed << "\n";
  const Evaluated v = ad.definite(*cmd.lower, *cmd.upper, cmd.params);
  if (v.out_of_domain) err << "warning: limits or parameters outside the training domain\n";
  emit(cmd, out, format_double(v.value) + "\n");
  return 0;
}

int run_eval_grid(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Antiderivative ad = Antiderivative::load(cmd.model);
  err << "# seed " << ad.summary().seed << "\n";
  const double lo = cmd.lower.value_or(ad.domain()[0].lo);
  const double hi = cmd.upper.value_or(ad.domain()[0].hi);
  if (!(lo < hi)) throw UsageError("--lower must be below --upper");
  std::string csv = "x,prediction\n";
  bool ood = false;
  for (std::size_t i = 0; i < cmd.grid; ++i) {
    const double x = cmd.grid == 1 ? lo
                     : i + 1 == cmd.grid
                         ? hi
                         : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cmd.grid - 1);
    const Evaluated v = ad.value(x, cmd.params);
    ood = ood || v.out_of_domain;
    csv += format_double(x) + "," + format_double(v.value) + "\n";
  }
  if (ood) err << "warning: grid leaves the training domain\n";
  emit(cmd, out, csv);
  return 0;
}

int run_compare(const Command& cmd, std::ostream& out, std::ostream& err) {
  std::optional<Antiderivative> ad;
  if (!cmd.model.empty()) ad = Antiderivative::load(cmd.model);
  const std::string src = !cmd.expr.empty() ? cmd.expr : ad->integrand();
  const Expr f = Expr::parse(src);
  std::vector<std::string> vars{"x"};
  for (const auto& [name, value] : cmd.params) vars.push_back(name);
  for (const std::string& v : f.free_vars())
    if (std::find(vars.begin(), vars.end(), v) == vars.end())
      throw UsageError("integrand uses '" + v + "'; pass --param " + v + "=value");
  const CompiledExpr fn(f, vars);
  std::vector<double> in(vars.size());
  std::size_t k = 1;
  for (const auto& [name, value] : cmd.params) in[k++] = value;
  const Integrand g = [&fn, in](double x) mutable {
    in[0] = x;
    return fn(in);
  };
  const double a = *cmd.lower;
  const double b = *cmd.upper;
  const long n13 = cmd.n + (cmd.n % 2);
  const long n38 = cmd.n + (3 - cmd.n % 3) % 3;
  std::string csv = "method,value,evaluations,seconds\n";
  auto row = [&csv](std::string_view name, const QuadResult& r) {
    csv += std::string(name) + "," + format_double(r.value) + "," + std::to_string(r.evaluations) + "," +
           format_double(r.elapsed) + "\n";
  };
  row("simpson13", simpson13(g, a, b, n13));
  row("simpson38", simpson38(g, a, b, n38));
  const QuadResult ar = adaptive(g, a, b, cmd.tol);
  if (!ar.converged) err << "warning: adaptive quadrature did not reach --tol\n";
  row("adaptive", ar);
  if (ad) {
    err << "# seed " << ad->summary().seed << "\n";
    const auto start = std::chrono::steady_clock::now();
    const Evaluated v = ad->definite(a, b, cmd.params);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (v.out_of_domain) err << "warning: limits or parameters outside the training domain\n";
    csv += "dnni," + format_double(v.value) + ",2," + format_double(secs) + "\n";
  }
  emit(cmd, out, csv);
  return 0;
}

int run_galerkin(const Command& cmd, std::ostream& out, std::ostream& err) {
  GalerkinProblem p;
  p.alpha = cmd.alpha;
  p.beta = cmd.beta;
  p.gamma = cmd.gamma;
  p.source = Expr::parse(cmd.expr);
  p.x0 = cmd.x0;
  p.xn = cmd.xn;
  p.u0 = cmd.u0;
  p.c = cmd.c;
  p.n = cmd.nodes;
  p.validate();

  std::vector<std::pair<std::string, const GalerkinSolution*>> cols;
  GalerkinSolution quad, dnni;
  if (cmd.strategy != "dnni") {
    quad = solve(p, LoadStrategy::quadrature);
    cols.emplace_back("quadrature", &quad);
  }
  if (cmd.strategy != "quadrature") {
    auto primitive = [&](const std::string& path, const std::string& src, const char* label) {
      if (!path.empty()) return Antiderivative::load(path);
      err << "# seed " << cmd.seed << "\ntraining " << label << " on " << src << "\n";
      const TrainConfig cfg = training_config(cmd, {{"x", {p.x0, p.xn}}}, err);
      return Antiderivative::fit(Expr::parse(src), cfg, p.x0);
    };
    const NetworkPrimitive n1(primitive(cmd.n1, p.source.to_string(), "N1"));
    const NetworkPrimitive n2(primitive(cmd.n2, "x*(" + p.source.to_string() + ")", "N2"));
    dnni = solve(p, LoadStrategy::dnni, &n1, &n2);
    cols.emplace_back("dnni", &dnni);
  }
  emit(cmd, out, nodes_csv(cols));
  return 0;
}

std::string params_text(const CaseSpec& spec, const std::vector<double>& params) {
  std::string s;
  for (std::size_t i = 0; i < params.size(); ++i)
    s += (i ? " " : "") + spec.row_params[i] + "=" + format_double(params[i]);
  return s;
}

int run_case_cmd(const Command& cmd, std::ostream& out, std::ostream& err) {
  const CaseSpec& spec = find_case(cmd.case_id, cmd.variant);
  RunOptions o;
  o.variant = cmd.variant;
  if (!cmd.points.empty()) {
    if (cmd.points.size() == 1) {
      o.points = cmd.points[0];
    } else {
      o.points_per_axis = cmd.points;
    }
  }
  if (cmd.layers_set) o.hidden = cmd.layers;
  if (cmd.epochs_set) o.epochs = cmd.epochs;
  if (cmd.seed_set) o.seed = cmd.seed;
  if (cmd.activation_set) o.activation = cmd.activation;
  if (cmd.sampling_set) o.sampling = cmd.sampling;
  if (cmd.lr_set) o.lr0 = cmd.lr;
  if (cmd.nodes_set) o.nodes = cmd.nodes;
  o.threads = cmd.threads;
  o.grid_points = cmd.grid;
  o.csv_path = cmd.out;
  o.cache_dir = cmd.cache;
  o.log = [&err](const std::string& msg) { err << msg << "\n"; };
  if (cmd.progress_interval > 0) {
    o.progress_interval = cmd.progress_interval;
    o.progress = [&err](long epoch, double loss, double lr) {
      err << "epoch " << epoch << " loss " << format_double(loss) << " lr " << format_double(lr) << "\n";
    };
  }
  const TrainConfig cfg = effective_config(spec, o);
  err << "# seed " << cfg.seed << "\n";

  const CaseResult r = run_case(cmd.case_id, o);
  std::ostringstream s;
  s << "case " << r.id << (r.variant.empty() ? "" : " " + r.variant) << ": " << spec.title << "\n";
  s << "seed " << r.seed << "\n";
  for (std::size_t i = 0; i < r.training.size(); ++i)
    s << "final_loss " << format_double(r.training[i].final_loss) << "\n";
  if (r.quadrature_error) {
    s << "quadrature l2 " << format_double(r.quadrature_error->l2) << " max_abs "
      << format_double(r.quadrature_error->max_abs) << "\n";
    s << "dnni l2 " << format_double(r.error.l2) << " max_abs " << format_double(r.error.max_abs) << "\n";
  } else {
    s << "l2 " << format_double(r.error.l2) << "\n";
    s << "max_abs " << format_double(r.error.max_abs) << "\n";
    s << "max_rel " << format_double(r.error.max_rel) << "\n";
  }
  for (const RowResult& row : r.rows) {
    s << "row " << params_text(spec, row.params) << (row.params.empty() ? "" : " ") << "prediction "
      << format_double(row.prediction) << " oracle " << format_double(row.oracle) << " published "
      << format_double(row.published) << " rel_error " << format_double(row.rel_error_vs_oracle);
    if (row.reported_rel_error) s << " reported " << format_double(*row.reported_rel_error);
    if (row.out_of_domain) s << " (outside training domain)";
    s << "\n";
  }
  s << "seconds " << format_double(r.seconds) << "\n";
  out << s.str();
  return 0;
}

int run_case_list(std::ostream& out) {
  for (const CaseSpec& base : registry())
    for (const std::string& v : case_variants(base.id)) {
      const CaseSpec& s = find_case(base.id, v);
      out << s.id << (v.empty() ? "" : " --variant " + v) << "\t" << s.title << "\n";
    }
  return 0;
}

int run_breakeven(const Command& cmd, std::ostream& out) {
  const Breakeven b = breakeven({cmd.T, cmd.t, cmd.eps, cmd.m});
  emit(cmd, out, "n_real " + format_double(b.n_real) + "\nn_int " + std::to_string(b.n_int) + "\n");
  return 0;
}

}  // namespace

Axis parse_domain(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--domain: expected name=lo:hi, got '" + text + "'");
  const std::string name = text.substr(0, eq);
  const std::string range = text.substr(eq + 1);
  const auto colon = range.find(':', 1);
  if (colon == std::string::npos) throw UsageError("--domain: expected name=lo:hi, got '" + text + "'");
  const double lo = parse_number(std::string_view(range).substr(0, colon), "--domain " + name);
  const double hi = parse_number(std::string_view(range).substr(colon + 1), "--domain " + name);
  if (!(lo < hi))
    throw UsageError("--domain " + name + ": lower bound " + format_double(lo) + " is not below upper bound " +
                     format_double(hi));
  return {name, {lo, hi}};
}

std::pair<std::string, double> parse_param(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--param: expected name=value, got '" + text + "'");
  return {text.substr(0, eq), parse_number(std::string_view(text).substr(eq + 1), "--param " + text.substr(0, eq))};
}

Command parse_flags(const std::vector<std::string>& args) {
  Command cmd;
  Flags f;
  CLI::App app{"Neural antiderivatives: train a network whose x-derivative matches an integrand.", "dnni"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  CLI::App* train = app.add_subcommand("train", "Train an antiderivative model");
  train->add_option("--expr", cmd.expr, "Integrand, e.g. \"x^2*exp(-a*x)\"")->required();
  train->add_option("--domain", f.domains, "Axis name=lo:hi; x first, then one per parameter (repeatable)")
      ->required();
  f.anchor_opt = train->add_option("--anchor", f.anchor, "x where the antiderivative is zero (default: x lower bound)");
  f.zeta_opt = train->add_option("--zeta", f.zeta, "Truncation point recorded for infinite upper limits");
  train->add_option("--out", cmd.out, "Model file (default: JSON on stdout)");
  add_training(train, cmd, f);

  CLI::App* integrate = app.add_subcommand("integrate", "Definite integral from a trained model");
  integrate->add_option("--model", cmd.model, "Model file")->required();
  f.lower_opt = integrate->add_option("--lower", f.lower, "Lower limit")->required();
  f.upper_opt = integrate->add_option("--upper", f.upper, "Upper limit")->required();
  integrate->add_option("--out", cmd.out, "Write the number here instead of stdout");
  add_params(integrate, f);

  CLI::App* grid = app.add_subcommand("eval-grid", "Antiderivative on a uniform grid as CSV");
  grid->add_option("--model", cmd.model, "Model file")->required();
  CLI::Option* glo = grid->add_option("--lower", f.lower, "Grid start (default: training domain)");
  CLI::Option* ghi = grid->add_option("--upper", f.upper, "Grid end (default: training domain)");
  grid->add_option("--grid", cmd.grid, "Number of grid points");
  grid->add_option("--out", cmd.out, "CSV path (default: stdout)");
  add_params(grid, f);

  CLI::App* compare = app.add_subcommand("compare", "Simpson 1/3, Simpson 3/8, adaptive and optionally DNNI");
  compare->add_option("--expr", cmd.expr, "Integrand (default: the model's)");
  compare->add_option("--model", cmd.model, "Trained model to include");
  CLI::Option* clo = compare->add_option("--lower", f.lower, "Lower limit")->required();
  CLI::Option* chi = compare->add_option("--upper", f.upper, "Upper limit")->required();
  compare->add_option("--n", cmd.n, "Subintervals for the composite rules");
  compare->add_option("--tol", cmd.tol, "Adaptive tolerance");
  compare->add_option("--out", cmd.out, "CSV path (default: stdout)");
  add_params(compare, f);

  CLI::App* gal = app.add_subcommand("galerkin", "alpha*u'' + beta*u' + gamma*u = f with linear elements");
  gal->add_option("--source", cmd.expr, "Source term f(x)")->required();
  gal->add_option("--alpha", cmd.alpha, "Coefficient of u''");
  gal->add_option("--beta", cmd.beta, "Coefficient of u'");
  gal->add_option("--gamma", cmd.gamma, "Coefficient of u");
  gal->add_option("--x0", cmd.x0, "Left end (Dirichlet)");
  gal->add_option("--xn", cmd.xn, "Right end (Neumann)");
  gal->add_option("--u0", cmd.u0, "u(x0)");
  gal->add_option("--c", cmd.c, "u'(xn)");
  gal->add_option("--nodes", cmd.nodes, "Node count");
  gal->add_option("--strategy", cmd.strategy, "quadrature, dnni or both");
  gal->add_option("--n1", cmd.n1, "Model of the antiderivative of f (trained when omitted)");
  gal->add_option("--n2", cmd.n2, "Model of the antiderivative of x*f (trained when omitted)");
  gal->add_option("--out", cmd.out, "CSV path (default: stdout)");
  add_training(gal, cmd, f);

  CLI::App* cases = app.add_subcommand("case", "Reproduce a numbered case");
  cases->require_subcommand(1);
  CLI::App* crun = cases->add_subcommand("run", "Train and evaluate one case");
  crun->add_option("id", cmd.case_id, "Case number 1-15")->required();
  crun->add_option("--variant", cmd.variant, "Variant name (see 'case list')");
  auto* c_layers = crun->add_option("--layers", cmd.layers, "Hidden widths (default: the case's)")->delimiter(',');
  auto* c_act = crun->add_option("--activation", f.activation, "tanh or sigmoid (default: the case's)");
  auto* c_epochs = crun->add_option("--epochs", cmd.epochs, "Training epochs (default: the case's)");
  auto* c_seed = crun->add_option("--seed", cmd.seed, "Random seed");
  auto* c_lr = crun->add_option("--lr", cmd.lr, "Initial learning rate (default: the case's)");
  crun->add_option("--points", cmd.points, "Training points, x only or one per axis (default: the case's)")
      ->delimiter(',');
  auto* c_sampling = crun->add_option("--sampling", f.sampling, "grid or random (default: the case's)");
  auto* c_nodes = crun->add_option("--nodes", cmd.nodes, "Galerkin node count (default: the case's)");
  crun->add_option("--grid", cmd.grid, "Evaluation grid size");
  crun->add_option("--cache", cmd.cache, "Directory for reusing trained models (default: none)");
  crun->add_option("--out", cmd.out, "CSV path (default: none)");
  crun->add_option("--progress", cmd.progress_interval, "Report the loss every N epochs (0 = quiet)");
  add_threads(crun, cmd);
  CLI::App* clist = cases->add_subcommand("list", "List cases and variants");

  CLI::App* be = app.add_subcommand("breakeven", "Node count beyond which DNNI assembly is cheaper");
  be->add_option("--T", cmd.T, "Seconds to train one antiderivative")->required();
  be->add_option("--t", cmd.t, "Seconds per quadrature integral")->required();
  be->add_option("--eps", cmd.eps, "Seconds per limit substitution")->required();
  be->add_option("--m", cmd.m, "Number of antiderivatives");
  be->add_option("--out", cmd.out, "Write here instead of stdout");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    cmd.sub = Sub::help;
    CLI::App* shown = &app;
    for (CLI::App* s = &app; !s->get_subcommands().empty();) {
      s = s->get_subcommands().front();
      shown = s;
    }
    cmd.help_text = shown == &app ? app.help("", CLI::AppFormatMode::All) + "\n" + crun->help() : shown->help();
    return cmd;
  } catch (const CLI::CallForAllHelp&) {
    cmd.sub = Sub::help;
    cmd.help_text = app.help("", CLI::AppFormatMode::All) + "\n" + crun->help();
    return cmd;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  auto check_expr = [&](const std::string& flag) {
    try {
      return Expr::parse(cmd.expr);
    } catch (const SyntaxError& e) {
      throw UsageError(flag + ": " + e.what());
    }
  };

  if (train->parsed()) {
    cmd.sub = Sub::train;
    finish_training(cmd, f);
    const Expr e = check_expr("--expr");
    for (const std::string& d : f.domains) {
      Axis a = parse_domain(d);
      for (const Axis& prev : cmd.domains)
        require(prev.name != a.name, "--domain: '" + a.name + "' given twice");
      cmd.domains.push_back(a);
    }
    auto x = std::find_if(cmd.domains.begin(), cmd.domains.end(), [](const Axis& a) { return a.name == "x"; });
    require(x != cmd.domains.end(), "--domain: missing x=lo:hi");
    std::rotate(cmd.domains.begin(), x, x + 1);
    for (const std::string& v : e.free_vars())
      require(std::any_of(cmd.domains.begin(), cmd.domains.end(), [&](const Axis& a) { return a.name == v; }),
              "--domain: integrand uses '" + v + "' which has no domain");
    if (f.anchor_opt->count()) cmd.anchor = f.anchor;
    if (f.zeta_opt->count()) cmd.zeta = f.zeta;
    if (!cmd.points.empty())
      require(cmd.points.size() == cmd.domains.size(), "--points: need one count per --domain");
  } else if (integrate->parsed()) {
    cmd.sub = Sub::integrate;
    cmd.lower = f.lower;
    cmd.upper = f.upper;
    finish_params(cmd, f);
  } else if (grid->parsed()) {
    cmd.sub = Sub::eval_grid;
    if (glo->count()) cmd.lower = f.lower;
    if (ghi->count()) cmd.upper = f.upper;
    require(cmd.grid >= 2, "--grid: need at least 2 points");
    finish_params(cmd, f);
  } else if (compare->parsed()) {
    cmd.sub = Sub::compare;
    require(!cmd.expr.empty() || !cmd.model.empty(), "compare: need --expr or --model");
    if (!cmd.expr.empty()) check_expr("--expr");
    if (clo->count()) cmd.lower = f.lower;
    if (chi->count()) cmd.upper = f.upper;
    require(*cmd.lower < *cmd.upper, "--lower must be below --upper");
    require(cmd.n >= 3, "--n: need at least 3 subintervals");
    require(cmd.tol > 0.0, "--tol: must be positive");
    finish_params(cmd, f);
  } else if (gal->parsed()) {
    cmd.sub = Sub::galerkin;
    finish_training(cmd, f);
    check_expr("--source");
    require(cmd.strategy == "quadrature" || cmd.strategy == "dnni" || cmd.strategy == "both",
            "--strategy: expected quadrature, dnni or both, got '" + cmd.strategy + "'");
    require(cmd.nodes >= 3, "--nodes: need at least 3");
    require(cmd.x0 < cmd.xn, "--x0 must be below --xn");
    if (!cmd.points.empty()) require(cmd.points.size() == 1, "--points: galerkin trains on x only");
  } else if (crun->parsed()) {
    cmd.sub = Sub::case_run;
    finish_training(cmd, f);
    require(cmd.case_id >= 1 && cmd.case_id <= 15, "id: case number must be 1-15");
    try {
      find_case(cmd.case_id, cmd.variant);
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--variant: ") + e.what());
    }
    cmd.layers_set = c_layers->count() > 0;
    cmd.activation_set = c_act->count() > 0;
    cmd.epochs_set = c_epochs->count() > 0;
    cmd.seed_set = c_seed->count() > 0;
    cmd.lr_set = c_lr->count() > 0;
    cmd.sampling_set = c_sampling->count() > 0;
    cmd.nodes_set = c_nodes->count() > 0;
    if (cmd.nodes_set) require(cmd.nodes >= 3, "--nodes: need at least 3");
    require(cmd.grid >= 2, "--grid: need at least 2 points");
  } else if (clist->parsed()) {
    cmd.sub = Sub::case_list;
  } else if (be->parsed()) {
    cmd.sub = Sub::breakeven;
    require(cmd.T >= 0 && cmd.t >= 0 && cmd.eps >= 0, "breakeven: --T, --t and --eps must be >= 0");
    require(cmd.m >= 1, "--m: must be at least 1");
  }
  return cmd;
}

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  switch (cmd.sub) {
    case Sub::help: out << cmd.help_text; return 0;
    case Sub::train: return run_train(cmd, out, err);
    case Sub::integrate: return run_integrate(cmd, out, err);
    case Sub::eval_grid: return run_eval_grid(cmd, out, err);
    case Sub::compare: return run_compare(cmd, out, err);
    case Sub::galerkin: return run_galerkin(cmd, out, err);
    case Sub::case_run: return run_case_cmd(cmd, out, err);
    case Sub::case_list: return run_case_list(out);
    case Sub::breakeven: return run_breakeven(cmd, out);
  }
  return 1;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const Command cmd = parse_flags(args);
    return run(cmd, std::cout, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun 'dnni --help' for the full flag list\n";
    return 1;
  } catch (const SyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace dnni::cli
