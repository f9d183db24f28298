#include "dnni/integral.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dnni/errors.hpp"
#include "dnni/format.hpp"

namespace dnni {

namespace {

constexpr int kSchemaVersion = 1;

using nlohmann::json;

template <typename T>
T field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw SchemaError(std::string("model file is missing '") + name + "'");
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model field '") + name + "' has the wrong type: " + e.what());
  }
}

}  // namespace

Antiderivative::Antiderivative(Network net, std::vector<std::string> variables, double anchor,
                               std::vector<Interval> domain, std::string integrand, std::optional<double> zeta,
                               TrainingSummary summary)
    : net_(std::move(net)),
      variables_(std::move(variables)),
      anchor_(anchor),
      domain_(std::move(domain)),
      integrand_(std::move(integrand)),
      zeta_(zeta),
      summary_(summary) {
  if (variables_.empty() || variables_.size() != net_.input_width())
    throw ShapeError("variable count does not match the network input width");
  if (domain_.size() != variables_.size()) throw ShapeError("need one domain interval per variable");
  if (!domain_[0].contains(anchor_))
    throw ConfigError("anchor " + format_double(anchor_) + " lies outside the x domain");
}

Antiderivative Antiderivative::fit(const Expr& f, const TrainConfig& cfg, double anchor, std::optional<double> zeta,
                                   TrainReport* report) {
  TrainResult r = train(f, cfg);
  std::vector<Interval> domain;
  for (const Axis& a : cfg.axes) domain.push_back(a.domain);
  TrainingSummary summary{cfg.seed, r.report.epochs_run, r.report.final_loss};
  if (report) *report = r.report;
  return Antiderivative(std::move(r.net), cfg.variables(), anchor, std::move(domain), f.to_string(), zeta, summary);
}

std::vector<double> Antiderivative::inputs_for(double x, const Bindings& params, bool& out_of_domain) const {
  std::vector<double> in(variables_.size());
  in[0] = x;
  out_of_domain = !domain_[0].contains(x);
  for (std::size_t i = 1; i < variables_.size(); ++i) {
    auto it = params.find(variables_[i]);
    if (it == params.end()) throw DomainError("missing binding for parameter '" + variables_[i] + "'");
    in[i] = it->second;
    if (!domain_[i].contains(in[i])) out_of_domain = true;
  }
  return in;
}

double Antiderivative::network_value(std::span<const double> inputs) const { return forward(net_, inputs).value; }

Evaluated Antiderivative::value(double x, const Bindings& params) const {
  bool ood = false;
  std::vector<double> in = inputs_for(x, params, ood);
  const double at_x = network_value(in);
  in[0] = anchor_;
  return {at_x - network_value(in), ood};
}

Evaluated Antiderivative::definite(double lower, double upper, const Bindings& params) const {
  bool ood_upper = false;
  std::vector<double> in = inputs_for(upper, params, ood_upper);
  const double hi = network_value(in);
  in[0] = lower;
  const double lo = network_value(in);
  return {hi - lo, ood_upper || !domain_[0].contains(lower)};
}

ClosedForm Antiderivative::closed_form(double lower, double upper) const {
  return ClosedForm(std::make_shared<const Antiderivative>(*this), lower, upper);
}

Evaluated ClosedForm::operator()(std::span<const double> params) const {
  const auto& vars = ad_->variables();
  if (params.size() + 1 != vars.size())
    throw ShapeError("closed form expects " + std::to_string(vars.size() - 1) + " parameters");
  Bindings b;
  for (std::size_t i = 0; i < params.size(); ++i) b[vars[i + 1]] = params[i];
  return ad_->definite(lower_, upper_, b);
}

std::string Antiderivative::to_json() const {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["activation"] = std::string(activation_name(net_.activation()));
  doc["layer_sizes"] = net_.layer_sizes();
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net_.num_layers(); ++l) {
    const Eigen::MatrixXd& w = net_.weights(l);
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    const Eigen::VectorXd& b = net_.biases(l);
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  doc["variables"] = variables_;
  doc["anchor"] = anchor_;
  json domain = json::array();
  for (const Interval& d : domain_) domain.push_back({d.lo, d.hi});
  doc["domain"] = std::move(domain);
  doc["integrand"] = integrand_;
  doc["zeta"] = zeta_ ? json(*zeta_) : json(nullptr);
  doc["metadata"] = {{"seed", summary_.seed}, {"epochs", summary_.epochs}, {"final_loss", summary_.final_loss}};
  return doc.dump(1) + "\n";
}

Antiderivative Antiderivative::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("model file must be a JSON object");
  const int version = field<int>(doc, "schema_version");
  if (version != kSchemaVersion)
    throw SchemaError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");

  Activation act;
  try {
    act = parse_activation(field<std::string>(doc, "activation"));
  } catch (const ConfigError& e) {
    throw SchemaError(e.what());
  }
  const auto sizes = field<std::vector<int>>(doc, "layer_sizes");
  const auto raw_w = field<std::vector<std::vector<std::vector<double>>>>(doc, "weights");
  const auto raw_b = field<std::vector<std::vector<double>>>(doc, "biases");
  if (sizes.size() < 2 || raw_w.size() != sizes.size() - 1 || raw_b.size() != sizes.size() - 1)
    throw SchemaError("layer count in weights/biases does not match layer_sizes");

  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto& rows = raw_w[l];
    if (static_cast<int>(rows.size()) != sizes[l + 1])
      throw SchemaError("weight matrix " + std::to_string(l) + " has " + std::to_string(rows.size()) +
                        " rows, expected " + std::to_string(sizes[l + 1]));
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != sizes[l])
        throw SchemaError("weight matrix " + std::to_string(l) + " row " + std::to_string(r) +
                          " has the wrong length");
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    if (static_cast<int>(raw_b[l].size()) != sizes[l + 1])
      throw SchemaError("bias vector " + std::to_string(l) + " has the wrong length");
    weights.push_back(std::move(w));
    biases.push_back(Eigen::Map<const Eigen::VectorXd>(raw_b[l].data(), static_cast<Eigen::Index>(raw_b[l].size())));
  }

  std::vector<Interval> domain;
  for (const auto& d : field<std::vector<std::vector<double>>>(doc, "domain")) {
    if (d.size() != 2) throw SchemaError("each domain entry must be [lo, hi]");
    domain.push_back({d[0], d[1]});
  }
  std::optional<double> zeta;
  if (doc.contains("zeta") && !doc["zeta"].is_null()) zeta = field<double>(doc, "zeta");
  TrainingSummary summary;
  if (doc.contains("metadata")) {
    const json& meta = doc["metadata"];
    summary.seed = meta.value("seed", std::uint64_t{0});
    summary.epochs = meta.value("epochs", 0L);
    summary.final_loss = meta.value("final_loss", 0.0);
  }
  try {
    return Antiderivative(Network(sizes, act, std::move(weights), std::move(biases)),
                          field<std::vector<std::string>>(doc, "variables"), field<double>(doc, "anchor"),
                          std::move(domain), field<std::string>(doc, "integrand"), zeta, summary);
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("inconsistent model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("inconsistent model file: ") + e.what());
  }
}

void Antiderivative::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << to_json();
  if (!out) throw IoError("failed writing '" + path + "'");
}

Antiderivative Antiderivative::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace dnni
