#include "mismed/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mismed/errors.hpp"

namespace mismed {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) {
    throw Error(ErrorKind::MalformedInput,
                "unterminated quote on line " + std::to_string(line_no));
  }
  out.push_back(trim(field));
  return out;
}

double parse_number(const std::string& cell, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw Error(ErrorKind::MalformedInput, "line " + std::to_string(line_no) + ", column '" +
                                               column + "': '" + cell + "' is not a finite number");
  }
  return v;
}

Json named(const Eigen::VectorXd& v, const std::vector<std::string>& names) {
  Json out = Json::object();
  for (Eigen::Index k = 0; k < v.size(); ++k) out[names[static_cast<std::size_t>(k)]] = v[k];
  return out;
}

Json vec(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Eigen::VectorXd to_vec(const Json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) v[static_cast<Eigen::Index>(k)] = a[k].get<double>();
  return v;
}

std::vector<std::string> mediator_names(const MediationDataset& d) {
  std::vector<std::string> n{"intercept", d.labels().x};
  n.insert(n.end(), d.labels().c.begin(), d.labels().c.end());
  return n;
}

std::vector<std::string> observation_names(const MediationDataset& d) {
  std::vector<std::string> n{"intercept"};
  n.insert(n.end(), d.labels().z.begin(), d.labels().z.end());
  return n;
}

Json convergence_block(const FitReport& r) {
  Json c;
  c["converged"] = r.converged;
  c["iterations"] = r.iterations;
  c["em_updates"] = r.em_updates;
  if (!r.loglik_trace.empty()) {
    c["loglik_initial"] = r.loglik_trace.front();
    c["loglik_final"] = r.loglik_trace.back();
  }
  c["trace_length"] = r.loglik_trace.size();
  c["loglik_trace"] = r.loglik_trace;
  return c;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      table.comments.push_back(t);
      continue;
    }
    auto fields = split_fields(line, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::MalformedInput,
                  "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw Error(ErrorKind::MalformedInput, "CSV has no header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

MediationDataset dataset_from_csv(const CsvTable& table, const ColumnMap& columns) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < table.header.size(); ++k) index[table.header[k]] = k;
  auto col = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw Error(ErrorKind::MissingColumn, "column '" + name + "' not found in CSV header");
    }
    return it->second;
  };
  const std::size_t ix = col(columns.x);
  const std::size_t im = col(columns.m_star);
  const std::size_t iy = col(columns.y);
  std::vector<std::size_t> ic, iz;
  for (const auto& c : columns.c) ic.push_back(col(c));
  for (const auto& z : columns.z) iz.push_back(col(z));
  if (table.rows.empty()) throw Error(ErrorKind::MalformedInput, "CSV has no data rows");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::VectorXd x(n), y(n);
  Eigen::MatrixXd c(n, static_cast<Eigen::Index>(ic.size()));
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(iz.size()));
  std::vector<double> raw_m(static_cast<std::size_t>(n));
  std::set<double> codes;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::size_t ln = table.line_numbers[static_cast<std::size_t>(i)];
    x[i] = parse_number(row[ix], ln, columns.x);
    y[i] = parse_number(row[iy], ln, columns.y);
    for (std::size_t k = 0; k < ic.size(); ++k) {
      c(i, static_cast<Eigen::Index>(k)) = parse_number(row[ic[k]], ln, columns.c[k]);
    }
    for (std::size_t k = 0; k < iz.size(); ++k) {
      z(i, static_cast<Eigen::Index>(k)) = parse_number(row[iz[k]], ln, columns.z[k]);
    }
    const double m = parse_number(row[im], ln, columns.m_star);
    if (m != 0.0 && m != 1.0 && m != 2.0) {
      throw Error(ErrorKind::MediatorCode, "line " + std::to_string(ln) + ": mediator code '" +
                                               row[im] + "' is not one of 0, 1, 2");
    }
    raw_m[static_cast<std::size_t>(i)] = m;
    codes.insert(m);
  }
  if (codes.count(0.0) && codes.count(2.0)) {
    throw Error(ErrorKind::MediatorCode,
                "mediator column mixes codes 0 and 2; use either {1,2} or {0,1}");
  }
  const bool zero_one = codes.count(0.0) > 0;
  std::vector<int> m_star(raw_m.size());
  for (std::size_t i = 0; i < raw_m.size(); ++i) {
    m_star[i] = zero_one ? (raw_m[i] == 1.0 ? 1 : 2) : static_cast<int>(raw_m[i]);
  }
  DatasetLabels labels;
  labels.x = columns.x;
  labels.c = columns.c;
  labels.z = columns.z;
  labels.mediator_coding = zero_one ? "{0,1}->{2,1}" : "{1,2}";
  return MediationDataset(std::move(x), std::move(c), std::move(z), std::move(m_star),
                          std::move(y), std::move(labels));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into place at '" + path.string() + "'");
  }
}

std::string dataset_csv(const SimulatedData& sim, bool reveal_truth, const Json& provenance) {
  const MediationDataset& d = sim.data;
  std::ostringstream out;
  out << "# " << provenance.dump() << '\n';
  out << d.labels().x;
  for (const auto& c : d.labels().c) out << ',' << c;
  // Z columns already present among C are not repeated.
  std::vector<Eigen::Index> z_only;
  for (Eigen::Index k = 0; k < d.q(); ++k) {
    const auto& name = d.labels().z[static_cast<std::size_t>(k)];
    if (std::find(d.labels().c.begin(), d.labels().c.end(), name) == d.labels().c.end()) {
      z_only.push_back(k);
      out << ',' << name;
    }
  }
  out << ",mstar,y";
  if (reveal_truth) out << ",true_m";
  out << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    out << format_double(d.x()[i]);
    for (Eigen::Index k = 0; k < d.p(); ++k) out << ',' << format_double(d.c()(i, k));
    for (auto k : z_only) out << ',' << format_double(d.z()(i, k));
    out << ',' << d.m_star()[static_cast<std::size_t>(i)] << ',' << format_double(d.y()[i]);
    if (reveal_truth) out << ',' << sim.true_m[static_cast<std::size_t>(i)];
    out << '\n';
  }
  return out.str();
}

Json parameters_to_json(const ParameterSet& params, const MediationDataset& data) {
  Json est;
  est["beta"] = named(params.beta, mediator_names(data));
  est["gamma_sensitivity"] = named(params.gamma.row(0).transpose(), observation_names(data));
  if (params.perfect_specificity) {
    est["gamma_false_positive"] = nullptr;
  } else {
    est["gamma_false_positive"] = named(params.gamma.row(1).transpose(), observation_names(data));
  }
  if (params.has_outcome()) {
    est["theta"] = named(params.theta, outcome_column_names(data, params.interaction));
  }
  if (params.sigma2) est["sigma2"] = *params.sigma2;
  return est;
}

Json fit_report_to_json(const FitReport& report, const MediationDataset& data, const Json& config) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "fit_report";
  j["method"] = report.method;
  j["family"] = report.family ? std::string(to_string(*report.family)) : "none";
  j["interaction"] = report.params.interaction;
  j["perfect_specificity"] = report.params.perfect_specificity;
  j["n"] = data.n();
  j["mediator_coding"] = data.labels().mediator_coding;
  j["columns"] = {{"x", data.labels().x}, {"c", data.labels().c}, {"z", data.labels().z}};
  j["estimates"] = parameters_to_json(report.params, data);
  Json vectors;
  vectors["beta"] = vec(report.params.beta);
  vectors["theta"] = vec(report.params.theta);
  j["vectors"] = vectors;
  if (report.average_sensitivity) {
    j["sensitivity_specificity"] = {{"average_sensitivity", *report.average_sensitivity},
                                    {"average_specificity", *report.average_specificity}};
  }
  j["label_swap_applied"] = report.label_swap_applied;
  j["convergence"] = convergence_block(report);
  j["diagnostics"] = report.diagnostics;
  j["config"] = config;
  return j;
}

Json naive_fit_to_json(const NaiveFit& fit, Family family, const MediationDataset& data,
                       const Json& config) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "fit_report";
  j["method"] = "naive";
  j["family"] = std::string(to_string(family));
  j["interaction"] = fit.interaction;
  j["perfect_specificity"] = false;
  j["n"] = data.n();
  j["mediator_coding"] = data.labels().mediator_coding;
  j["columns"] = {{"x", data.labels().x}, {"c", data.labels().c}, {"z", data.labels().z}};
  Json est;
  est["beta_star"] = named(fit.beta_star, mediator_names(data));
  est["theta_star"] = named(fit.theta_star, outcome_column_names(data, fit.interaction));
  if (fit.sigma2) est["sigma2"] = *fit.sigma2;
  j["estimates"] = est;
  j["vectors"] = {{"beta", vec(fit.beta_star)}, {"theta", vec(fit.theta_star)}};
  j["config"] = config;
  return j;
}

SavedFit saved_fit_from_json(const Json& report) {
  try {
    if (report.at("kind").get<std::string>() != "fit_report") {
      throw Error(ErrorKind::Configuration, "input is not a fit report");
    }
    SavedFit out;
    out.family = parse_family(report.at("family").get<std::string>());
    out.params.interaction = report.at("interaction").get<bool>();
    out.params.beta = to_vec(report.at("vectors").at("beta"));
    out.params.theta = to_vec(report.at("vectors").at("theta"));
    out.c_names = report.at("columns").at("c").get<std::vector<std::string>>();
    if (out.params.beta.size() != 2 + static_cast<Eigen::Index>(out.c_names.size()) ||
        out.params.theta.size() !=
            3 + static_cast<Eigen::Index>(out.c_names.size()) + (out.params.interaction ? 1 : 0)) {
      throw Error(ErrorKind::Configuration, "fit report vectors do not match its columns");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("invalid fit report: ") + e.what());
  }
}

Json effects_to_json(const EffectEstimates& e, const EffectQuery& q, const SavedFit& fit,
                     const Json& config) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "effects";
  j["scale"] = std::string(to_string(e.scale));
  Json c = Json::object();
  for (std::size_t k = 0; k < fit.c_names.size(); ++k) {
    c[fit.c_names[k]] = q.c[static_cast<Eigen::Index>(k)];
  }
  j["query"] = {{"x", q.x}, {"xref", q.x_ref}, {"c", c}, {"m", q.m}};
  j["effects"] = {{"cde", e.cde}, {"nde", e.nde}, {"nie", e.nie}};
  j["family"] = std::string(to_string(fit.family));
  j["config"] = config;
  return j;
}

namespace {

Json study_config_json(const StudySummary& s) {
  Json methods = Json::array();
  for (auto m : s.methods) methods.push_back(std::string(to_string(m)));
  return {{"setting", s.spec.setting},
          {"level", std::string(to_string(s.spec.level))},
          {"n", s.spec.n},
          {"replicates", s.spec.replicates},
          {"seed", s.spec.seed},
          {"methods", methods},
          {"tol", s.em_config.loglik_tolerance},
          {"max_iter", s.em_config.max_iterations},
          {"accelerate", s.em_config.acceleration == Acceleration::Squarem},
          {"perfect_specificity", s.em_config.perfect_specificity}};
}

constexpr const char* kSummaryHeader =
    "schema_version,setting,level,n,replicates,seed,method,parameter,truth,mean_estimate,bias,"
    "rmse,convergence_rate,successful";

}  // namespace

std::string summary_csv(const StudySummary& s) {
  std::ostringstream out;
  out << "# " << study_config_json(s).dump() << '\n';
  out << kSummaryHeader << '\n';
  for (const auto& c : s.cells) {
    out << kSchemaVersion << ',' << s.spec.setting << ',' << to_string(s.spec.level) << ','
        << s.spec.n << ',' << s.spec.replicates << ',' << s.spec.seed << ',' << to_string(c.method)
        << ',' << c.parameter << ',' << format_double(c.truth) << ','
        << format_double(c.mean_estimate) << ',' << format_double(c.bias) << ','
        << format_double(c.rmse) << ',' << format_double(c.convergence_rate) << ','
        << c.successful << '\n';
  }
  return out.str();
}

Json summary_json(const StudySummary& s) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "study_summary";
  j["config"] = study_config_json(s);
  j["realized"] = {{"p_m", s.mean_p_m},
                   {"p_m_star", s.mean_p_m_star},
                   {"average_sensitivity", s.mean_sensitivity},
                   {"average_specificity", s.mean_specificity}};
  Json results = Json::array();
  for (auto m : s.methods) {
    Json params = Json::array();
    for (const auto& c : s.cells) {
      if (c.method != m) continue;
      auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
      params.push_back({{"name", c.parameter},
                        {"truth", c.truth},
                        {"mean_estimate", num(c.mean_estimate)},
                        {"bias", num(c.bias)},
                        {"rmse", num(c.rmse)},
                        {"convergence_rate", c.convergence_rate},
                        {"successful", c.successful}});
    }
    results.push_back({{"method", std::string(to_string(m))}, {"parameters", params}});
  }
  j["results"] = results;
  return j;
}

StudySummary parse_summary_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  if (t.header.size() != 14) throw Error(ErrorKind::MalformedInput, "unexpected summary header");
  StudySummary s;
  auto num = [](const std::string& v) {
    if (v == "nan") return std::nan("");
    return std::stod(v);
  };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    s.spec.setting = std::stoi(row[1]);
    s.spec.level = parse_level(row[2]);
    s.spec.n = std::stol(row[3]);
    s.spec.replicates = std::stoi(row[4]);
    s.spec.seed = std::stoull(row[5]);
    CellSummary c;
    c.method = parse_method(row[6]);
    if (std::find(s.methods.begin(), s.methods.end(), c.method) == s.methods.end()) {
      s.methods.push_back(c.method);
    }
    c.parameter = row[7];
    c.truth = num(row[8]);
    c.mean_estimate = num(row[9]);
    c.bias = num(row[10]);
    c.rmse = num(row[11]);
    c.convergence_rate = num(row[12]);
    c.successful = std::stoi(row[13]);
    s.cells.push_back(std::move(c));
  }
  return s;
}

std::vector<std::string> validate_summary_json(const Json& doc) {
  std::vector<std::string> problems;
  auto need = [&](const Json& obj, const char* key, auto check, const char* what) {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(std::string("missing '") + key + "'");
      return;
    }
    if (!check(obj.at(key))) problems.push_back(std::string("'") + key + "' is not " + what);
  };
  auto is_int = [](const Json& v) { return v.is_number_integer(); };
  auto is_num = [](const Json& v) { return v.is_number(); };
  auto is_num_or_null = [](const Json& v) { return v.is_number() || v.is_null(); };
  auto is_str = [](const Json& v) { return v.is_string(); };
  auto is_obj = [](const Json& v) { return v.is_object(); };
  auto is_arr = [](const Json& v) { return v.is_array(); };

  need(doc, "schema_version", is_int, "an integer");
  need(doc, "kind", is_str, "a string");
  need(doc, "config", is_obj, "an object");
  need(doc, "realized", is_obj, "an object");
  need(doc, "results", is_arr, "an array");
  if (!problems.empty()) return problems;
  if (doc["schema_version"] != kSchemaVersion) problems.push_back("unsupported schema_version");
  if (doc["kind"] != "study_summary") problems.push_back("kind is not study_summary");
  const Json& cfg = doc["config"];
  need(cfg, "setting", is_int, "an integer");
  need(cfg, "level", is_str, "a string");
  need(cfg, "n", is_int, "an integer");
  need(cfg, "replicates", is_int, "an integer");
  need(cfg, "seed", is_int, "an integer");
  need(cfg, "methods", is_arr, "an array");
  for (const char* k : {"p_m", "p_m_star", "average_sensitivity", "average_specificity"}) {
    need(doc["realized"], k, is_num, "a number");
  }
  for (const auto& r : doc["results"]) {
    need(r, "method", is_str, "a string");
    need(r, "parameters", is_arr, "an array");
    if (!r.contains("parameters") || !r["parameters"].is_array()) continue;
    for (const auto& p : r["parameters"]) {
      need(p, "name", is_str, "a string");
      need(p, "truth", is_num, "a number");
      for (const char* k : {"mean_estimate", "bias", "rmse"}) need(p, k, is_num_or_null, "a number");
      need(p, "convergence_rate", is_num, "a number");
      need(p, "successful", is_int, "an integer");
    }
  }
  return problems;
}

}  // namespace mismed
