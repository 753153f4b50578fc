#include "mismed/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mismed/effects.hpp"
#include "mismed/em.hpp"
#include "mismed/errors.hpp"
#include "mismed/io.hpp"
#include "mismed/ols.hpp"
#include "mismed/oracles.hpp"
#include "mismed/pvw.hpp"
#include "mismed/rng.hpp"
#include "mismed/sim.hpp"

namespace mismed {

namespace {

struct RunConfig {
  std::string input;
  std::string output;
  std::string method = "em";
  std::string family = "normal";
  std::string x_col;
  std::vector<std::string> c_cols;
  std::vector<std::string> z_cols;
  std::string mstar_col;
  std::string y_col;
  bool interaction = false;
  double tol = 1e-7;
  int max_iter = 1500;
  bool no_accel = false;
  bool perfect_specificity = false;
  std::uint64_t seed = 1;
  int setting = 1;
  std::string level = "medium";
  std::optional<long> n;
  int replicates = 500;
  std::vector<std::string> methods{"naive", "em", "pvw"};
  std::optional<std::string> scale;
  double x = 1.0;
  double xref = 0.0;
  std::vector<double> c;
  int m = 0;
  bool reveal_truth = false;
  std::string config_file;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn:
      return kExitMissingColumn;
    case ErrorKind::MediatorCode:
      return kExitMediatorCode;
    case ErrorKind::Configuration:
    case ErrorKind::UnsupportedFamily:
      return kExitConfiguration;
    case ErrorKind::MalformedInput:
      return kExitMalformedInput;
    case ErrorKind::Io:
      return kExitIo;
    case ErrorKind::RankDeficiency:
    case ErrorKind::Evaluation:
    case ErrorKind::DegenerateSubject:
    case ErrorKind::Unidentifiable:
    case ErrorKind::CorrectionInfeasible:
      return kExitNumerical;
  }
  return kExitNumerical;
}

// `key = value` lines become `--key value` unless the command line already
// has --key. Boolean `true` adds the bare flag, `false` drops it.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      args.erase(args.begin() + static_cast<long>(k), args.begin() + static_cast<long>(k) + 2);
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<long>(k));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file '" + path + "'");
  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
  }
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r\"") - b + 1);
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Configuration, "config file line " + std::to_string(line_no) +
                                                ": expected 'key = value'");
    }
    std::string key = trim(t.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    const std::string value = trim(t.substr(eq + 1));
    if (given.count(key)) continue;
    if (value == "true") {
      args.push_back("--" + key);
    } else if (value != "false") {
      args.push_back("--" + key);
      args.push_back(value);
    }
  }
  return args;
}

EmConfig em_config(const RunConfig& rc) {
  EmConfig cfg;
  cfg.loglik_tolerance = rc.tol;
  cfg.max_iterations = rc.max_iter;
  cfg.acceleration = rc.no_accel ? Acceleration::None : Acceleration::Squarem;
  cfg.seed = rc.seed;
  cfg.perfect_specificity = rc.perfect_specificity;
  cfg.validate();
  return cfg;
}

Json fit_config_json(const RunConfig& rc) {
  return {{"command", "fit"},
          {"input", rc.input},
          {"output", rc.output},
          {"method", rc.method},
          {"family", rc.family},
          {"x_col", rc.x_col},
          {"c_cols", rc.c_cols},
          {"z_cols", rc.z_cols},
          {"mstar_col", rc.mstar_col},
          {"y_col", rc.y_col},
          {"interaction", rc.interaction},
          {"tol", rc.tol},
          {"max_iter", rc.max_iter},
          {"accelerate", !rc.no_accel},
          {"perfect_specificity", rc.perfect_specificity},
          {"seed", rc.seed}};
}

void check_roles(const RunConfig& rc) {
  std::set<std::string> seen;
  auto claim = [&](const std::string& name, const char* role) {
    if (!seen.insert(name).second) {
      throw Error(ErrorKind::Configuration,
                  "column '" + name + "' is used in more than one role (" + role + ")");
    }
  };
  claim(rc.x_col, "x");
  claim(rc.mstar_col, "mstar");
  claim(rc.y_col, "y");
  for (const auto& c : rc.c_cols) claim(c, "c");
  const std::set<std::string> c_set(rc.c_cols.begin(), rc.c_cols.end());
  std::set<std::string> z_seen;
  for (const auto& z : rc.z_cols) {
    if (!z_seen.insert(z).second || (seen.count(z) && !c_set.count(z))) {
      throw Error(ErrorKind::Configuration,
                  "column '" + z + "' is used in more than one role (z)");
    }
  }
}

int cmd_fit(const RunConfig& rc, std::ostream& out) {
  const Family family = parse_family(rc.family);
  const std::string method = rc.method;
  if (method != "naive" && method != "em" && method != "pvw" && method != "ols") {
    throw Error(ErrorKind::Configuration, "unknown method '" + method + "'");
  }
  if (method == "ols" && family != Family::Normal) {
    throw Error(ErrorKind::Configuration, "method 'ols' requires --family normal");
  }
  check_roles(rc);
  const EmConfig cfg = em_config(rc);

  const CsvTable table = read_csv(rc.input);
  const MediationDataset data =
      dataset_from_csv(table, ColumnMap{rc.x_col, rc.c_cols, rc.z_cols, rc.mstar_col, rc.y_col});
  data.check_outcome(family);

  const Json config = fit_config_json(rc);
  Json report;
  if (method == "naive") {
    report = naive_fit_to_json(fit_naive(data, family, rc.interaction), family, data, config);
  } else {
    FitReport fit;
    if (method == "em") {
      fit = run_em(data, family, cfg, rc.interaction);
    } else if (method == "pvw") {
      fit = run_pvw(data, family, cfg, rc.interaction);
    } else {
      fit = run_ols_correction(data, family, cfg, rc.interaction);
    }
    report = fit_report_to_json(fit, data, config);
  }
  write_file_atomic(rc.output, report.dump(2) + "\n");
  out << "wrote " << rc.output << '\n';
  return kExitOk;
}

int cmd_effects(const RunConfig& rc, std::ostream& out) {
  std::ifstream in(rc.input);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + rc.input + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, "'" + rc.input + "' is not valid JSON: " + e.what());
  }
  const SavedFit fit = saved_fit_from_json(doc);
  const EffectScale natural = natural_scale(fit.family);
  const EffectScale scale = rc.scale ? parse_scale(*rc.scale) : natural;
  if (scale != natural) {
    throw Error(ErrorKind::Configuration,
                "scale '" + std::string(to_string(scale)) + "' does not match a " +
                    std::string(to_string(fit.family)) + " fit (use '" +
                    std::string(to_string(natural)) + "')");
  }
  EffectQuery q;
  q.x = rc.x;
  q.x_ref = rc.xref;
  q.m = rc.m;
  q.scale = scale;
  const auto p = static_cast<Eigen::Index>(fit.c_names.size());
  if (rc.c.empty()) {
    q.c = Eigen::VectorXd::Zero(p);
  } else if (static_cast<Eigen::Index>(rc.c.size()) == p) {
    q.c = Eigen::Map<const Eigen::VectorXd>(rc.c.data(), p);
  } else {
    throw Error(ErrorKind::Configuration, "--c needs " + std::to_string(p) + " values, got " +
                                              std::to_string(rc.c.size()));
  }
  if (q.m != 0 && q.m != 1) throw Error(ErrorKind::Configuration, "--m must be 0 or 1");
  const EffectEstimates e = compute_effects(fit.params, q);
  const Json config = {{"command", "effects"}, {"input", rc.input}, {"output", rc.output},
                       {"scale", std::string(to_string(scale))}};
  write_file_atomic(rc.output, effects_to_json(e, q, fit, config).dump(2) + "\n");
  out << "wrote " << rc.output << '\n';
  return kExitOk;
}

ScenarioSpec scenario(const RunConfig& rc) {
  ScenarioSpec spec = ScenarioSpec::defaults(rc.setting, parse_level(rc.level));
  if (rc.n) spec.n = *rc.n;
  spec.replicates = rc.replicates;
  spec.seed = rc.seed;
  spec.validate();
  return spec;
}

int cmd_datagen(const RunConfig& rc, std::ostream& out) {
  ScenarioSpec spec = scenario(rc);
  spec.replicates = 1;
  const SimulatedData sim = generate_dataset(spec, 0);
  const Json provenance = {{"command", "datagen"},
                           {"schema_version", kSchemaVersion},
                           {"setting", spec.setting},
                           {"level", std::string(to_string(spec.level))},
                           {"n", spec.n},
                           {"seed", spec.seed},
                           {"reveal_truth", rc.reveal_truth}};
  write_file_atomic(rc.output, dataset_csv(sim, rc.reveal_truth, provenance));
  out << "wrote " << rc.output << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& rc, std::ostream& out) {
  const ScenarioSpec spec = scenario(rc);
  std::vector<Method> methods;
  for (const auto& m : rc.methods) methods.push_back(parse_method(m));
  check_methods(spec, methods);
  const StudySummary s = run_study(spec, methods, em_config(rc));
  std::filesystem::path csv = rc.output;
  std::filesystem::path json = csv;
  json.replace_extension(".json");
  if (json == csv) json += ".json";
  write_file_atomic(csv, summary_csv(s));
  write_file_atomic(json, summary_json(s).dump(2) + "\n");
  out << "wrote " << csv.string() << " and " << json.string() << '\n';
  return kExitOk;
}

int self_check(std::ostream& out) {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok) {
    out << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };

  const auto block = Philox4x32::generate_block({0, 0, 0, 0}, {0, 0});
  report("philox known-answer vector",
         block == Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  ScenarioSpec spec = ScenarioSpec::defaults(1, Level::Low);
  spec.n = 2000;
  const SimulatedData sim = generate_dataset(spec, 0);
  const ScenarioTruth truth = scenario_truth(spec);
  const Responsibilities fast = e_step(truth.params, sim.data, truth.family);
  const Responsibilities slow = oracles::brute_force_posterior(truth.params, sim.data, truth.family);
  report("e-step matches brute-force posterior",
         (fast.r - slow.r).cwiseAbs().maxCoeff() < 1e-12 &&
             std::abs(fast.loglik - slow.loglik) < 1e-8 * std::abs(slow.loglik));

  const FitReport fit = run_em(sim.data, truth.family, EmConfig{}, false);
  bool monotone = true;
  for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
    if (fit.loglik_trace[k] < fit.loglik_trace[k - 1] - 1e-9) monotone = false;
  }
  report("em converges with a non-decreasing log-likelihood", fit.converged && monotone);
  return failures == 0 ? kExitOk : kExitSelfCheck;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Mediation analysis with a misclassified binary mediator", "mismed"};
  app.require_subcommand(0, 1);
  bool run_self_check = false;
  app.add_flag("--self-check", run_self_check, "Run built-in consistency checks");

  auto add_em = [&](CLI::App* sub) {
    sub->add_option("--tol", rc.tol, "EM log-likelihood tolerance")->capture_default_str();
    sub->add_option("--max-iter", rc.max_iter, "EM iteration cap")->capture_default_str();
    sub->add_flag("--no-accel", rc.no_accel, "Plain EM updates without SQUAREM");
    sub->add_option("--seed", rc.seed, "Random seed")->capture_default_str();
  };
  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--setting", rc.setting, "Simulation setting 1-5")->capture_default_str();
    sub->add_option("--level", rc.level, "low, medium or high")->capture_default_str();
    sub->add_option("--n", rc.n, "Sample size (setting default if omitted)");
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit a model to a CSV file");
  fit->add_option("--input", rc.input, "Input CSV")->required();
  fit->add_option("--output", rc.output, "Report JSON")->required();
  fit->add_option("--method", rc.method, "naive, em, pvw or ols")->capture_default_str();
  fit->add_option("--family", rc.family, "normal, bernoulli or poisson")->capture_default_str();
  fit->add_option("--x-col", rc.x_col, "Exposure column")->required();
  fit->add_option("--c-cols", rc.c_cols, "Confounder columns")->delimiter(',');
  fit->add_option("--z-cols", rc.z_cols, "Misclassification covariate columns")->delimiter(',');
  fit->add_option("--mstar-col", rc.mstar_col, "Observed mediator column")->required();
  fit->add_option("--y-col", rc.y_col, "Outcome column")->required();
  fit->add_flag("--interaction", rc.interaction, "Include the exposure-mediator interaction");
  fit->add_flag("--perfect-specificity", rc.perfect_specificity,
                "Fix P(M*=1 | M=2) = 0 (no false positives)");
  add_em(fit);

  CLI::App* eff = app.add_subcommand("effects", "Causal effects from a fit report");
  eff->add_option("--input", rc.input, "Fit report JSON")->required();
  eff->add_option("--output", rc.output, "Effects JSON")->required();
  eff->add_option("--scale", rc.scale, "difference, odds-ratio or risk-ratio");
  eff->add_option("--x", rc.x, "Exposure level")->capture_default_str();
  eff->add_option("--xref", rc.xref, "Reference exposure level")->capture_default_str();
  eff->add_option("--c", rc.c, "Confounder values (default 0)")->delimiter(',');
  eff->add_option("--m", rc.m, "Mediator level for the CDE, 0 or 1")->capture_default_str();

  CLI::App* gen = app.add_subcommand("datagen", "Write a simulated dataset");
  add_scenario(gen);
  gen->add_option("--seed", rc.seed, "Random seed")->capture_default_str();
  gen->add_option("--output", rc.output, "Output CSV")->required();
  gen->add_flag("--reveal-truth", rc.reveal_truth, "Add the latent true_m column");

  CLI::App* sim = app.add_subcommand("simulate", "Run a simulation study");
  add_scenario(sim);
  sim->add_option("--replicates", rc.replicates, "Replicates")->capture_default_str();
  sim->add_option("--methods", rc.methods, "naive, em, pvw, ols")->delimiter(',');
  sim->add_option("--output", rc.output, "Summary CSV (a .json sibling is also written)")
      ->required();
  add_em(sim);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config_file(std::move(args));
    std::vector<const char*> cargs{argc > 0 ? argv[0] : "mismed"};
    for (const auto& a : args) cargs.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    if (run_self_check) return self_check(out);
    if (fit->parsed()) {
      // Reject method/family mismatches before touching any data.
      if (rc.method == "ols" && parse_family(rc.family) != Family::Normal) {
        throw Error(ErrorKind::Configuration, "method 'ols' requires --family normal");
      }
      return cmd_fit(rc, out);
    }
    if (eff->parsed()) return cmd_effects(rc, out);
    if (gen->parsed()) return cmd_datagen(rc, out);
    if (sim->parsed()) return cmd_simulate(rc, out);
    err << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace mismed
