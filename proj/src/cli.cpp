#include "maxel/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxel/calibration.hpp"
#include "maxel/io.hpp"
#include "maxel/simlab.hpp"

namespace maxel::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr int kParseFailure = 2;
constexpr int kNumericFailure = 3;
constexpr int kUsage = 64;
constexpr std::string_view kConfigPrefix = "# config: ";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- shared parsing helpers

Multiplier multiplier_from(const std::string& s) {
  if (s == "gaussian") return Multiplier::gaussian;
  if (s == "rademacher") return Multiplier::rademacher;
  throw UsageError("unknown multiplier '" + s + "'");
}

InferenceMethod method_from(const std::string& s) {
  if (auto m = parse_inference_method(s)) return *m;
  throw UsageError("unknown method '" + s + "'");
}

Experiment experiment_from(const std::string& s) {
  if (auto e = parse_experiment(s); e && *e != Experiment::timing) return *e;
  throw UsageError("unknown experiment '" + s + "'");
}

CLI::Validator open_unit_interval() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0.0;
        try {
          v = std::stod(s);
        } catch (...) {
          return "not a number";
        }
        return v > 0.0 && v < 1.0 ? std::string() : std::string("must lie strictly between 0 and 1");
      },
      "(0,1)");
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path);
  std::string first;
  std::getline(in, first);
  json j;
  try {
    if (first.rfind(kConfigPrefix, 0) == 0) {
      j = json::parse(first.substr(kConfigPrefix.size()));
    } else {
      std::stringstream rest;
      rest << first << '\n' << in.rdbuf();
      j = json::parse(rest.str());
    }
  } catch (const json::exception& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  if (j.contains("config")) j = j["config"];
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <typename T>
std::vector<T> json_list(const json& j) {
  return j.is_array() ? j.get<std::vector<T>>() : std::vector<T>{j.get<T>()};
}

// ---- infer

struct InferArgs {
  std::string scores;
  double alpha = 0.05;
  std::string method = "auto";
  int boot_draws = 1000;
  std::string multiplier = "gaussian";
  std::uint64_t seed = 1;
  std::optional<double> kappa;
  bool smooth_bootstrap = false;
};

json to_json(const InferArgs& a) {
  json j;
  j["command"] = "infer";
  j["scores"] = a.scores;
  j["alpha"] = a.alpha;
  j["method"] = a.method;
  j["boot_draws"] = a.boot_draws;
  j["multiplier"] = a.multiplier;
  j["seed"] = a.seed;
  j["kappa"] = a.kappa ? json(*a.kappa) : json(nullptr);
  j["smooth_bootstrap"] = a.smooth_bootstrap;
  return j;
}

void apply_json(const json& j, InferArgs& a) {
  try {
    if (j.contains("command") && j["command"] != "infer") throw UsageError("config is not an infer config");
    if (j.contains("scores")) a.scores = j["scores"].get<std::string>();
    if (j.contains("alpha")) a.alpha = j["alpha"].get<double>();
    if (j.contains("method")) a.method = j["method"].get<std::string>();
    if (j.contains("boot_draws")) a.boot_draws = j["boot_draws"].get<int>();
    if (j.contains("multiplier")) a.multiplier = j["multiplier"].get<std::string>();
    if (j.contains("seed")) a.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("kappa") && !j["kappa"].is_null()) a.kappa = j["kappa"].get<double>();
    if (j.contains("smooth_bootstrap")) a.smooth_bootstrap = j["smooth_bootstrap"].get<bool>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad infer config: ") + e.what());
  }
}

json draw_summary(const CalibrationResult& cal) {
  std::vector<double> d = cal.draws;
  std::sort(d.begin(), d.end());
  auto q = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(d.size())));
    return d[std::clamp<std::size_t>(idx, 1, d.size()) - 1];
  };
  double mean = 0.0;
  for (double v : cal.draws) mean += v;
  json j;
  j["method"] = to_string(cal.method);
  j["count"] = d.size();
  j["mean"] = mean / static_cast<double>(d.size());
  j["min"] = d.front();
  j["q25"] = q(0.25);
  j["median"] = q(0.5);
  j["q75"] = q(0.75);
  j["q95"] = q(0.95);
  j["max"] = d.back();
  j["cone"] = cal.cone.active();
  return j;
}

int cmd_infer(InferArgs a, const std::string& out_dir) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (a.boot_draws < 1) throw UsageError("boot-draws must be at least 1");
  if (a.kappa && !(*a.kappa >= 0.0)) throw UsageError("kappa must be nonnegative");
  const auto method = method_from(a.method);
  const auto multiplier = multiplier_from(a.multiplier);
  if (a.scores.empty()) throw UsageError("--scores is required");
  a.scores = fs::absolute(a.scores).lexically_normal().string();

  const auto table = read_score_csv(fs::path(a.scores));
  InferenceOptions opts;
  opts.alpha = a.alpha;
  opts.method = method;
  opts.draws = a.boot_draws;
  opts.multiplier = multiplier;
  opts.kappa = a.kappa;
  opts.bootstrap_when_smooth = a.smooth_bootstrap;
  const auto res = infer(table.scores, opts, derive_stream(a.seed, {}));
  const ScoreSummary summary(table.scores);

  auto names_of = [&](const IndexList& idx) {
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(table.names[static_cast<std::size_t>(i)]);
    return out;
  };
  json j;
  j["tool"] = "maxel";
  j["version"] = MAXEL_VERSION;
  j["config"] = to_json(a);
  j["n"] = table.scores.n();
  j["J"] = table.scores.num_policies();
  j["policies"] = table.names;
  j["mean"] = std::vector<double>(summary.mean().data(), summary.mean().data() + summary.mean().size());
  j["lower"] = res.bound.lower;
  j["level"] = res.bound.level;
  j["method"] = to_string(res.bound.method);
  j["critical_value"] = res.bound.critical_value;
  j["kappa"] = res.active.kappa;
  j["active_set"] = names_of(res.active.indices.active());
  j["active_indices"] = res.active.indices.active();
  j["weights"] = std::vector<double>(res.bound.weights.data(), res.bound.weights.data() + res.bound.weights.size());
  j["face"] = names_of(res.bound.face);
  j["bootstrap"] = res.calibration ? draw_summary(*res.calibration) : json(nullptr);
  j["seed"] = a.seed;

  const fs::path path = fs::path(out_dir) / "result.json";
  write_text(path, j.dump(2) + "\n");
  std::cout << "lower " << format_double(res.bound.lower) << " (" << to_string(res.bound.method) << ", |J|="
            << res.active.indices.size() << ") -> " << path.string() << "\n";
  return 0;
}

// ---- simulate

struct SimulateArgs {
  std::string experiment = "dimension";
  std::vector<long> n;
  std::vector<long> J;
  std::vector<long> k;
  std::vector<double> rho;
  int reps = 300;
  int boot_draws = 500;
  double alpha = 0.05;
  std::string multiplier = "gaussian";
  std::uint64_t seed = 1;
  std::vector<std::string> methods;
  int folds = 2;
  long mc_draws = 2'000'000;
  double ridge = 1.0;
};

// Desk-scale cells per experiment.
void fill_defaults(SimulateArgs& a) {
  const auto e = experiment_from(a.experiment);
  auto set = [](auto& v, auto d) {
    if (v.empty()) v = d;
  };
  switch (e) {
    case Experiment::dimension:
      set(a.n, std::vector<long>{500});
      set(a.J, std::vector<long>{5, 10, 20});
      set(a.k, std::vector<long>{1});
      break;
    case Experiment::ties:
      set(a.n, std::vector<long>{500, 1000});
      set(a.J, std::vector<long>{20});
      set(a.k, std::vector<long>{1, 2, 4, 8});
      break;
    case Experiment::correlation:
      set(a.n, std::vector<long>{2000});
      set(a.J, std::vector<long>{10});
      set(a.k, std::vector<long>{3});
      set(a.rho, std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 0.9});
      set(a.methods, std::vector<std::string>{"auto", "fs"});
      break;
    case Experiment::semiparametric:
      set(a.n, std::vector<long>{500, 1000});
      set(a.J, std::vector<long>{8});
      set(a.k, std::vector<long>{5});
      break;
    case Experiment::timing:
      break;
  }
  set(a.rho, std::vector<double>{0.0});
  set(a.methods, std::vector<std::string>{"auto", "joint", "wald"});
}

json to_json(const SimulateArgs& a) {
  json j;
  j["command"] = "simulate";
  j["experiment"] = a.experiment;
  j["n"] = a.n;
  j["J"] = a.J;
  j["k"] = a.k;
  j["rho"] = a.rho;
  j["reps"] = a.reps;
  j["boot_draws"] = a.boot_draws;
  j["alpha"] = a.alpha;
  j["multiplier"] = a.multiplier;
  j["seed"] = a.seed;
  j["methods"] = a.methods;
  j["folds"] = a.folds;
  j["mc_draws"] = a.mc_draws;
  j["ridge"] = a.ridge;
  if (a.experiment == "correlation") j["off_block"] = "independent N(0.10, 1), independent of the tied block";
  return j;
}

void apply_json(const json& j, SimulateArgs& a) {
  try {
    if (j.contains("command") && j["command"] != "simulate") throw UsageError("config is not a simulate config");
    if (j.contains("experiment")) a.experiment = j["experiment"].get<std::string>();
    if (j.contains("n")) a.n = json_list<long>(j["n"]);
    if (j.contains("J")) a.J = json_list<long>(j["J"]);
    if (j.contains("k")) a.k = json_list<long>(j["k"]);
    if (j.contains("rho")) a.rho = json_list<double>(j["rho"]);
    if (j.contains("reps")) a.reps = j["reps"].get<int>();
    if (j.contains("boot_draws")) a.boot_draws = j["boot_draws"].get<int>();
    if (j.contains("alpha")) a.alpha = j["alpha"].get<double>();
    if (j.contains("multiplier")) a.multiplier = j["multiplier"].get<std::string>();
    if (j.contains("seed")) a.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("methods")) a.methods = json_list<std::string>(j["methods"]);
    if (j.contains("folds")) a.folds = j["folds"].get<int>();
    if (j.contains("mc_draws")) a.mc_draws = j["mc_draws"].get<long>();
    if (j.contains("ridge")) a.ridge = j["ridge"].get<double>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad simulate config: ") + e.what());
  }
}

std::vector<ExperimentConfig> expand_cells(const SimulateArgs& a) {
  const auto experiment = experiment_from(a.experiment);
  const auto multiplier = multiplier_from(a.multiplier);
  std::vector<InferenceMethod> methods;
  for (const auto& m : a.methods) methods.push_back(method_from(m));
  std::vector<ExperimentConfig> cells;
  for (long n : a.n)
    for (long num : a.J)
      for (long k : a.k)
        for (double rho : a.rho) {
          ExperimentConfig c;
          c.experiment = experiment;
          c.n = n;
          c.num_policies = num;
          c.k = k;
          c.rho = rho;
          c.reps = a.reps;
          c.boot_draws = a.boot_draws;
          c.alpha = a.alpha;
          c.multiplier = multiplier;
          c.seed = a.seed;
          c.methods = methods;
          c.folds = a.folds;
          c.mc_draws = a.mc_draws;
          c.ridge = a.ridge;
          try {
            c.validate();
          } catch (const std::invalid_argument& e) {
            throw UsageError("cell n=" + std::to_string(n) + " J=" + std::to_string(num) + " k=" + std::to_string(k) +
                             ": " + e.what());
          }
          cells.push_back(c);
        }
  if (cells.empty()) throw UsageError("no cells to run");
  return cells;
}

int cmd_simulate(SimulateArgs a, const std::string& out_dir, int workers) {
  if (workers < 1) throw UsageError("workers must be at least 1");
  fill_defaults(a);
  const auto cells = expand_cells(a);

  std::ostringstream csv;
  csv << kConfigPrefix << to_json(a).dump() << '\n';
  csv << "experiment,n,J,k,rho,method,coverage,mean_shortfall,mean_critical_value,reps,B,seed,tau0,tau0_se,"
         "mean_active_size\n";
  for (const auto& cell : cells) {
    const auto res = run_experiment(cell, workers);
    for (const auto& m : res.methods) {
      csv << a.experiment << ',' << cell.n << ',' << cell.num_policies << ',' << cell.k << ','
          << format_double(cell.rho) << ',' << to_string(m.method) << ',' << format_double(m.coverage) << ','
          << format_double(m.mean_shortfall) << ',' << format_double(m.mean_critical_value) << ',' << cell.reps << ','
          << cell.boot_draws << ',' << cell.seed << ',' << format_double(res.truth.tau0) << ','
          << format_double(res.truth.tau0_se) << ',' << format_double(m.mean_active_size) << '\n';
    }
    std::cerr << "cell n=" << cell.n << " J=" << cell.num_policies << " k=" << cell.k << " rho=" << cell.rho
              << " done\n";
  }
  const fs::path path = fs::path(out_dir) / (a.experiment + ".csv");
  write_text(path, csv.str());
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

// ---- timing

struct TimingArgs {
  long n = 2000;
  long J = 10;
  int boot_draws = 200;
  std::uint64_t seed = 1;
  bool scaling = false;
};

int cmd_timing(const TimingArgs& a, const std::string& out_dir) {
  if (a.n < 20) throw UsageError("n must be at least 20");
  if (a.J < 2) throw UsageError("J must be at least 2");
  if (a.boot_draws < 1) throw UsageError("boot-draws must be at least 1");
  const auto rep = timing_experiment(a.n, a.J, a.boot_draws, derive_stream(a.seed, {}));
  json cfg;
  cfg["command"] = "timing";
  cfg["n"] = a.n;
  cfg["J"] = a.J;
  cfg["boot_draws"] = a.boot_draws;
  cfg["seed"] = a.seed;
  cfg["scaling"] = a.scaling;
  std::ostringstream csv;
  csv << kConfigPrefix << cfg.dump() << '\n';
  csv << "arm,n,J,B,seconds,per_draw_seconds,ratio\n";
  csv << "score-level," << a.n << ',' << a.J << ',' << a.boot_draws << ',' << format_double(rep.score_seconds) << ','
      << format_double(rep.score_per_draw) << ',' << format_double(rep.ratio) << '\n';
  csv << "refit," << a.n << ',' << a.J << ',' << a.boot_draws << ',' << format_double(rep.refit_seconds) << ','
      << format_double(rep.refit_per_draw) << ',' << format_double(rep.ratio) << '\n';
  const fs::path path = fs::path(out_dir) / "timing.csv";
  write_text(path, csv.str());
  std::cout << "refit/score ratio " << rep.ratio << " -> " << path.string() << "\n";

  if (a.scaling) {
    std::ostringstream sc;
    sc << kConfigPrefix << cfg.dump() << '\n' << "n,J,B,per_draw_seconds\n";
    for (long n : {500, 1000, 2000, 4000})
      for (long num : {5, 10, 20, 40}) {
        const double t = score_bootstrap_per_draw(n, num, 300, derive_stream(a.seed, {1}));
        sc << n << ',' << num << ",300," << format_double(t) << '\n';
      }
    write_text(fs::path(out_dir) / "timing_scaling.csv", sc.str());
  }
  return 0;
}

// ---- generate

struct GenerateArgs {
  std::string experiment = "dimension";
  long n = 1000;
  long J = 5;
  long k = 1;
  double rho = 0.0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  ExperimentConfig c;
  c.experiment = experiment_from(a.experiment);
  c.n = a.n;
  c.num_policies = a.J;
  c.k = a.k;
  c.rho = a.rho;
  c.seed = a.seed;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.out.empty()) throw UsageError("--out is required");
  const auto scores = experiment_scores(c, 0);
  std::ostringstream csv;
  write_score_csv(csv, scores);
  write_text(a.out, csv.str());
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Lower confidence bounds for the best policy value"};
  app.set_version_flag("--version", std::string(MAXEL_VERSION));
  app.require_subcommand(1);

  InferArgs ia;
  std::string infer_out = ".", infer_config;
  auto* infer_cmd = app.add_subcommand("infer", "lower bound from a score file");
  infer_cmd->add_option("--scores", ia.scores, "CSV with header policy_1,...,policy_J");
  auto* o_alpha = infer_cmd->add_option("--alpha", ia.alpha, "one-sided level")->check(open_unit_interval());
  auto* o_method = infer_cmd->add_option("--method", ia.method, "calibration method")
                       ->check(CLI::IsMember({"auto", "chi2", "ordinary", "corrected", "joint", "wald", "fs"}));
  auto* o_draws = infer_cmd->add_option("--boot-draws", ia.boot_draws, "bootstrap draws")->check(CLI::Range(1, 100000000));
  auto* o_mult = infer_cmd->add_option("--multiplier", ia.multiplier)->check(CLI::IsMember({"gaussian", "rademacher"}));
  auto* o_seed = infer_cmd->add_option("--seed", ia.seed, "master seed");
  double kappa = 0.0;
  auto* o_kappa = infer_cmd->add_option("--kappa", kappa, "active-set threshold (default: data-driven)")
                      ->check(CLI::NonNegativeNumber);
  auto* o_smooth = infer_cmd->add_flag("--smooth-bootstrap", ia.smooth_bootstrap,
                                       "calibrate a unique optimum by the ordinary bootstrap");
  infer_cmd->add_option("--out", infer_out, "output directory");
  infer_cmd->add_option("--config", infer_config, "replay the config embedded in a result file");
  infer_cmd->add_option("--workers", "accepted for symmetry; inference is single-threaded");

  SimulateArgs sa;
  std::string sim_out = ".", sim_config;
  int workers = 1;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage experiment");
  auto* s_exp = sim_cmd->add_option("--experiment", sa.experiment)
                    ->check(CLI::IsMember({"dimension", "ties", "correlation", "semi"}));
  auto* s_n = sim_cmd->add_option("--n", sa.n, "sample sizes")->delimiter(',')->check(CLI::Range(2L, 100000000L));
  auto* s_j = sim_cmd->add_option("--j,--J", sa.J, "numbers of policies")->delimiter(',')->check(CLI::Range(2L, 100000L));
  auto* s_k = sim_cmd->add_option("--k", sa.k, "tie multiplicities / near-tied policies")
                  ->delimiter(',')
                  ->check(CLI::Range(1L, 100000L));
  auto* s_rho = sim_cmd->add_option("--rho", sa.rho, "tied-block correlations")->delimiter(',');
  auto* s_reps = sim_cmd->add_option("--reps", sa.reps)->check(CLI::Range(1, 100000000));
  auto* s_draws = sim_cmd->add_option("--boot-draws", sa.boot_draws)->check(CLI::Range(1, 100000000));
  auto* s_alpha = sim_cmd->add_option("--alpha", sa.alpha)->check(open_unit_interval());
  auto* s_mult = sim_cmd->add_option("--multiplier", sa.multiplier)->check(CLI::IsMember({"gaussian", "rademacher"}));
  auto* s_seed = sim_cmd->add_option("--seed", sa.seed);
  auto* s_methods = sim_cmd->add_option("--methods", sa.methods)
                        ->delimiter(',')
                        ->check(CLI::IsMember({"auto", "chi2", "ordinary", "corrected", "joint", "wald", "fs"}));
  auto* s_folds = sim_cmd->add_option("--folds", sa.folds)->check(CLI::Range(2, 100));
  auto* s_mc = sim_cmd->add_option("--mc-draws", sa.mc_draws)->check(CLI::Range(1000L, 1000000000L));
  auto* s_ridge = sim_cmd->add_option("--ridge", sa.ridge)->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--out", sim_out, "output directory");
  sim_cmd->add_option("--config", sim_config, "replay the config embedded in an output file");
  sim_cmd->add_option("--workers", workers, "threads over repetitions")->check(CLI::Range(1, 1024));

  TimingArgs ta;
  std::string timing_out = ".";
  auto* timing_cmd = app.add_subcommand("timing", "score-level vs refit bootstrap wall-clock");
  timing_cmd->add_option("--n", ta.n)->check(CLI::Range(20L, 100000000L));
  timing_cmd->add_option("--j,--J", ta.J)->check(CLI::Range(2L, 100000L));
  timing_cmd->add_option("--boot-draws", ta.boot_draws)->check(CLI::Range(1, 100000000));
  timing_cmd->add_option("--seed", ta.seed);
  timing_cmd->add_flag("--scaling", ta.scaling, "also time per-draw cost over an (n, J) grid");
  timing_cmd->add_option("--out", timing_out, "output directory");

  GenerateArgs ga;
  auto* gen_cmd = app.add_subcommand("generate", "write one simulated score file");
  gen_cmd->add_option("--experiment", ga.experiment)->check(CLI::IsMember({"dimension", "ties", "correlation", "semi"}));
  gen_cmd->add_option("--n", ga.n)->check(CLI::Range(2L, 100000000L));
  gen_cmd->add_option("--j,--J", ga.J)->check(CLI::Range(2L, 100000L));
  gen_cmd->add_option("--k", ga.k)->check(CLI::Range(1L, 100000L));
  gen_cmd->add_option("--rho", ga.rho);
  gen_cmd->add_option("--seed", ga.seed);
  gen_cmd->add_option("--out", ga.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*infer_cmd) {
      InferArgs args;
      if (!infer_config.empty()) apply_json(load_config(infer_config), args);
      if (!infer_cmd->get_option("--scores")->empty()) args.scores = ia.scores;
      if (o_alpha->count()) args.alpha = ia.alpha;
      if (o_method->count()) args.method = ia.method;
      if (o_draws->count()) args.boot_draws = ia.boot_draws;
      if (o_mult->count()) args.multiplier = ia.multiplier;
      if (o_seed->count()) args.seed = ia.seed;
      if (o_kappa->count()) args.kappa = kappa;
      if (o_smooth->count()) args.smooth_bootstrap = ia.smooth_bootstrap;
      return cmd_infer(args, infer_out);
    }
    if (*sim_cmd) {
      SimulateArgs args;
      if (!sim_config.empty()) apply_json(load_config(sim_config), args);
      if (s_exp->count()) args.experiment = sa.experiment;
      if (s_n->count()) args.n = sa.n;
      if (s_j->count()) args.J = sa.J;
      if (s_k->count()) args.k = sa.k;
      if (s_rho->count()) args.rho = sa.rho;
      if (s_reps->count()) args.reps = sa.reps;
      if (s_draws->count()) args.boot_draws = sa.boot_draws;
      if (s_alpha->count()) args.alpha = sa.alpha;
      if (s_mult->count()) args.multiplier = sa.multiplier;
      if (s_seed->count()) args.seed = sa.seed;
      if (s_methods->count()) args.methods = sa.methods;
      if (s_folds->count()) args.folds = sa.folds;
      if (s_mc->count()) args.mc_draws = sa.mc_draws;
      if (s_ridge->count()) args.ridge = sa.ridge;
      return cmd_simulate(args, sim_out, workers);
    }
    if (*timing_cmd) return cmd_timing(ta, timing_out);
    if (*gen_cmd) return cmd_generate(ga);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParseFailure;
  } catch (const DegenerateCovariance& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericFailure;
  }
  return kUsage;
}

}  // namespace maxel::cli
