#include "qsf/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qsf/errors.hpp"
#include "qsf/grape.hpp"
#include "qsf/ppo.hpp"
#include "qsf/pulse_io.hpp"
#include "qsf/sta.hpp"
#include "qsf/units.hpp"

namespace qsf::cli {

namespace fs = std::filesystem;

AxisSpec parse_axis(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  require(parts.size() == 3, "grid spec '" + spec + "' must have the form min:max:count");
  AxisSpec axis;
  try {
    std::size_t used = 0;
    axis.min = std::stod(parts[0], &used);
    require(used == parts[0].size(), "bad number in grid spec '" + spec + "'");
    axis.max = std::stod(parts[1], &used);
    require(used == parts[1].size(), "bad number in grid spec '" + spec + "'");
    const long long count = std::stoll(parts[2], &used);
    require(used == parts[2].size(), "bad count in grid spec '" + spec + "'");
    require(count >= 1, "grid spec '" + spec + "' has an empty axis (count must be >= 1)");
    axis.count = static_cast<std::size_t>(count);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const DomainError*>(&e)) throw;
    throw DomainError("bad number in grid spec '" + spec + "'");
  }
  require(std::isfinite(axis.min) && std::isfinite(axis.max), "grid spec bounds must be finite");
  return axis;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  if (text.find_first_not_of(" \t") == std::string::npos) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    require(first != std::string::npos, "empty entry in list '" + text + "'");
    item = item.substr(first, item.find_last_not_of(" \t") - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    require(used == item.size() && std::isfinite(v), "cannot parse '" + item + "' as a number");
    out.push_back(v);
  }
  return out;
}

namespace {

struct Run {
  fs::path out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 1;
  std::string command;
  Json config = Json::object();
  Json results = Json::object();
  std::vector<std::string> artifacts;

  fs::path artifact(const std::string& name) {
    fs::path p = fs::path(name).is_absolute() ? fs::path(name) : out_dir / name;
    artifacts.push_back(p.string());
    return p;
  }
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const Run& run, int status, const std::string& error) {
  Json m = {{"command", run.command},   {"config", run.config},
            {"seed", run.seed},         {"threads", run.threads},
            {"artifacts", run.artifacts}, {"results", run.results},
            {"tool_version", kToolVersion}, {"exit_code", status},
            {"timestamp", utc_timestamp()}};
  if (!error.empty()) m["error"] = error;
  std::error_code ec;
  fs::create_directories(run.out_dir, ec);
  write_json_file(run.out_dir / "manifest.json", m);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw DomainError("failed writing '" + path.string() + "'");
}

ControlField field_from_mhz(double omega_mhz, double delta_max_mhz = 0.0) {
  require(std::isfinite(omega_mhz) && omega_mhz > 0.0, "--omega-mhz must be positive");
  require(std::isfinite(delta_max_mhz) && delta_max_mhz >= 0.0, "--delta-max-mhz must be >= 0");
  return ControlField(units::mhz_to_rad_per_s(omega_mhz), units::mhz_to_rad_per_s(delta_max_mhz));
}

Json pulse_report(const PulseSequence& pulse) {
  const double p = population_excited(final_state(DensityMatrix::ground(), pulse));
  return {{"T_s", pulse.duration()},
          {"T_ns", units::to_ns(pulse.duration())},
          {"omega_t", pulse.field().omega() * pulse.duration()},
          {"delta_max_rad_per_s", pulse.field().delta_max()},
          {"steps", pulse.size()},
          {"final_population", p}};
}

SensitivityTarget parse_target(const std::string& s) {
  if (s == "delta") return SensitivityTarget::DetuningError;
  if (s == "omega") return SensitivityTarget::RabiError;
  throw DomainError("--target must be 'delta' or 'omega'");
}

SynthesisRoute parse_route(const std::string& s) {
  if (s == "ansatz") return SynthesisRoute::Ansatz;
  if (s == "series") return SynthesisRoute::Series;
  throw DomainError("--route must be 'ansatz' or 'series'");
}

struct StaOptions {
  double a = 0.0;
  std::string alphas;
  std::string route = "ansatz";
  std::string target = "delta";
  double omega_mhz = 20.0;
  std::size_t samples = 2000;
  std::size_t steps = 2000;
  std::string out = "pulse.json";
  std::string report = "report.json";
};

void run_sta_pulse(Run& run, const StaOptions& o, const AngleTrajectory& traj, Json meta) {
  const PulseSequence pulse = discretize(detuning_from_theta(traj), o.steps);
  Json report = pulse_report(pulse);
  for (auto& [k, v] : meta.items()) report[k] = v;
  write_pulse_file(run.artifact(o.out), pulse, meta);
  write_json_file(run.artifact(o.report), report);
  run.results = report;
}

void cmd_sta_ansatz(Run& run, const StaOptions& o) {
  const ControlField field = field_from_mhz(o.omega_mhz);
  const AnsatzParameter a(o.a);
  run.config = {{"a", o.a}, {"omega_mhz", o.omega_mhz}, {"samples", o.samples}, {"steps", o.steps}};
  run_sta_pulse(run, o, ansatz_theta(a, field, o.samples), {{"route", "ansatz"}, {"a", o.a}});
}

void cmd_sta_series(Run& run, const StaOptions& o) {
  const ControlField field = field_from_mhz(o.omega_mhz);
  const SeriesCoefficients c{parse_list(o.alphas)};
  run.config = {{"alphas", c.alphas}, {"omega_mhz", o.omega_mhz}, {"samples", o.samples},
                {"steps", o.steps}};
  run_sta_pulse(run, o, series_theta(c, field, o.samples),
                {{"route", "series"}, {"alphas", c.alphas}, {"qsl_omega_t", qsl_time(c)}});
}

void cmd_sta_optimize(Run& run, const StaOptions& o) {
  const ControlField field = field_from_mhz(o.omega_mhz);
  const SynthesisRoute route = parse_route(o.route);
  const SensitivityTarget target = parse_target(o.target);
  run.config = {{"route", o.route}, {"target", o.target}, {"omega_mhz", o.omega_mhz},
                {"samples", o.samples}};
  const SensitivityOptimum opt = optimize_sensitivity(route, target, field, o.samples);
  Json report = {{"route", to_string(route)},     {"target", to_string(target)},
                 {"parameter", opt.parameter},    {"residual", opt.residual},
                 {"baseline", opt.baseline},      {"T_s", opt.duration},
                 {"T_ns", units::to_ns(opt.duration)}, {"qsl_omega_T", opt.qsl_omega_t},
                 {"ok", opt.ok}};
  write_json_file(run.artifact(o.report), report);
  run.results = report;
  if (!opt.ok)
    throw NumericalError("sensitivity optimum residual " + format_double(opt.residual) +
                         " exceeds 10% of the flat-pulse value " + format_double(opt.baseline));
}

struct QslOptions {
  int order = 0;
  std::string alphas;
  bool alphas_given = false;
  double omega_mhz = 20.0;
  std::string report = "qsl.json";
};

void cmd_qsl(Run& run, const QslOptions& o) {
  const ControlField field = field_from_mhz(o.omega_mhz);
  SeriesCoefficients c;
  bool converged = true;
  double omega_t = 0.0;
  if (o.alphas_given) {
    c.alphas = parse_list(o.alphas);
    omega_t = qsl_time(c);
  } else {
    require(o.order >= 1 && o.order <= 10, "--order must lie in 1..10 (or pass --alphas)");
    const QslMinimum m = minimize_qsl(o.order);
    c = m.coefficients;
    omega_t = m.omega_t;
    converged = m.converged;
  }
  run.config = {{"order", o.order}, {"alphas", o.alphas_given ? Json(c.alphas) : Json(nullptr)},
                {"omega_mhz", o.omega_mhz}};
  Json report = {{"coefficients", c.alphas}, {"omega_t", omega_t},
                 {"T_s", omega_t / field.omega()}, {"T_ns", units::to_ns(omega_t / field.omega())},
                 {"converged", converged}};
  write_json_file(run.artifact(o.report), report);
  run.results = report;
}

struct SimOptions {
  std::string pulse;
  double delta_err_rel = 0.0;
  double omega_err = 0.0;
  std::string out = "trajectory.csv";
};

void cmd_sim(Run& run, const SimOptions& o) {
  const PulseFile file = read_pulse_file(o.pulse);
  const PulseSequence& pulse = file.pulse;
  require(o.delta_err_rel == 0.0 || pulse.field().delta_max() > 0.0,
          "relative detuning error needs a pulse with delta_max > 0");
  const ErrorPair err{o.omega_err, o.delta_err_rel * pulse.field().delta_max()};
  run.config = {{"pulse", o.pulse}, {"delta_err_rel", o.delta_err_rel}, {"omega_err", o.omega_err}};
  const auto traj = evolve_pulse(DensityMatrix::ground(), pulse, err);
  std::ostringstream os;
  os << "step,time_s,population,x,y,z\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const BlochVector b = bloch_vector(traj[k]);
    os << k << ',' << format_double(pulse.dt() * static_cast<double>(k)) << ','
       << format_double(population_excited(traj[k])) << ',' << format_double(b.x) << ','
       << format_double(b.y) << ',' << format_double(b.z) << '\n';
  }
  write_text(run.artifact(o.out), os.str());
  run.results = {{"final_population", population_excited(traj.back())}, {"T_s", pulse.duration()}};
}

struct ScanOptions {
  std::string pulse;
  std::string delta_rel = "0:0:1";
  std::string omega_rel = "0:0:1";
  std::string out = "scan.csv";
};

void cmd_scan(Run& run, const ScanOptions& o) {
  const AxisSpec d = parse_axis(o.delta_rel);
  const AxisSpec w = parse_axis(o.omega_rel);
  const PulseFile file = read_pulse_file(o.pulse);
  run.config = {{"pulse", o.pulse}, {"delta_rel", o.delta_rel}, {"omega_rel", o.omega_rel}};
  const auto grid = relative_error_grid(file.pulse.field().delta_max(), d, w);
  const ScanTable table = scan_robustness(file.pulse, grid, run.threads);
  std::ostringstream os;
  write_scan_csv(os, table);
  write_text(run.artifact(o.out), os.str());
  double lo = 1.0, hi = 0.0;
  for (const auto& r : table) {
    lo = std::min(lo, r.population);
    hi = std::max(hi, r.population);
  }
  run.results = {{"points", table.size()}, {"min_population", lo}, {"max_population", hi}};
}

struct DrlOptions {
  std::string env;
  std::string ppo;
  std::string checkpoint_in;
  std::string checkpoint_out = "checkpoint.json";
  std::string record = "train.csv";
  std::string pulse_out = "pulse.json";
  bool allow_fresh = false;
};

void cmd_drl(Run& run, const DrlOptions& o, const std::string& phase) {
  require(!o.env.empty(), "--env is required");
  EnvConfig env = EnvConfig::from_json(read_json_file(o.env));
  PPOConfig ppo = o.ppo.empty() ? PPOConfig{} : PPOConfig::from_json(read_json_file(o.ppo));
  if (run.seed_given) {
    env.seed = run.seed;
    ppo.seed = run.seed;
  }
  ppo.threads = run.threads;
  std::optional<PolicyNetwork> init;
  if (!o.checkpoint_in.empty()) init = load_checkpoint(o.checkpoint_in);
  run.config = {{"phase", phase}, {"env", env.to_json()}, {"ppo", ppo.to_json()},
                {"checkpoint_in", o.checkpoint_in}};

  if (phase == "evaluate") {
    require(init.has_value(), "drl evaluate needs --checkpoint-in");
    const PulseSequence pulse = extract_pulse(*init, env);
    const Evaluation ev = evaluate_policy(*init, env);
    write_pulse_file(run.artifact(o.pulse_out), pulse, {{"source", "drl"}, {"phase", phase}});
    run.results = {{"nominal_population", ev.nominal}, {"worst_population", ev.worst}};
    return;
  }
  if (phase == "finetune" && !init && !o.allow_fresh)
    throw DomainError("drl finetune needs --checkpoint-in (or --allow-fresh)");
  const TrainPhase tp = phase == "pretrain" ? TrainPhase::Pretrain : TrainPhase::Finetune;
  const TrainResult res = train(env, ppo, tp, init, o.allow_fresh);

  save_checkpoint(run.artifact(o.checkpoint_out), res.best);
  std::ostringstream csv;
  write_train_csv(csv, res.record);
  write_text(run.artifact(o.record), csv.str());
  const PulseSequence pulse = extract_pulse(res.best, env);
  write_pulse_file(run.artifact(o.pulse_out), pulse, {{"source", "drl"}, {"phase", phase}});
  run.results = {{"episodes", res.record.episodes},
                 {"plateaued", res.record.plateaued},
                 {"diverged", res.record.diverged},
                 {"message", res.record.message},
                 {"nominal_population", res.best_evaluation.nominal},
                 {"worst_population", res.best_evaluation.worst}};
  if (res.record.diverged) throw NumericalError(res.record.message);
}

struct GrapeOptions {
  std::string config;
  double omega_mhz = 20.0;
  double delta_max_omega = 2.5;
  double time_ns = 55.0;
  std::size_t steps = 20;
  std::string init = "linear";
  double init_omega = 2.5;
  double learning_rate = 1.0;
  int max_iterations = 5000;
  double target = 0.999;
  std::string out = "pulse.json";
  std::string history = "history.csv";
};

GrapeInit::Kind parse_init_kind(const std::string& s) {
  if (s == "linear") return GrapeInit::Kind::LinearRamp;
  if (s == "constant") return GrapeInit::Kind::Constant;
  if (s == "custom") return GrapeInit::Kind::Custom;
  throw DomainError("grape init must be 'linear', 'constant', or 'custom'");
}

void cmd_grape(Run& run, const GrapeOptions& o) {
  GrapeConfig cfg;
  ControlField field(1.0, 0.0);
  if (!o.config.empty()) {
    const Json j = read_json_file(o.config);
    require(j.is_object(), "grape config: expected a JSON object");
    for (const char* key : {"omega_rad_per_s", "delta_max_rad_per_s", "total_time_s"})
      require(j.contains(key), std::string("grape config: missing field '") + key + "'");
    try {
      field = ControlField(j.at("omega_rad_per_s").get<double>(), j.at("delta_max_rad_per_s").get<double>());
      cfg.total_time = j.at("total_time_s").get<double>();
      cfg.m_steps = j.value("m_steps", cfg.m_steps);
      cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
      cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
      cfg.target_fidelity = j.value("target_fidelity", cfg.target_fidelity);
      cfg.line_search = j.value("line_search", cfg.line_search);
      if (j.contains("init")) {
        const Json& init = j.at("init");
        cfg.init.kind = parse_init_kind(init.value("kind", std::string("linear")));
        cfg.init.value = init.value("value_rad_per_s", 0.0);
        cfg.init.custom = init.value("custom_rad_per_s", std::vector<double>{});
      }
    } catch (const nlohmann::json::exception& e) {
      throw DomainError(std::string("grape config: ") + e.what());
    }
  } else {
    require(std::isfinite(o.delta_max_omega) && o.delta_max_omega >= 0.0,
            "--delta-max-omega must be >= 0");
    const double omega = units::mhz_to_rad_per_s(o.omega_mhz);
    field = field_from_mhz(o.omega_mhz, o.delta_max_omega * o.omega_mhz);
    cfg.total_time = units::ns(o.time_ns);
    cfg.m_steps = o.steps;
    cfg.learning_rate = o.learning_rate;
    cfg.max_iterations = o.max_iterations;
    cfg.target_fidelity = o.target;
    cfg.init.kind = parse_init_kind(o.init);
    require(cfg.init.kind != GrapeInit::Kind::Custom, "custom init needs a --config file");
    cfg.init.value = o.init_omega * omega;
  }
  cfg.validate();
  run.config = {{"omega_rad_per_s", field.omega()}, {"delta_max_rad_per_s", field.delta_max()},
                {"total_time_s", cfg.total_time},  {"m_steps", cfg.m_steps},
                {"learning_rate", cfg.learning_rate}, {"max_iterations", cfg.max_iterations},
                {"target_fidelity", cfg.target_fidelity}, {"line_search", cfg.line_search},
                {"init", {{"kind", o.config.empty() ? o.init : "from-config"},
                          {"value_rad_per_s", cfg.init.value}}}};
  const GrapeResult res = grape_optimize(cfg, field);
  write_pulse_file(run.artifact(o.out), grape_pulse(res, cfg, field), {{"source", "grape"}});
  std::ostringstream csv;
  csv << "iteration,fidelity\n";
  for (std::size_t i = 0; i < res.history.size(); ++i)
    csv << i << ',' << format_double(res.history[i]) << '\n';
  write_text(run.artifact(o.history), csv.str());
  run.results = {{"iterations", res.iterations},
                 {"final_fidelity", res.history.back()},
                 {"reached_target", res.reached_target},
                 {"stagnated", res.stagnated},
                 {"message", res.message}};
  if (!res.reached_target) throw NumericalError("GRAPE stopped below target: " + res.message);
}

unsigned threads_from_env() {
  if (const char* v = std::getenv("QSF_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n >= 1) return static_cast<unsigned>(n);
  }
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pulse synthesis and verification for fast, robust qubit flips", "qsf"};
  app.require_subcommand(1);
  Run run;
  std::string out_dir = ".";
  unsigned threads = 0;
  app.add_option("--seed", run.seed, "Seed for stochastic commands");
  app.add_option("--out-dir", out_dir, "Directory for outputs and manifest.json");
  app.add_option("--threads", threads, "Worker threads (falls back to QSF_THREADS)")
      ->check(CLI::PositiveNumber);

  StaOptions sta;
  auto* sta_cmd = app.add_subcommand("sta", "Shortcut-to-adiabaticity synthesis")->fallthrough();
  sta_cmd->require_subcommand(1);
  auto add_common = [&](CLI::App* c) {
    c->fallthrough();
    c->add_option("--omega-mhz", sta.omega_mhz, "Rabi frequency Omega/2pi in MHz");
    c->add_option("--samples", sta.samples, "Trajectory samples")->check(CLI::Range(8, 10000000));
  };
  auto* ansatz_cmd = sta_cmd->add_subcommand("ansatz", "Polynomial-trigonometric ansatz");
  add_common(ansatz_cmd);
  ansatz_cmd->add_option("--a", sta.a, "Ansatz parameter")->required();
  auto* series_cmd = sta_cmd->add_subcommand("series", "Global-phase series route");
  add_common(series_cmd);
  series_cmd->add_option("--alphas", sta.alphas, "Comma-separated alpha_1..alpha_n");
  for (auto* c : {ansatz_cmd, series_cmd}) {
    c->add_option("--steps", sta.steps, "Piecewise-constant steps")->check(CLI::Range(1, 10000000));
    c->add_option("--out", sta.out, "Pulse JSON");
    c->add_option("--report", sta.report, "Report JSON");
  }
  auto* opt_cmd = sta_cmd->add_subcommand("optimize", "Minimize error sensitivity");
  add_common(opt_cmd);
  opt_cmd->add_option("--route", sta.route, "ansatz or series");
  opt_cmd->add_option("--target", sta.target, "delta or omega");
  opt_cmd->add_option("--out,--report", sta.report, "Report JSON");

  QslOptions qsl;
  auto* qsl_cmd = app.add_subcommand("qsl", "Quantum speed limit of the series route")->fallthrough();
  auto* order_opt = qsl_cmd->add_option("--order", qsl.order, "Minimize over alpha_1..alpha_order");
  auto* alphas_opt = qsl_cmd->add_option("--alphas", qsl.alphas, "Evaluate fixed coefficients");
  order_opt->excludes(alphas_opt);
  qsl_cmd->add_option("--omega-mhz", qsl.omega_mhz, "Rabi frequency Omega/2pi in MHz");
  qsl_cmd->add_option("--out", qsl.report, "Report JSON");

  SimOptions sim;
  auto* sim_cmd = app.add_subcommand("sim", "Simulate a pulse file")->fallthrough();
  sim_cmd->add_option("--pulse", sim.pulse, "Pulse JSON")->required();
  sim_cmd->add_option("--delta-err-rel", sim.delta_err_rel, "Detuning error relative to delta_max");
  sim_cmd->add_option("--omega-err", sim.omega_err, "Relative Rabi error");
  sim_cmd->add_option("--out", sim.out, "Trajectory CSV");

  ScanOptions scan;
  auto* scan_cmd = app.add_subcommand("scan", "Robustness scan over systematic errors")->fallthrough();
  scan_cmd->add_option("--pulse", scan.pulse, "Pulse JSON")->required();
  scan_cmd->add_option("--delta-rel", scan.delta_rel, "min:max:count of delta error / delta_max");
  scan_cmd->add_option("--omega-rel", scan.omega_rel, "min:max:count of relative Rabi error");
  scan_cmd->add_option("--out", scan.out, "Scan CSV");

  DrlOptions drl;
  auto* drl_cmd = app.add_subcommand("drl", "PPO pulse discovery")->fallthrough();
  drl_cmd->require_subcommand(1);
  std::vector<CLI::App*> drl_phases;
  for (const char* phase : {"pretrain", "finetune", "evaluate"}) {
    auto* c = drl_cmd->add_subcommand(phase, std::string("DRL ") + phase)->fallthrough();
    c->add_option("--env", drl.env, "Environment config JSON")->required();
    c->add_option("--ppo", drl.ppo, "PPO config JSON");
    c->add_option("--checkpoint-in", drl.checkpoint_in, "Starting checkpoint");
    c->add_option("--checkpoint-out", drl.checkpoint_out, "Checkpoint to write");
    c->add_option("--record", drl.record, "Training record CSV");
    c->add_option("--pulse-out", drl.pulse_out, "Extracted pulse JSON");
    c->add_flag("--allow-fresh", drl.allow_fresh, "Fine-tune from a fresh network");
    drl_phases.push_back(c);
  }

  GrapeOptions grape;
  auto* grape_cmd = app.add_subcommand("grape", "GRAPE baseline")->fallthrough();
  grape_cmd->add_option("--config", grape.config, "GRAPE config JSON");
  grape_cmd->add_option("--omega-mhz", grape.omega_mhz, "Rabi frequency Omega/2pi in MHz");
  grape_cmd->add_option("--delta-max-omega", grape.delta_max_omega, "Amplitude bound in units of Omega");
  grape_cmd->add_option("--time-ns", grape.time_ns, "Total time in ns");
  grape_cmd->add_option("--steps", grape.steps, "Number of amplitudes");
  grape_cmd->add_option("--init", grape.init, "linear or constant");
  grape_cmd->add_option("--init-omega", grape.init_omega, "Initial ramp end or constant, in units of Omega");
  grape_cmd->add_option("--lr", grape.learning_rate, "Step size in units of Omega");
  grape_cmd->add_option("--max-iter", grape.max_iterations, "Iteration limit");
  grape_cmd->add_option("--target", grape.target, "Target fidelity");
  grape_cmd->add_option("--out", grape.out, "Pulse JSON");
  grape_cmd->add_option("--history", grape.history, "Fidelity history CSV");

  std::vector<const char*> argv{"qsf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kDomainError;
  }

  run.out_dir = out_dir;
  run.seed_given = app.count("--seed") > 0;
  run.threads = threads > 0 ? threads : threads_from_env();
  for (const auto& a : args) run.command += (run.command.empty() ? "" : " ") + a;

  int status = kOk;
  std::string message;
  try {
    fs::create_directories(run.out_dir);
    if (*ansatz_cmd) cmd_sta_ansatz(run, sta);
    else if (*series_cmd) cmd_sta_series(run, sta);
    else if (*opt_cmd) cmd_sta_optimize(run, sta);
    else if (*qsl_cmd) {
      qsl.alphas_given = alphas_opt->count() > 0;
      cmd_qsl(run, qsl);
    } else if (*sim_cmd) cmd_sim(run, sim);
    else if (*scan_cmd) cmd_scan(run, scan);
    else if (*grape_cmd) cmd_grape(run, grape);
    else {
      for (auto* c : drl_phases)
        if (*c) cmd_drl(run, drl, c->get_name());
    }
  } catch (const DomainError& e) {
    status = kDomainError;
    message = e.what();
  } catch (const nlohmann::json::exception& e) {
    status = kDomainError;
    message = std::string("malformed JSON: ") + e.what();
  } catch (const fs::filesystem_error& e) {
    status = kDomainError;
    message = e.what();
  } catch (const NumericalError& e) {
    status = kNumericalError;
    message = e.what();
  } catch (const std::exception& e) {
    status = kNumericalError;
    message = e.what();
  }
  try {
    write_manifest(run, status, message);
  } catch (const std::exception& e) {
    err << "warning: could not write manifest: " << e.what() << "\n";
  }
  if (status != kOk) {
    err << "error: " << message << "\n";
  } else {
    out << run.results.dump(2) << "\n";
  }
  return status;
}

}  // namespace qsf::cli
