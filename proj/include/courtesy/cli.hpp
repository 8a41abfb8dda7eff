#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "courtesy/csv.hpp"
#include "courtesy/data_io.hpp"

namespace courtesy::cli {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string scenario;                // built-in name or path to a JSON file
  std::vector<std::string> overrides;  // repeated --set key.path=value
  std::uint64_t seed = 0;
  std::string out_dir;                 // defaults to $COURTESY_OUT or "."
  int workers = 1;
};

inline std::string resolve_out_dir(const std::string& requested) {
  if (!requested.empty()) return requested;
  if (const char* env = std::getenv("COURTESY_OUT")) return env;
  return ".";
}

inline Scenario resolve_scenario(const std::string& ref, const std::vector<std::string>& overrides,
                                 std::uint64_t seed) {
  nlohmann::json doc;
  if (std::filesystem::exists(ref) && !std::filesystem::is_directory(ref)) {
    std::ifstream in(ref);
    doc = nlohmann::json::parse(in);
  } else {
    doc = builtin_scenario(ref);
  }
  for (const auto& kv : overrides) apply_override(doc, kv);
  Scenario sc = doc.get<Scenario>();
  sc.optimizer.seed = seed;
  sc.validate();
  return sc;
}

/// Written before any outputs; records everything needed to reproduce the run.
inline void write_manifest(const std::string& out_dir, const std::string& command,
                           const CommonArgs& args, const nlohmann::json& resolved) {
  nlohmann::json m = {{"command", command},
                      {"scenario", args.scenario},
                      {"overrides", args.overrides},
                      {"seed", args.seed},
                      {"workers", args.workers},
                      {"out_dir", out_dir},
                      {"tool_version", kToolVersion},
                      {"wall_clock", std::chrono::duration_cast<std::chrono::milliseconds>(
                                         std::chrono::system_clock::now().time_since_epoch())
                                         .count()},
                      {"resolved", resolved}};
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
  out << m.dump(2) << "\n";
}

inline std::string run_tag(const Scenario& sc) {
  return sc.name + "_" + to_string(sc.courtesy.mode) + "_" + fmt(sc.courtesy.lambda);
}

inline void write_step_log(const Scenario& sc, const SimLog& log, const std::string& path) {
  std::vector<std::string> header = {
      "step",          "time",         "robot_x",        "robot_y",      "robot_heading",
      "robot_speed",   "human_x",      "human_y",        "human_heading", "human_speed",
      "robot_accel",   "robot_steer",  "human_accel",    "human_steer",  "selfish_cost",
      "courtesy_value", "alt_cost",    "compound_cost",  "planner_iterations",
      "planner_converged", "gap",      "overlap"};
  for (std::size_t i = 0; i < sc.others.size(); ++i) {
    header.push_back("other" + std::to_string(i) + "_x");
    header.push_back("other" + std::to_string(i) + "_y");
  }
  CsvWriter csv(header);
  for (const auto& st : log.steps) {
    std::vector<std::string> row = {std::to_string(st.step),
                                    fmt(st.time),
                                    fmt(st.state.robot.x),
                                    fmt(st.state.robot.y),
                                    fmt(st.state.robot.heading),
                                    fmt(st.state.robot.speed),
                                    fmt(st.state.human.x),
                                    fmt(st.state.human.y),
                                    fmt(st.state.human.heading),
                                    fmt(st.state.human.speed),
                                    fmt(st.robot_u.accel),
                                    fmt(st.robot_u.steer),
                                    fmt(st.human_u.accel),
                                    fmt(st.human_u.steer),
                                    fmt(st.selfish_cost),
                                    fmt(st.courtesy_value),
                                    fmt(st.alt_cost),
                                    fmt(st.compound_cost),
                                    std::to_string(st.planner_iterations),
                                    st.planner_converged ? "1" : "0",
                                    fmt(st.gap),
                                    st.overlap ? "1" : "0"};
    for (const auto& o : st.state.others) {
      row.push_back(fmt(o.x));
      row.push_back(fmt(o.y));
    }
    csv.row(row);
  }
  csv.save(path);
}

inline void append_metrics_rows(CsvWriter& csv, const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("nan"); };
  csv.row({"min_gap", fmt(m.min_gap)});
  csv.row({"human_min_accel", fmt(m.human_min_accel)});
  csv.row({"inconvenience", fmt(m.inconvenience)});
  csv.row({"merge_order", to_string(m.merge_order)});
  csv.row({"human_avg_speed", fmt(m.human_avg_speed)});
  csv.row({"collision", m.collision ? "1" : "0"});
  csv.row({"any_overlap", m.any_overlap ? "1" : "0"});
  csv.row({"realized_human_cost", fmt(m.realized_human_cost)});
  csv.row({"alt_episode_cost", fmt(m.alt_episode_cost)});
  csv.row({"robot_conflict_time", opt(m.robot_conflict_time)});
  csv.row({"human_conflict_time", opt(m.human_conflict_time)});
  csv.row({"human_cleared_zone_time", opt(m.human_cleared_zone_time)});
  csv.row({"robot_entered_opposing_time", opt(m.robot_entered_opposing_time)});
}

inline int cmd_simulate(const CommonArgs& args) {
  const std::string out_dir = resolve_out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  const Scenario sc = resolve_scenario(args.scenario, args.overrides, args.seed);
  write_manifest(out_dir, "simulate", args, nlohmann::json(sc));

  SimSettings settings{args.seed, args.workers};
  const SimLog log = simulate(sc, settings);
  const std::string tag = run_tag(sc);
  write_step_log(sc, log, out_dir + "/" + tag + ".csv");
  CsvWriter summary({"metric", "value"});
  append_metrics_rows(summary, log.metrics);
  summary.save(out_dir + "/" + tag + "_summary.csv");
  if (log.aborted) {
    std::fprintf(stderr, "planner failure: %s (partial log written)\n", log.error.c_str());
    return kExitRuntime;
  }
  return kExitOk;
}

inline int cmd_sweep(const CommonArgs& args, const std::vector<double>& lambda_grid) {
  const std::string out_dir = resolve_out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  const Scenario sc = resolve_scenario(args.scenario, args.overrides, args.seed);
  nlohmann::json resolved = sc;
  resolved["lambda_grid"] = lambda_grid;
  write_manifest(out_dir, "sweep", args, resolved);

  SimSettings settings{args.seed, args.workers};
  const auto rows = sweep_lambda(sc, lambda_grid, settings);

  CsvWriter summary({"lambda", "min_gap", "human_min_accel", "inconvenience", "merge_order",
                     "human_avg_speed", "collision", "realized_human_cost", "alt_episode_cost",
                     "error"});
  for (const auto& row : rows) {
    Scenario named = sc;
    named.courtesy.lambda = row.lambda;
    if (row.metrics) {
      write_step_log(named, row.log, out_dir + "/" + run_tag(named) + ".csv");
      const Metrics& m = *row.metrics;
      summary.row({fmt(row.lambda), fmt(m.min_gap), fmt(m.human_min_accel), fmt(m.inconvenience),
                   to_string(m.merge_order), fmt(m.human_avg_speed), m.collision ? "1" : "0",
                   fmt(m.realized_human_cost), fmt(m.alt_episode_cost), ""});
    } else {
      summary.row({fmt(row.lambda), "", "", "", "", "", "", "", "", row.error});
    }
  }
  summary.save(out_dir + "/sweep_summary.csv");
  for (const auto& row : rows)
    if (!row.error.empty()) return kExitRuntime;
  return kExitOk;
}

struct IrlFitArgs {
  std::string dataset;        // CSV path; empty when synthetic
  int synthetic_count = 0;    // >0 generates demos with the planner
  std::string family = "lane_change_slow";
  int demo_length = 20;
  double true_lambda = 5.0;
  CostWeights true_weights{3.0, 4.0, 0.05, 0.3, 4.0, 0.0};
  bool fit_selfish = true;
  bool fit_courtesy = true;   // --courtesy-feature off disables
  IrlConfig config;
};

inline std::vector<Demonstration> resolve_demos(const IrlFitArgs& fit_args, std::uint64_t seed) {
  if (!fit_args.dataset.empty()) {
    if (fit_args.dataset.size() > 5 && fit_args.dataset.substr(fit_args.dataset.size() - 5) == ".json") {
      std::ifstream in(fit_args.dataset);
      if (!in) throw ConfigError("cannot open demos: " + fit_args.dataset);
      return nlohmann::json::parse(in).get<std::vector<Demonstration>>();
    }
    return load_dataset(fit_args.dataset, DatasetConfig{});
  }
  SyntheticOptions opt;
  opt.family = fit_args.family;
  opt.demo_length = fit_args.demo_length;
  return generate_synthetic_demos(fit_args.true_weights, fit_args.true_lambda,
                                  fit_args.synthetic_count, seed, opt);
}

inline void write_weights(const CostWeights& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << nlohmann::json(w).dump(2) << "\n";
}

inline CostWeights read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weights: " + path);
  return nlohmann::json::parse(in).get<CostWeights>();
}

inline void write_curve(const std::vector<double>& curve, const std::string& path) {
  CsvWriter csv({"epoch", "negative_log_likelihood"});
  for (std::size_t i = 0; i < curve.size(); ++i) csv.row({std::to_string(i), fmt(curve[i])});
  csv.save(path);
}

inline int cmd_irl_fit(const CommonArgs& args, const IrlFitArgs& fit_args) {
  const std::string out_dir = resolve_out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  nlohmann::json resolved = {{"dataset", fit_args.dataset},
                             {"synthetic_count", fit_args.synthetic_count},
                             {"family", fit_args.family},
                             {"demo_length", fit_args.demo_length},
                             {"true_lambda", fit_args.true_lambda}};
  write_manifest(out_dir, "irl-fit", args, resolved);

  const auto demos = resolve_demos(fit_args, args.seed);
  if (demos.empty()) throw ConfigError("no demonstrations to fit");
  {
    std::ofstream out(out_dir + "/demos.json");
    out << nlohmann::json(demos).dump() << "\n";
  }

  std::optional<FitResult> selfish;
  if (fit_args.fit_selfish) {
    IrlConfig cfg = fit_args.config;
    cfg.use_courtesy_feature = false;
    selfish = fit(demos, cfg);
    write_weights(selfish->weights, out_dir + "/weights_selfish.json");
    write_curve(selfish->curve, out_dir + "/curve_selfish.csv");
  }
  if (fit_args.fit_courtesy) {
    IrlConfig cfg = fit_args.config;
    cfg.use_courtesy_feature = true;
    if (selfish) {
      Eigen::VectorXd init(6);
      init << selfish->raw(0), selfish->raw(1), selfish->raw(2), selfish->raw(3), selfish->raw(4), 0.0;
      cfg.init = init;
    }
    const FitResult courteous = fit(demos, cfg);
    write_weights(courteous.weights, out_dir + "/weights_courtesy.json");
    write_curve(courteous.curve, out_dir + "/curve_courtesy.csv");
  }
  return kExitOk;
}

struct IrlEvalArgs {
  std::vector<std::string> weight_files;
  std::string dataset;  // demos.json or NGSIM csv
  bool courtesy_feature = true;
  IrlConfig config;
};

inline int cmd_irl_eval(const CommonArgs& args, const IrlEvalArgs& eval_args) {
  const std::string out_dir = resolve_out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);
  write_manifest(out_dir, "irl-eval", args,
                 {{"weights", eval_args.weight_files}, {"dataset", eval_args.dataset}});

  IrlFitArgs loader;
  loader.dataset = eval_args.dataset;
  const auto demos = resolve_demos(loader, args.seed);
  if (demos.empty()) throw ConfigError("no demonstrations to evaluate");

  CsvWriter table({"weights_file", "demo", "med", "mean_gap", "min_gap", "ok", "error"});
  CsvWriter summary({"weights_file", "mean_med", "evaluated"});
  for (const auto& wf : eval_args.weight_files) {
    const CostWeights w = read_weights(wf);
    IrlConfig cfg = eval_args.config;
    cfg.use_courtesy_feature = eval_args.courtesy_feature && w.courtesy > 0.0;
    const EvalSummary es = evaluate(w, demos, cfg);
    for (std::size_t i = 0; i < es.rows.size(); ++i) {
      const EvalRow& r = es.rows[i];
      table.row({wf, std::to_string(i), fmt(r.med), fmt(r.mean_gap), fmt(r.min_gap),
                 r.ok ? "1" : "0", r.error});
    }
    summary.row({wf, fmt(es.mean_med), std::to_string(es.evaluated)});
  }
  table.save(out_dir + "/eval_med.csv");
  summary.save(out_dir + "/eval_summary.csv");
  return kExitOk;
}

}  // namespace courtesy::cli
