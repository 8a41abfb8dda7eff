#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "courtesy/cli.hpp"

namespace {

void add_common(CLI::App* cmd, courtesy::cli::CommonArgs* args, bool with_scenario) {
  if (with_scenario)
    cmd->add_option("scenario,--scenario", args->scenario, "built-in scenario name or JSON file")
        ->required();
  cmd->add_option("--set", args->overrides, "override a scenario value, key.path=value")
      ->take_all();
  cmd->add_option("--seed", args->seed, "random seed");
  cmd->add_option("--out", args->out_dir, "output directory (default $COURTESY_OUT or .)");
  cmd->add_option("--workers", args->workers, "parallel workers for sweeps and batches");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"courteous trajectory planning simulator and IRL toolkit"};
  app.require_subcommand(1);

  courtesy::cli::CommonArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run one closed-loop scenario");
  add_common(sim, &sim_args, true);

  courtesy::cli::CommonArgs sweep_args;
  std::vector<double> lambda_grid = {0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0};
  CLI::App* sweep = app.add_subcommand("sweep", "sweep the courtesy weight over a grid");
  add_common(sweep, &sweep_args, true);
  sweep->add_option("--lambda-grid", lambda_grid, "courtesy weights, ascending")->take_all();

  courtesy::cli::CommonArgs fit_common;
  courtesy::cli::IrlFitArgs fit_args;
  std::string fit_mode = "maintain";
  std::string courtesy_flag = "on";
  CLI::App* fit = app.add_subcommand("irl-fit", "learn cost weights from demonstrations");
  add_common(fit, &fit_common, false);
  fit->add_option("--dataset", fit_args.dataset, "trajectory CSV or demos.json");
  fit->add_option("--synthetic", fit_args.synthetic_count, "generate N planner demonstrations");
  fit->add_option("--family", fit_args.family, "scenario family for synthetic demos");
  fit->add_option("--demo-length", fit_args.demo_length, "synthetic demonstration length");
  fit->add_option("--true-lambda", fit_args.true_lambda, "courtesy weight of the generator");
  fit->add_option("--mode", fit_mode, "alternative world: not_there|collaborative|maintain");
  fit->add_option("--courtesy-feature", courtesy_flag, "fit the courtesy-feature model: on|off");
  fit->add_option("--epochs", fit_args.config.max_epochs, "maximum fitting epochs");

  courtesy::cli::CommonArgs eval_common;
  courtesy::cli::IrlEvalArgs eval_args;
  std::string eval_mode = "maintain";
  std::string eval_courtesy = "on";
  CLI::App* eval = app.add_subcommand("irl-eval", "score learned weights on held-out data");
  add_common(eval, &eval_common, false);
  eval->add_option("--weights", eval_args.weight_files, "weight files to compare")
      ->required()
      ->take_all();
  eval->add_option("--dataset", eval_args.dataset, "trajectory CSV or demos.json")->required();
  eval->add_option("--mode", eval_mode, "alternative world: not_there|collaborative|maintain");
  eval->add_option("--courtesy-feature", eval_courtesy, "use the courtesy feature: on|off");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : courtesy::cli::kExitUsage;
  }

  try {
    if (sim->parsed()) return courtesy::cli::cmd_simulate(sim_args);
    if (sweep->parsed()) return courtesy::cli::cmd_sweep(sweep_args, lambda_grid);
    if (fit->parsed()) {
      fit_args.config.courtesy_mode = courtesy::courtesy_mode_from_string(fit_mode);
      fit_args.fit_courtesy = courtesy_flag != "off";
      if (fit_args.dataset.empty() && fit_args.synthetic_count <= 0)
        throw courtesy::ConfigError("irl-fit needs --dataset or --synthetic N");
      return courtesy::cli::cmd_irl_fit(fit_common, fit_args);
    }
    if (eval->parsed()) {
      eval_args.config.courtesy_mode = courtesy::courtesy_mode_from_string(eval_mode);
      eval_args.courtesy_feature = eval_courtesy != "off";
      return courtesy::cli::cmd_irl_eval(eval_common, eval_args);
    }
  } catch (const courtesy::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return courtesy::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return courtesy::cli::kExitRuntime;
  }
  return courtesy::cli::kExitUsage;
}
