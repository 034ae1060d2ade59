// Command-line front end: run experiments, check lemmas, generate environments.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvi/cvi.hpp"

namespace {

int cmd_run(const std::string& path, const std::string& seeds, long long horizon, const std::string& out,
            unsigned workers, bool optimism, bool quiet) {
  cvi::ExperimentConfig cfg = cvi::load_experiment_config(path);
  if (!seeds.empty()) cfg.seeds = cvi::parse_seed_list(seeds);
  if (horizon > 0) cfg.horizon = horizon;
  if (!out.empty()) cfg.out_dir = out;
  if (workers > 0) cfg.max_workers = workers;
  if (optimism) cfg.check_optimism = true;

  const auto res = cvi::run_experiment(cfg);
  bool all_ok = true;
  if (!quiet) {
    std::printf("algorithm %s  J* %.10g  sp(v*) %.10g\n", cvi::to_string(cfg.algorithm).c_str(), res.oracle.j_star,
                res.oracle.span_v_star);
    std::printf("gamma %.10g  H %.10g  beta %.10g  lambda %.10g  clip %s\n", res.resolved.gamma,
                res.resolved.span_bound, res.resolved.bonus_factor, res.resolved.lambda,
                cvi::to_string(res.resolved.clip_mode).c_str());
    std::printf("%8s %10s %16s %8s %12s  %s\n", "seed", "T", "regret", "K", "runtime_ms", "invariants");
  }
  for (const auto& r : res.rows) {
    all_ok = all_ok && r.invariants_ok();
    if (quiet) continue;
    std::string flags = "ok";
    if (!r.invariants_ok()) {
      flags.clear();
      for (const auto& n : cvi::failed_flag_names(r.invariant_flags)) flags += (flags.empty() ? "" : ",") + n;
    }
    std::printf("%8llu %10lld %16.6f %8lld %12.3f  %s\n", static_cast<unsigned long long>(r.seed),
                static_cast<long long>(r.horizon), r.final_regret, static_cast<long long>(r.episode_count),
                r.runtime_ms, flags.c_str());
  }
  if (!quiet && !cfg.out_dir.empty()) std::printf("wrote %zu files to %s\n", res.written_files.size(), cfg.out_dir.c_str());
  return all_ok ? 0 : 1;
}

int cmd_lemmas(bool inverted, bool quiet) {
  cvi::LemmaSuiteOptions opt;
  opt.inverted_meta_check = inverted;
  const auto report = cvi::lemma_suite(opt);
  if (!quiet) std::cout << report.to_string();
  return report.all_passed() ? 0 : 1;
}

int cmd_gen(const std::string& path, const std::string& out) {
  const auto cfg = cvi::load_experiment_config(path);
  const auto env = cvi::build_environment(cfg);
  const std::string text = cvi::write_environment(env);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    cvi::write_text_file(out, text);
  }
  return 0;
}

int cmd_oracle(const std::string& env_path, double gamma) {
  const auto mdp = cvi::as_tabular(cvi::read_environment_file(env_path));
  std::cout << cvi::to_document(cvi::solve_oracle(mdp, gamma)).to_string();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discounted clipped value iteration experiments"};
  app.require_subcommand(1);

  std::string run_config, run_seeds, run_out;
  long long run_horizon = 0;
  unsigned run_workers = 0;
  bool run_optimism = false, run_quiet = false;
  auto* run = app.add_subcommand("run", "Run an experiment config over its seeds");
  run->add_option("config", run_config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", run_seeds, "Seed list, e.g. 0..9 or 1,4,7");
  run->add_option("--horizon", run_horizon, "Override the horizon T");
  run->add_option("--out", run_out, "Output directory for CSV files");
  run->add_option("--workers", run_workers, "Worker threads (default: hardware threads)");
  run->add_flag("--check-optimism", run_optimism, "Also check V_t >= V* against the oracle");
  run->add_flag("--quiet", run_quiet, "Print nothing; exit status reports invariants");

  bool lem_inverted = false, lem_quiet = false;
  auto* lemmas = app.add_subcommand("lemmas", "Check the supporting inequalities numerically");
  lemmas->add_flag("--inverted", lem_inverted, "Add an inequality that is expected to fail");
  lemmas->add_flag("--quiet", lem_quiet, "Print nothing; exit status reports the result");

  std::string gen_config, gen_out;
  auto* gen = app.add_subcommand("gen", "Write the environment described by a config");
  gen->add_option("config", gen_config, "Experiment config file")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output file (default stdout)");

  std::string oracle_env;
  double oracle_gamma = 0.99;
  auto* oracle = app.add_subcommand("oracle", "Solve an environment file exactly");
  oracle->add_option("env", oracle_env, "Environment file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--gamma", oracle_gamma, "Discount factor for V*");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_config, run_seeds, run_horizon, run_out, run_workers, run_optimism, run_quiet);
    if (*lemmas) return cmd_lemmas(lem_inverted, lem_quiet);
    if (*gen) return cmd_gen(gen_config, gen_out);
    if (*oracle) return cmd_oracle(oracle_env, oracle_gamma);
  } catch (const cvi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
