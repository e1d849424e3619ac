// infoflow: train small noisy feedforward networks, estimate the mutual
// information between inputs and hidden layers, evaluate the matching
// worst-case calculators and run clustering diagnostics.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "infoflow/errors.hpp"

namespace {

using infoflow::cli::CommonArgs;

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "JSON experiment configuration");
  cmd->add_option("--set", args.overrides,
                  "override a config key, e.g. --set network.beta=0.01")
      ->take_all();
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t v) { args.seed = v; },
      "override the run seed");
  cmd->add_option_function<int>(
      "--threads", [&args](int v) { args.threads = v; },
      "worker threads (0 = hardware)");
  cmd->add_option_function<std::string>(
      "--out-dir", [&args](const std::string& v) { args.out_dir = v; },
      "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "mutual information estimation and clustering diagnostics for noisy "
      "feedforward networks"};
  app.require_subcommand(1);

  CommonArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train", "train a network and write checkpoints plus the loss trace");
  add_common(train, train_args);

  CommonArgs est_args;
  std::string est_checkpoints;
  CLI::App* estimate = app.add_subcommand(
      "estimate",
      "per-checkpoint mutual information and clustering diagnostics");
  add_common(estimate, est_args);
  estimate->add_option("--checkpoints", est_checkpoints,
                       "directory holding checkpoint_epoch_*.ckpt "
                       "(default: the out-dir)");

  infoflow::cli::TheoryArgs theory_args;
  CLI::App* theory = app.add_subcommand(
      "theory", "evaluate the worst-case risk, bias and MSE calculators");
  theory->add_option("--d", theory_args.dim, "layer dimension");
  theory->add_option("--beta", theory_args.beta, "noise standard deviation");
  theory->add_option("--n", theory_args.n, "sample count");
  theory->add_option("--n-mc", theory_args.n_mc, "Monte Carlo draws");
  theory->add_option("--epsilon", theory_args.epsilon,
                     "bias bound parameter");
  theory->add_option("--delta", theory_args.delta, "bias target");
  theory->add_flag("--bounded", theory_args.bounded,
                   "bounded-support class (default on)");
  theory->add_flag("--subgaussian", theory_args.subgaussian,
                   "subgaussian class");
  theory->add_option("--mu", theory_args.mu, "subgaussian mean-norm bound");
  theory->add_option("--K", theory_args.k, "subgaussian parameter");
  theory->add_option("--M", theory_args.second_moment,
                     "second-moment bound for the MC MSE");
  theory->add_option("--out-dir", theory_args.out_dir, "output directory");

  CommonArgs toy_args_common;
  infoflow::cli::ToyArgs toy_args;
  CLI::App* toy = app.add_subcommand(
      "toy", "run a built-in minimal example end to end");
  add_common(toy, toy_args_common);
  toy->add_option("--which", toy_args.which, "tanh1 | leaky_relu2");
  toy->add_option("--betas", toy_args.betas,
                  "comma-separated noise levels to sweep")
      ->delimiter(',');

  infoflow::cli::AnalyzeDumpArgs dump_args;
  CLI::App* analyze = app.add_subcommand(
      "analyze-dump", "clustering diagnostics on activation dump files");
  analyze->add_option("dumps", dump_args.dumps, "activation dump files")
      ->required();
  analyze->add_option("--out-dir", dump_args.out_dir, "output directory");
  analyze->add_option("--bin-size", dump_args.bin_size, "bin width");
  analyze->add_option("--lo", dump_args.lo, "range lower edge");
  analyze->add_option("--hi", dump_args.hi, "range upper edge");
  analyze->add_option("--hist-bins", dump_args.histogram_bins,
                      "distance histogram bins");
  analyze->add_option("--seed", dump_args.seed, "pair subsampling seed");

  CommonArgs advise_common;
  infoflow::cli::AdviseArgs advise_args;
  CLI::App* advise = app.add_subcommand(
      "advise-n", "halving-ladder sample size recommendation");
  add_common(advise, advise_common);
  advise->add_option("--layer", advise_args.layer, "layer to probe");
  advise->add_option("--tol", advise_args.target_tol,
                     "stability tolerance in nats");
  advise->add_option("--cap", advise_args.cap, "largest n to try");
  advise->add_option("--checkpoint", advise_args.checkpoint,
                     "estimate on a trained checkpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return infoflow::cli::cmd_train(
          infoflow::cli::resolve_config(train_args));
    }
    if (estimate->parsed()) {
      return infoflow::cli::cmd_estimate(
          infoflow::cli::resolve_config(est_args), est_checkpoints);
    }
    if (theory->parsed()) {
      return infoflow::cli::cmd_theory(theory_args);
    }
    if (toy->parsed()) {
      return infoflow::cli::cmd_toy(toy_args_common, toy_args);
    }
    if (analyze->parsed()) {
      return infoflow::cli::cmd_analyze_dump(dump_args);
    }
    if (advise->parsed()) {
      return infoflow::cli::cmd_advise_n(
          infoflow::cli::resolve_config(advise_common), advise_args);
    }
  } catch (const infoflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const infoflow::ParseError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const infoflow::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
