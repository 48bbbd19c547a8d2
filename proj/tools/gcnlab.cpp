// gcnlab: seeded simulator for discriminator-cooperative sequence training
// on exactly enumerable spaces. All results land in plain CSV/JSON files.

#include "CLI11.hpp"

#include "gcn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gcnlab - cooperative discrete-GAN training lab"};
  app.require_subcommand(1);

  gcn::cli::TrainArgs train_args;
  std::uint64_t seed_override = 0;
  auto* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", train_args.config_path, "config file")->required();
  train->add_option("--out", train_args.out_dir, "output directory")->required();
  auto* seed_opt = train->add_option("--seed", seed_override, "override trainer.seed");

  gcn::cli::ExactArgs exact_args;
  auto* exact = app.add_subcommand("exact", "run the exact oracle dynamics");
  exact->add_option("--config", exact_args.config_path, "config file")->required();
  exact->add_option("--out", exact_args.out_dir, "output directory")->required();

  gcn::cli::CurvesArgs curves_args;
  auto* curves = app.add_subcommand("curves", "temperature sweep from a checkpoint");
  curves->add_option("--checkpoint", curves_args.checkpoint_path, "checkpoint file")
      ->required();
  curves->add_option("--out", curves_args.out_dir, "output directory")->required();
  curves->add_option("--temps", curves_args.temperatures, "temperature grid")
      ->delimiter(',');
  curves->add_option("--samples", curves_args.n_samples, "draws per temperature");
  curves->add_option("--references", curves_args.n_references, "reference pool size");
  curves->add_option("--seed", curves_args.seed, "sampling seed");

  gcn::cli::DumpMctsArgs dump_args;
  auto* dump = app.add_subcommand("dump-mcts", "trace one guided decode to JSON");
  dump->add_option("--checkpoint", dump_args.checkpoint_path, "checkpoint file")
      ->required();
  dump->add_option("--context", dump_args.context, "context id");
  dump->add_option("--out", dump_args.out_path, "output JSON path")->required();
  dump->add_option("--seed", dump_args.seed, "decode seed");
  dump->add_option("--rounds", dump_args.rounds, "simulation rounds per token");
  dump->add_option("--c-puct", dump_args.c_puct, "exploration constant");
  dump->add_option("--sigma", dump_args.sigma, "expansion nucleus mass");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    if (seed_opt->count() > 0) train_args.seed = seed_override;
    return gcn::cli::cmd_train(train_args);
  }
  if (exact->parsed()) return gcn::cli::cmd_exact(exact_args);
  if (curves->parsed()) return gcn::cli::cmd_curves(curves_args);
  if (dump->parsed()) return gcn::cli::cmd_dump_mcts(dump_args);
  return gcn::cli::kExitError;
}
