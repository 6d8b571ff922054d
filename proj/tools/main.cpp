#include <CLI11.hpp>
#include <functional>
#include <iostream>

#include "commands.hpp"
#include "facecamo/errors.hpp"

using namespace facecamo;
using namespace facecamo::cli;

int main(int argc, char** argv) {
  CLI::App app{"facecamo: optimize and evaluate adversarial face-paint patterns"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "facecamo 0.1.0");

  GlobalOptions g;
  std::uint64_t seed = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--jobs", g.jobs, "Worker threads (default: logical cores)")->check(CLI::NonNegativeNumber);
  auto* out_opt = app.add_option("--out", out, "Output directory (overrides output_dir)");
  app.add_option("--run-name", g.run_name, "Fixed run directory name instead of timestamp+hash");
  app.add_flag("--dry-run", g.dry_run, "Validate and print the plan without running");
  app.add_flag("--strict-compat", g.strict_compat, "Literal max-over-window early-stop test");
  // Global options may also follow the subcommand.
  app.fallthrough();

  std::function<int()> action;
  auto run = [&action](std::function<int()> fn) { return [&action, fn] { action = fn; }; };

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate per-model thresholds and clean baselines");
  calibrate->callback(run([&] { return cmd_calibrate(g); }));

  OptimizeOptions opt;
  auto* optimize = app.add_subcommand("optimize", "Optimize a pattern against one model");
  optimize->add_option("--model", opt.model, "Registry model name")->required();
  optimize->add_option("--family", opt.family, "stripes or chevrons")->required();
  optimize->add_option("--restarts", opt.restarts, "Independent restarts")->capture_default_str();
  optimize->add_option("--mode", opt.mode, "constrained or unconstrained (overrides config)");
  optimize->add_option("--backend", opt.backend, "whitebox or blackbox (overrides config)");
  optimize->callback(run([&] { return cmd_optimize(g, opt); }));

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score pattern files on every registry model");
  evaluate->add_option("--params", ev.params, "Pattern parameter files")->check(CLI::ExistingFile);
  evaluate->callback(run([&] { return cmd_evaluate(g, ev); }));

  BaselineOptions bl;
  auto* baseline = app.add_subcommand("random-baseline", "Random-pattern baseline statistics");
  baseline->add_option("--patterns", bl.patterns, "Number of random patterns")->capture_default_str();
  baseline->add_option("--identities", bl.identities, "Number of identities (0: all)")->capture_default_str();
  baseline->callback(run([&] { return cmd_random_baseline(g, bl); }));

  NeighborhoodOptions nb;
  auto* neighborhood = app.add_subcommand("neighborhood", "Perturbation robustness of a pattern");
  neighborhood->add_option("--params", nb.params, "Center pattern file")->required()->check(CLI::ExistingFile);
  neighborhood->add_option("--neighbors", nb.neighbors, "Number of perturbed patterns")->capture_default_str();
  neighborhood->add_option("--delta-color", nb.deltas.color, "Max channel change")->capture_default_str();
  neighborhood->add_option("--delta-width", nb.deltas.width_px, "Max width change, pixels")->capture_default_str();
  neighborhood->add_option("--delta-angle", nb.deltas.angle_deg, "Max angle change, degrees")->capture_default_str();
  neighborhood->callback(run([&] { return cmd_neighborhood(g, nb); }));

  TransferOptions tr;
  auto* transfer = app.add_subcommand("transfer-matrix", "Cross-model transferability table");
  transfer->add_option("--pattern", tr.patterns, "MODEL=PARAMS_FILE, repeatable")->required();
  transfer->callback(run([&] { return cmd_transfer_matrix(g, tr); }));

  IngestOptions in;
  auto* ingest = app.add_subcommand("ingest", "Evaluate externally produced images");
  ingest->add_option("--manifest", in.manifest, "External image manifest (JSONL)")->required();
  ingest->add_option("--simulated", in.simulated, "PATTERN_ID=PARAMS_FILE for the simulated-vs-generated test");
  ingest->callback(run([&] { return cmd_ingest(g, in); }));

  RenderOptions rd;
  auto* render = app.add_subcommand("render-pattern", "Render a pattern file to PNG");
  render->add_option("--params", rd.params, "Pattern parameter file")->required()->check(CLI::ExistingFile);
  render->add_option("--size", rd.size, "Canvas size in pixels")->capture_default_str();
  render->add_option("--output", rd.output, "PNG path (default: inside a run directory)");
  render->callback(run([&] { return cmd_render_pattern(g, rd); }));

  ToyDataOptions td;
  auto* toy_data = app.add_subcommand("make-toy-data", "Generate the procedural toy face dataset");
  toy_data->add_option("--output", td.output, "Dataset directory")->required();
  toy_data->add_option("--identities", td.identities, "Number of identities")->capture_default_str();
  toy_data->callback(run([&] { return cmd_make_toy_data(g, td); }));

  TrainToyOptions tt;
  auto* train = app.add_subcommand("train-toy", "Train the toy embedding model");
  train->add_option("--dataset", tt.dataset, "Dataset manifest")->required();
  train->add_option("--name", tt.name, "Model name")->capture_default_str();
  train->add_option("--epochs", tt.epochs, "Training epochs")->capture_default_str();
  train->add_option("--weights", tt.weights, "Output weights file")->required();
  train->add_option("--registry", tt.registry, "Registry file to create or update");
  train->callback(run([&] { return cmd_train_toy(g, tt); }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;
  if (*out_opt) g.out = out;

  try {
    return action();
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const CapabilityError& e) {
    std::cerr << "error: capability: " << e.what() << "\n";
    return 1;
  } catch (const CalibrationError& e) {
    std::cerr << "error: calibration: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "error: contract: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
