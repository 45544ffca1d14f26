#include <CLI11.hpp>

#include "polyp/cli.hpp"

// Thin argument-parsing shell; all command behavior lives in the library so
// it stays testable without spawning processes.

namespace {

void add_train_flags(CLI::App* sc, polyp::TrainConfig& t) {
  sc->add_option("--epochs", t.epochs, "training epochs");
  sc->add_option("--lr", t.lr0, "initial learning rate");
  sc->add_option("--lr-decay-factor", t.lr_decay_factor, "multiplier applied at each decay step");
  sc->add_option("--lr-decay-every", t.lr_decay_every, "epochs between learning-rate decays");
  sc->add_option("--momentum", t.momentum, "SGD momentum");
  sc->add_option("--weight-decay", t.weight_decay, "L2 penalty added to gradients");
  sc->add_option("--batch-size", t.batch_size, "SGD batch size");
  sc->add_option("--seed", t.seed, "seed for shuffling, jitter, and init");
  sc->add_option("--jitter-brightness", t.jitter.brightness, "brightness jitter range");
  sc->add_option("--jitter-contrast", t.jitter.contrast, "contrast jitter range");
  sc->add_option("--jitter-saturation", t.jitter.saturation, "saturation jitter range");
  sc->add_option("--jitter-hue", t.jitter.hue, "hue jitter range");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-resolution cascade for colorectal polyp patch classification"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  int rc = 0;

  polyp::ExtractArgs extract_args;
  {
    auto* sc = app.add_subcommand("extract", "tile slide images into patches at a physical scale");
    sc->add_option("--input-dir", extract_args.input_dir,
                   "directory holding <label>/<slide>.png source images")
        ->required();
    sc->add_option("--out", extract_args.out_dir, "corpus output root")->required();
    sc->add_option("--scale-um", extract_args.scale_um, "patch side in micrometers");
    sc->add_option("--mpp", extract_args.mpp, "image resolution in micrometers per pixel");
    sc->add_option("--manifest", extract_args.manifest_path,
                   "manifest path (default: <out>/manifest.csv)");
    sc->add_option("--train-fraction", extract_args.train_fraction,
                   "fraction of slides assigned to the train split");
    sc->add_option("--split-seed", extract_args.split_seed, "seed for the slide split");
    sc->callback(
        [&] { rc = polyp::run_guarded([&] { return polyp::cmd_extract(extract_args); }); });
  }

  polyp::SynthArgs synth_args;
  {
    auto* sc = app.add_subcommand("synth", "generate the synthetic validation corpus");
    sc->add_option("--config", synth_args.config_path,
                   "key=value generator config (defaults when omitted)");
    sc->add_option("--out", synth_args.out_dir, "corpus output root")->required();
    sc->callback([&] { rc = polyp::run_guarded([&] { return polyp::cmd_synth(synth_args); }); });
  }

  polyp::TrainArgs train_args;
  {
    auto* sc = app.add_subcommand("train", "train one cascade-stage classifier");
    sc->add_option("--manifest", train_args.manifest_path, "corpus manifest")->required();
    sc->add_option("--task", train_args.task, "stage task")
        ->required()
        ->check(CLI::IsMember({"hp", "adenoma", "grade"}));
    sc->add_option("--scale-um", train_args.scale_um, "training patch scale in micrometers");
    sc->add_flag("--full-res", train_args.full_res,
                 "keep native resolution instead of resampling to 224 px");
    sc->add_option("--out-model", train_args.out_model, "model output directory")->required();
    sc->add_option("--backbone", train_args.backbone, "model family")
        ->check(CLI::IsMember({"smallnet", "linear"}));
    sc->add_option("--max-crops-per-parent", train_args.max_crops_per_parent,
                   "crop budget per parent patch when tiling down");
    add_train_flags(sc, train_args.train);
    sc->callback([&] { rc = polyp::run_guarded([&] { return polyp::cmd_train(train_args); }); });
  }

  polyp::SweepArgs sweep_args;
  {
    auto* sc = app.add_subcommand("sweep", "train and score a 6-class baseline per scale");
    sc->add_option("--manifest", sweep_args.manifest_path, "corpus manifest")->required();
    sc->add_option("--scales", sweep_args.scales, "comma-separated scales in micrometers")
        ->required()
        ->delimiter(',');
    sc->add_option("--out-report", sweep_args.out_report, "report JSON path")->required();
    sc->add_option("--backbone", sweep_args.backbone, "model family")
        ->check(CLI::IsMember({"smallnet", "linear"}));
    sc->add_option("--max-crops-per-parent", sweep_args.max_crops_per_parent,
                   "crop budget per parent patch when tiling down");
    add_train_flags(sc, sweep_args.train);
    sc->callback([&] { rc = polyp::run_guarded([&] { return polyp::cmd_sweep(sweep_args); }); });
  }

  polyp::InferArgs infer_args;
  {
    auto* sc = app.add_subcommand("infer", "run the cascade over a manifest's coarse patches");
    sc->add_option("--models-dir", infer_args.models_dir,
                   "directory holding hp/, adenoma/, and grade/ model dirs")
        ->required();
    sc->add_option("--input", infer_args.input_manifest, "corpus manifest")->required();
    sc->add_option("--config", infer_args.config_path, "key=value cascade config");
    sc->add_option("--out", infer_args.out_path, "predictions output (JSON Lines)")->required();
    sc->add_option("--split", infer_args.split, "classify train, test, or all records")
        ->check(CLI::IsMember({"train", "test", "all"}));

    // explicit flags beat config-file values; defaults live in CascadeConfig
    polyp::CascadeConfig defaults;
    auto override_flag = [&](const std::string& name, std::optional<double>& slot, double shown,
                             const std::string& help) {
      auto* opt = sc->add_option(name);
      opt->description(help + " [" + polyp::format_number(shown) + "]");
      opt->each([&slot](const std::string& v) { slot = std::stod(v); });
      opt->check(CLI::Number);
    };
    override_flag("--sigma-fine", infer_args.sigma_fine, defaults.sigma_fine,
                  "fine stage scale in micrometers");
    override_flag("--sigma-coarse", infer_args.sigma_coarse, defaults.sigma_coarse,
                  "coarse stage scale in micrometers");
    override_flag("--t-hp", infer_args.t_hp, defaults.t_hp, "HP decision threshold");
    override_flag("--t-d", infer_args.t_d, defaults.t_d, "high-grade ratio threshold");
    override_flag("--mpp", infer_args.mpp, defaults.mpp,
                  "micrometers per pixel (default: manifest value)");
    sc->callback([&] { rc = polyp::run_guarded([&] { return polyp::cmd_infer(infer_args); }); });
  }

  polyp::EvalArgs eval_args;
  {
    auto* sc = app.add_subcommand("evaluate", "score predictions against manifest truth");
    sc->add_option("--predictions", eval_args.predictions_path, "predictions JSON Lines")
        ->required();
    sc->add_option("--manifest", eval_args.manifest_path, "corpus manifest")->required();
    sc->add_option("--report", eval_args.report_path,
                   "report JSON path (text table written alongside)")
        ->required();
    sc->add_option("--plot", eval_args.plot_path, "confusion heat-map PNG path");
    sc->callback([&] { rc = polyp::run_guarded([&] { return polyp::cmd_evaluate(eval_args); }); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return rc;
}
