// voxmatch: match brain components against a network template.
//
//   voxmatch match --components DIR --template FILE [--metric ssd] ...
//   voxmatch bench [--seed N --n-components N --dims 64,64,64] ...
//   voxmatch synth OUT_DIR --seed N [--planted-index K] ...

#include <array>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "voxmatch/pipeline.hpp"

namespace {

void add_metric_option(CLI::App& app, voxmatch::RunConfig& cfg) {
  app.add_option_function<std::string>(
         "--metric",
         [&cfg](const std::string& name) {
           cfg.metric = voxmatch::parse_metric(name);
         },
         "similarity metric")
      ->check(CLI::IsMember({"ssd", "ncc", "dice"}))
      ->default_str("ssd");
}

void add_synth_options(CLI::App& app, voxmatch::SynthSpec& spec,
                       std::array<std::size_t, 3>& dims) {
  app.add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  app.add_option("--n-components", spec.n_components, "number of components")
      ->capture_default_str();
  app.add_option("--dims", dims, "volume dimensions NX,NY,NZ")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--noise-sigma", spec.noise_sigma, "additive noise sigma")
      ->capture_default_str();
  app.add_option("--planted-index", spec.planted_index,
                 "component built as template plus noise");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volumetric component matching"};
  app.require_subcommand(1);

  voxmatch::RunConfig cfg;
  std::array<std::size_t, 3> dims = cfg.synth.dims;
  std::string synth_out_dir;

  CLI::App* match = app.add_subcommand("match", "score components against a template");
  match->add_option("--components", cfg.components_path,
                    ".nii/.nii.gz file or directory")
      ->required();
  match->add_option("--template", cfg.template_path, "template volume")->required();
  add_metric_option(*match, cfg);
  match->add_option("--workers", cfg.workers, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  match->add_flag("--zscore", cfg.zscore_inputs, "z-score volumes before scoring");
  match->add_option("--dice-threshold", cfg.dice_threshold,
                    "component binarization threshold (dice)")
      ->capture_default_str();
  match->add_option("--template-threshold", cfg.template_threshold,
                    "template binarization threshold (dice)")
      ->capture_default_str();
  match->add_option("--out-csv", cfg.out_csv, "write ranked scores as CSV");
  match->add_option("--out-json", cfg.out_json, "write full report as JSON");
  match->add_option("--out-nii", cfg.out_nii, "write best-matching component");

  CLI::App* bench = app.add_subcommand("bench", "measure serial vs parallel scoring");
  bench->add_option("--components", cfg.components_path,
                    "score real data instead of synthetic");
  bench->add_option("--template", cfg.template_path, "template volume");
  add_metric_option(*bench, cfg);
  bench->add_option("--workers", cfg.workers, "parallel worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_flag("--zscore", cfg.zscore_inputs, "z-score volumes before scoring");
  bench->add_option("--reps", cfg.reps, "timed repetitions per mode")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--out-json", cfg.out_json, "write benchmark result as JSON");
  add_synth_options(*bench, cfg.synth, dims);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("out_dir", synth_out_dir, "output directory")->required();
  add_synth_options(*synth, cfg.synth, dims);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? voxmatch::kExitOk : voxmatch::kExitUsage;
  }

  cfg.synth.dims = dims;
  try {
    if (match->parsed()) return voxmatch::run_match(cfg, std::cout, std::cerr);
    if (bench->parsed()) return voxmatch::run_bench(cfg, std::cout, std::cerr);
    return voxmatch::run_synth(cfg.synth, synth_out_dir, std::cout, std::cerr);
  } catch (const voxmatch::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return voxmatch::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return voxmatch::kExitInternal;
  }
}
