#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "voxmatch/matcher.hpp"
#include "voxmatch/nifti.hpp"
#include "voxmatch/report.hpp"
#include "voxmatch/synth.hpp"

namespace voxmatch {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

/// Everything the CLI front end collects. The synth block doubles as the
/// data source for bench runs without input files.
struct RunConfig {
  std::string components_path;
  std::string template_path;
  MetricKind metric = MetricKind::ssd;
  unsigned workers = default_worker_count();
  bool zscore_inputs = false;
  double dice_threshold = 0.0;      // candidate binarization (dice only)
  double template_threshold = 0.0;  // template binarization (dice only)
  std::string out_csv;
  std::string out_json;
  std::string out_nii;
  SynthSpec synth;
  unsigned reps = 5;
};

namespace detail {

struct LoadedComponents {
  std::vector<Volume> volumes;
  std::vector<NiftiHeader> headers;  // aligned with volumes
  std::size_t nonfinite_replaced = 0;
};

/// Files in a components directory, ordered lexicographically by filename
/// so component indices are reproducible.
inline std::vector<std::filesystem::path> list_component_files(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    // synth drops the reference pattern next to its components; it is
    // never a candidate itself
    if (name == "template.nii.gz" || name == "template.nii") continue;
    if (name.ends_with(".nii") || name.ends_with(".nii.gz"))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) {
              return a.filename().string() < b.filename().string();
            });
  return files;
}

inline LoadedComponents load_components(const std::filesystem::path& path) {
  LoadedComponents loaded;
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    files = list_component_files(path);
    if (files.empty())
      throw IoError("no .nii/.nii.gz files in directory " + path.string());
  } else {
    files.push_back(path);
  }
  for (const auto& file : files) {
    LoadReport report;
    std::vector<Volume> volumes = read_volumes(file, &report);
    loaded.nonfinite_replaced += report.nonfinite_replaced;
    for (auto& v : volumes) {
      loaded.volumes.push_back(std::move(v));
      loaded.headers.push_back(report.header);
    }
  }
  return loaded;
}

inline Template load_template(const std::filesystem::path& path,
                              double mask_threshold) {
  LoadReport report;
  std::vector<Volume> volumes = read_volumes(path, &report);
  return Template{std::move(volumes.front()), mask_threshold};
}

inline double time_scoring(std::span<const Volume> components, const Template& tpl,
                           MetricKind metric, const ExecutionConfig& cfg,
                           double candidate_threshold) {
  const auto start = std::chrono::steady_clock::now();
  score_components(components, tpl, metric, cfg, candidate_threshold);
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  return std::max(elapsed.count(), 1e-9);
}

}  // namespace detail

/// Ingest components and template, run the matcher, export the report.
inline int run_match(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.components_path.empty() || cfg.template_path.empty()) {
      err << "error: match needs --components and --template\n";
      return kExitUsage;
    }
    detail::LoadedComponents loaded = detail::load_components(cfg.components_path);
    if (loaded.nonfinite_replaced > 0)
      err << "warning: replaced " << loaded.nonfinite_replaced
          << " non-finite voxels with 0.0\n";
    Template tpl = detail::load_template(cfg.template_path, cfg.template_threshold);

    std::vector<Volume> scored = loaded.volumes;
    Template scored_tpl = tpl;
    if (cfg.zscore_inputs) {
      scored_tpl.volume = zscore(tpl.volume);
      for (std::size_t i = 0; i < scored.size(); ++i) {
        try {
          scored[i] = zscore(scored[i]);
        } catch (const ZeroVariance&) {
          err << "error: component " << i << " (" << scored[i].label
              << ") has zero variance and cannot be z-scored\n";
          return kExitUsage;
        }
      }
    }

    ExecutionConfig exec;
    exec.workers = cfg.workers;
    auto [report, best] =
        extract_network(scored, scored_tpl, cfg.metric, exec, cfg.dice_threshold);

    if (!cfg.out_csv.empty()) write_text_file(cfg.out_csv, report_to_csv(report));
    if (!cfg.out_json.empty())
      write_text_file(cfg.out_json, report_to_json(report).dump(2) + "\n");
    if (!cfg.out_nii.empty()) {
      // export the untouched source component, not the z-scored copy
      const Volume& original = loaded.volumes[report.selected];
      write_volume(cfg.out_nii, original, &loaded.headers[report.selected]);
    }

    const SimilarityScore& top = report.scores.front();
    out << "selected component " << top.component_index << " ("
        << top.component_label << "), " << to_string(report.metric) << " = "
        << detail::format_value(top.value) << " [" << report.component_count
        << " components, workers=" << report.workers << ", "
        << detail::format_value(report.elapsed_seconds) << " s]\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

/// Times the scoring phase serially (workers=1) and in parallel
/// (workers=cfg.workers), `reps` times each, and reports medians + speedup.
inline int run_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.reps < 1) {
      err << "error: --reps must be >= 1\n";
      return kExitUsage;
    }
    std::vector<Volume> components;
    Template tpl;
    if (!cfg.components_path.empty()) {
      if (cfg.template_path.empty()) {
        err << "error: bench with --components also needs --template\n";
        return kExitUsage;
      }
      components = detail::load_components(cfg.components_path).volumes;
      tpl = detail::load_template(cfg.template_path, cfg.template_threshold);
    } else {
      auto generated = generate(cfg.synth);
      components = std::move(generated.first);
      tpl = std::move(generated.second);
    }
    if (cfg.zscore_inputs) {
      tpl.volume = zscore(tpl.volume);
      for (auto& c : components) c = zscore(c);
    }
    if (components.empty()) {
      err << "error: no components to benchmark\n";
      return kExitUsage;
    }

    ExecutionConfig serial_cfg;
    serial_cfg.workers = 1;
    ExecutionConfig parallel_cfg;
    parallel_cfg.workers = cfg.workers;

    // one untimed warm-up per configuration, then the measured repetitions
    detail::time_scoring(components, tpl, cfg.metric, serial_cfg, cfg.dice_threshold);
    std::vector<double> serial_samples, parallel_samples;
    for (unsigned i = 0; i < cfg.reps; ++i)
      serial_samples.push_back(detail::time_scoring(components, tpl, cfg.metric,
                                                    serial_cfg, cfg.dice_threshold));
    detail::time_scoring(components, tpl, cfg.metric, parallel_cfg, cfg.dice_threshold);
    for (unsigned i = 0; i < cfg.reps; ++i)
      parallel_samples.push_back(detail::time_scoring(
          components, tpl, cfg.metric, parallel_cfg, cfg.dice_threshold));

    const BenchmarkResult result = make_benchmark_result(
        std::move(serial_samples), std::move(parallel_samples), cfg.workers,
        components.size(),
        {components.front().nx, components.front().ny, components.front().nz});

    if (!cfg.out_json.empty())
      write_text_file(cfg.out_json, bench_to_json(result).dump(2) + "\n");
    out << bench_table(result);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

/// Materializes a synthetic component set as .nii.gz files plus a manifest.
inline int run_synth(const SynthSpec& spec, const std::filesystem::path& out_dir,
                     std::ostream& out, std::ostream& err) {
  try {
    auto [components, tpl] = generate(spec);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec && !std::filesystem::is_directory(out_dir)) {
      err << "error: cannot create " << out_dir.string() << ": " << ec.message()
          << "\n";
      return kExitUsage;
    }

    int width = 3;
    for (std::size_t n = components.size(); n > 1000; n /= 10) ++width;
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < components.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "comp_%0*zu.nii.gz", width, i);
      write_volume(out_dir / name, components[i]);
      files.push_back(name);
    }
    write_volume(out_dir / "template.nii.gz", tpl.volume);

    nlohmann::json manifest{
        {"seed", spec.seed},
        {"n_components", spec.n_components},
        {"dims", spec.dims},
        {"noise_sigma", spec.noise_sigma},
        {"planted_index",
         spec.planted_index ? nlohmann::json(*spec.planted_index)
                            : nlohmann::json(nullptr)},
        {"template", "template.nii.gz"},
        {"template_mask_threshold", kSynthMaskThreshold},
        {"components", files}};
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    out << "wrote " << components.size() << " components + template to "
        << out_dir.string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace voxmatch
