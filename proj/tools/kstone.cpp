// Copyright 2026 The kstone Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kstone: kidney-stone screening pipeline, evaluation and dataset tooling.
//
// Progress and summaries go to stderr; every artifact goes to a file.
// Exit codes: 0 success, 1 some items failed, 2 usage or configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kstone/dataprep.hpp"
#include "kstone/errors.hpp"
#include "kstone/eval.hpp"
#include "kstone/pipeline.hpp"
#include "kstone/results_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kItemFailures = 1;
constexpr int kUsageError = 2;

struct RunOptions {
  fs::path manifest;
  fs::path config;
  std::optional<fs::path> crops;
  fs::path out = "results.jsonl";
  std::optional<int> workers;
  std::optional<fs::path> timings;
  std::optional<fs::path> correction_log;
  std::size_t reps = 5;
  fs::path bench_out = "bench.json";
};

struct ScoreOptions {
  fs::path results;
  fs::path labels;
  fs::path out = "report.json";
  std::optional<fs::path> reference;
  double tol = 0.03;
};

struct ManifestOptions {
  fs::path root;
  fs::path out = "manifest.csv";
  std::optional<char> subject_delim;
};

struct AugmentOptions {
  fs::path manifest;
  fs::path out;
  std::optional<std::string> filter;
  std::uint64_t seed = 0;
  float rotate_fraction = 0.5f;
  float rotate_range = 25.f;
  bool no_flip = false;
  std::string target = "stone";
};

kstone::PipelineConfig load_config(const RunOptions& o) {
  kstone::PipelineConfig cfg = kstone::load_pipeline_config(o.config);
  if (o.workers) cfg.workers = *o.workers;
  if (o.crops) cfg.crop_output_dir = *o.crops;
  cfg.validate();
  return cfg;
}

int cmd_run(const RunOptions& o) {
  const auto cfg = load_config(o);
  const auto manifest = kstone::read_manifest(o.manifest);
  std::cerr << "run: " << manifest.size() << " images, " << cfg.workers << " worker(s)\n";
  const auto results = kstone::run_pipeline(
      manifest, cfg, kstone::make_stages(cfg), [](std::size_t done, std::size_t total) {
        if (done % 50 == 0 || done == total) {
          std::cerr << "  " << done << "/" << total << "\n";
        }
      });
  kstone::write_results_jsonl(o.out, results);
  if (o.timings) kstone::write_timings_jsonl(*o.timings, results);

  std::ofstream log_file;
  if (o.correction_log) {
    log_file.open(*o.correction_log, std::ios::trunc);
    if (!log_file) throw kstone::IoError("cannot write " + o.correction_log->string());
  }
  std::ostream& log = o.correction_log ? static_cast<std::ostream&>(log_file) : std::cerr;

  std::size_t failed = 0, excluded = 0, rois = 0;
  for (const auto& r : results) {
    if (r.error) {
      ++failed;
      std::cerr << "error: " << r.stem << " [" << r.error->stage << "] "
                << r.error->message << "\n";
      continue;
    }
    log << kstone::correction_log_line(r.stem, r.detection_count, *r.outcome) << "\n";
    if (kstone::is_excluded(*r.outcome)) ++excluded;
    rois += r.roi_verdicts.size();
  }
  std::cerr << "run: " << results.size() << " results, " << excluded << " excluded, "
            << rois << " ROI verdicts, " << failed << " failed -> " << o.out.string()
            << "\n";
  return failed ? kItemFailures : kOk;
}

int cmd_bench(const RunOptions& o) {
  const auto cfg = load_config(o);
  const auto manifest = kstone::read_manifest(o.manifest);
  const auto report = kstone::bench(manifest, cfg, o.reps);
  kstone::write_json(o.bench_out, kstone::to_json(report));
  std::cerr << "bench: " << report.images << " images x " << report.repetitions
            << " reps (" << report.timed_runs << " timed)\n";
  for (const auto& [stage, s] : report.stages) {
    std::cerr << "  " << stage << ": mean " << s.mean_ms << " ms, median "
              << s.median_ms << " ms, p95 " << s.p95_ms << " ms (" << s.samples
              << " samples)\n";
  }
  return report.failed_runs ? kItemFailures : kOk;
}

int cmd_score(const ScoreOptions& o) {
  const auto results = kstone::read_results_jsonl(o.results);
  const auto labels = kstone::read_labels_csv(o.labels);
  const auto report = kstone::score(results, labels);
  auto j = kstone::to_json(report);
  bool all_pass = true;
  if (o.reference) {
    const auto checks = kstone::compare_to_reference(
        report, kstone::read_reference_json(*o.reference), o.tol);
    j["reference_checks"] = kstone::to_json(checks);
    for (const auto& c : checks) {
      all_pass = all_pass && c.pass;
      std::cerr << (c.pass ? "PASS " : "FAIL ") << c.metric << ": observed "
                << (c.observed ? std::to_string(*c.observed) : "absent")
                << ", reference " << c.reference << ", tol " << c.tolerance << "\n";
    }
  }
  kstone::write_json(o.out, j);
  const auto& cm = report.crop_matrix;
  std::cerr << "score: tp=" << cm.tp << " fp=" << cm.fp << " fn=" << cm.fn
            << " tn=" << cm.tn << ", excluded images " << report.excluded_images
            << " -> " << o.out.string() << "\n";
  return all_pass ? kOk : kItemFailures;
}

int cmd_manifest(const ManifestOptions& o) {
  const auto m = kstone::build_manifest(o.root, {o.subject_delim});
  kstone::write_manifest(m, o.out);
  const auto sizes = m.split_sizes();
  std::cerr << "manifest: train " << sizes.at(kstone::Split::kTrain) << ", val "
            << sizes.at(kstone::Split::kVal) << ", test "
            << sizes.at(kstone::Split::kTest) << " -> " << o.out.string() << "\n";
  return kOk;
}

int cmd_augment(const AugmentOptions& o) {
  auto m = kstone::read_manifest(o.manifest);
  if (o.filter) {
    const auto eq = o.filter->find('=');
    if (eq == std::string::npos) {
      throw kstone::ConfigError("--filter expects key=value");
    }
    m = kstone::filter_manifest(m, o.filter->substr(0, eq), o.filter->substr(eq + 1));
  }
  kstone::AugmentConfig cfg;
  cfg.seed = o.seed;
  cfg.rotate_fraction = o.rotate_fraction;
  cfg.rotate_range_deg = o.rotate_range;
  cfg.flip = !o.no_flip;
  const auto target = kstone::parse_label(o.target);
  if (!target) throw kstone::ConfigError("--target must be stone or normal");
  cfg.target_class = *target;

  const auto result = kstone::augment(m, cfg, o.out);
  kstone::write_manifest(result.manifest, o.out / "manifest.csv");
  for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
  std::cerr << "augment: " << m.size() << " in, " << result.manifest.size() << " out -> "
            << (o.out / "manifest.csv").string() << "\n";
  return result.errors.empty() ? kOk : kItemFailures;
}

// Accept `pipeline run`, `eval score`, `dataprep manifest` as spellings of
// the flat subcommands.
std::vector<std::string> strip_group(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.size() >= 2) {
    const auto& g = args[0];
    const auto& s = args[1];
    if ((g == "pipeline" && (s == "run" || s == "bench")) ||
        (g == "eval" && s == "score") ||
        (g == "dataprep" && (s == "manifest" || s == "augment"))) {
      args.erase(args.begin());
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kstone: kidney detection, ROI correction and stone classification"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto add_pipeline_flags = [&](CLI::App* sub) {
    sub->add_option("--manifest", run_opts.manifest, "Manifest CSV")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--config", run_opts.config, "Key-value pipeline config")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--workers", run_opts.workers, "Worker threads (overrides config)")
        ->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Run the pipeline over a manifest");
  add_pipeline_flags(run);
  run->add_option("--crops", run_opts.crops, "Write ROI crops here (overrides config)");
  run->add_option("--out", run_opts.out, "Results JSON Lines")->capture_default_str();
  run->add_option("--timings", run_opts.timings, "Per-image stage timings JSON Lines");
  run->add_option("--correction-log", run_opts.correction_log,
                  "Correction log (default: stderr)");

  auto* bench = app.add_subcommand("bench", "Per-stage latency benchmark");
  add_pipeline_flags(bench);
  bench->add_option("--reps", run_opts.reps, "Repetitions per image")->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench->add_option("--out", run_opts.bench_out, "Latency report JSON")->capture_default_str();

  ScoreOptions score_opts;
  auto* score = app.add_subcommand("score", "Evaluate results against labels");
  score->add_option("--results", score_opts.results)->required()->check(CLI::ExistingFile);
  score->add_option("--labels", score_opts.labels, "crop_id,label CSV")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--out", score_opts.out, "Report JSON")->capture_default_str();
  score->add_option("--reference", score_opts.reference, "Reference metrics JSON")
      ->check(CLI::ExistingFile);
  score->add_option("--tol", score_opts.tol, "Absolute tolerance for --reference")->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  ManifestOptions manifest_opts;
  auto* manifest = app.add_subcommand("manifest", "Build a manifest from a directory tree");
  manifest->add_option("--root", manifest_opts.root, "<root>/<split>/<label>/<image>")
      ->required()
      ->check(CLI::ExistingDirectory);
  manifest->add_option("--out", manifest_opts.out, "Manifest CSV")->capture_default_str();
  manifest->add_option("--subject-delim", manifest_opts.subject_delim,
                       "Subject id is the file name up to this character");

  AugmentOptions aug_opts;
  auto* augment = app.add_subcommand("augment", "Offline augmentation of a crop set");
  augment->add_option("--manifest", aug_opts.manifest)->required()->check(CLI::ExistingFile);
  augment->add_option("--out", aug_opts.out, "Output directory")->required();
  augment->add_option("--filter", aug_opts.filter, "key=value row filter, e.g. split=train");
  augment->add_option("--seed", aug_opts.seed, "RNG seed")->capture_default_str();
  augment->add_option("--rotate-fraction", aug_opts.rotate_fraction, "Share of target images rotated")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  augment->add_option("--rotate-range", aug_opts.rotate_range, "Degrees, symmetric")->capture_default_str()
      ->check(CLI::Range(0.0, 180.0));
  augment->add_flag("--no-flip", aug_opts.no_flip, "Skip horizontal flip copies");
  augment->add_option("--target", aug_opts.target, "Class to augment")->capture_default_str()
      ->check(CLI::IsMember({"stone", "normal"}));

  auto args = strip_group(argc, argv);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*bench) return cmd_bench(run_opts);
    if (*score) return cmd_score(score_opts);
    if (*manifest) return cmd_manifest(manifest_opts);
    if (*augment) return cmd_augment(aug_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
