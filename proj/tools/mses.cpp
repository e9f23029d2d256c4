// Experiment CLI: batch runs, arm comparisons, parameter sweeps and
// convergence plots over the benchmark registry.

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mses/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
};

void apply_common(mses::ExperimentSpec& spec, const CommonFlags& flags) {
  if (!flags.out_dir.empty()) spec.out_dir = flags.out_dir;
  if (flags.seed_set) spec.base_seed = flags.seed;
  if (flags.workers >= 0) spec.workers = flags.workers;
}

int report_runs(const mses::ExperimentResults& results) {
  for (const auto& w : results.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  int failures = 0;
  for (const auto& r : results.records) {
    if (r.failed) {
      ++failures;
      std::cerr << "failed: " << r.arm << "/" << r.problem << " run "
                << r.run_index << ": " << r.error << "\n";
    }
  }
  std::cout << results.records.size() - failures << "/"
            << results.records.size() << " runs completed; results in "
            << results.out_dir << "\n";
  return failures == 0 ? 0 : 1;
}

std::vector<long long> parse_values(const std::string& csv) {
  std::vector<long long> values;
  size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const std::string item =
        csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                   : comma - pos);
    if (!item.empty()) {
      long long v = 0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
        throw std::invalid_argument("--values: '" + item +
                                    "' is not an integer");
      }
      values.push_back(v);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-space evolutionary search experiment runner"};
  app.require_subcommand(1);

  CommonFlags flags;

  std::string spec_path;
  auto* run_cmd = app.add_subcommand("run", "execute an experiment spec");
  run_cmd->add_option("spec", spec_path, "spec file")->required();
  run_cmd->add_option("--out-dir", flags.out_dir, "output directory override");
  auto* seed_opt =
      run_cmd->add_option("--seed", flags.seed, "base seed override");
  run_cmd->add_option("--workers", flags.workers, "worker thread count");

  std::string dir_a, dir_b, compare_out;
  auto* compare_cmd =
      app.add_subcommand("compare", "Wilcoxon comparison of two arm dirs");
  compare_cmd->add_option("dirA", dir_a, "first arm directory")->required();
  compare_cmd->add_option("dirB", dir_b, "second arm directory")->required();
  compare_cmd->add_option("--out", compare_out, "also write a CSV here");

  std::string sweep_spec_path, sweep_param, sweep_values;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "sensitivity sweep over one parameter");
  sweep_cmd->add_option("spec", sweep_spec_path, "spec file")->required();
  sweep_cmd
      ->add_option("--param", sweep_param,
                   "one of A_size, d_s, G_r, G_t, Q")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated integers")
      ->required();
  sweep_cmd->add_option("--out-dir", flags.out_dir, "output directory override");
  auto* sweep_seed_opt =
      sweep_cmd->add_option("--seed", flags.seed, "base seed override");
  sweep_cmd->add_option("--workers", flags.workers, "worker thread count");

  std::string plot_dir, plot_out, plot_problem;
  auto* plot_cmd =
      app.add_subcommand("plot", "convergence chart from an experiment dir");
  plot_cmd->add_option("dir", plot_dir, "experiment output directory")
      ->required();
  plot_cmd->add_option("--out", plot_out, "SVG output path")->required();
  plot_cmd->add_option("--problem", plot_problem,
                       "problem id (required when the dir holds several)");

  CLI11_PARSE(app, argc, argv);
  flags.seed_set = seed_opt->count() > 0 || sweep_seed_opt->count() > 0;

  try {
    if (*run_cmd) {
      mses::ExperimentSpec spec = mses::load_spec(spec_path);
      apply_common(spec, flags);
      return report_runs(mses::run_experiment(spec));
    }

    if (*compare_cmd) {
      const auto report = mses::compare_dirs(dir_a, dir_b);
      std::cout << mses::format_comparison(report);
      if (!compare_out.empty()) mses::write_comparison_csv(report, compare_out);
      return 0;
    }

    if (*sweep_cmd) {
      mses::ExperimentSpec spec = mses::load_spec(sweep_spec_path);
      apply_common(spec, flags);
      mses::sweep(spec, sweep_param, parse_values(sweep_values));
      std::cout << "sweep tables written to " << spec.out_dir << "\n";
      return 0;
    }

    if (*plot_cmd) {
      // Layout: <dir>/<arm>/<problem>/run*.csv
      std::vector<std::string> arms;
      for (const auto& entry : fs::directory_iterator(plot_dir)) {
        if (entry.is_directory()) arms.push_back(entry.path().filename());
      }
      std::sort(arms.begin(), arms.end());
      if (arms.empty()) {
        throw std::invalid_argument("no arm directories under " + plot_dir);
      }
      std::vector<std::string> problems;
      for (const auto& entry :
           fs::directory_iterator(fs::path(plot_dir) / arms.front())) {
        if (entry.is_directory()) problems.push_back(entry.path().filename());
      }
      std::sort(problems.begin(), problems.end());
      std::string problem = plot_problem;
      if (problem.empty()) {
        if (problems.size() != 1) {
          std::string msg = "multiple problems present, pass --problem:";
          for (const auto& p : problems) msg += "\n  " + p;
          throw std::invalid_argument(msg);
        }
        problem = problems.front();
      }
      std::vector<mses::PlotSeries> series;
      for (const auto& arm : arms) {
        const fs::path dir = fs::path(plot_dir) / arm / problem;
        if (!fs::is_directory(dir)) continue;
        mses::PlotSeries s;
        s.name = arm;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
          if (entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
          s.runs.push_back(mses::read_convergence_csv(f.string()));
        }
        if (!s.runs.empty()) series.push_back(std::move(s));
      }
      std::vector<std::string> notes;
      mses::emit_plot(series, plot_out, &notes);
      for (const auto& n : notes) std::cerr << "note: " << n << "\n";
      std::cout << "wrote " << plot_out << " and " << plot_out << ".csv\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
