#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mses/engine.hpp"
#include "mses/stats.hpp"

namespace mses {

struct ExperimentArm {
  std::string name;          // e.g. "mses-de", "single-llso"
  bool single_space = false;
  MsesConfig config;         // fully materialized for this arm
};

// A batch of independent runs: problems x arms x seeds. Parsed from a
// key-value spec file (see load_spec).
struct ExperimentSpec {
  std::vector<std::string> problem_ids;
  std::vector<ExperimentArm> arms;
  int runs = 25;
  std::uint64_t base_seed = 1;
  std::string out_dir = "out";
  int workers = 0;  // 0: hardware concurrency
  std::set<std::string> explicit_keys;
};

// Parses a spec file of `key = value` lines ('#' starts a comment). Unknown
// keys are rejected with a suggestion; malformed values are reported with the
// offending key and line number.
ExperimentSpec load_spec(const std::string& path);
ExperimentSpec parse_spec_text(const std::string& text,
                               const std::string& origin);

struct RunRecord {
  std::string problem;
  std::string arm;
  int run_index = 0;
  std::uint64_t seed = 0;
  double final_objective = 0.0;
  long long fe_used = 0;
  bool failed = false;
  std::string error;
};

struct ExperimentResults {
  std::string out_dir;
  std::vector<std::string> problems;   // spec order
  std::vector<std::string> arm_names;  // spec order
  std::vector<RunRecord> records;      // deterministic order
  std::vector<std::string> warnings;

  bool any_failed() const;
  std::vector<double> finals(const std::string& problem,
                             const std::string& arm) const;
};

// Executes all runs (concurrently up to spec.workers), writing one
// convergence CSV and one events JSONL per run under
// <out_dir>/<arm>/<problem>/, plus <out_dir>/summary.csv. Run failures are
// recorded and the remaining runs continue.
ExperimentResults run_experiment(const ExperimentSpec& spec);

void write_summary_csv(const ExperimentResults& results,
                       const std::string& path);

struct ProblemComparison {
  std::string problem;
  double mean_a = 0, std_a = 0, median_a = 0;
  double mean_b = 0, std_b = 0, median_b = 0;
  double statistic = 0, p_value = 1;
  std::string verdict;  // "+", "-", or the similarity sign
  std::string note;
};

struct ComparisonReport {
  std::string arm_a, arm_b;
  std::vector<ProblemComparison> rows;
};

// Per-problem Wilcoxon comparison of final objectives. Verdict is "+" when
// arm A's median is significantly lower at the 0.05 level, "-" when higher,
// and the similarity sign otherwise.
ComparisonReport compare(
    const std::string& arm_a, const std::string& arm_b,
    const std::map<std::string, std::vector<double>>& finals_a,
    const std::map<std::string, std::vector<double>>& finals_b);

// Reads final objectives from <dir>/<problem>/run*.csv for two arm
// directories laid out by run_experiment.
ComparisonReport compare_dirs(const std::string& dir_a,
                              const std::string& dir_b);

void write_comparison_csv(const ComparisonReport& report,
                          const std::string& path);
std::string format_comparison(const ComparisonReport& report);

struct SweepTable {
  std::string param;
  std::vector<std::string> problems;
  std::vector<std::string> arms;
  // value[arm index][problem index] = mean final objective
  std::vector<std::vector<double>> values;
};

// Runs the experiment once per parameter value (param is one of A_size, d_s,
// G_r, G_t, Q; applied to every mses arm) plus any single-space baseline arms
// once. All values are validated before any run starts. Writes sweep.csv and
// sweep_normalized.csv under spec.out_dir and returns the raw table.
SweepTable sweep(const ExperimentSpec& spec, const std::string& param,
                 const std::vector<long long>& values);

// Divides each problem column by its largest entry, so the worst arm maps to
// exactly 1.0 and lower is better.
SweepTable normalize_sweep(const SweepTable& table);

void write_sweep_csv(const SweepTable& table, const std::string& path);

// --- run artifact io ---------------------------------------------------

// CSV schema: header "fe,best", 17 significant digits, LF line endings.
void write_convergence_csv(const RunResult& result, const std::string& path);
std::vector<ConvergencePoint> read_convergence_csv(const std::string& path);
void write_events_jsonl(const RunResult& result, const std::string& path);

// --- plotting ----------------------------------------------------------

// Best-so-far value of a run at evaluation count fe (step interpolation:
// the last recorded point at or before fe; the first point before that).
double step_interpolate(const std::vector<ConvergencePoint>& log,
                        long long fe);

// Mean across runs of the step-interpolated best-so-far on a common grid.
std::vector<ConvergencePoint> average_step_series(
    const std::vector<std::vector<ConvergencePoint>>& runs,
    const std::vector<long long>& grid);

std::vector<long long> union_grid(
    const std::vector<std::vector<ConvergencePoint>>& runs);

struct PlotSeries {
  std::string name;
  std::vector<std::vector<ConvergencePoint>> runs;
};

// Writes a log10-scale SVG line chart of run-averaged best objective versus
// evaluations, one series per arm, and the averaged series as CSV next to it
// (same path with .csv appended). Non-positive values fall back to a
// symlog-style transform and add a note to `notes`.
void emit_plot(const std::vector<PlotSeries>& series,
               const std::string& svg_path,
               std::vector<std::string>* notes = nullptr);

}  // namespace mses
