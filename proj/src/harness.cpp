#include "mses/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace fs = std::filesystem;

namespace mses {

namespace {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void spec_error(const std::string& origin, int line,
                             const std::string& message) {
  throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " +
                              message);
}

const std::vector<std::string>& valid_keys() {
  static const std::vector<std::string> keys = {
      "problems", "arms",     "optimizer", "runs",
      "base_seed", "out_dir", "workers",   "max_FEs",
      "NP",        "d_s",     "G_t",       "G_r",
      "Q",         "P_count", "archive_capacity", "dedup_tol",
      "F",         "CR",      "NL",        "phi"};
  return keys;
}

std::string normalize_key(const std::string& k) {
  std::string out;
  for (const char c : k) {
    if (c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggest_key(const std::string& unknown) {
  const std::string norm = normalize_key(unknown);
  // Prefer keys whose normalized form prefixes the unknown (or vice versa);
  // ties go to the longest such key. Fall back to edit distance.
  std::string best;
  size_t best_len = 0;
  for (const auto& key : valid_keys()) {
    const std::string nk = normalize_key(key);
    if ((norm.rfind(nk, 0) == 0 || nk.rfind(norm, 0) == 0) &&
        nk.size() > best_len) {
      best = key;
      best_len = nk.size();
    }
  }
  if (!best.empty()) return best;
  size_t best_dist = SIZE_MAX;
  for (const auto& key : valid_keys()) {
    const size_t d = edit_distance(norm, normalize_key(key));
    if (d < best_dist) {
      best_dist = d;
      best = key;
    }
  }
  return best_dist <= 3 ? best : "";
}

template <typename T>
T parse_number(const std::string& value, const std::string& key,
               const std::string& origin, int line) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  std::from_chars_result res{};
  if constexpr (std::is_floating_point_v<T>) {
    res = std::from_chars(begin, end, out);
  } else {
    res = std::from_chars(begin, end, out);
  }
  if (res.ec != std::errc() || res.ptr != end) {
    spec_error(origin, line,
               "invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

OptimizerKind parse_optimizer(const std::string& value,
                              const std::string& origin, int line) {
  if (value == "de") return OptimizerKind::De;
  if (value == "llso") return OptimizerKind::Llso;
  spec_error(origin, line,
             "invalid optimizer '" + value + "' (expected de or llso)");
}

struct ArmSpec {
  std::string mode;
  std::string optimizer;  // empty: use the global optimizer
};

std::vector<ArmSpec> parse_arms(const std::string& value,
                                const std::string& origin, int line) {
  std::vector<ArmSpec> arms;
  for (const auto& item : split_list(value)) {
    ArmSpec arm;
    const auto colon = item.find(':');
    arm.mode = colon == std::string::npos ? item : item.substr(0, colon);
    if (colon != std::string::npos) arm.optimizer = item.substr(colon + 1);
    if (arm.mode != "mses" && arm.mode != "single") {
      spec_error(origin, line,
                 "invalid arm '" + item + "' (expected mses or single, "
                 "optionally :de or :llso)");
    }
    if (!arm.optimizer.empty() && arm.optimizer != "de" &&
        arm.optimizer != "llso") {
      spec_error(origin, line, "invalid arm optimizer in '" + item + "'");
    }
    arms.push_back(std::move(arm));
  }
  if (arms.empty()) spec_error(origin, line, "arms list is empty");
  return arms;
}

void ensure_directories(const ExperimentSpec& spec) {
  for (const auto& arm : spec.arms) {
    for (const auto& problem : spec.problem_ids) {
      fs::create_directories(fs::path(spec.out_dir) / arm.name / problem);
    }
  }
}

std::vector<double> finals_from_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<double> finals;
  for (const auto& f : files) {
    const auto log = read_convergence_csv(f.string());
    if (!log.empty()) finals.push_back(log.back().best);
  }
  return finals;
}

const std::set<std::string>& transfer_only_keys() {
  static const std::set<std::string> keys = {"d_s", "G_t", "G_r", "Q",
                                             "P_count", "archive_capacity"};
  return keys;
}

}  // namespace

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open spec file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_spec_text(buffer.str(), path);
}

ExperimentSpec parse_spec_text(const std::string& text,
                               const std::string& origin) {
  ExperimentSpec spec;
  MsesConfig config;
  OptimizerKind global_opt = OptimizerKind::De;
  std::vector<ArmSpec> arm_specs = {{"mses", ""}, {"single", ""}};
  std::map<std::string, int> seen;

  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      spec_error(origin, line_no, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (std::find(valid_keys().begin(), valid_keys().end(), key) ==
        valid_keys().end()) {
      const std::string hint = suggest_key(key);
      spec_error(origin, line_no,
                 "unknown key '" + key + "'" +
                     (hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
    if (const auto it = seen.find(key); it != seen.end()) {
      spec_error(origin, line_no,
                 "duplicate key '" + key + "' (first set on line " +
                     std::to_string(it->second) + ")");
    }
    seen[key] = line_no;
    spec.explicit_keys.insert(key);

    if (key == "problems") {
      spec.problem_ids = split_list(value);
      if (spec.problem_ids.empty()) {
        spec_error(origin, line_no, "problems list is empty");
      }
      for (const auto& id : spec.problem_ids) {
        try {
          parse_problem_id(id);
        } catch (const std::exception& e) {
          spec_error(origin, line_no, e.what());
        }
      }
    } else if (key == "arms") {
      arm_specs = parse_arms(value, origin, line_no);
    } else if (key == "optimizer") {
      global_opt = parse_optimizer(value, origin, line_no);
    } else if (key == "runs") {
      spec.runs = parse_number<int>(value, key, origin, line_no);
      if (spec.runs < 1) spec_error(origin, line_no, "runs must be >= 1");
    } else if (key == "base_seed") {
      spec.base_seed =
          parse_number<std::uint64_t>(value, key, origin, line_no);
    } else if (key == "out_dir") {
      spec.out_dir = value;
    } else if (key == "workers") {
      spec.workers = parse_number<int>(value, key, origin, line_no);
      if (spec.workers < 0) spec_error(origin, line_no, "workers must be >= 0");
    } else if (key == "max_FEs") {
      config.max_evaluations =
          parse_number<long long>(value, key, origin, line_no);
      if (config.max_evaluations < 1) {
        spec_error(origin, line_no, "max_FEs must be >= 1");
      }
    } else if (key == "NP") {
      config.np = parse_number<int>(value, key, origin, line_no);
      if (config.np < 1) spec_error(origin, line_no, "NP must be >= 1");
    } else if (key == "d_s") {
      config.simplified_dim = parse_number<int>(value, key, origin, line_no);
      if (config.simplified_dim < 1) {
        spec_error(origin, line_no, "d_s must be >= 1");
      }
    } else if (key == "G_t") {
      config.transfer_interval = parse_number<int>(value, key, origin, line_no);
      if (config.transfer_interval < 1) {
        spec_error(origin, line_no, "G_t must be >= 1");
      }
    } else if (key == "G_r") {
      config.reconstruct_interval =
          parse_number<int>(value, key, origin, line_no);
      if (config.reconstruct_interval < 1) {
        spec_error(origin, line_no, "G_r must be >= 1");
      }
    } else if (key == "Q") {
      config.transfer_to_original =
          parse_number<int>(value, key, origin, line_no);
      if (config.transfer_to_original < 1) {
        spec_error(origin, line_no, "Q must be >= 1");
      }
    } else if (key == "P_count") {
      config.transfer_to_simplified =
          parse_number<int>(value, key, origin, line_no);
      if (config.transfer_to_simplified < 1) {
        spec_error(origin, line_no, "P_count must be >= 1");
      }
    } else if (key == "archive_capacity") {
      config.archive_capacity = parse_number<int>(value, key, origin, line_no);
      if (config.archive_capacity < 1) {
        spec_error(origin, line_no, "archive_capacity must be >= 1");
      }
    } else if (key == "dedup_tol") {
      config.dedup_tol = parse_number<double>(value, key, origin, line_no);
      if (!(config.dedup_tol >= 0.0)) {
        spec_error(origin, line_no, "dedup_tol must be >= 0");
      }
    } else if (key == "F") {
      config.optimizer.f = parse_number<double>(value, key, origin, line_no);
      if (!(config.optimizer.f > 0.0 && config.optimizer.f <= 2.0)) {
        spec_error(origin, line_no, "F must be in (0, 2]");
      }
    } else if (key == "CR") {
      config.optimizer.cr = parse_number<double>(value, key, origin, line_no);
      if (!(config.optimizer.cr >= 0.0 && config.optimizer.cr <= 1.0)) {
        spec_error(origin, line_no, "CR must be in [0, 1]");
      }
    } else if (key == "NL") {
      config.optimizer.levels = parse_number<int>(value, key, origin, line_no);
      if (config.optimizer.levels < 2) {
        spec_error(origin, line_no, "NL must be >= 2");
      }
    } else if (key == "phi") {
      config.optimizer.phi = parse_number<double>(value, key, origin, line_no);
      if (!(config.optimizer.phi >= 0.0 && config.optimizer.phi <= 1.0)) {
        spec_error(origin, line_no, "phi must be in [0, 1]");
      }
    }
  }

  if (spec.problem_ids.empty()) {
    throw std::invalid_argument(origin + ": spec must list problems");
  }

  std::set<std::string> names;
  for (const auto& arm_spec : arm_specs) {
    ExperimentArm arm;
    arm.single_space = arm_spec.mode == "single";
    arm.config = config;
    arm.config.optimizer.kind = arm_spec.optimizer.empty()
                                    ? global_opt
                                    : (arm_spec.optimizer == "de"
                                           ? OptimizerKind::De
                                           : OptimizerKind::Llso);
    arm.config.single_space = arm.single_space;
    arm.name = arm_spec.mode + std::string("-") +
               (arm.config.optimizer.kind == OptimizerKind::De ? "de" : "llso");
    if (!names.insert(arm.name).second) {
      throw std::invalid_argument(origin + ": duplicate arm '" + arm.name +
                                  "'");
    }
    spec.arms.push_back(std::move(arm));
  }
  return spec;
}

bool ExperimentResults::any_failed() const {
  return std::any_of(records.begin(), records.end(),
                     [](const RunRecord& r) { return r.failed; });
}

std::vector<double> ExperimentResults::finals(const std::string& problem,
                                              const std::string& arm) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.problem == problem && r.arm == arm && !r.failed) {
      out.push_back(r.final_objective);
    }
  }
  return out;
}

ExperimentResults run_experiment(const ExperimentSpec& spec) {
  if (spec.arms.empty() || spec.problem_ids.empty() || spec.runs < 1) {
    throw std::invalid_argument("run_experiment: spec is incomplete");
  }

  ExperimentResults results;
  results.out_dir = spec.out_dir;
  results.problems = spec.problem_ids;
  for (const auto& arm : spec.arms) results.arm_names.push_back(arm.name);

  // Transfer machinery is meaningless for a single-space arm; say so once.
  const bool any_single =
      std::any_of(spec.arms.begin(), spec.arms.end(),
                  [](const ExperimentArm& a) { return a.single_space; });
  if (any_single) {
    for (const auto& key : spec.explicit_keys) {
      if (transfer_only_keys().count(key) > 0) {
        results.warnings.push_back(
            "key '" + key + "' has no effect on single-space arms; ignored there");
      }
    }
  }

  std::vector<Problem> problems;
  problems.reserve(spec.problem_ids.size());
  for (const auto& id : spec.problem_ids) {
    problems.push_back(make_problem(parse_problem_id(id)));
  }
  ensure_directories(spec);

  struct Job {
    size_t problem_index;
    size_t arm_index;
    int run_index;
  };
  std::vector<Job> jobs;
  for (size_t p = 0; p < spec.problem_ids.size(); ++p) {
    for (size_t a = 0; a < spec.arms.size(); ++a) {
      for (int r = 0; r < spec.runs; ++r) jobs.push_back({p, a, r});
    }
  }
  results.records.resize(jobs.size());

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t workers = std::min<size_t>(
      jobs.size(), spec.workers > 0 ? static_cast<size_t>(spec.workers) : hw);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t j = next.fetch_add(1);
      if (j >= jobs.size()) break;
      const Job& job = jobs[j];
      const auto& arm = spec.arms[job.arm_index];
      const Problem& problem = problems[job.problem_index];
      RunRecord record;
      record.problem = spec.problem_ids[job.problem_index];
      record.arm = arm.name;
      record.run_index = job.run_index;
      record.seed = spec.base_seed + static_cast<std::uint64_t>(job.run_index);
      try {
        const RunResult run = arm.single_space
                                  ? run_single_space(problem, arm.config,
                                                     record.seed)
                                  : run_mses(problem, arm.config, record.seed);
        const fs::path dir =
            fs::path(spec.out_dir) / arm.name / record.problem;
        const std::string stem = "run" + std::to_string(job.run_index);
        write_convergence_csv(run, (dir / (stem + ".csv")).string());
        write_events_jsonl(run, (dir / (stem + ".events.jsonl")).string());
        record.final_objective = run.best_objective;
        record.fe_used = run.fe_used;
      } catch (const std::exception& e) {
        record.failed = true;
        record.error = e.what();
      }
      results.records[j] = std::move(record);
    }
  };

  std::vector<std::thread> pool;
  for (size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  write_summary_csv(results,
                    (fs::path(spec.out_dir) / "summary.csv").string());
  return results;
}

void write_summary_csv(const ExperimentResults& results,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << "problem,arm,runs,mean,std,median,min,max\n";
  for (const auto& problem : results.problems) {
    for (const auto& arm : results.arm_names) {
      const auto finals = results.finals(problem, arm);
      if (finals.empty()) continue;
      const double lo = *std::min_element(finals.begin(), finals.end());
      const double hi = *std::max_element(finals.begin(), finals.end());
      out << problem << ',' << arm << ',' << finals.size() << ','
          << format_g17(mean(finals)) << ',' << format_g17(sample_std(finals))
          << ',' << format_g17(median(finals)) << ',' << format_g17(lo) << ','
          << format_g17(hi) << '\n';
    }
  }
}

ComparisonReport compare(
    const std::string& arm_a, const std::string& arm_b,
    const std::map<std::string, std::vector<double>>& finals_a,
    const std::map<std::string, std::vector<double>>& finals_b) {
  if (finals_a.size() != finals_b.size()) {
    throw std::invalid_argument("compare: problem sets differ");
  }
  for (const auto& [problem, values] : finals_a) {
    const auto it = finals_b.find(problem);
    if (it == finals_b.end()) {
      throw std::invalid_argument("compare: problem '" + problem +
                                  "' missing from the second arm");
    }
    if (values.size() != it->second.size()) {
      throw std::invalid_argument("compare: run counts differ on '" + problem +
                                  "'");
    }
  }

  ComparisonReport report;
  report.arm_a = arm_a;
  report.arm_b = arm_b;
  for (const auto& [problem, a] : finals_a) {
    const auto& b = finals_b.at(problem);
    ProblemComparison row;
    row.problem = problem;
    row.mean_a = mean(a);
    row.std_a = sample_std(a);
    row.median_a = median(a);
    row.mean_b = mean(b);
    row.std_b = sample_std(b);
    row.median_b = median(b);
    const WilcoxonResult w = wilcoxon_rank_sum(a, b);
    row.statistic = w.statistic;
    row.p_value = w.p_value;
    if (a.size() < 2 || b.size() < 2) {
      row.verdict = "≈";
      row.note = "insufficient runs";
    } else if (w.p_value >= 0.05) {
      row.verdict = "≈";
    } else if (row.median_a != row.median_b) {
      row.verdict = row.median_a < row.median_b ? "+" : "-";
    } else if (row.mean_a != row.mean_b) {
      row.verdict = row.mean_a < row.mean_b ? "+" : "-";
    } else {
      row.verdict = "≈";
      row.note = "identical central tendency";
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

ComparisonReport compare_dirs(const std::string& dir_a,
                              const std::string& dir_b) {
  auto collect = [](const std::string& dir) {
    std::map<std::string, std::vector<double>> finals;
    if (!fs::is_directory(dir)) {
      throw std::invalid_argument("compare: '" + dir + "' is not a directory");
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory()) {
        finals[entry.path().filename().string()] =
            finals_from_dir(entry.path());
      }
    }
    if (finals.empty()) {
      throw std::invalid_argument("compare: no per-problem results under '" +
                                  dir + "'");
    }
    return finals;
  };
  return compare(fs::path(dir_a).filename().string(),
                 fs::path(dir_b).filename().string(), collect(dir_a),
                 collect(dir_b));
}

void write_comparison_csv(const ComparisonReport& report,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << "problem,mean_" << report.arm_a << ",std_" << report.arm_a
      << ",median_" << report.arm_a << ",mean_" << report.arm_b << ",std_"
      << report.arm_b << ",median_" << report.arm_b
      << ",statistic,p_value,verdict,note\n";
  for (const auto& r : report.rows) {
    out << r.problem << ',' << format_g17(r.mean_a) << ','
        << format_g17(r.std_a) << ',' << format_g17(r.median_a) << ','
        << format_g17(r.mean_b) << ',' << format_g17(r.std_b) << ','
        << format_g17(r.median_b) << ',' << format_g17(r.statistic) << ','
        << format_g17(r.p_value) << ',' << r.verdict << ',' << r.note << '\n';
  }
}

std::string format_comparison(const ComparisonReport& report) {
  std::ostringstream out;
  out << "comparison: " << report.arm_a << " vs " << report.arm_b << "\n";
  size_t width = 7;
  for (const auto& r : report.rows) width = std::max(width, r.problem.size());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %13s %13s %13s %13s %9s  %s\n",
                static_cast<int>(width), "problem", "mean_a", "median_a",
                "mean_b", "median_b", "p", "verdict");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%-*s  %13.6g %13.6g %13.6g %13.6g %9.4g  %s%s%s\n",
                  static_cast<int>(width), r.problem.c_str(), r.mean_a,
                  r.median_a, r.mean_b, r.median_b, r.p_value,
                  r.verdict.c_str(), r.note.empty() ? "" : "  # ",
                  r.note.c_str());
    out << buf;
  }
  return out.str();
}

SweepTable sweep(const ExperimentSpec& spec, const std::string& param,
                 const std::vector<long long>& values) {
  static const std::set<std::string> params = {"A_size", "d_s", "G_r", "G_t",
                                               "Q"};
  if (params.count(param) == 0) {
    throw std::invalid_argument(
        "sweep: param must be one of A_size, d_s, G_r, G_t, Q");
  }
  if (values.empty()) {
    throw std::invalid_argument("sweep: no values given");
  }

  // Validate every value against the parameter's invariant before any run.
  int min_dim = INT_MAX;
  for (const auto& id : spec.problem_ids) {
    min_dim = std::min(min_dim, parse_problem_id(id).dim);
  }
  for (const long long v : values) {
    if (v < 1) throw std::invalid_argument("sweep: values must be >= 1");
    if (param == "d_s" && v >= min_dim) {
      throw std::invalid_argument(
          "sweep: d_s value " + std::to_string(v) +
          " must be below the smallest problem dimension " +
          std::to_string(min_dim));
    }
    for (const auto& arm : spec.arms) {
      if (arm.single_space) continue;
      const int np = resolved_population_size(arm.config);
      if (param == "Q" && v > np) {
        throw std::invalid_argument("sweep: Q value " + std::to_string(v) +
                                    " exceeds population size " +
                                    std::to_string(np));
      }
      if (param == "A_size" && v < np) {
        throw std::invalid_argument("sweep: A_size value " +
                                    std::to_string(v) +
                                    " must be >= population size " +
                                    std::to_string(np));
      }
    }
  }

  ExperimentSpec derived = spec;
  derived.arms.clear();
  for (const auto& arm : spec.arms) {
    if (arm.single_space) {
      derived.arms.push_back(arm);  // baseline runs once
      continue;
    }
    for (const long long v : values) {
      ExperimentArm varied = arm;
      varied.name = arm.name + "-" + param + "=" + std::to_string(v);
      if (param == "A_size") {
        varied.config.archive_capacity = static_cast<int>(v);
      } else if (param == "d_s") {
        varied.config.simplified_dim = static_cast<int>(v);
      } else if (param == "G_r") {
        varied.config.reconstruct_interval = static_cast<int>(v);
      } else if (param == "G_t") {
        varied.config.transfer_interval = static_cast<int>(v);
      } else {
        varied.config.transfer_to_original = static_cast<int>(v);
      }
      derived.arms.push_back(std::move(varied));
    }
  }
  if (derived.arms.empty()) {
    throw std::invalid_argument("sweep: no mses arm to vary");
  }

  const ExperimentResults results = run_experiment(derived);

  SweepTable table;
  table.param = param;
  table.problems = results.problems;
  table.arms = results.arm_names;
  for (const auto& arm : results.arm_names) {
    std::vector<double> row;
    for (const auto& problem : results.problems) {
      const auto finals = results.finals(problem, arm);
      row.push_back(finals.empty()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : mean(finals));
    }
    table.values.push_back(std::move(row));
  }

  write_sweep_csv(table, (fs::path(spec.out_dir) / "sweep.csv").string());
  write_sweep_csv(normalize_sweep(table),
                  (fs::path(spec.out_dir) / "sweep_normalized.csv").string());
  return table;
}

SweepTable normalize_sweep(const SweepTable& table) {
  SweepTable out = table;
  for (size_t p = 0; p < table.problems.size(); ++p) {
    double worst = 0.0;
    for (const auto& row : table.values) {
      if (std::isfinite(row[p])) worst = std::max(worst, row[p]);
    }
    for (auto& row : out.values) {
      if (worst > 0.0) {
        row[p] = row[p] / worst;
      } else {
        row[p] = 0.0;  // all-zero column: everything is already optimal
      }
    }
  }
  return out;
}

void write_sweep_csv(const SweepTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << "arm";
  for (const auto& problem : table.problems) out << ',' << problem;
  out << '\n';
  for (size_t a = 0; a < table.arms.size(); ++a) {
    out << table.arms[a];
    for (size_t p = 0; p < table.problems.size(); ++p) {
      out << ',' << format_g17(table.values[a][p]);
    }
    out << '\n';
  }
}

void write_convergence_csv(const RunResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << "fe,best\n";
  for (const auto& point : result.convergence) {
    out << point.fe << ',' << format_g17(point.best) << '\n';
  }
}

std::vector<ConvergencePoint> read_convergence_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read '" + path + "'");
  }
  std::vector<ConvergencePoint> log;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("malformed convergence line in '" + path + "'");
    }
    ConvergencePoint p;
    p.fe = std::stoll(line.substr(0, comma));
    p.best = std::stod(line.substr(comma + 1));
    log.push_back(p);
  }
  return log;
}

void write_events_jsonl(const RunResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& e : result.events) {
    nlohmann::json j;
    j["kind"] = e.kind == RunEvent::Kind::Transfer ? "transfer"
                                                   : "reconstruction";
    j["generation"] = e.generation;
    j["fe"] = e.fe_used;
    j["effective_ds"] = e.effective_dim;
    j["archive_size"] = e.archive_size;
    if (e.kind == RunEvent::Kind::Transfer) {
      // Objective values of the injected solutions at injection time.
      j["injected_objectives"] = e.injected_objectives;
    }
    out << j.dump() << '\n';
  }
  for (const auto& w : result.warnings) {
    nlohmann::json j;
    j["kind"] = "warning";
    j["message"] = w;
    out << j.dump() << '\n';
  }
}

double step_interpolate(const std::vector<ConvergencePoint>& log,
                        long long fe) {
  if (log.empty()) {
    throw std::invalid_argument("step_interpolate: empty log");
  }
  if (fe < log.front().fe) return log.front().best;
  auto it = std::upper_bound(
      log.begin(), log.end(), fe,
      [](long long value, const ConvergencePoint& p) { return value < p.fe; });
  return std::prev(it)->best;
}

std::vector<long long> union_grid(
    const std::vector<std::vector<ConvergencePoint>>& runs) {
  std::vector<long long> grid;
  for (const auto& run : runs) {
    for (const auto& p : run) grid.push_back(p.fe);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<ConvergencePoint> average_step_series(
    const std::vector<std::vector<ConvergencePoint>>& runs,
    const std::vector<long long>& grid) {
  std::vector<ConvergencePoint> out;
  out.reserve(grid.size());
  for (const long long fe : grid) {
    double sum = 0.0;
    for (const auto& run : runs) sum += step_interpolate(run, fe);
    out.push_back({fe, sum / static_cast<double>(runs.size())});
  }
  return out;
}

namespace {

// Continuous log-like transform that tolerates non-positive values: pure
// log10 above linthresh, linear below it.
double symlog(double v, double linthresh) {
  if (v >= linthresh) return std::log10(v);
  return std::log10(linthresh) + (v - linthresh) / linthresh;
}

const char* series_color(size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette[i % 8];
}

}  // namespace

void emit_plot(const std::vector<PlotSeries>& series,
               const std::string& svg_path, std::vector<std::string>* notes) {
  if (series.empty()) {
    throw std::invalid_argument("emit_plot: no series");
  }

  struct Averaged {
    std::string name;
    std::vector<ConvergencePoint> points;
  };
  std::vector<Averaged> averaged;
  for (const auto& s : series) {
    if (s.runs.empty()) {
      throw std::invalid_argument("emit_plot: series '" + s.name +
                                  "' has no runs");
    }
    const auto grid = union_grid(s.runs);
    averaged.push_back({s.name, average_step_series(s.runs, grid)});
  }

  // Averaged data alongside the figure, one arm per column block.
  {
    std::ofstream csv(svg_path + ".csv", std::ios::binary);
    csv << "arm,fe,mean_best\n";
    char buf[96];
    for (const auto& a : averaged) {
      for (const auto& p : a.points) {
        std::snprintf(buf, sizeof(buf), "%s,%lld,%.17g\n", a.name.c_str(),
                      static_cast<long long>(p.fe), p.best);
        csv << buf;
      }
    }
  }

  bool any_nonpositive = false;
  double min_positive = std::numeric_limits<double>::infinity();
  long long fe_min = LLONG_MAX, fe_max = LLONG_MIN;
  for (const auto& a : averaged) {
    for (const auto& p : a.points) {
      fe_min = std::min(fe_min, p.fe);
      fe_max = std::max(fe_max, p.fe);
      if (p.best > 0.0) {
        min_positive = std::min(min_positive, p.best);
      } else {
        any_nonpositive = true;
      }
    }
  }
  if (!std::isfinite(min_positive)) min_positive = 1e-12;
  const double linthresh = any_nonpositive ? min_positive : 0.0;
  if (any_nonpositive && notes != nullptr) {
    notes->push_back(
        "non-positive objectives: using a symlog-style scale below " +
        format_g17(min_positive));
  }

  auto transform = [&](double v) {
    return any_nonpositive ? symlog(v, linthresh) : std::log10(v);
  };

  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();
  for (const auto& a : averaged) {
    for (const auto& p : a.points) {
      const double y = transform(p.best);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (y_hi - y_lo < 1e-9) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  if (fe_max == fe_min) fe_max = fe_min + 1;

  const double width = 860, height = 540;
  const double ml = 80, mr = 160, mt = 30, mb = 60;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double fe) {
    return ml + pw * (fe - static_cast<double>(fe_min)) /
                    static_cast<double>(fe_max - fe_min);
  };
  auto sy = [&](double y) { return mt + ph * (y_hi - y) / (y_hi - y_lo); };

  std::ofstream svg(svg_path, std::ios::binary);
  if (!svg) {
    throw std::runtime_error("cannot write '" + svg_path + "'");
  }
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 5; ++t) {
    const double fe = static_cast<double>(fe_min) +
                      (static_cast<double>(fe_max - fe_min)) * t / 5.0;
    const double x = sx(fe);
    svg << "<line x1=\"" << x << "\" y1=\"" << mt + ph << "\" x2=\"" << x
        << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << mt + ph + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">"
        << static_cast<long long>(fe) << "</text>\n";
  }
  const int e_lo = static_cast<int>(std::floor(y_lo));
  const int e_hi = static_cast<int>(std::ceil(y_hi));
  for (int e = e_lo; e <= e_hi; ++e) {
    if (e < y_lo - 0.5 || e > y_hi + 0.5) continue;
    const double y = sy(e);
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml
        << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
        << "\" font-size=\"11\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 15
      << "\" font-size=\"13\" text-anchor=\"middle\">fitness evaluations"
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "18 "
      << mt + ph / 2 << ")\">mean best objective (log scale)</text>\n";

  for (size_t i = 0; i < averaged.size(); ++i) {
    const auto& a = averaged[i];
    const char* color = series_color(i);
    if (a.points.size() == 1) {
      svg << "<circle cx=\"" << sx(static_cast<double>(a.points[0].fe))
          << "\" cy=\"" << sy(transform(a.points[0].best))
          << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    } else {
      // Cap the polyline length; the CSV keeps the full-resolution series.
      const size_t max_points = 2000;
      const size_t stride =
          std::max<size_t>(1, a.points.size() / max_points);
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (size_t k = 0; k < a.points.size(); k += stride) {
        const auto& p = a.points[k];
        svg << sx(static_cast<double>(p.fe)) << ',' << sy(transform(p.best))
            << ' ';
      }
      const auto& last = a.points.back();
      svg << sx(static_cast<double>(last.fe)) << ','
          << sy(transform(last.best));
      svg << "\"/>\n";
    }
    const double ly = mt + 16 + 18 * static_cast<double>(i);
    svg << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\""
        << ml + pw + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << a.name << "</text>\n";
  }
  svg << "</svg>\n";
}

}  // namespace mses
