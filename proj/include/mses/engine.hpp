#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mses/bench.hpp"
#include "mses/linalg.hpp"
#include "mses/optimizers.hpp"
#include "mses/rng.hpp"

namespace mses {

// Engine parameters. Zero-valued counts select the standard defaults:
// np from the optimizer (50 for DE, 500 for LLSO), simplified_dim
// ceil(0.6*dim) capped at dim-1, transfer counts ceil(0.2*np), archive
// capacity 5*np.
struct MsesConfig {
  int np = 0;
  int simplified_dim = 0;          // d_s
  int transfer_interval = 1;       // generations between transfers (G_t)
  int reconstruct_interval = 10;   // generations between space rebuilds (G_r)
  int transfer_to_original = 0;    // Q, elites moved simplified -> original
  int transfer_to_simplified = 0;  // P, elites moved original -> simplified
  int archive_capacity = 0;
  long long max_evaluations = 100000;
  double dedup_tol = 1e-12;    // L-inf distance treated as duplicate
  double map_rel_tol = 1e-10;  // pseudo-inverse cutoff for map learning
  OptimizerParams optimizer;
  bool single_space = false;  // baseline arm: original space only
};

int resolved_population_size(const MsesConfig& cfg);

// Bounded, deduplicated store of original-space search traces. Insertion
// order is preserved and eviction drops the oldest entry first.
class Archive {
 public:
  Archive() = default;
  Archive(int capacity, double dedup_tol)
      : capacity_(capacity), tol_(dedup_tol) {}

  // Returns false when x is within dedup_tol (L-inf) of an existing entry.
  bool insert(const Eigen::VectorXd& x);

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  const std::deque<Eigen::VectorXd>& entries() const { return entries_; }
  Matrix as_matrix() const;  // dim x size, columns in insertion order

 private:
  std::deque<Eigen::VectorXd> entries_;
  int capacity_ = 0;
  double tol_ = 0.0;
};

struct ConvergencePoint {
  long long fe = 0;
  double best = 0.0;
};

struct RunEvent {
  enum class Kind { Transfer, Reconstruction };
  Kind kind = Kind::Transfer;
  long long generation = 0;
  long long fe_used = 0;
  int effective_dim = 0;  // simplified dimension in effect after the event
  int archive_size = 0;
  // Objective of each simplified->original transfer at injection time.
  std::vector<double> injected_objectives;
};

struct RunResult {
  Eigen::VectorXd best_solution;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<ConvergencePoint> convergence;
  std::vector<RunEvent> events;
  std::vector<std::string> warnings;
  long long fe_used = 0;
  long long generations = 0;
};

// One multi-space run: a population searches the original box-bounded space
// while a second population searches a PCA-derived simplified space whose
// fitness is defined through the learned back-mapping. Elites move between
// the spaces on a fixed cadence and the simplified space is periodically
// rebuilt from an archive of back-mapped search traces.
//
// Every objective call goes through evaluate_in_original, which clamps to
// bounds, counts one evaluation and maintains the best-so-far log; fe_used
// therefore equals the exact number of objective calls. A generation in
// progress always finishes its current evaluation batch, so the budget can
// overshoot by at most one generation (<= 2*np evaluations).
class MultiSpaceSearch {
 public:
  using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

  MultiSpaceSearch(ObjectiveFn objective, Eigen::VectorXd lower,
                   Eigen::VectorXd upper, const MsesConfig& config,
                   std::uint64_t seed);

  // Runs until the evaluation budget is exhausted and returns the result.
  RunResult run();

  // Loop pieces, callable individually.
  double evaluate_in_original(Eigen::VectorXd& x);  // clamps x in place
  double evaluate_simplified(const Eigen::VectorXd& q);
  void step_generation();
  void knowledge_transfer();
  void reconstruct_space();
  bool budget_exhausted() const { return fe_used_ >= cfg_.max_evaluations; }

  const MsesConfig& config() const { return cfg_; }
  long long fe_used() const { return fe_used_; }
  long long generation() const { return generation_; }
  const Population& original_population() const { return pop_p_; }
  const Population& simplified_population() const { return pop_s_; }
  const PcaModel& pca() const { return pca_; }
  const AffineMap& map_to_original() const { return to_original_; }
  const AffineMap& map_to_simplified() const { return to_simplified_; }
  const Archive& archive() const { return archive_; }
  const std::vector<ConvergencePoint>& convergence() const { return log_; }
  const std::vector<RunEvent>& events() const { return events_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void initialize(std::uint64_t seed);
  void rebuild_simplified_population(const Matrix& originals);
  int step_population(Population& pop, const EvaluateFn& evaluate);

  ObjectiveFn objective_;
  Eigen::VectorXd lower_, upper_;
  MsesConfig cfg_;  // fully resolved counts
  Rng rng_;

  Population pop_p_;
  Population pop_s_;
  PcaModel pca_;
  AffineMap to_original_;    // M_{Ps->P}
  AffineMap to_simplified_;  // M_{P->Ps}
  Archive archive_;

  long long fe_used_ = 0;
  long long generation_ = 1;
  double best_objective_ = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_solution_;
  std::vector<ConvergencePoint> log_;
  std::vector<RunEvent> events_;
  std::vector<std::string> warnings_;
};

RunResult run_mses(const Problem& problem, const MsesConfig& config,
                   std::uint64_t seed);

// Baseline arm: the same loop with only the original-space population, so
// every evaluation goes to the bare optimizer.
RunResult run_single_space(const Problem& problem, const MsesConfig& config,
                           std::uint64_t seed);

}  // namespace mses
