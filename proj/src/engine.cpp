#include "mses/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace mses {

namespace {

Matrix members_as_matrix(const Population& pop) {
  Matrix m(pop.dim, pop.size());
  for (int i = 0; i < pop.size(); ++i) {
    m.col(i) = pop.members[static_cast<size_t>(i)];
  }
  return m;
}

// Elitist crowding replacement for transferred solutions: each injected
// solution, best first, replaces the nearest member among those strictly
// worse than it, and is discarded when nobody is worse. An injected solution
// better than the current worst always finds a slot, so the population's
// best never regresses, while repeated near-copies of one elite land on
// their previous copy instead of overwriting the diverse tail. Ties keep the
// incumbent: equal-fitness members are not replacement candidates.
void elitist_replace(Population& pop,
                     std::vector<std::pair<Eigen::VectorXd, double>> injected) {
  const int np = pop.size();
  const bool has_velocity = !pop.velocities.empty();
  std::stable_sort(injected.begin(), injected.end(),
                   [](const auto& a, const auto& b) {
                     return a.second < b.second;
                   });
  for (auto& [x, fitness] : injected) {
    int target = -1;
    double nearest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < np; ++i) {
      if (pop.fitnesses[static_cast<size_t>(i)] <= fitness) continue;
      const double dist = (pop.members[static_cast<size_t>(i)] - x).norm();
      if (dist < nearest) {
        nearest = dist;
        target = i;
      }
    }
    if (target < 0) continue;
    pop.members[static_cast<size_t>(target)] = std::move(x);
    pop.fitnesses[static_cast<size_t>(target)] = fitness;
    if (has_velocity) {
      pop.velocities[static_cast<size_t>(target)] =
          Eigen::VectorXd::Zero(pop.dim);
    }
  }
}

}  // namespace

int resolved_population_size(const MsesConfig& cfg) {
  if (cfg.np > 0) return cfg.np;
  return cfg.optimizer.kind == OptimizerKind::De ? 50 : 500;
}

bool Archive::insert(const Eigen::VectorXd& x) {
  for (const auto& e : entries_) {
    if ((e - x).lpNorm<Eigen::Infinity>() <= tol_) return false;
  }
  entries_.push_back(x);
  while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
  return true;
}

Matrix Archive::as_matrix() const {
  const auto n = entries_.size();
  Matrix m(n > 0 ? entries_.front().size() : 0, static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) m.col(static_cast<Eigen::Index>(i)) = entries_[i];
  return m;
}

MultiSpaceSearch::MultiSpaceSearch(ObjectiveFn objective,
                                   Eigen::VectorXd lower,
                                   Eigen::VectorXd upper,
                                   const MsesConfig& config,
                                   std::uint64_t seed)
    : objective_(std::move(objective)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      cfg_(config),
      rng_(seed) {
  const int dim = static_cast<int>(lower_.size());
  if (upper_.size() != dim || dim < 1) {
    throw std::invalid_argument("engine: malformed bounds");
  }
  for (int i = 0; i < dim; ++i) {
    if (!(lower_(i) < upper_(i))) {
      throw std::invalid_argument("engine: lower bound must be below upper");
    }
  }

  cfg_.np = resolved_population_size(cfg_);
  if (cfg_.optimizer.kind == OptimizerKind::De && cfg_.np < 4) {
    throw std::invalid_argument("engine: DE needs a population of >= 4");
  }
  if (cfg_.optimizer.kind == OptimizerKind::Llso &&
      cfg_.np < 2 * cfg_.optimizer.levels) {
    throw std::invalid_argument("engine: LLSO needs a population of >= 2*NL");
  }
  if (!cfg_.single_space) {
    if (cfg_.simplified_dim == 0) {
      cfg_.simplified_dim = std::min(
          dim - 1,
          static_cast<int>(std::ceil(0.6 * static_cast<double>(dim))));
    }
    if (cfg_.simplified_dim < 1 || cfg_.simplified_dim >= dim) {
      throw std::invalid_argument(
          "engine: simplified dimension must be in [1, dim)");
    }
    if (cfg_.transfer_to_original == 0) {
      cfg_.transfer_to_original =
          static_cast<int>(std::ceil(0.2 * static_cast<double>(cfg_.np)));
    }
    if (cfg_.transfer_to_simplified == 0) {
      cfg_.transfer_to_simplified =
          static_cast<int>(std::ceil(0.2 * static_cast<double>(cfg_.np)));
    }
    if (cfg_.transfer_to_original < 1 ||
        cfg_.transfer_to_original > cfg_.np ||
        cfg_.transfer_to_simplified < 1 ||
        cfg_.transfer_to_simplified > cfg_.np) {
      throw std::invalid_argument(
          "engine: transfer counts must be in [1, np]");
    }
    if (cfg_.archive_capacity == 0) cfg_.archive_capacity = 5 * cfg_.np;
    if (cfg_.archive_capacity < cfg_.np) {
      throw std::invalid_argument("engine: archive capacity must be >= np");
    }
    if (cfg_.transfer_interval < 1 || cfg_.reconstruct_interval < 1) {
      throw std::invalid_argument("engine: intervals must be >= 1");
    }
  }
  if (cfg_.max_evaluations < 1) {
    throw std::invalid_argument("engine: evaluation budget must be >= 1");
  }

  initialize(seed);
}

void MultiSpaceSearch::initialize(std::uint64_t /*seed*/) {
  const int dim = static_cast<int>(lower_.size());
  pop_p_ = sample_initial(dim, cfg_.np, lower_, upper_, rng_);
  if (cfg_.optimizer.kind == OptimizerKind::Llso) {
    pop_p_.velocities.assign(static_cast<size_t>(cfg_.np),
                             Eigen::VectorXd::Zero(dim));
  }
  for (int i = 0; i < cfg_.np; ++i) {
    pop_p_.fitnesses[static_cast<size_t>(i)] =
        evaluate_in_original(pop_p_.members[static_cast<size_t>(i)]);
  }
  if (cfg_.single_space) return;

  archive_ = Archive(cfg_.archive_capacity, cfg_.dedup_tol);

  const Matrix originals = members_as_matrix(pop_p_);
  pca_ = pca_fit(originals, cfg_.simplified_dim);
  const Matrix projected = pca_project(pca_, originals);
  to_original_ = learn_affine_map(projected, originals, cfg_.map_rel_tol);
  to_simplified_ = learn_affine_map(originals, projected, cfg_.map_rel_tol);

  pop_s_.dim = pca_.k;
  pop_s_.members.clear();
  pop_s_.fitnesses.clear();
  pop_s_.velocities.clear();
  for (int i = 0; i < cfg_.np; ++i) {
    pop_s_.members.emplace_back(projected.col(i));
  }
  if (cfg_.optimizer.kind == OptimizerKind::Llso) {
    pop_s_.velocities.assign(static_cast<size_t>(cfg_.np),
                             Eigen::VectorXd::Zero(pca_.k));
  }
  pop_s_.fitnesses.resize(static_cast<size_t>(cfg_.np));
  for (int i = 0; i < cfg_.np; ++i) {
    pop_s_.fitnesses[static_cast<size_t>(i)] =
        evaluate_simplified(pop_s_.members[static_cast<size_t>(i)]);
  }
}

double MultiSpaceSearch::evaluate_in_original(Eigen::VectorXd& x) {
  x = x.cwiseMax(lower_).cwiseMin(upper_);
  const double value = objective_(x);
  ++fe_used_;
  const bool improved = value < best_objective_;
  if (improved) {
    best_objective_ = value;
    best_solution_ = x;
  }
  if (improved || fe_used_ % cfg_.np == 0) {
    log_.push_back({fe_used_, best_objective_});
  }
  return value;
}

double MultiSpaceSearch::evaluate_simplified(const Eigen::VectorXd& q) {
  Eigen::VectorXd x = apply_map(to_original_, q);
  return evaluate_in_original(x);
}

int MultiSpaceSearch::step_population(Population& pop,
                                      const EvaluateFn& evaluate) {
  return optimizer_step(pop, cfg_.optimizer, rng_, evaluate);
}

void MultiSpaceSearch::knowledge_transfer() {
  // Simplified -> original: the Q best, mapped, evaluated, injected.
  RunEvent event;
  event.kind = RunEvent::Kind::Transfer;
  {
    const auto best =
        select_best_indices(pop_s_.fitnesses, cfg_.transfer_to_original);
    std::vector<std::pair<Eigen::VectorXd, double>> injected;
    injected.reserve(best.size());
    for (const int i : best) {
      Eigen::VectorXd x =
          apply_map(to_original_, pop_s_.members[static_cast<size_t>(i)]);
      const double fit = evaluate_in_original(x);
      event.injected_objectives.push_back(fit);
      injected.emplace_back(std::move(x), fit);
    }
    elitist_replace(pop_p_, std::move(injected));
  }

  // Original -> simplified: the P best, mapped, evaluated via back-mapping.
  const auto down =
      select_best_indices(pop_p_.fitnesses, cfg_.transfer_to_simplified);
  {
    std::vector<std::pair<Eigen::VectorXd, double>> injected;
    injected.reserve(down.size());
    for (const int i : down) {
      Eigen::VectorXd q =
          apply_map(to_simplified_, pop_p_.members[static_cast<size_t>(i)]);
      const double fit = evaluate_simplified(q);
      injected.emplace_back(std::move(q), fit);
    }
    elitist_replace(pop_s_, std::move(injected));
  }

  // Archive the updated simplified population in original-space coordinates,
  // plus the elites that just entered the simplified space. The latter keep
  // the archive anchored to the region the original-space search actually
  // occupies even when the simplified population has converged.
  for (const auto& q : pop_s_.members) {
    Eigen::VectorXd x = apply_map(to_original_, q);
    x = x.cwiseMax(lower_).cwiseMin(upper_);
    archive_.insert(x);
  }
  for (const int i : down) {
    archive_.insert(pop_p_.members[static_cast<size_t>(i)]);
  }

  event.generation = generation_;
  event.fe_used = fe_used_;
  event.effective_dim = pca_.k;
  event.archive_size = archive_.size();
  events_.push_back(std::move(event));
}

void MultiSpaceSearch::rebuild_simplified_population(const Matrix& originals) {
  const Matrix coords = apply_map(to_simplified_, originals);
  pop_s_.dim = pca_.k;
  pop_s_.members.clear();
  for (Eigen::Index i = 0; i < coords.cols(); ++i) {
    pop_s_.members.emplace_back(coords.col(i));
  }
  if (cfg_.optimizer.kind == OptimizerKind::Llso) {
    pop_s_.velocities.assign(pop_s_.members.size(),
                             Eigen::VectorXd::Zero(pca_.k));
  } else {
    pop_s_.velocities.clear();
  }
  pop_s_.fitnesses.resize(pop_s_.members.size());
  for (size_t i = 0; i < pop_s_.members.size(); ++i) {
    pop_s_.fitnesses[i] = evaluate_simplified(pop_s_.members[i]);
  }
}

void MultiSpaceSearch::reconstruct_space() {
  if (archive_.size() < 2) {
    warnings_.push_back("reconstruction skipped at generation " +
                        std::to_string(generation_) +
                        ": archive has fewer than 2 entries");
    return;
  }

  // Carry the current simplified population to the original space before the
  // old maps are discarded.
  Matrix carried(lower_.size(), pop_s_.size());
  for (int i = 0; i < pop_s_.size(); ++i) {
    Eigen::VectorXd x =
        apply_map(to_original_, pop_s_.members[static_cast<size_t>(i)]);
    carried.col(i) = x.cwiseMax(lower_).cwiseMin(upper_);
  }

  const Matrix arch = archive_.as_matrix();
  pca_ = pca_fit(arch, cfg_.simplified_dim);
  const Matrix arch_proj = pca_project(pca_, arch);
  to_original_ = learn_affine_map(arch_proj, arch, cfg_.map_rel_tol);
  to_simplified_ = learn_affine_map(arch, arch_proj, cfg_.map_rel_tol);

  rebuild_simplified_population(carried);

  RunEvent event;
  event.kind = RunEvent::Kind::Reconstruction;
  event.generation = generation_;
  event.fe_used = fe_used_;
  event.effective_dim = pca_.k;
  event.archive_size = archive_.size();
  events_.push_back(std::move(event));
}

void MultiSpaceSearch::step_generation() {
  ++generation_;
  const EvaluateFn eval_original = [this](Eigen::VectorXd& x) {
    return evaluate_in_original(x);
  };
  step_population(pop_p_, eval_original);
  if (cfg_.single_space) return;

  const EvaluateFn eval_simplified = [this](Eigen::VectorXd& q) {
    return evaluate_simplified(q);
  };
  step_population(pop_s_, eval_simplified);

  if (budget_exhausted()) return;
  if (generation_ % cfg_.transfer_interval == 0) knowledge_transfer();
  if (budget_exhausted()) return;
  if (generation_ % cfg_.reconstruct_interval == 0) reconstruct_space();
}

RunResult MultiSpaceSearch::run() {
  while (!budget_exhausted()) step_generation();

  RunResult result;
  result.best_solution = best_solution_;
  result.best_objective = best_objective_;
  result.convergence = log_;
  result.events = events_;
  result.warnings = warnings_;
  result.fe_used = fe_used_;
  result.generations = generation_ - 1;
  return result;
}

RunResult run_mses(const Problem& problem, const MsesConfig& config,
                   std::uint64_t seed) {
  MsesConfig cfg = config;
  cfg.single_space = false;
  MultiSpaceSearch engine(
      [&problem](const Eigen::VectorXd& x) { return problem_eval(problem, x); },
      problem.lower, problem.upper, cfg, seed);
  return engine.run();
}

RunResult run_single_space(const Problem& problem, const MsesConfig& config,
                           std::uint64_t seed) {
  MsesConfig cfg = config;
  cfg.single_space = true;
  MultiSpaceSearch engine(
      [&problem](const Eigen::VectorXd& x) { return problem_eval(problem, x); },
      problem.lower, problem.upper, cfg, seed);
  return engine.run();
}

}  // namespace mses
