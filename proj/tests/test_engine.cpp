#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mses/engine.hpp"
#include "mses/harness.hpp"

using mses::Archive;
using mses::MsesConfig;
using mses::MultiSpaceSearch;
using mses::Problem;
using mses::ProblemSpec;
using mses::RunEvent;
using mses::RunResult;

namespace {

Problem small_problem(int dim, std::uint64_t seed = 5,
                      mses::BaseFn base = mses::BaseFn::Rastrigin) {
  ProblemSpec spec;
  spec.structure = mses::Structure::NonSeparable;
  spec.base = base;
  spec.dim = dim;
  spec.rotate = false;
  spec.seed = seed;
  return mses::make_problem(spec);
}

MsesConfig small_config(int np, int ds, long long budget) {
  MsesConfig cfg;
  cfg.np = np;
  cfg.simplified_dim = ds;
  cfg.max_evaluations = budget;
  return cfg;
}

MultiSpaceSearch make_engine(const Problem& p, const MsesConfig& cfg,
                             std::uint64_t seed) {
  return MultiSpaceSearch(
      [&p](const Eigen::VectorXd& x) { return mses::problem_eval(p, x); },
      p.lower, p.upper, cfg, seed);
}

double min_fitness(const mses::Population& pop) {
  return *std::min_element(pop.fitnesses.begin(), pop.fitnesses.end());
}

}  // namespace

TEST_CASE("initialization costs exactly 2*NP evaluations") {
  const Problem p = small_problem(10);
  long long counted = 0;
  MsesConfig cfg = small_config(8, 5, 1000);
  MultiSpaceSearch engine(
      [&](const Eigen::VectorXd& x) {
        ++counted;
        return mses::problem_eval(p, x);
      },
      p.lower, p.upper, cfg, 1);
  CHECK(engine.fe_used() == 16);
  CHECK(counted == 16);
  CHECK(engine.original_population().size() == 8);
  CHECK(engine.simplified_population().size() == 8);
}

TEST_CASE("back-mapped members match the PCA reconstruction at full rank") {
  // NP=8 samples have centered rank 7, so d_s=7 captures all variance and
  // the learned map must coincide with the PCA reconstruction.
  const Problem p = small_problem(10);
  MultiSpaceSearch engine = make_engine(p, small_config(8, 7, 1000), 2);
  REQUIRE(engine.pca().k == 7);
  const auto& pop_p = engine.original_population();
  const auto& pop_s = engine.simplified_population();
  for (int i = 0; i < pop_p.size(); ++i) {
    const Eigen::VectorXd back = mses::apply_map(
        engine.map_to_original(), pop_s.members[static_cast<size_t>(i)]);
    CHECK((back - pop_p.members[static_cast<size_t>(i)]).norm() < 1e-6);
  }
}

TEST_CASE("map agrees with PCA reconstruction on training pairs") {
  const Problem p = small_problem(10);
  MultiSpaceSearch engine = make_engine(p, small_config(8, 7, 1000), 3);
  const auto& pop_p = engine.original_population();
  const auto& pop_s = engine.simplified_population();
  for (int i = 0; i < pop_p.size(); ++i) {
    const auto& q = pop_s.members[static_cast<size_t>(i)];
    const Eigen::VectorXd via_map =
        mses::apply_map(engine.map_to_original(), q);
    const Eigen::VectorXd via_pca =
        mses::pca_reconstruct(engine.pca(), q).col(0);
    const double scale =
        1.0 + pop_p.members[static_cast<size_t>(i)].norm();
    CHECK((via_map - via_pca).norm() <= 1e-6 * scale);
  }
}

TEST_CASE("initial PCA dimension drops to the population rank") {
  const Problem p = small_problem(10);
  MultiSpaceSearch engine = make_engine(p, small_config(4, 8, 1000), 4);
  CHECK(engine.pca().k == 3);  // 4 samples span a 3-dimensional subspace
  CHECK(engine.simplified_population().dim == 3);
}

TEST_CASE("same seed gives a bitwise identical engine state") {
  const Problem p = small_problem(12);
  MultiSpaceSearch a = make_engine(p, small_config(6, 4, 500), 7);
  MultiSpaceSearch b = make_engine(p, small_config(6, 4, 500), 7);
  for (int i = 0; i < a.original_population().size(); ++i) {
    CHECK(a.original_population().members[static_cast<size_t>(i)] ==
          b.original_population().members[static_cast<size_t>(i)]);
    CHECK(a.simplified_population().members[static_cast<size_t>(i)] ==
          b.simplified_population().members[static_cast<size_t>(i)]);
  }
  CHECK(a.pca().basis == b.pca().basis);
  CHECK(a.map_to_original().linear == b.map_to_original().linear);
}

TEST_CASE("evaluate_in_original clamps, counts and tracks the best") {
  const Problem p = small_problem(6);
  MultiSpaceSearch engine = make_engine(p, small_config(5, 3, 1000), 9);
  const long long before = engine.fe_used();

  Eigen::VectorXd outside = p.shift;
  outside(0) = p.upper(0) + 10.0;
  const double val = engine.evaluate_in_original(outside);
  CHECK(engine.fe_used() == before + 1);
  CHECK(outside(0) == p.upper(0));  // clamped in place
  Eigen::VectorXd expected = p.shift;
  expected(0) = p.upper(0);
  CHECK(val == mses::problem_eval(p, expected));

  Eigen::VectorXd at_shift = p.shift;
  engine.evaluate_in_original(at_shift);
  const auto& log = engine.convergence();
  CHECK(log.back().best == 0.0);
}

TEST_CASE("evaluate_simplified goes through the back-mapping") {
  const Problem p = small_problem(8);
  MultiSpaceSearch engine = make_engine(p, small_config(6, 4, 1000), 10);
  const long long before = engine.fe_used();

  const Eigen::VectorXd q = Eigen::VectorXd::Zero(engine.pca().k);
  const double val = engine.evaluate_simplified(q);
  CHECK(engine.fe_used() == before + 1);
  // Zero coordinates leave only the bias term.
  Eigen::VectorXd x = engine.map_to_original().bias;
  x = x.cwiseMax(p.lower).cwiseMin(p.upper);
  CHECK(val == mses::problem_eval(p, x));
}

TEST_CASE("simplified fitness round-trips the best member at full rank") {
  const Problem p = small_problem(10);
  MultiSpaceSearch engine = make_engine(p, small_config(8, 7, 1000), 11);
  const auto& pop_p = engine.original_population();
  const int best = mses::select_best_indices(pop_p.fitnesses, 1)[0];
  const Eigen::VectorXd q =
      mses::apply_map(engine.map_to_simplified(),
                      pop_p.members[static_cast<size_t>(best)]);
  const double fit = engine.evaluate_simplified(q);
  CHECK(fit == doctest::Approx(pop_p.fitnesses[static_cast<size_t>(best)])
                   .epsilon(1e-6));
}

TEST_CASE("knowledge transfer costs Q + P evaluations and is elitist") {
  const Problem p = small_problem(10);
  MsesConfig cfg = small_config(10, 6, 100000);
  cfg.transfer_to_original = 2;
  cfg.transfer_to_simplified = 2;
  MultiSpaceSearch engine = make_engine(p, cfg, 13);

  const double best_before = min_fitness(engine.original_population());
  const long long fe_before = engine.fe_used();
  engine.knowledge_transfer();
  CHECK(engine.fe_used() == fe_before + 4);
  CHECK(min_fitness(engine.original_population()) <= best_before);

  REQUIRE(engine.events().size() == 1);
  const RunEvent& event = engine.events().front();
  CHECK(event.kind == RunEvent::Kind::Transfer);
  CHECK(event.injected_objectives.size() == 2);
  CHECK(event.archive_size == engine.archive().size());
  CHECK(engine.archive().size() > 0);
}

TEST_CASE("archive obeys capacity, dedup and oldest-first eviction") {
  Archive archive(3, 1e-12);
  auto vec = [](double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
  };
  CHECK(archive.insert(vec(1, 1)));
  CHECK_FALSE(archive.insert(vec(1, 1)));  // exact duplicate
  CHECK_FALSE(archive.insert(vec(1, 1 + 1e-13)));  // within tolerance
  CHECK(archive.insert(vec(2, 2)));
  CHECK(archive.insert(vec(3, 3)));
  CHECK(archive.size() == 3);
  CHECK(archive.insert(vec(4, 4)));  // evicts (1,1)
  CHECK(archive.size() == 3);
  CHECK(archive.entries().front() == vec(2, 2));
  CHECK(archive.entries().back() == vec(4, 4));
}

TEST_CASE("reconstruction rebuilds the simplified space only") {
  const Problem p = small_problem(10);
  MsesConfig cfg = small_config(8, 5, 100000);
  MultiSpaceSearch engine = make_engine(p, cfg, 17);
  engine.knowledge_transfer();  // populate the archive

  const auto pop_p_before = engine.original_population().members;
  const long long fe_before = engine.fe_used();
  engine.reconstruct_space();
  CHECK(engine.fe_used() == fe_before + 8);  // NP re-evaluations
  CHECK(engine.original_population().members == pop_p_before);

  const RunEvent& event = engine.events().back();
  CHECK(event.kind == RunEvent::Kind::Reconstruction);
  CHECK(event.effective_dim == engine.pca().k);
  CHECK(event.effective_dim >= 1);
  CHECK(event.effective_dim <= 5);
}

TEST_CASE("reconstruction is skipped while the archive is too small") {
  const Problem p = small_problem(8);
  MultiSpaceSearch engine = make_engine(p, small_config(6, 4, 100000), 19);
  const long long fe_before = engine.fe_used();
  engine.reconstruct_space();
  CHECK(engine.fe_used() == fe_before);
  CHECK(engine.events().empty());
  REQUIRE(engine.warnings().size() == 1);
  CHECK(engine.warnings().front().find("archive") != std::string::npos);
}

TEST_CASE("run fires transfers every G_t and reconstructions every G_r") {
  const Problem p = small_problem(12);
  MsesConfig cfg = small_config(10, 6, 640);
  cfg.transfer_to_original = 2;
  cfg.transfer_to_simplified = 2;
  // init 20 + 25 generations * (20 steps + 4 transfer) + 2 * 10
  // reconstruction re-evaluations = 640
  const RunResult result = mses::run_mses(p, cfg, 23);
  CHECK(result.generations == 25);
  CHECK(result.fe_used == 640);
  int transfers = 0, reconstructions = 0;
  for (const auto& e : result.events) {
    if (e.kind == RunEvent::Kind::Transfer) ++transfers;
    if (e.kind == RunEvent::Kind::Reconstruction) ++reconstructions;
  }
  CHECK(transfers == 25);
  CHECK(reconstructions == 2);
}

TEST_CASE("a budget of 2*NP stops after initialization") {
  const Problem p = small_problem(10);
  const RunResult result = mses::run_mses(p, small_config(8, 5, 16), 29);
  CHECK(result.generations == 0);
  CHECK(result.fe_used == 16);
  CHECK(result.best_objective ==
        mses::problem_eval(p, result.best_solution));
}

TEST_CASE("budget overshoot stays within one generation") {
  const Problem p = small_problem(15);
  MsesConfig cfg = small_config(10, 6, 457);  // awkward budget
  long long counted = 0;
  MultiSpaceSearch engine(
      [&](const Eigen::VectorXd& x) {
        ++counted;
        return mses::problem_eval(p, x);
      },
      p.lower, p.upper, cfg, 31);
  const RunResult result = engine.run();
  CHECK(result.fe_used == counted);
  CHECK(result.fe_used >= 457);
  CHECK(result.fe_used <= 457 + 2 * 10);
}

TEST_CASE("convergence log is monotone with strictly increasing FE") {
  const Problem p = small_problem(10);
  const RunResult result = mses::run_mses(p, small_config(8, 5, 900), 37);
  REQUIRE(!result.convergence.empty());
  for (size_t i = 1; i < result.convergence.size(); ++i) {
    CHECK(result.convergence[i].fe > result.convergence[i - 1].fe);
    CHECK(result.convergence[i].best <= result.convergence[i - 1].best);
  }
  CHECK(result.convergence.back().best == result.best_objective);
}

TEST_CASE("single-space mode reproduces the bare optimizer bitwise") {
  const Problem p = small_problem(10, 41, mses::BaseFn::Elliptic);
  const int np = 8;
  const long long budget = 600;

  MsesConfig cfg;
  cfg.np = np;
  cfg.max_evaluations = budget;
  const RunResult engine_run = mses::run_single_space(p, cfg, 43);

  // The oracle: the optimizer stepped directly with the same seed and the
  // same clamp-evaluate-log rule.
  mses::Rng rng(43);
  mses::Population pop =
      mses::sample_initial(p.dim, np, p.lower, p.upper, rng);
  long long fe = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<mses::ConvergencePoint> log;
  auto evaluate = [&](Eigen::VectorXd& x) {
    x = x.cwiseMax(p.lower).cwiseMin(p.upper);
    const double v = mses::problem_eval(p, x);
    ++fe;
    const bool improved = v < best;
    if (improved) best = v;
    if (improved || fe % np == 0) log.push_back({fe, best});
    return v;
  };
  for (int i = 0; i < np; ++i) {
    pop.fitnesses[static_cast<size_t>(i)] =
        evaluate(pop.members[static_cast<size_t>(i)]);
  }
  mses::OptimizerParams params;
  while (fe < budget) mses::de_step(pop, params, rng, evaluate);

  CHECK(engine_run.fe_used == fe);
  REQUIRE(engine_run.convergence.size() == log.size());
  for (size_t i = 0; i < log.size(); ++i) {
    CHECK(engine_run.convergence[i].fe == log[i].fe);
    CHECK(engine_run.convergence[i].best == log[i].best);
  }
  CHECK(engine_run.best_objective == best);
}

TEST_CASE("llso populations work through the engine") {
  const Problem p = small_problem(10);
  MsesConfig cfg = small_config(8, 5, 400);
  cfg.optimizer.kind = mses::OptimizerKind::Llso;
  cfg.optimizer.levels = 2;
  const RunResult result = mses::run_mses(p, cfg, 47);
  CHECK(result.fe_used >= 400);
  for (size_t i = 1; i < result.convergence.size(); ++i) {
    CHECK(result.convergence[i].best <= result.convergence[i - 1].best);
  }
}

TEST_CASE("engine validates its configuration") {
  const Problem p = small_problem(6);
  auto objective = [&p](const Eigen::VectorXd& x) {
    return mses::problem_eval(p, x);
  };
  MsesConfig cfg = small_config(6, 6, 100);  // d_s == dim
  CHECK_THROWS_AS(
      MultiSpaceSearch(objective, p.lower, p.upper, cfg, 1),
      std::invalid_argument);

  cfg = small_config(3, 2, 100);  // DE needs 4
  CHECK_THROWS_AS(
      MultiSpaceSearch(objective, p.lower, p.upper, cfg, 1),
      std::invalid_argument);

  cfg = small_config(6, 3, 100);
  cfg.archive_capacity = 2;  // below np
  CHECK_THROWS_AS(
      MultiSpaceSearch(objective, p.lower, p.upper, cfg, 1),
      std::invalid_argument);
}

TEST_CASE("default parameter resolution") {
  MsesConfig cfg;
  CHECK(mses::resolved_population_size(cfg) == 50);
  cfg.optimizer.kind = mses::OptimizerKind::Llso;
  CHECK(mses::resolved_population_size(cfg) == 500);

  const Problem p = small_problem(20);
  MsesConfig defaults;
  defaults.np = 10;
  defaults.max_evaluations = 100;
  MultiSpaceSearch engine = make_engine(p, defaults, 53);
  CHECK(engine.config().simplified_dim == 12);      // ceil(0.6 * 20)
  CHECK(engine.config().transfer_to_original == 2);  // ceil(0.2 * 10)
  CHECK(engine.config().archive_capacity == 50);     // 5 * 10
}
