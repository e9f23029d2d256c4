#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mses/rng.hpp"

namespace mses {

enum class OptimizerKind { De, Llso };

struct OptimizerParams {
  OptimizerKind kind = OptimizerKind::De;
  // differential evolution
  double f = 0.5;   // scale factor, (0, 2]
  double cr = 0.9;  // crossover rate, [0, 1]
  // level-based learning swarm
  int levels = 4;    // NL >= 2
  double phi = 0.4;  // social factor, [0, 1]
};

struct Population {
  int dim = 0;
  std::vector<Eigen::VectorXd> members;
  std::vector<double> fitnesses;
  std::vector<Eigen::VectorXd> velocities;  // swarm only; empty otherwise

  int size() const { return static_cast<int>(members.size()); }
};

// Evaluation callback. Steps may mutate the solution in place before
// evaluating (the engine clamps to bounds there); the mutated vector is what
// gets stored in the population.
using EvaluateFn = std::function<double(Eigen::VectorXd&)>;

// Uniform sample within bounds; fitnesses are left as NaN sentinels until the
// caller evaluates them.
Population sample_initial(int dim, int np, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, Rng& rng);

// One generation of DE/rand/1/bin with greedy selection (trial replaces the
// target on ties). Makes exactly pop.size() evaluate calls; returns that
// count.
int de_step(Population& pop, const OptimizerParams& params, Rng& rng,
            const EvaluateFn& evaluate);

// One generation of the level-based learning swarm: members are sorted into
// `levels` fitness levels, the best level passes through unevaluated, and
// every other member learns from two exemplars drawn from strictly better
// levels. Returns the evaluate-call count, pop.size() - |best level|.
int llso_step(Population& pop, const OptimizerParams& params, Rng& rng,
              const EvaluateFn& evaluate);

int optimizer_step(Population& pop, const OptimizerParams& params, Rng& rng,
                   const EvaluateFn& evaluate);

// Building blocks, exposed so tests can pin the update rules directly.
Eigen::VectorXd de_donor(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                         const Eigen::VectorXd& x3, double f);
Eigen::VectorXd de_crossover(const Eigen::VectorXd& target,
                             const Eigen::VectorXd& donor, double cr,
                             int j_rand, Rng& rng);
void llso_update(Eigen::VectorXd& x, Eigen::VectorXd& v,
                 const Eigen::VectorXd& xa, const Eigen::VectorXd& xb,
                 double phi, Rng& rng);

// Indices of the k best (lowest) fitnesses, ties broken by lower index.
std::vector<int> select_best_indices(const std::vector<double>& fitnesses,
                                     int k);

}  // namespace mses
