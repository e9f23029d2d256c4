#include "mses/optimizers.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mses {

namespace {

int pick_distinct(Rng& rng, int np, std::initializer_list<int> taken) {
  int r;
  bool clash;
  do {
    r = rng.uniform_int(np);
    clash = false;
    for (const int t : taken) {
      if (r == t) {
        clash = true;
        break;
      }
    }
  } while (clash);
  return r;
}

}  // namespace

Population sample_initial(int dim, int np, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, Rng& rng) {
  if (np < 1) throw std::invalid_argument("sample_initial: np must be >= 1");
  if (lower.size() != dim || upper.size() != dim) {
    throw std::invalid_argument("sample_initial: bounds dimension mismatch");
  }
  Population pop;
  pop.dim = dim;
  pop.members.reserve(static_cast<size_t>(np));
  for (int i = 0; i < np; ++i) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) x(j) = rng.uniform(lower(j), upper(j));
    pop.members.push_back(std::move(x));
  }
  pop.fitnesses.assign(static_cast<size_t>(np),
                       std::numeric_limits<double>::quiet_NaN());
  return pop;
}

Eigen::VectorXd de_donor(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                         const Eigen::VectorXd& x3, double f) {
  return x1 + f * (x2 - x3);
}

Eigen::VectorXd de_crossover(const Eigen::VectorXd& target,
                             const Eigen::VectorXd& donor, double cr,
                             int j_rand, Rng& rng) {
  Eigen::VectorXd trial = target;
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    if (rng.uniform01() < cr || j == j_rand) trial(j) = donor(j);
  }
  return trial;
}

int de_step(Population& pop, const OptimizerParams& params, Rng& rng,
            const EvaluateFn& evaluate) {
  const int np = pop.size();
  if (np < 4) {
    throw std::invalid_argument("de_step: population size must be >= 4");
  }
  std::vector<Eigen::VectorXd> next_members;
  std::vector<double> next_fit(static_cast<size_t>(np));
  next_members.reserve(static_cast<size_t>(np));
  for (int i = 0; i < np; ++i) {
    const int r1 = pick_distinct(rng, np, {i});
    const int r2 = pick_distinct(rng, np, {i, r1});
    const int r3 = pick_distinct(rng, np, {i, r1, r2});
    const Eigen::VectorXd donor =
        de_donor(pop.members[static_cast<size_t>(r1)],
                 pop.members[static_cast<size_t>(r2)],
                 pop.members[static_cast<size_t>(r3)], params.f);
    const int j_rand = rng.uniform_int(pop.dim);
    Eigen::VectorXd trial = de_crossover(pop.members[static_cast<size_t>(i)],
                                         donor, params.cr, j_rand, rng);
    const double trial_fit = evaluate(trial);
    if (trial_fit <= pop.fitnesses[static_cast<size_t>(i)]) {
      next_members.push_back(std::move(trial));
      next_fit[static_cast<size_t>(i)] = trial_fit;
    } else {
      next_members.push_back(pop.members[static_cast<size_t>(i)]);
      next_fit[static_cast<size_t>(i)] = pop.fitnesses[static_cast<size_t>(i)];
    }
  }
  pop.members = std::move(next_members);
  pop.fitnesses = std::move(next_fit);
  return np;
}

void llso_update(Eigen::VectorXd& x, Eigen::VectorXd& v,
                 const Eigen::VectorXd& xa, const Eigen::VectorXd& xb,
                 double phi, Rng& rng) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double r1 = rng.uniform01();
    const double r2 = rng.uniform01();
    const double r3 = rng.uniform01();
    v(j) = r1 * v(j) + r2 * (xa(j) - x(j)) + phi * r3 * (xb(j) - x(j));
  }
  x += v;
}

int llso_step(Population& pop, const OptimizerParams& params, Rng& rng,
              const EvaluateFn& evaluate) {
  const int np = pop.size();
  const int nl = params.levels;
  if (np < 2 * nl) {
    throw std::invalid_argument("llso_step: population size must be >= 2*NL");
  }
  if (pop.velocities.empty()) {
    pop.velocities.assign(static_cast<size_t>(np),
                          Eigen::VectorXd::Zero(pop.dim));
  }

  // Rank members best-first; equal fitness keeps the lower index first.
  std::vector<int> order(static_cast<size_t>(np));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&pop](int a, int b) {
    return pop.fitnesses[static_cast<size_t>(a)] <
           pop.fitnesses[static_cast<size_t>(b)];
  });

  // Level sizes differ by at most one; leftovers go to the worst levels.
  const int base = np / nl;
  const int rem = np % nl;
  std::vector<int> level_size(static_cast<size_t>(nl));
  std::vector<int> level_start(static_cast<size_t>(nl));
  int start = 0;
  for (int l = 0; l < nl; ++l) {
    level_size[static_cast<size_t>(l)] = base + (l >= nl - rem ? 1 : 0);
    level_start[static_cast<size_t>(l)] = start;
    start += level_size[static_cast<size_t>(l)];
  }

  Population next;
  next.dim = pop.dim;
  next.members.reserve(static_cast<size_t>(np));
  next.fitnesses.reserve(static_cast<size_t>(np));
  next.velocities.reserve(static_cast<size_t>(np));

  for (int r = 0; r < level_size[0]; ++r) {
    const auto src = static_cast<size_t>(order[static_cast<size_t>(r)]);
    next.members.push_back(pop.members[src]);
    next.fitnesses.push_back(pop.fitnesses[src]);
    next.velocities.push_back(pop.velocities[src]);
  }

  int evaluations = 0;
  for (int lvl = 1; lvl < nl; ++lvl) {
    for (int r = 0; r < level_size[static_cast<size_t>(lvl)]; ++r) {
      int la = 0, lb = 0;
      if (lvl >= 2) {
        int a = rng.uniform_int(lvl);
        int b = rng.uniform_int(lvl - 1);
        if (b >= a) ++b;
        la = std::min(a, b);
        lb = std::max(a, b);
      }
      const int ia =
          level_start[static_cast<size_t>(la)] +
          rng.uniform_int(level_size[static_cast<size_t>(la)]);
      const int ib =
          level_start[static_cast<size_t>(lb)] +
          rng.uniform_int(level_size[static_cast<size_t>(lb)]);
      const auto& xa = pop.members[static_cast<size_t>(order[static_cast<size_t>(ia)])];
      const auto& xb = pop.members[static_cast<size_t>(order[static_cast<size_t>(ib)])];

      const auto src = static_cast<size_t>(
          order[static_cast<size_t>(level_start[static_cast<size_t>(lvl)] + r)]);
      Eigen::VectorXd x = pop.members[src];
      Eigen::VectorXd v = pop.velocities[src];
      llso_update(x, v, xa, xb, params.phi, rng);
      const double fit = evaluate(x);
      ++evaluations;
      next.members.push_back(std::move(x));
      next.fitnesses.push_back(fit);
      next.velocities.push_back(std::move(v));
    }
  }

  pop = std::move(next);
  return evaluations;
}

int optimizer_step(Population& pop, const OptimizerParams& params, Rng& rng,
                   const EvaluateFn& evaluate) {
  return params.kind == OptimizerKind::De
             ? de_step(pop, params, rng, evaluate)
             : llso_step(pop, params, rng, evaluate);
}

std::vector<int> select_best_indices(const std::vector<double>& fitnesses,
                                     int k) {
  std::vector<int> order(fitnesses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&fitnesses](int a, int b) {
                     return fitnesses[static_cast<size_t>(a)] <
                            fitnesses[static_cast<size_t>(b)];
                   });
  order.resize(static_cast<size_t>(std::min<size_t>(
      static_cast<size_t>(k), order.size())));
  return order;
}

}  // namespace mses
