#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mses {

enum class BaseFn { Elliptic, Rastrigin, Ackley, Schwefel12, Rosenbrock };

enum class Structure {
  FullySeparable,
  PartiallySeparable,
  Overlapping,
  NonSeparable
};

const char* to_string(BaseFn fn);
const char* to_string(Structure s);

// Canonical base function value; x must be finite with length >= 2.
double base_eval(BaseFn fn, const Eigen::VectorXd& x);

// Instance generator configuration. group_size 0 and overlap -1 select
// defaults derived from the dimension (see make_problem).
struct ProblemSpec {
  Structure structure = Structure::FullySeparable;
  int dim = 2;
  BaseFn base = BaseFn::Elliptic;
  int group_size = 0;  // 0: dim/10 clamped to [2, 50]
  int overlap = -1;    // -1: group_size/5, at least 1
  bool rotate = true;  // ignored for fully separable
  std::uint64_t seed = 1;
};

struct ProblemGroup {
  std::vector<int> indices;  // 0-based coordinate indices
  std::optional<Eigen::MatrixXd> rotation;
  BaseFn base = BaseFn::Elliptic;
  std::vector<double> elliptic_weights;  // precomputed when base == Elliptic
};

// A box-bounded objective composed of shifted, optionally rotated base
// functions over coordinate groups. Immutable after construction; evaluation
// is pure and thread-safe. f(shift) == 0 for every generated instance.
struct Problem {
  std::string id;
  int dim = 0;
  Eigen::VectorXd lower, upper;
  Eigen::VectorXd shift;  // optimum location
  Structure structure = Structure::FullySeparable;
  std::vector<ProblemGroup> groups;
};

// Deterministic in spec.seed: shift is drawn uniformly from the central 80%
// of the box and per-group rotations come from QR-orthonormalized seeded
// Gaussian matrices.
Problem make_problem(const ProblemSpec& spec);

double problem_eval(const Problem& p, const Eigen::VectorXd& x);

// Registry ids have the form <structure>-<base>-d<dim>-s<seed>, e.g.
// "partially-separable-rastrigin-d100-s7".
std::string problem_id(const ProblemSpec& spec);
ProblemSpec parse_problem_id(const std::string& id);

}  // namespace mses
