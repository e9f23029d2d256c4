#include "mses/bench.hpp"

#include <Eigen/QR>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mses/rng.hpp"

namespace mses {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double elliptic_kernel(const Eigen::VectorXd& z,
                       const std::vector<double>* weights) {
  const auto n = z.size();
  double sum = 0.0;
  if (weights != nullptr && !weights->empty()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += (*weights)[static_cast<size_t>(i)] * z(i) * z(i);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += std::pow(1e6, static_cast<double>(i) /
                                static_cast<double>(n - 1)) *
             z(i) * z(i);
    }
  }
  return sum;
}

double rastrigin_kernel(const Eigen::VectorXd& z) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    sum += z(i) * z(i) - 10.0 * std::cos(kTwoPi * z(i)) + 10.0;
  }
  return sum;
}

// Grouped so that z = 0 yields exactly 0: 20*(1 - exp(...)) and
// (e - exp(mean cos)) each cancel term-by-term.
double ackley_kernel(const Eigen::VectorXd& z) {
  const auto n = static_cast<double>(z.size());
  double sum_sq = 0.0;
  double sum_cos = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    sum_sq += z(i) * z(i);
    sum_cos += std::cos(kTwoPi * z(i));
  }
  return 20.0 - 20.0 * std::exp(-0.2 * std::sqrt(sum_sq / n)) +
         std::exp(1.0) - std::exp(sum_cos / n);
}

double schwefel12_kernel(const Eigen::VectorXd& z) {
  double running = 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    running += z(i);
    sum += running * running;
  }
  return sum;
}

double rosenbrock_kernel(const Eigen::VectorXd& z) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < z.size(); ++i) {
    const double a = z(i) * z(i) - z(i + 1);
    const double b = z(i) - 1.0;
    sum += 100.0 * a * a + b * b;
  }
  return sum;
}

double kernel_eval(BaseFn fn, const Eigen::VectorXd& z,
                   const std::vector<double>* elliptic_weights) {
  switch (fn) {
    case BaseFn::Elliptic:
      return elliptic_kernel(z, elliptic_weights);
    case BaseFn::Rastrigin:
      return rastrigin_kernel(z);
    case BaseFn::Ackley:
      return ackley_kernel(z);
    case BaseFn::Schwefel12:
      return schwefel12_kernel(z);
    case BaseFn::Rosenbrock:
      return rosenbrock_kernel(z);
  }
  throw std::invalid_argument("base_eval: unknown base function");
}

double bound_magnitude(BaseFn fn) {
  switch (fn) {
    case BaseFn::Rastrigin:
      return 5.0;
    case BaseFn::Ackley:
      return 32.0;
    default:
      return 100.0;
  }
}

std::vector<double> elliptic_weights_for(int len) {
  std::vector<double> w(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) {
    w[static_cast<size_t>(i)] =
        std::pow(1e6, static_cast<double>(i) / static_cast<double>(len - 1));
  }
  return w;
}

// Orthogonal matrix from a seeded Gaussian via QR, diagonal sign-fixed for
// determinism.
Eigen::MatrixXd random_rotation(int n, Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// Contiguous [begin, begin+len) ranges covering 0..dim-1 with the requested
// stride; a tail shorter than 2 is merged into the previous range.
std::vector<std::pair<int, int>> group_ranges(int dim, int m, int overlap) {
  const int stride = m - overlap;
  std::vector<std::pair<int, int>> ranges;
  int begin = 0;
  while (true) {
    if (begin + m >= dim) {
      ranges.emplace_back(begin, dim - begin);
      break;
    }
    ranges.emplace_back(begin, m);
    begin += stride;
  }
  if (ranges.size() > 1 && ranges.back().second < 2) {
    ranges.pop_back();
    auto& prev = ranges.back();
    prev.second = dim - prev.first;
  }
  return ranges;
}

int default_group_size(int dim) { return std::clamp(dim / 10, 2, 50); }

}  // namespace

const char* to_string(BaseFn fn) {
  switch (fn) {
    case BaseFn::Elliptic:
      return "elliptic";
    case BaseFn::Rastrigin:
      return "rastrigin";
    case BaseFn::Ackley:
      return "ackley";
    case BaseFn::Schwefel12:
      return "schwefel12";
    case BaseFn::Rosenbrock:
      return "rosenbrock";
  }
  return "?";
}

const char* to_string(Structure s) {
  switch (s) {
    case Structure::FullySeparable:
      return "fully-separable";
    case Structure::PartiallySeparable:
      return "partially-separable";
    case Structure::Overlapping:
      return "overlapping";
    case Structure::NonSeparable:
      return "non-separable";
  }
  return "?";
}

double base_eval(BaseFn fn, const Eigen::VectorXd& x) {
  if (x.size() < 2) {
    throw std::invalid_argument("base_eval: need at least 2 coordinates");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("base_eval: coordinates must be finite");
  }
  return kernel_eval(fn, x, nullptr);
}

Problem make_problem(const ProblemSpec& spec) {
  if (spec.dim < 2) {
    throw std::invalid_argument("make_problem: dim must be at least 2");
  }
  const bool grouped = spec.structure == Structure::PartiallySeparable ||
                       spec.structure == Structure::Overlapping;
  int m = spec.group_size > 0 ? spec.group_size : default_group_size(spec.dim);
  if (m > spec.dim) {
    throw std::invalid_argument("make_problem: group size exceeds dimension");
  }
  if (grouped && m < 2) {
    throw std::invalid_argument(
        "make_problem: grouped structures need group size >= 2");
  }
  int overlap = 0;
  if (spec.structure == Structure::Overlapping) {
    overlap = spec.overlap >= 0 ? spec.overlap : std::max(1, m / 5);
    if (overlap >= m) {
      throw std::invalid_argument("make_problem: overlap must be below m");
    }
  }

  Problem p;
  p.id = problem_id(spec);
  p.dim = spec.dim;
  p.structure = spec.structure;
  const double bound = bound_magnitude(spec.base);
  p.lower = Eigen::VectorXd::Constant(spec.dim, -bound);
  p.upper = Eigen::VectorXd::Constant(spec.dim, bound);

  Rng rng(spec.seed);
  p.shift.resize(spec.dim);
  for (int i = 0; i < spec.dim; ++i) {
    const double range = p.upper(i) - p.lower(i);
    p.shift(i) =
        rng.uniform(p.lower(i) + 0.1 * range, p.upper(i) - 0.1 * range);
  }

  std::vector<std::pair<int, int>> ranges;
  switch (spec.structure) {
    case Structure::FullySeparable:
    case Structure::NonSeparable:
      ranges.emplace_back(0, spec.dim);
      break;
    case Structure::PartiallySeparable: {
      const int n_groups = std::max(1, spec.dim / m);
      const int base = spec.dim / n_groups;
      const int rem = spec.dim % n_groups;
      int begin = 0;
      for (int g = 0; g < n_groups; ++g) {
        const int len = base + (g < rem ? 1 : 0);
        ranges.emplace_back(begin, len);
        begin += len;
      }
      break;
    }
    case Structure::Overlapping:
      ranges = group_ranges(spec.dim, m, overlap);
      break;
  }

  const bool rotate =
      spec.rotate && spec.structure != Structure::FullySeparable;
  for (const auto& [begin, len] : ranges) {
    ProblemGroup group;
    group.base = spec.base;
    group.indices.resize(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) group.indices[static_cast<size_t>(i)] = begin + i;
    if (rotate) group.rotation = random_rotation(len, rng);
    if (spec.base == BaseFn::Elliptic) {
      group.elliptic_weights = elliptic_weights_for(len);
    }
    p.groups.push_back(std::move(group));
  }
  return p;
}

double problem_eval(const Problem& p, const Eigen::VectorXd& x) {
  if (x.size() != p.dim) {
    throw std::invalid_argument("problem_eval: dimension mismatch");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("problem_eval: coordinates must be finite");
  }
  double total = 0.0;
  for (const auto& g : p.groups) {
    const auto len = static_cast<Eigen::Index>(g.indices.size());
    Eigen::VectorXd z(len);
    for (Eigen::Index i = 0; i < len; ++i) {
      const int idx = g.indices[static_cast<size_t>(i)];
      z(i) = x(idx) - p.shift(idx);
    }
    if (g.rotation) z = (*g.rotation) * z;
    // Rosenbrock's optimum sits at all-ones; shift it onto the group origin.
    if (g.base == BaseFn::Rosenbrock) z.array() += 1.0;
    total += kernel_eval(g.base, z,
                         g.base == BaseFn::Elliptic ? &g.elliptic_weights
                                                    : nullptr);
  }
  return total;
}

std::string problem_id(const ProblemSpec& spec) {
  return std::string(to_string(spec.structure)) + "-" +
         to_string(spec.base) + "-d" + std::to_string(spec.dim) + "-s" +
         std::to_string(spec.seed);
}

ProblemSpec parse_problem_id(const std::string& id) {
  static const Structure structures[] = {
      Structure::PartiallySeparable, Structure::FullySeparable,
      Structure::Overlapping, Structure::NonSeparable};
  static const BaseFn bases[] = {BaseFn::Elliptic, BaseFn::Rastrigin,
                                 BaseFn::Ackley, BaseFn::Schwefel12,
                                 BaseFn::Rosenbrock};

  ProblemSpec spec;
  std::string rest;
  bool matched = false;
  for (const auto s : structures) {
    const std::string prefix = std::string(to_string(s)) + "-";
    if (id.rfind(prefix, 0) == 0) {
      spec.structure = s;
      rest = id.substr(prefix.size());
      matched = true;
      break;
    }
  }
  if (!matched) {
    throw std::invalid_argument("unknown problem id '" + id +
                                "': expected <structure>-<base>-d<dim>-s<seed>");
  }

  matched = false;
  for (const auto b : bases) {
    const std::string prefix = std::string(to_string(b)) + "-";
    if (rest.rfind(prefix, 0) == 0) {
      spec.base = b;
      rest = rest.substr(prefix.size());
      matched = true;
      break;
    }
  }
  if (!matched) {
    throw std::invalid_argument("unknown base function in problem id '" + id +
                                "'");
  }

  if (rest.size() < 2 || rest[0] != 'd') {
    throw std::invalid_argument("missing dimension in problem id '" + id + "'");
  }
  const auto sep = rest.find("-s");
  if (sep == std::string::npos) {
    throw std::invalid_argument("missing seed in problem id '" + id + "'");
  }
  try {
    spec.dim = std::stoi(rest.substr(1, sep - 1));
    spec.seed = std::stoull(rest.substr(sep + 2));
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed numbers in problem id '" + id +
                                "'");
  }
  return spec;
}

}  // namespace mses
