// Shared basic types: vectors, boxes, errors, small utilities.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base class for all structured errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point or region lies outside the chart / grid it must belong to.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A fiber vector is below the zero threshold where F is not smooth.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

// The fundamental tensor lost positive-definiteness (metric defect).
class NonConvexMetricError : public Error {
 public:
  using Error::Error;
};

// Newton inversion of the Legendre transform failed to converge.
class InversionFailureError : public Error {
 public:
  InversionFailureError(const std::string& what, Vec covector_components)
      : Error(what), covector(std::move(covector_components)) {}
  Vec covector;
};

// Gram-Schmidt seeds nearly dependent on the flag vector.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Tangent basis of an immersion is rank deficient at a parameter point.
class ImmersionError : public Error {
 public:
  using Error::Error;
};

// A geodesic left the chart before the requested time; carries the exit time.
class HorizonError : public Error {
 public:
  HorizonError(const std::string& what, double exit_time)
      : Error(what), t_exit(exit_time) {}
  double t_exit;
};

// Two-point geodesic solve did not converge.
class BvpError : public Error {
 public:
  using Error::Error;
};

// Scenario configuration is invalid; carries all collected messages.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::vector<std::string> errors_list)
      : Error(what), errors(std::move(errors_list)) {}
  std::vector<std::string> errors;
};

// Axis-aligned box, used for chart domains, oracle regions and parameter
// boxes. A zero-dimensional box is valid (parameter space of a point).
struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size())
      throw DomainError("box bounds have mismatched dimensions");
    for (int i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]))
        throw DomainError("box requires lower[i] < upper[i]");
  }

  int dim() const { return static_cast<int>(lower.size()); }

  bool contains(const Vec& p, double pad = 0.0) const {
    if (p.size() != lower.size()) return false;
    for (int i = 0; i < p.size(); ++i)
      if (p[i] < lower[i] - pad || p[i] > upper[i] + pad) return false;
    return true;
  }

  bool contains_box(const Box& inner) const {
    if (inner.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (inner.lower[i] < lower[i] || inner.upper[i] > upper[i]) return false;
    return true;
  }

  bool strictly_contains_box(const Box& inner) const {
    if (inner.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (inner.lower[i] <= lower[i] || inner.upper[i] >= upper[i])
        return false;
    return true;
  }

  double width(int i) const { return upper[i] - lower[i]; }

  double max_width() const {
    double w = 0;
    for (int i = 0; i < dim(); ++i) w = std::max(w, width(i));
    return w;
  }

  double diameter() const { return (upper - lower).norm(); }

  Vec center() const { return 0.5 * (lower + upper); }

  Vec sample(std::mt19937_64& rng) const {
    Vec p(dim());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < dim(); ++i)
      p[i] = lower[i] + unit(rng) * width(i);
    return p;
  }

  Vec clamp(const Vec& p) const {
    Vec q = p;
    for (int i = 0; i < dim(); ++i)
      q[i] = std::min(std::max(q[i], lower[i]), upper[i]);
    return q;
  }
};

// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
// written to index-addressed slots so the outcome is order independent.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// FNV-1a, used for cache keys. Not cryptographic.
std::uint64_t fnv1a(const std::string& data);

// Golden-section maximizer on [a, b] for a unimodal objective; returns the
// abscissa of the maximum. Used to polish coarse sweeps.
double golden_section_max(const std::function<double(double)>& fn, double a,
                          double b, double tol);

// Formats a double with 17 significant digits (round-trip safe).
std::string format_double(double x);

}  // namespace finsler
