// Embedded submanifolds of the chart: built-in immersions (point, segment,
// line, circle, graph) and custom immersions from polynomial/trigonometric
// expression tables.
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "finsler/chart.hpp"

namespace finsler {

// One scalar expression in the parameters u_0..u_{k-1}: a sum of terms
//   coef * prod_i u_i^{e_i} * prod_j trig_j(freq * u_arg + phase).
struct ExprTerm {
  double coef = 0.0;
  std::vector<int> exponents;  // size k
  struct Trig {
    bool is_sin = true;
    int arg = 0;
    double freq = 1.0;
    double phase = 0.0;
  };
  std::vector<Trig> trigs;
};

struct Expression {
  std::vector<ExprTerm> terms;
  double value(const Vec& u) const;
  double derivative(const Vec& u, int axis) const;
};

class Submanifold {
 public:
  static Submanifold point(Vec p);
  static Submanifold segment(Vec a, Vec b);  // parameter in [0, 1]
  static Submanifold line(Vec base, Vec direction, double half_length);
  static Submanifold circle(Vec center, double radius);  // parameter in [0, 2pi]
  // Hypersurface (u, f(u)) with f given as an expression in n-1 parameters.
  static Submanifold graph(int ambient_dim, Box param_box, Expression height);
  // Custom immersion; tangents by central differences with a parameter step
  // of 1e-6 times the parameter-box width.
  static Submanifold custom(int ambient_dim, Box param_box,
                            std::vector<Expression> immersion,
                            std::vector<bool> periodic = {});

  int ambient_dim() const { return ambient_dim_; }
  int param_dim() const { return param_box_.dim(); }
  const Box& param_box() const { return param_box_; }
  bool periodic(int axis) const { return periodic_[axis]; }

  Vec immerse(const Vec& u) const;
  // k tangent vectors d p / d u_i; throws ImmersionError when the basis has
  // a singular value below 1e-8.
  std::vector<Vec> tangent_basis(const Vec& u) const;
  Mat tangent_matrix(const Vec& u) const;  // k x n, rows are the basis

  // Largest tangent norm over a coarse parameter sweep; used to match source
  // sampling to a grid step.
  double tangent_scale() const;

  void require_param(const Vec& u) const;
  std::string describe() const { return description_; }

 private:
  Submanifold() = default;

  int ambient_dim_ = 0;
  Box param_box_;
  std::vector<bool> periodic_;
  std::function<Vec(const Vec&)> immersion_;
  // Empty when tangents come from finite differences of the immersion.
  std::function<std::vector<Vec>(const Vec&)> analytic_tangents_;
  std::string description_;
};

}  // namespace finsler
