#include "finsler/submanifold.hpp"

#include <cmath>

namespace finsler {

double Expression::value(const Vec& u) const {
  double acc = 0.0;
  for (const auto& term : terms) {
    double t = term.coef;
    for (size_t i = 0; i < term.exponents.size(); ++i)
      for (int e = 0; e < term.exponents[i]; ++e) t *= u[static_cast<int>(i)];
    for (const auto& trig : term.trigs) {
      double a = trig.freq * u[trig.arg] + trig.phase;
      t *= trig.is_sin ? std::sin(a) : std::cos(a);
    }
    acc += t;
  }
  return acc;
}

double Expression::derivative(const Vec& u, int axis) const {
  // Product rule over the monomial and each trig factor.
  double acc = 0.0;
  for (const auto& term : terms) {
    double mono = 1.0;
    for (size_t i = 0; i < term.exponents.size(); ++i)
      for (int e = 0; e < term.exponents[i]; ++e) mono *= u[static_cast<int>(i)];
    std::vector<double> trig_vals(term.trigs.size());
    for (size_t j = 0; j < term.trigs.size(); ++j) {
      const auto& trig = term.trigs[j];
      double a = trig.freq * u[trig.arg] + trig.phase;
      trig_vals[j] = trig.is_sin ? std::sin(a) : std::cos(a);
    }
    double all_trigs = 1.0;
    for (double tv : trig_vals) all_trigs *= tv;

    // Monomial factor differentiated.
    int e_axis = axis < static_cast<int>(term.exponents.size())
                     ? term.exponents[axis]
                     : 0;
    if (e_axis > 0) {
      double dmono = e_axis * term.coef;
      for (size_t i = 0; i < term.exponents.size(); ++i) {
        int e = term.exponents[i] - (static_cast<int>(i) == axis ? 1 : 0);
        for (int r = 0; r < e; ++r) dmono *= u[static_cast<int>(i)];
      }
      acc += dmono * all_trigs;
    }
    // Each trig factor differentiated.
    for (size_t j = 0; j < term.trigs.size(); ++j) {
      const auto& trig = term.trigs[j];
      if (trig.arg != axis) continue;
      double a = trig.freq * u[trig.arg] + trig.phase;
      double dj = trig.freq * (trig.is_sin ? std::cos(a) : -std::sin(a));
      double prod = term.coef * mono * dj;
      for (size_t l = 0; l < term.trigs.size(); ++l)
        if (l != j) prod *= trig_vals[l];
      acc += prod;
    }
  }
  return acc;
}

namespace {

Box zero_dim_box() {
  Box b;
  b.lower = Vec(0);
  b.upper = Vec(0);
  return b;
}

}  // namespace

Submanifold Submanifold::point(Vec p) {
  Submanifold s;
  s.ambient_dim_ = static_cast<int>(p.size());
  s.param_box_ = zero_dim_box();
  s.periodic_ = {};
  Vec copy = p;
  s.immersion_ = [copy](const Vec&) { return copy; };
  s.analytic_tangents_ = [](const Vec&) { return std::vector<Vec>{}; };
  s.description_ = "point";
  return s;
}

Submanifold Submanifold::segment(Vec a, Vec b) {
  if (a.size() != b.size())
    throw DomainError("segment endpoints have mismatched dimensions");
  Submanifold s;
  s.ambient_dim_ = static_cast<int>(a.size());
  Vec lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  s.param_box_ = Box(lo, hi);
  s.periodic_ = {false};
  Vec av = a, bv = b;
  s.immersion_ = [av, bv](const Vec& u) -> Vec { return av + u[0] * (bv - av); };
  Vec dir = bv - av;
  s.analytic_tangents_ = [dir](const Vec&) { return std::vector<Vec>{dir}; };
  s.description_ = "segment";
  return s;
}

Submanifold Submanifold::line(Vec base, Vec direction, double half_length) {
  if (half_length <= 0) throw DomainError("line half_length must be positive");
  Submanifold s;
  s.ambient_dim_ = static_cast<int>(base.size());
  Vec lo(1), hi(1);
  lo << -half_length;
  hi << half_length;
  s.param_box_ = Box(lo, hi);
  s.periodic_ = {false};
  Vec b = base, d = direction;
  s.immersion_ = [b, d](const Vec& u) -> Vec { return b + u[0] * d; };
  s.analytic_tangents_ = [d](const Vec&) { return std::vector<Vec>{d}; };
  s.description_ = "line";
  return s;
}

Submanifold Submanifold::circle(Vec center, double radius) {
  if (center.size() != 2)
    throw DomainError("circle submanifold requires a 2-d chart");
  if (radius <= 0) throw DomainError("circle radius must be positive");
  Submanifold s;
  s.ambient_dim_ = 2;
  Vec lo(1), hi(1);
  lo << 0.0;
  hi << 2.0 * M_PI;
  s.param_box_ = Box(lo, hi);
  s.periodic_ = {true};
  Vec c = center;
  double r = radius;
  s.immersion_ = [c, r](const Vec& u) -> Vec {
    Vec p(2);
    p << c[0] + r * std::cos(u[0]), c[1] + r * std::sin(u[0]);
    return p;
  };
  s.analytic_tangents_ = [r](const Vec& u) {
    Vec t(2);
    t << -r * std::sin(u[0]), r * std::cos(u[0]);
    return std::vector<Vec>{t};
  };
  s.description_ = "circle";
  return s;
}

Submanifold Submanifold::graph(int ambient_dim, Box param_box,
                               Expression height) {
  if (param_box.dim() != ambient_dim - 1)
    throw DomainError("graph parameter box must have dimension n - 1");
  Submanifold s;
  s.ambient_dim_ = ambient_dim;
  s.param_box_ = std::move(param_box);
  s.periodic_.assign(s.param_box_.dim(), false);
  Expression h = std::move(height);
  int n = ambient_dim;
  s.immersion_ = [h, n](const Vec& u) -> Vec {
    Vec p(n);
    p.head(n - 1) = u;
    p[n - 1] = h.value(u);
    return p;
  };
  s.analytic_tangents_ = [h, n](const Vec& u) {
    std::vector<Vec> basis;
    for (int i = 0; i < n - 1; ++i) {
      Vec t = Vec::Zero(n);
      t[i] = 1.0;
      t[n - 1] = h.derivative(u, i);
      basis.push_back(t);
    }
    return basis;
  };
  s.description_ = "graph";
  return s;
}

Submanifold Submanifold::custom(int ambient_dim, Box param_box,
                                std::vector<Expression> immersion,
                                std::vector<bool> periodic) {
  if (static_cast<int>(immersion.size()) != ambient_dim)
    throw DomainError("custom immersion needs one expression per coordinate");
  if (param_box.dim() < 1 || param_box.dim() > ambient_dim - 1)
    throw DomainError("custom immersion parameter dimension out of range");
  Submanifold s;
  s.ambient_dim_ = ambient_dim;
  s.param_box_ = std::move(param_box);
  if (periodic.empty()) periodic.assign(s.param_box_.dim(), false);
  s.periodic_ = std::move(periodic);
  auto exprs = std::move(immersion);
  int n = ambient_dim;
  s.immersion_ = [exprs, n](const Vec& u) -> Vec {
    Vec p(n);
    for (int i = 0; i < n; ++i) p[i] = exprs[i].value(u);
    return p;
  };
  // Tangents by central differences, per the custom-immersion contract.
  s.analytic_tangents_ = nullptr;
  s.description_ = "custom";
  return s;
}

void Submanifold::require_param(const Vec& u) const {
  if (u.size() != param_dim())
    throw DomainError("parameter dimension does not match submanifold");
  for (int i = 0; i < param_dim(); ++i) {
    if (periodic_[i]) continue;
    if (u[i] < param_box_.lower[i] - 1e-12 ||
        u[i] > param_box_.upper[i] + 1e-12)
      throw DomainError("parameter outside the parameter box");
  }
}

Vec Submanifold::immerse(const Vec& u) const {
  require_param(u);
  return immersion_(u);
}

std::vector<Vec> Submanifold::tangent_basis(const Vec& u) const {
  require_param(u);
  std::vector<Vec> basis;
  if (analytic_tangents_) {
    basis = analytic_tangents_(u);
  } else {
    basis.reserve(param_dim());
    for (int i = 0; i < param_dim(); ++i) {
      double h = 1e-6 * param_box_.width(i);
      Vec up = u, um = u;
      up[i] += h;
      um[i] -= h;
      basis.push_back((immersion_(up) - immersion_(um)) / (2.0 * h));
    }
  }
  if (!basis.empty()) {
    Mat t(static_cast<int>(basis.size()), ambient_dim_);
    for (size_t i = 0; i < basis.size(); ++i) t.row(static_cast<int>(i)) = basis[i];
    Eigen::JacobiSVD<Mat> svd(t);
    if (svd.singularValues().minCoeff() <= 1e-8)
      throw ImmersionError("tangent basis is rank deficient at a parameter point");
  }
  return basis;
}

Mat Submanifold::tangent_matrix(const Vec& u) const {
  auto basis = tangent_basis(u);
  Mat t(static_cast<int>(basis.size()), ambient_dim_);
  for (size_t i = 0; i < basis.size(); ++i) t.row(static_cast<int>(i)) = basis[i];
  return t;
}

double Submanifold::tangent_scale() const {
  if (param_dim() == 0) return 0.0;
  double scale = 0.0;
  const int sweeps = 64;
  Vec u = param_box_.center();
  for (int axis = 0; axis < param_dim(); ++axis) {
    for (int i = 0; i <= sweeps; ++i) {
      Vec probe = u;
      probe[axis] =
          param_box_.lower[axis] + param_box_.width(axis) * i / sweeps;
      for (const Vec& t : tangent_basis(probe)) scale = std::max(scale, t.norm());
    }
  }
  return scale;
}

}  // namespace finsler
