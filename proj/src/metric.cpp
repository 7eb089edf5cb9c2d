#include "finsler/metric.hpp"

#include <cmath>

namespace finsler {

namespace {

// Fiber steps follow the relative-step policy: 1e-5 for first derivatives,
// 1e-4 for the Hessian of F^2. Position steps use the same first-order rule.
double first_step(const Vec& v) { return 1e-5 * std::max(v.norm(), 1.0); }
double hessian_step(const Vec& v) { return 1e-4 * std::max(v.norm(), 1.0); }
double position_step(const Vec& p) { return 1e-5 * std::max(p.norm(), 1.0); }

class RiemannianKernel final : public MetricKernel {
 public:
  explicit RiemannianKernel(std::shared_ptr<MatrixField> g) : g_(std::move(g)) {}

  double value(const Vec& p, const Vec& v) const override {
    return std::sqrt(std::max(0.0, v.dot(g_->value(p) * v)));
  }
  bool has_analytic_derivatives() const override { return true; }
  bool spatially_constant() const override { return g_->spatially_constant(); }

  Vec half_gradient_sq(const Vec& p, const Vec& v) const override {
    return g_->value(p) * v;
  }
  Mat fundamental_tensor(const Vec& p, const Vec&) const override {
    return g_->value(p);
  }
  Vec position_gradient_sq(const Vec& p, const Vec& v) const override {
    Vec out(p.size());
    for (int k = 0; k < p.size(); ++k) out[k] = v.dot(g_->derivative(p, k) * v);
    return out;
  }
  Mat mixed_hessian_sq(const Vec& p, const Vec& v) const override {
    Mat out(p.size(), p.size());
    for (int j = 0; j < p.size(); ++j) out.col(j) = 2.0 * (g_->derivative(p, j) * v);
    return out;
  }
  std::unique_ptr<MetricKernel> clone() const override {
    return std::make_unique<RiemannianKernel>(g_->clone());
  }
  std::string describe() const override {
    return "riemannian(" + g_->describe() + ")";
  }

 private:
  std::shared_ptr<MatrixField> g_;
};

// F = sqrt(v' A(p) v) + b(p).v with |b|_{A^{-1}} < 1. Covers the Randers
// family and, with constant coefficients, Minkowski norms.
class RandersKernel final : public MetricKernel {
 public:
  RandersKernel(std::shared_ptr<MatrixField> a, std::shared_ptr<OneFormField> b)
      : a_(std::move(a)), b_(std::move(b)) {}

  double value(const Vec& p, const Vec& v) const override {
    double alpha = std::sqrt(std::max(0.0, v.dot(a_->value(p) * v)));
    return alpha + b_->value(p).dot(v);
  }
  bool has_analytic_derivatives() const override { return true; }
  bool spatially_constant() const override {
    return a_->spatially_constant() && b_->spatially_constant();
  }

  Vec half_gradient_sq(const Vec& p, const Vec& v) const override {
    Mat A = a_->value(p);
    Vec Av = A * v;
    double alpha = std::sqrt(std::max(0.0, v.dot(Av)));
    Vec b = b_->value(p);
    double f = alpha + b.dot(v);
    return f * (Av / alpha + b);
  }
  Mat fundamental_tensor(const Vec& p, const Vec& v) const override {
    Mat A = a_->value(p);
    Vec Av = A * v;
    double alpha = std::sqrt(std::max(0.0, v.dot(Av)));
    Vec b = b_->value(p);
    double f = alpha + b.dot(v);
    Vec ell = Av / alpha + b;
    return ell * ell.transpose() +
           (f / alpha) * (A - (Av * Av.transpose()) / (alpha * alpha));
  }
  Vec position_gradient_sq(const Vec& p, const Vec& v) const override {
    Mat A = a_->value(p);
    double alpha = std::sqrt(std::max(0.0, v.dot(A * v)));
    Vec b = b_->value(p);
    double f = alpha + b.dot(v);
    Mat Jb = b_->jacobian(p);
    Vec out(p.size());
    for (int k = 0; k < p.size(); ++k) {
      double dalpha = v.dot(a_->derivative(p, k) * v) / (2.0 * alpha);
      double dbeta = Jb.col(k).dot(v);
      out[k] = 2.0 * f * (dalpha + dbeta);
    }
    return out;
  }
  Mat mixed_hessian_sq(const Vec& p, const Vec& v) const override {
    Mat A = a_->value(p);
    Vec Av = A * v;
    double alpha = std::sqrt(std::max(0.0, v.dot(Av)));
    Vec b = b_->value(p);
    double f = alpha + b.dot(v);
    Vec ell = Av / alpha + b;
    Mat Jb = b_->jacobian(p);
    Mat out(p.size(), p.size());
    for (int j = 0; j < p.size(); ++j) {
      Mat dA = a_->derivative(p, j);
      Vec dAv = dA * v;
      double vdAv = v.dot(dAv);
      double dalpha = vdAv / (2.0 * alpha);
      double df = dalpha + Jb.col(j).dot(v);
      Vec dell = dAv / alpha - Av * (vdAv / (2.0 * alpha * alpha * alpha)) +
                 Jb.col(j);
      out.col(j) = 2.0 * df * ell + 2.0 * f * dell;
    }
    return out;
  }
  std::unique_ptr<MetricKernel> clone() const override {
    return std::make_unique<RandersKernel>(a_->clone(), b_->clone());
  }
  std::string describe() const override {
    return "randers(" + a_->describe() + ";" + b_->describe() + ")";
  }

  const MatrixField& riemannian_part() const { return *a_; }
  const OneFormField& one_form() const { return *b_; }

 private:
  std::shared_ptr<MatrixField> a_;
  std::shared_ptr<OneFormField> b_;
};

class CustomKernel final : public MetricKernel {
 public:
  explicit CustomKernel(std::function<double(const Vec&, const Vec&)> f)
      : f_(std::move(f)) {}
  double value(const Vec& p, const Vec& v) const override { return f_(p, v); }
  bool has_analytic_derivatives() const override { return false; }
  bool spatially_constant() const override { return false; }
  std::unique_ptr<MetricKernel> clone() const override {
    return std::make_unique<CustomKernel>(f_);
  }
  std::string describe() const override { return "custom"; }

 private:
  std::function<double(const Vec&, const Vec&)> f_;
};

class ReverseKernel final : public MetricKernel {
 public:
  explicit ReverseKernel(std::unique_ptr<MetricKernel> base)
      : base_(std::move(base)) {}
  double value(const Vec& p, const Vec& v) const override {
    return base_->value(p, -v);
  }
  bool has_analytic_derivatives() const override {
    return base_->has_analytic_derivatives();
  }
  bool spatially_constant() const override {
    return base_->spatially_constant();
  }
  Vec half_gradient_sq(const Vec& p, const Vec& v) const override {
    return -base_->half_gradient_sq(p, -v);
  }
  Mat fundamental_tensor(const Vec& p, const Vec& v) const override {
    return base_->fundamental_tensor(p, -v);
  }
  Vec position_gradient_sq(const Vec& p, const Vec& v) const override {
    return base_->position_gradient_sq(p, -v);
  }
  Mat mixed_hessian_sq(const Vec& p, const Vec& v) const override {
    return -base_->mixed_hessian_sq(p, -v);
  }
  std::unique_ptr<MetricKernel> clone() const override {
    return std::make_unique<ReverseKernel>(base_->clone());
  }
  std::string describe() const override {
    return "reverse(" + base_->describe() + ")";
  }
  const MetricKernel& base() const { return *base_; }

 private:
  std::unique_ptr<MetricKernel> base_;
};

// Positivity of a Randers metric requires the A^{-1}-norm of b below 1.
void check_randers_positivity(const Chart& chart, const MatrixField& a,
                              const OneFormField& b) {
  auto norm_at = [&](const Vec& p) {
    Mat A = a.value(p);
    Vec bv = b.value(p);
    return std::sqrt(std::max(0.0, bv.dot(A.llt().solve(bv))));
  };
  std::vector<Vec> probes;
  probes.push_back(chart.domain().center());
  if (!(a.spatially_constant() && b.spatially_constant())) {
    std::mt19937_64 rng(0x5eedu);
    for (int i = 0; i < 512; ++i) probes.push_back(chart.domain().sample(rng));
    probes.push_back(chart.domain().lower);
    probes.push_back(chart.domain().upper);
  }
  for (const Vec& p : probes) {
    double norm = norm_at(p);
    if (!(norm < 1.0 - 1e-9))
      throw NonConvexMetricError(
          "randers one-form has a-norm " + format_double(norm) +
          " >= 1 at a sampled point; metric would lose positivity");
  }
}

}  // namespace

Vec MetricKernel::half_gradient_sq(const Vec&, const Vec&) const {
  throw Error("kernel has no analytic derivatives");
}
Mat MetricKernel::fundamental_tensor(const Vec&, const Vec&) const {
  throw Error("kernel has no analytic derivatives");
}
Vec MetricKernel::position_gradient_sq(const Vec&, const Vec&) const {
  throw Error("kernel has no analytic derivatives");
}
Mat MetricKernel::mixed_hessian_sq(const Vec&, const Vec&) const {
  throw Error("kernel has no analytic derivatives");
}

FinslerMetric::FinslerMetric(Chart chart,
                             std::shared_ptr<const MetricKernel> kernel,
                             DiffBackend backend, std::string family)
    : chart_(std::move(chart)),
      kernel_(std::move(kernel)),
      backend_(backend),
      family_(std::move(family)) {}

FinslerMetric FinslerMetric::riemannian(Chart chart,
                                        std::shared_ptr<MatrixField> tensor,
                                        DiffBackend backend) {
  auto kernel = std::make_shared<RiemannianKernel>(std::move(tensor));
  return FinslerMetric(std::move(chart), kernel, backend, "riemannian");
}

FinslerMetric FinslerMetric::euclidean(Chart chart) {
  int n = chart.dim();
  return riemannian(std::move(chart),
                    std::make_shared<ConstantMatrixField>(Mat::Identity(n, n)));
}

FinslerMetric FinslerMetric::minkowski(Chart chart, Mat quadratic, Vec linear,
                                       DiffBackend backend) {
  int n = chart.dim();
  if (linear.size() == 0) linear = Vec::Zero(n);
  auto a = std::make_shared<ConstantMatrixField>(std::move(quadratic));
  auto b = std::make_shared<ConstantOneFormField>(std::move(linear));
  check_randers_positivity(chart, *a, *b);
  auto kernel = std::make_shared<RandersKernel>(a, b);
  return FinslerMetric(std::move(chart), kernel, backend, "minkowski");
}

FinslerMetric FinslerMetric::randers(Chart chart,
                                     std::shared_ptr<MatrixField> a,
                                     std::shared_ptr<OneFormField> b,
                                     DiffBackend backend) {
  check_randers_positivity(chart, *a, *b);
  auto kernel = std::make_shared<RandersKernel>(std::move(a), std::move(b));
  return FinslerMetric(std::move(chart), kernel, backend, "randers");
}

FinslerMetric FinslerMetric::custom(
    Chart chart, std::function<double(const Vec&, const Vec&)> f) {
  auto kernel = std::make_shared<CustomKernel>(std::move(f));
  return FinslerMetric(std::move(chart), kernel, DiffBackend::FiniteDifference,
                       "custom");
}

void FinslerMetric::require_nonzero(const Vec& v) const {
  if (v.norm() < chart_.zero_threshold())
    throw DegenerateVectorError("vector is below the zero threshold");
}

double FinslerMetric::evaluate(const Vec& p, const Vec& v) const {
  chart_.require_point(p);
  chart_.require_vector_dim(v);
  if (v.isZero(0.0)) return 0.0;
  double f = kernel_->value(p, v);
  if (!std::isfinite(f) ||
      (f <= 0.0 && v.norm() >= chart_.zero_threshold()))
    throw NonConvexMetricError("F is not positive on a nonzero vector");
  return std::max(f, 0.0);
}

double FinslerMetric::value_unchecked(const Vec& p, const Vec& v) const {
  return kernel_->value(p, v);
}

Vec FinslerMetric::fd_half_gradient(const Vec& p, const Vec& v) const {
  double h = first_step(v);
  Vec out(v.size());
  Vec w = v;
  for (int i = 0; i < v.size(); ++i) {
    w[i] = v[i] + h;
    double fp = kernel_->value(p, w);
    w[i] = v[i] - h;
    double fm = kernel_->value(p, w);
    w[i] = v[i];
    out[i] = (fp * fp - fm * fm) / (4.0 * h);
  }
  return out;
}

Mat FinslerMetric::fd_tensor(const Vec& p, const Vec& v) const {
  double h = hessian_step(v);
  int n = static_cast<int>(v.size());
  auto fsq = [&](const Vec& w) {
    double f = kernel_->value(p, w);
    return f * f;
  };
  Mat out(n, n);
  double f0 = fsq(v);
  Vec w = v;
  for (int i = 0; i < n; ++i) {
    w[i] = v[i] + h;
    double fp = fsq(w);
    w[i] = v[i] - h;
    double fm = fsq(w);
    w[i] = v[i];
    out(i, i) = 0.5 * (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Vec u = v;
      u[i] += h;
      u[j] += h;
      double fpp = fsq(u);
      u[j] = v[j] - h;
      double fpm = fsq(u);
      u[i] = v[i] - h;
      double fmm = fsq(u);
      u[j] = v[j] + h;
      double fmp = fsq(u);
      double val = 0.5 * (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      out(i, j) = val;
      out(j, i) = val;
    }
  }
  return out;
}

Vec FinslerMetric::fd_position_gradient(const Vec& p, const Vec& v) const {
  double h = position_step(p);
  Vec out(p.size());
  Vec q = p;
  for (int k = 0; k < p.size(); ++k) {
    q[k] = p[k] + h;
    double fp = kernel_->value(q, v);
    q[k] = p[k] - h;
    double fm = kernel_->value(q, v);
    q[k] = p[k];
    out[k] = (fp * fp - fm * fm) / (2.0 * h);
  }
  return out;
}

Mat FinslerMetric::fd_mixed(const Vec& p, const Vec& v) const {
  double h = position_step(p);
  int n = static_cast<int>(p.size());
  Mat out(n, n);
  Vec q = p;
  auto half_grad = [&](const Vec& at) {
    return analytic_path() ? kernel_->half_gradient_sq(at, v)
                           : fd_half_gradient(at, v);
  };
  for (int j = 0; j < n; ++j) {
    q[j] = p[j] + h;
    Vec gp = half_grad(q);
    q[j] = p[j] - h;
    Vec gm = half_grad(q);
    q[j] = p[j];
    out.col(j) = (gp - gm) / h;  //  2 * central difference of the half grad
  }
  return out;
}

void FinslerMetric::audit_tensor(const Mat& g, const Vec& v) const {
  Mat sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  double scale = std::max(1e-300, sym.cwiseAbs().maxCoeff());
  if (eig.eigenvalues()[0] <= 1e-10 * scale)
    throw NonConvexMetricError(
        "fundamental tensor is not positive-definite at |v|=" +
        format_double(v.norm()));
}

Mat FinslerMetric::fundamental_tensor(const Vec& p, const Vec& v) const {
  chart_.require_point(p);
  chart_.require_vector_dim(v);
  require_nonzero(v);
  Mat g = analytic_path() ? kernel_->fundamental_tensor(p, v) : fd_tensor(p, v);
  g = 0.5 * (g + g.transpose());
  audit_tensor(g, v);
  return g;
}

Vec FinslerMetric::legendre_components(const Vec& p, const Vec& v) const {
  chart_.require_point(p);
  chart_.require_vector_dim(v);
  require_nonzero(v);
  return analytic_path() ? kernel_->half_gradient_sq(p, v)
                         : fd_half_gradient(p, v);
}

MetricDerivatives FinslerMetric::derivatives(const Vec& p, const Vec& v,
                                             bool check_domain) const {
  if (check_domain) chart_.require_point(p);
  MetricDerivatives d;
  d.value = kernel_->value(p, v);
  if (analytic_path()) {
    d.half_gradient = kernel_->half_gradient_sq(p, v);
    d.tensor = kernel_->fundamental_tensor(p, v);
    d.position_gradient = kernel_->position_gradient_sq(p, v);
    d.mixed = kernel_->mixed_hessian_sq(p, v);
  } else {
    d.half_gradient = fd_half_gradient(p, v);
    d.tensor = fd_tensor(p, v);
    d.position_gradient = fd_position_gradient(p, v);
    d.mixed = fd_mixed(p, v);
  }
  d.tensor = 0.5 * (d.tensor + d.tensor.transpose());
  return d;
}

FinslerMetric FinslerMetric::reverse() const {
  if (auto* rev = dynamic_cast<const ReverseKernel*>(kernel_.get())) {
    std::shared_ptr<const MetricKernel> base(rev->base().clone().release());
    std::string fam = family_;
    const std::string suffix = ".reverse";
    if (fam.size() > suffix.size() &&
        fam.compare(fam.size() - suffix.size(), suffix.size(), suffix) == 0)
      fam = fam.substr(0, fam.size() - suffix.size());
    return FinslerMetric(chart_, base, backend_, fam);
  }
  auto kernel = std::make_shared<ReverseKernel>(kernel_->clone());
  return FinslerMetric(chart_, kernel, backend_, family_ + ".reverse");
}

bool FinslerMetric::is_reverse() const {
  return dynamic_cast<const ReverseKernel*>(kernel_.get()) != nullptr;
}

double FinslerMetric::reversibility_ratio(const Vec& p, const Vec& v) const {
  double fwd = evaluate(p, v);
  double bwd = evaluate(p, -v);
  if (fwd <= 0.0) throw DegenerateVectorError("ratio needs a nonzero vector");
  return bwd / fwd;
}

double FinslerMetric::reversibility_constant(const Box& region,
                                             int samples) const {
  if (region.dim() != chart_.dim())
    throw DomainError("region dimension does not match chart");
  if (!chart_.domain().contains_box(region))
    throw DomainError("region exceeds chart domain");
  if (samples < 1) throw DomainError("samples must be at least 1");

  int n = chart_.dim();
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::vector<Vec> points;
  points.push_back(region.center());
  for (int i = 1; i < samples; ++i) points.push_back(region.sample(rng));

  double best = 0.0;
  for (const Vec& p : points) {
    auto ratio_dir = [&](const Vec& d) {
      double fwd = kernel_->value(p, d);
      double bwd = kernel_->value(p, -d);
      return bwd / fwd;
    };
    double point_best = 0.0;
    if (n == 2) {
      auto ratio_angle = [&](double t) {
        Vec d(2);
        d << std::cos(t), std::sin(t);
        return ratio_dir(d);
      };
      const int coarse = 256;  // even count keeps the sweep antipodally closed
      double best_t = 0.0;
      double best_r = -1.0;
      for (int i = 0; i < coarse; ++i) {
        double t = 2.0 * M_PI * i / coarse;
        double r = ratio_angle(t);
        if (r > best_r) {
          best_r = r;
          best_t = t;
        }
      }
      double span = 2.0 * M_PI / coarse;
      double t = golden_section_max(ratio_angle, best_t - span, best_t + span,
                                    1e-12);
      point_best = ratio_angle(t);
    } else {
      std::normal_distribution<double> gauss(0.0, 1.0);
      Vec best_d = Vec::Unit(n, 0);
      double best_r = -1.0;
      for (int i = 0; i < 256; ++i) {
        Vec d(n);
        for (int k = 0; k < n; ++k) d[k] = gauss(rng);
        if (d.norm() < 1e-12) continue;
        d.normalize();
        for (const Vec& cand : {d, Vec(-d)}) {
          double r = ratio_dir(cand);
          if (r > best_r) {
            best_r = r;
            best_d = cand;
          }
        }
      }
      // Polish by plane rotations against each coordinate axis.
      for (int round = 0; round < 3; ++round) {
        for (int k = 0; k < n; ++k) {
          Vec u = Vec::Unit(n, k) - best_d[k] * best_d;
          if (u.norm() < 1e-10) continue;
          u.normalize();
          Vec d0 = best_d;
          auto ratio_rot = [&](double t) {
            return ratio_dir(std::cos(t) * d0 + std::sin(t) * u);
          };
          double span = round == 0 ? M_PI / 2 : 0.1;
          double t = golden_section_max(ratio_rot, -span, span, 1e-12);
          best_d = std::cos(t) * d0 + std::sin(t) * u;
          best_d.normalize();
        }
      }
      point_best = ratio_dir(best_d);
    }
    best = std::max(best, point_best);
  }
  return best;
}

std::string FinslerMetric::describe() const {
  return kernel_->describe() +
         (backend_ == DiffBackend::Analytic ? "" : "|fd");
}

}  // namespace finsler
