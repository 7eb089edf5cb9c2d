// Finsler metrics on a coordinate chart: evaluation of F, the fundamental
// tensor, fiber and position derivatives of F^2, the reverse metric and the
// reversibility constant.
#pragma once

#include <functional>
#include <memory>
#include <string>

#include "finsler/chart.hpp"
#include "finsler/fields.hpp"

namespace finsler {

enum class DiffBackend { Analytic, FiniteDifference };

// Everything the geodesic equations need at one state (x, v).
struct MetricDerivatives {
  double value = 0.0;    // F(x, v)
  Vec half_gradient;     // (1/2) d(F^2)/dv, equals g_v(v, .)
  Mat tensor;            // fundamental tensor g_v
  Vec position_gradient; // d(F^2)/dx
  Mat mixed;             // mixed(i, j) = d^2(F^2) / (dv_i dx_j)
};

// Family backend. Kernels are pure formulas with no chart checks; the
// FinslerMetric wrapper enforces the domain and zero-vector contracts.
class MetricKernel {
 public:
  virtual ~MetricKernel() = default;
  virtual double value(const Vec& p, const Vec& v) const = 0;
  virtual bool has_analytic_derivatives() const = 0;
  virtual bool spatially_constant() const = 0;
  virtual Vec half_gradient_sq(const Vec& p, const Vec& v) const;
  virtual Mat fundamental_tensor(const Vec& p, const Vec& v) const;
  virtual Vec position_gradient_sq(const Vec& p, const Vec& v) const;
  virtual Mat mixed_hessian_sq(const Vec& p, const Vec& v) const;
  virtual std::unique_ptr<MetricKernel> clone() const = 0;
  virtual std::string describe() const = 0;
};

struct TangentVector {
  Vec point;
  Vec components;
};

class FinslerMetric {
 public:
  static FinslerMetric riemannian(Chart chart,
                                  std::shared_ptr<MatrixField> tensor,
                                  DiffBackend backend = DiffBackend::Analytic);
  static FinslerMetric euclidean(Chart chart);
  // Position-independent norm sqrt(v' Q v) + <linear, v>.
  static FinslerMetric minkowski(Chart chart, Mat quadratic,
                                 Vec linear = Vec(),
                                 DiffBackend backend = DiffBackend::Analytic);
  static FinslerMetric randers(Chart chart, std::shared_ptr<MatrixField> a,
                               std::shared_ptr<OneFormField> b,
                               DiffBackend backend = DiffBackend::Analytic);
  static FinslerMetric custom(Chart chart,
                              std::function<double(const Vec&, const Vec&)> f);

  // F(p, v). Zero vector returns 0; points outside the chart throw.
  double evaluate(const Vec& p, const Vec& v) const;

  // g_v at (p, v); v must be above the zero threshold. Audited for
  // positive-definiteness on every call.
  Mat fundamental_tensor(const Vec& p, const Vec& v) const;

  // Components of the covector g_v(v, .), i.e. (1/2) d(F^2)/dv.
  Vec legendre_components(const Vec& p, const Vec& v) const;

  FinslerMetric reverse() const;
  bool is_reverse() const;

  // Max of F(p,-v)/F(p,v) over sampled base points with a per-point sweep
  // and local polish over unit directions. 1 for reversible metrics.
  double reversibility_constant(const Box& region, int samples) const;
  double reversibility_ratio(const Vec& p, const Vec& v) const;

  // Full derivative bundle; integrators pass check_domain = false to probe
  // stage points slightly past the box without tripping the contract.
  MetricDerivatives derivatives(const Vec& p, const Vec& v,
                                bool check_domain = true) const;
  double value_unchecked(const Vec& p, const Vec& v) const;

  const Chart& chart() const { return chart_; }
  DiffBackend backend() const { return backend_; }
  const std::string& family() const { return family_; }
  bool spatially_constant() const { return kernel_->spatially_constant(); }
  std::string describe() const;

 private:
  FinslerMetric(Chart chart, std::shared_ptr<const MetricKernel> kernel,
                DiffBackend backend, std::string family);

  void require_nonzero(const Vec& v) const;
  bool analytic_path() const {
    return backend_ == DiffBackend::Analytic &&
           kernel_->has_analytic_derivatives();
  }

  Vec fd_half_gradient(const Vec& p, const Vec& v) const;
  Mat fd_tensor(const Vec& p, const Vec& v) const;
  Vec fd_position_gradient(const Vec& p, const Vec& v) const;
  Mat fd_mixed(const Vec& p, const Vec& v) const;
  void audit_tensor(const Mat& g, const Vec& v) const;

  Chart chart_;
  std::shared_ptr<const MetricKernel> kernel_;
  DiffBackend backend_;
  std::string family_;
};

}  // namespace finsler
