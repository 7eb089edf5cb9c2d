// Coefficient fields for the built-in metric families: symmetric tensor
// fields g_ij(p) and one-form fields b_i(p), each with spatial derivatives.
#pragma once

#include <functional>
#include <memory>

#include "finsler/common.hpp"

namespace finsler {

class MatrixField {
 public:
  virtual ~MatrixField() = default;
  virtual Mat value(const Vec& p) const = 0;
  // d/dp_axis of the matrix entries.
  virtual Mat derivative(const Vec& p, int axis) const = 0;
  virtual bool spatially_constant() const { return false; }
  virtual std::shared_ptr<MatrixField> clone() const = 0;
  virtual std::string describe() const = 0;
};

class ConstantMatrixField final : public MatrixField {
 public:
  explicit ConstantMatrixField(Mat m);
  Mat value(const Vec&) const override { return matrix_; }
  Mat derivative(const Vec&, int) const override {
    return Mat::Zero(matrix_.rows(), matrix_.cols());
  }
  bool spatially_constant() const override { return true; }
  std::shared_ptr<MatrixField> clone() const override {
    return std::make_shared<ConstantMatrixField>(matrix_);
  }
  std::string describe() const override;

 private:
  Mat matrix_;
};

// Round sphere of radius R in stereographic coordinates:
//   g_ij(p) = 4 R^4 / (R^2 + |p|^2)^2 * delta_ij.
// The origin is the pole opposite the projection point; the circle |p| = R
// is the equator.
class StereographicSphereField final : public MatrixField {
 public:
  StereographicSphereField(int dim, double radius);
  Mat value(const Vec& p) const override;
  Mat derivative(const Vec& p, int axis) const override;
  std::shared_ptr<MatrixField> clone() const override {
    return std::make_shared<StereographicSphereField>(dim_, radius_);
  }
  std::string describe() const override;
  double radius() const { return radius_; }

 private:
  int dim_;
  double radius_;
};

// Arbitrary callable tensor field; derivatives by central differences.
class CallableMatrixField final : public MatrixField {
 public:
  CallableMatrixField(std::function<Mat(const Vec&)> fn, double fd_step = 1e-6)
      : fn_(std::move(fn)), fd_step_(fd_step) {}
  Mat value(const Vec& p) const override { return fn_(p); }
  Mat derivative(const Vec& p, int axis) const override;
  std::shared_ptr<MatrixField> clone() const override {
    return std::make_shared<CallableMatrixField>(fn_, fd_step_);
  }
  std::string describe() const override { return "callable"; }

 private:
  std::function<Mat(const Vec&)> fn_;
  double fd_step_;
};

class OneFormField {
 public:
  virtual ~OneFormField() = default;
  virtual Vec value(const Vec& p) const = 0;
  // J[i][j] = d b_i / d p_j.
  virtual Mat jacobian(const Vec& p) const = 0;
  virtual bool spatially_constant() const { return false; }
  virtual std::shared_ptr<OneFormField> clone() const = 0;
  virtual std::string describe() const = 0;
};

class ConstantOneFormField final : public OneFormField {
 public:
  explicit ConstantOneFormField(Vec b) : components_(std::move(b)) {}
  Vec value(const Vec&) const override { return components_; }
  Mat jacobian(const Vec&) const override {
    return Mat::Zero(components_.size(), components_.size());
  }
  bool spatially_constant() const override { return true; }
  std::shared_ptr<OneFormField> clone() const override {
    return std::make_shared<ConstantOneFormField>(components_);
  }
  std::string describe() const override;

 private:
  Vec components_;
};

}  // namespace finsler
