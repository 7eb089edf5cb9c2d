#include "finsler/fields.hpp"

#include <sstream>

namespace finsler {

ConstantMatrixField::ConstantMatrixField(Mat m) : matrix_(std::move(m)) {
  if (matrix_.rows() != matrix_.cols())
    throw DomainError("tensor field matrix must be square");
  if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("tensor field matrix must be symmetric");
  Eigen::LLT<Mat> llt(matrix_);
  if (llt.info() != Eigen::Success)
    throw NonConvexMetricError("tensor field matrix must be positive-definite");
}

std::string ConstantMatrixField::describe() const {
  std::ostringstream os;
  os << "constant[";
  for (int i = 0; i < matrix_.rows(); ++i)
    for (int j = 0; j < matrix_.cols(); ++j)
      os << format_double(matrix_(i, j)) << (i + 1 == matrix_.rows() && j + 1 == matrix_.cols() ? "" : ",");
  os << "]";
  return os.str();
}

StereographicSphereField::StereographicSphereField(int dim, double radius)
    : dim_(dim), radius_(radius) {
  if (radius <= 0) throw DomainError("sphere radius must be positive");
}

Mat StereographicSphereField::value(const Vec& p) const {
  double r2 = radius_ * radius_;
  double denom = r2 + p.squaredNorm();
  double s = 4.0 * r2 * r2 / (denom * denom);
  return s * Mat::Identity(dim_, dim_);
}

Mat StereographicSphereField::derivative(const Vec& p, int axis) const {
  double r2 = radius_ * radius_;
  double denom = r2 + p.squaredNorm();
  double ds = -16.0 * r2 * r2 * p[axis] / (denom * denom * denom);
  return ds * Mat::Identity(dim_, dim_);
}

std::string StereographicSphereField::describe() const {
  return "stereographic-sphere(" + format_double(radius_) + ")";
}

Mat CallableMatrixField::derivative(const Vec& p, int axis) const {
  double h = fd_step_ * std::max(1.0, std::abs(p[axis]));
  Vec pp = p, pm = p;
  pp[axis] += h;
  pm[axis] -= h;
  return (fn_(pp) - fn_(pm)) / (2.0 * h);
}

std::string ConstantOneFormField::describe() const {
  std::ostringstream os;
  os << "constant[";
  for (int i = 0; i < components_.size(); ++i)
    os << format_double(components_[i]) << (i + 1 == components_.size() ? "" : ",");
  os << "]";
  return os.str();
}

}  // namespace finsler
