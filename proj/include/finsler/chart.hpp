// Coordinate chart: a fixed open box in R^n on which metrics are defined.
#pragma once

#include "finsler/common.hpp"

namespace finsler {

class Chart {
 public:
  explicit Chart(Box domain) : domain_(std::move(domain)) {
    if (domain_.dim() < 2)
      throw DomainError("chart dimension must be at least 2");
  }

  int dim() const { return domain_.dim(); }
  const Box& domain() const { return domain_; }
  double diameter() const { return domain_.diameter(); }

  bool contains(const Vec& p, double pad = 0.0) const {
    return domain_.contains(p, pad);
  }

  void require_point(const Vec& p) const {
    if (p.size() != dim())
      throw DomainError("point dimension does not match chart");
    if (!contains(p)) throw DomainError("point outside chart domain");
  }

  void require_vector_dim(const Vec& v) const {
    if (v.size() != dim())
      throw DomainError("vector dimension does not match chart");
  }

  // Vectors shorter than this are treated as zero; F is not smooth there.
  double zero_threshold() const { return 1e-12 * diameter(); }

 private:
  Box domain_;
};

}  // namespace finsler
