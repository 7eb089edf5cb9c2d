// Ground-truth non-symmetric distance oracle: directed shortest paths on a
// grid graph with a coprime stencil, multilinear queries, forward/backward
// ball classification, and a binary cache format.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "finsler/metric.hpp"
#include "finsler/submanifold.hpp"

namespace finsler {

struct GridSpec {
  Box region;
  std::vector<int> resolution;  // cells per axis
  int stencil_radius = 3;
};

// err(d) = relative * d + absolute. The relative part bounds the stencil
// metrication error (worst direction gap, measured against the metric
// itself); the absolute part covers interpolation and source snapping.
struct OracleErrorModel {
  double relative = 0.02;
  double absolute = 0.0;
  double bound(double d) const { return relative * d + absolute; }
};

class DistanceField {
 public:
  const GridSpec& spec() const { return spec_; }
  const OracleErrorModel& error_model() const { return model_; }
  double error_bound(double d) const { return model_.bound(d); }
  double grid_step() const;  // max over axes
  bool contains(const Vec& q) const { return spec_.region.contains(q); }

  // Multilinear interpolation of node distances.
  double distance(const Vec& q) const;

  const std::vector<double>& node_values() const { return values_; }
  int node_count() const { return static_cast<int>(values_.size()); }
  Vec node_position(long flat) const;
  long flat_index(const std::vector<int>& idx) const;

  std::uint64_t cache_key() const { return cache_key_; }
  double snap_budget() const { return snap_budget_; }

  void save(const std::string& path) const;
  // Returns the stored values when the file exists and its key matches.
  static std::optional<std::vector<double>> load_values(
      const std::string& path, std::uint64_t expected_key);

 private:
  friend class FieldBuilderImpl;
  GridSpec spec_;
  std::vector<int> nodes_per_axis_;
  std::vector<long> strides_;
  std::vector<double> h_;
  std::vector<double> values_;
  OracleErrorModel model_;
  double snap_budget_ = 0.0;
  std::uint64_t cache_key_ = 0;
};

// Deterministic cache key over the metric description, grid and sources.
std::uint64_t field_cache_key(const FinslerMetric& metric,
                              const GridSpec& spec,
                              const std::vector<Vec>& sources);

DistanceField build_field(const FinslerMetric& metric, const GridSpec& spec,
                          const std::vector<Vec>& sources,
                          std::optional<std::vector<double>> cached_values =
                              std::nullopt);

// Sources sampled along the submanifold at a parameter resolution matched to
// the grid step.
DistanceField build_field(const FinslerMetric& metric, const GridSpec& spec,
                          const Submanifold& sub,
                          std::optional<std::vector<double>> cached_values =
                              std::nullopt);

std::vector<Vec> sample_submanifold_sources(const Submanifold& sub,
                                            const GridSpec& spec);

enum class BallMembership { Forward, Backward, Both, Neither };

// forward_field: sources {p} under the metric; backward_field: sources {p}
// under the reverse metric, so it interpolates d_F(., p).
BallMembership ball_membership(const DistanceField& forward_field,
                               const DistanceField& backward_field,
                               double radius, const Vec& q);

double distance_from_submanifold(const FinslerMetric& metric,
                                 const Submanifold& sub, const GridSpec& spec,
                                 const Vec& q);

// Coprime integer offsets within the Chebyshev radius.
std::vector<std::vector<int>> stencil_offsets(int dim, int radius);

}  // namespace finsler
