// Cut-value estimation along orthogonal geodesics against the distance
// oracle, and cut-locus sampling over the unit orthogonal cone.
#pragma once

#include "finsler/distance_field.hpp"
#include "finsler/normal_geometry.hpp"

namespace finsler {

struct CutOptions {
  int coarse_samples = 48;
  int refine_points = 6;
  ShootOptions shoot;
};

struct CutResult {
  bool finite = false;
  // When finite: the cut value estimate. Otherwise the horizon actually
  // searched (the requested horizon, shortened on domain or region exit).
  double value = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double bracket_width = 0.0;
  bool truncated = false;  // search shortened by chart or region exit
  Vec cut_point;           // set when finite
};

// Sweeps the deficit t - d_F(P, gamma_v(t)) along the orthogonal geodesic.
// The deficit of a minimizing segment equals the oracle bias, so violations
// are measured against a baseline extrapolated from the still-minimizing
// samples; the first sustained violation (two consecutive samples above
// 3x the oracle error bound) is bisected to `tol`, then the crossing is
// back-extrapolated to remove the detection threshold bias.
CutResult cut_value(const FinslerMetric& metric, const Submanifold& sub,
                    const DistanceField& field, const NormalVector& normal,
                    double horizon, double tol, const CutOptions& opts = {});

struct CutSample {
  NormalVector normal;
  CutResult result;
  std::string error;  // nonempty when this sample failed
};

std::vector<CutSample> sample_cut_locus(const FinslerMetric& metric,
                                        const Submanifold& sub,
                                        const DistanceField& field,
                                        int foot_resolution,
                                        int cone_resolution, double horizon,
                                        double tol, int threads = 1,
                                        const CutOptions& opts = {});

// Foot-parameter grid used by the sweep operations: endpoints are included
// on ordinary axes and excluded on periodic ones.
std::vector<Vec> sample_parameters(const Submanifold& sub, const Box& box,
                                   int resolution);

}  // namespace finsler
