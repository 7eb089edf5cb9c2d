#include "finsler/distance_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace finsler {

namespace {

int gcd_int(int a, int b) {
  while (b) {
    int t = a % b;
    a = b;
    b = t;
  }
  return a;
}

struct GridLayout {
  std::vector<int> nodes;    // nodes per axis
  std::vector<long> strides; // row-major, last axis fastest
  std::vector<double> h;     // spacing per axis
  Vec lower;
  long total = 0;

  explicit GridLayout(const GridSpec& spec) {
    int n = spec.region.dim();
    nodes.resize(n);
    h.resize(n);
    for (int i = 0; i < n; ++i) {
      nodes[i] = spec.resolution[i] + 1;
      h[i] = spec.region.width(i) / spec.resolution[i];
    }
    strides.assign(n, 1);
    for (int i = n - 2; i >= 0; --i) strides[i] = strides[i + 1] * nodes[i + 1];
    total = strides[0] * nodes[0];
    lower = spec.region.lower;
  }

  Vec position(long flat) const {
    int n = static_cast<int>(nodes.size());
    Vec p(n);
    for (int i = 0; i < n; ++i) {
      long idx = (flat / strides[i]) % nodes[i];
      p[i] = lower[i] + idx * h[i];
    }
    return p;
  }

  std::vector<int> indices(long flat) const {
    int n = static_cast<int>(nodes.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i)
      idx[i] = static_cast<int>((flat / strides[i]) % nodes[i]);
    return idx;
  }

  long flat(const std::vector<int>& idx) const {
    long f = 0;
    for (size_t i = 0; i < idx.size(); ++i) f += idx[i] * strides[i];
    return f;
  }

  long nearest(const Vec& q) const {
    std::vector<int> idx(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
      double x = (q[static_cast<int>(i)] - lower[static_cast<int>(i)]) / h[i];
      int j = static_cast<int>(std::lround(x));
      idx[i] = std::min(std::max(j, 0), nodes[i] - 1);
    }
    return flat(idx);
  }
};

// Worst-case overestimation factor of a two-direction zigzag between
// adjacent stencil directions, measured against the metric itself. Exact
// adjacent-pair treatment in 2-d; a nearest-direction bound in higher
// dimensions.
double stencil_relative_error(const FinslerMetric& metric,
                              const GridSpec& spec,
                              const std::vector<std::vector<int>>& offsets) {
  int n = spec.region.dim();
  GridLayout layout(spec);
  std::vector<Vec> probes;
  probes.push_back(spec.region.center());
  if (!metric.spatially_constant()) {
    std::mt19937_64 rng(0xfeedu);
    for (int i = 0; i < 8; ++i) probes.push_back(spec.region.sample(rng));
  }
  std::vector<Vec> dirs;
  for (const auto& o : offsets) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = o[i] * layout.h[i];
    dirs.push_back(d.normalized());
  }

  double worst = 0.0;
  if (n == 2) {
    std::vector<double> angles;
    for (const Vec& d : dirs) angles.push_back(std::atan2(d[1], d[0]));
    std::sort(angles.begin(), angles.end());
    for (const Vec& p : probes) {
      for (size_t i = 0; i < angles.size(); ++i) {
        double a0 = angles[i];
        double a1 = i + 1 < angles.size() ? angles[i + 1]
                                          : angles.front() + 2 * M_PI;
        Vec u0(2), u1(2);
        u0 << std::cos(a0), std::sin(a0);
        u1 << std::cos(a1), std::sin(a1);
        double f0 = metric.value_unchecked(p, u0);
        double f1 = metric.value_unchecked(p, u1);
        Mat basis(2, 2);
        basis.col(0) = u0;
        basis.col(1) = u1;
        for (int s = 1; s < 16; ++s) {
          double t = a0 + (a1 - a0) * s / 16.0;
          Vec d(2);
          d << std::cos(t), std::sin(t);
          Vec coeff = basis.fullPivLu().solve(d);
          if (coeff[0] < -1e-12 || coeff[1] < -1e-12) continue;
          double cost = coeff[0] * f0 + coeff[1] * f1;
          double direct = metric.value_unchecked(p, d);
          worst = std::max(worst, cost / direct - 1.0);
        }
      }
    }
  } else {
    std::mt19937_64 rng(0xabcdu);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const Vec& p : probes) {
      for (int trial = 0; trial < 256; ++trial) {
        Vec d(n);
        for (int i = 0; i < n; ++i) d[i] = gauss(rng);
        if (d.norm() < 1e-12) continue;
        d.normalize();
        double best_gap = M_PI;
        double best_ratio = 1e300;
        for (const Vec& s : dirs) {
          double c = std::min(1.0, std::max(-1.0, s.dot(d)));
          double gap = std::acos(c);
          if (gap < best_gap) {
            best_gap = gap;
            best_ratio = metric.value_unchecked(p, s) /
                         (std::max(std::cos(gap), 0.1) *
                          metric.value_unchecked(p, d));
          }
        }
        worst = std::max(worst, 1.2 * (best_ratio - 1.0));
      }
    }
  }
  return worst + 0.005;  // margin for edge quadrature and field curvature
}

}  // namespace

// Named (not anonymous) so it can be the DistanceField friend.
class FieldBuilderImpl {
 public:
  static DistanceField build(const FinslerMetric& metric, const GridSpec& spec,
                             const std::vector<Vec>& sources,
                             std::optional<std::vector<double>> cached) {
    if (spec.region.dim() > 8)
      throw DomainError("oracle grids support at most 8 axes");
    if (static_cast<int>(spec.resolution.size()) != spec.region.dim())
      throw DomainError("grid resolution must give one entry per axis");
    for (int r : spec.resolution)
      if (r < 2) throw DomainError("grid resolution must be at least 2");
    if (spec.stencil_radius < 1)
      throw DomainError("stencil radius must be at least 1");
    if (!metric.chart().domain().contains_box(spec.region))
      throw DomainError("oracle region exceeds chart domain");
    if (sources.empty()) throw DomainError("field needs at least one source");
    for (const Vec& s : sources)
      if (!spec.region.contains(s))
        throw DomainError("source outside the oracle region");

    GridLayout layout(spec);
    auto offsets = stencil_offsets(spec.region.dim(), spec.stencil_radius);

    DistanceField field;
    field.spec_ = spec;
    field.nodes_per_axis_ = layout.nodes;
    field.strides_ = layout.strides;
    field.h_ = layout.h;
    field.cache_key_ = field_cache_key(metric, spec, sources);

    // Snap sources to nearest nodes; the snap distance joins the error
    // budget.
    double snap = 0.0;
    std::vector<long> source_nodes;
    for (const Vec& s : sources) {
      long node = layout.nearest(s);
      Vec pos = layout.position(node);
      Vec disp = pos - s;
      if (disp.norm() > 0)
        snap = std::max(snap, metric.value_unchecked(s, disp));
      source_nodes.push_back(node);
    }
    std::sort(source_nodes.begin(), source_nodes.end());
    source_nodes.erase(std::unique(source_nodes.begin(), source_nodes.end()),
                       source_nodes.end());
    field.snap_budget_ = snap;

    if (cached && static_cast<long>(cached->size()) == layout.total) {
      field.values_ = std::move(*cached);
    } else {
      field.values_ = dijkstra(metric, layout, offsets, source_nodes);
    }

    // Error model: stencil direction gap (relative) plus interpolation and
    // snapping (absolute).
    OracleErrorModel model;
    model.relative = stencil_relative_error(metric, spec, offsets);
    double unit_scale = 0.0;
    {
      Vec c = spec.region.center();
      int n = spec.region.dim();
      for (int i = 0; i < n; ++i) {
        unit_scale = std::max(unit_scale,
                              metric.value_unchecked(c, Vec::Unit(n, i)));
        unit_scale = std::max(unit_scale,
                              metric.value_unchecked(c, -Vec::Unit(n, i)));
      }
    }
    double hmax = 0.0;
    for (double h : layout.h) hmax = std::max(hmax, h);
    model.absolute = hmax * unit_scale + snap;
    field.model_ = model;
    return field;
  }

 private:
  static std::vector<double> dijkstra(
      const FinslerMetric& metric, const GridLayout& layout,
      const std::vector<std::vector<int>>& offsets,
      const std::vector<long>& source_nodes) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(layout.total, inf);
    int n = static_cast<int>(layout.nodes.size());

    // Physical displacement per offset; constant metrics also get a
    // precomputed weight.
    std::vector<Vec> disp(offsets.size());
    std::vector<double> const_weight;
    bool constant = metric.spatially_constant();
    for (size_t e = 0; e < offsets.size(); ++e) {
      Vec d(n);
      for (int i = 0; i < n; ++i) d[i] = offsets[e][i] * layout.h[i];
      disp[e] = d;
    }
    if (constant) {
      Vec c = layout.position(0);
      for (size_t e = 0; e < offsets.size(); ++e)
        const_weight.push_back(metric.value_unchecked(c, disp[e]));
    }

    using Item = std::pair<double, long>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    for (long s : source_nodes) {
      dist[s] = 0.0;
      heap.push({0.0, s});
    }
    std::vector<int> idx(n);
    while (!heap.empty()) {
      auto [d, node] = heap.top();
      heap.pop();
      if (d > dist[node]) continue;
      for (int i = 0; i < n; ++i)
        idx[i] = static_cast<int>((node / layout.strides[i]) % layout.nodes[i]);
      Vec from = layout.position(node);
      for (size_t e = 0; e < offsets.size(); ++e) {
        long neighbor = node;
        bool ok = true;
        for (int i = 0; i < n; ++i) {
          int j = idx[i] + offsets[e][i];
          if (j < 0 || j >= layout.nodes[i]) {
            ok = false;
            break;
          }
          neighbor += static_cast<long>(offsets[e][i]) * layout.strides[i];
        }
        if (!ok) continue;
        double w = constant
                       ? const_weight[e]
                       : metric.value_unchecked(from + 0.5 * disp[e], disp[e]);
        double nd = d + w;
        if (nd < dist[neighbor]) {
          dist[neighbor] = nd;
          heap.push({nd, neighbor});
        }
      }
    }
    return dist;
  }
};

std::vector<std::vector<int>> stencil_offsets(int dim, int radius) {
  std::vector<std::vector<int>> offsets;
  std::vector<int> current(dim, -radius);
  for (;;) {
    bool zero = true;
    int g = 0;
    for (int c : current) {
      if (c != 0) zero = false;
      g = gcd_int(g, std::abs(c));
    }
    if (!zero && g == 1) offsets.push_back(current);
    int axis = dim - 1;
    while (axis >= 0) {
      if (++current[axis] <= radius) break;
      current[axis] = -radius;
      --axis;
    }
    if (axis < 0) break;
  }
  return offsets;
}

double DistanceField::grid_step() const {
  double h = 0.0;
  for (double hi : h_) h = std::max(h, hi);
  return h;
}

Vec DistanceField::node_position(long flat) const {
  int n = spec_.region.dim();
  Vec p(n);
  for (int i = 0; i < n; ++i) {
    long idx = (flat / strides_[i]) % nodes_per_axis_[i];
    p[i] = spec_.region.lower[i] + idx * h_[i];
  }
  return p;
}

long DistanceField::flat_index(const std::vector<int>& idx) const {
  long f = 0;
  for (size_t i = 0; i < idx.size(); ++i) f += idx[i] * strides_[i];
  return f;
}

double DistanceField::distance(const Vec& q) const {
  if (!spec_.region.contains(q))
    throw DomainError("query point outside the oracle region");
  int n = spec_.region.dim();
  int base[8];
  double frac[8];
  for (int i = 0; i < n; ++i) {
    double x = (q[i] - spec_.region.lower[i]) / h_[i];
    int j = static_cast<int>(std::floor(x));
    j = std::min(std::max(j, 0), nodes_per_axis_[i] - 2);
    base[i] = j;
    frac[i] = std::min(std::max(x - j, 0.0), 1.0);
  }
  double acc = 0.0;
  int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    long flat = 0;
    for (int i = 0; i < n; ++i) {
      int bit = (c >> i) & 1;
      w *= bit ? frac[i] : 1.0 - frac[i];
      flat += static_cast<long>(base[i] + bit) * strides_[i];
    }
    acc += w * values_[flat];
  }
  return acc;
}

std::uint64_t field_cache_key(const FinslerMetric& metric,
                              const GridSpec& spec,
                              const std::vector<Vec>& sources) {
  std::ostringstream os;
  os << metric.describe() << (metric.is_reverse() ? "|rev" : "") << "|";
  for (int i = 0; i < spec.region.dim(); ++i)
    os << format_double(spec.region.lower[i]) << ","
       << format_double(spec.region.upper[i]) << ";";
  os << "|res";
  for (int r : spec.resolution) os << r << ",";
  os << "|st" << spec.stencil_radius << "|src";
  for (const Vec& s : sources)
    for (int i = 0; i < s.size(); ++i) os << format_double(s[i]) << ",";
  return fnv1a(os.str());
}

DistanceField build_field(const FinslerMetric& metric, const GridSpec& spec,
                          const std::vector<Vec>& sources,
                          std::optional<std::vector<double>> cached_values) {
  return FieldBuilderImpl::build(metric, spec, sources,
                                 std::move(cached_values));
}

std::vector<Vec> sample_submanifold_sources(const Submanifold& sub,
                                            const GridSpec& spec) {
  GridLayout layout(spec);
  double hmin = layout.h[0];
  for (double h : layout.h) hmin = std::min(hmin, h);
  int k = sub.param_dim();
  if (k == 0) return {sub.immerse(Vec(0))};
  double scale = sub.tangent_scale();
  std::vector<int> counts(k);
  long total = 1;
  for (int i = 0; i < k; ++i) {
    double width = sub.param_box().width(i);
    counts[i] = std::max(
        2, static_cast<int>(std::ceil(width * scale / hmin)) + 1);
    counts[i] = std::min(counts[i], 200000);
    total *= counts[i];
    if (total > 400000) throw DomainError("submanifold source sampling too large");
  }
  std::vector<Vec> sources;
  std::vector<int> idx(k, 0);
  for (;;) {
    Vec u(k);
    for (int i = 0; i < k; ++i) {
      double denom = sub.periodic(i) ? counts[i] : counts[i] - 1;
      u[i] = sub.param_box().lower[i] +
             sub.param_box().width(i) * idx[i] / denom;
    }
    Vec p = sub.immerse(u);
    if (spec.region.contains(p)) sources.push_back(p);
    int axis = k - 1;
    while (axis >= 0) {
      if (++idx[axis] < counts[axis]) break;
      idx[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  if (sources.empty())
    throw DomainError("submanifold does not intersect the oracle region");
  return sources;
}

DistanceField build_field(const FinslerMetric& metric, const GridSpec& spec,
                          const Submanifold& sub,
                          std::optional<std::vector<double>> cached_values) {
  return build_field(metric, spec, sample_submanifold_sources(sub, spec),
                     std::move(cached_values));
}

BallMembership ball_membership(const DistanceField& forward_field,
                               const DistanceField& backward_field,
                               double radius, const Vec& q) {
  bool fwd = forward_field.distance(q) < radius;
  bool bwd = backward_field.distance(q) < radius;
  if (fwd && bwd) return BallMembership::Both;
  if (fwd) return BallMembership::Forward;
  if (bwd) return BallMembership::Backward;
  return BallMembership::Neither;
}

double distance_from_submanifold(const FinslerMetric& metric,
                                 const Submanifold& sub, const GridSpec& spec,
                                 const Vec& q) {
  DistanceField field = build_field(metric, spec, sub);
  return field.distance(q);
}

void DistanceField::save(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open cache file for writing: " + tmp);
    const char magic[4] = {'F', 'D', 'F', '1'};
    out.write(magic, 4);
    std::uint64_t key = cache_key_;
    out.write(reinterpret_cast<const char*>(&key), sizeof(key));
    std::uint64_t count = values_.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw Error("failed writing cache file: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("failed to move cache file into place: " + path);
}

std::optional<std::vector<double>> DistanceField::load_values(
    const std::string& path, std::uint64_t expected_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FDF1", 4) != 0) return std::nullopt;
  std::uint64_t key = 0, count = 0;
  in.read(reinterpret_cast<char*>(&key), sizeof(key));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || key != expected_key || count > (1ull << 32)) return std::nullopt;
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) return std::nullopt;
  return values;
}

}  // namespace finsler
