#pragma once

#include "thir/cubical.hpp"
#include "thir/image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace thir {

enum class RangePolicy : std::uint8_t {
  PerChannelMinMax = 0,  // min birth .. max death of the channel's loops
  FixedFullScale = 1,    // 0 .. 255
};

std::string_view to_string(RangePolicy policy) noexcept;

struct BettiCurveSpec {
  int resolution = 200;
  RangePolicy range_policy = RangePolicy::PerChannelMinMax;

  bool operator==(const BettiCurveSpec&) const = default;
};

template <typename Scalar>
struct BettiCurve {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> samples;
  Eigen::VectorXi counts;
};

/// Float storage matches the on-disk index; counts are exact in float32.
using TopoDescriptor = Eigen::VectorXf;

namespace detail {

/// Endpoint position in sample-index units, snapped to the nearest integer
/// when within rounding distance so that a tie with a sample survives any
/// increasing affine rescaling of the values.
template <typename Scalar>
double sample_position(Scalar v, Scalar lo, Scalar hi, int r) {
  const double u = (static_cast<double>(v) - lo) * (r - 1) / (static_cast<double>(hi) - lo);
  const double nearest = std::nearbyint(u);
  return std::abs(u - nearest) <= 1e-9 * std::max(1.0, std::abs(nearest)) ? nearest : u;
}

}  // namespace detail

/// Loop counts sampled at R evenly spaced filtration values. Only dimension-1
/// pairs with birth < death take part; a loop is alive at X when b <= X <= d.
template <typename Scalar>
BettiCurve<Scalar> betti_curve(const PersistenceDiagram<Scalar>& diagram, const BettiCurveSpec& spec) {
  const int r = spec.resolution;
  BettiCurve<Scalar> curve;
  curve.samples.setZero(r);
  curve.counts.setZero(r);

  std::vector<std::pair<Scalar, Scalar>> loops;
  for (const auto& p : diagram.pairs) {
    if (p.dim == 1 && p.birth < p.death) loops.emplace_back(p.birth, p.death);
  }
  if (loops.empty()) return curve;

  Scalar lo = 0;
  Scalar hi = 255;
  if (spec.range_policy == RangePolicy::PerChannelMinMax) {
    lo = loops.front().first;
    hi = loops.front().second;
    for (const auto& [b, d] : loops) {
      lo = std::min(lo, b);
      hi = std::max(hi, d);
    }
  }
  if (r == 1 || lo == hi) {
    curve.samples.setConstant(lo);
    int alive = 0;
    for (const auto& [b, d] : loops) alive += (b <= lo && lo <= d) ? 1 : 0;
    curve.counts.setConstant(alive);
    return curve;
  }
  for (int j = 0; j < r; ++j) curve.samples(j) = lo + (static_cast<Scalar>(j) * (hi - lo)) / static_cast<Scalar>(r - 1);
  curve.samples(r - 1) = hi;  // the formula can round one ulp short

  // A loop covers the sample indices in [ceil(pos(b)), floor(pos(d))].
  Eigen::VectorXi delta = Eigen::VectorXi::Zero(r + 1);
  for (const auto& [b, d] : loops) {
    const double first = std::max(0.0, std::ceil(detail::sample_position(b, lo, hi, r)));
    const double last = std::min(r - 1.0, std::floor(detail::sample_position(d, lo, hi, r)));
    if (first > last) continue;
    ++delta(static_cast<Eigen::Index>(first));
    --delta(static_cast<Eigen::Index>(last) + 1);
  }
  int running = 0;
  for (int j = 0; j < r; ++j) curve.counts(j) = running += delta(j);
  return curve;
}

template <typename Scalar = double>
std::array<BettiCurve<Scalar>, 3> channel_curves(const RgbImage& img, const BettiCurveSpec& spec) {
  const auto channels = split_channels<Scalar>(img);
  std::array<BettiCurve<Scalar>, 3> curves;
  for (int c = 0; c < 3; ++c) curves[c] = betti_curve(compute_persistence(build_filtration(channels[c])), spec);
  return curves;
}

/// Concatenated R, G, B loop curves (length 3R).
template <typename Scalar = double>
TopoDescriptor descriptor(const RgbImage& img, const BettiCurveSpec& spec) {
  const auto curves = channel_curves<Scalar>(img, spec);
  const int r = spec.resolution;
  TopoDescriptor out(3 * r);
  for (int c = 0; c < 3; ++c) out.segment(c * r, r) = curves[c].counts.template cast<float>();
  return out;
}

}  // namespace thir
