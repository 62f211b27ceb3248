#pragma once

#include "thir/error.hpp"
#include "thir/index.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

namespace thir {

/// Euclidean distance accumulated in double precision.
template <typename DerivedA, typename DerivedB>
double euclidean(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "descriptor lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.derived().coeff(i)) - static_cast<double>(b.derived().coeff(i));
    sum += d * d;
  }
  return std::sqrt(sum);
}

struct QuerySpec {
  int k = 5;
  std::set<std::uint32_t> exclude_ids;
  bool normalize = false;  // compare unit-L2 descriptors instead of raw counts
};

struct RankedResult {
  std::uint32_t entry_id = 0;
  double distance = 0.0;
  Label label = Label::Unknown;
  Magnification magnification = Magnification::Unspecified;
  std::filesystem::path path;

  bool operator==(const RankedResult&) const = default;
};

/// Exhaustive scan; results ordered by (distance, entry_id).
std::vector<RankedResult> top_k(const Index& ix, const TopoDescriptor& query, const QuerySpec& spec);

}  // namespace thir
