#include "thir/retrieval.hpp"

#include <algorithm>

namespace thir {

namespace {

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : v;
}

}  // namespace

std::vector<RankedResult> top_k(const Index& ix, const TopoDescriptor& query, const QuerySpec& spec) {
  if (spec.k < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
  if (ix.size() == 0) throw Error(ErrorKind::EmptyIndex, "index has no entries");
  if (query.size() != ix.descriptors.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "query length " + std::to_string(query.size()) + " != index dim " +
                                                  std::to_string(ix.descriptors.cols()));
  }

  struct Candidate {
    double distance;
    std::uint32_t id;
    bool operator<(const Candidate& o) const { return distance < o.distance || (distance == o.distance && id < o.id); }
  };
  std::vector<Candidate> candidates;
  candidates.reserve(ix.size());
  const Eigen::VectorXd q = spec.normalize ? unit(query.cast<double>()) : query.cast<double>();
  for (std::size_t i = 0; i < ix.size(); ++i) {
    const auto id = static_cast<std::uint32_t>(i);
    if (spec.exclude_ids.contains(id)) continue;
    const auto row = ix.descriptors.row(static_cast<Eigen::Index>(i));
    const double d = spec.normalize ? euclidean(unit(row.transpose().cast<double>()), q) : euclidean(row.transpose(), q);
    candidates.push_back({d, id});
  }

  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(spec.k), candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end());

  std::vector<RankedResult> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& rec = ix.records[candidates[i].id];
    out.push_back({candidates[i].id, candidates[i].distance, rec.label, rec.magnification, rec.path});
  }
  return out;
}

}  // namespace thir
