#pragma once

#include "thir/betti.hpp"
#include "thir/dataset.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace thir {

using DescriptorMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ResizeDims {
  int width = 240;
  int height = 240;

  bool operator==(const ResizeDims&) const = default;
};

/// Descriptors for a labelled image collection. Row i of `descriptors`
/// belongs to records[i], and records[i].id == i.
struct Index {
  BettiCurveSpec spec;
  ResizeDims resize;
  std::vector<DatasetRecord> records;
  DescriptorMatrix descriptors;

  std::size_t size() const { return records.size(); }
  int dim() const { return 3 * spec.resolution; }

  bool operator==(const Index& other) const {
    return spec == other.spec && resize == other.resize && records == other.records &&
           descriptors.rows() == other.descriptors.rows() && descriptors.cols() == other.descriptors.cols() &&
           descriptors == other.descriptors;
  }
};

/// Load, resize, and fingerprint one image the way the index does.
TopoDescriptor extract_descriptor(const RgbImage& img, const BettiCurveSpec& spec, const ResizeDims& resize);

struct BuildOptions {
  std::filesystem::path root;  // resolves record paths
  int workers = 1;
  bool lenient = false;  // skip unreadable files instead of failing
};

struct BuildResult {
  Index index;
  std::vector<std::string> skipped;  // "path: reason", lenient mode only
};

/// Entries keep record order. Output is independent of the worker count.
BuildResult build_index(const std::vector<DatasetRecord>& records, const BettiCurveSpec& spec,
                        const ResizeDims& resize, const BuildOptions& options);

void write_index(const Index& ix, std::ostream& out);
Index read_index(std::istream& in);
void save_index(const Index& ix, const std::filesystem::path& path);
Index load_index(const std::filesystem::path& path);

/// `id,path,label,magnification` rows.
void write_metadata_csv(const Index& ix, std::ostream& out);

struct IndexStats {
  std::size_t total = 0;
  int resolution = 0;
  int dim = 0;
  ResizeDims resize;
  std::map<std::string, std::size_t> labels;
  std::map<std::string, std::size_t> magnifications;
};

IndexStats stats(const Index& ix);

}  // namespace thir
