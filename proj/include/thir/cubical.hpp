#pragma once

// Sublevel cubical persistence of 2D scalar grids (T-construction: pixels are
// the top cells, every face takes the minimum of its incident pixels).

#include "thir/image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace thir {

/// Cells of the doubled-coordinate grid: cell (x, y) with 0 <= x <= 2W,
/// 0 <= y <= 2H has dimension (x odd) + (y odd). Linear index is y * (2W+1) + x.
template <typename Scalar>
struct CubicalFiltration {
  int width = 0;   // pixels
  int height = 0;  // pixels
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  int grid_cols() const { return 2 * width + 1; }
  int grid_rows() const { return 2 * height + 1; }
  Eigen::Index cell_count() const { return values.size(); }

  static int cell_dim(int x, int y) { return (x & 1) + (y & 1); }

  Scalar value(int x, int y) const { return values(y, x); }
  Scalar value(Eigen::Index linear) const { return values.data()[linear]; }
};

template <typename Scalar>
CubicalFiltration<Scalar> build_filtration(const ChannelGrid<Scalar>& grid) {
  assert(grid.rows() >= 1 && grid.cols() >= 1);
  CubicalFiltration<Scalar> f;
  f.width = static_cast<int>(grid.cols());
  f.height = static_cast<int>(grid.rows());
  const int cols = f.grid_cols();
  const int rows = f.grid_rows();
  f.values.resize(rows, cols);

  // A cell touches the pixels whose doubled coordinates lie within one step;
  // clamp the pixel range to the grid.
  for (int y = 0; y < rows; ++y) {
    const int py0 = std::max(0, (y - 1) / 2);
    const int py1 = std::min(f.height - 1, y / 2);
    for (int x = 0; x < cols; ++x) {
      const int px0 = std::max(0, (x - 1) / 2);
      const int px1 = std::min(f.width - 1, x / 2);
      f.values(y, x) = grid.block(py0, px0, py1 - py0 + 1, px1 - px0 + 1).minCoeff();
    }
  }
  return f;
}

template <typename Scalar>
struct PersistencePair {
  int dim = 0;
  Scalar birth{};
  Scalar death = std::numeric_limits<Scalar>::infinity();

  bool essential() const { return std::isinf(death); }
  Scalar persistence() const { return death - birth; }

  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
  friend bool operator<(const PersistencePair& a, const PersistencePair& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  }
};

/// All persistence pairs, zero-length ones included.
template <typename Scalar>
struct PersistenceDiagram {
  std::vector<PersistencePair<Scalar>> pairs;

  /// Pairs of one dimension with positive persistence (essential included).
  std::vector<PersistencePair<Scalar>> features(int dim) const {
    std::vector<PersistencePair<Scalar>> out;
    for (const auto& p : pairs) {
      if (p.dim == dim && p.birth < p.death) out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Canonical multiset form for comparisons.
  PersistenceDiagram sorted() const {
    PersistenceDiagram out = *this;
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
  }

  friend bool operator==(const PersistenceDiagram& a, const PersistenceDiagram& b) {
    return a.sorted().pairs == b.sorted().pairs;
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void attach(std::uint32_t child_root, std::uint32_t parent_root) { parent_[child_root] = parent_root; }

 private:
  std::vector<std::uint32_t> parent_;
};

template <typename Scalar>
struct KeyedCell {
  Scalar value;
  std::uint32_t index;  // linear cell index

  friend bool operator<(const KeyedCell& a, const KeyedCell& b) {
    return a.value < b.value || (a.value == b.value && a.index < b.index);
  }
};

}  // namespace detail

/// Persistence pairs in dimensions 0 and 1.
///
/// Cells are totally ordered by (value, dimension, linear index). Dimension 0
/// is a union-find sweep over edges with the elder rule. Dimension 1 uses the
/// dual graph of pixels plus one exterior node swept in reverse order: an edge
/// that joins two dual components gives birth to a loop that dies at the
/// latest pixel of the younger component.
template <typename Scalar>
PersistenceDiagram<Scalar> compute_persistence(const CubicalFiltration<Scalar>& f) {
  using detail::KeyedCell;
  const int cols = f.grid_cols();
  const int rows = f.grid_rows();
  const int vcols = f.width + 1;
  const auto vertex_id = [vcols](int x, int y) { return static_cast<std::uint32_t>((y / 2) * vcols + x / 2); };

  std::vector<KeyedCell<Scalar>> edges;
  std::vector<KeyedCell<Scalar>> squares;
  edges.reserve(static_cast<std::size_t>(2) * f.width * f.height + f.width + f.height);
  squares.reserve(static_cast<std::size_t>(f.width) * f.height);
  Scalar min_value = std::numeric_limits<Scalar>::infinity();
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const auto idx = static_cast<std::uint32_t>(y * cols + x);
      switch (CubicalFiltration<Scalar>::cell_dim(x, y)) {
        case 0: min_value = std::min(min_value, f.value(x, y)); break;
        case 1: edges.push_back({f.value(x, y), idx}); break;
        default: squares.push_back({f.value(x, y), idx}); break;
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  std::sort(squares.begin(), squares.end());

  PersistenceDiagram<Scalar> dgm;
  dgm.pairs.reserve(edges.size() + 1);

  // Dimension 0. Each root remembers the oldest vertex of its component.
  {
    const std::size_t nv = static_cast<std::size_t>(vcols) * (f.height + 1);
    detail::DisjointSets sets(nv);
    std::vector<KeyedCell<Scalar>> oldest(nv);
    for (int y = 0; y < rows; y += 2) {
      for (int x = 0; x < cols; x += 2) {
        oldest[vertex_id(x, y)] = {f.value(x, y), static_cast<std::uint32_t>(y * cols + x)};
      }
    }
    for (const auto& e : edges) {
      const int x = static_cast<int>(e.index % cols);
      const int y = static_cast<int>(e.index / cols);
      const bool horizontal = (x & 1) != 0;
      const auto u = horizontal ? vertex_id(x - 1, y) : vertex_id(x, y - 1);
      const auto v = horizontal ? vertex_id(x + 1, y) : vertex_id(x, y + 1);
      auto ru = sets.find(u);
      auto rv = sets.find(v);
      if (ru == rv) continue;
      if (oldest[ru] < oldest[rv]) std::swap(ru, rv);  // ru is now the younger root
      dgm.pairs.push_back({0, oldest[ru].value, e.value});
      sets.attach(ru, rv);
    }
    dgm.pairs.push_back({0, min_value, std::numeric_limits<Scalar>::infinity()});
  }

  // Dimension 1 via the dual sweep. Pixel rank in the ascending order is the
  // age key; the exterior node outranks every pixel.
  {
    const std::size_t npix = static_cast<std::size_t>(f.width) * f.height;
    const auto exterior = static_cast<std::uint32_t>(npix);
    std::vector<std::uint32_t> rank_of(npix);
    for (std::uint32_t r = 0; r < squares.size(); ++r) {
      const int x = static_cast<int>(squares[r].index % cols);
      const int y = static_cast<int>(squares[r].index / cols);
      rank_of[static_cast<std::size_t>(y / 2) * f.width + x / 2] = r;
    }
    detail::DisjointSets sets(npix + 1);
    std::vector<std::uint32_t> latest(npix + 1);  // max ascending rank in component
    for (std::size_t p = 0; p < npix; ++p) latest[p] = rank_of[p];
    latest[exterior] = std::numeric_limits<std::uint32_t>::max();

    const auto pixel_id = [&](int px, int py) -> std::uint32_t {
      if (px < 0 || py < 0 || px >= f.width || py >= f.height) return exterior;
      return static_cast<std::uint32_t>(py * f.width + px);
    };
    for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
      const int x = static_cast<int>(it->index % cols);
      const int y = static_cast<int>(it->index / cols);
      const bool horizontal = (x & 1) != 0;
      // Pixel (px, py) occupies doubled cell (2px+1, 2py+1).
      const auto a = horizontal ? pixel_id((x - 1) / 2, y / 2 - 1) : pixel_id(x / 2 - 1, (y - 1) / 2);
      const auto b = horizontal ? pixel_id((x - 1) / 2, y / 2) : pixel_id(x / 2, (y - 1) / 2);
      auto ra = sets.find(a);
      auto rb = sets.find(b);
      if (ra == rb) continue;
      if (latest[ra] > latest[rb]) std::swap(ra, rb);  // ra is now the younger component
      dgm.pairs.push_back({1, it->value, squares[latest[ra]].value});
      sets.attach(ra, rb);
    }
  }
  return dgm;
}

/// Textbook Z/2 column reduction of the full boundary matrix. Cubic time;
/// for verification on small grids only.
template <typename Scalar>
PersistenceDiagram<Scalar> oracle_persistence(const CubicalFiltration<Scalar>& f);

}  // namespace thir

#include "thir/detail/cubical_oracle.hpp"
