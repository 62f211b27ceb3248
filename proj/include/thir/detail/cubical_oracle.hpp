#pragma once

#include <algorithm>
#include <iterator>
#include <tuple>
#include <vector>

namespace thir {

template <typename Scalar>
PersistenceDiagram<Scalar> oracle_persistence(const CubicalFiltration<Scalar>& f) {
  const int cols = f.grid_cols();
  const int rows = f.grid_rows();
  const int n = cols * rows;

  struct Cell {
    Scalar value;
    int dim;
    int index;
  };
  std::vector<Cell> cells;
  cells.reserve(n);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) cells.push_back({f.value(x, y), (x & 1) + (y & 1), y * cols + x});
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.value, a.dim, a.index) < std::tie(b.value, b.dim, b.index);
  });
  std::vector<int> position(n);
  for (int i = 0; i < n; ++i) position[cells[i].index] = i;

  // Columns hold sorted positions of boundary faces.
  std::vector<std::vector<int>> columns(n);
  for (int j = 0; j < n; ++j) {
    const int x = cells[j].index % cols;
    const int y = cells[j].index / cols;
    std::vector<int>& col = columns[j];
    if (x & 1) {
      col.push_back(position[y * cols + x - 1]);
      col.push_back(position[y * cols + x + 1]);
    }
    if (y & 1) {
      col.push_back(position[(y - 1) * cols + x]);
      col.push_back(position[(y + 1) * cols + x]);
    }
    std::sort(col.begin(), col.end());
  }

  std::vector<int> owner_of_low(n, -1);
  for (int j = 0; j < n; ++j) {
    std::vector<int>& col = columns[j];
    while (!col.empty() && owner_of_low[col.back()] != -1) {
      const std::vector<int>& other = columns[owner_of_low[col.back()]];
      std::vector<int> sum;
      std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(), std::back_inserter(sum));
      col.swap(sum);
    }
    if (!col.empty()) owner_of_low[col.back()] = j;
  }

  PersistenceDiagram<Scalar> dgm;
  std::vector<bool> paired(n, false);
  for (int j = 0; j < n; ++j) {
    if (columns[j].empty()) continue;
    const int low = columns[j].back();
    paired[low] = paired[j] = true;
    dgm.pairs.push_back({cells[low].dim, cells[low].value, cells[j].value});
  }
  for (int i = 0; i < n; ++i) {
    if (!paired[i]) dgm.pairs.push_back({cells[i].dim, cells[i].value, std::numeric_limits<Scalar>::infinity()});
  }
  return dgm;
}

}  // namespace thir
