#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csgrl/mat.hpp"

namespace csgrl {

/// Compressed sparse row structure. Within each row the column indices are
/// strictly increasing (sorted, deduplicated).
struct Csr {
  int rows = 0;
  int cols = 0;
  std::vector<int64_t> row_offsets;  // length rows + 1
  std::vector<int32_t> col_indices;

  int64_t nnz() const { return static_cast<int64_t>(col_indices.size()); }

  std::span<const int32_t> row(int i) const {
    return {col_indices.data() + row_offsets[i],
            static_cast<size_t>(row_offsets[i + 1] - row_offsets[i])};
  }

  int64_t degree(int i) const { return row_offsets[i + 1] - row_offsets[i]; }

  /// Throws std::invalid_argument on any structural violation.
  void validate() const;

  /// Build from an unsorted edge list; duplicates collapse to one entry.
  static Csr from_edges(int rows, int cols,
                        const std::vector<std::pair<int32_t, int32_t>>& edges);

  Csr transposed() const;

  bool operator==(const Csr& o) const = default;
};

/// CSR structure with per-edge weights, used as a constant aggregation
/// operator. The transposed copy serves the backward pass.
struct SparseMatrix {
  Csr structure;
  std::vector<double> weights;
  Csr t_structure;
  std::vector<double> t_weights;

  SparseMatrix() = default;
  SparseMatrix(Csr s, std::vector<double> w);

  int rows() const { return structure.rows; }
  int cols() const { return structure.cols; }

  static SparseMatrix identity(int n);
  /// Weights 1/row_degree (zero rows stay zero): the row-mean operator.
  static SparseMatrix row_mean(const Csr& s);
};

}  // namespace csgrl
