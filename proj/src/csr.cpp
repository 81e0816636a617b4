#include "csgrl/csr.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace csgrl {

void Csr::validate() const {
  if (rows < 0 || cols < 0) throw std::invalid_argument("Csr: negative dimension");
  if (row_offsets.size() != static_cast<size_t>(rows) + 1)
    throw std::invalid_argument("Csr: row_offsets length != rows + 1");
  if (row_offsets.front() != 0)
    throw std::invalid_argument("Csr: row_offsets[0] != 0");
  if (row_offsets.back() != nnz())
    throw std::invalid_argument("Csr: row_offsets[rows] != nnz");
  for (int i = 0; i < rows; ++i) {
    if (row_offsets[i] > row_offsets[i + 1])
      throw std::invalid_argument("Csr: row_offsets not non-decreasing");
    for (int64_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e) {
      if (col_indices[e] < 0 || col_indices[e] >= cols)
        throw std::invalid_argument("Csr: column index out of range");
      if (e > row_offsets[i] && col_indices[e] <= col_indices[e - 1])
        throw std::invalid_argument("Csr: row columns not strictly increasing");
    }
  }
}

Csr Csr::from_edges(int rows, int cols,
                    const std::vector<std::pair<int32_t, int32_t>>& edges) {
  std::vector<std::vector<int32_t>> by_row(rows);
  for (const auto& [s, d] : edges) {
    if (s < 0 || s >= rows)
      throw std::invalid_argument("edge source " + std::to_string(s) +
                                  " out of range [0," + std::to_string(rows) + ")");
    if (d < 0 || d >= cols)
      throw std::invalid_argument("edge destination " + std::to_string(d) +
                                  " out of range [0," + std::to_string(cols) + ")");
    by_row[s].push_back(d);
  }
  Csr out;
  out.rows = rows;
  out.cols = cols;
  out.row_offsets.assign(rows + 1, 0);
  for (int i = 0; i < rows; ++i) {
    auto& r = by_row[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    out.row_offsets[i + 1] = out.row_offsets[i] + static_cast<int64_t>(r.size());
    out.col_indices.insert(out.col_indices.end(), r.begin(), r.end());
  }
  return out;
}

Csr Csr::transposed() const {
  Csr t;
  t.rows = cols;
  t.cols = rows;
  t.row_offsets.assign(cols + 1, 0);
  for (int32_t c : col_indices) t.row_offsets[c + 1]++;
  for (int i = 0; i < cols; ++i) t.row_offsets[i + 1] += t.row_offsets[i];
  t.col_indices.resize(col_indices.size());
  std::vector<int64_t> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (int i = 0; i < rows; ++i)
    for (int64_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e)
      t.col_indices[cursor[col_indices[e]]++] = i;
  return t;
}

SparseMatrix::SparseMatrix(Csr s, std::vector<double> w) {
  if (w.size() != s.col_indices.size())
    throw std::invalid_argument("SparseMatrix: weight count != nnz");
  for (double x : w)
    if (!std::isfinite(x)) throw std::invalid_argument("SparseMatrix: non-finite weight");
  structure = std::move(s);
  structure.validate();
  weights = std::move(w);

  t_structure = structure.transposed();
  t_weights.resize(weights.size());
  std::vector<int64_t> cursor(t_structure.row_offsets.begin(),
                              t_structure.row_offsets.end() - 1);
  for (int i = 0; i < structure.rows; ++i)
    for (int64_t e = structure.row_offsets[i]; e < structure.row_offsets[i + 1]; ++e)
      t_weights[cursor[structure.col_indices[e]]++] = weights[e];
}

SparseMatrix SparseMatrix::identity(int n) {
  Csr s;
  s.rows = s.cols = n;
  s.row_offsets.resize(n + 1);
  s.col_indices.resize(n);
  for (int i = 0; i < n; ++i) {
    s.row_offsets[i] = i;
    s.col_indices[i] = i;
  }
  s.row_offsets[n] = n;
  return SparseMatrix(std::move(s), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::row_mean(const Csr& s) {
  std::vector<double> w(s.col_indices.size());
  for (int i = 0; i < s.rows; ++i) {
    int64_t deg = s.degree(i);
    for (int64_t e = s.row_offsets[i]; e < s.row_offsets[i + 1]; ++e)
      w[e] = 1.0 / static_cast<double>(deg);
  }
  return SparseMatrix(s, std::move(w));
}

}  // namespace csgrl
