#pragma once

// Incremental sparse row echelon form over a word-size prime field.

#include <cstdint>
#include <utility>
#include <vector>

namespace kurihara::linalg {

/// (column, value) pairs; values are residues modulo the field prime.
using SparseRow = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

/// Rows are reduced against the pivots present when they arrive and stored in
/// that semi-reduced form; kernel vectors are recovered by back-substitution in
/// reverse insertion order.
class ModEchelon {
 public:
  ModEchelon(std::size_t ncols, std::uint32_t prime);

  /// Preference for pivot columns: a lower weight is chosen first (ties go to the
  /// lower index). Typically the number of rows touching the column.
  void set_column_weights(std::vector<std::uint32_t> weights);

  /// Reduces the row and stores it when nonzero; returns whether the rank grew.
  bool insert(const SparseRow& row);

  std::size_t rank() const { return rows_.size(); }
  std::size_t cols() const { return ncols_; }
  std::uint32_t prime() const { return prime_; }
  std::size_t stored_entries() const { return stored_entries_; }

  std::vector<std::uint32_t> free_columns() const;

  /// Solution of the stored system with the given values on the free columns
  /// (in free_columns() order).
  std::vector<std::uint32_t> kernel_vector(const std::vector<std::uint32_t>& free_values) const;

 private:
  struct Row {
    std::uint32_t pivot;
    SparseRow rest;  // pivot coefficient normalized to 1 and not stored
  };

  std::size_t ncols_;
  std::uint32_t prime_;
  std::vector<std::int32_t> pivot_row_;  // column -> row index or -1
  std::vector<Row> rows_;
  std::vector<std::uint32_t> weights_;
  std::size_t stored_entries_ = 0;

  // Scratch space reused by insert().
  std::vector<std::uint64_t> acc_;
  std::vector<std::uint32_t> touched_;
  std::vector<char> is_touched_;
  std::vector<std::uint32_t> queued_;
};

/// Rank of a dense matrix modulo a prime (rows are consumed).
std::size_t dense_rank(std::vector<std::vector<std::uint32_t>> rows, std::uint32_t prime);

}  // namespace kurihara::linalg
