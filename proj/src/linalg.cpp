#include "kurihara/linalg.hpp"

#include <algorithm>
#include <queue>

#include "kurihara/arith.hpp"

namespace kurihara::linalg {

ModEchelon::ModEchelon(std::size_t ncols, std::uint32_t prime)
    : ncols_(ncols), prime_(prime), pivot_row_(ncols, -1), acc_(ncols, 0), is_touched_(ncols, 0) {}

void ModEchelon::set_column_weights(std::vector<std::uint32_t> weights) { weights_ = std::move(weights); }

bool ModEchelon::insert(const SparseRow& row) {
  const std::uint64_t p = prime_;
  touched_.clear();
  // Min-heap of row indices: a stored row only contains pivots created after it,
  // so eliminating in creation order touches each pivot at most once.
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> heap;
  auto touch = [&](std::uint32_t c) {
    if (is_touched_[c]) return;
    is_touched_[c] = 1;
    touched_.push_back(c);
    if (pivot_row_[c] >= 0) heap.push(static_cast<std::uint32_t>(pivot_row_[c]));
  };
  for (auto [c, v] : row) {
    touch(c);
    acc_[c] = (acc_[c] + v) % p;
  }
  std::uint32_t last = UINT32_MAX;
  while (!heap.empty()) {
    const std::uint32_t r = heap.top();
    heap.pop();
    if (r == last) continue;
    last = r;
    const Row& pr = rows_[r];
    const std::uint64_t coef = acc_[pr.pivot];
    if (coef == 0) continue;
    acc_[pr.pivot] = 0;
    const std::uint64_t neg = p - coef;
    for (auto [c, v] : pr.rest) {
      touch(c);
      acc_[c] = (acc_[c] + neg * v) % p;
    }
  }
  // Choose the pivot among surviving entries.
  std::int64_t best = -1;
  for (std::uint32_t c : touched_) {
    if (acc_[c] == 0) continue;
    if (best < 0) {
      best = c;
      continue;
    }
    const std::uint32_t wc = weights_.empty() ? 0 : weights_[c];
    const std::uint32_t wb = weights_.empty() ? 0 : weights_[best];
    if (wc < wb || (wc == wb && c < best)) best = c;
  }
  bool grew = false;
  if (best >= 0) {
    const std::uint64_t inv = *arith::inv_mod(acc_[best], p);
    Row nr{static_cast<std::uint32_t>(best), {}};
    for (std::uint32_t c : touched_) {
      if (acc_[c] == 0 || c == best) continue;
      nr.rest.emplace_back(c, static_cast<std::uint32_t>(acc_[c] * inv % p));
    }
    std::sort(nr.rest.begin(), nr.rest.end());
    stored_entries_ += nr.rest.size() + 1;
    pivot_row_[best] = static_cast<std::int32_t>(rows_.size());
    rows_.push_back(std::move(nr));
    grew = true;
  }
  for (std::uint32_t c : touched_) {
    acc_[c] = 0;
    is_touched_[c] = 0;
  }
  return grew;
}

std::vector<std::uint32_t> ModEchelon::free_columns() const {
  std::vector<std::uint32_t> out;
  for (std::size_t c = 0; c < ncols_; ++c)
    if (pivot_row_[c] < 0) out.push_back(static_cast<std::uint32_t>(c));
  return out;
}

std::vector<std::uint32_t> ModEchelon::kernel_vector(const std::vector<std::uint32_t>& free_values) const {
  const std::uint64_t p = prime_;
  std::vector<std::uint32_t> x(ncols_, 0);
  const auto fc = free_columns();
  for (std::size_t i = 0; i < fc.size() && i < free_values.size(); ++i) x[fc[i]] = free_values[i] % prime_;
  for (std::size_t r = rows_.size(); r-- > 0;) {
    std::uint64_t s = 0;
    for (auto [c, v] : rows_[r].rest) s = (s + static_cast<std::uint64_t>(v) * x[c]) % p;
    x[rows_[r].pivot] = static_cast<std::uint32_t>((p - s) % p);
  }
  return x;
}

std::size_t dense_rank(std::vector<std::vector<std::uint32_t>> rows, std::uint32_t prime) {
  const std::uint64_t p = prime;
  std::size_t rank = 0;
  const std::size_t ncols = rows.empty() ? 0 : rows[0].size();
  for (std::size_t c = 0; c < ncols && rank < rows.size(); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][c] == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[rank]);
    const std::uint64_t inv = *arith::inv_mod(rows[rank][c], p);
    for (auto& v : rows[rank]) v = static_cast<std::uint32_t>(v * inv % p);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank || rows[r][c] == 0) continue;
      const std::uint64_t f = p - rows[r][c];
      for (std::size_t j = c; j < ncols; ++j)
        rows[r][j] = static_cast<std::uint32_t>((rows[r][j] + f * rows[rank][j]) % p);
    }
    ++rank;
  }
  return rank;
}

}  // namespace kurihara::linalg
