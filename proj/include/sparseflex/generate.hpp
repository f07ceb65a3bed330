#pragma once

#include <cmath>
#include <random>
#include <unordered_set>
#include <vector>

#include "sparseflex/formats.hpp"

namespace sparseflex {

/// Exact nonzero count for a requested density: round(density * size).
inline index_t target_nnz(double density, double size) {
  if (!(density >= 0.0 && density <= 1.0)) throw Error("density must be in [0, 1]");
  return static_cast<index_t>(std::llround(density * size));
}

/// Nonzero values are exactly representable in 32-bit floats and never zero.
inline double random_value(std::mt19937_64& rng) {
  return static_cast<float>(0.5 + static_cast<double>(rng() >> 41) / static_cast<double>(1u << 23) * 1.5);
}

/// `count` distinct linear positions in [0, size), sorted, uniformly without replacement.
inline std::vector<index_t> sample_positions(index_t size, index_t count, std::mt19937_64& rng) {
  if (count < 0 || count > size) throw Error("cannot place " + std::to_string(count) + " nonzeros in " +
                                             std::to_string(size) + " positions");
  std::vector<index_t> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count > size / 2) {
    // Dense regime: choose the zeros instead, then take the complement.
    std::vector<bool> zero(static_cast<std::size_t>(size), false);
    for (index_t left = size - count; left > 0;) {
      auto p = static_cast<index_t>(rng() % static_cast<std::uint64_t>(size));
      if (!zero[static_cast<std::size_t>(p)]) {
        zero[static_cast<std::size_t>(p)] = true;
        --left;
      }
    }
    for (index_t p = 0; p < size; ++p)
      if (!zero[static_cast<std::size_t>(p)]) out.push_back(p);
    return out;
  }
  if (size <= (index_t{1} << 32)) {
    std::vector<bool> taken(static_cast<std::size_t>(size), false);
    while (static_cast<index_t>(out.size()) < count) {
      auto p = static_cast<index_t>(rng() % static_cast<std::uint64_t>(size));
      if (!taken[static_cast<std::size_t>(p)]) {
        taken[static_cast<std::size_t>(p)] = true;
        out.push_back(p);
      }
    }
  } else {
    std::unordered_set<index_t> taken;
    while (static_cast<index_t>(out.size()) < count) {
      auto p = static_cast<index_t>(rng() % static_cast<std::uint64_t>(size));
      if (taken.insert(p).second) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline CooMatrix random_matrix(index_t rows, index_t cols, index_t nnz, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CooMatrix c{rows, cols, {}, {}, {}};
  for (index_t p : sample_positions(rows * cols, nnz, rng)) {
    c.row_ids.push_back(p / cols);
    c.col_ids.push_back(p % cols);
    c.values.push_back(random_value(rng));
  }
  return c;
}

inline CooMatrix random_matrix(index_t rows, index_t cols, double density, std::uint64_t seed) {
  return random_matrix(rows, cols, target_nnz(density, static_cast<double>(rows) * static_cast<double>(cols)), seed);
}

inline CooTensor3 random_tensor(Dims3 dims, index_t nnz, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CooTensor3 t{dims, {}, {}};
  for (index_t p : sample_positions(dims[0] * dims[1] * dims[2], nnz, rng)) {
    t.coords[0].push_back(p / (dims[1] * dims[2]));
    t.coords[1].push_back((p / dims[2]) % dims[1]);
    t.coords[2].push_back(p % dims[2]);
    t.values.push_back(random_value(rng));
  }
  return t;
}

inline CooTensor3 random_tensor(Dims3 dims, double density, std::uint64_t seed) {
  double size = static_cast<double>(dims[0]) * static_cast<double>(dims[1]) * static_cast<double>(dims[2]);
  return random_tensor(dims, target_nnz(density, size), seed);
}

}  // namespace sparseflex
