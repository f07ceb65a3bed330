#pragma once

#include <random>

#include "sparseflex/sparseflex.hpp"

namespace sftest {

using namespace sparseflex;

// 4x4 with (0,0)=5, (0,3)=7, (2,1)=3, (3,2)=1.
inline CooMatrix example4() { return CooMatrix{4, 4, {0, 0, 2, 3}, {0, 3, 1, 2}, {5, 7, 3, 1}}; }

// 2x2x2 with (0,0,0)=2, (0,1,1)=3, (1,0,1)=4.
inline CooTensor3 example_tensor() { return CooTensor3{{2, 2, 2}, {{{0, 0, 1}, {0, 1, 0}, {0, 1, 1}}}, {2, 3, 4}}; }

inline DenseMatrix random_dense(index_t m, index_t k, double density, std::uint64_t seed) {
  return dense_from_coo(random_matrix(m, k, density, seed));
}

inline DenseTensor3 random_dense(Dims3 d, double density, std::uint64_t seed) {
  return dense_from_coo(random_tensor(d, density, seed));
}

inline constexpr double kDensities[] = {0.0, 1e-4, 1e-2, 0.1, 0.5, 1.0};

inline FormatParams params_for(FormatId f, std::uint64_t seed) {
  FormatParams p;
  if (f == FormatId::BSR) {
    p.block_rows = 1 + static_cast<index_t>(seed % 4);
    p.block_cols = 1 + static_cast<index_t>((seed / 4) % 4);
  }
  if (f == FormatId::RLC) p.run_bits = 1 + static_cast<int>(seed % 6);
  if (f == FormatId::CSF) {
    static constexpr ModeOrder orders[] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    p.mode_order = orders[seed % 6];
  }
  return p;
}

}  // namespace sftest
