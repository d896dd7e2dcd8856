#pragma once

// Raw row-major GEMM variants used by the layers. All matrices are dense and
// contiguous; `accumulate` selects C += ... instead of C = ...

#include <algorithm>
#include <cstddef>
#include <vector>

namespace rpmixer::kernels {

// C[m x p] (+)= A[m x k] * B[k x p]
template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * p, T{0});
  for (std::size_t i = 0; i < m; ++i) {
    T* c_row = c + i * p;
    const T* a_row = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const T s = a_row[l];
      if (s == T{0}) continue;
      const T* b_row = b + l * p;
      for (std::size_t j = 0; j < p; ++j) c_row[j] += s * b_row[j];
    }
  }
}

// C[m x p] (+)= A[m x k] * B[p x k]^T
// B is transposed once so the inner loop runs over contiguous outputs.
template <typename T>
void gemm_nt(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c,
             bool accumulate) {
  std::vector<T> bt(k * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t l = 0; l < k; ++l) bt[l * p + j] = b[j * k + l];
  std::vector<T> acc(p);
  for (std::size_t i = 0; i < m; ++i) {
    const T* a_row = a + i * k;
    T* c_row = c + i * p;
    std::fill(acc.begin(), acc.end(), T{0});
    for (std::size_t l = 0; l < k; ++l) {
      const T s = a_row[l];
      if (s == T{0}) continue;
      const T* bt_row = bt.data() + l * p;
      for (std::size_t j = 0; j < p; ++j) acc[j] += s * bt_row[j];
    }
    for (std::size_t j = 0; j < p; ++j) c_row[j] = accumulate ? c_row[j] + acc[j] : acc[j];
  }
}

// C[k x p] (+)= A[m x k]^T * B[m x p]
template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + k * p, T{0});
  for (std::size_t i = 0; i < m; ++i) {
    const T* a_row = a + i * k;
    const T* b_row = b + i * p;
    for (std::size_t l = 0; l < k; ++l) {
      const T s = a_row[l];
      if (s == T{0}) continue;
      T* c_row = c + l * p;
      for (std::size_t j = 0; j < p; ++j) c_row[j] += s * b_row[j];
    }
  }
}

}  // namespace rpmixer::kernels
