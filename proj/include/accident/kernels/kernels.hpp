#pragma once

// Dense double-precision inner loops used by the autodiff ops. Every entry
// has a scalar reference implementation; SIMD variants are selected at
// runtime from CPU features and must agree with the reference up to
// floating-point reassociation.
//
// All matrices are contiguous row-major. The gemm variants accumulate into C.

#include <cstddef>
#include <string_view>
#include <vector>

namespace accident::kernels {

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(std::size_t n, const double* a, const double* b);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
};

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the library. Chosen once from CPU features; the
/// ACCIDENT_SIMD environment variable ("scalar", "avx2", "neon") overrides.
const KernelTable& active();

/// Force a specific table by name. Returns false if it is unavailable.
bool select(std::string_view name);

}  // namespace accident::kernels
