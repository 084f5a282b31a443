#pragma once

#include <cstddef>
#include <span>

namespace pssp::nn::kernels {

// Row-major GEMM variants. Every output element is accumulated in ascending
// inner-index order in both implementations, so serial and parallel results
// are bitwise identical. With `accumulate` the product is added to `c`.
//   nn: C[m x n] (+)= A[m x k]   * B[k x n]
//   nt: C[m x n] (+)= A[m x k]   * B[n x k]^T
//   tn: C[m x n] (+)= A[k x m]^T * B[k x n]

namespace serial {
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
}  // namespace serial

namespace parallel {
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
}  // namespace parallel

/// Work (m*k*n) above which the dispatching entry points use the OpenMP
/// kernels. Calls made from inside an active parallel region stay serial.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 18;

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate = false);

}  // namespace pssp::nn::kernels
