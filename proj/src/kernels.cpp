#include "pssp/kernels.hpp"

#include <omp.h>

#include <string>

#include "pssp/error.hpp"

namespace pssp::nn::kernels {
namespace {

void check(std::size_t a_size, std::size_t b_size, std::size_t c_size, std::size_t m, std::size_t k, std::size_t n) {
  if (a_size != m * k || b_size != k * n || c_size != m * n) {
    throw Error(ErrorKind::ShapeMismatch, "gemm operand sizes do not match m=" + std::to_string(m) +
                                              " k=" + std::to_string(k) + " n=" + std::to_string(n));
  }
}

// Row kernels shared by both implementations; each computes output row i.

inline void nn_row(std::size_t i, std::size_t k, std::size_t n, const double* a, const double* b, double* c,
                   bool accumulate) {
  double* ci = c + i * n;
  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
  }
  const double* ai = a + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = ai[p];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void nt_row(std::size_t i, std::size_t k, std::size_t n, const double* a, const double* b, double* c,
                   bool accumulate) {
  double* ci = c + i * n;
  const double* ai = a + i * k;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double acc = accumulate ? ci[j] : 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
    ci[j] = acc;
  }
}

inline void tn_row(std::size_t i, std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                   double* c, bool accumulate) {
  double* ci = c + i * n;
  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

bool use_parallel(std::size_t m, std::size_t k, std::size_t n) {
  return m > 1 && m * k * n >= kParallelThreshold && !omp_in_parallel();
}

}  // namespace

namespace serial {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check(a.size(), b.size(), c.size(), m, k, n);
  for (std::size_t i = 0; i < m; ++i) nn_row(i, k, n, a.data(), b.data(), c.data(), accumulate);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check(a.size(), b.size(), c.size(), m, k, n);
  for (std::size_t i = 0; i < m; ++i) nt_row(i, k, n, a.data(), b.data(), c.data(), accumulate);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check(a.size(), b.size(), c.size(), m, k, n);
  for (std::size_t i = 0; i < m; ++i) tn_row(i, m, k, n, a.data(), b.data(), c.data(), accumulate);
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check(a.size(), b.size(), c.size(), m, k, n);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    nn_row(static_cast<std::size_t>(i), k, n, a.data(), b.data(), c.data(), accumulate);
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check(a.size(), b.size(), c.size(), m, k, n);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    nt_row(static_cast<std::size_t>(i), k, n, a.data(), b.data(), c.data(), accumulate);
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  check(a.size(), b.size(), c.size(), m, k, n);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    tn_row(static_cast<std::size_t>(i), m, k, n, a.data(), b.data(), c.data(), accumulate);
  }
}

}  // namespace parallel

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  if (use_parallel(m, k, n)) {
    parallel::gemm_nn(m, k, n, a, b, c, accumulate);
  } else {
    serial::gemm_nn(m, k, n, a, b, c, accumulate);
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  if (use_parallel(m, k, n)) {
    parallel::gemm_nt(m, k, n, a, b, c, accumulate);
  } else {
    serial::gemm_nt(m, k, n, a, b, c, accumulate);
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
             std::span<double> c, bool accumulate) {
  if (use_parallel(m, k, n)) {
    parallel::gemm_tn(m, k, n, a, b, c, accumulate);
  } else {
    serial::gemm_tn(m, k, n, a, b, c, accumulate);
  }
}

}  // namespace pssp::nn::kernels
