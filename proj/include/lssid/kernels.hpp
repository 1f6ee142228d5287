#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Reduction kernels behind the covariance estimators. Every kernel has a
// scalar reference implementation; vector variants are picked once at
// runtime from the CPU features and can be forced with the environment
// variable LSSID_KERNELS=scalar|avx2.

namespace lssid::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  const char* name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// sum_i a[i] * b[i] * mask[i]
  double (*masked_dot)(const double* a, const double* b, const double* mask, std::size_t n);
  /// sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the AVX2 variant was not compiled in or the CPU lacks
/// AVX2/FMA.
const KernelTable* avx2_table() noexcept;

/// The table selected for this process.
const KernelTable& active() noexcept;

/// Name of the active variant ("scalar" or "avx2").
std::string_view active_name() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double masked_dot(std::span<const double> a, std::span<const double> b, std::span<const double> mask) {
  return active().masked_dot(a.data(), b.data(), mask.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace lssid::kernels
