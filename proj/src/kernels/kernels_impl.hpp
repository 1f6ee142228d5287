#pragma once

#include <cstddef>

namespace lssid::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
double masked_dot_scalar(const double* a, const double* b, const double* mask, std::size_t n);
double squared_distance_scalar(const double* a, const double* b, std::size_t n);

#if defined(LSSID_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
double masked_dot_avx2(const double* a, const double* b, const double* mask, std::size_t n);
double squared_distance_avx2(const double* a, const double* b, std::size_t n);
#endif

}  // namespace lssid::kernels::detail
