// Copyright 2026 The metricnav Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>

#if defined(__GLIBC__) && defined(__x86_64__) && (defined(__AVX512F__) || defined(__AVX2__)) && \
    !defined(METRICNAV_NO_MVEC)
#include <immintrin.h>
#define METRICNAV_HAVE_MVEC 1
extern "C" {
#if defined(__AVX512F__)
__m512d _ZGVeN8v_sin(__m512d);
__m512d _ZGVeN8v_cos(__m512d);
#else
__m256d _ZGVdN4v_sin(__m256d);
__m256d _ZGVdN4v_cos(__m256d);
#endif
}
#endif

namespace metricnav::detail {

/// Elementwise sin and cos of `n` values. Uses glibc's vector math library
/// when available.
template <typename Scalar>
inline void sincos_n(const Scalar* x, Scalar* s, Scalar* c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::sin(x[i]);
    c[i] = std::cos(x[i]);
  }
}

template <>
inline void sincos_n<double>(const double* x, double* s, double* c, std::size_t n) {
  std::size_t i = 0;
#if defined(METRICNAV_HAVE_MVEC) && defined(__AVX512F__)
  for (; i + 8 <= n; i += 8) {
    const __m512d v = _mm512_loadu_pd(x + i);
    _mm512_storeu_pd(s + i, _ZGVeN8v_sin(v));
    _mm512_storeu_pd(c + i, _ZGVeN8v_cos(v));
  }
#elif defined(METRICNAV_HAVE_MVEC)
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(s + i, _ZGVdN4v_sin(v));
    _mm256_storeu_pd(c + i, _ZGVdN4v_cos(v));
  }
#endif
  for (; i < n; ++i) {
    s[i] = std::sin(x[i]);
    c[i] = std::cos(x[i]);
  }
}

}  // namespace metricnav::detail
