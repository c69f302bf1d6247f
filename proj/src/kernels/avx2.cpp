#include <immintrin.h>

#include <cmath>

#include "tfim/kernels.hpp"

namespace tfim::kernels {
namespace {

void energy_over_g_avx2(double sin2, double cos2, const double* g, double* out, std::size_t count) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d s2 = _mm256_set1_pd(sin2);
    const __m256d c2 = _mm256_set1_pd(cos2);
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d d = _mm256_fnmadd_pd(two, _mm256_loadu_pd(g + i), one);
        // no FMA here: keeps the rounding identical to the scalar reference
        const __m256d r = _mm256_add_pd(s2, _mm256_mul_pd(_mm256_mul_pd(d, d), c2));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(two, _mm256_sqrt_pd(r)));
    }
    for (; i < count; ++i) {
        const double d = 1.0 - 2.0 * g[i];
        out[i] = 2.0 * std::sqrt(sin2 + d * d * cos2);
    }
}

void energy_over_modes_avx2(double g, const double* sin2, const double* cos2, double* out,
                            std::size_t count) {
    const double d2s = (1.0 - 2.0 * g) * (1.0 - 2.0 * g);
    const __m256d d2 = _mm256_set1_pd(d2s);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d r =
            _mm256_add_pd(_mm256_loadu_pd(sin2 + i), _mm256_mul_pd(d2, _mm256_loadu_pd(cos2 + i)));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(two, _mm256_sqrt_pd(r)));
    }
    for (; i < count; ++i) out[i] = 2.0 * std::sqrt(sin2[i] + d2s * cos2[i]);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void matvec_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x_re,
                 const double* x_im, double* y_re, double* y_im) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        __m256d acc_re = _mm256_setzero_pd();
        __m256d acc_im = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d av = _mm256_loadu_pd(row + c);
            acc_re = _mm256_fmadd_pd(av, _mm256_loadu_pd(x_re + c), acc_re);
            acc_im = _mm256_fmadd_pd(av, _mm256_loadu_pd(x_im + c), acc_im);
        }
        double sr = hsum(acc_re), si = hsum(acc_im);
        for (; c < cols; ++c) {
            sr += row[c] * x_re[c];
            si += row[c] * x_im[c];
        }
        y_re[r] = sr;
        y_im[r] = si;
    }
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{Isa::avx2, energy_over_g_avx2, energy_over_modes_avx2,
                                   matvec_avx2};
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &table : nullptr;
}

}  // namespace tfim::kernels
