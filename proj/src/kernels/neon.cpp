#include <arm_neon.h>

#include <cmath>

#include "tfim/kernels.hpp"

namespace tfim::kernels {
namespace {

void energy_over_g_neon(double sin2, double cos2, const double* g, double* out, std::size_t count) {
    const float64x2_t one = vdupq_n_f64(1.0);
    const float64x2_t two = vdupq_n_f64(2.0);
    const float64x2_t s2 = vdupq_n_f64(sin2);
    const float64x2_t c2 = vdupq_n_f64(cos2);
    std::size_t i = 0;
    for (; i + 2 <= count; i += 2) {
        const float64x2_t d = vsubq_f64(one, vmulq_f64(two, vld1q_f64(g + i)));
        const float64x2_t r = vaddq_f64(s2, vmulq_f64(vmulq_f64(d, d), c2));
        vst1q_f64(out + i, vmulq_f64(two, vsqrtq_f64(r)));
    }
    for (; i < count; ++i) {
        const double d = 1.0 - 2.0 * g[i];
        out[i] = 2.0 * std::sqrt(sin2 + d * d * cos2);
    }
}

void energy_over_modes_neon(double g, const double* sin2, const double* cos2, double* out,
                            std::size_t count) {
    const double d2s = (1.0 - 2.0 * g) * (1.0 - 2.0 * g);
    const float64x2_t d2 = vdupq_n_f64(d2s);
    const float64x2_t two = vdupq_n_f64(2.0);
    std::size_t i = 0;
    for (; i + 2 <= count; i += 2) {
        const float64x2_t r = vaddq_f64(vld1q_f64(sin2 + i), vmulq_f64(d2, vld1q_f64(cos2 + i)));
        vst1q_f64(out + i, vmulq_f64(two, vsqrtq_f64(r)));
    }
    for (; i < count; ++i) out[i] = 2.0 * std::sqrt(sin2[i] + d2s * cos2[i]);
}

void matvec_neon(const double* a, std::size_t rows, std::size_t cols, const double* x_re,
                 const double* x_im, double* y_re, double* y_im) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        float64x2_t acc_re = vdupq_n_f64(0.0);
        float64x2_t acc_im = vdupq_n_f64(0.0);
        std::size_t c = 0;
        for (; c + 2 <= cols; c += 2) {
            const float64x2_t av = vld1q_f64(row + c);
            acc_re = vfmaq_f64(acc_re, av, vld1q_f64(x_re + c));
            acc_im = vfmaq_f64(acc_im, av, vld1q_f64(x_im + c));
        }
        double sr = vaddvq_f64(acc_re), si = vaddvq_f64(acc_im);
        for (; c < cols; ++c) {
            sr += row[c] * x_re[c];
            si += row[c] * x_im[c];
        }
        y_re[r] = sr;
        y_im[r] = si;
    }
}

}  // namespace

const KernelTable* neon_table() {
    static const KernelTable table{Isa::neon, energy_over_g_neon, energy_over_modes_neon,
                                   matvec_neon};
    return &table;
}

}  // namespace tfim::kernels
