#include <cmath>

#include "tfim/kernels.hpp"

namespace tfim::kernels {
namespace {

void energy_over_g_scalar(double sin2, double cos2, const double* g, double* out, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        const double d = 1.0 - 2.0 * g[i];
        out[i] = 2.0 * std::sqrt(sin2 + d * d * cos2);
    }
}

void energy_over_modes_scalar(double g, const double* sin2, const double* cos2, double* out,
                              std::size_t count) {
    const double d2 = (1.0 - 2.0 * g) * (1.0 - 2.0 * g);
    for (std::size_t i = 0; i < count; ++i) out[i] = 2.0 * std::sqrt(sin2[i] + d2 * cos2[i]);
}

void matvec_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x_re,
                   const double* x_im, double* y_re, double* y_im) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        double sr = 0.0, si = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            sr += row[c] * x_re[c];
            si += row[c] * x_im[c];
        }
        y_re[r] = sr;
        y_im[r] = si;
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::scalar, energy_over_g_scalar, energy_over_modes_scalar,
                                   matvec_scalar};
    return table;
}

}  // namespace tfim::kernels
