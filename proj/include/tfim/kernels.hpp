#pragma once

// Data-parallel inner loops with a scalar reference implementation and SIMD
// variants (AVX2+FMA on x86-64, NEON on aarch64). The active variant is
// picked once at startup from CPU features; TFIM_SIMD=scalar forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace tfim::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    Isa isa;
    // out[i] = 2 sqrt(sin2 + (1 - 2 g[i])^2 cos2)
    void (*energy_over_g)(double sin2, double cos2, const double* g, double* out, std::size_t count);
    // out[i] = 2 sqrt(sin2[i] + (1 - 2 g)^2 cos2[i])
    void (*energy_over_modes)(double g, const double* sin2, const double* cos2, double* out,
                              std::size_t count);
    // y = A x for row-major real A (rows x cols) and split complex x, y.
    void (*matvec_real_complex)(const double* a, std::size_t rows, std::size_t cols,
                                const double* x_re, const double* x_im, double* y_re, double* y_im);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

const KernelTable& active();
std::string_view isa_name(Isa isa);

// Convenience wrappers over active().
void energy_over_g(double sin2, double cos2, std::span<const double> g, std::span<double> out);
void energy_over_modes(double g, std::span<const double> sin2, std::span<const double> cos2,
                       std::span<double> out);

}  // namespace tfim::kernels
