#include <cassert>
#include <cstdlib>
#include <string>

#include "tfim/kernels.hpp"

namespace tfim::kernels {

#ifndef TFIM_HAVE_AVX2_TU
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef TFIM_HAVE_NEON_TU
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

const KernelTable& select() {
    if (const char* env = std::getenv("TFIM_SIMD"); env && std::string(env) == "scalar")
        return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    if (const KernelTable* t = neon_table()) return *t;
    return scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

void energy_over_g(double sin2, double cos2, std::span<const double> g, std::span<double> out) {
    assert(out.size() >= g.size());
    active().energy_over_g(sin2, cos2, g.data(), out.data(), g.size());
}

void energy_over_modes(double g, std::span<const double> sin2, std::span<const double> cos2,
                       std::span<double> out) {
    assert(sin2.size() == cos2.size() && out.size() >= sin2.size());
    active().energy_over_modes(g, sin2.data(), cos2.data(), out.data(), sin2.size());
}

}  // namespace tfim::kernels
