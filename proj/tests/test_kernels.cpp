#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tfim/kernels.hpp"

using namespace tfim::kernels;

namespace {

std::vector<const KernelTable*> available() {
    std::vector<const KernelTable*> t{&scalar_table()};
    if (auto* k = avx2_table()) t.push_back(k);
    if (auto* k = neon_table()) t.push_back(k);
    return t;
}

}  // namespace

TEST_CASE("SIMD energy kernels match scalar bit for bit") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-0.5, 1.5);
    for (std::size_t count : {0u, 1u, 3u, 4u, 5u, 33u, 257u}) {
        std::vector<double> g(count), s2(count), c2(count);
        for (std::size_t i = 0; i < count; ++i) {
            g[i] = U(rng);
            s2[i] = std::abs(U(rng));
            c2[i] = 1 - s2[i];
        }
        std::vector<double> ref(count), ref2(count);
        scalar_table().energy_over_g(0.1, 0.9, g.data(), ref.data(), count);
        scalar_table().energy_over_modes(0.37, s2.data(), c2.data(), ref2.data(), count);
        for (const auto* k : available()) {
            CAPTURE(isa_name(k->isa));
            std::vector<double> out(count), out2(count);
            k->energy_over_g(0.1, 0.9, g.data(), out.data(), count);
            k->energy_over_modes(0.37, s2.data(), c2.data(), out2.data(), count);
            CHECK(out == ref);
            CHECK(out2 == ref2);
        }
    }
}

TEST_CASE("SIMD matvec matches scalar") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N;
    for (std::size_t dim : {1u, 3u, 8u, 17u, 64u}) {
        std::vector<double> a(dim * (dim + 2)), xr(dim + 2), xi(dim + 2);
        for (auto& v : a) v = N(rng);
        for (auto& v : xr) v = N(rng);
        for (auto& v : xi) v = N(rng);
        std::vector<double> yr(dim), yi(dim);
        scalar_table().matvec_real_complex(a.data(), dim, dim + 2, xr.data(), xi.data(), yr.data(), yi.data());
        for (const auto* k : available()) {
            std::vector<double> zr(dim), zi(dim);
            k->matvec_real_complex(a.data(), dim, dim + 2, xr.data(), xi.data(), zr.data(), zi.data());
            for (std::size_t i = 0; i < dim; ++i) {
                CHECK(zr[i] == doctest::Approx(yr[i]).epsilon(1e-12).scale(10));
                CHECK(zi[i] == doctest::Approx(yi[i]).epsilon(1e-12).scale(10));
            }
        }
    }
}

TEST_CASE("dispatch picks an available table") {
    const auto& t = active();
    CHECK(t.energy_over_g != nullptr);
    CHECK(t.matvec_real_complex != nullptr);
}
