#include "tfim/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fmt/format.h>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tfim/kernels.hpp"

namespace tfim::oracle {

namespace {

int bit(std::uint32_t s, int j) { return static_cast<int>((s >> j) & 1u); }

double sector_sign(Sector sector) { return sector == Sector::odd ? -1.0 : 1.0; }

// -sum_b J_b z_b z_{b+1} for one configuration.
double bond_energy(const DenseHamiltonian& h, std::uint32_t s) {
    double e = 0.0;
    for (std::size_t b = 0; b < h.weights.bonds.size(); ++b) {
        const int j = static_cast<int>(b);
        const int j1 = (j + 1) % h.n;
        const double zz = bit(s, j) == bit(s, j1) ? 1.0 : -1.0;
        e -= h.weights.bonds[b] * zz;
    }
    return e;
}

}  // namespace

DenseHamiltonian build_hamiltonian(int n, TermWeights weights, bool periodic) {
    if (n < 2 || n > max_sites)
        throw std::invalid_argument(fmt::format("dense Hamiltonian needs 2 <= n <= {} (got {})", max_sites, n));
    if (weights.transverse.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("transverse weights must have n entries");
    const std::size_t bonds = periodic ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n - 1);
    if (weights.bonds.size() != bonds)
        throw std::invalid_argument(fmt::format("expected {} bond weights for a {} chain", bonds,
                                                periodic ? "periodic" : "open"));
    return {n, std::move(weights), periodic};
}

DenseHamiltonian uniform_chain(int n, double g) { return build_hamiltonian(n, uniform_weights(n, g), true); }

DenseHamiltonian stepwise_chain(const StepWisePath& path) {
    return build_hamiltonian(path.n, stepwise_hamiltonian_weights(path), false);
}

// ---------------------------------------------------------------------------

SectorBasis::SectorBasis(int n, Sector sector) : n_(n), sector_(sector) {
    if (n < 1 || n > max_sites) throw std::invalid_argument("sector basis: n out of range");
    const std::uint32_t count = sector == Sector::full ? (1u << n) : (1u << (n - 1));
    states_.resize(count);
    for (std::uint32_t s = 0; s < count; ++s) states_[s] = s;
}

std::pair<std::size_t, double> SectorBasis::locate(std::uint32_t config) const {
    if (sector_ == Sector::full) return {config, 1.0};
    const std::uint32_t top = 1u << (n_ - 1);
    if (config & top) return {config ^ ((top << 1) - 1), sector_sign(sector_)};
    return {config, 1.0};
}

namespace {

template <class Vec>
Vec lift(const SectorBasis& basis, const Vec& v) {
    if (basis.sector() == Sector::full) return v;
    const std::uint32_t mask = (1u << basis.n()) - 1;
    Vec out = Vec::Zero(static_cast<Eigen::Index>(mask + 1));
    const double r = std::sqrt(0.5), sg = sector_sign(basis.sector());
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        const auto s = basis.state(i);
        out(s) += r * v(static_cast<Eigen::Index>(i));
        out(s ^ mask) += sg * r * v(static_cast<Eigen::Index>(i));
    }
    return out;
}

}  // namespace

Eigen::VectorXcd SectorBasis::to_full(const Eigen::VectorXcd& v) const { return lift(*this, v); }

Eigen::MatrixXd dense_matrix(const DenseHamiltonian& h, Sector sector) {
    const SectorBasis basis(h.n, sector);
    const auto d = static_cast<Eigen::Index>(basis.dimension());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto s = basis.state(static_cast<std::size_t>(i));
        m(i, i) += bond_energy(h, s);
        for (int j = 0; j < h.n; ++j) {
            const auto [idx, sign] = basis.locate(s ^ (1u << j));
            m(static_cast<Eigen::Index>(idx), i) -= h.weights.transverse[static_cast<std::size_t>(j)] * sign;
        }
    }
    return m;
}

Eigen::MatrixXd sigma_x_matrix(int n, Sector sector) {
    TermWeights w{std::vector<double>(static_cast<std::size_t>(n), -1.0), std::vector<double>(static_cast<std::size_t>(n - 1), 0.0)};
    return dense_matrix(build_hamiltonian(n, std::move(w), false), sector);
}

Eigen::MatrixXd parity_matrix(int n) {
    if (n < 1 || n > max_sites) throw std::invalid_argument("parity_matrix: n out of range");
    const std::uint32_t mask = (1u << n) - 1;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mask + 1, mask + 1);
    for (std::uint32_t s = 0; s <= mask; ++s) p(s ^ mask, s) = 1.0;
    return p;
}

void apply_hamiltonian(const DenseHamiltonian& h, const SectorBasis& basis, const Eigen::VectorXd& x,
                       Eigen::VectorXd& y) {
    const auto d = static_cast<Eigen::Index>(basis.dimension());
    y.setZero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto s = basis.state(static_cast<std::size_t>(i));
        const double xi = x(i);
        y(i) += bond_energy(h, s) * xi;
        for (int j = 0; j < h.n; ++j) {
            const auto [idx, sign] = basis.locate(s ^ (1u << j));
            y(static_cast<Eigen::Index>(idx)) -= h.weights.transverse[static_cast<std::size_t>(j)] * sign * xi;
        }
    }
}

// ---------------------------------------------------------------------------

Spectrum spectrum(const DenseHamiltonian& h, Sector sector, bool with_vectors) {
    const auto opts = with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    Spectrum out;
    out.sector = sector;
    if (sector != Sector::full) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(h, sector), opts);
        out.energies = es.eigenvalues();
        if (with_vectors) out.vectors = es.eigenvectors();
        out.parity.assign(static_cast<std::size_t>(out.energies.size()), sector == Sector::even ? 1 : -1);
        return out;
    }
    // parity commutes with H: diagonalise both blocks and merge
    const Spectrum even = spectrum(h, Sector::even, with_vectors);
    const Spectrum odd = spectrum(h, Sector::odd, with_vectors);
    const SectorBasis be(h.n, Sector::even), bo(h.n, Sector::odd);
    const Eigen::Index half = even.energies.size(), dim = 2 * half;
    std::vector<std::pair<double, Eigen::Index>> order;  // index < half: even
    for (Eigen::Index i = 0; i < half; ++i) {
        order.push_back({even.energies(i), i});
        order.push_back({odd.energies(i), half + i});
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out.energies.resize(dim);
    if (with_vectors) out.vectors.resize(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const auto [e, src] = order[static_cast<std::size_t>(r)];
        out.energies(r) = e;
        const bool is_even = src < half;
        out.parity.push_back(is_even ? 1 : -1);
        if (with_vectors) {
            const Eigen::VectorXd v = is_even ? Eigen::VectorXd(even.vectors.col(src))
                                              : Eigen::VectorXd(odd.vectors.col(src - half));
            out.vectors.col(r) = lift(is_even ? be : bo, v);
        }
    }
    return out;
}

namespace {

// Levels [first, last) sharing the energy of `level` within tol.
std::pair<std::size_t, std::size_t> degenerate_block(const Eigen::VectorXd& e, std::size_t level, double tol) {
    const double ref = e(static_cast<Eigen::Index>(level));
    const double t = tol * std::max(1.0, std::abs(ref));
    std::size_t first = level, last = level + 1;
    while (first > 0 && std::abs(e(static_cast<Eigen::Index>(first - 1)) - ref) <= t) --first;
    while (last < static_cast<std::size_t>(e.size()) && std::abs(e(static_cast<Eigen::Index>(last)) - ref) <= t) ++last;
    return {first, last};
}

Eigen::VectorXd sigma_x_on_ground(const Spectrum& sp, int n) {
    if (sp.vectors.size() == 0) throw std::invalid_argument("matrix elements need eigenvectors");
    return sigma_x_matrix(n, sp.sector) * sp.vectors.col(0);
}

MatrixElement element_for_block(const Spectrum& sp, const Eigen::VectorXd& xg, std::size_t first,
                                std::size_t last, std::size_t level) {
    MatrixElement m;
    m.energy = sp.energies(static_cast<Eigen::Index>(level));
    m.gap = m.energy - sp.energies(0);
    m.degeneracy = static_cast<int>(last - first);
    m.degenerate = m.degeneracy > 1;
    double norm2 = 0.0;
    for (std::size_t l = first; l < last; ++l) {
        const double c = sp.vectors.col(static_cast<Eigen::Index>(l)).dot(xg);
        norm2 += c * c;
        if (l == level) m.value = c;
    }
    m.magnitude = m.degenerate ? std::sqrt(norm2) : std::abs(m.value);
    return m;
}

}  // namespace

MatrixElement matrix_element_sigma_x(const Spectrum& sp, int n, std::size_t level, double tol) {
    if (level >= static_cast<std::size_t>(sp.energies.size())) throw std::out_of_range("level index out of range");
    const Eigen::VectorXd xg = sigma_x_on_ground(sp, n);
    const auto [first, last] = degenerate_block(sp.energies, level, tol);
    return element_for_block(sp, xg, first, last, level);
}

std::vector<MatrixElement> sigma_x_elements(const Spectrum& sp, int n, double tol) {
    const Eigen::VectorXd xg = sigma_x_on_ground(sp, n);
    std::vector<MatrixElement> out;
    std::size_t level = degenerate_block(sp.energies, 0, tol).second;
    while (level < static_cast<std::size_t>(sp.energies.size())) {
        const auto [first, last] = degenerate_block(sp.energies, level, tol);
        out.push_back(element_for_block(sp, xg, first, last, first));
        level = last;
    }
    return out;
}

// ---------------------------------------------------------------------------

LanczosResult lanczos_lowest(const LinearOperator& op, std::size_t dimension, int count, double tol,
                             int max_iter, unsigned seed) {
    if (count < 1 || static_cast<std::size_t>(count) > dimension)
        throw std::invalid_argument("lanczos: count must be in [1, dimension]");
    const auto d = static_cast<Eigen::Index>(dimension);
    const int m_max = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(max_iter), dimension));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd q(d, m_max);
    Eigen::VectorXd v(d), w(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
    v.normalize();

    std::vector<double> alpha, beta;
    LanczosResult res;
    for (int j = 0; j < m_max; ++j) {
        q.col(j) = v;
        op(v, w);
        const double a = v.dot(w);
        alpha.push_back(a);
        // full reorthogonalisation, twice
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd c = q.leftCols(j + 1).transpose() * w;
            w -= q.leftCols(j + 1) * c;
        }
        const double b = w.norm();
        res.iterations = j + 1;

        const int m = j + 1;
        if (m >= count) {
            Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
            Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                        : Eigen::VectorXd(0);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            bool ok = true;
            for (int i = 0; i < count; ++i) {
                const double resid = std::abs(b * es.eigenvectors()(m - 1, i));
                if (resid > tol * std::max(1.0, std::abs(es.eigenvalues()(i)))) ok = false;
            }
            if (ok || b < 1e-14 || m == m_max) {
                res.converged = ok || b < 1e-14;
                res.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + count);
                return res;
            }
        }
        if (b < 1e-14) break;
        beta.push_back(b);
        v = w / b;
    }
    return res;
}

std::pair<double, double> even_sector_lowest(const DenseHamiltonian& h) {
    const SectorBasis basis(h.n, Sector::even);
    if (basis.dimension() <= 256) {
        const auto sp = spectrum(h, Sector::even, false);
        return {sp.energies(0), sp.energies(1)};
    }
    const auto r = lanczos_lowest(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { apply_hamiltonian(h, basis, x, y); },
        basis.dimension(), 2, 1e-11);
    if (!r.converged) throw std::runtime_error(fmt::format("Lanczos did not converge (n={})", h.n));
    return {r.values[0], r.values[1]};
}

GapProfile stepwise_gap_profile(int n, int points_per_step) {
    if (n < 3) throw std::invalid_argument("step-wise path needs n >= 3");
    if (points_per_step < 2) throw std::invalid_argument("need at least two points per step");
    GapProfile prof;
    prof.n = n;
    prof.minimum.gap = std::numeric_limits<double>::infinity();
    for (int step = 1; step <= n - 1; ++step) {
        for (int i = step == 1 ? 0 : 1; i < points_per_step; ++i) {
            const double s = static_cast<double>(i) / (points_per_step - 1);
            const auto [e0, e1] = even_sector_lowest(stepwise_chain({n, step, s}));
            const GapSample sample{step, s, e1 - e0};
            prof.samples.push_back(sample);
            if (sample.gap < prof.minimum.gap) prof.minimum = sample;
        }
    }
    return prof;
}

GapProfile uniform_gap_profile(int n, int points) {
    if (points < 3) throw std::invalid_argument("need at least three grid points");
    auto gap = [n](double g) {
        const auto [e0, e1] = even_sector_lowest(uniform_chain(n, g));
        return e1 - e0;
    };
    GapProfile prof;
    prof.n = n;
    std::size_t best = 0;
    for (int i = 0; i < points; ++i) {
        const double g = static_cast<double>(i) / (points - 1);
        prof.samples.push_back({0, g, gap(g)});
        if (prof.samples.back().gap < prof.samples[best].gap) best = prof.samples.size() - 1;
    }
    // golden-section refinement between the neighbours of the grid minimum
    double lo = prof.samples[best == 0 ? 0 : best - 1].s;
    double hi = prof.samples[std::min(best + 1, prof.samples.size() - 1)].s;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    double f1 = gap(x1), f2 = gap(x2);
    while (hi - lo > 1e-9) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = gap(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = gap(x2);
        }
    }
    prof.minimum = f1 < f2 ? GapSample{0, x1, f1} : GapSample{0, x2, f2};
    if (prof.samples[best].gap < prof.minimum.gap) prof.minimum = prof.samples[best];
    return prof;
}

// ---------------------------------------------------------------------------
// Evolution

namespace {

// exp(-i tau A) psi for real symmetric A via Lanczos. Returns false when the
// Krylov space hits its size limit before converging.
bool krylov_expm(const Eigen::MatrixXd& a, double tau, const Eigen::VectorXcd& psi, int m_max,
                 Eigen::VectorXcd& out) {
    const auto d = a.rows();
    const double nrm = psi.norm();
    if (nrm == 0.0) {
        out = psi;
        return true;
    }
    const auto& k = kernels::active();
    const int m_cap = static_cast<int>(std::min<Eigen::Index>(m_max, d));
    Eigen::MatrixXcd q(d, m_cap);
    Eigen::VectorXd xr(d), xi(d), yr(d), yi(d);
    std::vector<double> alpha, beta;
    Eigen::VectorXcd v = psi / nrm;
    for (int j = 0; j < m_cap; ++j) {
        q.col(j) = v;
        xr = v.real();
        xi = v.imag();
        // A is symmetric, so its column-major storage doubles as row-major
        k.matvec_real_complex(a.data(), static_cast<std::size_t>(d), static_cast<std::size_t>(d), xr.data(),
                              xi.data(), yr.data(), yi.data());
        Eigen::VectorXcd w(d);
        w.real() = yr;
        w.imag() = yi;
        alpha.push_back(v.dot(w).real());
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXcd c = q.leftCols(j + 1).adjoint() * w;
            w -= q.leftCols(j + 1) * c;
        }
        const double b = w.norm();
        const int m = j + 1;

        Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
        Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                    : Eigen::VectorXd(0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const Eigen::MatrixXd& V = es.eigenvectors();
        Eigen::VectorXcd c(m);
        for (int r = 0; r < m; ++r) {
            cplx acc = 0.0;
            for (int s = 0; s < m; ++s)
                acc += V(r, s) * std::polar(1.0, -tau * es.eigenvalues()(s)) * V(0, s);
            c(r) = acc;
        }
        const bool invariant = b < 1e-13 * std::max(1.0, std::abs(alpha.front()));
        if (invariant || b * std::abs(c(m - 1)) < 1e-15) {
            out = nrm * (q.leftCols(m) * c);
            return true;
        }
        beta.push_back(b);
        v = w / b;
    }
    return false;
}

bool cf4_step(const MatrixPath& h, double t, double dt, const Eigen::VectorXcd& psi, int m_max,
              Eigen::VectorXcd& out) {
    constexpr double r3 = 0.28867513459481288225;  // sqrt(3)/6
    constexpr double a = 0.25 - r3, b = 0.25 + r3;
    const Eigen::MatrixXd h1 = h(t + (0.5 - r3) * dt);
    const Eigen::MatrixXd h2 = h(t + (0.5 + r3) * dt);
    Eigen::VectorXcd mid;
    if (!krylov_expm(b * h1 + a * h2, dt, psi, m_max, mid)) return false;
    return krylov_expm(a * h1 + b * h2, dt, mid, m_max, out);
}

}  // namespace

EvolutionResult schrodinger_evolve(const MatrixPath& h, const Eigen::VectorXcd& psi0, double t0, double t1,
                                   const EvolutionOptions& opt) {
    if (!(t1 >= t0)) throw std::invalid_argument("schrodinger_evolve: t1 < t0");
    if (!(opt.rtol > 0.0)) throw std::invalid_argument("schrodinger_evolve: rtol must be positive");
    EvolutionResult res;
    res.state = psi0;
    const double n0 = psi0.norm();
    double t = t0;
    double dt = std::min(0.1, std::max(t1 - t0, 1e-12) / 10.0);
    while (t < t1) {
        const bool last = dt >= t1 - t;
        const double step = last ? t1 - t : dt;
        Eigen::VectorXcd full, half, two;
        double err = std::numeric_limits<double>::infinity();
        const bool ok = cf4_step(h, t, step, res.state, opt.krylov_max, full) &&
                        cf4_step(h, t, 0.5 * step, res.state, opt.krylov_max, half) &&
                        cf4_step(h, t + 0.5 * step, 0.5 * step, half, opt.krylov_max, two);
        if (ok) err = (full - two).norm() / 15.0;
        if (err <= opt.rtol) {
            res.state = two;
            t = last ? t1 : t + step;
            ++res.steps;
        } else {
            ++res.rejected;
        }
        const double factor = std::isfinite(err) ? (err > 0 ? 0.9 * std::pow(opt.rtol / err, 0.2) : 4.0) : 0.25;
        const double next = step * std::clamp(factor, 0.2, 4.0);
        dt = (err <= opt.rtol && last) ? std::max(dt, next) : next;
        if (dt < 1e-13 * std::max(1.0, std::abs(t)))
            throw std::runtime_error(fmt::format("Schrodinger evolution step underflow at t={:.17g}", t));
    }
    res.norm_drift = std::abs(res.state.norm() - n0);
    return res;
}

MatrixPath sweep_path(int n, const Schedule& schedule, Sector sector) {
    const double T = schedule.total_time();
    if (schedule.kind() != ScheduleKind::step_wise) {
        const Eigen::MatrixXd hx = dense_matrix(uniform_chain(n, 0.0), sector);
        const Eigen::MatrixXd hzz = dense_matrix(uniform_chain(n, 1.0), sector);
        return [hx, hzz, schedule, T](double t) {
            const double g = schedule.g_of_t(std::clamp(t, 0.0, T));
            return Eigen::MatrixXd((1.0 - g) * hx + g * hzz);
        };
    }
    if (schedule.chain_size() != n) throw std::invalid_argument("step-wise schedule built for a different n");
    std::vector<Eigen::MatrixXd> site, bond;
    for (int j = 0; j < n; ++j) {
        TermWeights w{std::vector<double>(n, 0.0), std::vector<double>(n - 1, 0.0)};
        w.transverse[j] = 1.0;
        site.push_back(dense_matrix(build_hamiltonian(n, w, false), sector));
    }
    for (int j = 0; j + 1 < n; ++j) {
        TermWeights w{std::vector<double>(n, 0.0), std::vector<double>(n - 1, 0.0)};
        w.bonds[j] = 1.0;
        bond.push_back(dense_matrix(build_hamiltonian(n, w, false), sector));
    }
    return [site, bond, schedule, T](double t) {
        const auto w = stepwise_hamiltonian_weights(stepwise_position(schedule, std::clamp(t, 0.0, T)));
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(site[0].rows(), site[0].cols());
        for (std::size_t j = 0; j < site.size(); ++j)
            if (w.transverse[j] != 0.0) m += w.transverse[j] * site[j];
        for (std::size_t j = 0; j < bond.size(); ++j)
            if (w.bonds[j] != 0.0) m += w.bonds[j] * bond[j];
        return m;
    };
}

Eigen::MatrixXd couple_to_boson(const Eigen::MatrixXd& hs, const Eigen::MatrixXd& xs, double omega, double lambda,
                                int levels) {
    if (levels < 2) throw std::invalid_argument("boson truncation needs at least two levels");
    const auto d = hs.rows();
    const Eigen::Index L = levels, D = d * L;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(D, D);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index b = 0; b < L; ++b) {
                m(i * L + b, j * L + b) += hs(i, j);
                if (b + 1 < L) {
                    const double c = lambda * xs(i, j) * std::sqrt(static_cast<double>(b + 1));
                    m(i * L + b, j * L + b + 1) += c;
                    m(j * L + b + 1, i * L + b) += c;
                }
            }
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index b = 0; b < L; ++b) m(i * L + b, i * L + b) += omega * static_cast<double>(b);
    return m;
}

namespace {

// Even-sector eigenvector of the pair state |k,-k> at g (shifted slightly off
// g when the pair level is degenerate there, as at g = 0 and g = 1).
struct PairLevels {
    Eigen::VectorXd ground;
    std::vector<Eigen::VectorXd> pairs;  // per positive k
};

PairLevels pair_levels(const ChainSpec& spec, double g) {
    const int n = spec.n();
    const auto ks = positive_momenta(spec);
    for (double shift : {0.0, 1e-5}) {
        const double gg = g > 0.5 ? g - shift : g + shift;
        const auto sp = spectrum(uniform_chain(n, gg), Sector::even, true);
        const double tol = 1e-9;
        PairLevels out;
        out.ground = sp.vectors.col(0);
        bool unique = true;
        for (double k : ks) {
            const double target = sp.energies(0) + 2.0 * single_particle_energy(k * spec.a(), gg);
            int hits = 0;
            Eigen::Index at = 0;
            for (Eigen::Index l = 1; l < sp.energies.size(); ++l)
                if (std::abs(sp.energies(l) - target) <= tol) {
                    ++hits;
                    at = l;
                }
            if (hits != 1) {
                unique = false;
                break;
            }
            out.pairs.push_back(sp.vectors.col(at));
        }
        if (unique) return out;
    }
    throw std::domain_error(fmt::format("pair levels at g={} are not resolvable", g));
}

}  // namespace

PairPopulations sweep_pair_populations(const ChainSpec& spec, const Schedule& schedule, double t,
                                       const EvolutionOptions& opt) {
    if (schedule.kind() == ScheduleKind::step_wise) throw std::invalid_argument("pair populations need a uniform sweep");
    const int n = spec.n();
    const auto path = sweep_path(n, schedule, Sector::even);
    const auto start = spectrum(uniform_chain(n, 0.0), Sector::even, true);
    const Eigen::VectorXcd psi0 = start.vectors.col(0).cast<cplx>();
    const auto evo = schrodinger_evolve(path, psi0, 0.0, t, opt);
    const auto lv = pair_levels(spec, schedule.g_of_t(t));
    PairPopulations out;
    out.ground = std::norm(lv.ground.cast<cplx>().dot(evo.state));
    for (const auto& v : lv.pairs) out.pair.push_back(std::norm(v.cast<cplx>().dot(evo.state)));
    out.excited_total = 1.0 - out.ground;
    return out;
}

BosonOracleResult boson_oracle_amplitude(const ChainSpec& spec, const Schedule& schedule, double k, double omega,
                                         double lambda, int levels, const EvolutionOptions& opt) {
    if (omega == 0.0) throw std::invalid_argument("boson oracle needs omega != 0");
    if (spec.n() > 8) throw std::invalid_argument("boson oracle is limited to n <= 8");
    if (!spec.on_grid(k) || !(k > 0.0)) throw std::domain_error("boson oracle: k must be a positive grid momentum");
    const int n = spec.n();
    const auto hs = sweep_path(n, schedule, Sector::even);
    const Eigen::MatrixXd xs = sigma_x_matrix(n, Sector::even);
    const double w = std::abs(omega);
    const MatrixPath composite = [&](double t) { return couple_to_boson(hs(t), xs, w, lambda, levels); };

    const auto start = spectrum(uniform_chain(n, 0.0), Sector::even, true);
    const Eigen::Index L = levels;
    const int m0 = omega > 0 ? 1 : 0, m1 = omega > 0 ? 0 : 1;
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(start.vectors.rows() * L);
    for (Eigen::Index i = 0; i < start.vectors.rows(); ++i) psi0(i * L + m0) = start.vectors(i, 0);

    const double T = schedule.total_time();
    const auto evo = schrodinger_evolve(composite, psi0, 0.0, T, opt);
    const auto lv = pair_levels(spec, schedule.g_of_t(T));
    const auto ks = positive_momenta(spec);
    const auto it = std::min_element(ks.begin(), ks.end(), [k](double a, double b) { return std::abs(a - k) < std::abs(b - k); });
    const auto& pair = lv.pairs[static_cast<std::size_t>(it - ks.begin())];

    cplx amp = 0.0, g0 = 0.0;
    for (Eigen::Index i = 0; i < pair.size(); ++i) {
        amp += pair(i) * evo.state(i * L + m1);
        g0 += lv.ground(i) * evo.state(i * L + m0);
    }
    return {std::abs(amp), std::norm(g0), evo.steps};
}

OracleAgreement oracle_agreement(int n, double g) {
    const ChainSpec spec(n);
    const auto h = uniform_chain(n, g);
    OracleAgreement r;
    r.n = n;
    r.g = g;
    const Spectrum full = spectrum(h, Sector::full);
    const double e0 = full.energies(0);
    r.ground_energy_error = std::abs(e0 - ground_energy(spec, g));

    const auto ks = positive_momenta(spec);
    for (double k : ks) {
        const double target = 2.0 * single_particle_energy(k * spec.a(), g);
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < full.energies.size(); ++i)
            best = std::min(best, std::abs(full.energies(i) - e0 - target));
        r.pair_gap_error = std::max(r.pair_gap_error, best);
    }

    const Spectrum even = spectrum(h, Sector::even, true);
    const double level_tol = 1e-8;
    for (const MatrixElement& m : sigma_x_elements(even, n, level_tol)) {
        ++r.levels;
        double expected2 = 0.0;
        bool pair = false;
        for (double k : ks)
            if (std::abs(m.gap - 2.0 * single_particle_energy(k * spec.a(), g)) <= level_tol) {
                pair = true;
                expected2 += std::norm(excitation_matrix_element(spec, k, g));
            }
        if (pair) {
            ++r.pair_levels;
            r.matrix_element_error = std::max(r.matrix_element_error, std::abs(m.magnitude - std::sqrt(expected2)));
        } else {
            r.non_pair_max = std::max(r.non_pair_max, m.magnitude);
        }
    }
    return r;
}

}  // namespace tfim::oracle
