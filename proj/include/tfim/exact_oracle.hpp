#pragma once

// Brute-force many-body reference for small chains: dense Hamiltonians in the
// sigma^z basis, parity sectors, spectra, sum_j sigma^x_j matrix elements,
// Lanczos for the lowest levels, and Schrodinger evolution with a
// commutator-free fourth-order Magnus scheme and Krylov exponentials.
//
// Parity sectors use the bit-flip operator P = prod_j sigma^x_j. Each sector
// basis vector pairs a configuration s (top bit clear) with its complement:
// (|s> +- |~s>)/sqrt(2).

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tfim/chain_model.hpp"
#include "tfim/schedules.hpp"

namespace tfim::oracle {

using cplx = std::complex<double>;

inline constexpr int max_sites = 14;

enum class Sector { full, even, odd };

/// H = -sum_j h_j sigma^x_j - sum_j J_j sigma^z_j sigma^z_{j+1}. With
/// periodic = true the last bond couples site n-1 to site 0.
struct DenseHamiltonian {
    int n = 0;
    TermWeights weights;
    bool periodic = false;
};

/// Validates sizes: throws std::invalid_argument when n < 2, n > max_sites, or
/// the weight arrays do not match n and the boundary flag.
DenseHamiltonian build_hamiltonian(int n, TermWeights weights, bool periodic);
/// Uniform periodic chain at parameter g.
DenseHamiltonian uniform_chain(int n, double g);
/// Open chain on the step-wise path.
DenseHamiltonian stepwise_chain(const StepWisePath& path);

class SectorBasis {
public:
    SectorBasis(int n, Sector sector);
    int n() const { return n_; }
    Sector sector() const { return sector_; }
    std::size_t dimension() const { return states_.size(); }
    /// Configuration (full) or representative with top bit clear (even/odd).
    std::uint32_t state(std::size_t i) const { return states_[i]; }
    /// Index and sign of a configuration in this basis.
    std::pair<std::size_t, double> locate(std::uint32_t config) const;
    /// Maps a sector vector to the full 2^n configuration basis.
    Eigen::VectorXcd to_full(const Eigen::VectorXcd& v) const;

private:
    int n_;
    Sector sector_;
    std::vector<std::uint32_t> states_;
};

/// Dense real symmetric matrix of H in the sector basis.
Eigen::MatrixXd dense_matrix(const DenseHamiltonian& h, Sector sector = Sector::full);
/// sum_j sigma^x_j in the sector basis.
Eigen::MatrixXd sigma_x_matrix(int n, Sector sector = Sector::full);
/// prod_j sigma^x_j on the full basis.
Eigen::MatrixXd parity_matrix(int n);

/// y = H x without storing H (matrix-free, O(n 2^n)).
void apply_hamiltonian(const DenseHamiltonian& h, const SectorBasis& basis, const Eigen::VectorXd& x,
                       Eigen::VectorXd& y);

struct Spectrum {
    Sector sector = Sector::full;
    Eigen::VectorXd energies;    // ascending
    Eigen::MatrixXd vectors;     // columns in the sector basis; empty unless requested
    std::vector<int> parity;     // +1 even, -1 odd, per level
};

/// Eigenvalues of the sector block; for Sector::full the even and odd blocks
/// are diagonalised separately and merged, which labels every level by parity.
Spectrum spectrum(const DenseHamiltonian& h, Sector sector, bool with_vectors = false);

struct MatrixElement {
    double energy = 0.0;       // level energy
    double gap = 0.0;          // above the ground state
    cplx value;                // <s| sum sigma^x |0> (non-degenerate levels)
    double magnitude = 0.0;    // |value|, or the projection norm for a degenerate level
    int degeneracy = 1;
    bool degenerate = false;
};

/// <s| sum_j sigma^x_j |0> for a single level of an even- or odd-sector
/// spectrum computed with vectors. Degenerate levels return the norm of the
/// projection onto the whole eigenspace with degenerate = true.
MatrixElement matrix_element_sigma_x(const Spectrum& spec, int n, std::size_t level,
                                     double degeneracy_tol = 1e-8);
/// The same for every distinct level above the ground state, ascending.
std::vector<MatrixElement> sigma_x_elements(const Spectrum& spec, int n, double degeneracy_tol = 1e-8);

/// Dense diagonalisation against the fermionic solution at one (n, g).
struct OracleAgreement {
    int n = 0;
    double g = 0.0;
    double ground_energy_error = 0.0;   // |E0 dense - ground_energy|
    double pair_gap_error = 0.0;        // max_k distance from 2 eps_k to the nearest full-spectrum gap
    double matrix_element_error = 0.0;  // max over pair levels of | |<s|X|0>| - |M| |
    double non_pair_max = 0.0;          // max |<s|X|0>| over levels that are not (k,-k) pairs
    int pair_levels = 0;
    int levels = 0;
};
/// Degenerate eigenspaces are compared through their projection norm, which
/// equals sqrt(sum |M_k|^2) over the pair levels they contain.
OracleAgreement oracle_agreement(int n, double g);

// ---------------------------------------------------------------------------
// Lanczos

struct LanczosResult {
    std::vector<double> values;  // lowest eigenvalues, ascending
    int iterations = 0;
    bool converged = false;
};

using LinearOperator = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Lowest `count` eigenvalues of a real symmetric operator with full
/// reorthogonalisation; deterministic start vector from `seed`.
LanczosResult lanczos_lowest(const LinearOperator& op, std::size_t dimension, int count,
                             double tol = 1e-12, int max_iter = 300, unsigned seed = 12345);

/// Lowest two even-sector levels (dense solve below dimension 256, Lanczos above).
std::pair<double, double> even_sector_lowest(const DenseHamiltonian& h);

struct GapSample {
    int step = 0;  // 0 for the uniform sweep
    double s = 0.0;
    double gap = 0.0;
};

struct GapProfile {
    int n = 0;
    std::vector<GapSample> samples;
    GapSample minimum;
};

/// Even-sector gap along the step-wise path, points_per_step samples of s in
/// [0, 1] per step (shared endpoints counted once).
GapProfile stepwise_gap_profile(int n, int points_per_step = 50);
/// Even-sector gap of the uniform periodic chain on g in [0, 1]; the minimum is
/// refined by golden-section search.
GapProfile uniform_gap_profile(int n, int points = 51);

// ---------------------------------------------------------------------------
// Schrodinger evolution

struct EvolutionOptions {
    double rtol = 1e-10;  // local error per step (state norm 1)
    int krylov_max = 60;
};

struct EvolutionResult {
    Eigen::VectorXcd state;
    int steps = 0;
    int rejected = 0;
    double norm_drift = 0.0;
};

/// Time-dependent real symmetric generator H(t), returned as a dense matrix.
using MatrixPath = std::function<Eigen::MatrixXd(double t)>;

/// i d psi/dt = H(t) psi from t0 to t1.
EvolutionResult schrodinger_evolve(const MatrixPath& h, const Eigen::VectorXcd& psi0, double t0, double t1,
                                   const EvolutionOptions& opt = {});

/// H(g(t)) for a schedule: the uniform periodic chain for linear and
/// gap-adapted kinds, the open step-wise path for step-wise.
MatrixPath sweep_path(int n, const Schedule& schedule, Sector sector);

/// H_sys (x) 1 + omega 1 (x) b^+b + lambda X (x) (b + b^+), boson truncated to
/// `levels` states; composite index = sys * levels + boson.
Eigen::MatrixXd couple_to_boson(const Eigen::MatrixXd& h_sys, const Eigen::MatrixXd& x_sys, double omega,
                                double lambda, int levels);

/// Populations at time t of a full Schrodinger sweep of the uniform chain,
/// resolved onto the pair states |k,-k> of the instantaneous Hamiltonian.
struct PairPopulations {
    double ground = 0.0;                 // |<0(t)|psi>|^2
    std::vector<double> pair;            // |<k,-k(t)|psi>|^2 per positive k
    double excited_total = 0.0;          // 1 - ground
};
PairPopulations sweep_pair_populations(const ChainSpec& spec, const Schedule& schedule, double t,
                                       const EvolutionOptions& opt = {});

/// |first-order amplitude| from a composite chain + single-mode evolution.
/// Positive omega: the mode starts with one quantum and the chain ends in the
/// pair state |k,-k> with the mode empty. Negative omega: the mode starts
/// empty and must end with one quantum.
struct BosonOracleResult {
    double magnitude = 0.0;
    double ground_population = 0.0;
    int steps = 0;
};
BosonOracleResult boson_oracle_amplitude(const ChainSpec& spec, const Schedule& schedule, double k,
                                         double omega, double lambda, int levels = 3,
                                         const EvolutionOptions& opt = {});

}  // namespace tfim::oracle
