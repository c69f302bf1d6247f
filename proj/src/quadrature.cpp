#include "tfim/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <queue>

namespace tfim::quad {

using std::numbers::pi;

const Rule& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<Rule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (slot) return *slot;
    if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");

    auto rule = std::make_unique<Rule>();
    if (n == 1) {
        rule->nodes = {0.0};
        rule->weights = {2.0};
        slot = std::move(rule);
        return *slot;
    }
    rule->nodes.resize(static_cast<std::size_t>(n));
    rule->weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule->nodes[lo] = -x;
        rule->nodes[hi] = x;
        rule->weights[lo] = w;
        rule->weights[hi] = w;
    }
    slot = std::move(rule);
    return *slot;
}

double integrate_smooth(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        const std::vector<double>& breakpoints) {
    std::vector<double> cuts{a};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    // Kronrod error estimates bottom out near 1e-14 relative; asking for less
    // makes the recursion run to full depth on round-off.
    const double tol = std::max(rel_tol, 2e-13);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, cuts[i], cuts[i + 1], 15, tol, &err);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Chebyshev panels

std::vector<double> ChebyshevPanel::nodes(double a, double b, int degree) {
    std::vector<double> x(static_cast<std::size_t>(degree + 1));
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int j = 0; j <= degree; ++j) x[static_cast<std::size_t>(j)] = mid + half * std::cos(pi * j / degree);
    x.front() = b;
    x.back() = a;
    return x;
}

namespace {

cplx clenshaw(const std::vector<cplx>& c, double u) {
    cplx b1 = 0.0, b2 = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) {
        const cplx b0 = 2.0 * u * b1 - b2 + c[k];
        b2 = b1;
        b1 = b0;
    }
    return u * b1 - b2 + c[0];
}

}  // namespace

ChebyshevPanel::ChebyshevPanel(double a, double b, std::vector<cplx> values) : a_(a), b_(b) {
    const int n = static_cast<int>(values.size()) - 1;
    if (n < 1) throw std::invalid_argument("Chebyshev panel needs at least two values");
    coeff_.assign(static_cast<std::size_t>(n + 1), 0.0);
    for (int k = 0; k <= n; ++k) {
        cplx s = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double w = (j == 0 || j == n) ? 0.5 : 1.0;
            s += w * values[static_cast<std::size_t>(j)] * std::cos(pi * j * k / n);
        }
        s *= 2.0 / n;
        if (k == 0 || k == n) s *= 0.5;
        coeff_[static_cast<std::size_t>(k)] = s;
    }
    // antiderivative in u in [-1, 1], scaled to x
    std::vector<cplx> c = coeff_;
    c.resize(static_cast<std::size_t>(n + 3), 0.0);
    anti_.assign(static_cast<std::size_t>(n + 2), 0.0);
    anti_[1] = c[0] - 0.5 * c[2];
    for (int k = 2; k <= n + 1; ++k)
        anti_[static_cast<std::size_t>(k)] =
            (c[static_cast<std::size_t>(k - 1)] - c[static_cast<std::size_t>(k + 1)]) / (2.0 * k);
    cplx at_minus_one = 0.0;
    for (int k = 1; k <= n + 1; ++k)
        at_minus_one += anti_[static_cast<std::size_t>(k)] * ((k % 2 == 0) ? 1.0 : -1.0);
    anti_[0] = -at_minus_one;
    const double half = 0.5 * (b - a);
    for (auto& v : anti_) v *= half;
}

cplx ChebyshevPanel::operator()(double x) const {
    return clenshaw(coeff_, (2.0 * x - a_ - b_) / (b_ - a_));
}

cplx ChebyshevPanel::integral_to(double x) const {
    return clenshaw(anti_, (2.0 * x - a_ - b_) / (b_ - a_));
}

// ---------------------------------------------------------------------------
// Levin collocation

namespace {

const Eigen::MatrixXd& cheb_diff_matrix(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<Eigen::MatrixXd>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (slot) return *slot;
    Eigen::VectorXd x(n + 1), c(n + 1);
    for (int j = 0; j <= n; ++j) {
        x(j) = std::cos(pi * j / n);
        c(j) = ((j == 0 || j == n) ? 2.0 : 1.0) * ((j % 2 == 0) ? 1.0 : -1.0);
    }
    auto d = std::make_unique<Eigen::MatrixXd>(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
        double row = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (i == j) continue;
            (*d)(i, j) = (c(i) / c(j)) / (x(i) - x(j));
            row += (*d)(i, j);
        }
        (*d)(i, i) = -row;
    }
    slot = std::move(d);
    return *slot;
}

// Nodes ordered x_0 = b ... x_n = a. Returns p(b) e^{i Phi(b)} - p(a) e^{i Phi(a)}.
cplx levin(double a, double b, const std::vector<cplx>& f, const std::vector<cplx>& rate,
           cplx phase_a, cplx phase_b) {
    const int n = static_cast<int>(f.size()) - 1;
    const Eigen::MatrixXd& d = cheb_diff_matrix(n);
    Eigen::MatrixXcd m = d.cast<cplx>() * (2.0 / (b - a));
    Eigen::VectorXcd rhs(n + 1);
    for (int j = 0; j <= n; ++j) {
        m(j, j) += cplx(0.0, 1.0) * rate[static_cast<std::size_t>(j)];
        rhs(j) = f[static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXcd p = m.partialPivLu().solve(rhs);
    const cplx i{0.0, 1.0};
    return p(0) * std::exp(i * phase_b) - p(n) * std::exp(i * phase_a);
}

struct Panel {
    double a, b;
    cplx phase_a;
    cplx dphase;
    cplx value;
    double error;
    bool levin;
};

Panel evaluate_panel(const OscillatoryIntegrand& in, double a, double b, cplx phase_a,
                     const OscillatoryOptions& opt) {
    const int n = opt.degree;
    const auto x = ChebyshevPanel::nodes(a, b, n);
    std::vector<cplx> f(x.size()), rate(x.size());
    if (in.batch) {
        in.batch(x, f, rate);
    } else {
        for (std::size_t j = 0; j < x.size(); ++j) {
            f[j] = in.amplitude(x[j]);
            rate[j] = in.phase_rate(x[j]);
        }
    }
    const ChebyshevPanel phase_panel(a, b, rate);
    std::vector<cplx> phase(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) phase[j] = phase_a + phase_panel.integral_to(x[j]);
    phase.back() = phase_a;
    const cplx dphase = phase.front() - phase_a;

    // half-degree subset: even-indexed Lobatto nodes
    auto half = [](const std::vector<cplx>& v) {
        std::vector<cplx> h;
        for (std::size_t j = 0; j < v.size(); j += 2) h.push_back(v[j]);
        return h;
    };

    bool monotone = true;
    const double sign0 = rate.front().real();
    for (const auto& r : rate)
        if (!(r.real() * sign0 > 0.0)) monotone = false;
    const bool use_levin = monotone && std::abs(dphase.real()) >= opt.levin_min_phase;

    Panel p{a, b, phase_a, dphase, 0.0, 0.0, use_levin};
    if (use_levin) {
        const cplx full = levin(a, b, f, rate, phase_a, phase.front());
        const cplx coarse = levin(a, b, half(f), half(rate), phase_a, phase.front());
        p.value = full;
        p.error = std::abs(full - coarse);
        if (!std::isfinite(p.error)) p.error = std::numeric_limits<double>::infinity();
    } else {
        std::vector<cplx> g(x.size());
        const cplx i{0.0, 1.0};
        for (std::size_t j = 0; j < x.size(); ++j) g[j] = f[j] * std::exp(i * phase[j]);
        const cplx full = ChebyshevPanel(a, b, g).integral();
        const cplx coarse = ChebyshevPanel(a, b, half(g)).integral();
        p.value = full;
        p.error = std::abs(full - coarse);
    }
    return p;
}

std::vector<double> initial_cuts(const std::function<double(double)>& smoothness, double a, double b) {
    std::vector<double> cuts{a};
    double x = a;
    while (x < b) {
        double h = smoothness ? smoothness(x) : (b - a);
        if (!(h > 0.0) || !std::isfinite(h)) h = b - a;
        h = std::min(h, b - a);
        if (x + 1.25 * h >= b) {
            x = b;
        } else {
            x += h;
        }
        cuts.push_back(x);
    }
    return cuts;
}

}  // namespace

OscillatoryResult integrate_oscillatory(const OscillatoryIntegrand& in, double a, double b,
                                        cplx phase_at_a, const OscillatoryOptions& opt) {
    if (opt.degree < 4 || opt.degree % 2 != 0)
        throw std::invalid_argument("oscillatory quadrature degree must be even and >= 4");
    OscillatoryResult result;
    result.end_phase = phase_at_a;
    if (!(b > a)) return result;

    std::vector<Panel> panels;
    std::vector<bool> alive;
    const auto cuts = initial_cuts(in.smoothness, a, b);
    cplx phase = phase_at_a;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        panels.push_back(evaluate_panel(in, cuts[i], cuts[i + 1], phase, opt));
        alive.push_back(true);
        phase += panels.back().dphase;
    }

    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> queue;
    cplx total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
        queue.push({panels[i].error, i});
        total += panels[i].value;
        total_err += panels[i].error;
    }

    int live = static_cast<int>(panels.size());
    while (total_err > std::max(opt.atol, opt.rtol * std::abs(total))) {
        const auto [err, idx] = queue.top();
        queue.pop();
        if (!alive[idx]) continue;
        const Panel parent = panels[idx];
        const double mid = 0.5 * (parent.a + parent.b);
        if (mid - parent.a <= 1e-13 * std::max(1.0, std::abs(mid)) || live >= opt.max_panels) {
            double osc = 0.0;
            for (std::size_t i = 0; i < panels.size(); ++i)
                if (alive[i]) osc += std::abs(panels[i].dphase.real());
            throw QuadratureError(fmt::format(
                "oscillatory quadrature did not converge on [{}, {}]: {} panels, error {:.3e} vs "
                "target {:.3e}, {:.1f} phase oscillations, worst panel [{:.6g}, {:.6g}] with phase "
                "change {:.3g} rad",
                a, b, live, total_err, std::max(opt.atol, opt.rtol * std::abs(total)),
                osc / (2 * pi), parent.a, parent.b, std::abs(parent.dphase)));
        }
        alive[idx] = false;
        Panel left = evaluate_panel(in, parent.a, mid, parent.phase_a, opt);
        Panel right = evaluate_panel(in, mid, parent.b, parent.phase_a + left.dphase, opt);
        total += left.value + right.value - parent.value;
        total_err += left.error + right.error - parent.error;
        panels.push_back(left);
        alive.push_back(true);
        queue.push({left.error, panels.size() - 1});
        panels.push_back(right);
        alive.push_back(true);
        queue.push({right.error, panels.size() - 1});
        ++live;
    }

    // deterministic final reduction in left-to-right order
    std::vector<const Panel*> leaves;
    for (std::size_t i = 0; i < panels.size(); ++i)
        if (alive[i]) leaves.push_back(&panels[i]);
    std::sort(leaves.begin(), leaves.end(), [](const Panel* l, const Panel* r) { return l->a < r->a; });
    cplx sum = 0.0, dphase = 0.0;
    double err = 0.0, osc = 0.0;
    for (const Panel* p : leaves) {
        sum += p->value;
        err += p->error;
        dphase += p->dphase;
        osc += std::abs(p->dphase.real());
        result.levin_panels += p->levin ? 1 : 0;
    }
    result.value = sum;
    result.error = err;
    result.end_phase = phase_at_a + dphase;
    result.oscillations = osc / (2 * pi);
    result.panels = static_cast<int>(leaves.size());
    return result;
}

cplx integrate_phase(const std::function<cplx(double)>& phase_rate,
                     const std::function<double(double)>& smoothness, double a, double b) {
    if (!(b > a)) return 0.0;
    const auto cuts = initial_cuts(smoothness, a, b);
    cplx total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const auto x = ChebyshevPanel::nodes(cuts[i], cuts[i + 1], 32);
        std::vector<cplx> v(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) v[j] = phase_rate(x[j]);
        total += ChebyshevPanel(cuts[i], cuts[i + 1], std::move(v)).integral();
    }
    return total;
}

}  // namespace tfim::quad
