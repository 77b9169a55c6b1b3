#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "fourier.hpp"
#include "gaussian.hpp"
#include "lattice.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace sspde {

inline SpectralField zero_field(int d, int N, double L)
{
    SpectralField f{l1_ball(d, N, L), {}};
    f.coeffs.assign(f.modes.size(), 0.0);
    return f;
}

// The field identically equal to c has mean-mode coefficient c L^{d/2}.
inline SpectralField constant_field(int d, int N, double L, double c)
{
    SpectralField f = zero_field(d, N, L);
    f.coeffs[static_cast<std::size_t>(f.modes.zero_index())] = c * std::pow(L, 0.5 * d);
    return f;
}

inline void heat_semigroup(SpectralField& f, double t)
{
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
        f.coeffs[i] *= std::exp(-f.modes.lambda[i] * t);
}

// sqrt(sum (1 + |k|^2)^s phi_k^2) with integer wave vectors k.
inline double sobolev_norm(const SpectralField& f, double s, bool skip_mean = false)
{
    double acc = 0;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        const int k2 = sq_norm(f.modes.k[i]);
        if (skip_mean && k2 == 0)
            continue;
        acc += std::pow(1.0 + k2, s) * f.coeffs[i] * f.coeffs[i];
    }
    return std::sqrt(acc);
}

inline void laplacian(SpectralField& f)
{
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
        f.coeffs[i] *= -f.modes.lambda[i];
}

// Exact Ornstein-Uhlenbeck increment for d phi_k = -(lambda_k + shift) phi_k dt + sqrt(2 eps) dW_k.
inline double ou_decay(double rate, double dt) { return std::exp(-rate * dt); }

inline double ou_noise_sd(double rate, double dt, double eps)
{
    const double x = rate * dt;
    const double var = std::abs(x) < 1e-12 ? dt : -std::expm1(-2 * x) / (2 * rate);
    return std::sqrt(2 * eps * var);
}

template <class Gen>
void stochastic_convolution_step(SpectralField& f, double dt, double eps, Gen& rng, double shift = 0.0)
{
    std::normal_distribution<double> z;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        const double rate = f.modes.lambda[i] + shift;
        f.coeffs[i] = ou_decay(rate, dt) * f.coeffs[i] + (eps > 0 ? ou_noise_sd(rate, dt, eps) * z(rng) : 0.0);
    }
}

struct SpdeConfig {
    int d = 1;
    double L = 1.0;
    int N = 32;
    double eps = 0.1;
    double dt = 1e-3;
    double t_max = 0;  // 0 selects 1e4 / eps
    std::uint64_t seed = 1;
    bool renormalize = false;
    double theta = 0.0;
    double hit_radius = 0.2;       // on the mean-mode coefficient
    double transverse_scale = 1.0; // constant in front of sqrt(log(1/eps))
    double sobolev_s = 0.25;
    int workers = 1;

    static SpdeConfig defaults(int d)
    {
        SpdeConfig c;
        c.d = d;
        c.renormalize = d == 2;
        c.sobolev_s = d == 1 ? 0.25 : -0.25;
        return c;
    }
    double horizon() const { return t_max > 0 ? t_max : 1e4 / eps; }
    void validate() const
    {
        if (d != 1 && d != 2)
            throw std::invalid_argument("spde solver supports d = 1 and d = 2");
        if (!(L > 0))
            throw std::invalid_argument("L must be positive");
        if (N < 0)
            throw std::invalid_argument("N must be nonnegative");
        if (!(dt > 0))
            throw std::invalid_argument("dt must be positive");
        if (!(eps >= 0))
            throw std::invalid_argument("eps must be nonnegative");
        if (!(hit_radius > 0))
            throw std::invalid_argument("hit_radius must be positive");
    }
};

// Spectral Galerkin integrator for
//   d phi = (Delta phi + phi [+ 3 eps C_N phi] - Pi_N phi^3) dt + sqrt(2 eps) Pi_N dW.
// The linear part and the noise are exact per mode; the cubic term is explicit
// and computed on a grid with M >= 4N + 1 points per axis, which is alias-free
// for cubic products.
class AllenCahnStepper {
public:
    explicit AllenCahnStepper(const SpdeConfig& cfg)
        : cfg_(cfg), modes_(l1_ball(cfg.d, cfg.N, cfg.L)),
          grid_(std::make_unique<GridTransform>(modes_, fft_size(4 * cfg.N + 1)))
    {
        cfg.validate();
        counterterm_ = cfg.renormalize ? 3 * cfg.eps * galerkin_CN(cfg.d, cfg.N, cfg.L, cfg.theta) : 0.0;
        const std::size_t n = modes_.size();
        decay_.resize(n);
        phi1_.resize(n);
        sd_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = modes_.lambda[i] - 1 - counterterm_;
            decay_[i] = std::exp(-r * cfg.dt);
            phi1_[i] = std::abs(r * cfg.dt) < 1e-12 ? cfg.dt : -std::expm1(-r * cfg.dt) / r;
            sd_[i] = ou_noise_sd(r, cfg.dt, cfg.eps);
        }
    }

    const ModeSet& modes() const { return modes_; }
    const SpdeConfig& config() const { return cfg_; }
    double counterterm() const { return counterterm_; }
    GridTransform& grid() { return *grid_; }

    // Coefficients of Pi_N phi^3.
    void cubic(const std::vector<double>& c, std::vector<double>& out)
    {
        grid_->to_grid(c, values_);
        for (double& v : values_)
            v = v * v * v;
        grid_->from_grid(values_, out);
    }

    template <class Gen>
    void step(std::vector<double>& c, Gen& rng)
    {
        cubic(c, cubic_);
        std::normal_distribution<double> z;
        for (std::size_t i = 0; i < c.size(); ++i) {
            c[i] = decay_[i] * c[i] - phi1_[i] * cubic_[i];
            if (cfg_.eps > 0)
                c[i] += sd_[i] * z(rng);
        }
        double norm2 = 0;
        for (double v : c)
            norm2 += v * v;
        if (!(norm2 <= 1e6))
            throw NumericalError("allen-cahn step: L2 norm exceeded 1e3 (blow-up or NaN)");
    }

    // Galerkin potential int [|grad phi|^2/2 - phi^2/2 + phi^4/4].
    double potential(const std::vector<double>& c)
    {
        double quad = 0;
        for (std::size_t i = 0; i < c.size(); ++i)
            quad += 0.5 * (modes_.lambda[i] - 1) * c[i] * c[i];
        grid_->to_grid(c, values_);
        double quart = 0;
        for (double v : values_)
            quart += v * v * v * v;
        quart *= std::pow(cfg_.L / grid_->grid_size(), cfg_.d);
        return quad + 0.25 * quart;
    }

    // Drift Delta phi + phi - Pi_N phi^3 (without counterterm) in mode space.
    void drift(const std::vector<double>& c, std::vector<double>& out)
    {
        cubic(c, out);
        for (std::size_t i = 0; i < c.size(); ++i)
            out[i] = -(modes_.lambda[i] - 1) * c[i] - out[i];
    }

private:
    SpdeConfig cfg_;
    ModeSet modes_;
    std::unique_ptr<GridTransform> grid_;
    double counterterm_ = 0;
    std::vector<double> decay_, phi1_, sd_, values_, cubic_;
};

inline SpectralField step_allen_cahn(const SpectralField& f, const SpdeConfig& cfg, Rng& rng)
{
    AllenCahnStepper st(cfg);
    SpectralField out = f;
    st.step(out.coeffs, rng);
    return out;
}

// Target set around phi = +1: mean-mode interval plus a transverse H^s ball of
// radius transverse_scale * sqrt(eps log(1/eps)).
struct HittingSet {
    double target_mean;
    double radius;
    double transverse_radius;
    double s;
    long zero;

    HittingSet(const ModeSet& m, const SpdeConfig& cfg)
    {
        target_mean = std::pow(cfg.L, 0.5 * cfg.d);
        radius = cfg.hit_radius;
        const double e = std::max(cfg.eps, 1e-300);
        transverse_radius = cfg.transverse_scale * std::sqrt(e * std::max(std::log(1 / e), 0.0));
        s = cfg.sobolev_s;
        zero = m.zero_index();
    }
    bool contains(const ModeSet& m, const std::vector<double>& c) const
    {
        if (std::abs(c[static_cast<std::size_t>(zero)] - target_mean) > radius)
            return false;
        double acc = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (static_cast<long>(i) == zero)
                continue;
            acc += std::pow(1.0 + sq_norm(m.k[i]), s) * c[i] * c[i];
        }
        return acc <= transverse_radius * transverse_radius;
    }
};

// Transitions from phi = -1 into the hitting set around phi = +1.
// Replica i uses stream "spde" with index i of the root seed.
inline std::vector<RunRecord> transition_time_experiment(const SpdeConfig& cfg, long n_runs)
{
    cfg.validate();
    const auto start = constant_field(cfg.d, cfg.N, cfg.L, -1.0).coeffs;
    const long max_steps = static_cast<long>(std::ceil(cfg.horizon() / cfg.dt));
    std::vector<RunRecord> out(static_cast<std::size_t>(std::max(n_runs, 0L)));
    parallel_for(
        n_runs, cfg.workers, [&] { return std::make_unique<AllenCahnStepper>(cfg); },
        [&](std::unique_ptr<AllenCahnStepper>& st, long r) {
            const HittingSet target(st->modes(), cfg);
            const auto seed = stream_seed(cfg.seed, "spde", static_cast<std::uint64_t>(r));
            Rng rng(seed);
            auto c = start;
            bool hit = false;
            long n = 0;
            while (n < max_steps) {
                st->step(c, rng);
                ++n;
                if (target.contains(st->modes(), c)) {
                    hit = true;
                    break;
                }
            }
            out[static_cast<std::size_t>(r)] = {r, seed, n * cfg.dt, !hit};
        });
    return out;
}

struct PathSample {
    ModeSet modes;
    std::vector<double> times;
    std::vector<std::vector<double>> coeffs;
};

// 1/2 int int (d_t g - Delta g - g + g^3)^2 dx dt. Space by Parseval on the
// retained modes, time by the trapezoidal rule with the difference quotient on
// each interval.
inline double rate_functional_field(const PathSample& path)
{
    if (path.times.size() < 2)
        return 0;
    SpdeConfig cfg = SpdeConfig::defaults(path.modes.d);
    cfg.L = path.modes.L;
    cfg.N = path.modes.N;
    cfg.eps = 0;
    cfg.renormalize = false;
    AllenCahnStepper st(cfg);
    std::vector<double> b0, b1;
    st.drift(path.coeffs[0], b0);
    double total = 0;
    for (std::size_t n = 0; n + 1 < path.times.size(); ++n) {
        const double dt = path.times[n + 1] - path.times[n];
        if (!(dt > 0))
            throw std::invalid_argument("rate_functional_field: times must increase");
        st.drift(path.coeffs[n + 1], b1);
        double s = 0;
        for (std::size_t i = 0; i < b0.size(); ++i) {
            const double v = (path.coeffs[n + 1][i] - path.coeffs[n][i]) / dt - 0.5 * (b0[i] + b1[i]);
            s += v * v;
        }
        total += 0.5 * s * dt;
        std::swap(b0, b1);
    }
    return total;
}

// Path of d_t g = -(drift), the time reversal of the deterministic flow, by RK4.
inline PathSample reversed_drift_path(const SpectralField& f0, double dt, long steps)
{
    SpdeConfig cfg = SpdeConfig::defaults(f0.modes.d);
    cfg.L = f0.modes.L;
    cfg.N = f0.modes.N;
    cfg.eps = 0;
    cfg.renormalize = false;
    AllenCahnStepper st(cfg);
    PathSample p{f0.modes, {0.0}, {f0.coeffs}};
    std::vector<double> c = f0.coeffs, k1, k2, k3, k4, tmp(c.size());
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& out) {
        st.drift(x, out);
        for (double& v : out)
            v = -v;
    };
    for (long n = 0; n < steps; ++n) {
        rhs(c, k1);
        for (std::size_t i = 0; i < c.size(); ++i)
            tmp[i] = c[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < c.size(); ++i)
            tmp[i] = c[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < c.size(); ++i)
            tmp[i] = c[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < c.size(); ++i)
            c[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        p.times.push_back((n + 1) * dt);
        p.coeffs.push_back(c);
    }
    return p;
}

inline double field_potential(const SpectralField& f)
{
    SpdeConfig cfg = SpdeConfig::defaults(f.modes.d);
    cfg.L = f.modes.L;
    cfg.N = f.modes.N;
    cfg.eps = 0;
    cfg.renormalize = false;
    AllenCahnStepper st(cfg);
    return st.potential(f.coeffs);
}

using RealFunction = std::function<double(double)>;

namespace detail {

// Piecewise 21-point Gauss-Kronrod over [a, b] with pieces no wider than w.
inline double piecewise_gk(const RealFunction& f, double a, double b, double w)
{
    if (b <= a)
        return 0;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / w)));
    const double h = (b - a) / pieces;
    double s = 0;
    for (int j = 0; j < pieces; ++j)
        s += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a + j * h, a + (j + 1) * h, 0);
    return s;
}

// Integral of exp(-(V(t) - V(y0))/eps) over [y0, infinity), stopping once V has
// risen 60 eps above its running minimum and is increasing.
inline double upper_tail_integral(const RealFunction& V, double y0, double eps, double w)
{
    const double v0 = V(y0);
    auto f = [&](double t) { return std::exp(-(V(t) - v0) / eps); };
    double s = 0, t = y0, vmin = v0;
    for (int guard = 0; guard < 1000000; ++guard) {
        s += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, t, t + w, 0);
        t += w;
        const double vt = V(t);
        vmin = std::min(vmin, vt);
        if (vt - vmin > 60 * eps && V(t + w) > vt)
            return s;
    }
    throw NumericalError("upper_tail_integral: potential does not confine");
}

} // namespace detail

// h(y) = int_y^b e^{V/eps} / int_a^b e^{V/eps}.
inline double committor_1d_quadrature(const RealFunction& V, double a, double b, double eps, double y)
{
    if (!(a < b))
        throw std::invalid_argument("committor_1d_quadrature: need a < b");
    if (!(eps > 0))
        throw std::invalid_argument("committor_1d_quadrature: need eps > 0");
    if (y <= a)
        return 1;
    if (y >= b)
        return 0;
    const double w = 0.1 * std::sqrt(eps) * (b - a);
    double vmax = std::max(V(a), V(b));
    for (int j = 0; j <= 1000; ++j)
        vmax = std::max(vmax, V(a + (b - a) * j / 1000.0));
    auto f = [&](double t) { return std::exp((V(t) - vmax) / eps); };
    return detail::piecewise_gk(f, y, b, w) / detail::piecewise_gk(f, a, b, w);
}

// w_A(y) = E_y[tau_A] for dy = -V'(y) dt + sqrt(2 eps) dW and A = (-inf, a]:
// (1/eps) int_a^y dy2 int_{y2}^inf dy1 exp([V(y2) - V(y1)]/eps).
inline double kramers_1d_quadrature(const RealFunction& V, double a, double eps, double y)
{
    if (!(eps > 0))
        throw std::invalid_argument("kramers_1d_quadrature: need eps > 0");
    if (y <= a)
        return 0;
    const double w = 0.1 * std::sqrt(eps);
    auto outer = [&](double y2) { return detail::upper_tail_integral(V, y2, eps, w); };
    return detail::piecewise_gk(outer, a, y, w) / eps;
}

// Kramers' law (2 pi / sqrt(|V''(z)| V''(x))) exp((V(z) - V(x))/eps).
inline double kramers_asymptotic(double v_saddle, double v_min, double curv_saddle, double curv_min, double eps)
{
    return 2 * std::numbers::pi / std::sqrt(std::abs(curv_saddle) * curv_min) * std::exp((v_saddle - v_min) / eps);
}

} // namespace sspde
