#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace sspde {

// N particles on a ring, y^0 = y^N and y^{N+1} = y^1.
struct LatticeState {
    std::vector<double> y;
    double gamma = 1.0;

    std::size_t n_sites() const { return y.size(); }
};

inline void check_lattice(const LatticeState& s)
{
    if (s.y.size() < 2)
        throw std::invalid_argument("lattice needs at least two sites");
    if (!(s.gamma >= 0))
        throw std::invalid_argument("coupling must be nonnegative");
}

inline double double_well(double x)
{
    const double u = x * x - 1;
    return 0.25 * u * u;
}

inline double potential_energy(const LatticeState& s)
{
    check_lattice(s);
    const std::size_t n = s.y.size();
    double v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dy = s.y[(i + 1) % n] - s.y[i];
        v += double_well(s.y[i]) + 0.25 * s.gamma * dy * dy;
    }
    return v;
}

// Gradient of V. The drift of the diffusion is minus this.
inline void potential_gradient(const std::vector<double>& y, double gamma, std::vector<double>& g)
{
    const std::size_t n = y.size();
    g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double yi = y[i];
        const double lap = y[(i + 1) % n] - 2 * yi + y[(i + n - 1) % n];
        g[i] = -(yi - yi * yi * yi) - 0.5 * gamma * lap;
    }
}

inline std::vector<double> potential_gradient(const LatticeState& s)
{
    check_lattice(s);
    std::vector<double> g;
    potential_gradient(s.y, s.gamma, g);
    return g;
}

// Half the squared differences between neighbours.
inline double synchronisation_energy(const std::vector<double>& y)
{
    const std::size_t n = y.size();
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dy = y[(i + 1) % n] - y[i];
        w += dy * dy;
    }
    return 0.5 * w;
}

struct LatticeSpectrum {
    std::vector<double> lambda, mu, nu;
};

inline LatticeSpectrum lattice_spectrum(int N, double gamma)
{
    if (N < 2)
        throw std::invalid_argument("lattice_spectrum: need N >= 2");
    LatticeSpectrum s;
    for (int k = 0; k < N; ++k) {
        const double sn = std::sin(k * std::numbers::pi / N);
        const double lam = k == 0 ? 0.0 : 2 * sn * sn;
        s.lambda.push_back(lam);
        s.mu.push_back(-1 + gamma * lam);
        s.nu.push_back(2 + gamma * lam);
    }
    return s;
}

inline double gamma_one(int N)
{
    if (N < 2)
        throw std::invalid_argument("gamma_one: need N >= 2");
    const double sn = std::sin(std::numbers::pi / N);
    return 1.0 / (2 * sn * sn);
}

inline double eyring_kramers_prefactor(int N, double gamma)
{
    if (!(gamma > gamma_one(N)))
        throw std::invalid_argument("eyring_kramers_time: need gamma > gamma_1(N); several saddles otherwise");
    const auto s = lattice_spectrum(N, gamma);
    double log_ratio = 0;
    for (int k = 0; k < N; ++k)
        log_ratio += std::log(std::abs(s.mu[k])) - std::log(s.nu[k]);
    return 2 * std::numbers::pi / std::abs(s.mu[0]) * std::exp(0.5 * log_ratio);
}

inline double eyring_kramers_time(int N, double gamma, double eps)
{
    if (!(eps > 0))
        throw std::invalid_argument("eyring_kramers_time: need eps > 0");
    return eyring_kramers_prefactor(N, gamma) * std::exp(0.25 * N / eps);
}

struct SdeConfig {
    double eps = 0.1;
    double dt = 1e-3;
    double t_max = 0;  // 0 selects 1e4 / eps
    std::uint64_t seed = 1;
    double hit_radius = 0.2;
    int workers = 1;

    double horizon() const { return t_max > 0 ? t_max : 1e4 / eps; }
    void validate() const
    {
        if (!(dt > 0))
            throw std::invalid_argument("dt must be positive");
        if (!(eps >= 0))
            throw std::invalid_argument("eps must be nonnegative");
        if (!(hit_radius > 0))
            throw std::invalid_argument("hit_radius must be positive");
    }
};

using StopPredicate = std::function<bool(const std::vector<double>&)>;

struct EmResult {
    bool hit = false;  // false means the horizon was reached first
    long steps = 0;
    double time = 0;
    std::vector<double> final_y;
    std::vector<std::vector<double>> path;  // every `record_every` steps, when requested
};

inline StopPredicate ball_around(std::vector<double> centre, double radius)
{
    return [centre = std::move(centre), r2 = radius * radius](const std::vector<double>& y) {
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y[i] - centre[i];
            s += d * d;
        }
        return s < r2;
    };
}

// Euler-Maruyama for dy = -grad V dt + sqrt(2 eps) dW. Hitting-time bias is O(dt).
template <class Gen>
EmResult em_simulate(const LatticeState& state0, const SdeConfig& cfg, const StopPredicate& stop, Gen& rng,
                     long record_every = 0)
{
    check_lattice(state0);
    cfg.validate();
    EmResult r;
    std::vector<double> y = state0.y, g;
    const double noise = std::sqrt(2 * cfg.eps * cfg.dt);
    const long max_steps = static_cast<long>(std::ceil(cfg.horizon() / cfg.dt));
    std::normal_distribution<double> z;
    if (record_every > 0)
        r.path.push_back(y);
    if (stop && stop(y)) {
        r.hit = true;
        r.final_y = y;
        return r;
    }
    for (long n = 1; n <= max_steps; ++n) {
        potential_gradient(y, state0.gamma, g);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += -g[i] * cfg.dt + (noise > 0 ? noise * z(rng) : 0.0);
        for (double v : y)
            if (!std::isfinite(v))
                throw NumericalError("em_simulate: non-finite state at step " + std::to_string(n));
        if (record_every > 0 && n % record_every == 0)
            r.path.push_back(y);
        if (stop && stop(y)) {
            r.hit = true;
            r.steps = n;
            r.time = n * cfg.dt;
            r.final_y = y;
            return r;
        }
    }
    r.steps = max_steps;
    r.time = max_steps * cfg.dt;
    r.final_y = y;
    return r;
}

struct RunRecord {
    long run_id;
    std::uint64_t seed;
    double hit_time;
    bool timed_out;
};

struct BatchSummary {
    double mean = 0;
    double std_error = 0;
    long replicas = 0;  // runs that hit; timeouts are excluded from the mean
    long timeouts = 0;
};

inline BatchSummary summarise(const std::vector<RunRecord>& runs)
{
    BatchSummary s;
    double sum = 0, sq = 0;
    for (const auto& r : runs) {
        if (r.timed_out) {
            ++s.timeouts;
            continue;
        }
        ++s.replicas;
        sum += r.hit_time;
        sq += r.hit_time * r.hit_time;
    }
    if (s.replicas > 0) {
        s.mean = sum / s.replicas;
        if (s.replicas > 1) {
            const double var = (sq - s.replicas * s.mean * s.mean) / (s.replicas - 1);
            s.std_error = std::sqrt(std::max(var, 0.0) / s.replicas);
        }
    }
    return s;
}

// Transitions from (-1,...,-1) to the ball around (1,...,1); replica i uses
// stream "lattice" with index i of the root seed.
inline std::vector<RunRecord> lattice_transition_batch(int N, double gamma, const SdeConfig& cfg, long n_runs)
{
    LatticeState start{std::vector<double>(N, -1.0), gamma};
    auto stop = ball_around(std::vector<double>(N, 1.0), cfg.hit_radius);
    std::vector<RunRecord> out(static_cast<std::size_t>(std::max(n_runs, 0L)));
    parallel_for(
        n_runs, cfg.workers, [] { return 0; },
        [&](int, long i) {
            const auto seed = stream_seed(cfg.seed, "lattice", static_cast<std::uint64_t>(i));
            Rng rng(seed);
            const auto r = em_simulate(start, cfg, stop, rng);
            out[static_cast<std::size_t>(i)] = {i, seed, r.time, !r.hit};
        });
    return out;
}

// Trapezoidal value of 1/2 int |gdot + grad V|^2 dt for a path sampled every dt.
// On each interval gdot is the difference quotient and grad V the endpoint average.
inline double rate_functional_lattice(const std::vector<std::vector<double>>& path, double dt, double gamma)
{
    if (path.size() < 2)
        return 0;
    if (!(dt > 0))
        throw std::invalid_argument("rate_functional_lattice: dt must be positive");
    std::vector<double> g0, g1;
    potential_gradient(path[0], gamma, g0);
    double total = 0;
    for (std::size_t n = 0; n + 1 < path.size(); ++n) {
        potential_gradient(path[n + 1], gamma, g1);
        double s = 0;
        for (std::size_t i = 0; i < path[n].size(); ++i) {
            const double v = (path[n + 1][i] - path[n][i]) / dt + 0.5 * (g0[i] + g1[i]);
            s += v * v;
        }
        total += 0.5 * s * dt;
        std::swap(g0, g1);
    }
    return total;
}

} // namespace sspde
