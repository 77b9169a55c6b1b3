#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"
#include "rng.hpp"

namespace sspde {

using StateSet = std::vector<int>;

struct ReversibleChain {
    Eigen::MatrixXd p;
    Eigen::VectorXd pi;

    int n_states() const { return static_cast<int>(p.rows()); }
};

namespace detail {

inline Eigen::VectorXd stationary_measure(const Eigen::MatrixXd& p)
{
    const int n = static_cast<int>(p.rows());
    // Solve pi (P - I) = 0 with sum pi = 1 by replacing one equation.
    Eigen::MatrixXd a = (p - Eigen::MatrixXd::Identity(n, n)).transpose();
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
        throw std::invalid_argument("chain is reducible: stationary measure not unique");
    return lu.solve(rhs);
}

} // namespace detail

// Validates a transition matrix and its stationary measure, computing the
// latter when it is not supplied. Non-reversible chains are rejected.
inline ReversibleChain make_chain(Eigen::MatrixXd p, std::optional<Eigen::VectorXd> pi = std::nullopt)
{
    const int n = static_cast<int>(p.rows());
    if (n < 1 || p.cols() != n)
        throw std::invalid_argument("transition matrix must be square and nonempty");
    for (int x = 0; x < n; ++x) {
        if ((p.row(x).array() < 0).any())
            throw std::invalid_argument("negative transition probability");
        if (std::abs(p.row(x).sum() - 1) > 1e-12)
            throw std::invalid_argument("row " + std::to_string(x) + " does not sum to 1");
    }
    Eigen::VectorXd measure = pi ? *pi : detail::stationary_measure(p);
    ReversibleChain c{std::move(p), std::move(measure)};
    if (c.pi.size() != n)
        throw std::invalid_argument("stationary measure has wrong length");
    if ((c.pi.array() <= 0).any())
        throw std::invalid_argument("stationary measure must be strictly positive");
    if (std::abs(c.pi.sum() - 1) > 1e-12)
        throw std::invalid_argument("stationary measure must sum to 1");
    for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y)
            if (std::abs(c.pi(x) * c.p(x, y) - c.pi(y) * c.p(y, x)) > 1e-12)
                throw std::invalid_argument("chain is not reversible with respect to pi");
    return c;
}

// Random walk on a random connected graph with symmetric conductances; such a
// chain is reversible with pi proportional to the total conductance at x.
template <class Gen>
ReversibleChain random_reversible_chain(int n, Gen& rng, double extra_edge_prob = 0.15)
{
    std::uniform_real_distribution<double> u(0.1, 1.0), coin(0.0, 1.0);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int x = 1; x < n; ++x) {
        std::uniform_int_distribution<int> parent(0, x - 1);
        const int y = parent(rng);
        c(x, y) = c(y, x) = u(rng);
    }
    for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y)
            if (c(x, y) == 0 && coin(rng) < extra_edge_prob)
                c(x, y) = c(y, x) = u(rng);
    for (int x = 0; x < n; ++x)
        if (coin(rng) < 0.3)
            c(x, x) = u(rng);
    Eigen::VectorXd tot = c.rowwise().sum();
    Eigen::MatrixXd p = tot.asDiagonal().inverse() * c;
    for (int x = 0; x < n; ++x)
        p(x, x) = std::max(0.0, 1 - (p.row(x).sum() - p(x, x)));
    return make_chain(p, tot / tot.sum());
}

// Edge list "x y p" per line; an optional line "pi" starts "x value" lines.
// Lines starting with '#' are ignored. Missing diagonal mass stays put.
inline ReversibleChain read_chain(std::istream& in)
{
    std::vector<std::tuple<int, int, double>> edges;
    std::map<int, double> pi_entries;
    bool in_pi = false;
    std::string line;
    int n = 0, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream ls(line);
        if (line.compare(first, 2, "pi") == 0) {
            in_pi = true;
            continue;
        }
        if (in_pi) {
            int x;
            double v;
            if (!(ls >> x >> v) || x < 0)
                throw std::invalid_argument("bad pi entry on line " + std::to_string(lineno));
            pi_entries[x] = v;
            n = std::max(n, x + 1);
        } else {
            int x, y;
            double v;
            if (!(ls >> x >> y >> v) || x < 0 || y < 0)
                throw std::invalid_argument("bad edge on line " + std::to_string(lineno));
            edges.emplace_back(x, y, v);
            n = std::max({n, x + 1, y + 1});
        }
    }
    if (n == 0)
        throw std::invalid_argument("empty chain");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [x, y, v] : edges)
        p(x, y) += v;
    for (int x = 0; x < n; ++x) {
        const double off = p.row(x).sum() - p(x, x);
        if (p(x, x) == 0 && off < 1)
            p(x, x) = 1 - off;
    }
    if (pi_entries.empty())
        return make_chain(p);
    if (static_cast<int>(pi_entries.size()) != n)
        throw std::invalid_argument("pi block must list every state");
    Eigen::VectorXd pi(n);
    for (const auto& [x, v] : pi_entries)
        pi(x) = v;
    return make_chain(p, pi);
}

// (L f)(x) = sum_y p(x,y) (f(y) - f(x)).
inline Eigen::VectorXd generator_apply(const ReversibleChain& c, const Eigen::VectorXd& f)
{
    return c.p * f - f;
}

inline double dirichlet_form(const ReversibleChain& c, const Eigen::VectorXd& f, const Eigen::VectorXd& g)
{
    double s = 0;
    const int n = c.n_states();
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (c.p(x, y) > 0)
                s += c.pi(x) * c.p(x, y) * (f(x) - f(y)) * (g(x) - g(y));
    return 0.5 * s;
}

struct PotentialSolution {
    Eigen::VectorXd h;   // committor, 1 on A and 0 on B
    Eigen::VectorXd e;   // equilibrium measure, supported on A
    double cap = 0;
    Eigen::VectorXd nu;  // pi e / cap
};

namespace detail {

inline std::vector<char> membership(int n, const StateSet& s, const char* name)
{
    std::vector<char> in(n, 0);
    for (int x : s) {
        if (x < 0 || x >= n)
            throw std::invalid_argument(std::string(name) + " contains an unknown state");
        in[x] = 1;
    }
    return in;
}

// Solves (I - P) u = rhs on the states with free[x], u fixed elsewhere to `fixed`.
inline Eigen::VectorXd solve_dirichlet(const ReversibleChain& c, const std::vector<char>& free,
                                       const Eigen::VectorXd& fixed, const Eigen::VectorXd& source)
{
    const int n = c.n_states();
    std::vector<int> idx;
    for (int x = 0; x < n; ++x)
        if (free[x])
            idx.push_back(x);
    const int m = static_cast<int>(idx.size());
    Eigen::VectorXd u = fixed;
    if (m == 0)
        return u;
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
        const int x = idx[i];
        double r = source(x);
        for (int y = 0; y < n; ++y)
            if (!free[y])
                r += c.p(x, y) * fixed(y);
        rhs(i) = r;
    }
    Eigen::VectorXd sol;
    if (m <= 2000) {
        Eigen::MatrixXd a(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                a(i, j) = (i == j ? 1.0 : 0.0) - c.p(idx[i], idx[j]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (!lu.isInvertible())
            throw NumericalError("singular Dirichlet problem: chain is reducible");
        sol = lu.solve(rhs);
    } else {
        // Symmetrise with D = diag(sqrt pi): D (I - P) D^{-1} is symmetric positive definite.
        std::vector<Eigen::Triplet<double>> t;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double v = (i == j ? 1.0 : 0.0) - c.p(idx[i], idx[j]);
                if (v != 0)
                    t.emplace_back(i, j, v * std::sqrt(c.pi(idx[i]) / c.pi(idx[j])));
            }
        Eigen::SparseMatrix<double> a(m, m);
        a.setFromTriplets(t.begin(), t.end());
        Eigen::VectorXd b(m);
        for (int i = 0; i < m; ++i)
            b(i) = std::sqrt(c.pi(idx[i])) * rhs(i);
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-12);
        cg.compute(a);
        Eigen::VectorXd v = cg.solve(b);
        if (cg.info() != Eigen::Success)
            throw NumericalError("conjugate gradient did not converge: chain may be reducible");
        sol.resize(m);
        for (int i = 0; i < m; ++i)
            sol(i) = v(i) / std::sqrt(c.pi(idx[i]));
    }
    for (int i = 0; i < m; ++i)
        u(idx[i]) = sol(i);
    return u;
}

} // namespace detail

inline PotentialSolution committor(const ReversibleChain& c, const StateSet& A, const StateSet& B)
{
    const int n = c.n_states();
    if (A.empty() || B.empty())
        throw std::invalid_argument("committor: A and B must be nonempty");
    const auto inA = detail::membership(n, A, "A");
    const auto inB = detail::membership(n, B, "B");
    std::vector<char> free(n);
    Eigen::VectorXd fixed = Eigen::VectorXd::Zero(n);
    for (int x = 0; x < n; ++x) {
        if (inA[x] && inB[x])
            throw std::invalid_argument("committor: A and B overlap");
        free[x] = !inA[x] && !inB[x];
        if (inA[x])
            fixed(x) = 1;
    }
    PotentialSolution s;
    s.h = detail::solve_dirichlet(c, free, fixed, Eigen::VectorXd::Zero(n));
    const Eigen::VectorXd Lh = generator_apply(c, s.h);
    s.e = Eigen::VectorXd::Zero(n);
    for (int x = 0; x < n; ++x)
        if (inA[x])
            s.e(x) = -Lh(x);
    s.cap = c.pi.dot(s.e);
    s.nu = c.pi.cwiseProduct(s.e) / s.cap;
    return s;
}

inline void check_test_function(const ReversibleChain& c, const StateSet& A, const StateSet& B,
                                const Eigen::VectorXd& h)
{
    if (h.size() != c.n_states())
        throw std::invalid_argument("test function has wrong length");
    for (int x = 0; x < h.size(); ++x)
        if (h(x) < 0 || h(x) > 1)
            throw std::invalid_argument("test function must take values in [0,1]");
    for (int x : A)
        if (h(x) != 1)
            throw std::invalid_argument("test function must equal 1 on A");
    for (int x : B)
        if (h(x) != 0)
            throw std::invalid_argument("test function must equal 0 on B");
}

// E(h_test) >= cap(A,B).
inline double dirichlet_upper_bound(const ReversibleChain& c, const StateSet& A, const StateSet& B,
                                    const Eigen::VectorXd& h_test)
{
    check_test_function(c, A, B, h_test);
    return dirichlet_form(c, h_test, h_test);
}

struct UnitFlow {
    Eigen::MatrixXd phi;
};

inline Eigen::VectorXd divergence(const UnitFlow& f)
{
    return f.phi.rowwise().sum();
}

inline UnitFlow harmonic_unit_flow(const ReversibleChain& c, const StateSet& A, const StateSet& B)
{
    const auto s = committor(c, A, B);
    const int n = c.n_states();
    UnitFlow f{Eigen::MatrixXd::Zero(n, n)};
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && c.p(x, y) > 0)
                f.phi(x, y) = c.pi(x) * c.p(x, y) * (s.h(x) - s.h(y)) / s.cap;
    return f;
}

inline void validate_flow(const ReversibleChain& c, const StateSet& A, const StateSet& B, const UnitFlow& f,
                          double tol = 1e-9)
{
    const int n = c.n_states();
    if (f.phi.rows() != n || f.phi.cols() != n)
        throw std::invalid_argument("flow has wrong shape");
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (std::abs(f.phi(x, y) + f.phi(y, x)) > tol)
                throw std::invalid_argument("flow is not antisymmetric");
            if (c.p(x, y) == 0 && f.phi(x, y) != 0)
                throw std::invalid_argument("flow uses an edge absent from the chain");
        }
    const auto inA = detail::membership(n, A, "A");
    const auto inB = detail::membership(n, B, "B");
    const Eigen::VectorXd div = divergence(f);
    double outA = 0, outB = 0;
    for (int x = 0; x < n; ++x) {
        if (inA[x])
            outA += div(x);
        else if (inB[x])
            outB += div(x);
        else if (std::abs(div(x)) > tol)
            throw std::invalid_argument("flow violates Kirchhoff's law at state " + std::to_string(x));
    }
    if (std::abs(outA - 1) > tol || std::abs(outB + 1) > tol)
        throw std::invalid_argument("flow does not have unit intensity");
}

// D(phi) = 1/2 sum phi(x,y)^2 / (pi(x) p(x,y)).
inline double flow_energy(const ReversibleChain& c, const UnitFlow& f)
{
    double s = 0;
    const int n = c.n_states();
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && c.p(x, y) > 0)
                s += f.phi(x, y) * f.phi(x, y) / (c.pi(x) * c.p(x, y));
    return 0.5 * s;
}

// 1/D(phi) <= cap(A,B) for every unit AB-flow phi.
inline double thomson_lower_bound(const ReversibleChain& c, const StateSet& A, const StateSet& B, const UnitFlow& f)
{
    validate_flow(c, A, B, f);
    return 1.0 / flow_energy(c, f);
}

// w_A(x) = E_x[tau_A] with tau_A = inf{n >= 0 : X_n in A}.
inline Eigen::VectorXd mean_hitting_time(const ReversibleChain& c, const StateSet& A)
{
    const int n = c.n_states();
    if (A.empty())
        throw std::invalid_argument("mean_hitting_time: A must be nonempty");
    const auto inA = detail::membership(n, A, "A");
    std::vector<char> free(n);
    for (int x = 0; x < n; ++x)
        free[x] = !inA[x];
    return detail::solve_dirichlet(c, free, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n));
}

struct Estimate {
    double mean = 0;
    double std_error = 0;
};

struct McOracleResult {
    Estimate committor;     // P_start(tau_A < tau_B)
    Estimate hitting_time;  // E_start[tau_{A u B}]
};

namespace detail {

class ChainSampler {
public:
    explicit ChainSampler(const ReversibleChain& c) : cum_(c.n_states())
    {
        for (int x = 0; x < c.n_states(); ++x) {
            double s = 0;
            for (int y = 0; y < c.n_states(); ++y) {
                s += c.p(x, y);
                cum_[x].push_back(s);
            }
            cum_[x].back() = 1.0;
        }
    }
    template <class Gen>
    int step(int x, Gen& rng) const
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const auto& row = cum_[x];
        return static_cast<int>(std::upper_bound(row.begin(), row.end(), u(rng)) - row.begin());
    }

private:
    std::vector<std::vector<double>> cum_;
};

inline Estimate mean_and_error(double sum, double sq, long n)
{
    Estimate e;
    e.mean = sum / n;
    if (n > 1)
        e.std_error = std::sqrt(std::max(sq / n - e.mean * e.mean, 0.0) / (n - 1));
    return e;
}

} // namespace detail

inline McOracleResult mc_oracle(const ReversibleChain& c, int start, const StateSet& A, const StateSet& B,
                                long n_runs, std::uint64_t seed)
{
    const int n = c.n_states();
    const auto inA = detail::membership(n, A, "A");
    const auto inB = detail::membership(n, B, "B");
    const detail::ChainSampler sampler(c);
    Rng rng(stream_seed(seed, "markov", 0));
    double hits = 0, tsum = 0, tsq = 0;
    for (long r = 0; r < n_runs; ++r) {
        int x = start;
        long t = 0;
        while (!inA[x] && !inB[x]) {
            x = sampler.step(x, rng);
            ++t;
        }
        hits += inA[x];
        tsum += t;
        tsq += static_cast<double>(t) * t;
    }
    McOracleResult out;
    out.committor = detail::mean_and_error(hits, hits, n_runs);
    out.hitting_time = detail::mean_and_error(tsum, tsq, n_runs);
    return out;
}

// E_start[tau_A] by simulation.
inline Estimate mc_hitting_time(const ReversibleChain& c, int start, const StateSet& A, long n_runs,
                                std::uint64_t seed)
{
    const auto inA = detail::membership(c.n_states(), A, "A");
    const detail::ChainSampler sampler(c);
    Rng rng(stream_seed(seed, "markov-hit", 0));
    double tsum = 0, tsq = 0;
    for (long r = 0; r < n_runs; ++r) {
        int x = start;
        long t = 0;
        while (!inA[x]) {
            x = sampler.step(x, rng);
            ++t;
        }
        tsum += t;
        tsq += static_cast<double>(t) * t;
    }
    return detail::mean_and_error(tsum, tsq, n_runs);
}

// P_x(tau+_B < tau+_A) with return times counted from n >= 1; for x in A this
// is the equilibrium measure e_AB(x) = -(L h_AB)(x).
inline Estimate mc_escape_probability(const ReversibleChain& c, int x0, const StateSet& A, const StateSet& B,
                                      long n_runs, std::uint64_t seed)
{
    const int n = c.n_states();
    const auto inA = detail::membership(n, A, "A");
    const auto inB = detail::membership(n, B, "B");
    const detail::ChainSampler sampler(c);
    Rng rng(stream_seed(seed, "markov-escape", static_cast<std::uint64_t>(x0)));
    double hits = 0;
    for (long r = 0; r < n_runs; ++r) {
        int x = sampler.step(x0, rng);
        while (!inA[x] && !inB[x])
            x = sampler.step(x, rng);
        hits += inB[x];
    }
    return detail::mean_and_error(hits, hits, n_runs);
}

} // namespace sspde
