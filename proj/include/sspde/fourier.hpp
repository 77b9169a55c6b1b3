#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace sspde {

using Wave = std::array<int, 3>;

inline int l1_norm(const Wave& k) { return std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]); }
inline int sq_norm(const Wave& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }

// Retained modes of a periodic field on (R/LZ)^d: the l1 ball |k_1|+...+|k_d| <= N.
// Unused trailing components of each wave vector are zero.
struct ModeSet {
    int d = 1;
    int N = 0;
    double L = 1.0;
    bool zero_mean = false;
    std::vector<Wave> k;
    std::vector<double> lambda;  // (2 pi |k| / L)^2

    std::size_t size() const { return k.size(); }

    // Position of the k = 0 mode, or -1 when absent.
    long zero_index() const
    {
        for (std::size_t i = 0; i < k.size(); ++i)
            if (k[i] == Wave{0, 0, 0})
                return static_cast<long>(i);
        return -1;
    }
};

inline ModeSet l1_ball(int d, int N, double L, bool zero_mean = false)
{
    if (d < 1 || d > 3)
        throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (N < 0)
        throw std::invalid_argument("cutoff must be nonnegative");
    if (!(L > 0))
        throw std::invalid_argument("torus size must be positive");
    ModeSet m;
    m.d = d;
    m.N = N;
    m.L = L;
    m.zero_mean = zero_mean;
    const int r1 = d > 1 ? N : 0;
    const int r2 = d > 2 ? N : 0;
    const double c = 2 * std::numbers::pi / L;
    for (int a = -N; a <= N; ++a)
        for (int b = -r1; b <= r1; ++b)
            for (int e = -r2; e <= r2; ++e) {
                Wave k{a, b, e};
                if (l1_norm(k) > N || (zero_mean && l1_norm(k) == 0))
                    continue;
                m.k.push_back(k);
                m.lambda.push_back(c * c * sq_norm(k));
            }
    return m;
}

// Smallest size >= n whose only prime factors are 2, 3 and 5.
inline int fft_size(int n)
{
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0)
                r /= p;
        if (r == 1)
            return m;
    }
}

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

// Coefficients of the real basis function e_k in complex exponentials
// exp(2 pi i m x / L), one factor per axis.
struct BasisTerm {
    Wave m;
    std::complex<double> w;
};

inline std::vector<BasisTerm> basis_terms(const Wave& k, int d, double L)
{
    std::vector<BasisTerm> out{{Wave{0, 0, 0}, {1.0, 0.0}}};
    const double s = 1.0 / std::sqrt(2 * L);
    for (int j = 0; j < d; ++j) {
        std::vector<BasisTerm> next;
        const int kj = k[j];
        for (const auto& t : out) {
            if (kj == 0) {
                next.push_back({t.m, t.w / std::sqrt(L)});
                continue;
            }
            BasisTerm p = t, q = t;
            p.m[j] = std::abs(kj);
            q.m[j] = -std::abs(kj);
            if (kj > 0) {
                p.w *= s;
                q.w *= s;
            } else {
                p.w *= std::complex<double>(0, -s);
                q.w *= std::complex<double>(0, s);
            }
            next.push_back(p);
            next.push_back(q);
        }
        out = std::move(next);
    }
    return out;
}

// Maps real-basis coefficients on a ModeSet to values on the uniform grid
// x_n = n L / M and back (L^2 projection). Not thread-safe; use one per thread.
class GridTransform {
public:
    GridTransform(const ModeSet& modes, int M) : modes_(modes), M_(M)
    {
        if (M < 2 * modes.N + 1)
            throw std::invalid_argument("grid too coarse for the mode set");
        total_ = 1;
        for (int j = 0; j < modes.d; ++j)
            total_ *= static_cast<std::size_t>(M);
        buf_ = fftw_alloc_complex(total_);
        int dims[3] = {M, M, M};
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            backward_ = fftw_plan_dft(modes.d, dims, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
            forward_ = fftw_plan_dft(modes.d, dims, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        terms_.reserve(modes.size());
        for (const auto& k : modes.k) {
            std::vector<std::pair<std::size_t, std::complex<double>>> ts;
            for (const auto& t : basis_terms(k, modes.d, modes.L))
                ts.emplace_back(flat(t.m), t.w);
            terms_.push_back(std::move(ts));
        }
    }
    GridTransform(const GridTransform&) = delete;
    GridTransform& operator=(const GridTransform&) = delete;
    ~GridTransform()
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(backward_);
        fftw_destroy_plan(forward_);
        fftw_free(buf_);
    }

    int grid_size() const { return M_; }
    std::size_t points() const { return total_; }
    const ModeSet& modes() const { return modes_; }

    void to_grid(const std::vector<double>& coeffs, std::vector<double>& values)
    {
        auto* c = reinterpret_cast<std::complex<double>*>(buf_);
        std::fill(c, c + total_, std::complex<double>(0, 0));
        for (std::size_t i = 0; i < terms_.size(); ++i)
            for (const auto& [pos, w] : terms_[i])
                c[pos] += w * coeffs[i];
        fftw_execute(backward_);
        values.resize(total_);
        for (std::size_t n = 0; n < total_; ++n)
            values[n] = c[n].real();
    }

    void from_grid(const std::vector<double>& values, std::vector<double>& coeffs)
    {
        auto* c = reinterpret_cast<std::complex<double>*>(buf_);
        for (std::size_t n = 0; n < total_; ++n)
            c[n] = values[n];
        fftw_execute(forward_);
        const double scale = std::pow(modes_.L, modes_.d) / static_cast<double>(total_);
        coeffs.assign(terms_.size(), 0.0);
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            std::complex<double> acc = 0;
            for (const auto& [pos, w] : terms_[i])
                acc += w * c[negate(pos)];
            coeffs[i] = acc.real() * scale;
        }
    }

private:
    std::size_t flat(const Wave& m) const
    {
        std::size_t idx = 0;
        for (int j = 0; j < modes_.d; ++j)
            idx = idx * M_ + static_cast<std::size_t>(((m[j] % M_) + M_) % M_);
        return idx;
    }
    std::size_t negate(std::size_t pos) const
    {
        std::size_t out = 0, stride = 1;
        for (int j = 0; j < modes_.d; ++j) {
            std::size_t r = pos % M_;
            pos /= M_;
            out += ((M_ - r) % M_) * stride;
            stride *= M_;
        }
        return out;
    }

    ModeSet modes_;
    int M_;
    std::size_t total_ = 0;
    fftw_complex* buf_ = nullptr;
    fftw_plan backward_{}, forward_{};
    std::vector<std::vector<std::pair<std::size_t, std::complex<double>>>> terms_;
};

} // namespace sspde
