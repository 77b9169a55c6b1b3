#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "fourier.hpp"

namespace sspde {

// H_n(x; eps), generated by exp(t x - eps t^2 / 2).
inline double hermite(int n, double x, double eps)
{
    if (n < 0)
        throw std::invalid_argument("hermite: negative order");
    if (eps < 0)
        throw std::invalid_argument("hermite: negative variance");
    double prev = 1.0;
    if (n == 0)
        return prev;
    double cur = x;
    for (int j = 1; j < n; ++j) {
        double next = x * cur - eps * j * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

struct GeneratingCheck {
    double residual;
    double first_omitted;  // |t^n H_n / n!| at n = n_terms
};

inline GeneratingCheck hermite_generating_check(double t, double x, double eps, int n_terms)
{
    double sum = 0, term_scale = 1;  // t^n / n!
    for (int n = 0; n < n_terms; ++n) {
        sum += term_scale * hermite(n, x, eps);
        term_scale *= t / (n + 1);
    }
    const double exact = std::exp(t * x - eps * t * t / 2);
    return {std::abs(exact - sum), std::abs(term_scale * hermite(n_terms, x, eps))};
}

// Sum over all perfect pairings of `indices` of products of cov entries.
// cov is dense row-major n x n; indices refer to its rows.
inline double isserlis_moment(const std::vector<std::vector<double>>& cov, std::vector<int> indices)
{
    if (indices.size() % 2 != 0)
        return 0.0;
    if (indices.empty())
        return 1.0;
    const int first = indices.front();
    double total = 0;
    for (std::size_t j = 1; j < indices.size(); ++j) {
        std::vector<int> rest;
        rest.reserve(indices.size() - 2);
        for (std::size_t i = 1; i < indices.size(); ++i)
            if (i != j)
                rest.push_back(indices[i]);
        total += cov.at(first).at(indices[j]) * isserlis_moment(cov, std::move(rest));
    }
    return total;
}

struct GffSpec {
    int d = 2;
    int N = 16;
    double L = 1.0;
    double mass_sq = 1.0;
    bool zero_mean = false;
};

struct SpectralField {
    ModeSet modes;
    std::vector<double> coeffs;
};

inline ModeSet checked_modes(const GffSpec& s)
{
    ModeSet m = l1_ball(s.d, s.N, s.L, s.zero_mean);
    for (double lam : m.lambda)
        if (!(lam + s.mass_sq > 0))
            throw std::invalid_argument("covariance not positive on a retained mode");
    return m;
}

template <class Gen>
SpectralField sample_gff(const GffSpec& spec, Gen& rng)
{
    SpectralField f{checked_modes(spec), {}};
    std::normal_distribution<double> z;
    f.coeffs.resize(f.modes.size());
    for (std::size_t i = 0; i < f.modes.size(); ++i)
        f.coeffs[i] = z(rng) / std::sqrt(f.modes.lambda[i] + spec.mass_sq);
    return f;
}

// L^{-d} Tr (-Delta_N + a)^{-1}, the variance of the field at a point.
inline double wick_constant_CN(int d, int N, double L, double mass_sq, bool zero_mean = false)
{
    const ModeSet m = checked_modes({d, N, L, mass_sq, zero_mean});
    double s = 0;
    for (double lam : m.lambda)
        s += 1.0 / (lam + mass_sq);
    return s / std::pow(L, d);
}

// Renormalisation constant of the Galerkin equation: L^{-d} (sum 1/|lambda_k - 1| + theta).
inline double galerkin_CN(int d, int N, double L, double theta = 0.0)
{
    const ModeSet m = l1_ball(d, N, L);
    double s = theta;
    for (double lam : m.lambda) {
        if (lam == 1.0)
            throw std::invalid_argument("lambda_k = 1 for a retained mode");
        s += 1.0 / std::abs(lam - 1.0);
    }
    return s / std::pow(L, d);
}

inline std::vector<double> wick_power_field(const std::vector<double>& values, int n, double C)
{
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = hermite(n, values[i], C);
    return out;
}

namespace detail {

// In-place real FFT buffer of M^d points.
class RealGrid {
public:
    RealGrid(int d, int M) : d_(d), M_(M)
    {
        half_ = M / 2 + 1;
        outer_ = 1;
        for (int j = 0; j + 1 < d; ++j)
            outer_ *= static_cast<std::size_t>(M);
        data_ = fftw_alloc_real(outer_ * 2 * half_);
        std::fill(data_, data_ + outer_ * 2 * half_, 0.0);
    }
    RealGrid(const RealGrid&) = delete;
    RealGrid& operator=(const RealGrid&) = delete;
    ~RealGrid() { fftw_free(data_); }

    int M() const { return M_; }
    std::size_t rows() const { return outer_; }
    std::size_t half() const { return half_; }
    double& real_at(std::size_t row, std::size_t j) { return data_[row * 2 * half_ + j]; }
    std::complex<double>& complex_at(std::size_t row, std::size_t j)
    {
        return reinterpret_cast<std::complex<double>*>(data_)[row * half_ + j];
    }

    // Row index of the complex layout for the leading d-1 components of m.
    std::size_t row_of(const Wave& m) const
    {
        std::size_t r = 0;
        for (int j = 0; j + 1 < d_; ++j)
            r = r * M_ + static_cast<std::size_t>(((m[j] % M_) + M_) % M_);
        return r;
    }

    void execute(bool to_real)
    {
        int dims[3] = {M_, M_, M_};
        fftw_plan p;
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            auto* c = reinterpret_cast<fftw_complex*>(data_);
            p = to_real ? fftw_plan_dft_c2r(d_, dims, c, data_, FFTW_ESTIMATE)
                        : fftw_plan_dft_r2c(d_, dims, data_, c, FFTW_ESTIMATE);
        }
        fftw_execute(p);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }

private:
    int d_, M_;
    std::size_t half_, outer_;
    double* data_;
};

// Writes G_N(x) = L^{-d} sum_k ghat_k exp(2 pi i k.x / L) on an M^d grid.
inline void fill_green(RealGrid& g, const ModeSet& modes, double mass_sq)
{
    const int d = modes.d;
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < g.half(); ++j)
            g.complex_at(r, j) = 0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const Wave& k = modes.k[i];
        if (k[d - 1] < 0)
            continue;
        g.complex_at(g.row_of(k), static_cast<std::size_t>(k[d - 1])) += 1.0 / (modes.lambda[i] + mass_sq);
    }
    g.execute(true);
    const double s = 1.0 / std::pow(modes.L, d);
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (int j = 0; j < g.M(); ++j)
            g.real_at(r, j) *= s;
}

} // namespace detail

// Integral over the torus of G_N(x)^n, where G_N is the kernel of
// (-Delta_N + a)^{-1}. Exact: the trapezoid rule on M > nN points per axis
// integrates the trigonometric polynomial G_N^n without error.
inline double green_power_integral(int d, int N, double L, double mass_sq, int n, bool zero_mean = false)
{
    if (n < 2 || n > 4)
        throw std::invalid_argument("green_power_integral: n must be 2, 3 or 4");
    const ModeSet modes = checked_modes({d, N, L, mass_sq, zero_mean});
    detail::RealGrid g(d, fft_size(n * N + 1));
    detail::fill_green(g, modes, mass_sq);
    double sum = 0;
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (int j = 0; j < g.M(); ++j)
            sum += std::pow(g.real_at(r, j), n);
    return sum * std::pow(L / g.M(), d);
}

// Same quantity for n = 2 by Parseval: L^{-d} sum_k ghat_k^2.
inline double green_square_parseval(int d, int N, double L, double mass_sq, bool zero_mean = false)
{
    const ModeSet modes = checked_modes({d, N, L, mass_sq, zero_mean});
    double s = 0;
    for (double lam : modes.lambda)
        s += 1.0 / ((lam + mass_sq) * (lam + mass_sq));
    return s / std::pow(L, d);
}

// Sunset diagram: double integral of G(x)^2 G(y)^2 G(x-y)^2, evaluated as
// L^{2d} sum_m c_m^3 with c_m the Fourier coefficients of G^2.
inline double sunset_integral(int d, int N, double L, double mass_sq, bool zero_mean = false)
{
    const ModeSet modes = checked_modes({d, N, L, mass_sq, zero_mean});
    detail::RealGrid g(d, fft_size(4 * N + 1));
    detail::fill_green(g, modes, mass_sq);
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (int j = 0; j < g.M(); ++j)
            g.real_at(r, j) *= g.real_at(r, j);
    g.execute(false);
    const int M = g.M();
    const double norm = 1.0 / std::pow(static_cast<double>(M), d);
    double sum = 0;
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < g.half(); ++j) {
            const bool self_mirror = j == 0 || (M % 2 == 0 && static_cast<int>(j) == M / 2);
            const double c = g.complex_at(r, j).real() * norm;
            sum += (self_mirror ? 1.0 : 2.0) * c * c * c;
        }
    return sum * std::pow(L, 2 * d);
}

struct RenormConstants3d {
    double C1;  // tadpole G_N(0)
    double C2;  // 3! * triangle
    double C3;  // 4!/(2! 4^2) * int G^4
    double C4;  // 2^3/(3! 4^3) * binom(4,2)^3 * sunset
    double triangle;       // int G^3
    double half_triangle;  // 1/2 int G^3, the normalisation of the mollified dynamic constant
    double quartic;        // int G^4
    double sunset;
};

// Constants of the renormalised 3D potential. The transverse field has
// covariance (-Delta_perp - 1)^{-1}: mass -1 and no zero mode.
inline RenormConstants3d renorm_constants_3d(int N, double L = 1.0)
{
    if (!(L < 2 * std::numbers::pi))
        throw std::invalid_argument("renorm_constants_3d: need L < 2 pi");
    RenormConstants3d c{};
    c.C1 = wick_constant_CN(3, N, L, -1.0, true);
    c.triangle = green_power_integral(3, N, L, -1.0, 3, true);
    c.quartic = green_power_integral(3, N, L, -1.0, 4, true);
    c.sunset = sunset_integral(3, N, L, -1.0, true);
    c.C2 = 6.0 * c.triangle;
    c.half_triangle = 0.5 * c.triangle;
    c.C3 = 24.0 / (2.0 * 16.0) * c.quartic;
    c.C4 = 8.0 / (6.0 * 64.0) * 216.0 * c.sunset;
    return c;
}

} // namespace sspde
