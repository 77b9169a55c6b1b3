#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fourier.hpp"

namespace sspde {

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0, comp_ = 0;
};

struct HessianSpectrum1d {
    std::vector<int> k;
    std::vector<double> mu;  // at the transition state phi = 0
    std::vector<double> nu;  // at the minima phi = +-1
    int unstable() const
    {
        int n = 0;
        for (double m : mu)
            n += m < 0;
        return n;
    }
};

inline HessianSpectrum1d hessian_spectrum_1d(double L, int N)
{
    HessianSpectrum1d s;
    for (int k = -N; k <= N; ++k) {
        const double lam = std::pow(2 * k * std::numbers::pi / L, 2);
        s.k.push_back(k);
        s.mu.push_back(lam - 1);
        s.nu.push_back(lam + 2);
    }
    return s;
}

// Period of the closed level curve {p^2/2 + q^2/2 - q^4/4 = E}. With
// q = q_+ sin(theta) the integrand becomes smooth up to the separatrix.
inline double period_function(double E)
{
    if (!(E > 0 && E < 0.25))
        throw std::invalid_argument("period_function: need 0 < E < 1/4");
    const double r = std::sqrt(1 - 4 * E);
    const double a = 1 - r, b = 1 + r;
    auto f = [&](double th) {
        const double s = std::sin(th);
        return 1.0 / std::sqrt(b - a * s * s);
    };
    const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, std::numbers::pi / 2, 30, 1e-14);
    return 4 * std::numbers::sqrt2 * I;
}

struct Fredholm1d {
    double truncated;   // product over |k| <= N
    double value;       // truncated times the asymptotic tail factor
    double tail_log;    // log of the tail factor over |k| > N
};

namespace detail {

// sum_{k > N} log((k^2 + 2c)/(k^2 - c)) by Euler-Maclaurin with a closed-form
// integral; the neglected remainder is O(N^{-8}).
inline double fredholm_tail_1d(double c, int N)
{
    const double n = N;
    const double s2 = std::sqrt(2 * c), s1 = std::sqrt(c);
    auto F = [&](double k) {
        return k * std::log((k * k + 2 * c) / (k * k - c)) + 2 * s2 * std::atan(k / s2)
            - s1 * std::log((k + s1) / (k - s1));
    };
    auto g3 = [](double k, double al) { return (4 * k * k * k - 12 * al * k) / std::pow(k * k + al, 3); };
    const double integral = std::numbers::pi * s2 - F(n);
    const double f = std::log((n * n + 2 * c) / (n * n - c));
    const double f1 = 2 * n / (n * n + 2 * c) - 2 * n / (n * n - c);
    const double f3 = g3(n, 2 * c) - g3(n, -c);
    return integral - f / 2 - f1 / 12 + f3 / 720;
}

} // namespace detail

// det(1 + 3(-Delta - 1)^{-1}) on [0, L] periodic, i.e. prod nu_k / mu_k.
inline Fredholm1d fredholm_det_1d(double L, int N)
{
    if (std::abs(std::remainder(L, 2 * std::numbers::pi)) < 1e-12 || !(L > 0))
        throw std::invalid_argument("fredholm_det_1d: L must not be a multiple of 2 pi");
    if (N < 1)
        throw std::invalid_argument("fredholm_det_1d: need N >= 1");
    const auto s = hessian_spectrum_1d(L, N);
    CompensatedSum lg;
    int sign = 1;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
        const double r = s.nu[i] / s.mu[i];
        if (r < 0)
            sign = -sign;
        lg.add(std::log(std::abs(r)));
    }
    const double c = L * L / (4 * std::numbers::pi * std::numbers::pi);
    Fredholm1d out{};
    out.truncated = sign * std::exp(lg.value());
    out.tail_log = (static_cast<double>(N) * N > c) ? 2 * detail::fredholm_tail_1d(c, N) : 0.0;
    out.value = sign * std::exp(lg.value() + out.tail_log);
    return out;
}

// The other form, det(1 - 3(-Delta + 2)^{-1}) = prod mu_k / nu_k (truncated).
inline double fredholm_det_1d_minus(double L, int N)
{
    const auto s = hessian_spectrum_1d(L, N);
    CompensatedSum lg;
    int sign = 1;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
        const double r = s.mu[i] / s.nu[i];
        if (r < 0)
            sign = -sign;
        lg.add(std::log(std::abs(r)));
    }
    return sign * std::exp(lg.value());
}

inline double fredholm_closed_form_1d(double L)
{
    const double sh = std::sinh(L / std::numbers::sqrt2), sn = std::sin(L / 2);
    return -sh * sh / (sn * sn);
}

struct LogDet {
    double log_abs = 0;
    int sign = 1;
    double value() const { return sign * std::exp(log_abs); }
};

// Product over retained modes of (1 + c/(lambda_k + b)) exp(-c/(lambda_k + b)).
inline LogDet carleman_fredholm(int d, double L, int N, double c, double b)
{
    const ModeSet m = l1_ball(d, N, L);
    CompensatedSum s;
    LogDet out;
    for (double lam : m.lambda) {
        const double den = lam + b;
        if (den == 0)
            throw std::domain_error("carleman_fredholm: -b is an eigenvalue");
        const double x = c / den;
        if (1 + x == 0)
            throw std::domain_error("carleman_fredholm: determinant vanishes");
        if (1 + x < 0)
            out.sign = -out.sign;
        s.add((x > -1 ? std::log1p(x) : std::log(-(1 + x))) - x);
    }
    out.log_abs = s.value();
    return out;
}

// Plain truncated product of (1 + c/(lambda_k + b)).
inline LogDet fredholm_plain(int d, double L, int N, double c, double b)
{
    const ModeSet m = l1_ball(d, N, L);
    CompensatedSum s;
    LogDet out;
    for (double lam : m.lambda) {
        const double f = 1 + c / (lam + b);
        if (f == 0)
            throw std::domain_error("fredholm_plain: determinant vanishes");
        if (f < 0)
            out.sign = -out.sign;
        s.add(std::log(std::abs(f)));
    }
    out.log_abs = s.value();
    return out;
}

// Tr[(-Delta_N + a)^{-1} (-Delta_N + b)^{-1}]; with a == b this is the square trace.
inline double resolvent_trace(int d, double L, int N, double a, double b)
{
    const ModeSet m = l1_ball(d, N, L);
    CompensatedSum s;
    for (double lam : m.lambda)
        s.add(1.0 / ((lam + a) * (lam + b)));
    return s.value();
}

inline double resolvent_trace(int d, double L, int N, double b)
{
    const ModeSet m = l1_ball(d, N, L);
    CompensatedSum s;
    for (double lam : m.lambda)
        s.add(1.0 / (lam + b));
    return s.value();
}

// For b > 0 and c >= 0, |log det_2| <= M c^2 / b^2 with this M.
inline double carleman_bound_M(int d, double L, int N, double b)
{
    return 0.5 * b * b * resolvent_trace(d, L, N, b, b);
}

struct EkPrediction {
    double prefactor;
    double exponent_rate;  // barrier height H, so that value = prefactor * exp(H / eps)
    double value;
    double determinant;
    double truncation_error_estimate;  // relative
};

inline EkPrediction ek_predict_1d(double L, double eps, int N = 512)
{
    if (!(L > 0 && L < 2 * std::numbers::pi))
        throw std::invalid_argument("ek_predict_1d: need 0 < L < 2 pi");
    if (!(eps > 0))
        throw std::invalid_argument("ek_predict_1d: need eps > 0");
    const auto det = fredholm_det_1d(L, N);
    const auto coarse = fredholm_det_1d(L, std::max(N / 2, 1));
    EkPrediction p{};
    p.determinant = det.value;
    p.prefactor = 2 * std::numbers::pi / std::sqrt(std::abs(det.value));
    p.exponent_rate = L / 4;
    p.value = p.prefactor * std::exp(p.exponent_rate / eps);
    p.truncation_error_estimate = std::abs(std::sqrt(det.value / coarse.value) - 1);
    return p;
}

inline EkPrediction ek_predict_2d(double L, double eps, int N = 256, double theta = 0.0)
{
    if (!(L > 0 && L < 2 * std::numbers::pi))
        throw std::invalid_argument("ek_predict_2d: need 0 < L < 2 pi");
    if (!(eps > 0))
        throw std::invalid_argument("ek_predict_2d: need eps > 0");
    const auto cf = carleman_fredholm(2, L, N, 3.0, -1.0);
    const auto cf2 = carleman_fredholm(2, L, N / 2, 3.0, -1.0);
    EkPrediction p{};
    p.determinant = cf.value();
    p.prefactor = 2 * std::numbers::pi * std::exp(-1.5 * theta) / std::sqrt(std::abs(cf.value()));
    p.exponent_rate = L * L / 4;
    p.value = p.prefactor * std::exp(p.exponent_rate / eps);
    p.truncation_error_estimate = std::abs(std::expm1((cf2.log_abs - cf.log_abs) / 2));
    return p;
}

} // namespace sspde
