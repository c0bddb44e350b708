#include "tvtrace/error.hpp"
#include "tvtrace/wavelet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace tvtrace {

namespace {

using Poly = std::vector<std::complex<double>>;  // ascending powers

Poly multiply(const Poly& a, const Poly& b)
{
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            out[i + k] += a[i] * b[k];
    return out;
}

double binomial(int n, int k)
{
    double c = 1.0;
    for (int i = 1; i <= k; ++i)
        c = c * (n - k + i) / i;
    return c;
}

// Roots via eigenvalues of the companion matrix.
std::vector<std::complex<double>> roots(const Poly& p)
{
    const int degree = static_cast<int>(p.size()) - 1;
    if (degree < 1)
        return {};
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
    for (int i = 1; i < degree; ++i)
        companion(i, i - 1) = 1.0;
    for (int i = 0; i < degree; ++i)
        companion(i, degree - 1) = -p[static_cast<std::size_t>(i)] / p.back();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

} // namespace

std::vector<double> daubechies_lowpass(int vanishing_moments)
{
    const int n = vanishing_moments;
    if (n < 1 || n > kMaxVanishingMoments)
        throw AnalysisError("vanishing moments must be in [1, " + std::to_string(kMaxVanishingMoments) + "]");

    // z^(N-1) P(y) with y = sin^2(w/2) = -(z - 2 + 1/z)/4; P(y) = sum C(N-1+k, k) y^k.
    const Poly y_times_z = {-0.25, 0.5, -0.25};
    Poly q(static_cast<std::size_t>(2 * n - 1), 0.0);
    for (int k = 0; k < n; ++k) {
        Poly term = {1.0};
        for (int i = 0; i < k; ++i)
            term = multiply(term, y_times_z);
        const double c = binomial(n - 1 + k, k);
        const int shift = n - 1 - k;
        for (std::size_t i = 0; i < term.size(); ++i)
            q[i + static_cast<std::size_t>(shift)] += c * term[i];
    }

    // Minimum phase: keep the roots inside the unit circle.
    Poly h = {1.0};
    for (int i = 0; i < n; ++i)
        h = multiply(h, Poly{1.0, 1.0});
    for (const auto& r : roots(q)) {
        if (std::abs(r) < 1.0)
            h = multiply(h, Poly{-r, 1.0});
    }

    std::vector<double> taps(h.size());
    std::transform(h.rbegin(), h.rend(), taps.begin(), [](std::complex<double> c) { return c.real(); });
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (auto& t : taps)
        t *= std::sqrt(2.0) / sum;
    return taps;
}

std::vector<double> quadrature_mirror(std::span<const double> lowpass)
{
    const std::size_t len = lowpass.size();
    std::vector<double> g(len);
    for (std::size_t m = 0; m < len; ++m)
        g[m] = (m % 2 == 0 ? 1.0 : -1.0) * lowpass[len - 1 - m];
    return g;
}

} // namespace tvtrace
