#include "tvtrace/wavelet.hpp"

#include "tvtrace/error.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace tvtrace {

namespace {

constexpr double kZ975 = 1.959963984540054;

// Valid-mode analysis step: only outputs whose support fits inside `approx`.
void analysis_step(std::span<const double> approx, std::span<const double> h, std::span<const double> g,
    std::vector<double>& next_approx, std::vector<double>& detail)
{
    const std::size_t len = h.size();
    const std::size_t n = approx.size() < len ? 0 : (approx.size() - len) / 2 + 1;
    next_approx.assign(n, 0.0);
    detail.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double* x = approx.data() + 2 * k;
        double a = 0.0;
        double d = 0.0;
        for (std::size_t m = 0; m < len; ++m) {
            a += h[m] * x[m];
            d += g[m] * x[m];
        }
        next_approx[k] = a;
        detail[k] = d;
    }
}

// Octave count reachable from a series of `length` samples.
int octaves_for(std::size_t length, std::size_t filter_len)
{
    int octaves = 0;
    std::size_t approx = length;
    while (approx >= filter_len) {
        const std::size_t n = (approx - filter_len) / 2 + 1;
        if (n < kMinCoefficientsPerOctave)
            break;
        ++octaves;
        approx = n;
    }
    return octaves;
}

bool is_power_of_two(std::size_t n)
{
    return n != 0 && (n & (n - 1)) == 0;
}

ScalingEstimate weighted_fit(const LogscaleDiagram& ld, const std::vector<std::size_t>& idx)
{
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, sy = 0.0, sjy = 0.0;
    for (auto i : idx) {
        const double w = 1.0 / ld.variance[i];
        const double j = ld.octaves[i];
        s0 += w;
        s1 += w * j;
        s2 += w * j * j;
        sy += w * ld.y[i];
        sjy += w * j * ld.y[i];
    }
    const double det = s0 * s2 - s1 * s1;

    ScalingEstimate est;
    est.alpha = (s0 * sjy - s1 * sy) / det;
    est.intercept = (s2 * sy - s1 * sjy) / det;
    est.alpha_stderr = std::sqrt(s0 / det);
    est.hurst = (est.alpha + 1.0) / 2.0;
    est.hurst_ci_low = (est.alpha - kZ975 * est.alpha_stderr + 1.0) / 2.0;
    est.hurst_ci_high = (est.alpha + kZ975 * est.alpha_stderr + 1.0) / 2.0;
    est.j1 = ld.octaves[idx.front()];
    est.j2 = ld.octaves[idx.back()];
    est.octaves_used = idx.size();

    double chi2 = 0.0;
    for (auto i : idx) {
        const double r = ld.y[i] - (est.intercept + est.alpha * ld.octaves[i]);
        chi2 += r * r / ld.variance[i];
    }
    const double dof = static_cast<double>(idx.size()) - 2.0;
    est.fit_quality = boost::math::gamma_q(dof / 2.0, std::max(chi2, 0.0) / 2.0);
    return est;
}

// t statistic of the quadratic coefficient in a weighted fit of y on (1, j, j^2).
double curvature_t(const LogscaleDiagram& ld, const std::vector<std::size_t>& idx)
{
    const double j0 = ld.octaves[idx.front()];
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (auto i : idx) {
        const double j = ld.octaves[i] - j0;
        const Eigen::Vector3d x(1.0, j, j * j);
        a += x * x.transpose() / ld.variance[i];
        b += x * ld.y[i] / ld.variance[i];
    }
    const Eigen::Matrix3d cov = a.inverse();
    return (cov * b)(2) / std::sqrt(cov(2, 2));
}

std::vector<std::size_t> usable_indices(const LogscaleDiagram& ld, int j1, int j2)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ld.size(); ++i) {
        if (ld.octaves[i] >= j1 && ld.octaves[i] <= j2 && !ld.degenerate[i])
            idx.push_back(i);
    }
    return idx;
}

} // namespace

std::size_t min_series_length(int vanishing_moments)
{
    const std::size_t len = 2 * static_cast<std::size_t>(vanishing_moments);
    // Invert n_j = (a_{j-1} - L)/2 + 1 >= 4 for kMinOctaves octaves.
    std::size_t need = kMinCoefficientsPerOctave;
    for (int j = 0; j < kMinOctaves; ++j)
        need = 2 * (need - 1) + len;
    return std::max<std::size_t>(need, std::size_t{1} << (kMinOctaves + 2));
}

DetailPyramid dwt_details(std::span<const double> series, int vanishing_moments)
{
    const auto h = daubechies_lowpass(vanishing_moments);
    const auto g = quadrature_mirror(h);
    const std::size_t required = min_series_length(vanishing_moments);
    if (series.size() < required)
        throw AnalysisError("series too short for wavelet analysis: " + std::to_string(series.size()) +
                            " samples, need at least " + std::to_string(required));

    DetailPyramid pyramid;
    pyramid.vanishing_moments = vanishing_moments;
    const int levels = octaves_for(series.size(), h.size());
    std::vector<double> approx(series.begin(), series.end());
    std::vector<double> next;
    for (int j = 1; j <= levels; ++j) {
        std::vector<double> detail;
        analysis_step(approx, h, g, next, detail);
        pyramid.octaves.push_back(std::move(detail));
        approx.swap(next);
    }
    return pyramid;
}

DetailPyramid dwt_details(const TimeSeries& series, int vanishing_moments)
{
    const auto values = series.values();
    return dwt_details(values, vanishing_moments);
}

PeriodicDwt periodic_dwt(std::span<const double> signal, int vanishing_moments, int levels)
{
    if (!is_power_of_two(signal.size()))
        throw AnalysisError("periodic transform needs a power-of-two length");
    if (levels < 0 || (std::size_t{1} << levels) > signal.size())
        throw AnalysisError("too many levels for signal length");

    const auto h = daubechies_lowpass(vanishing_moments);
    const auto g = quadrature_mirror(h);
    PeriodicDwt out;
    std::vector<double> approx(signal.begin(), signal.end());
    for (int j = 1; j <= levels; ++j) {
        const std::size_t n = approx.size();
        std::vector<double> a(n / 2, 0.0);
        std::vector<double> d(n / 2, 0.0);
        for (std::size_t k = 0; k < n / 2; ++k) {
            for (std::size_t m = 0; m < h.size(); ++m) {
                const double x = approx[(2 * k + m) % n];
                a[k] += h[m] * x;
                d[k] += g[m] * x;
            }
        }
        out.details.push_back(std::move(d));
        approx = std::move(a);
    }
    out.approximation = std::move(approx);
    return out;
}

double LogscaleDiagram::scale_seconds(int octave) const
{
    return std::ldexp(bin_width, octave);
}

std::optional<std::size_t> LogscaleDiagram::index_of(int octave) const
{
    auto it = std::find(octaves.begin(), octaves.end(), octave);
    if (it == octaves.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - octaves.begin());
}

LogscaleDiagram logscale_diagram(const DetailPyramid& details, double bin_width)
{
    if (details.octaves.empty())
        throw AnalysisError("empty detail pyramid");

    constexpr double ln2 = std::numbers::ln2;
    LogscaleDiagram ld;
    ld.bin_width = bin_width;
    for (std::size_t i = 0; i < details.octaves.size(); ++i) {
        const auto& d = details.octaves[i];
        const std::size_t n = d.size();
        if (n == 0)
            break;
        const double half_n = static_cast<double>(n) / 2.0;

        long double energy = 0.0L;
        for (double c : d)
            energy += static_cast<long double>(c) * c;
        const double mean_energy = static_cast<double>(energy / static_cast<long double>(n));

        const double bias = boost::math::digamma(half_n) / ln2 - std::log2(half_n);
        const boost::math::chi_squared chi2(static_cast<double>(n));
        const double q_lo = boost::math::quantile(chi2, 0.025);
        const double q_hi = boost::math::quantile(chi2, 0.975);

        ld.octaves.push_back(static_cast<int>(i) + 1);
        ld.n_coeffs.push_back(n);
        ld.variance.push_back(boost::math::trigamma(half_n) / (ln2 * ln2));
        ld.ci_half.push_back(0.5 * (std::log2(q_hi) - std::log2(q_lo)));
        if (mean_energy > 0.0) {
            ld.y.push_back(std::log2(mean_energy) - bias);
            ld.degenerate.push_back(false);
        } else {
            ld.y.push_back(-std::numeric_limits<double>::infinity());
            ld.degenerate.push_back(true);
        }
    }
    return ld;
}

ScalingEstimate estimate_scaling(const LogscaleDiagram& ld, int j1, int j2)
{
    if (ld.size() == 0)
        throw AnalysisError("empty logscale diagram");
    if (j1 >= j2 || j1 < ld.octaves.front() || j2 > ld.octaves.back())
        throw AnalysisError("fit range [" + std::to_string(j1) + ", " + std::to_string(j2) +
                            "] outside available octaves [" + std::to_string(ld.octaves.front()) + ", " +
                            std::to_string(ld.octaves.back()) + "]");
    const auto idx = usable_indices(ld, j1, j2);
    if (idx.size() < 3)
        throw AnalysisError("fewer than 3 usable octaves in fit range");
    return weighted_fit(ld, idx);
}

std::pair<int, int> default_fit_range(const LogscaleDiagram& ld, int min_j1)
{
    int j2 = 0;
    for (std::size_t i = 0; i < ld.size(); ++i) {
        if (!ld.degenerate[i] && ld.n_coeffs[i] >= 8)
            j2 = ld.octaves[i];
    }
    const auto all = usable_indices(ld, 0, j2);
    if (all.size() < 3)
        throw AnalysisError("fewer than 3 usable octaves with at least 8 coefficients");

    // Start at min_j1 (or as close as three octaves allow), then move up while
    // a quadratic term is still significant over [j1, j2].
    std::size_t start = 0;
    while (start + 3 < all.size() && ld.octaves[all[start]] < min_j1)
        ++start;
    for (; start + 4 <= all.size(); ++start) {
        const std::vector<std::size_t> idx(all.begin() + static_cast<std::ptrdiff_t>(start), all.end());
        if (std::abs(curvature_t(ld, idx)) <= kZ975)
            break;
    }
    return {ld.octaves[all[std::min(start, all.size() - 3)]], j2};
}

std::string_view to_string(SpectrumShape s)
{
    switch (s) {
    case SpectrumShape::Bump: return "Bump";
    case SpectrumShape::LinearIncrease: return "LinearIncrease";
    case SpectrumShape::Flat: return "Flat";
    case SpectrumShape::Mixed: return "Mixed";
    }
    return "Mixed";
}

SpectrumFeature detect_features(const LogscaleDiagram& ld, const FeatureThresholds& thresholds)
{
    const auto idx = usable_indices(ld, std::numeric_limits<int>::min(), std::numeric_limits<int>::max());
    if (idx.size() < 5)
        throw AnalysisError("feature detection needs at least 5 usable octaves, have " + std::to_string(idx.size()));

    SpectrumFeature f;
    const std::size_t m = idx.size();
    f.octaves.reserve(m);
    for (auto i : idx)
        f.octaves.push_back(ld.octaves[i]);

    // Bump: interior maximum clearing both neighbours' upper confidence bounds.
    f.bump_margin.assign(m, std::numeric_limits<double>::quiet_NaN());
    std::optional<std::size_t> bump_at;
    for (std::size_t p = 1; p + 1 < m; ++p) {
        const auto i = idx[p];
        const auto lo = idx[p - 1];
        const auto hi = idx[p + 1];
        const double ceiling = std::max(ld.y[lo] + ld.ci_half[lo], ld.y[hi] + ld.ci_half[hi]);
        f.bump_margin[p] = ld.y[i] - ceiling;
        if (f.bump_margin[p] >= thresholds.bump && (!bump_at || f.bump_margin[p] > f.bump_margin[*bump_at]))
            bump_at = p;
    }

    // Flat: the confidence bands leave no more than `flat` between lowest top and highest bottom.
    double max_low = -std::numeric_limits<double>::infinity();
    double min_high = std::numeric_limits<double>::infinity();
    for (auto i : idx) {
        max_low = std::max(max_low, ld.y[i] - ld.ci_half[i]);
        min_high = std::min(min_high, ld.y[i] + ld.ci_half[i]);
    }
    f.spread = max_low - min_high;

    // Linear increase: earliest onset from which the tail is a good line whose
    // slope exceeds the threshold at 95% confidence.
    std::optional<ScalingEstimate> increase;
    for (std::size_t start = 0; start + 3 <= m; ++start) {
        const std::vector<std::size_t> tail(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.end());
        const auto fit = weighted_fit(ld, tail);
        if (fit.alpha - kZ975 * fit.alpha_stderr > thresholds.increase_alpha &&
            fit.fit_quality >= thresholds.min_fit_quality) {
            increase = fit;
            break;
        }
    }
    f.increase_fit = increase;

    if (bump_at) {
        f.kind = SpectrumShape::Bump;
        f.octave = f.octaves[*bump_at];
    } else if (increase) {
        f.kind = SpectrumShape::LinearIncrease;
        f.octave = increase->j1;
    } else if (f.spread <= thresholds.flat) {
        f.kind = SpectrumShape::Flat;
    } else {
        f.kind = SpectrumShape::Mixed;
    }
    return f;
}

void write_diagram_csv(std::ostream& out, const LogscaleDiagram& ld)
{
    out << "octave,scale_seconds,y,n_coeffs,ci_half\n";
    char buf[160];
    for (std::size_t i = 0; i < ld.size(); ++i) {
        const int j = ld.octaves[i];
        if (ld.degenerate[i]) {
            std::snprintf(buf, sizeof buf, "%d,%.6g,-inf,%zu,%.6g\n", j, ld.scale_seconds(j), ld.n_coeffs[i],
                ld.ci_half[i]);
        } else {
            std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%zu,%.6g\n", j, ld.scale_seconds(j), ld.y[i],
                ld.n_coeffs[i], ld.ci_half[i]);
        }
        out << buf;
    }
}

} // namespace tvtrace
