#pragma once

#include "tvtrace/timeseries.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace tvtrace {

inline constexpr int kDefaultVanishingMoments = 3;
inline constexpr int kMaxVanishingMoments = 10;
inline constexpr int kMinOctaves = 3;
inline constexpr std::size_t kMinCoefficientsPerOctave = 4;

/// Orthonormal Daubechies (extremal phase) low-pass filter with the given
/// number of vanishing moments; 2N taps summing to sqrt(2).
std::vector<double> daubechies_lowpass(int vanishing_moments);

/// Quadrature mirror high-pass: g[m] = (-1)^m h[L-1-m].
std::vector<double> quadrature_mirror(std::span<const double> lowpass);

/// Shortest series accepted by dwt_details for this wavelet.
std::size_t min_series_length(int vanishing_moments);

/// Detail coefficients per octave, octave j at index j-1. Only coefficients
/// whose filter support lies entirely inside the series are kept.
struct DetailPyramid {
    int vanishing_moments = kDefaultVanishingMoments;
    std::vector<std::vector<double>> octaves;

    int max_octave() const { return static_cast<int>(octaves.size()); }
};

/// Pyramid up to the largest octave holding at least four coefficients.
/// Throws AnalysisError naming the required length when the series is too short.
DetailPyramid dwt_details(std::span<const double> series, int vanishing_moments = kDefaultVanishingMoments);
DetailPyramid dwt_details(const TimeSeries& series, int vanishing_moments = kDefaultVanishingMoments);

/// Full periodised orthonormal transform of a power-of-two length signal.
/// Coefficients of dwt_details are the boundary-free subset of these.
struct PeriodicDwt {
    std::vector<std::vector<double>> details;  // octave j at index j-1
    std::vector<double> approximation;
};

PeriodicDwt periodic_dwt(std::span<const double> signal, int vanishing_moments, int levels);

struct LogscaleDiagram {
    double bin_width = kDefaultBinWidth;
    std::vector<int> octaves;
    std::vector<double> y;               // bias-corrected log2 mean energy, -inf when degenerate
    std::vector<std::size_t> n_coeffs;
    std::vector<double> ci_half;         // 95% half-width
    std::vector<double> variance;        // of y under the Gaussian approximation
    std::vector<bool> degenerate;        // all-zero energy, excluded from fits

    std::size_t size() const { return octaves.size(); }
    double scale_seconds(int octave) const;
    /// Position of `octave` in the arrays, if present.
    std::optional<std::size_t> index_of(int octave) const;
    int max_octave() const { return octaves.empty() ? 0 : octaves.back(); }
};

/// y_j = log2(mean d_j^2) - g(n_j) with g(n) = psi(n/2)/ln 2 - log2(n/2).
/// Variance trigamma(n/2)/ln^2 2; confidence from chi-squared(n_j).
LogscaleDiagram logscale_diagram(const DetailPyramid& details, double bin_width);

struct ScalingEstimate {
    double alpha = 0.0;
    double alpha_stderr = 0.0;
    double intercept = 0.0;
    double hurst = 0.5;
    double hurst_ci_low = 0.5;
    double hurst_ci_high = 0.5;
    int j1 = 0;
    int j2 = 0;
    std::size_t octaves_used = 0;
    double fit_quality = 0.0;  // chi-squared goodness-of-fit probability
};

/// Weighted least squares of y on j over [j1, j2], weights 1/variance.
/// Degenerate octaves are skipped; fewer than three usable octaves throws.
ScalingEstimate estimate_scaling(const LogscaleDiagram& ld, int j1, int j2);

/// Finest octave considered for the default fit. Below it sampled series carry
/// a small-scale bias that the per-octave variances do not account for.
inline constexpr int kDefaultMinOctave = 4;

/// j2 is the largest octave with at least 8 coefficients; j1 the smallest
/// octave from min_j1 on where the curvature of y over [j1, j2] is not
/// significant at 95%. At least three octaves are always kept.
std::pair<int, int> default_fit_range(const LogscaleDiagram& ld, int min_j1 = kDefaultMinOctave);

struct FeatureThresholds {
    double bump = 0.5;
    double flat = 1.0;
    double increase_alpha = 0.2;
    double min_fit_quality = 0.05;
};

enum class SpectrumShape { Bump, LinearIncrease, Flat, Mixed };

std::string_view to_string(SpectrumShape s);

struct SpectrumFeature {
    SpectrumShape kind = SpectrumShape::Mixed;
    int octave = 0;  // j* for Bump, onset j0 for LinearIncrease

    // Evidence, aligned with `octaves` (non-degenerate octaves only).
    std::vector<int> octaves;
    std::vector<double> bump_margin;  // y - max(neighbour upper CI); NaN at the ends
    double spread = 0.0;              // CI-aware max - min of y
    std::optional<ScalingEstimate> increase_fit;
};

SpectrumFeature detect_features(const LogscaleDiagram& ld, const FeatureThresholds& thresholds = {});

/// `octave,scale_seconds,y,n_coeffs,ci_half`
void write_diagram_csv(std::ostream& out, const LogscaleDiagram& ld);

} // namespace tvtrace
