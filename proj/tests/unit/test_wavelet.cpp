#include "doctest.h"

#include "tvtrace/error.hpp"
#include "tvtrace/synth.hpp"
#include "tvtrace/wavelet.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace tvtrace;

namespace {

// Extremal-phase filters computed offline by polynomial root finding.
const std::vector<double> kDb2{0.482962913144534, 0.836516303737808, 0.224143868042013, -0.129409522551260};
const std::vector<double> kDb3{0.332670552950083, 0.806891509311093, 0.459877502118491, -0.135011020010255,
    -0.085441273882027, 0.035226291885710};
const std::vector<double> kDb4{0.230377813308896, 0.714846570552915, 0.630880767929859, -0.027983769416859,
    -0.187034811719092, 0.030841381835561, 0.032883011666885, -0.010597401785069};

std::vector<double> white(std::size_t n, std::uint64_t seed, double sd = 1.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> x(n);
    for (auto& v : x)
        v = z(rng);
    return x;
}

double energy(const std::vector<double>& v)
{
    long double s = 0;
    for (double x : v)
        s += static_cast<long double>(x) * x;
    return static_cast<double>(s);
}

LogscaleDiagram diagram(std::span<const double> x, int n = kDefaultVanishingMoments, double bw = 0.02)
{
    return logscale_diagram(dwt_details(x, n), bw);
}

std::vector<double> as_double(const std::vector<std::uint64_t>& c) { return {c.begin(), c.end()}; }

} // namespace

TEST_SUITE("filters")
{
    TEST_CASE("match reference coefficients")
    {
        for (const auto* ref : {&kDb2, &kDb3, &kDb4}) {
            const auto h = daubechies_lowpass(static_cast<int>(ref->size() / 2));
            REQUIRE(h.size() == ref->size());
            for (std::size_t i = 0; i < h.size(); ++i)
                CHECK(h[i] == doctest::Approx((*ref)[i]).epsilon(1e-12));
        }
        const auto haar = daubechies_lowpass(1);
        REQUIRE(haar.size() == 2);
        CHECK(haar[0] == doctest::Approx(std::sqrt(0.5)));
        CHECK(haar[1] == doctest::Approx(std::sqrt(0.5)));
    }

    TEST_CASE("orthonormality and vanishing moments")
    {
        for (int n = 1; n <= kMaxVanishingMoments; ++n) {
            CAPTURE(n);
            const auto h = daubechies_lowpass(n);
            const auto g = quadrature_mirror(h);
            CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
            for (std::size_t shift = 0; shift < h.size(); shift += 2) {
                double s = 0.0;
                for (std::size_t m = 0; m + shift < h.size(); ++m)
                    s += h[m] * h[m + shift];
                CHECK(std::abs(s - (shift == 0 ? 1.0 : 0.0)) < 1e-10);
            }
            for (int p = 0; p < n; ++p) {
                double moment = 0.0;
                for (std::size_t m = 0; m < g.size(); ++m)
                    moment += std::pow(static_cast<double>(m), p) * g[m];
                CHECK(std::abs(moment) < 1e-7 * std::pow(static_cast<double>(g.size()), p));
            }
        }
    }

    TEST_CASE("out of range moments")
    {
        CHECK_THROWS_AS(daubechies_lowpass(0), AnalysisError);
        CHECK_THROWS_AS(daubechies_lowpass(kMaxVanishingMoments + 1), AnalysisError);
    }
}

TEST_SUITE("dwt")
{
    TEST_CASE("constants vanish")
    {
        for (double c : {1.0, 7.0, 1e6}) {
            const std::vector<double> x(1000, c);
            const auto p = dwt_details(x, 3);
            CHECK(p.max_octave() >= 5);
            for (const auto& oct : p.octaves)
                for (double d : oct)
                    CHECK(std::abs(d) <= 1e-12 * c * 64);
        }
    }

    TEST_CASE("ramps vanish for two or more moments")
    {
        std::vector<double> x(1024);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = 3.0 + 0.25 * static_cast<double>(i);
        for (int n = 2; n <= 5; ++n) {
            const auto p = dwt_details(x, n);
            for (std::size_t j = 0; j < p.octaves.size(); ++j)
                for (double d : p.octaves[j])
                    CHECK(std::abs(d) <= 1e-8 * std::ldexp(1.0, static_cast<int>(j)) * 256);
        }
        const auto haar = dwt_details(x, 1);
        CHECK(std::abs(haar.octaves[0][0]) > 0.1);
    }

    TEST_CASE("impulse response stays in its cone")
    {
        constexpr std::size_t n = 1024, p = 517;
        std::vector<double> x(n, 0.0);
        x[p] = 1.0;
        for (int vm : {1, 2, 3, 4}) {
            const auto pyr = dwt_details(x, vm);
            const std::size_t len = 2 * static_cast<std::size_t>(vm);
            for (std::size_t j = 1; j <= pyr.octaves.size(); ++j) {
                const std::size_t step = std::size_t{1} << j;
                const std::size_t width = (len - 1) * (step - 1) + 1;
                for (std::size_t k = 0; k < pyr.octaves[j - 1].size(); ++k) {
                    const bool inside = k * step <= p && p < k * step + width;
                    if (!inside)
                        CHECK(pyr.octaves[j - 1][k] == 0.0);
                }
            }
            // Full periodic transform: detail energy = input energy - approximation energy.
            const auto full = periodic_dwt(x, vm, 10);
            double detail = 0.0;
            for (const auto& d : full.details)
                detail += energy(d);
            CHECK(detail == doctest::Approx(1.0 - energy(full.approximation)).epsilon(1e-12));
        }
    }

    TEST_CASE("energy conservation on power-of-two inputs")
    {
        for (int vm = 1; vm <= 6; ++vm) {
            for (std::size_t n : {64u, 1024u, 16384u}) {
                const auto x = white(n, 100 + n + vm, 3.0);
                const int levels = static_cast<int>(std::log2(n)) - 1;
                const auto t = periodic_dwt(x, vm, levels);
                double e = energy(t.approximation);
                for (const auto& d : t.details)
                    e += energy(d);
                CHECK(std::abs(e - energy(x)) <= 1e-9 * energy(x));
            }
        }
    }

    TEST_CASE("valid coefficients are the unwrapped periodic ones")
    {
        const auto x = white(4096, 3);
        const auto valid = dwt_details(x, 3);
        const auto full = periodic_dwt(x, 3, valid.max_octave());
        for (std::size_t j = 0; j < valid.octaves.size(); ++j) {
            REQUIRE(valid.octaves[j].size() <= full.details[j].size());
            for (std::size_t k = 0; k < valid.octaves[j].size(); ++k)
                CHECK(valid.octaves[j][k] == doctest::Approx(full.details[j][k]).epsilon(1e-10));
        }
    }

    TEST_CASE("boundary discard and octave count")
    {
        const auto x = white(1000, 4);
        const auto p = dwt_details(x, 3);
        std::size_t a = x.size();
        for (const auto& oct : p.octaves) {
            const std::size_t expect = (a - 6) / 2 + 1;
            CHECK(oct.size() == expect);
            CHECK(oct.size() >= kMinCoefficientsPerOctave);
            a = expect;
        }
        CHECK((a - 6) / 2 + 1 < kMinCoefficientsPerOctave);
    }

    TEST_CASE("short series")
    {
        CHECK(min_series_length(3) == 60);
        CHECK_NOTHROW(dwt_details(white(60, 1), 3));
        CHECK_THROWS_AS(dwt_details(white(59, 1), 3), AnalysisError);
        CHECK(dwt_details(white(60, 1), 3).max_octave() >= kMinOctaves);
        CHECK_THROWS_AS(periodic_dwt(white(100, 1), 3, 2), AnalysisError);
    }
}

TEST_SUITE("logscale")
{
    TEST_CASE("scaling the input shifts every octave by 2 log2 c")
    {
        const auto x = white(1 << 14, 5);
        const auto ref = diagram(x);
        for (double c : {0.1, 3.0, 1000.0}) {
            std::vector<double> y(x);
            for (auto& v : y)
                v *= c;
            const auto ld = diagram(y);
            for (std::size_t i = 0; i < ld.size(); ++i)
                CHECK(ld.y[i] - ref.y[i] == doctest::Approx(2.0 * std::log2(c)).epsilon(1e-9));
        }
    }

    TEST_CASE("physical scale labels")
    {
        const auto ld = diagram(white(1 << 14, 6));
        REQUIRE(ld.index_of(8));
        CHECK(ld.scale_seconds(8) == doctest::Approx(5.12).epsilon(1e-12));
        std::ostringstream out;
        write_diagram_csv(out, ld);
        const auto text = out.str();
        CHECK(text.rfind("octave,scale_seconds,y,n_coeffs,ci_half\n", 0) == 0);
        CHECK(text.find("\n8,5.12,") != std::string::npos);
    }

    TEST_CASE("white noise sits flat")
    {
        double mean_alpha = 0.0;
        int flat = 0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto ld = diagram(white(1 << 16, 200 + s));
            const auto [j1, j2] = default_fit_range(ld);
            mean_alpha += estimate_scaling(ld, j1, j2).alpha / 20.0;
            flat += detect_features(ld).kind == SpectrumShape::Flat;
        }
        CHECK(std::abs(mean_alpha) <= 0.05);
        CHECK(flat >= 18);
    }

    TEST_CASE("unbiased log energy for white noise")
    {
        // E[y_j] = log2(sigma^2) for every octave once the bias term is removed.
        std::vector<double> mean;
        for (std::uint64_t s = 0; s < 40; ++s) {
            const auto ld = diagram(white(1 << 12, 900 + s, 2.0));
            mean.resize(ld.size(), 0.0);
            for (std::size_t i = 0; i < ld.size(); ++i)
                mean[i] += ld.y[i] / 40.0;
        }
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(mean[i] == doctest::Approx(2.0).epsilon(0.05));
    }

    TEST_CASE("all-zero octaves are degenerate")
    {
        std::vector<double> x(256, 0.0);
        const auto ld = diagram(x);
        for (std::size_t i = 0; i < ld.size(); ++i) {
            CHECK(ld.degenerate[i]);
            CHECK(std::isinf(ld.y[i]));
        }
        CHECK_THROWS_AS(estimate_scaling(ld, 1, ld.max_octave()), AnalysisError);
        CHECK_THROWS_AS(detect_features(ld), AnalysisError);
    }
}

TEST_SUITE("scaling")
{
    TEST_CASE("perfect line")
    {
        LogscaleDiagram ld;
        for (int j = 1; j <= 8; ++j) {
            ld.octaves.push_back(j);
            ld.y.push_back(2.0 + 0.7 * j);
            ld.n_coeffs.push_back(100);
            ld.ci_half.push_back(0.1);
            ld.variance.push_back(0.01);
            ld.degenerate.push_back(false);
        }
        const auto e = estimate_scaling(ld, 1, 8);
        CHECK(e.alpha == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(e.intercept == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(e.fit_quality == doctest::Approx(1.0));
        CHECK(e.hurst == (e.alpha + 1.0) / 2.0);
        CHECK(e.octaves_used == 8);
        CHECK_THROWS_AS(estimate_scaling(ld, 1, 2), AnalysisError);
        CHECK_THROWS_AS(estimate_scaling(ld, 6, 3), AnalysisError);
    }

    TEST_CASE("fGn H=0.8 over octaves 3..10")
    {
        const auto x = gen_fgn(1 << 16, 0.8, 42);
        const auto e = estimate_scaling(diagram(x), 3, 10);
        CHECK(e.alpha == doctest::Approx(0.6).epsilon(0.1 / 0.6));
        CHECK(e.hurst >= 0.75);
        CHECK(e.hurst <= 0.85);
        CHECK(e.hurst == (e.alpha + 1.0) / 2.0);
        CHECK(e.hurst_ci_low < e.hurst);
        CHECK(e.hurst_ci_high > e.hurst);
    }

    TEST_CASE("fGn H=0.5 is white")
    {
        const auto x = gen_fgn(1 << 16, 0.5, 43);
        const auto e = estimate_scaling(diagram(x), 3, 10);
        CHECK(std::abs(e.alpha) <= 0.05);
    }

    TEST_CASE("default range reaches the last well-populated octave")
    {
        const auto ld = diagram(gen_fgn(1 << 16, 0.7, 44));
        const auto [j1, j2] = default_fit_range(ld);
        CHECK(j1 >= kDefaultMinOctave);
        CHECK(j1 <= j2 - 2);
        CHECK(ld.n_coeffs[*ld.index_of(j2)] >= 8);
        if (auto next = ld.index_of(j2 + 1))
            CHECK(ld.n_coeffs[*next] < 8);
    }

    TEST_CASE("default range skips a curved start")
    {
        // Straight from j=6 on, bent below it.
        LogscaleDiagram ld;
        for (int j = 1; j <= 12; ++j) {
            ld.octaves.push_back(j);
            ld.y.push_back(0.6 * j + (j < 6 ? 0.2 * (6 - j) * (6 - j) : 0.0));
            ld.n_coeffs.push_back(std::size_t{1} << (15 - j));
            ld.ci_half.push_back(0.05);
            ld.variance.push_back(1e-4);
            ld.degenerate.push_back(false);
        }
        CHECK(default_fit_range(ld) == std::pair{6, 12});
        CHECK(default_fit_range(ld, 8) == std::pair{8, 12});
        // Never fewer than three octaves, whatever the floor.
        CHECK(default_fit_range(ld, 40) == std::pair{10, 12});
    }

    TEST_CASE("default range on a short series")
    {
        const auto ld = diagram(white(256, 5));
        const auto [j1, j2] = default_fit_range(ld);
        CHECK(j2 - j1 >= 2);
        CHECK_NOTHROW(estimate_scaling(ld, j1, j2));
    }

    TEST_CASE("dilation moves the diagram up one octave")
    {
        const auto x = gen_fgn(1 << 15, 0.8, 45);
        std::vector<double> dilated;
        for (double v : x) {
            dilated.push_back(v);
            dilated.push_back(v);
        }
        const auto a = diagram(x);
        const auto b = diagram(dilated);
        std::vector<double> diff;
        double ci = 0.0;
        for (int j = 3; j <= 9; ++j) {
            diff.push_back(b.y[*b.index_of(j + 1)] - a.y[*a.index_of(j)]);
            ci = std::max(ci, a.ci_half[*a.index_of(j)] + b.ci_half[*b.index_of(j + 1)]);
        }
        const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
        CHECK(*hi - *lo <= ci);
    }
}

TEST_SUITE("features")
{
    TEST_CASE("period of 256 bins gives a bump near octave 8")
    {
        const auto x = as_double(gen_periodic(1 << 16, 256, 5.0, 5.0, 7));
        const auto f = detect_features(diagram(x));
        CHECK(f.kind == SpectrumShape::Bump);
        CHECK(f.octave >= 7);
        CHECK(f.octave <= 9);
    }

    TEST_CASE("fGn H=0.8 increases linearly")
    {
        const auto f = detect_features(diagram(gen_fgn(1 << 16, 0.8, 8)));
        CHECK(f.kind == SpectrumShape::LinearIncrease);
        REQUIRE(f.increase_fit);
        CHECK(f.increase_fit->alpha > 0.2);
    }

    TEST_CASE("amplitude invariance")
    {
        const std::vector<std::vector<double>> inputs{gen_fgn(1 << 14, 0.8, 9), white(1 << 14, 10),
            as_double(gen_periodic(1 << 14, 256, 5.0, 5.0, 11))};
        for (const auto& x : inputs) {
            const auto ref = detect_features(diagram(x));
            for (double c : {0.01, 2.5, 1e4}) {
                std::vector<double> y(x);
                for (auto& v : y)
                    v *= c;
                const auto f = detect_features(diagram(y));
                CHECK(f.kind == ref.kind);
                CHECK(f.octave == ref.octave);
            }
        }
    }

    TEST_CASE("too few octaves")
    {
        CHECK_THROWS_AS(detect_features(diagram(white(100, 1))), AnalysisError);
    }

    TEST_CASE("shape names")
    {
        CHECK(to_string(SpectrumShape::Bump) == "Bump");
        CHECK(to_string(SpectrumShape::LinearIncrease) == "LinearIncrease");
        CHECK(to_string(SpectrumShape::Flat) == "Flat");
        CHECK(to_string(SpectrumShape::Mixed) == "Mixed");
    }
}
