#include "tvtrace/stationarity.hpp"

#include "tvtrace/error.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <ostream>

namespace tvtrace {

namespace {

std::size_t part_length(std::size_t total, int vanishing_moments)
{
    const std::size_t need = min_series_length(vanishing_moments);
    if (total < 3 * need)
        throw AnalysisError("series too short to split in three: " + std::to_string(total) + " bins, need at least " +
                            std::to_string(3 * need));
    return total / 3;
}

bool overlap(const LogscaleDiagram& a, std::size_t ia, const LogscaleDiagram& b, std::size_t ib)
{
    return a.y[ia] - a.ci_half[ia] <= b.y[ib] + b.ci_half[ib] && b.y[ib] - b.ci_half[ib] <= a.y[ia] + a.ci_half[ia];
}

} // namespace

std::array<TimeSeries, 3> split_thirds(const TimeSeries& series, int vanishing_moments)
{
    const std::size_t n = part_length(series.size(), vanishing_moments);
    std::array<TimeSeries, 3> parts;
    for (std::size_t p = 0; p < 3; ++p) {
        parts[p].bin_width = series.bin_width;
        parts[p].start = series.start + static_cast<double>(p * n) * series.bin_width;
        const auto first = series.counts.begin() + static_cast<std::ptrdiff_t>(p * n);
        parts[p].counts.assign(first, first + static_cast<std::ptrdiff_t>(n));
    }
    return parts;
}

std::array<std::vector<double>, 3> split_thirds(std::span<const double> series, int vanishing_moments)
{
    const std::size_t n = part_length(series.size(), vanishing_moments);
    std::array<std::vector<double>, 3> parts;
    for (std::size_t p = 0; p < 3; ++p) {
        const auto sub = series.subspan(p * n, n);
        parts[p].assign(sub.begin(), sub.end());
    }
    return parts;
}

StationarityReport compare_diagrams(std::array<LogscaleDiagram, 3> diagrams)
{
    StationarityReport rep;
    rep.diagrams = std::move(diagrams);
    const auto& d = rep.diagrams;
    for (int j : d[0].octaves) {
        const auto i1 = d[1].index_of(j);
        const auto i2 = d[2].index_of(j);
        if (!i1 || !i2)
            continue;
        const std::size_t idx[3] = {*d[0].index_of(j), *i1, *i2};
        bool ok = true;
        for (int a = 0; a < 3 && ok; ++a) {
            for (int b = a + 1; b < 3 && ok; ++b) {
                if (d[a].degenerate[idx[a]] || d[b].degenerate[idx[b]])
                    ok = d[a].degenerate[idx[a]] && d[b].degenerate[idx[b]];
                else
                    ok = overlap(d[a], idx[a], d[b], idx[b]);
            }
        }
        rep.octaves.push_back(j);
        rep.agree.push_back(ok);
    }

    rep.stationary_up_to = 0;
    for (std::size_t i = 0; i < rep.octaves.size() && rep.agree[i]; ++i)
        rep.stationary_up_to = rep.octaves[i];
    return rep;
}

StationarityReport compare_parts(const std::array<std::vector<double>, 3>& parts, double bin_width,
    int vanishing_moments)
{
    for (std::size_t p = 0; p < 3; ++p) {
        if (parts[p].size() < min_series_length(vanishing_moments))
            throw AnalysisError("part " + std::to_string(p + 1) + " too short for wavelet analysis: " +
                                std::to_string(parts[p].size()) + " bins, need at least " +
                                std::to_string(min_series_length(vanishing_moments)));
    }

    std::array<std::future<LogscaleDiagram>, 3> pending;
    for (std::size_t p = 0; p < 3; ++p) {
        pending[p] = std::async(std::launch::async, [&, p] {
            return logscale_diagram(dwt_details(parts[p], vanishing_moments), bin_width);
        });
    }
    std::array<LogscaleDiagram, 3> diagrams;
    for (std::size_t p = 0; p < 3; ++p)
        diagrams[p] = pending[p].get();
    return compare_diagrams(std::move(diagrams));
}

StationarityReport compare_parts(const std::array<TimeSeries, 3>& parts, int vanishing_moments)
{
    std::array<std::vector<double>, 3> values;
    for (std::size_t p = 0; p < 3; ++p)
        values[p] = parts[p].values();
    return compare_parts(values, parts[0].bin_width, vanishing_moments);
}

void write_overlay_csv(std::ostream& out, const StationarityReport& report)
{
    out << "octave,y1,y2,y3,ci1,ci2,ci3\n";
    char buf[64];
    for (int j : report.octaves) {
        out << j;
        for (const auto& d : report.diagrams) {
            std::snprintf(buf, sizeof buf, ",%.6g", d.y[*d.index_of(j)]);
            out << buf;
        }
        for (const auto& d : report.diagrams) {
            std::snprintf(buf, sizeof buf, ",%.6g", d.ci_half[*d.index_of(j)]);
            out << buf;
        }
        out << '\n';
    }
}

} // namespace tvtrace
