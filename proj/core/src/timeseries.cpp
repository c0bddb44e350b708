#include "tvtrace/timeseries.hpp"

#include "tvtrace/error.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

namespace tvtrace {

std::uint64_t TimeSeries::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<double> TimeSeries::values() const
{
    return {counts.begin(), counts.end()};
}

namespace {

bool selected(const PacketRecord& r, const BinSelection& sel)
{
    if (r.direction != sel.direction)
        return false;
    return !(sel.payload_only && r.transport == Transport::Tcp && r.payload_len == 0);
}

} // namespace

TimeSeries bin_counts(std::span<const PacketRecord> records, double bin_width, const BinSelection& selection)
{
    if (!(bin_width > 0.0))
        throw AnalysisError("bin width must be positive");
    const std::int64_t bin_us = std::llround(bin_width * 1e6);
    if (bin_us < 1)
        throw AnalysisError("bin width below one microsecond");

    bool any = false;
    Timestamp first{0};
    Timestamp last{0};
    for (const auto& r : records) {
        if (!selected(r, selection))
            continue;
        if (!any || r.timestamp < first)
            first = r.timestamp;
        if (!any || r.timestamp > last)
            last = r.timestamp;
        any = true;
    }
    if (!any)
        throw AnalysisError("empty series");

    TimeSeries series;
    series.bin_width = static_cast<double>(bin_us) * 1e-6;
    series.start = std::chrono::duration<double>(first).count();
    series.counts.assign(static_cast<std::size_t>((last - first).count() / bin_us) + 1, 0);
    for (const auto& r : records) {
        if (selected(r, selection))
            ++series.counts[static_cast<std::size_t>((r.timestamp - first).count() / bin_us)];
    }
    return series;
}

TimeSeries aggregate_pairs(const TimeSeries& series)
{
    TimeSeries out;
    out.bin_width = series.bin_width * 2.0;
    out.start = series.start;
    out.counts.assign((series.counts.size() + 1) / 2, 0);
    for (std::size_t i = 0; i < series.counts.size(); ++i)
        out.counts[i / 2] += series.counts[i];
    return out;
}

void write_series_csv(std::ostream& out, const TimeSeries& series, const std::string& comment)
{
    out << "# bin_width=" << series.bin_width << " start=" << series.start;
    if (!comment.empty())
        out << ' ' << comment;
    out << "\nbin_index,count\n";
    for (std::size_t i = 0; i < series.counts.size(); ++i)
        out << i << ',' << series.counts[i] << '\n';
}

} // namespace tvtrace
