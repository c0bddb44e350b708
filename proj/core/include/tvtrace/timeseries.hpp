#pragma once

#include "tvtrace/packet.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tvtrace {

inline constexpr double kDefaultBinWidth = 0.02;

/// Packet-arrival counts in fixed-width bins. Bin i covers
/// [start + i*bin_width, start + (i+1)*bin_width).
struct TimeSeries {
    double bin_width = kDefaultBinWidth;  // seconds
    double start = 0.0;                   // seconds, time of the first counted packet
    std::vector<std::uint64_t> counts;

    std::size_t size() const { return counts.size(); }
    std::uint64_t total() const;
    std::vector<double> values() const;
};

struct BinSelection {
    Direction direction = Direction::Download;
    /// Drop TCP packets without payload (bare acknowledgments). UDP is always kept.
    bool payload_only = true;
};

/// Bins the selected packets, anchored at the first selected packet. Bin
/// widths are resolved to whole microseconds. Throws AnalysisError("empty
/// series") when nothing matches the selection.
TimeSeries bin_counts(std::span<const PacketRecord> records, double bin_width, const BinSelection& selection);

/// Sums adjacent pairs of bins (a missing trailing partner counts as zero).
TimeSeries aggregate_pairs(const TimeSeries& series);

/// `bin_index,count` with a leading `#` comment line carrying metadata.
void write_series_csv(std::ostream& out, const TimeSeries& series, const std::string& comment);

} // namespace tvtrace
