#pragma once

#include "tvtrace/timeseries.hpp"
#include "tvtrace/wavelet.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace tvtrace {

/// Three contiguous equal parts; up to two trailing bins are dropped.
std::array<TimeSeries, 3> split_thirds(const TimeSeries& series, int vanishing_moments = kDefaultVanishingMoments);
std::array<std::vector<double>, 3> split_thirds(std::span<const double> series,
    int vanishing_moments = kDefaultVanishingMoments);

struct StationarityReport {
    std::array<LogscaleDiagram, 3> diagrams;
    std::vector<int> octaves;  // octaves present in all three diagrams
    std::vector<bool> agree;   // aligned with octaves: all three CIs mutually overlap
    /// Largest j with agreement at every octave <= j; 0 when the first octave already disagrees.
    int stationary_up_to = 0;

    int max_octave() const { return octaves.empty() ? 0 : octaves.back(); }
    bool fully_stationary() const { return stationary_up_to == max_octave(); }
};

StationarityReport compare_parts(const std::array<std::vector<double>, 3>& parts, double bin_width,
    int vanishing_moments = kDefaultVanishingMoments);
StationarityReport compare_parts(const std::array<TimeSeries, 3>& parts,
    int vanishing_moments = kDefaultVanishingMoments);

/// Agreement rule on already-built diagrams.
StationarityReport compare_diagrams(std::array<LogscaleDiagram, 3> diagrams);

/// `octave,y1,y2,y3,ci1,ci2,ci3`
void write_overlay_csv(std::ostream& out, const StationarityReport& report);

} // namespace tvtrace
