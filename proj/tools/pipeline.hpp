#pragma once

#include "tvtrace/flows.hpp"
#include "tvtrace/ingest.hpp"
#include "tvtrace/session.hpp"
#include "tvtrace/stationarity.hpp"
#include "tvtrace/synth.hpp"
#include "tvtrace/timeseries.hpp"
#include "tvtrace/wavelet.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tvtrace::cli {

namespace fs = std::filesystem;

enum class TrafficKind { Overall, Video };

struct PipelineConfig {
    std::vector<fs::path> inputs;
    MonitoredSet monitored;
    double bin_width = kDefaultBinWidth;
    bool payload_only = true;
    std::vector<Direction> directions{Direction::Upload, Direction::Download};
    std::vector<TrafficKind> kinds{TrafficKind::Overall, TrafficKind::Video};
    HeuristicThresholds thresholds;
    int vanishing_moments = kDefaultVanishingMoments;
    std::optional<int> fit_j1;
    std::optional<int> fit_j2;
    FeatureThresholds features;
    fs::path output_dir = ".";
    std::uint64_t seed = 1;

    /// Canonical text form; the manifest hashes this.
    std::string canonical() const;
};

/// Records every file a command writes; `finish` adds manifest.json.
class OutputSet {
public:
    OutputSet(fs::path dir, std::string command, std::string config_hash);

    void write(const std::string& name, const std::string& content);
    void finish();

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::string command_;
    std::string config_hash_;
    std::vector<std::string> files_;
    std::vector<std::string> digests_;
};

std::string sha256_hex(const std::string& data);

/// Six significant digits, the fixed precision of every report.
std::string format_number(double v);

// ---- per-command results (also written to disk by the run_* functions) ----

struct SummaryResult {
    TraceSummary summary;
    IngestStats stats;
};

struct ClassifyResult {
    SignalingReport report;
    std::vector<SessionLabel> labels;
};

struct QuadrantResult {
    Direction direction = Direction::Download;
    TrafficKind kind = TrafficKind::Overall;
    bool present = false;
    std::string absent_reason;
    TimeSeries series;
    LogscaleDiagram diagram;
    ScalingEstimate estimate;
    SpectrumFeature feature;
};

struct LdiagResult {
    std::vector<QuadrantResult> quadrants;
};

struct StationarityQuadrant {
    Direction direction = Direction::Download;
    TrafficKind kind = TrafficKind::Overall;
    bool present = false;
    std::string absent_reason;
    StationarityReport report;
};

struct StationarityResult {
    std::vector<StationarityQuadrant> quadrants;
};

struct TopflowsResult {
    std::vector<FlowSummary> flows;
    std::size_t rank = 1;
    FlowSummary selected;
    LdiagResult diagrams;
};

SummaryResult run_summary(const PipelineConfig& config);
ClassifyResult run_classify(const PipelineConfig& config);
LdiagResult run_ldiag(const PipelineConfig& config);
StationarityResult run_stationarity(const PipelineConfig& config);
TopflowsResult run_topflows(const PipelineConfig& config, std::size_t rank);

/// Bitrate from explicit inputs; writes bitrate.json and returns Kbps.
double run_bitrate(const PipelineConfig& config, const BitrateInputs& inputs);

/// Bitrate derived from a trace: volume, download fraction and duration from
/// the summary, signaling ratio from the heuristic.
double run_bitrate_from_trace(const PipelineConfig& config, double dead_time);

enum class SynthKind { Mix, Fgn, Periodic, Poisson, FgnTrace, PeriodicTrace, PoissonTrace };

struct SynthOptions {
    SynthKind kind = SynthKind::Mix;
    std::size_t length = 1 << 16;
    double hurst = 0.8;
    double rate = 5.0;
    std::size_t period_bins = 256;
    double amplitude = 5.0;
    double mean = 20.0;    // driver-to-count mapping for fGn traces
    double scale = 5.0;
    std::size_t peers = 4;
    bool pcap = false;     // emit records as pcap instead of CSV
};

/// Writes records.csv/pcap + truth.json for packet kinds, series.csv for series kinds.
void run_synth(const PipelineConfig& config, const SynthOptions& options);

/// Converts inputs to canonical CSV (or pcap); returns ingest stats.
IngestStats run_convert(const PipelineConfig& config, const fs::path& output, bool to_pcap);

std::string_view to_string(TrafficKind k);

} // namespace tvtrace::cli
