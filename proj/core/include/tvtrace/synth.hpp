#pragma once

#include "tvtrace/packet.hpp"
#include "tvtrace/session.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

namespace tvtrace {

/// Exact fractional Gaussian noise (unit variance) by circulant embedding.
/// `length` must be a power of two.
std::vector<double> gen_fgn(std::size_t length, double hurst, std::uint64_t seed);

/// Closed-form fGn autocovariance at integer lag k.
double fgn_autocovariance(double hurst, std::size_t lag);

/// i.i.d. Poisson counts.
std::vector<std::uint64_t> gen_poisson(std::size_t length, double rate, std::uint64_t seed);

/// Poisson counts whose rate is base_rate + amplitude during the first half
/// of every period and base_rate during the second half.
std::vector<std::uint64_t> gen_periodic(std::size_t length, std::size_t period_bins, double base_rate, double amplitude,
    std::uint64_t seed);

enum class SessionRole : std::uint8_t { Video, Signaling };
enum class TimingModel : std::uint8_t { Uniform, Poisson };

/// Inclusive size range on ip_total_len; min == max for a constant size.
struct SizeRange {
    std::uint32_t min = 0;
    std::uint32_t max = 0;
};

struct SessionBlueprint {
    SessionRole role = SessionRole::Video;
    Ipv4Address local_addr;
    std::uint16_t local_port = 0;
    Ipv4Address remote_addr;
    std::uint16_t remote_port = 0;
    Transport transport = Transport::Udp;

    // Large packets are >= 1000 bytes; small ones stay in the < 200 byte regime by default.
    std::size_t large_download = 0;
    std::size_t large_upload = 0;
    std::size_t small_download = 0;
    std::size_t small_upload = 0;
    SizeRange large_size{1000, 1500};
    SizeRange small_size{40, 199};

    TimingModel timing = TimingModel::Uniform;
    double start = 0.0;  // seconds; packets fall in [start, end)
    double end = 0.0;    // 0 means the mix duration

    std::size_t large_packets() const { return large_download + large_upload; }
};

struct SessionMixSpec {
    std::vector<SessionBlueprint> sessions;
    double duration = 60.0;
    std::uint64_t seed = 0;
};

struct SessionMix {
    std::vector<PacketRecord> records;             // time ordered
    std::vector<bool> packet_is_video;             // aligned with records
    std::map<SessionKey, bool> session_is_video;   // authoritative labels

    std::uint64_t video_bytes(Direction d) const;
    std::uint64_t signaling_bytes(Direction d) const;
};

/// Realises the blueprints. Throws AnalysisError for a blueprint whose role
/// disagrees with the large-packet rule (>= 10 packets of >= 1000 bytes means
/// video), or for clashing endpoints.
SessionMix gen_session_mix(const SessionMixSpec& spec);

/// Random but valid mix: a handful of video and signaling sessions between
/// one monitored host and several peers, mixed TCP/UDP.
SessionMixSpec random_mix_spec(std::uint64_t seed);

/// Drives packet arrivals from a count series: for each bin, `counts[i]`
/// large video packets spread over `peers` remote hosts, plus sparse small
/// signaling packets on separate sessions.
struct SeriesTraceSpec {
    std::vector<std::uint64_t> download_counts;
    std::vector<std::uint64_t> upload_counts;
    double bin_width = 0.02;
    Ipv4Address local_addr{10, 0, 0, 1};
    std::size_t peers = 4;
    Transport transport = Transport::Udp;
    double signaling_rate = 0.2;  // small packets per bin per direction
    std::uint64_t seed = 0;
};

SessionMix gen_series_trace(const SeriesTraceSpec& spec);

/// Maps a real-valued driver (e.g. fGn) to non-negative counts:
/// max(0, round(mean + scale * x)).
std::vector<std::uint64_t> counts_from_driver(const std::vector<double>& driver, double mean, double scale);

/// Ground-truth sidecar: {"sessions":[{"key":..,"is_video":..}], "video_packets":N, ...}.
void write_ground_truth_json(std::ostream& out, const SessionMix& mix);

} // namespace tvtrace
