#pragma once

#include "tvtrace/packet.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tvtrace {

/// Direction-agnostic conversation identity: the (address, port) endpoint
/// pair in canonical order plus the transport protocol.
struct SessionKey {
    Ipv4Address addr_lo;
    std::uint16_t port_lo = 0;
    Ipv4Address addr_hi;
    std::uint16_t port_hi = 0;
    Transport transport = Transport::Tcp;

    static SessionKey of(const PacketRecord& r);
    std::string to_string() const;

    friend auto operator<=>(const SessionKey&, const SessionKey&) = default;
};

/// Video/signaling split thresholds. Defaults: a packet is large at
/// ip_total_len >= 1000 bytes; a session is video with >= 10 large packets.
struct HeuristicThresholds {
    std::uint32_t large_packet_bytes = 1000;
    std::size_t min_large_packets = 10;
};

struct SessionLabel {
    SessionKey key;
    std::size_t large_packet_count = 0;
    bool is_video = false;
    std::size_t packets = 0;
    std::uint64_t bytes = 0;
};

using SessionMap = std::map<SessionKey, std::vector<PacketRecord>>;

SessionMap group_sessions(std::span<const PacketRecord> records);

std::vector<SessionLabel> classify_sessions(const SessionMap& sessions, const HeuristicThresholds& thresholds = {});

/// Convenience: group then classify.
std::vector<SessionLabel> classify_records(std::span<const PacketRecord> records,
    const HeuristicThresholds& thresholds = {});

/// True for a packet the heuristic keeps as video: a large packet inside a
/// video session.
bool is_video_packet(const PacketRecord& r, bool session_is_video, const HeuristicThresholds& thresholds);

struct TrafficSplit {
    std::vector<PacketRecord> video;
    std::vector<PacketRecord> signaling;
};

/// Partitions records into video and its signaling complement, order
/// preserved. Throws AnalysisError for a record whose session has no label.
TrafficSplit split_traffic(std::span<const PacketRecord> records, std::span<const SessionLabel> labels,
    const HeuristicThresholds& thresholds = {});

std::vector<PacketRecord> filter_video(std::span<const PacketRecord> records, std::span<const SessionLabel> labels,
    const HeuristicThresholds& thresholds = {});

/// Signaling byte ratios. A direction that carried no bytes has no ratio
/// (nullopt) rather than a 0/0.
struct SignalingReport {
    std::optional<double> total_ratio;
    std::optional<double> upload_ratio;
    std::optional<double> download_ratio;

    std::uint64_t upload_bytes = 0;
    std::uint64_t download_bytes = 0;
    std::uint64_t upload_signaling_bytes = 0;
    std::uint64_t download_signaling_bytes = 0;
};

SignalingReport signaling_report(std::span<const PacketRecord> records, std::span<const SessionLabel> labels,
    const HeuristicThresholds& thresholds = {});

struct BitrateInputs {
    double total_megabytes = 0.0;  // 2^20-byte megabytes
    double download_fraction = 0.0;
    double download_signaling_ratio = 0.0;
    double duration = 0.0;   // seconds
    double dead_time = 0.0;  // seconds without any video delivery
};

/// Average downloaded video rate in Kbps (1 Kbps = 1024 bit/s):
/// MB * 2^20 * 8 * download_fraction * (1 - signaling) / (duration - dead_time) / 1024.
double video_bitrate_kbps(const BitrateInputs& in);

} // namespace tvtrace
