#pragma once

#include "tvtrace/packet.hpp"
#include "tvtrace/session.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace tvtrace {

/// Download volume from one remote peer, all of its ports pooled.
struct FlowSummary {
    Ipv4Address remote_addr;
    std::uint64_t bytes = 0;
    std::uint64_t packets = 0;
    std::uint64_t video_bytes = 0;
    std::uint64_t video_packets = 0;

    double megabytes() const { return static_cast<double>(bytes) / (1024.0 * 1024.0); }
    double video_megabytes() const { return static_cast<double>(video_bytes) / (1024.0 * 1024.0); }
    std::uint64_t signaling_packets() const { return packets - video_packets; }
};

/// Bytes descending, address ascending on ties. Throws AnalysisError when
/// there is no download traffic.
std::vector<FlowSummary> rank_download_flows(std::span<const PacketRecord> records,
    std::span<const SessionLabel> labels, const HeuristicThresholds& thresholds = {});

/// Download records sent by `remote`, in input order. Throws AnalysisError
/// when the address sent nothing.
std::vector<PacketRecord> flow_records(std::span<const PacketRecord> records, Ipv4Address remote);

/// `rank,remote_addr,bytes,packets,video_bytes,video_packets`, rank from 1.
void write_flows_csv(std::ostream& out, std::span<const FlowSummary> flows);

} // namespace tvtrace
