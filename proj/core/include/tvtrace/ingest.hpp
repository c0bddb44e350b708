#pragma once

#include "tvtrace/packet.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <vector>

namespace tvtrace {

using MonitoredSet = std::set<Ipv4Address>;

/// Per-file accounting. Every packet read lands in exactly one bucket:
/// total == emitted + the sum of the skip counters.
struct IngestStats {
    std::uint64_t total = 0;
    std::uint64_t emitted = 0;
    std::uint64_t non_ip = 0;
    std::uint64_t ipv6 = 0;
    std::uint64_t non_tcp_udp = 0;
    std::uint64_t fragments = 0;
    std::uint64_t third_party = 0;
    std::uint64_t truncated = 0;

    std::uint64_t skipped() const
    {
        return non_ip + ipv6 + non_tcp_udp + fragments + third_party + truncated;
    }
};

struct IngestResult {
    std::vector<PacketRecord> records;  // sorted by timestamp, rebased to the first accepted packet
    IngestStats stats;
};

/// Classic libpcap capture (either byte order, micro- or nanosecond
/// timestamps), Ethernet link layer. Throws InputError on a bad file header.
/// With `rebase` false timestamps stay absolute (for merging several files).
IngestResult read_pcap(const std::filesystem::path& path, const MonitoredSet& monitored, bool rebase = true);
IngestResult read_pcap(std::istream& in, const MonitoredSet& monitored, bool rebase = true);

/// Writes synthetic Ethernet/IPv4 frames realising each record's header
/// fields (payload bytes are zero). Reading the file back with the matching
/// monitored set reproduces the records.
void write_pcap(const std::filesystem::path& path, std::span<const PacketRecord> records);
void write_pcap(std::ostream& out, std::span<const PacketRecord> records);

inline constexpr const char* kRecordsCsvHeader =
    "timestamp,src_addr,src_port,dst_addr,dst_port,transport,ip_total_len,payload_len,direction";

/// Canonical record CSV. Records come back in file order; errors name the line.
std::vector<PacketRecord> read_records_csv(const std::filesystem::path& path);
std::vector<PacketRecord> read_records_csv(std::istream& in);

void write_records_csv(const std::filesystem::path& path, std::span<const PacketRecord> records);
void write_records_csv(std::ostream& out, std::span<const PacketRecord> records);

/// Loads and merges one or more files (.csv by extension, pcap otherwise)
/// into a single time-ordered trace rebased to its earliest packet.
IngestResult load_trace(std::span<const std::filesystem::path> paths, const MonitoredSet& monitored);

} // namespace tvtrace
