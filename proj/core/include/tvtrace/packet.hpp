#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace tvtrace {

class Ipv4Address {
public:
    constexpr Ipv4Address() = default;
    constexpr explicit Ipv4Address(std::uint32_t host_order) : value_(host_order) {}
    constexpr Ipv4Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d)
    {
    }

    /// Dotted-quad parse; nullopt on anything else.
    static std::optional<Ipv4Address> parse(std::string_view text);

    constexpr std::uint32_t value() const { return value_; }
    std::string to_string() const;

    friend constexpr auto operator<=>(Ipv4Address, Ipv4Address) = default;

private:
    std::uint32_t value_ = 0;
};

enum class Transport : std::uint8_t { Tcp, Udp };
enum class Direction : std::uint8_t { Upload, Download };

std::string_view to_string(Transport t);
std::string_view to_string(Direction d);
std::optional<Transport> parse_transport(std::string_view text);
std::optional<Direction> parse_direction(std::string_view text);

using Timestamp = std::chrono::microseconds;

struct PacketRecord {
    Timestamp timestamp{0};  // since trace start
    Ipv4Address src_addr;
    std::uint16_t src_port = 0;
    Ipv4Address dst_addr;
    std::uint16_t dst_port = 0;
    Transport transport = Transport::Tcp;
    std::uint32_t ip_total_len = 0;  // all size thresholds and byte accounting use this
    std::uint32_t payload_len = 0;
    Direction direction = Direction::Upload;

    double seconds() const { return std::chrono::duration<double>(timestamp).count(); }
    /// The peer on the far side of the monitored host.
    Ipv4Address remote_addr() const { return direction == Direction::Upload ? dst_addr : src_addr; }

    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Byte breakdown of a trace. All fractions are relative to total_bytes,
/// so tcp+udp within a direction sum to that direction's fraction.
struct TraceSummary {
    double duration = 0.0;  // seconds
    std::uint64_t total_bytes = 0;
    std::uint64_t packets = 0;
    double upload_fraction = 0.0;
    double download_fraction = 0.0;
    double upload_tcp_fraction = 0.0;
    double upload_udp_fraction = 0.0;
    double download_tcp_fraction = 0.0;
    double download_udp_fraction = 0.0;

    double total_megabytes() const { return static_cast<double>(total_bytes) / (1024.0 * 1024.0); }
};

/// Throws AnalysisError("empty trace") on an empty input.
TraceSummary summarize(std::span<const PacketRecord> records);

} // namespace tvtrace
