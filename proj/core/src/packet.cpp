#include "tvtrace/packet.hpp"

#include "tvtrace/error.hpp"

#include <algorithm>
#include <charconv>

namespace tvtrace {

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text)
{
    std::uint32_t value = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (p == end || *p != '.')
                return std::nullopt;
            ++p;
        }
        unsigned part = 0;
        auto [next, ec] = std::from_chars(p, end, part);
        if (ec != std::errc{} || next == p || next - p > 3 || part > 255)
            return std::nullopt;
        value = (value << 8) | part;
        p = next;
    }
    if (p != end)
        return std::nullopt;
    return Ipv4Address(value);
}

std::string Ipv4Address::to_string() const
{
    std::string out;
    out.reserve(15);
    for (int shift = 24; shift >= 0; shift -= 8) {
        out += std::to_string((value_ >> shift) & 0xFFu);
        if (shift > 0)
            out += '.';
    }
    return out;
}

std::string_view to_string(Transport t)
{
    return t == Transport::Tcp ? "TCP" : "UDP";
}

std::string_view to_string(Direction d)
{
    return d == Direction::Upload ? "Upload" : "Download";
}

std::optional<Transport> parse_transport(std::string_view text)
{
    if (text == "TCP")
        return Transport::Tcp;
    if (text == "UDP")
        return Transport::Udp;
    return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view text)
{
    if (text == "Upload")
        return Direction::Upload;
    if (text == "Download")
        return Direction::Download;
    return std::nullopt;
}

TraceSummary summarize(std::span<const PacketRecord> records)
{
    if (records.empty())
        throw AnalysisError("empty trace");

    auto [first, last] = std::minmax_element(records.begin(), records.end(),
        [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });

    // [direction][transport]
    std::uint64_t bytes[2][2] = {};
    for (const auto& r : records)
        bytes[static_cast<int>(r.direction)][static_cast<int>(r.transport)] += r.ip_total_len;

    TraceSummary s;
    s.duration = std::chrono::duration<double>(last->timestamp - first->timestamp).count();
    s.packets = records.size();
    s.total_bytes = bytes[0][0] + bytes[0][1] + bytes[1][0] + bytes[1][1];
    if (s.total_bytes == 0)
        return s;

    const auto total = static_cast<double>(s.total_bytes);
    const auto up = static_cast<int>(Direction::Upload);
    const auto down = static_cast<int>(Direction::Download);
    const auto tcp = static_cast<int>(Transport::Tcp);
    const auto udp = static_cast<int>(Transport::Udp);
    s.upload_tcp_fraction = static_cast<double>(bytes[up][tcp]) / total;
    s.upload_udp_fraction = static_cast<double>(bytes[up][udp]) / total;
    s.download_tcp_fraction = static_cast<double>(bytes[down][tcp]) / total;
    s.download_udp_fraction = static_cast<double>(bytes[down][udp]) / total;
    s.upload_fraction = static_cast<double>(bytes[up][tcp] + bytes[up][udp]) / total;
    s.download_fraction = 1.0 - s.upload_fraction;
    return s;
}

} // namespace tvtrace
