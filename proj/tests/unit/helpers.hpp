#pragma once

#include "tvtrace/packet.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace testing {

using namespace tvtrace;

inline const Ipv4Address kLocal{10, 0, 0, 1};

inline PacketRecord pkt(double t, Direction dir, std::uint32_t len, Transport tr = Transport::Udp,
    Ipv4Address remote = Ipv4Address{192, 168, 1, 2}, std::uint16_t local_port = 4000,
    std::uint16_t remote_port = 5000)
{
    PacketRecord r;
    r.timestamp = Timestamp{static_cast<std::int64_t>(t * 1e6 + (t >= 0 ? 0.5 : -0.5))};
    r.transport = tr;
    r.direction = dir;
    r.ip_total_len = len;
    const std::uint32_t hdr = 20 + (tr == Transport::Udp ? 8 : 20);
    r.payload_len = len > hdr ? len - hdr : 0;
    if (dir == Direction::Upload) {
        r.src_addr = kLocal;
        r.src_port = local_port;
        r.dst_addr = remote;
        r.dst_port = remote_port;
    } else {
        r.src_addr = remote;
        r.src_port = remote_port;
        r.dst_addr = kLocal;
        r.dst_port = local_port;
    }
    return r;
}

/// A few hundred packets over a handful of peers, both transports and directions.
inline std::vector<PacketRecord> random_trace(std::uint64_t seed, std::size_t n = 400)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> gap(0.0, 0.05);
    std::uniform_int_distribution<int> peer(1, 6), coin(0, 1), small(40, 199), large(1000, 1500);
    std::vector<PacketRecord> out;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t += gap(rng);
        const int p = peer(rng);
        const auto dir = coin(rng) ? Direction::Upload : Direction::Download;
        const auto tr = p % 2 ? Transport::Udp : Transport::Tcp;
        const std::uint32_t len = coin(rng) ? large(rng) : small(rng);
        out.push_back(pkt(t, dir, len, tr, Ipv4Address{58, 40, 0, static_cast<std::uint8_t>(p)},
            static_cast<std::uint16_t>(4000 + p % 3), 8000));
    }
    return out;
}

} // namespace testing
