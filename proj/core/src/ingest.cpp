#include "tvtrace/ingest.hpp"

#include "tvtrace/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace tvtrace {

namespace {

constexpr std::uint32_t kMagicMicro = 0xA1B2C3D4;
constexpr std::uint32_t kMagicNano = 0xA1B23C4D;
constexpr std::uint32_t kLinkEthernet = 1;

constexpr std::uint16_t kEtherIpv4 = 0x0800;
constexpr std::uint16_t kEtherIpv6 = 0x86DD;
constexpr std::uint16_t kEtherVlan = 0x8100;
constexpr std::uint16_t kEtherQinQ = 0x88A8;

constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

constexpr std::size_t kEthernetHeader = 14;
constexpr std::size_t kIpv4Header = 20;
constexpr std::size_t kTcpHeader = 20;
constexpr std::size_t kUdpHeader = 8;

std::uint32_t bswap32(std::uint32_t v)
{
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

std::uint32_t load_le32(const unsigned char* p)
{
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

std::uint16_t load_be16(const unsigned char* p)
{
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t load_be32(const unsigned char* p)
{
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

void store_le32(unsigned char* p, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void store_be16(unsigned char* p, std::uint16_t v)
{
    p[0] = static_cast<unsigned char>(v >> 8);
    p[1] = static_cast<unsigned char>(v);
}

void store_be32(unsigned char* p, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        p[i] = static_cast<unsigned char>(v >> (24 - 8 * i));
}

bool read_exact(std::istream& in, unsigned char* buf, std::size_t n)
{
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

enum class FrameVerdict { Accepted, NonIp, Ipv6, NonTcpUdp, Fragment, ThirdParty, Truncated };

struct ParsedFrame {
    FrameVerdict verdict = FrameVerdict::Truncated;
    PacketRecord record;
};

ParsedFrame parse_frame(std::span<const unsigned char> frame, const MonitoredSet& monitored)
{
    ParsedFrame out;
    if (frame.size() < kEthernetHeader)
        return out;

    std::size_t off = 12;
    std::uint16_t ethertype = load_be16(&frame[off]);
    while (ethertype == kEtherVlan || ethertype == kEtherQinQ) {
        off += 4;
        if (frame.size() < off + 2)
            return out;
        ethertype = load_be16(&frame[off]);
    }
    off += 2;

    if (ethertype == kEtherIpv6) {
        out.verdict = FrameVerdict::Ipv6;
        return out;
    }
    if (ethertype != kEtherIpv4) {
        out.verdict = FrameVerdict::NonIp;
        return out;
    }
    if (frame.size() < off + kIpv4Header)
        return out;

    const unsigned char* ip = &frame[off];
    if ((ip[0] >> 4) != 4) {
        out.verdict = FrameVerdict::NonIp;
        return out;
    }
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0F) * 4;
    if (ihl < kIpv4Header || frame.size() < off + ihl)
        return out;

    const std::uint16_t total_len = load_be16(ip + 2);
    const std::uint16_t frag = load_be16(ip + 6);
    const std::uint8_t proto = ip[9];
    if (proto != kProtoTcp && proto != kProtoUdp) {
        out.verdict = FrameVerdict::NonTcpUdp;
        return out;
    }
    if ((frag & 0x1FFF) != 0) {
        out.verdict = FrameVerdict::Fragment;
        return out;
    }

    PacketRecord& r = out.record;
    r.src_addr = Ipv4Address(load_be32(ip + 12));
    r.dst_addr = Ipv4Address(load_be32(ip + 16));
    if (monitored.contains(r.src_addr)) {
        r.direction = Direction::Upload;
    } else if (monitored.contains(r.dst_addr)) {
        r.direction = Direction::Download;
    } else {
        out.verdict = FrameVerdict::ThirdParty;
        return out;
    }

    const unsigned char* l4 = ip + ihl;
    const std::size_t l4_avail = frame.size() - off - ihl;
    std::size_t l4_header = 0;
    if (proto == kProtoTcp) {
        if (l4_avail < kTcpHeader)
            return out;
        r.transport = Transport::Tcp;
        l4_header = static_cast<std::size_t>(l4[12] >> 4) * 4;
        if (l4_header < kTcpHeader)
            return out;
    } else {
        if (l4_avail < kUdpHeader)
            return out;
        r.transport = Transport::Udp;
        l4_header = kUdpHeader;
    }
    if (total_len < ihl + l4_header)
        return out;

    r.src_port = load_be16(l4);
    r.dst_port = load_be16(l4 + 2);
    r.ip_total_len = total_len;
    r.payload_len = static_cast<std::uint32_t>(total_len - ihl - l4_header);
    out.verdict = FrameVerdict::Accepted;
    return out;
}

void tally(IngestStats& stats, FrameVerdict v)
{
    switch (v) {
    case FrameVerdict::Accepted: ++stats.emitted; break;
    case FrameVerdict::NonIp: ++stats.non_ip; break;
    case FrameVerdict::Ipv6: ++stats.ipv6; break;
    case FrameVerdict::NonTcpUdp: ++stats.non_tcp_udp; break;
    case FrameVerdict::Fragment: ++stats.fragments; break;
    case FrameVerdict::ThirdParty: ++stats.third_party; break;
    case FrameVerdict::Truncated: ++stats.truncated; break;
    }
}

void rebase_and_sort(std::vector<PacketRecord>& records)
{
    if (records.empty())
        return;
    std::stable_sort(records.begin(), records.end(),
        [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
    const Timestamp origin = records.front().timestamp;
    for (auto& r : records)
        r.timestamp -= origin;
}

std::string_view trim_cr(std::string_view s)
{
    if (!s.empty() && s.back() == '\r')
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void csv_error(std::size_t line, const std::string& what)
{
    throw InputError("line " + std::to_string(line) + ": " + what);
}

template <typename Int>
Int parse_int_field(std::string_view field, std::size_t line, std::string_view name)
{
    Int value{};
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || p != field.data() + field.size())
        csv_error(line, "bad " + std::string(name) + " '" + std::string(field) + "'");
    return value;
}

Timestamp parse_timestamp_field(std::string_view field, std::size_t line)
{
    double seconds = 0.0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), seconds);
    if (ec != std::errc{} || p != field.data() + field.size() || !std::isfinite(seconds) || seconds < 0.0)
        csv_error(line, "bad timestamp '" + std::string(field) + "'");
    return Timestamp(std::llround(seconds * 1e6));
}

} // namespace

IngestResult read_pcap(std::istream& in, const MonitoredSet& monitored, bool rebase)
{
    if (monitored.empty())
        throw InputError("monitored address set is empty");

    std::array<unsigned char, 24> header{};
    if (!read_exact(in, header.data(), header.size()))
        throw InputError("pcap: file shorter than the 24-byte global header");

    const std::uint32_t raw_magic = load_le32(header.data());
    bool swapped = false;
    bool nanos = false;
    if (raw_magic == kMagicMicro || raw_magic == kMagicNano) {
        nanos = raw_magic == kMagicNano;
    } else if (bswap32(raw_magic) == kMagicMicro || bswap32(raw_magic) == kMagicNano) {
        swapped = true;
        nanos = bswap32(raw_magic) == kMagicNano;
    } else {
        throw InputError("pcap: unrecognised magic number (pcapng is not supported)");
    }
    auto field32 = [swapped](const unsigned char* p) {
        const std::uint32_t v = load_le32(p);
        return swapped ? bswap32(v) : v;
    };
    const std::uint32_t linktype = field32(header.data() + 20);
    if ((linktype & 0x0FFFFFFF) != kLinkEthernet)
        throw InputError("pcap: unsupported link type " + std::to_string(linktype) + " (Ethernet required)");

    IngestResult result;
    std::vector<unsigned char> frame;
    std::array<unsigned char, 16> rec{};
    for (;;) {
        in.read(reinterpret_cast<char*>(rec.data()), rec.size());
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0)
            break;
        ++result.stats.total;
        if (got < rec.size()) {
            ++result.stats.truncated;
            break;
        }
        const std::uint64_t ts_sec = field32(rec.data());
        const std::uint64_t ts_frac = field32(rec.data() + 4);
        const std::uint32_t incl_len = field32(rec.data() + 8);
        if (incl_len > (1u << 24)) {
            // Corrupt length field; nothing after it can be trusted.
            ++result.stats.truncated;
            break;
        }
        frame.resize(incl_len);
        if (!read_exact(in, frame.data(), incl_len)) {
            ++result.stats.truncated;
            break;
        }

        auto parsed = parse_frame(frame, monitored);
        tally(result.stats, parsed.verdict);
        if (parsed.verdict != FrameVerdict::Accepted)
            continue;
        const std::uint64_t micros = nanos ? (ts_frac + 500) / 1000 : ts_frac;
        parsed.record.timestamp = Timestamp(static_cast<std::int64_t>(ts_sec * 1'000'000 + micros));
        result.records.push_back(parsed.record);
    }

    if (rebase)
        rebase_and_sort(result.records);
    return result;
}

IngestResult read_pcap(const std::filesystem::path& path, const MonitoredSet& monitored, bool rebase)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path.string());
    return read_pcap(in, monitored, rebase);
}

void write_pcap(std::ostream& out, std::span<const PacketRecord> records)
{
    std::array<unsigned char, 24> header{};
    store_le32(header.data(), kMagicMicro);
    header[4] = 2;  // version 2.4, little endian
    header[6] = 4;
    store_le32(header.data() + 16, 65535);
    store_le32(header.data() + 20, kLinkEthernet);
    out.write(reinterpret_cast<const char*>(header.data()), header.size());

    std::vector<unsigned char> frame;
    for (const auto& r : records) {
        const std::size_t l4_header = r.ip_total_len >= kIpv4Header + r.payload_len
                                          ? r.ip_total_len - kIpv4Header - r.payload_len
                                          : 0;
        const bool representable = r.transport == Transport::Udp
                                       ? l4_header == kUdpHeader
                                       : l4_header >= kTcpHeader && l4_header <= 60 && l4_header % 4 == 0;
        if (!representable || r.ip_total_len > 0xFFFF || r.timestamp.count() < 0)
            throw InputError("record at t=" + std::to_string(r.timestamp.count()) +
                             "us cannot be encoded as an IPv4 frame");

        frame.assign(kEthernetHeader + r.ip_total_len, 0);
        frame[5] = 0x01;  // arbitrary locally administered MACs
        frame[11] = 0x02;
        frame[0] = frame[6] = 0x02;
        store_be16(&frame[12], kEtherIpv4);

        unsigned char* ip = &frame[kEthernetHeader];
        ip[0] = 0x45;
        store_be16(ip + 2, static_cast<std::uint16_t>(r.ip_total_len));
        ip[8] = 64;
        ip[9] = r.transport == Transport::Tcp ? kProtoTcp : kProtoUdp;
        store_be32(ip + 12, r.src_addr.value());
        store_be32(ip + 16, r.dst_addr.value());
        std::uint32_t sum = 0;
        for (std::size_t i = 0; i < kIpv4Header; i += 2)
            sum += load_be16(ip + i);
        while (sum >> 16)
            sum = (sum & 0xFFFF) + (sum >> 16);
        store_be16(ip + 10, static_cast<std::uint16_t>(~sum));

        unsigned char* l4 = ip + kIpv4Header;
        store_be16(l4, r.src_port);
        store_be16(l4 + 2, r.dst_port);
        if (r.transport == Transport::Tcp) {
            l4[12] = static_cast<unsigned char>((l4_header / 4) << 4);
            l4[13] = 0x10;  // ACK
            store_be16(l4 + 14, 65535);
        } else {
            store_be16(l4 + 4, static_cast<std::uint16_t>(kUdpHeader + r.payload_len));
        }

        std::array<unsigned char, 16> rec{};
        const auto micros = static_cast<std::uint64_t>(r.timestamp.count());
        store_le32(rec.data(), static_cast<std::uint32_t>(micros / 1'000'000));
        store_le32(rec.data() + 4, static_cast<std::uint32_t>(micros % 1'000'000));
        store_le32(rec.data() + 8, static_cast<std::uint32_t>(frame.size()));
        store_le32(rec.data() + 12, static_cast<std::uint32_t>(frame.size()));
        out.write(reinterpret_cast<const char*>(rec.data()), rec.size());
        out.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    }
    if (!out)
        throw InputError("pcap: write failed");
}

void write_pcap(const std::filesystem::path& path, std::span<const PacketRecord> records)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot create " + path.string());
    write_pcap(out, records);
}

std::vector<PacketRecord> read_records_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw InputError("line 1: missing header");
    if (trim_cr(line) != kRecordsCsvHeader)
        throw InputError(std::string("line 1: expected header '") + kRecordsCsvHeader + "'");

    std::vector<PacketRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = trim_cr(line);
        if (text.empty())
            continue;

        std::array<std::string_view, 9> f;
        std::size_t n = 0;
        std::size_t pos = 0;
        for (;;) {
            const std::size_t comma = text.find(',', pos);
            if (n == f.size())
                csv_error(lineno, "too many columns");
            f[n++] = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
            if (comma == std::string_view::npos)
                break;
            pos = comma + 1;
        }
        if (n != f.size())
            csv_error(lineno, "expected 9 columns, found " + std::to_string(n));

        PacketRecord r;
        r.timestamp = parse_timestamp_field(f[0], lineno);
        auto src = Ipv4Address::parse(f[1]);
        if (!src)
            csv_error(lineno, "bad src_addr '" + std::string(f[1]) + "'");
        r.src_addr = *src;
        r.src_port = parse_int_field<std::uint16_t>(f[2], lineno, "src_port");
        auto dst = Ipv4Address::parse(f[3]);
        if (!dst)
            csv_error(lineno, "bad dst_addr '" + std::string(f[3]) + "'");
        r.dst_addr = *dst;
        r.dst_port = parse_int_field<std::uint16_t>(f[4], lineno, "dst_port");
        auto transport = parse_transport(f[5]);
        if (!transport)
            csv_error(lineno, "bad transport '" + std::string(f[5]) + "' (TCP or UDP)");
        r.transport = *transport;
        r.ip_total_len = parse_int_field<std::uint32_t>(f[6], lineno, "ip_total_len");
        r.payload_len = parse_int_field<std::uint32_t>(f[7], lineno, "payload_len");
        if (r.payload_len > r.ip_total_len)
            csv_error(lineno, "payload_len exceeds ip_total_len");
        auto direction = parse_direction(f[8]);
        if (!direction)
            csv_error(lineno, "bad direction '" + std::string(f[8]) + "' (Upload or Download)");
        r.direction = *direction;
        records.push_back(r);
    }
    return records;
}

std::vector<PacketRecord> read_records_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    return read_records_csv(in);
}

void write_records_csv(std::ostream& out, std::span<const PacketRecord> records)
{
    out << kRecordsCsvHeader << '\n';
    std::array<char, 32> ts{};
    for (const auto& r : records) {
        const auto micros = r.timestamp.count();
        const auto len = std::snprintf(ts.data(), ts.size(), "%lld.%06lld",
            static_cast<long long>(micros / 1'000'000), static_cast<long long>(micros % 1'000'000));
        out.write(ts.data(), len);
        out << ',' << r.src_addr.to_string() << ',' << r.src_port << ',' << r.dst_addr.to_string() << ','
            << r.dst_port << ',' << to_string(r.transport) << ',' << r.ip_total_len << ',' << r.payload_len << ','
            << to_string(r.direction) << '\n';
    }
}

void write_records_csv(const std::filesystem::path& path, std::span<const PacketRecord> records)
{
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot create " + path.string());
    write_records_csv(out, records);
    if (!out)
        throw InputError("write failed: " + path.string());
}

IngestResult load_trace(std::span<const std::filesystem::path> paths, const MonitoredSet& monitored)
{
    if (paths.empty())
        throw InputError("no input files");
    IngestResult merged;
    for (const auto& path : paths) {
        if (path.extension() == ".csv") {
            auto records = read_records_csv(path);
            merged.stats.total += records.size();
            merged.stats.emitted += records.size();
            merged.records.insert(merged.records.end(), records.begin(), records.end());
            continue;
        }
        auto part = read_pcap(path, monitored, false);
        merged.records.insert(merged.records.end(), part.records.begin(), part.records.end());
        const auto& s = part.stats;
        auto& m = merged.stats;
        m.total += s.total;
        m.emitted += s.emitted;
        m.non_ip += s.non_ip;
        m.ipv6 += s.ipv6;
        m.non_tcp_udp += s.non_tcp_udp;
        m.fragments += s.fragments;
        m.third_party += s.third_party;
        m.truncated += s.truncated;
    }
    rebase_and_sort(merged.records);
    return merged;
}

} // namespace tvtrace
