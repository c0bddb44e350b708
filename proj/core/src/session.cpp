#include "tvtrace/session.hpp"

#include "tvtrace/error.hpp"

#include <tuple>

namespace tvtrace {

SessionKey SessionKey::of(const PacketRecord& r)
{
    SessionKey k;
    k.transport = r.transport;
    if (std::tie(r.src_addr, r.src_port) <= std::tie(r.dst_addr, r.dst_port)) {
        k.addr_lo = r.src_addr;
        k.port_lo = r.src_port;
        k.addr_hi = r.dst_addr;
        k.port_hi = r.dst_port;
    } else {
        k.addr_lo = r.dst_addr;
        k.port_lo = r.dst_port;
        k.addr_hi = r.src_addr;
        k.port_hi = r.src_port;
    }
    return k;
}

std::string SessionKey::to_string() const
{
    return addr_lo.to_string() + ":" + std::to_string(port_lo) + "-" + addr_hi.to_string() + ":" +
           std::to_string(port_hi) + "/" + std::string(tvtrace::to_string(transport));
}

SessionMap group_sessions(std::span<const PacketRecord> records)
{
    SessionMap sessions;
    for (const auto& r : records)
        sessions[SessionKey::of(r)].push_back(r);
    return sessions;
}

std::vector<SessionLabel> classify_sessions(const SessionMap& sessions, const HeuristicThresholds& thresholds)
{
    std::vector<SessionLabel> labels;
    labels.reserve(sessions.size());
    for (const auto& [key, packets] : sessions) {
        SessionLabel label;
        label.key = key;
        label.packets = packets.size();
        for (const auto& r : packets) {
            label.bytes += r.ip_total_len;
            if (r.ip_total_len >= thresholds.large_packet_bytes)
                ++label.large_packet_count;
        }
        label.is_video = label.large_packet_count >= thresholds.min_large_packets;
        labels.push_back(label);
    }
    return labels;
}

std::vector<SessionLabel> classify_records(std::span<const PacketRecord> records, const HeuristicThresholds& thresholds)
{
    return classify_sessions(group_sessions(records), thresholds);
}

bool is_video_packet(const PacketRecord& r, bool session_is_video, const HeuristicThresholds& thresholds)
{
    return session_is_video && r.ip_total_len >= thresholds.large_packet_bytes;
}

namespace {

std::map<SessionKey, bool> label_index(std::span<const SessionLabel> labels)
{
    std::map<SessionKey, bool> index;
    for (const auto& l : labels)
        index.emplace(l.key, l.is_video);
    return index;
}

bool lookup(const std::map<SessionKey, bool>& index, const PacketRecord& r)
{
    const auto key = SessionKey::of(r);
    auto it = index.find(key);
    if (it == index.end())
        throw AnalysisError("no label for session " + key.to_string());
    return it->second;
}

} // namespace

TrafficSplit split_traffic(std::span<const PacketRecord> records, std::span<const SessionLabel> labels,
    const HeuristicThresholds& thresholds)
{
    const auto index = label_index(labels);
    TrafficSplit split;
    for (const auto& r : records) {
        if (is_video_packet(r, lookup(index, r), thresholds))
            split.video.push_back(r);
        else
            split.signaling.push_back(r);
    }
    return split;
}

std::vector<PacketRecord> filter_video(std::span<const PacketRecord> records, std::span<const SessionLabel> labels,
    const HeuristicThresholds& thresholds)
{
    const auto index = label_index(labels);
    std::vector<PacketRecord> video;
    for (const auto& r : records) {
        if (is_video_packet(r, lookup(index, r), thresholds))
            video.push_back(r);
    }
    return video;
}

SignalingReport signaling_report(std::span<const PacketRecord> records, std::span<const SessionLabel> labels,
    const HeuristicThresholds& thresholds)
{
    const auto index = label_index(labels);
    SignalingReport rep;
    for (const auto& r : records) {
        const bool video = is_video_packet(r, lookup(index, r), thresholds);
        if (r.direction == Direction::Upload) {
            rep.upload_bytes += r.ip_total_len;
            if (!video)
                rep.upload_signaling_bytes += r.ip_total_len;
        } else {
            rep.download_bytes += r.ip_total_len;
            if (!video)
                rep.download_signaling_bytes += r.ip_total_len;
        }
    }

    auto ratio = [](std::uint64_t part, std::uint64_t whole) -> std::optional<double> {
        if (whole == 0)
            return std::nullopt;
        return static_cast<double>(part) / static_cast<double>(whole);
    };
    rep.upload_ratio = ratio(rep.upload_signaling_bytes, rep.upload_bytes);
    rep.download_ratio = ratio(rep.download_signaling_bytes, rep.download_bytes);
    rep.total_ratio = ratio(rep.upload_signaling_bytes + rep.download_signaling_bytes,
        rep.upload_bytes + rep.download_bytes);
    return rep;
}

double video_bitrate_kbps(const BitrateInputs& in)
{
    if (!(in.dead_time >= 0.0) || !(in.duration > in.dead_time))
        throw AnalysisError("bitrate: duration must exceed dead time (and dead time must be >= 0)");
    if (in.download_fraction < 0.0 || in.download_fraction > 1.0 || in.download_signaling_ratio < 0.0 ||
        in.download_signaling_ratio > 1.0)
        throw AnalysisError("bitrate: fractions must lie in [0, 1]");
    if (in.total_megabytes < 0.0)
        throw AnalysisError("bitrate: negative volume");

    const double video_bits =
        in.total_megabytes * 1024.0 * 1024.0 * 8.0 * in.download_fraction * (1.0 - in.download_signaling_ratio);
    return video_bits / (in.duration - in.dead_time) / 1024.0;
}

} // namespace tvtrace
