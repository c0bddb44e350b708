#include "tvtrace/flows.hpp"

#include "tvtrace/error.hpp"

#include <algorithm>
#include <map>
#include <ostream>

namespace tvtrace {

std::vector<FlowSummary> rank_download_flows(std::span<const PacketRecord> records,
    std::span<const SessionLabel> labels, const HeuristicThresholds& thresholds)
{
    std::map<SessionKey, bool> video_session;
    for (const auto& l : labels)
        video_session.emplace(l.key, l.is_video);

    std::map<Ipv4Address, FlowSummary> by_peer;
    for (const auto& r : records) {
        if (r.direction != Direction::Download)
            continue;
        auto it = video_session.find(SessionKey::of(r));
        if (it == video_session.end())
            throw AnalysisError("no label for session " + SessionKey::of(r).to_string());

        auto& flow = by_peer[r.src_addr];
        flow.remote_addr = r.src_addr;
        flow.bytes += r.ip_total_len;
        ++flow.packets;
        if (is_video_packet(r, it->second, thresholds)) {
            flow.video_bytes += r.ip_total_len;
            ++flow.video_packets;
        }
    }
    if (by_peer.empty())
        throw AnalysisError("no download records");

    std::vector<FlowSummary> flows;
    flows.reserve(by_peer.size());
    for (auto& [addr, flow] : by_peer)
        flows.push_back(flow);
    // by_peer iterates in address order, so a stable sort keeps the tie-break.
    std::stable_sort(flows.begin(), flows.end(),
        [](const FlowSummary& a, const FlowSummary& b) { return a.bytes > b.bytes; });
    return flows;
}

std::vector<PacketRecord> flow_records(std::span<const PacketRecord> records, Ipv4Address remote)
{
    std::vector<PacketRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
        [remote](const PacketRecord& r) { return r.direction == Direction::Download && r.src_addr == remote; });
    if (out.empty())
        throw AnalysisError("no download records from " + remote.to_string());
    return out;
}

void write_flows_csv(std::ostream& out, std::span<const FlowSummary> flows)
{
    out << "rank,remote_addr,bytes,packets,video_bytes,video_packets\n";
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& f = flows[i];
        out << i + 1 << ',' << f.remote_addr.to_string() << ',' << f.bytes << ',' << f.packets << ','
            << f.video_bytes << ',' << f.video_packets << '\n';
    }
}

} // namespace tvtrace
