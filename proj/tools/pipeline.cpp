#include "pipeline.hpp"

#include "tvtrace/error.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tvtrace::cli {

using Json = nlohmann::ordered_json;

namespace {

Json number(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    // Round through the text form so the serializer's shortest repr is the 6-digit one.
    return std::strtod(format_number(v).c_str(), nullptr);
}

Json number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

template <class Fn>
std::string to_text(Fn&& fn)
{
    std::ostringstream out;
    fn(out);
    return out.str();
}

struct LoadedTrace {
    IngestResult ingest;
    std::vector<SessionLabel> labels;
};

LoadedTrace load(const PipelineConfig& config)
{
    LoadedTrace t;
    t.ingest = load_trace(config.inputs, config.monitored);
    if (t.ingest.records.empty())
        throw AnalysisError("no usable packets in the input");
    t.labels = classify_records(t.ingest.records, config.thresholds);
    return t;
}

Json stats_json(const IngestStats& s)
{
    return Json{{"total", s.total}, {"emitted", s.emitted}, {"non_ip", s.non_ip}, {"ipv6", s.ipv6},
        {"non_tcp_udp", s.non_tcp_udp}, {"fragments", s.fragments}, {"third_party", s.third_party},
        {"truncated", s.truncated}};
}

Json estimate_json(const ScalingEstimate& e)
{
    return Json{{"alpha", number(e.alpha)}, {"alpha_stderr", number(e.alpha_stderr)},
        {"intercept", number(e.intercept)}, {"hurst", number(e.hurst)}, {"hurst_ci_low", number(e.hurst_ci_low)},
        {"hurst_ci_high", number(e.hurst_ci_high)}, {"j1", e.j1}, {"j2", e.j2}, {"octaves_used", e.octaves_used},
        {"fit_quality", number(e.fit_quality)}};
}

Json feature_json(const SpectrumFeature& f)
{
    Json j{{"kind", std::string(to_string(f.kind))}, {"octave", f.octave}, {"spread", number(f.spread)}};
    auto margins = Json::array();
    for (std::size_t i = 0; i < f.octaves.size(); ++i)
        margins.push_back(Json{{"octave", f.octaves[i]}, {"bump_margin", number(f.bump_margin[i])}});
    j["evidence"] = std::move(margins);
    j["increase_fit"] = f.increase_fit ? estimate_json(*f.increase_fit) : Json(nullptr);
    return j;
}

std::string quadrant_name(Direction d, TrafficKind k)
{
    return std::string(d == Direction::Upload ? "upload" : "download") + "_" + std::string(to_string(k));
}

std::vector<PacketRecord> select_kind(const std::vector<PacketRecord>& records, TrafficKind kind,
    const std::vector<SessionLabel>& labels, const HeuristicThresholds& thresholds)
{
    if (kind == TrafficKind::Overall)
        return records;
    return filter_video(records, labels, thresholds);
}

QuadrantResult analyse_quadrant(const std::vector<PacketRecord>& records, Direction d, TrafficKind k,
    const PipelineConfig& config)
{
    QuadrantResult q;
    q.direction = d;
    q.kind = k;
    try {
        q.series = bin_counts(records, config.bin_width, BinSelection{d, config.payload_only});
        q.diagram = logscale_diagram(dwt_details(q.series, config.vanishing_moments), config.bin_width);
        auto [j1, j2] = (config.fit_j1 && config.fit_j2)
            ? std::pair{*config.fit_j1, *config.fit_j2}
            : default_fit_range(q.diagram);
        if (config.fit_j1)
            j1 = *config.fit_j1;
        if (config.fit_j2)
            j2 = *config.fit_j2;
        q.estimate = estimate_scaling(q.diagram, j1, j2);
        q.feature = detect_features(q.diagram, config.features);
        q.present = true;
    } catch (const AnalysisError& e) {
        q.present = false;
        q.absent_reason = e.what();
    }
    return q;
}

LdiagResult analyse_quadrants(const std::vector<PacketRecord>& records, const std::vector<SessionLabel>& labels,
    const PipelineConfig& config)
{
    LdiagResult result;
    for (TrafficKind k : config.kinds) {
        const auto selected = select_kind(records, k, labels, config.thresholds);
        for (Direction d : config.directions)
            result.quadrants.push_back(analyse_quadrant(selected, d, k, config));
    }
    return result;
}

Json quadrants_json(const LdiagResult& r, const std::string& prefix)
{
    auto arr = Json::array();
    for (const auto& q : r.quadrants) {
        Json j{{"direction", std::string(to_string(q.direction))}, {"traffic", std::string(to_string(q.kind))},
            {"present", q.present}};
        if (!q.present) {
            j["absent_reason"] = q.absent_reason;
        } else {
            j["diagram_file"] = prefix + "ldiag_" + quadrant_name(q.direction, q.kind) + ".csv";
            j["bins"] = q.series.size();
            j["packets"] = q.series.total();
            j["bin_width"] = number(q.series.bin_width);
            j["max_octave"] = q.diagram.max_octave();
            j["estimate"] = estimate_json(q.estimate);
            j["feature"] = feature_json(q.feature);
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

void write_quadrant_diagrams(OutputSet& out, const LdiagResult& r, const std::string& prefix)
{
    for (const auto& q : r.quadrants) {
        if (!q.present)
            continue;
        out.write(prefix + "ldiag_" + quadrant_name(q.direction, q.kind) + ".csv",
            to_text([&](std::ostream& os) { write_diagram_csv(os, q.diagram); }));
    }
}

void require_some_quadrant(const LdiagResult& r)
{
    for (const auto& q : r.quadrants)
        if (q.present)
            return;
    throw AnalysisError("no quadrant could be analysed (see the report for reasons)");
}

std::string hash_of(const PipelineConfig& config, const std::string& extras)
{
    return sha256_hex(config.canonical() + "\n" + extras);
}

} // namespace

std::string_view to_string(TrafficKind k) { return k == TrafficKind::Overall ? "overall" : "video"; }

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        s.push_back(hex[digest[i] >> 4]);
        s.push_back(hex[digest[i] & 0xf]);
    }
    return s;
}

std::string PipelineConfig::canonical() const
{
    Json j;
    auto in = Json::array();
    for (const auto& p : inputs)
        in.push_back(p.generic_string());
    j["inputs"] = std::move(in);
    auto mon = Json::array();
    for (const auto& a : monitored)
        mon.push_back(a.to_string());
    j["monitored"] = std::move(mon);
    j["bin_width"] = format_number(bin_width);
    j["payload_only"] = payload_only;
    auto dirs = Json::array();
    for (auto d : directions)
        dirs.push_back(std::string(to_string(d)));
    j["directions"] = std::move(dirs);
    auto ks = Json::array();
    for (auto k : kinds)
        ks.push_back(std::string(to_string(k)));
    j["traffic"] = std::move(ks);
    j["large_packet_bytes"] = thresholds.large_packet_bytes;
    j["min_large_packets"] = thresholds.min_large_packets;
    j["vanishing_moments"] = vanishing_moments;
    j["fit_j1"] = fit_j1 ? Json(*fit_j1) : Json(nullptr);
    j["fit_j2"] = fit_j2 ? Json(*fit_j2) : Json(nullptr);
    j["bump_threshold"] = format_number(features.bump);
    j["flat_threshold"] = format_number(features.flat);
    j["increase_alpha"] = format_number(features.increase_alpha);
    j["min_fit_quality"] = format_number(features.min_fit_quality);
    j["seed"] = seed;
    return j.dump();
}

OutputSet::OutputSet(fs::path dir, std::string command, std::string config_hash)
    : dir_(std::move(dir)), command_(std::move(command)), config_hash_(std::move(config_hash))
{
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec)
        throw InputError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputSet::write(const std::string& name, const std::string& content)
{
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot create " + path.string());
    out << content;
    if (!out)
        throw InputError("write failed: " + path.string());
    files_.push_back(name);
    digests_.push_back(sha256_hex(content));
}

void OutputSet::finish()
{
    Json j;
    j["command"] = command_;
    j["config_hash"] = config_hash_;
    auto files = Json::array();
    for (std::size_t i = 0; i < files_.size(); ++i)
        files.push_back(Json{{"file", files_[i]}, {"sha256", digests_[i]}, {"config_hash", config_hash_}});
    j["files"] = std::move(files);
    const fs::path path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot create " + path.string());
    out << dump(j);
}

SummaryResult run_summary(const PipelineConfig& config)
{
    const auto ingest = load_trace(config.inputs, config.monitored);
    SummaryResult r{summarize(ingest.records), ingest.stats};
    const auto& s = r.summary;

    OutputSet out(config.output_dir, "summary", hash_of(config, ""));
    Json j{{"duration_s", number(s.duration)}, {"total_megabytes", number(s.total_megabytes())},
        {"total_bytes", s.total_bytes}, {"packets", s.packets}, {"upload_fraction", number(s.upload_fraction)},
        {"download_fraction", number(s.download_fraction)}, {"upload_tcp_fraction", number(s.upload_tcp_fraction)},
        {"upload_udp_fraction", number(s.upload_udp_fraction)},
        {"download_tcp_fraction", number(s.download_tcp_fraction)},
        {"download_udp_fraction", number(s.download_udp_fraction)}, {"ingest", stats_json(r.stats)}};
    out.write("summary.json", dump(j));

    std::string csv = "duration_s,total_megabytes,packets,upload_fraction,download_fraction,"
                      "upload_tcp_fraction,upload_udp_fraction,download_tcp_fraction,download_udp_fraction\n";
    for (double v : {s.duration, s.total_megabytes()})
        csv += format_number(v) + ",";
    csv += std::to_string(s.packets);
    for (double v : {s.upload_fraction, s.download_fraction, s.upload_tcp_fraction, s.upload_udp_fraction,
             s.download_tcp_fraction, s.download_udp_fraction})
        csv += "," + format_number(v);
    out.write("summary.csv", csv + "\n");
    out.finish();
    return r;
}

ClassifyResult run_classify(const PipelineConfig& config)
{
    const auto t = load(config);
    ClassifyResult r{signaling_report(t.ingest.records, t.labels, config.thresholds), t.labels};

    OutputSet out(config.output_dir, "classify", hash_of(config, ""));
    Json j{{"total_ratio", number(r.report.total_ratio)}, {"upload_ratio", number(r.report.upload_ratio)},
        {"download_ratio", number(r.report.download_ratio)}, {"upload_bytes", r.report.upload_bytes},
        {"download_bytes", r.report.download_bytes}, {"upload_signaling_bytes", r.report.upload_signaling_bytes},
        {"download_signaling_bytes", r.report.download_signaling_bytes}};
    auto sessions = Json::array();
    for (const auto& l : r.labels)
        sessions.push_back(Json{{"key", l.key.to_string()}, {"large_packet_count", l.large_packet_count},
            {"is_video", l.is_video}, {"packets", l.packets}, {"bytes", l.bytes}});
    j["sessions"] = std::move(sessions);
    out.write("classify.json", dump(j));
    out.finish();
    return r;
}

double run_bitrate(const PipelineConfig& config, const BitrateInputs& in)
{
    const double kbps = video_bitrate_kbps(in);
    char extras[256];
    std::snprintf(extras, sizeof extras, "%.17g %.17g %.17g %.17g %.17g", in.total_megabytes, in.download_fraction,
        in.download_signaling_ratio, in.duration, in.dead_time);

    OutputSet out(config.output_dir, "bitrate", hash_of(config, extras));
    Json j{{"total_megabytes", number(in.total_megabytes)}, {"download_fraction", number(in.download_fraction)},
        {"download_signaling_ratio", number(in.download_signaling_ratio)}, {"duration_s", number(in.duration)},
        {"dead_time_s", number(in.dead_time)}, {"video_kbps", number(kbps)}};
    out.write("bitrate.json", dump(j));
    out.finish();
    return kbps;
}

double run_bitrate_from_trace(const PipelineConfig& config, double dead_time)
{
    const auto t = load(config);
    const auto s = summarize(t.ingest.records);
    const auto rep = signaling_report(t.ingest.records, t.labels, config.thresholds);
    if (!rep.download_ratio)
        throw AnalysisError("trace has no download traffic");
    return run_bitrate(config, BitrateInputs{s.total_megabytes(), s.download_fraction, *rep.download_ratio,
                                   s.duration, dead_time});
}

LdiagResult run_ldiag(const PipelineConfig& config)
{
    const auto t = load(config);
    auto r = analyse_quadrants(t.ingest.records, t.labels, config);

    OutputSet out(config.output_dir, "ldiag", hash_of(config, ""));
    write_quadrant_diagrams(out, r, "");
    out.write("ldiag.json", dump(Json{{"quadrants", quadrants_json(r, "")}}));
    out.finish();
    require_some_quadrant(r);
    return r;
}

StationarityResult run_stationarity(const PipelineConfig& config)
{
    const auto t = load(config);
    StationarityResult r;
    for (TrafficKind k : config.kinds) {
        const auto selected = select_kind(t.ingest.records, k, t.labels, config.thresholds);
        for (Direction d : config.directions) {
            StationarityQuadrant q;
            q.direction = d;
            q.kind = k;
            try {
                const auto series = bin_counts(selected, config.bin_width, BinSelection{d, config.payload_only});
                q.report = compare_parts(split_thirds(series, config.vanishing_moments), config.vanishing_moments);
                q.present = true;
            } catch (const AnalysisError& e) {
                q.absent_reason = e.what();
            }
            r.quadrants.push_back(std::move(q));
        }
    }

    OutputSet out(config.output_dir, "stationarity", hash_of(config, ""));
    auto arr = Json::array();
    bool any = false;
    for (const auto& q : r.quadrants) {
        const auto name = quadrant_name(q.direction, q.kind);
        Json j{{"direction", std::string(to_string(q.direction))}, {"traffic", std::string(to_string(q.kind))},
            {"present", q.present}};
        if (!q.present) {
            j["absent_reason"] = q.absent_reason;
        } else {
            any = true;
            out.write("stationarity_" + name + ".csv",
                to_text([&](std::ostream& os) { write_overlay_csv(os, q.report); }));
            j["overlay_file"] = "stationarity_" + name + ".csv";
            j["max_octave"] = q.report.max_octave();
            j["stationary_up_to"] = q.report.stationary_up_to;
            j["fully_stationary"] = q.report.fully_stationary();
            j["stationary_up_to_seconds"] = number(std::ldexp(config.bin_width, q.report.stationary_up_to));
        }
        arr.push_back(std::move(j));
    }
    out.write("stationarity.json", dump(Json{{"quadrants", std::move(arr)}}));
    out.finish();
    if (!any)
        throw AnalysisError("no quadrant could be analysed (see the report for reasons)");
    return r;
}

TopflowsResult run_topflows(const PipelineConfig& config, std::size_t rank)
{
    if (rank == 0)
        throw InputError("rank counts from 1");
    const auto t = load(config);
    TopflowsResult r;
    r.flows = rank_download_flows(t.ingest.records, t.labels, config.thresholds);
    r.rank = rank;

    OutputSet out(config.output_dir, "topflows", hash_of(config, "rank=" + std::to_string(rank)));
    out.write("flows.csv", to_text([&](std::ostream& os) { write_flows_csv(os, r.flows); }));
    if (rank > r.flows.size()) {
        out.finish();
        throw AnalysisError("rank " + std::to_string(rank) + " requested but the trace has only " +
                            std::to_string(r.flows.size()) + " download peers");
    }
    r.selected = r.flows[rank - 1];

    // Both directions of the exchange with the selected peer.
    std::vector<PacketRecord> peer;
    for (const auto& rec : t.ingest.records)
        if (rec.remote_addr() == r.selected.remote_addr)
            peer.push_back(rec);
    r.diagrams = analyse_quadrants(peer, t.labels, config);

    const std::string prefix = "flow" + std::to_string(rank) + "_";
    write_quadrant_diagrams(out, r.diagrams, prefix);
    const auto& f = r.selected;
    Json j{{"rank", rank}, {"flows", r.flows.size()},
        {"selected",
            Json{{"remote_addr", f.remote_addr.to_string()}, {"bytes", f.bytes}, {"megabytes", number(f.megabytes())},
                {"packets", f.packets}, {"video_bytes", f.video_bytes},
                {"video_megabytes", number(f.video_megabytes())}, {"video_packets", f.video_packets},
                {"signaling_packets", f.signaling_packets()}}},
        {"quadrants", quadrants_json(r.diagrams, prefix)}};
    out.write("topflows.json", dump(j));
    out.finish();
    return r;
}

namespace {

void write_records(OutputSet& out, const SessionMix& mix, bool pcap)
{
    if (pcap) {
        std::ostringstream os(std::ios::binary);
        write_pcap(os, mix.records);
        out.write("records.pcap", os.str());
    } else {
        out.write("records.csv", to_text([&](std::ostream& os) { write_records_csv(os, mix.records); }));
    }
    out.write("truth.json", to_text([&](std::ostream& os) { write_ground_truth_json(os, mix); }));
}

std::vector<std::uint64_t> counts_for(const SynthOptions& o, std::uint64_t seed)
{
    switch (o.kind) {
    case SynthKind::Fgn:
    case SynthKind::FgnTrace:
        return counts_from_driver(gen_fgn(o.length, o.hurst, seed), o.mean, o.scale);
    case SynthKind::Periodic:
    case SynthKind::PeriodicTrace:
        return gen_periodic(o.length, o.period_bins, o.rate, o.amplitude, seed);
    default:
        return gen_poisson(o.length, o.rate, seed);
    }
}

const char* synth_name(SynthKind k)
{
    switch (k) {
    case SynthKind::Mix: return "mix";
    case SynthKind::Fgn: return "fgn";
    case SynthKind::Periodic: return "periodic";
    case SynthKind::Poisson: return "poisson";
    case SynthKind::FgnTrace: return "trace-fgn";
    case SynthKind::PeriodicTrace: return "trace-periodic";
    case SynthKind::PoissonTrace: return "trace-poisson";
    }
    return "?";
}

} // namespace

void run_synth(const PipelineConfig& config, const SynthOptions& o)
{
    char extras[512];
    std::snprintf(extras, sizeof extras, "kind=%s length=%zu hurst=%.17g rate=%.17g period=%zu amp=%.17g mean=%.17g "
                                         "scale=%.17g peers=%zu pcap=%d",
        synth_name(o.kind), o.length, o.hurst, o.rate, o.period_bins, o.amplitude, o.mean, o.scale, o.peers,
        o.pcap ? 1 : 0);
    OutputSet out(config.output_dir, "synth", hash_of(config, extras));

    switch (o.kind) {
    case SynthKind::Mix:
        write_records(out, gen_session_mix(random_mix_spec(config.seed)), o.pcap);
        break;
    case SynthKind::Fgn: {
        // The raw Gaussian driver; counts derived from it would lose the sign.
        const auto x = gen_fgn(o.length, o.hurst, config.seed);
        std::string csv = "# fgn hurst=" + format_number(o.hurst) + " seed=" + std::to_string(config.seed) +
                          " bin_width=" + format_number(config.bin_width) + "\nbin_index,value\n";
        for (std::size_t i = 0; i < x.size(); ++i) {
            char line[48];
            std::snprintf(line, sizeof line, "%zu,%.17g\n", i, x[i]);
            csv += line;
        }
        out.write("series.csv", csv);
        break;
    }
    case SynthKind::Periodic:
    case SynthKind::Poisson: {
        TimeSeries ts{config.bin_width, 0.0, counts_for(o, config.seed)};
        out.write("series.csv", to_text([&](std::ostream& os) {
            write_series_csv(os, ts, std::string(synth_name(o.kind)) + " seed=" + std::to_string(config.seed));
        }));
        break;
    }
    default: {
        SeriesTraceSpec spec;
        spec.download_counts = counts_for(o, config.seed);
        spec.upload_counts = counts_for(o, config.seed + 1);
        spec.bin_width = config.bin_width;
        spec.peers = o.peers;
        spec.seed = config.seed;
        if (!config.monitored.empty())
            spec.local_addr = *config.monitored.begin();
        write_records(out, gen_series_trace(spec), o.pcap);
        break;
    }
    }
    out.finish();
}

IngestStats run_convert(const PipelineConfig& config, const fs::path& output, bool to_pcap)
{
    const auto ingest = load_trace(config.inputs, config.monitored);
    OutputSet out(config.output_dir, "convert", hash_of(config, "output=" + output.generic_string()));
    if (to_pcap) {
        std::ostringstream os(std::ios::binary);
        write_pcap(os, ingest.records);
        out.write(output.string(), os.str());
    } else {
        out.write(output.string(), to_text([&](std::ostream& os) { write_records_csv(os, ingest.records); }));
    }
    out.write("ingest.json", dump(stats_json(ingest.stats)));
    out.finish();
    return ingest.stats;
}

} // namespace tvtrace::cli
