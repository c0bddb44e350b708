#include "pipeline.hpp"

#include "tvtrace/error.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace tvtrace;
using namespace tvtrace::cli;

namespace {

struct RawOptions {
    std::vector<std::string> inputs;
    std::vector<std::string> monitored;
    double bin_width = kDefaultBinWidth;
    bool all_packets = false;
    std::string direction = "both";
    std::string traffic = "both";
    std::uint32_t large_bytes = HeuristicThresholds{}.large_packet_bytes;
    std::size_t min_large = HeuristicThresholds{}.min_large_packets;
    int vanishing_moments = kDefaultVanishingMoments;
    std::optional<int> j1;
    std::optional<int> j2;
    double bump = FeatureThresholds{}.bump;
    double flat = FeatureThresholds{}.flat;
    double increase_alpha = FeatureThresholds{}.increase_alpha;
    double min_fit_quality = FeatureThresholds{}.min_fit_quality;
    std::string output_dir = ".";
    std::uint64_t seed = 1;
};

PipelineConfig resolve(const RawOptions& o)
{
    PipelineConfig c;
    for (const auto& p : o.inputs)
        c.inputs.emplace_back(p);
    for (const auto& text : o.monitored) {
        auto a = Ipv4Address::parse(text);
        if (!a)
            throw InputError("not an IPv4 address: '" + text + "'");
        c.monitored.insert(*a);
    }
    c.bin_width = o.bin_width;
    c.payload_only = !o.all_packets;
    if (o.direction == "upload")
        c.directions = {Direction::Upload};
    else if (o.direction == "download")
        c.directions = {Direction::Download};
    if (o.traffic == "overall")
        c.kinds = {TrafficKind::Overall};
    else if (o.traffic == "video")
        c.kinds = {TrafficKind::Video};
    c.thresholds = {o.large_bytes, o.min_large};
    c.vanishing_moments = o.vanishing_moments;
    c.fit_j1 = o.j1;
    c.fit_j2 = o.j2;
    c.features = {o.bump, o.flat, o.increase_alpha, o.min_fit_quality};
    c.output_dir = o.output_dir;
    c.seed = o.seed;
    return c;
}

void require_inputs(const PipelineConfig& c)
{
    if (c.inputs.empty())
        throw InputError("no input files (use --input)");
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : "n/a"; }

void print_quadrants(const LdiagResult& r)
{
    for (const auto& q : r.quadrants) {
        std::printf("%-8s %-7s ", std::string(to_string(q.direction)).c_str(), std::string(to_string(q.kind)).c_str());
        if (!q.present) {
            std::printf("absent: %s\n", q.absent_reason.c_str());
            continue;
        }
        std::printf("H=%s [%s,%s] alpha=%s j=[%d,%d] feature=%s", format_number(q.estimate.hurst).c_str(),
            format_number(q.estimate.hurst_ci_low).c_str(), format_number(q.estimate.hurst_ci_high).c_str(),
            format_number(q.estimate.alpha).c_str(), q.estimate.j1, q.estimate.j2,
            std::string(to_string(q.feature.kind)).c_str());
        if (q.feature.kind == SpectrumShape::Bump || q.feature.kind == SpectrumShape::LinearIncrease)
            std::printf(" at j=%d", q.feature.octave);
        std::printf("\n");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"P2P IPTV packet trace analysis"};
    app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    RawOptions o;
    app.add_option("-i,--input", o.inputs, "pcap or record CSV file(s); repeat to merge");
    app.add_option("-m,--monitored", o.monitored, "monitored host address(es) for pcap input");
    app.add_option("--bin-width", o.bin_width, "bin width in seconds")->check(CLI::PositiveNumber);
    app.add_flag("--all-packets", o.all_packets, "count TCP packets without payload too");
    app.add_option("--direction", o.direction, "upload, download or both")
        ->check(CLI::IsMember({"upload", "download", "both"}));
    app.add_option("--traffic", o.traffic, "overall, video or both")
        ->check(CLI::IsMember({"overall", "video", "both"}));
    app.add_option("--large-bytes", o.large_bytes, "large packet threshold (ip total length)");
    app.add_option("--min-large", o.min_large, "large packets that make a session video");
    app.add_option("--vanishing-moments", o.vanishing_moments, "wavelet vanishing moments")
        ->check(CLI::Range(1, kMaxVanishingMoments));
    app.add_option("--j1", o.j1, "first octave of the scaling fit")->check(CLI::PositiveNumber);
    app.add_option("--j2", o.j2, "last octave of the scaling fit")->check(CLI::PositiveNumber);
    app.add_option("--bump-threshold", o.bump, "bump margin in log2 units")->check(CLI::NonNegativeNumber);
    app.add_option("--flat-threshold", o.flat, "flat spread in log2 units")->check(CLI::NonNegativeNumber);
    app.add_option("--increase-alpha", o.increase_alpha, "minimum significant slope for a linear increase");
    app.add_option("--min-fit-quality", o.min_fit_quality, "minimum fit quality for a linear increase")->check(CLI::Range(0.0, 1.0));
    app.add_option("-o,--out", o.output_dir, "output directory");
    app.add_option("--seed", o.seed, "seed for synth");

    auto* convert = app.add_subcommand("convert", "normalise input(s) to one record CSV or pcap");
    std::string convert_output = "records.csv";
    bool convert_pcap = false;
    convert->add_option("--output", convert_output, "output file name inside the output directory");
    convert->add_flag("--pcap", convert_pcap, "write pcap instead of CSV");

    auto* summary = app.add_subcommand("summary", "volume, duration and direction/transport byte fractions");
    auto* classify = app.add_subcommand("classify", "video/signaling session labels and signaling ratios");

    auto* bitrate = app.add_subcommand("bitrate", "average downloaded video rate in Kbps");
    std::optional<double> mb, df, sr, duration;
    double dead_time = 0.0;
    bitrate->add_option("--megabytes", mb, "trace volume in MB (2^20 bytes)")->check(CLI::NonNegativeNumber);
    bitrate->add_option("--download-fraction", df, "download share of the volume")->check(CLI::Range(0.0, 1.0));
    bitrate->add_option("--signaling-ratio", sr, "download signaling ratio")->check(CLI::Range(0.0, 1.0));
    bitrate->add_option("--duration", duration, "trace duration in seconds")->check(CLI::PositiveNumber);
    bitrate->add_option("--dead-time", dead_time, "seconds without video delivery")->check(CLI::NonNegativeNumber);

    auto* ldiag = app.add_subcommand("ldiag", "logscale diagrams, scaling fits and spectrum features");
    auto* stationarity = app.add_subcommand("stationarity", "compare the diagrams of three equal parts");

    auto* topflows = app.add_subcommand("topflows", "rank download peers and analyse one of them");
    std::size_t rank = 1;
    topflows->add_option("-n,--rank", rank, "peer rank to analyse (1 = largest)")->check(CLI::PositiveNumber);

    auto* synth = app.add_subcommand("synth", "synthetic traces and series with known ground truth");
    SynthOptions so;
    std::string kind = "mix";
    const std::map<std::string, SynthKind> kinds{{"mix", SynthKind::Mix}, {"fgn", SynthKind::Fgn},
        {"periodic", SynthKind::Periodic}, {"poisson", SynthKind::Poisson}, {"trace-fgn", SynthKind::FgnTrace},
        {"trace-periodic", SynthKind::PeriodicTrace}, {"trace-poisson", SynthKind::PoissonTrace}};
    synth->add_option("kind", kind, "mix, fgn, periodic, poisson, trace-fgn, trace-periodic, trace-poisson")
        ->check(CLI::IsMember({"mix", "fgn", "periodic", "poisson", "trace-fgn", "trace-periodic", "trace-poisson"}));
    synth->add_option("--length", so.length, "series length in bins")->check(CLI::PositiveNumber);
    synth->add_option("--hurst", so.hurst, "fGn Hurst parameter")->check(CLI::Range(0.01, 0.99));
    synth->add_option("--rate", so.rate, "Poisson rate per bin")->check(CLI::PositiveNumber);
    synth->add_option("--period", so.period_bins, "period in bins")->check(CLI::Range(2, 1 << 30));
    synth->add_option("--amplitude", so.amplitude, "extra rate during the on half")->check(CLI::NonNegativeNumber);
    synth->add_option("--mean", so.mean, "count mean for fGn-driven traces");
    synth->add_option("--scale", so.scale, "count scale for fGn-driven traces")->check(CLI::NonNegativeNumber);
    synth->add_option("--peers", so.peers, "remote peers in series-driven traces")->check(CLI::Range(1, 200));
    synth->add_flag("--pcap", so.pcap, "write records as pcap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const PipelineConfig config = resolve(o);
        if (*convert) {
            require_inputs(config);
            const auto s = run_convert(config, convert_output, convert_pcap);
            std::printf("read %llu packets, wrote %llu, skipped %llu\n", static_cast<unsigned long long>(s.total),
                static_cast<unsigned long long>(s.emitted), static_cast<unsigned long long>(s.skipped()));
        } else if (*summary) {
            require_inputs(config);
            const auto r = run_summary(config);
            const auto& s = r.summary;
            std::printf("duration %s s, %s MB, %llu packets\n", format_number(s.duration).c_str(),
                format_number(s.total_megabytes()).c_str(), static_cast<unsigned long long>(s.packets));
            std::printf("upload %s (tcp %s, udp %s)\ndownload %s (tcp %s, udp %s)\n",
                format_number(s.upload_fraction).c_str(), format_number(s.upload_tcp_fraction).c_str(),
                format_number(s.upload_udp_fraction).c_str(), format_number(s.download_fraction).c_str(),
                format_number(s.download_tcp_fraction).c_str(), format_number(s.download_udp_fraction).c_str());
        } else if (*classify) {
            require_inputs(config);
            const auto r = run_classify(config);
            std::size_t video = 0;
            for (const auto& l : r.labels)
                video += l.is_video ? 1 : 0;
            std::printf("%zu sessions, %zu video\nsignaling ratio total %s, upload %s, download %s\n",
                r.labels.size(), video, opt(r.report.total_ratio).c_str(), opt(r.report.upload_ratio).c_str(),
                opt(r.report.download_ratio).c_str());
        } else if (*bitrate) {
            double kbps = 0.0;
            if (mb || df || sr || duration) {
                if (!(mb && df && sr && duration))
                    throw InputError(
                        "explicit bitrate needs --megabytes, --download-fraction, --signaling-ratio and --duration");
                kbps = run_bitrate(config, BitrateInputs{*mb, *df, *sr, *duration, dead_time});
            } else {
                require_inputs(config);
                kbps = run_bitrate_from_trace(config, dead_time);
            }
            std::printf("%.1f\n", kbps);
        } else if (*ldiag) {
            require_inputs(config);
            print_quadrants(run_ldiag(config));
        } else if (*stationarity) {
            require_inputs(config);
            const auto r = run_stationarity(config);
            for (const auto& q : r.quadrants) {
                std::printf("%-8s %-7s ", std::string(to_string(q.direction)).c_str(),
                    std::string(to_string(q.kind)).c_str());
                if (q.present)
                    std::printf("stationary up to j=%d of %d\n", q.report.stationary_up_to, q.report.max_octave());
                else
                    std::printf("absent: %s\n", q.absent_reason.c_str());
            }
        } else if (*topflows) {
            require_inputs(config);
            const auto r = run_topflows(config, rank);
            std::printf("peer %zu of %zu: %s, %s MB, %llu packets (%llu video)\n", r.rank, r.flows.size(),
                r.selected.remote_addr.to_string().c_str(), format_number(r.selected.megabytes()).c_str(),
                static_cast<unsigned long long>(r.selected.packets),
                static_cast<unsigned long long>(r.selected.video_packets));
            print_quadrants(r.diagrams);
        } else if (*synth) {
            so.kind = kinds.at(kind);
            if ((so.kind == SynthKind::Fgn || so.kind == SynthKind::FgnTrace) && (so.length & (so.length - 1)) != 0)
                throw InputError("fgn length must be a power of two");
            run_synth(config, so);
            std::printf("wrote %s\n", config.output_dir.string().c_str());
        }
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 1;
    } catch (const AnalysisError& e) {
        std::fprintf(stderr, "analysis error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
