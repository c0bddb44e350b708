#include "doctest.h"
#include "helpers.hpp"

#include "pipeline.hpp"
#include "tvtrace/error.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

using namespace tvtrace;
using namespace tvtrace::cli;
using testing::pkt;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("tvtrace_pipeline_" + name))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

PipelineConfig config_for(const fs::path& input, const fs::path& out)
{
    PipelineConfig c;
    c.inputs = {input};
    c.monitored = {testing::kLocal};
    c.output_dir = out;
    return c;
}

std::vector<PacketRecord> rebased(std::vector<PacketRecord> recs)
{
    const auto origin = recs.front().timestamp;
    for (auto& r : recs)
        r.timestamp -= origin;
    return recs;
}

fs::path write_trace(const fs::path& dir, const std::string& name, const std::vector<PacketRecord>& recs)
{
    const auto p = dir / name;
    write_records_csv(p, recs);
    return p;
}

fs::path series_trace(const fs::path& dir, const std::vector<std::uint64_t>& down,
    const std::vector<std::uint64_t>& up, std::size_t peers = 4)
{
    SeriesTraceSpec spec;
    spec.download_counts = down;
    spec.upload_counts = up;
    spec.peers = peers;
    spec.seed = 17;
    return write_trace(dir, "trace.csv", gen_series_trace(spec).records);
}

} // namespace

TEST_SUITE("pipeline")
{
    TEST_CASE("summary of an all-upload fixture")
    {
        TempDir tmp("summary_up");
        const std::vector recs{pkt(0, Direction::Upload, 500), pkt(2, Direction::Upload, 700, Transport::Tcp)};
        const auto r = run_summary(config_for(write_trace(tmp.path, "t.csv", recs), tmp.path / "out"));
        CHECK(r.summary.download_fraction == 0.0);
        const auto j = load_json(tmp.path / "out" / "summary.json");
        CHECK(j["download_fraction"] == 0.0);
        CHECK(j["duration_s"] == 2.0);
        CHECK(fs::exists(tmp.path / "out" / "summary.csv"));
    }

    TEST_CASE("summary of a 50/50 split")
    {
        TempDir tmp("summary_half");
        const std::vector recs{pkt(0, Direction::Upload, 800), pkt(1, Direction::Download, 800)};
        const auto r = run_summary(config_for(write_trace(tmp.path, "t.csv", recs), tmp.path / "out"));
        CHECK(r.summary.upload_fraction == 0.5);
        CHECK(r.summary.download_fraction == 0.5);
    }

    TEST_CASE("classify report shape")
    {
        TempDir tmp("classify");
        const auto mix = gen_session_mix(random_mix_spec(4));
        const auto r = run_classify(config_for(write_trace(tmp.path, "t.csv", mix.records), tmp.path / "out"));
        const auto j = load_json(tmp.path / "out" / "classify.json");
        for (const char* key : {"total_ratio", "upload_ratio", "download_ratio", "sessions"})
            CHECK(j.contains(key));
        CHECK(j["sessions"].size() == r.labels.size());
        for (const auto& s : j["sessions"])
            for (const char* key : {"key", "large_packet_count", "is_video", "bytes"})
                CHECK(s.contains(key));
    }

    TEST_CASE("UDP-only trace gives four quadrants")
    {
        TempDir tmp("ldiag_udp");
        const auto input = series_trace(tmp.path, gen_poisson(4096, 4.0, 1), gen_poisson(4096, 4.0, 2));
        const auto r = run_ldiag(config_for(input, tmp.path / "out"));
        REQUIRE(r.quadrants.size() == 4);
        for (const auto& q : r.quadrants)
            CHECK(q.present);
        // Video keeps only the large packets of video sessions.
        CHECK(r.quadrants[2].series.total() < r.quadrants[0].series.total());
        const auto j = load_json(tmp.path / "out" / "ldiag.json");
        CHECK(j["quadrants"].size() == 4);
        for (const char* f : {"ldiag_upload_overall.csv", "ldiag_download_overall.csv", "ldiag_upload_video.csv",
                 "ldiag_download_video.csv"})
            CHECK(fs::exists(tmp.path / "out" / f));
    }

    TEST_CASE("fGn-driven trace increases in all four quadrants")
    {
        TempDir tmp("ldiag_fgn");
        const auto down = counts_from_driver(gen_fgn(1 << 15, 0.85, 3), 8.0, 3.0);
        const auto up = counts_from_driver(gen_fgn(1 << 15, 0.85, 4), 8.0, 3.0);
        const auto r = run_ldiag(config_for(series_trace(tmp.path, down, up), tmp.path / "out"));
        for (const auto& q : r.quadrants) {
            REQUIRE(q.present);
            CHECK(q.feature.kind == SpectrumShape::LinearIncrease);
        }
    }

    TEST_CASE("periodic-driven trace shows the bump")
    {
        TempDir tmp("ldiag_periodic");
        const auto down = gen_periodic(1 << 15, 256, 3.0, 6.0, 5);
        const auto up = gen_periodic(1 << 15, 256, 3.0, 6.0, 6);
        const auto r = run_ldiag(config_for(series_trace(tmp.path, down, up), tmp.path / "out"));
        for (const auto& q : r.quadrants) {
            REQUIRE(q.present);
            CHECK(q.feature.kind == SpectrumShape::Bump);
            CHECK(q.feature.octave >= 7);
            CHECK(q.feature.octave <= 9);
        }
    }

    TEST_CASE("an empty direction is reported absent")
    {
        TempDir tmp("ldiag_absent");
        std::vector<PacketRecord> recs;
        for (int i = 0; i < 4000; ++i)
            recs.push_back(pkt(0.02 * i + 0.001 * (i % 7), Direction::Upload, 60 + i % 100));
        const auto r = run_ldiag(config_for(write_trace(tmp.path, "t.csv", recs), tmp.path / "out"));
        REQUIRE(r.quadrants.size() == 4);
        CHECK(r.quadrants[0].present);  // upload overall
        CHECK_FALSE(r.quadrants[1].present);
        CHECK(r.quadrants[1].absent_reason == "empty series");
        CHECK_FALSE(r.quadrants[2].present);  // no video at all
        CHECK_FALSE(r.quadrants[3].present);
        const auto j = load_json(tmp.path / "out" / "ldiag.json");
        CHECK(j["quadrants"][1]["present"] == false);
    }

    TEST_CASE("direction and traffic selection")
    {
        TempDir tmp("ldiag_select");
        const auto input = series_trace(tmp.path, gen_poisson(4096, 4.0, 1), gen_poisson(4096, 4.0, 2));
        auto c = config_for(input, tmp.path / "out");
        c.directions = {Direction::Download};
        c.kinds = {TrafficKind::Video};
        const auto r = run_ldiag(c);
        REQUIRE(r.quadrants.size() == 1);
        CHECK(r.quadrants[0].direction == Direction::Download);
        CHECK(r.quadrants[0].kind == TrafficKind::Video);
    }

    TEST_CASE("fit range overrides are honoured")
    {
        TempDir tmp("ldiag_fit");
        const auto input = series_trace(tmp.path, gen_poisson(4096, 4.0, 1), gen_poisson(4096, 4.0, 2));
        auto c = config_for(input, tmp.path / "out");
        c.fit_j1 = 2;
        c.fit_j2 = 6;
        for (const auto& q : run_ldiag(c).quadrants) {
            CHECK(q.estimate.j1 == 2);
            CHECK(q.estimate.j2 == 6);
        }
    }

    TEST_CASE("topflows picks the constructed ranking")
    {
        TempDir tmp("topflows");
        std::vector<PacketRecord> recs;
        const std::array<std::pair<std::uint8_t, int>, 3> peers{{{1, 10}, {2, 50}, {3, 25}}};
        for (int bin = 0; bin < 3000; ++bin)
            for (const auto& [host, per100] : peers)
                if ((bin * 7 + host) % 100 < per100)
                    recs.push_back(pkt(0.02 * bin + 0.001 * host, Direction::Download, 1200, Transport::Udp,
                        Ipv4Address{58, 40, 0, host}));
        const auto input = write_trace(tmp.path, "t.csv", recs);
        const auto r1 = run_topflows(config_for(input, tmp.path / "out1"), 1);
        REQUIRE(r1.flows.size() == 3);
        CHECK(r1.selected.remote_addr == Ipv4Address{58, 40, 0, 2});
        CHECK(r1.flows[1].remote_addr == Ipv4Address{58, 40, 0, 3});
        CHECK(r1.flows[2].remote_addr == Ipv4Address{58, 40, 0, 1});
        CHECK(fs::exists(tmp.path / "out1" / "flows.csv"));
        CHECK(fs::exists(tmp.path / "out1" / "flow1_ldiag_download_overall.csv"));
        const auto r3 = run_topflows(config_for(input, tmp.path / "out3"), 3);
        CHECK(r3.selected.remote_addr == Ipv4Address{58, 40, 0, 1});
        CHECK_THROWS_AS(run_topflows(config_for(input, tmp.path / "out4"), 4), AnalysisError);
        CHECK_THROWS_AS(run_topflows(config_for(input, tmp.path / "out0"), 0), InputError);
    }

    TEST_CASE("stationarity on a stationary trace")
    {
        TempDir tmp("stationarity");
        const auto input = series_trace(tmp.path, gen_poisson(3 << 12, 4.0, 1), gen_poisson(3 << 12, 4.0, 2));
        auto c = config_for(input, tmp.path / "out");
        c.kinds = {TrafficKind::Overall};
        const auto r = run_stationarity(c);
        REQUIRE(r.quadrants.size() == 2);
        for (const auto& q : r.quadrants) {
            REQUIRE(q.present);
            CHECK(q.report.max_octave() > 3);
        }
        CHECK(fs::exists(tmp.path / "out" / "stationarity_download_overall.csv"));
        CHECK(fs::exists(tmp.path / "out" / "stationarity.json"));
    }

    TEST_CASE("bitrate report")
    {
        TempDir tmp("bitrate");
        PipelineConfig c;
        c.output_dir = tmp.path;
        const double kbps = run_bitrate(c, BitrateInputs{5475, 0.1613, 0.485, 12198, 0});
        CHECK(kbps == doctest::Approx(305.4).epsilon(0.001));
        const auto j = load_json(tmp.path / "bitrate.json");
        CHECK(j["video_kbps"] == doctest::Approx(305.44).epsilon(1e-4));
    }

    TEST_CASE("bitrate from a trace")
    {
        TempDir tmp("bitrate_trace");
        // 20 s of 1000-byte video downloads, 10 per second: 10 * 1000 * 8 / 1024 Kbps.
        std::vector<PacketRecord> recs;
        for (int i = 0; i <= 200; ++i)
            recs.push_back(pkt(0.1 * i, Direction::Download, 1000));
        const double kbps = run_bitrate_from_trace(config_for(write_trace(tmp.path, "t.csv", recs), tmp.path), 0.0);
        CHECK(kbps == doctest::Approx(201.0 * 1000 * 8 / 1024 / 20.0));
    }

    TEST_CASE("reports are byte-identical across runs and listed in the manifest")
    {
        TempDir tmp("repro");
        const auto input = series_trace(tmp.path, gen_poisson(4096, 4.0, 1), gen_poisson(4096, 4.0, 2));
        run_ldiag(config_for(input, tmp.path / "a"));
        run_ldiag(config_for(input, tmp.path / "b"));
        const auto manifest = load_json(tmp.path / "a" / "manifest.json");
        CHECK(manifest["command"] == "ldiag");
        const std::string hash = manifest["config_hash"];
        CHECK(hash.size() == 64);
        std::size_t listed = 0;
        for (const auto& f : manifest["files"]) {
            const std::string name = f["file"];
            CHECK(f["config_hash"] == hash);
            CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
            CHECK(f["sha256"] == sha256_hex(slurp(tmp.path / "a" / name)));
            ++listed;
        }
        std::size_t on_disk = 0;
        for (const auto& e : fs::directory_iterator(tmp.path / "a"))
            on_disk += e.path().filename() != "manifest.json";
        CHECK(listed == on_disk);
        CHECK(slurp(tmp.path / "a" / "manifest.json") == slurp(tmp.path / "b" / "manifest.json"));

        auto other = config_for(input, tmp.path / "c");
        other.bin_width = 0.04;
        run_ldiag(other);
        CHECK(load_json(tmp.path / "c" / "manifest.json")["config_hash"] != hash);
    }

    TEST_CASE("synth kinds write their artefacts")
    {
        TempDir tmp("synth");
        PipelineConfig c;
        c.seed = 3;
        SynthOptions o;
        o.length = 4096;
        const std::vector<std::pair<SynthKind, std::vector<std::string>>> kinds{
            {SynthKind::Mix, {"records.csv", "truth.json"}}, {SynthKind::Fgn, {"series.csv"}},
            {SynthKind::Periodic, {"series.csv"}}, {SynthKind::Poisson, {"series.csv"}},
            {SynthKind::FgnTrace, {"records.csv", "truth.json"}},
            {SynthKind::PoissonTrace, {"records.csv", "truth.json"}}};
        int i = 0;
        for (const auto& [kind, files] : kinds) {
            c.output_dir = tmp.path / std::to_string(i++);
            o.kind = kind;
            run_synth(c, o);
            for (const auto& f : files)
                CHECK(fs::exists(c.output_dir / f));
            CHECK(fs::exists(c.output_dir / "manifest.json"));
        }
        c.output_dir = tmp.path / "pcap";
        o.kind = SynthKind::Mix;
        o.pcap = true;
        run_synth(c, o);
        const std::vector<fs::path> in{c.output_dir / "records.pcap"};
        const auto loaded = load_trace(in, {testing::kLocal});
        CHECK(loaded.stats.emitted == loaded.stats.total);
        CHECK(loaded.records == rebased(gen_session_mix(random_mix_spec(3)).records));
    }

    TEST_CASE("convert normalises pcap to csv")
    {
        TempDir tmp("convert");
        const auto recs = gen_session_mix(random_mix_spec(8)).records;
        write_pcap(tmp.path / "in.pcap", recs);
        auto c = config_for(tmp.path / "in.pcap", tmp.path / "out");
        const auto stats = run_convert(c, "records.csv", false);
        CHECK(stats.emitted == recs.size());
        CHECK(read_records_csv(tmp.path / "out" / "records.csv") == rebased(recs));
    }

    TEST_CASE("input problems surface as input errors")
    {
        TempDir tmp("errors");
        CHECK_THROWS_AS(run_summary(config_for(tmp.path / "missing.csv", tmp.path)), InputError);
        std::ofstream(tmp.path / "bad.csv") << "nonsense\n";
        CHECK_THROWS_AS(run_ldiag(config_for(tmp.path / "bad.csv", tmp.path)), InputError);
    }

    TEST_CASE("number formatting")
    {
        CHECK(format_number(0.123456789) == "0.123457");
        CHECK(format_number(5.12) == "5.12");
        CHECK(format_number(123456789.0) == "1.23457e+08");
        CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
