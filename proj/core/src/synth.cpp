#include "tvtrace/synth.hpp"

#include "tvtrace/error.hpp"

#include <fftw3.h>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace tvtrace {

namespace {

using Rng = std::mt19937_64;

constexpr std::uint32_t kIpHeader = 20;
constexpr std::uint32_t kTcpHeader = 20;
constexpr std::uint32_t kUdpHeader = 8;
constexpr std::uint32_t kLargePacket = 1000;
constexpr std::size_t kVideoLargePackets = 10;

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

void fft_inplace(std::vector<std::complex<double>>& data)
{
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

std::uint32_t l4_header(Transport t)
{
    return t == Transport::Tcp ? kTcpHeader : kUdpHeader;
}

PacketRecord make_packet(const SessionBlueprint& b, Direction dir, double t, std::uint32_t size)
{
    PacketRecord r;
    r.timestamp = Timestamp(std::llround(t * 1e6));
    r.transport = b.transport;
    r.direction = dir;
    r.ip_total_len = size;
    r.payload_len = size - kIpHeader - l4_header(b.transport);
    if (dir == Direction::Upload) {
        r.src_addr = b.local_addr;
        r.src_port = b.local_port;
        r.dst_addr = b.remote_addr;
        r.dst_port = b.remote_port;
    } else {
        r.src_addr = b.remote_addr;
        r.src_port = b.remote_port;
        r.dst_addr = b.local_addr;
        r.dst_port = b.local_port;
    }
    return r;
}

std::vector<double> arrival_times(std::size_t count, double start, double end, TimingModel timing, Rng& rng)
{
    std::vector<double> times(count);
    if (timing == TimingModel::Uniform) {
        const double step = (end - start) / static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i)
            times[i] = start + step * (static_cast<double>(i) + 0.5);
    } else {
        // A Poisson process conditioned on its count: sorted uniform instants.
        std::uniform_real_distribution<double> u(start, end);
        for (auto& t : times)
            t = u(rng);
        std::sort(times.begin(), times.end());
    }
    return times;
}

struct Tagged {
    PacketRecord record;
    bool video;
};

SessionMix finish_mix(std::vector<Tagged> packets, std::map<SessionKey, bool> truth)
{
    std::stable_sort(packets.begin(), packets.end(),
        [](const Tagged& a, const Tagged& b) { return a.record.timestamp < b.record.timestamp; });
    SessionMix mix;
    mix.records.reserve(packets.size());
    mix.packet_is_video.reserve(packets.size());
    for (const auto& p : packets) {
        mix.records.push_back(p.record);
        mix.packet_is_video.push_back(p.video);
    }
    mix.session_is_video = std::move(truth);
    return mix;
}

} // namespace

double fgn_autocovariance(double hurst, std::size_t lag)
{
    const double k = static_cast<double>(lag);
    const double two_h = 2.0 * hurst;
    return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(std::abs(k - 1.0), two_h));
}

std::vector<double> gen_fgn(std::size_t length, double hurst, std::uint64_t seed)
{
    if (!(hurst > 0.0 && hurst < 1.0))
        throw AnalysisError("fGn: hurst must lie in (0, 1)");
    if (length == 0 || (length & (length - 1)) != 0)
        throw AnalysisError("fGn: length must be a power of two");

    // Circulant embedding of the n x n Toeplitz covariance; grow the embedding
    // until its spectrum is non-negative.
    std::vector<std::complex<double>> eigen;
    std::size_t m = 2 * length;
    for (int attempt = 0;; ++attempt) {
        eigen.assign(m, 0.0);
        for (std::size_t k = 0; k < m; ++k)
            eigen[k] = fgn_autocovariance(hurst, std::min(k, m - k));
        fft_inplace(eigen);
        double peak = 0.0;
        double lowest = 0.0;
        for (const auto& e : eigen) {
            peak = std::max(peak, e.real());
            lowest = std::min(lowest, e.real());
        }
        if (lowest >= -1e-10 * peak)
            break;
        if (attempt == 3)
            throw AnalysisError("fGn: circulant embedding is not non-negative definite");
        m *= 2;
    }

    Rng rng(seed);
    std::normal_distribution<double> normal;
    std::vector<std::complex<double>> w(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double scale = std::sqrt(std::max(eigen[k].real(), 0.0) / static_cast<double>(m));
        const double re = normal(rng);
        const double im = normal(rng);
        w[k] = scale * std::complex<double>(re, im);
    }
    fft_inplace(w);

    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i)
        out[i] = w[i].real();
    return out;
}

std::vector<std::uint64_t> gen_poisson(std::size_t length, double rate, std::uint64_t seed)
{
    if (!(rate > 0.0))
        throw AnalysisError("poisson: rate must be positive");
    return gen_periodic(length, 2, rate, 0.0, seed);
}

std::vector<std::uint64_t> gen_periodic(std::size_t length, std::size_t period_bins, double base_rate, double amplitude,
    std::uint64_t seed)
{
    if (period_bins < 2)
        throw AnalysisError("periodic: period must be at least 2 bins");
    if (amplitude < 0.0)
        throw AnalysisError("periodic: amplitude must be non-negative");
    if (base_rate < 0.0)
        throw AnalysisError("periodic: negative rate");

    Rng rng(seed);
    std::poisson_distribution<std::uint64_t> poisson;
    using Param = std::poisson_distribution<std::uint64_t>::param_type;
    const std::size_t on_bins = period_bins / 2;
    std::vector<std::uint64_t> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double rate = base_rate + ((i % period_bins) < on_bins ? amplitude : 0.0);
        out[i] = rate > 0.0 ? poisson(rng, Param(rate)) : 0;
    }
    return out;
}

std::uint64_t SessionMix::video_bytes(Direction d) const
{
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].direction == d && packet_is_video[i])
            total += records[i].ip_total_len;
    }
    return total;
}

std::uint64_t SessionMix::signaling_bytes(Direction d) const
{
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].direction == d && !packet_is_video[i])
            total += records[i].ip_total_len;
    }
    return total;
}

SessionMix gen_session_mix(const SessionMixSpec& spec)
{
    if (!(spec.duration > 0.0))
        throw AnalysisError("session mix: duration must be positive");

    Rng rng(spec.seed);
    std::vector<Tagged> packets;
    std::map<SessionKey, bool> truth;

    for (std::size_t s = 0; s < spec.sessions.size(); ++s) {
        const auto& b = spec.sessions[s];
        const std::string where = "session blueprint " + std::to_string(s) + ": ";
        const bool video = b.role == SessionRole::Video;

        if (b.large_size.min < kLargePacket || b.large_size.max < b.large_size.min || b.large_size.max > 0xFFFF)
            throw AnalysisError(where + "large sizes must be >= 1000 bytes");
        const std::uint32_t floor_size = kIpHeader + l4_header(b.transport);
        if (b.small_size.min < floor_size || b.small_size.max < b.small_size.min || b.small_size.max >= kLargePacket)
            throw AnalysisError(where + "small sizes must fit headers and stay below 1000 bytes");
        if (video != (b.large_packets() >= kVideoLargePackets))
            throw AnalysisError(where + (video ? "video session needs at least 10 large packets"
                                               : "signaling session must carry fewer than 10 large packets"));

        const double start = b.start;
        const double end = b.end > 0.0 ? b.end : spec.duration;
        if (!(start >= 0.0 && end > start))
            throw AnalysisError(where + "empty time window");

        const SessionKey key = SessionKey::of(make_packet(b, Direction::Upload, 0.0, floor_size));
        if (!truth.emplace(key, video).second)
            throw AnalysisError(where + "endpoints collide with an earlier session");

        auto emit = [&](std::size_t count, Direction dir, SizeRange sizes, bool large) {
            std::uniform_int_distribution<std::uint32_t> size_dist(sizes.min, sizes.max);
            for (double t : arrival_times(count, start, end, b.timing, rng))
                packets.push_back({make_packet(b, dir, t, size_dist(rng)), video && large});
        };
        emit(b.large_download, Direction::Download, b.large_size, true);
        emit(b.large_upload, Direction::Upload, b.large_size, true);
        emit(b.small_download, Direction::Download, b.small_size, false);
        emit(b.small_upload, Direction::Upload, b.small_size, false);
    }
    return finish_mix(std::move(packets), std::move(truth));
}

SessionMixSpec random_mix_spec(std::uint64_t seed)
{
    Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
    auto uniform = [&rng](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };

    SessionMixSpec spec;
    spec.seed = seed;
    spec.duration = 60.0;
    const Ipv4Address local(10, 0, 0, 1);
    const std::size_t n_video = uniform(1, 4);
    const std::size_t n_signaling = uniform(1, 6);
    std::set<std::pair<std::uint32_t, std::uint16_t>> used;

    for (std::size_t s = 0; s < n_video + n_signaling; ++s) {
        SessionBlueprint b;
        b.role = s < n_video ? SessionRole::Video : SessionRole::Signaling;
        b.local_addr = local;
        b.local_port = static_cast<std::uint16_t>(uniform(1024, 65535));
        do {
            b.remote_addr = Ipv4Address(static_cast<std::uint8_t>(uniform(58, 222)),
                static_cast<std::uint8_t>(uniform(0, 255)), static_cast<std::uint8_t>(uniform(0, 255)),
                static_cast<std::uint8_t>(uniform(1, 254)));
            b.remote_port = static_cast<std::uint16_t>(uniform(1024, 65535));
        } while (!used.emplace(b.remote_addr.value(), b.remote_port).second);
        b.transport = uniform(0, 1) == 0 ? Transport::Tcp : Transport::Udp;
        b.timing = uniform(0, 1) == 0 ? TimingModel::Uniform : TimingModel::Poisson;
        b.small_size = {b.transport == Transport::Tcp ? 40u : 28u, 199};

        if (b.role == SessionRole::Video) {
            b.large_download = uniform(10, 300);
            b.large_upload = uniform(0, 150);
            b.small_download = uniform(0, 120);
            b.small_upload = uniform(0, 120);
        } else {
            const std::size_t large = uniform(0, 9);
            b.large_download = uniform(0, large);
            b.large_upload = large - b.large_download;
            b.small_download = uniform(1, 150);
            b.small_upload = uniform(0, 150);
        }
        const double a = static_cast<double>(uniform(0, 40));
        b.start = a;
        b.end = a + static_cast<double>(uniform(5, 20));
        spec.sessions.push_back(b);
    }
    return spec;
}

std::vector<std::uint64_t> counts_from_driver(const std::vector<double>& driver, double mean, double scale)
{
    std::vector<std::uint64_t> out(driver.size());
    std::transform(driver.begin(), driver.end(), out.begin(), [=](double x) {
        return static_cast<std::uint64_t>(std::max(0.0, std::round(mean + scale * x)));
    });
    return out;
}

SessionMix gen_series_trace(const SeriesTraceSpec& spec)
{
    if (spec.peers == 0 || spec.peers > 200)
        throw AnalysisError("series trace: peers must be in [1, 200]");
    if (!(spec.bin_width > 0.0))
        throw AnalysisError("series trace: bin width must be positive");

    Rng rng(spec.seed);
    std::uniform_real_distribution<double> within(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> large(1000, 1500);
    std::uniform_int_distribution<std::uint32_t> small(60, 199);
    std::uniform_int_distribution<std::size_t> pick_peer(0, spec.peers - 1);
    std::poisson_distribution<std::uint64_t> signaling(spec.signaling_rate > 0.0 ? spec.signaling_rate : 1.0);

    std::vector<SessionBlueprint> video(spec.peers);
    std::vector<SessionBlueprint> control(spec.peers);
    for (std::size_t p = 0; p < spec.peers; ++p) {
        auto& v = video[p];
        v.local_addr = spec.local_addr;
        v.local_port = 5000;
        v.remote_addr = Ipv4Address(58, 40, static_cast<std::uint8_t>(p / 250), static_cast<std::uint8_t>(1 + p % 250));
        v.remote_port = 8000;
        v.transport = spec.transport;
        control[p] = v;
        control[p].local_port = 6000;
    }

    std::vector<Tagged> packets;
    std::map<SessionKey, std::size_t> large_count;
    auto fill = [&](const std::vector<std::uint64_t>& counts, Direction dir) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double t0 = static_cast<double>(i) * spec.bin_width;
            for (std::uint64_t k = 0; k < counts[i]; ++k) {
                const auto& b = video[pick_peer(rng)];
                packets.push_back({make_packet(b, dir, t0 + within(rng) * spec.bin_width, large(rng)), true});
            }
            const std::uint64_t n_sig = spec.signaling_rate > 0.0 ? signaling(rng) : 0;
            for (std::uint64_t k = 0; k < n_sig; ++k) {
                const auto& b = control[pick_peer(rng)];
                packets.push_back({make_packet(b, dir, t0 + within(rng) * spec.bin_width, small(rng)), false});
            }
        }
    };
    fill(spec.download_counts, Direction::Download);
    fill(spec.upload_counts, Direction::Upload);

    // Ground truth follows the large-packet rule per session.
    std::map<SessionKey, bool> truth;
    for (const auto& p : packets) {
        const auto key = SessionKey::of(p.record);
        truth.emplace(key, false);
        if (p.record.ip_total_len >= kLargePacket)
            ++large_count[key];
    }
    for (auto& [key, is_video] : truth)
        is_video = large_count[key] >= kVideoLargePackets;
    for (auto& p : packets)
        p.video = p.video && truth[SessionKey::of(p.record)];
    return finish_mix(std::move(packets), std::move(truth));
}

void write_ground_truth_json(std::ostream& out, const SessionMix& mix)
{
    nlohmann::ordered_json doc;
    auto sessions = nlohmann::ordered_json::array();
    for (const auto& [key, is_video] : mix.session_is_video)
        sessions.push_back({{"key", key.to_string()}, {"is_video", is_video}});
    doc["sessions"] = std::move(sessions);
    doc["packets"] = mix.records.size();
    doc["video_packets"] = std::count(mix.packet_is_video.begin(), mix.packet_is_video.end(), true);
    doc["video_bytes"] = {{"upload", mix.video_bytes(Direction::Upload)},
        {"download", mix.video_bytes(Direction::Download)}};
    doc["signaling_bytes"] = {{"upload", mix.signaling_bytes(Direction::Upload)},
        {"download", mix.signaling_bytes(Direction::Download)}};
    out << doc.dump(2) << '\n';
}

} // namespace tvtrace
