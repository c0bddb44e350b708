#include "tvtrace/ingest.hpp"
#include "tvtrace/session.hpp"
#include "tvtrace/synth.hpp"
#include "tvtrace/timeseries.hpp"
#include "tvtrace/wavelet.hpp"

#include <benchmark/benchmark.h>

#include <sstream>

using namespace tvtrace;

namespace {

SessionMix trace(std::size_t bins)
{
    SeriesTraceSpec spec;
    spec.download_counts = gen_poisson(bins, 5.0, 1);
    spec.upload_counts = gen_poisson(bins, 1.0, 2);
    spec.seed = 3;
    return gen_series_trace(spec);
}

} // namespace

static void BM_Dwt(benchmark::State& state)
{
    const auto x = gen_fgn(static_cast<std::size_t>(state.range(0)), 0.8, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(dwt_details(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Dwt)->RangeMultiplier(4)->Range(1 << 12, 1 << 18);

static void BM_LogscaleAndFit(benchmark::State& state)
{
    const auto details = dwt_details(gen_fgn(static_cast<std::size_t>(state.range(0)), 0.8, 1));
    for (auto _ : state) {
        const auto ld = logscale_diagram(details, kDefaultBinWidth);
        const auto [j1, j2] = default_fit_range(ld);
        benchmark::DoNotOptimize(estimate_scaling(ld, j1, j2));
    }
}
BENCHMARK(BM_LogscaleAndFit)->Arg(1 << 16);

static void BM_Fgn(benchmark::State& state)
{
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(gen_fgn(static_cast<std::size_t>(state.range(0)), 0.8, ++seed));
}
BENCHMARK(BM_Fgn)->Arg(1 << 16);

static void BM_Binning(benchmark::State& state)
{
    const auto mix = trace(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(bin_counts(mix.records, kDefaultBinWidth, BinSelection{}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mix.records.size()));
}
BENCHMARK(BM_Binning)->Arg(1 << 14)->Arg(1 << 16);

static void BM_Classify(benchmark::State& state)
{
    const auto mix = trace(1 << 14);
    for (auto _ : state)
        benchmark::DoNotOptimize(classify_records(mix.records));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mix.records.size()));
}
BENCHMARK(BM_Classify);

static void BM_PcapRead(benchmark::State& state)
{
    const auto mix = trace(1 << 14);
    std::ostringstream out;
    write_pcap(out, mix.records);
    const std::string bytes = out.str();
    const MonitoredSet monitored{Ipv4Address{10, 0, 0, 1}};
    for (auto _ : state) {
        std::istringstream in(bytes);
        benchmark::DoNotOptimize(read_pcap(in, monitored));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_PcapRead);
BENCHMARK_MAIN();
