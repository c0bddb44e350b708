#include "doctest.h"
#include "helpers.hpp"

#include "tvtrace/error.hpp"
#include "tvtrace/timeseries.hpp"

#include <numeric>
#include <sstream>

using namespace tvtrace;
using testing::pkt;

namespace {

constexpr BinSelection kDown{Direction::Download, true};

std::size_t selected(const std::vector<PacketRecord>& recs, const BinSelection& sel)
{
    std::size_t n = 0;
    for (const auto& r : recs)
        if (r.direction == sel.direction && !(sel.payload_only && r.transport == Transport::Tcp && r.payload_len == 0))
            ++n;
    return n;
}

} // namespace

TEST_SUITE("timeseries")
{
    TEST_CASE("three packets into two bins")
    {
        const std::vector recs{pkt(0.0, Direction::Download, 100), pkt(0.005, Direction::Download, 100),
            pkt(0.025, Direction::Download, 100)};
        const auto ts = bin_counts(recs, 0.02, kDown);
        CHECK(ts.counts == std::vector<std::uint64_t>{2, 1});
        CHECK(ts.bin_width == 0.02);
    }

    TEST_CASE("a lone empty acknowledgment leaves nothing to bin")
    {
        const std::vector recs{pkt(0.0, Direction::Download, 40, Transport::Tcp)};
        REQUIRE(recs[0].payload_len == 0);
        try {
            bin_counts(recs, 0.02, kDown);
            FAIL("expected an error");
        } catch (const AnalysisError& e) {
            CHECK(std::string(e.what()) == "empty series");
        }
        CHECK(bin_counts(recs, 0.02, BinSelection{Direction::Download, false}).total() == 1);
    }

    TEST_CASE("one packet per bin for 20 seconds")
    {
        std::vector<PacketRecord> recs;
        for (int i = 0; i < 1000; ++i)
            recs.push_back(pkt(0.02 * i + 0.001, Direction::Download, 500));
        const auto ts = bin_counts(recs, 0.02, kDown);
        CHECK(ts.size() == 1000);
        CHECK(ts.total() == 1000);
        CHECK(std::all_of(ts.counts.begin(), ts.counts.end(), [](auto c) { return c == 1; }));
    }

    TEST_CASE("only the selected direction is counted")
    {
        const std::vector recs{pkt(0.0, Direction::Upload, 100), pkt(0.5, Direction::Download, 100),
            pkt(0.7, Direction::Download, 100)};
        const auto ts = bin_counts(recs, 0.1, kDown);
        CHECK(ts.start == doctest::Approx(0.5));
        CHECK(ts.counts == std::vector<std::uint64_t>{1, 0, 1});
        CHECK(bin_counts(recs, 0.1, BinSelection{Direction::Upload, true}).counts == std::vector<std::uint64_t>{1});
    }

    TEST_CASE("bad widths")
    {
        const std::vector recs{pkt(0.0, Direction::Download, 100)};
        CHECK_THROWS_AS(bin_counts(recs, 0.0, kDown), AnalysisError);
        CHECK_THROWS_AS(bin_counts(recs, -1.0, kDown), AnalysisError);
        CHECK_THROWS_AS(bin_counts(recs, 1e-8, kDown), AnalysisError);
    }

    TEST_CASE("count conservation at every width")
    {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto recs = testing::random_trace(seed, 600);
            for (auto sel : {BinSelection{Direction::Download, true}, BinSelection{Direction::Upload, false}}) {
                const auto n = selected(recs, sel);
                for (double bw : {0.001, 0.013, 0.02, 0.1, 1.0, 100.0})
                    CHECK(bin_counts(recs, bw, sel).total() == n);
            }
        }
    }

    TEST_CASE("refinement identity")
    {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto recs = testing::random_trace(seed, 600);
            for (double bw : {0.002, 0.02, 0.04, 0.5}) {
                const auto coarse = bin_counts(recs, bw, kDown);
                const auto fine = bin_counts(recs, bw / 2, kDown);
                CHECK(aggregate_pairs(fine).counts == coarse.counts);
            }
        }
    }

    TEST_CASE("time shift leaves counts unchanged")
    {
        auto recs = testing::random_trace(8, 500);
        const auto ref = bin_counts(recs, 0.02, kDown);
        for (auto& r : recs)
            r.timestamp += Timestamp{123'456'789};
        CHECK(bin_counts(recs, 0.02, kDown).counts == ref.counts);
    }

    TEST_CASE("aggregate_pairs pads an odd tail")
    {
        const TimeSeries ts{0.01, 0.0, {1, 2, 3, 4, 5}};
        const auto a = aggregate_pairs(ts);
        CHECK(a.counts == std::vector<std::uint64_t>{3, 7, 5});
        CHECK(a.bin_width == doctest::Approx(0.02));
    }

    TEST_CASE("series csv")
    {
        const TimeSeries ts{0.02, 0.0, {4, 0, 9}};
        std::ostringstream out;
        write_series_csv(out, ts, "test");
        const auto text = out.str();
        CHECK(text.rfind("#", 0) == 0);
        CHECK(text.find("bin_index,count\n0,4\n1,0\n2,9\n") != std::string::npos);
    }
}
