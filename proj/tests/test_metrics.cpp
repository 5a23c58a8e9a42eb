#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "speechrl/metrics.hpp"
#include "speechrl/rng.hpp"
#include "testutil.hpp"

using namespace speechrl;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// independent two-pass oracle for one batch's mean and population std
std::pair<double, double> two_pass(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += v[i];
    mean /= static_cast<double>(hi - lo);
    double var = 0.0;
    for (std::size_t i = lo; i < hi; ++i) var += (v[i] - mean) * (v[i] - mean);
    var /= static_cast<double>(hi - lo);
    return {mean, std::sqrt(var)};
}

}  // namespace

TEST_CASE("accuracy endpoints and midpoint") {
    REQUIRE(accuracy(50.0, 50) == 100.0);
    REQUIRE(accuracy(-50.0, 50) == 0.0);
    REQUIRE(accuracy(0.0, 50) == 50.0);
    REQUIRE_THAT(accuracy(49.0, 50), Catch::Matchers::WithinAbs(99.0, 1e-12));
    REQUIRE_THAT(accuracy(29.4, 50), Catch::Matchers::WithinAbs(79.4, 1e-12));
}

TEST_CASE("out-of-range scores are rejected") {
    REQUIRE_THROWS_AS(accuracy(51.0, 50), OutOfRangeScore);
    REQUIRE_THROWS_AS(accuracy(-51.0, 50), OutOfRangeScore);
}

TEST_CASE("velocity of a constant series is zero") {
    const std::vector<double> flat(1200, 7.0);
    REQUIRE(velocity(flat, 500) == 0.0);
    REQUIRE(velocity(flat, 1000) == 0.0);
}

TEST_CASE("velocity closed form: early -10, late 5 over x=500") {
    std::vector<double> v(600, 5.0);
    for (int i = 0; i < 6; ++i) v[static_cast<std::size_t>(i)] = -10.0;
    REQUIRE_THAT(velocity(v, 500), Catch::Matchers::WithinAbs((5.0 - (-10.0)) / 500.0, 1e-15));
}

TEST_CASE("velocity needs x+6 scores and x > 0") {
    const std::vector<double> v(505, 0.0);
    REQUIRE_THROWS_AS(velocity(v, 500), InsufficientData);
    const std::vector<double> ok(506, 0.0);
    REQUIRE(velocity(ok, 500) == 0.0);
    REQUIRE_THROWS_AS(velocity(ok, 0), Error);
}

TEST_CASE("improvement reproduces published pairings") {
    // binary greedy: 29.4 with vs 9.8 without => 19.6%
    REQUIRE_THAT(improvement(29.4, 9.8, 50), Catch::Matchers::WithinAbs(19.6, 1e-12));
    // 20-command greedy: 37.0 with vs -23.8 without => 60.8%
    REQUIRE_THAT(improvement(37.0, -23.8, 50), Catch::Matchers::WithinAbs(60.8, 1e-12));
    // 30-command greedy: 29.0 with vs -23.4 without => 52.4%
    REQUIRE_THAT(improvement(29.0, -23.4, 50), Catch::Matchers::WithinAbs(52.4, 1e-12));
}

TEST_CASE("improvement is antisymmetric") {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const double a = rng.uniform(-50.0, 50.0);
        const double b = rng.uniform(-50.0, 50.0);
        REQUIRE_THAT(improvement(a, b, 50), Catch::Matchers::WithinAbs(-improvement(b, a, 50), 1e-12));
    }
}

TEST_CASE("rolling stats on a hand example") {
    // window 2 over [1, 3, 5]: batches (1,3) and (5)
    const auto batches = rolling_stats({1.0, 3.0, 5.0}, 2);
    REQUIRE(batches.size() == 2);
    REQUIRE(batches[0].start == 0);
    REQUIRE(batches[0].mean == 2.0);
    REQUIRE(batches[0].stddev == 1.0);  // population std of {1,3}
    REQUIRE(batches[0].count == 2);
    REQUIRE(batches[1].start == 2);
    REQUIRE(batches[1].mean == 5.0);
    REQUIRE(batches[1].stddev == 0.0);
    REQUIRE(batches[1].count == 1);
}

TEST_CASE("rolling stats match a two-pass oracle on random data") {
    Rng rng(2);
    std::vector<double> v(1234);
    for (auto& x : v) x = rng.uniform(-50.0, 50.0);
    const auto batches = rolling_stats(v, 200);
    REQUIRE(batches.size() == 7);  // 6 full + 1 partial of 34
    for (const auto& b : batches) {
        const auto [mean, stddev] = two_pass(v, b.start, b.start + b.count);
        REQUIRE_THAT(b.mean, Catch::Matchers::WithinAbs(mean, 1e-12));
        REQUIRE_THAT(b.stddev, Catch::Matchers::WithinAbs(stddev, 1e-12));
    }
    REQUIRE(batches.back().count == 34);
}

TEST_CASE("rolling batches are non-overlapping and cover the series") {
    Rng rng(3);
    std::vector<double> v(777);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    std::size_t covered = 0;
    std::size_t expected_start = 0;
    for (const auto& b : rolling_stats(v, 100)) {
        REQUIRE(b.start == expected_start);
        expected_start += b.count;
        covered += b.count;
    }
    REQUIRE(covered == v.size());
}

TEST_CASE("final_window_mean uses the trailing slice") {
    REQUIRE(final_window_mean({1, 2, 3, 4, 5, 6, 7}, 5) == 5.0);
    REQUIRE(final_window_mean({10, 20}, 5) == 15.0);  // shorter than the window
    REQUIRE_THROWS_AS(final_window_mean({}, 5), InsufficientData);
}

TEST_CASE("format_number: integral values get one decimal, others round-trip") {
    REQUIRE(format_number(60.0) == "60.0");
    REQUIRE(format_number(-3.0) == "-3.0");
    REQUIRE(format_number(0.0) == "0.0");
    const double v = 0.1 + 0.2;  // not representable as a short decimal
    REQUIRE(std::stod(format_number(v)) == v);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(-1e6, 1e6);
        REQUIRE(std::stod(format_number(x)) == x);
    }
}

TEST_CASE("write_report emits the three files with exact first rows") {
    testutil::ScratchDir dir("report");
    MetricsLog log;
    log.eta = 50;
    log.scores = {10, -50, 50};
    write_report(log, dir.str());

    const auto episodes = read_lines(dir.path() / "episodes.csv");
    REQUIRE(episodes.size() == 4);
    REQUIRE(episodes[0] == "episode,score,accuracy_pct");
    REQUIRE(episodes[1] == "1,10,60.0");
    REQUIRE(episodes[2] == "2,-50,0.0");
    REQUIRE(episodes[3] == "3,50,100.0");

    const auto rolling = read_lines(dir.path() / "rolling.csv");
    REQUIRE(rolling.size() == 2);
    REQUIRE(rolling[0] == "batch_start,mean,std,count");
    // mean of {10,-50,50} = 10/3, partial batch of 3
    REQUIRE(rolling[1].substr(0, 2) == "1,");
    REQUIRE(rolling[1].back() == '3');

    const auto summary = read_lines(dir.path() / "summary.csv");
    REQUIRE(summary.size() == 2);
    REQUIRE(summary[0] == "final5_mean,velocity_500,velocity_1000,improvement_pct");
    // too short for velocities and no paired run: blanks
    const double final5 = (10.0 - 50.0 + 50.0) / 3.0;
    REQUIRE(summary[1] == format_number(final5) + ",,,");
}

TEST_CASE("write_report with an empty log emits headers only") {
    testutil::ScratchDir dir("report");
    MetricsLog log;
    write_report(log, dir.str());
    REQUIRE(read_lines(dir.path() / "episodes.csv").size() == 1);
    REQUIRE(read_lines(dir.path() / "rolling.csv").size() == 1);
    REQUIRE(read_lines(dir.path() / "summary.csv").size() == 1);
}

TEST_CASE("paired runs must share eta") {
    testutil::ScratchDir dir("report");
    MetricsLog with;
    with.eta = 50;
    with.scores = {1};
    MetricsLog without;
    without.eta = 20;
    without.scores = {1};
    REQUIRE_THROWS_AS(write_report(with, dir.str(), &without), MismatchedRuns);
}

TEST_CASE("paired summary carries the improvement column") {
    testutil::ScratchDir dir("report");
    MetricsLog with;
    with.eta = 50;
    with.scores = {29, 30, 29, 30, 29};  // mean 29.4
    MetricsLog without;
    without.eta = 50;
    without.scores = {10, 10, 10, 9, 10};  // mean 9.8
    write_report(with, dir.str(), &without);
    const auto summary = read_lines(dir.path() / "summary.csv");
    REQUIRE(summary.at(1).substr(summary[1].rfind(',') + 1) ==
            format_number(improvement(29.4, 9.8, 50)));
}

TEST_CASE("episodes.csv round-trips the score series") {
    testutil::ScratchDir dir("report");
    MetricsLog log;
    log.eta = 50;
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
        log.scores.push_back(static_cast<int>(rng.index(101)) - 50);
    }
    write_report(log, dir.str());
    REQUIRE(read_episodes_csv((dir.path() / "episodes.csv").string()) == log.scores);
}
