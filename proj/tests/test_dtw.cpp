#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "wavefault/dtw.hpp"
#include "wavefault/random.hpp"

namespace wf = wavefault;

namespace {

// Every monotone path from (0,0) to (m-1,n-1), minimum summed squared cost.
void enumerate(const std::vector<double>& x, const std::vector<double>& y, std::size_t i, std::size_t j, double acc,
               const wf::Band& band, double& best) {
    if (band && (i > j ? i - j : j - i) > *band) return;
    acc += (x[i] - y[j]) * (x[i] - y[j]);
    if (i + 1 == x.size() && j + 1 == y.size()) {
        best = std::min(best, acc);
        return;
    }
    if (i + 1 < x.size() && j + 1 < y.size()) enumerate(x, y, i + 1, j + 1, acc, band, best);
    if (i + 1 < x.size()) enumerate(x, y, i + 1, j, acc, band, best);
    if (j + 1 < y.size()) enumerate(x, y, i, j + 1, acc, band, best);
}

double brute_force(const std::vector<double>& x, const std::vector<double>& y, const wf::Band& band = std::nullopt) {
    double best = std::numeric_limits<double>::infinity();
    enumerate(x, y, 0, 0, 0.0, band, best);
    return std::sqrt(best);
}

std::vector<double> random_ints(wf::Rng& rng, std::size_t len, int hi) {
    std::vector<double> v(len);
    for (auto& x : v) x = static_cast<double>(wf::uniform_index(rng, static_cast<std::uint64_t>(hi) + 1));
    return v;
}

std::vector<double> random_reals(wf::Rng& rng, std::size_t len) {
    std::vector<double> v(len);
    for (auto& x : v) x = wf::standard_normal(rng);
    return v;
}

} // namespace

TEST(Dtw, SmallWorkedExample) {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> y{1, 3};
    const auto r = wf::dtw(x, y);
    EXPECT_DOUBLE_EQ(r.distance, 1.0);
    EXPECT_TRUE(wf::is_valid_path(r.path));
    EXPECT_EQ(r.path.pairs.front(), (wf::IndexPair{0, 0}));
    EXPECT_EQ(r.path.pairs.back(), (wf::IndexPair{2, 1}));
}

TEST(Dtw, IdenticalSequencesHaveZeroDistanceAndDiagonalPath) {
    const std::vector<double> x{0.5, -1, 2, 2, 7};
    const auto r = wf::dtw(x, x);
    EXPECT_EQ(r.distance, 0.0);
    ASSERT_EQ(r.path.size(), x.size());
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(r.path.pairs[k], (wf::IndexPair{k, k}));
}

TEST(Dtw, MatchesExhaustiveEnumeration) {
    wf::Rng rng(20240611);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = random_ints(rng, 1 + wf::uniform_index(rng, 7), 3);
        const auto y = random_ints(rng, 1 + wf::uniform_index(rng, 7), 3);
        const auto r = wf::dtw(x, y);
        EXPECT_NEAR(r.distance, brute_force(x, y), 1e-9) << "trial " << trial;
    }
}

TEST(Dtw, BandedMatchesBandedEnumeration) {
    wf::Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = random_ints(rng, 1 + wf::uniform_index(rng, 7), 3);
        const auto y = random_ints(rng, 1 + wf::uniform_index(rng, 7), 3);
        const std::size_t diff = x.size() > y.size() ? x.size() - y.size() : y.size() - x.size();
        const wf::Band band = diff + wf::uniform_index(rng, 3);
        const auto r = wf::dtw(x, y, band);
        EXPECT_NEAR(r.distance, brute_force(x, y, band), 1e-9);
        for (const auto& [p, q] : r.path.pairs) EXPECT_LE(p > q ? p - q : q - p, *band);
    }
}

TEST(Dtw, PathInvariantsOnRandomPairs) {
    wf::Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto x = random_reals(rng, 1 + wf::uniform_index(rng, 40));
        const auto y = random_reals(rng, 1 + wf::uniform_index(rng, 40));
        const auto r = wf::dtw(x, y);
        const auto& w = r.path;
        ASSERT_TRUE(wf::is_valid_path(w));
        EXPECT_EQ(w.pairs.front(), (wf::IndexPair{0, 0}));
        EXPECT_EQ(w.pairs.back(), (wf::IndexPair{x.size() - 1, y.size() - 1}));
        EXPECT_GE(w.size(), std::max(x.size(), y.size()));
        EXPECT_LE(w.size(), x.size() + y.size() - 1);
        EXPECT_NEAR(wf::path_cost(x, y, w), r.distance, 1e-9);
    }
}

TEST(Dtw, TiesPreferTheDiagonal) {
    const std::vector<double> x{0, 0, 0};
    const std::vector<double> y{0, 0, 0};
    const auto r = wf::dtw(x, y);
    EXPECT_EQ(r.path.size(), 3u);
}

TEST(Dtw, SymmetricDistanceTransposedPath) {
    wf::Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_reals(rng, 3 + wf::uniform_index(rng, 20));
        const auto y = random_reals(rng, 3 + wf::uniform_index(rng, 20));
        EXPECT_NEAR(wf::dtw(x, y).distance, wf::dtw(y, x).distance, 1e-12);
    }
}

TEST(Dtw, NeverExceedsLockStepDistance) {
    wf::Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto len = 2 + wf::uniform_index(rng, 30);
        const auto x = random_reals(rng, len);
        const auto y = random_reals(rng, len);
        EXPECT_LE(wf::dtw(x, y).distance, wf::euclidean_distance(x, y) + 1e-12);
        EXPECT_NEAR(wf::dtw(x, y, std::size_t{0}).distance, wf::euclidean_distance(x, y), 1e-12);
    }
}

TEST(Dtw, TwoRowAndBoundedAgreeWithFullMatrix) {
    wf::Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const auto x = random_reals(rng, 1 + wf::uniform_index(rng, 60));
        const auto y = random_reals(rng, 1 + wf::uniform_index(rng, 60));
        const wf::Band band = trial % 2 ? wf::Band{} : wf::effective_band(std::size_t{4}, x.size(), y.size());
        const double full = wf::dtw(x, y, band).distance;
        EXPECT_EQ(wf::dtw_distance_only(x, y, band), full);
        EXPECT_EQ(wf::dtw_distance_bounded(x, y, band, std::numeric_limits<double>::infinity()), full);
        EXPECT_EQ(wf::dtw_distance_bounded(x, y, band, full), full);
        const double cut = wf::dtw_distance_bounded(x, y, band, 0.5 * full);
        EXPECT_TRUE(std::isinf(cut) || cut == full);
    }
}

TEST(Dtw, BoundedAbandonsWhenTheFirstRowIsAlreadyTooExpensive) {
    const std::vector<double> x{10, 10, 10};
    const std::vector<double> y{0, 0, 0};
    EXPECT_TRUE(std::isinf(wf::dtw_distance_bounded(x, y, wf::Band{}, 5.0)));
    EXPECT_NEAR(wf::dtw_distance_bounded(x, y, wf::Band{}, 100.0), std::sqrt(300.0), 1e-12);
}

TEST(Dtw, BandNarrowerThanLengthDifferenceThrows) {
    const std::vector<double> x(10, 1.0);
    const std::vector<double> y(4, 1.0);
    try {
        (void)wf::dtw(x, y, std::size_t{5});
        FAIL() << "expected BandTooNarrow";
    } catch (const wf::Error& e) {
        EXPECT_EQ(e.kind(), wf::ErrorKind::BandTooNarrow);
    }
    EXPECT_NO_THROW((void)wf::dtw(x, y, std::size_t{6}));
    EXPECT_EQ(wf::effective_band(std::size_t{2}, 10, 4), wf::Band{6});
    EXPECT_EQ(wf::effective_band(std::nullopt, 10, 4), wf::Band{});
}

TEST(Dtw, EmptyInputThrows) {
    const std::vector<double> x;
    const std::vector<double> y{1.0};
    try {
        (void)wf::dtw(x, y);
        FAIL() << "expected EmptyInput";
    } catch (const wf::Error& e) {
        EXPECT_EQ(e.kind(), wf::ErrorKind::EmptyInput);
    }
    EXPECT_THROW((void)wf::dtw_distance_only(y, x), wf::Error);
}

TEST(Dtw, WorksOnFloatSamples) {
    const std::vector<float> x{1.f, 2.f, 3.f};
    const std::vector<double> y{1.0, 3.0};
    EXPECT_DOUBLE_EQ(wf::dtw(x, y).distance, 1.0);
}

TEST(Dtw, EuclideanNeedsEqualLengths) {
    const std::vector<double> x{1, 2};
    const std::vector<double> y{1};
    EXPECT_THROW((void)wf::euclidean_distance(x, y), wf::Error);
}
