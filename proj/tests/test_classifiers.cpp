#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "wavefault/classifiers.hpp"
#include "wavefault/random.hpp"

namespace wf = wavefault;

namespace {

std::vector<wf::Exemplar> random_exemplars(wf::Rng& rng, std::size_t per_class) {
    std::vector<wf::Exemplar> out;
    for (auto c : wf::kAllClasses) {
        for (std::uint32_t k = 0; k < per_class; ++k) {
            wf::Exemplar e;
            e.label = c;
            e.id = {c, 0, k};
            const auto len = 8 + wf::uniform_index(rng, 8);
            for (std::size_t i = 0; i < len; ++i) {
                e.values.push_back(static_cast<double>(wf::class_index(c)) + 0.3 * wf::standard_normal(rng));
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

template <typename F>
wf::ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const wf::Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return wf::ErrorKind::IoError;
}

struct Toy {
    std::vector<std::vector<double>> x;
    std::vector<wf::ClassLabel> y;
};

// Two well separated blobs plus a constant column.
Toy separable(wf::Rng& rng) {
    Toy t;
    for (int i = 0; i < 60; ++i) {
        const bool pos = i % 2 == 0;
        const double cx = pos ? 3.0 : -3.0;
        t.x.push_back({cx + 0.5 * wf::standard_normal(rng), 0.5 * wf::standard_normal(rng), 7.0});
        t.y.push_back(pos ? wf::ClassLabel::A : wf::ClassLabel::NF);
    }
    return t;
}

} // namespace

TEST(NearestNeighbor, StoresEveryExemplar) {
    wf::Rng rng(1);
    const auto nn = wf::NearestNeighbor::train(random_exemplars(rng, 40));
    EXPECT_EQ(nn.exemplars().size(), 440u);
}

TEST(NearestNeighbor, MissingClass) {
    wf::Rng rng(2);
    auto ex = random_exemplars(rng, 3);
    std::erase_if(ex, [](const wf::Exemplar& e) { return e.label == wf::ClassLabel::V; });
    EXPECT_EQ(kind_of([&] { (void)wf::NearestNeighbor::train(ex); }), wf::ErrorKind::MissingClass);
}

TEST(NearestNeighbor, EveryExemplarIsItsOwnNearestNeighbour) {
    wf::Rng rng(3);
    const auto nn = wf::NearestNeighbor::train(random_exemplars(rng, 5));
    for (const auto& e : nn.exemplars()) {
        const auto s = nn.scores(e.values);
        EXPECT_EQ(s[wf::class_index(e.label)], 0.0);
        EXPECT_EQ(nn.predict(e.values).label, e.label);
    }
}

TEST(NearestNeighbor, ScoresAreNegativeMinimumDistances) {
    wf::Rng rng(4);
    const auto ex = random_exemplars(rng, 4);
    const auto nn = wf::NearestNeighbor::train(ex, std::size_t{3});
    std::vector<double> q(10);
    for (auto& v : q) v = 5.0 + wf::standard_normal(rng);
    const auto s = nn.scores(q);
    for (auto c : wf::kAllClasses) {
        double best = INFINITY;
        for (const auto& e : ex) {
            if (e.label != c) continue;
            best = std::min(best, wf::dtw(e.values, q, wf::effective_band(std::size_t{3}, e.values.size(), q.size())).distance);
        }
        EXPECT_NEAR(s[wf::class_index(c)], -best, 1e-12);
    }
}

TEST(NearestNeighbor, StorageOrderDoesNotMatter) {
    wf::Rng rng(5);
    auto ex = random_exemplars(rng, 4);
    const auto a = wf::NearestNeighbor::train(ex);
    std::reverse(ex.begin(), ex.end());
    const auto b = wf::NearestNeighbor::train(ex);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> q(12);
        for (auto& v : q) v = 10.0 * wf::uniform01(rng);
        EXPECT_EQ(a.scores(q), b.scores(q));
    }
}

TEST(LinearSvm, SeparableToyReachesFullTrainingAccuracy) {
    wf::Rng rng(6);
    const auto t = separable(rng);
    const auto m = wf::LinearSvm::train(t.x, t.y, {"a", "b", "const"}, {});
    std::size_t hits = 0;
    for (std::size_t i = 0; i < t.x.size(); ++i) hits += m.predict(t.x[i]).label == t.y[i];
    EXPECT_EQ(hits, t.x.size());
    EXPECT_EQ(m.excluded_columns(), std::vector<std::string>{"const"});
    // classes without training data never win
    EXPECT_FALSE(m.trained()[wf::class_index(wf::ClassLabel::Q)]);
    EXPECT_TRUE(std::isinf(m.decision(t.x[0])[wf::class_index(wf::ClassLabel::Q)]));
}

TEST(LinearSvm, DeterministicGivenSeed) {
    wf::Rng rng(7);
    const auto t = separable(rng);
    const auto a = wf::LinearSvm::train(t.x, t.y, {}, {});
    const auto b = wf::LinearSvm::train(t.x, t.y, {}, {});
    EXPECT_EQ(a.weights(), b.weights());
    EXPECT_EQ(a.bias(), b.bias());
}

TEST(LinearSvm, StandardizationRoundTrip) {
    wf::Rng rng(8);
    const auto t = separable(rng);
    const auto m = wf::LinearSvm::train(t.x, t.y, {}, {});
    for (const auto& x : t.x) {
        const auto direct = m.decision(x);
        const auto z = m.standardize(x);
        const auto pre = m.decision_standardized(z);
        for (std::size_t c = 0; c < wf::kNumClasses; ++c) {
            if (std::isinf(direct[c])) continue;
            EXPECT_NEAR(direct[c], pre[c], 1e-9);
        }
    }
}

TEST(LinearSvm, FromPartsReproducesDecisions) {
    wf::Rng rng(9);
    const auto t = separable(rng);
    const auto m = wf::LinearSvm::train(t.x, t.y, {"a", "b", "c"}, {});
    const auto r = wf::LinearSvm::from_parts(m.layout(), m.hyper(), m.mean(), m.scale(), m.active(), m.weights(), m.bias(),
                                             m.trained());
    for (const auto& x : t.x) EXPECT_EQ(m.decision(x), r.decision(x));
}

TEST(LinearSvm, ContractErrors) {
    wf::Rng rng(10);
    const auto t = separable(rng);
    const auto m = wf::LinearSvm::train(t.x, t.y, {}, {});
    EXPECT_EQ(kind_of([&] { (void)m.decision(std::vector<double>{1.0}); }), wf::ErrorKind::LayoutMismatch);
    std::vector<wf::ClassLabel> one(t.y.size(), wf::ClassLabel::NF);
    EXPECT_EQ(kind_of([&] { (void)wf::LinearSvm::train(t.x, one, {}, {}); }), wf::ErrorKind::MissingClass);
    auto ragged = t.x;
    ragged[3].push_back(1.0);
    EXPECT_EQ(kind_of([&] { (void)wf::LinearSvm::train(ragged, t.y, {}, {}); }), wf::ErrorKind::LayoutMismatch);
}

TEST(Batch, SingleCycleEqualsPredict) {
    wf::ClassScores s{};
    s[wf::class_index(wf::ClassLabel::T)] = 2.0;
    const std::vector<wf::ClassScores> one{s};
    EXPECT_EQ(wf::predict_batch(one).label, wf::ClassLabel::T);
    EXPECT_EQ(wf::predict_batch(one, wf::BatchRule::MajorityVote).label, wf::ClassLabel::T);
}

TEST(Batch, ThreeOfFiveFavouringAWins) {
    const auto a = wf::class_index(wf::ClassLabel::A);
    std::vector<wf::ClassScores> cycles(5);
    for (auto& s : cycles) s.fill(0.0);
    for (int i = 0; i < 3; ++i) cycles[static_cast<std::size_t>(i)][a] = 1.0;
    cycles[3][wf::class_index(wf::ClassLabel::B)] = 0.5;
    cycles[4][wf::class_index(wf::ClassLabel::C)] = 0.5;
    // mean: A = 0.6, B = C = 0.1
    const auto p = wf::predict_batch(cycles);
    EXPECT_EQ(p.label, wf::ClassLabel::A);
    EXPECT_DOUBLE_EQ(p.scores[a], 0.6);
    EXPECT_EQ(wf::predict_batch(cycles, wf::BatchRule::MajorityVote).label, wf::ClassLabel::A);
}

TEST(Batch, TiesGoToTheEarlierClass) {
    wf::ClassScores s{};
    s.fill(1.0);
    EXPECT_EQ(wf::argmax_label(s), wf::ClassLabel::NF);
    s[wf::class_index(wf::ClassLabel::NF)] = 0.0;
    EXPECT_EQ(wf::argmax_label(s), wf::kAllClasses[1]);
}

TEST(Batch, EmptyBatch) {
    const std::vector<wf::ClassScores> none;
    EXPECT_EQ(kind_of([&] { (void)wf::predict_batch(none); }), wf::ErrorKind::EmptyBatch);
}
