#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wavefault/dataset.hpp"
#include "wavefault/generator_config.hpp"
#include "wavefault/random.hpp"
#include "wavefault/relative_features.hpp"

namespace wf = wavefault;

namespace {

wf::Cycle make_cycle(std::vector<double> samples, wf::ClassLabel label, std::uint32_t index, wf::IndividualId ind = 0) {
    wf::Cycle c;
    c.samples = std::move(samples);
    c.label = label;
    c.individual = ind;
    c.cycle_index = index;
    c.sample_rate = 10000.0;
    return c;
}

std::vector<double> random_reals(wf::Rng& rng, std::size_t len) {
    std::vector<double> v(len);
    for (auto& x : v) x = wf::standard_normal(rng);
    return v;
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

} // namespace

TEST(DeltaEuclidean, ByHand) {
    const auto ref = make_cycle({1, 2}, wf::ClassLabel::NF, 0);
    const auto tgt = make_cycle({0, 4}, wf::ClassLabel::A, 1);
    EXPECT_EQ(wf::delta_euclidean(ref, tgt).values, (std::vector<double>{1, 2}));
    const auto same = make_cycle({1, 2}, wf::ClassLabel::NF, 5);
    EXPECT_EQ(wf::delta_euclidean(ref, same).values, (std::vector<double>{0, 0}));
}

TEST(DeltaEuclidean, LengthMismatch) {
    const auto ref = make_cycle(std::vector<double>(10, 0.0), wf::ClassLabel::NF, 0);
    const auto tgt = make_cycle(std::vector<double>(11, 0.0), wf::ClassLabel::A, 0);
    EXPECT_EQ(kind_of([&] { (void)wf::delta_euclidean(ref, tgt); }), wf::ErrorKind::LengthMismatch);
}

TEST(DeltaAmp, IdenticalValuedCyclesGiveZerosAlongTheDiagonal) {
    const auto ref = make_cycle({0.1, 0.7, -0.2, 0.4}, wf::ClassLabel::NF, 0);
    const auto tgt = make_cycle({0.1, 0.7, -0.2, 0.4}, wf::ClassLabel::NF, 1);
    const auto p = wf::delta_amp_ts(ref, tgt);
    EXPECT_EQ(p.amp.values, std::vector<double>(4, 0.0));
    EXPECT_EQ(p.ts.values, std::vector<double>(4, 0.0));
}

TEST(DeltaAmp, WorkedExample) {
    const auto ref = make_cycle({0, 1, 0}, wf::ClassLabel::NF, 0);
    const auto tgt = make_cycle({0, 2, 0}, wf::ClassLabel::C, 0);
    EXPECT_EQ(wf::delta_amp(ref, tgt).values, (std::vector<double>{0, 1, 0}));
}

TEST(DeltaAmpTs, BoundaryLawAndEnergyOnRandomPairs) {
    wf::Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = 1 + wf::uniform_index(rng, 50);
        const auto n = 1 + wf::uniform_index(rng, 50);
        const auto ref = make_cycle(random_reals(rng, m), wf::ClassLabel::NF, 0);
        const auto tgt = make_cycle(random_reals(rng, n), wf::ClassLabel::B, 1);
        const auto p = wf::delta_amp_ts(ref, tgt);
        const auto k = p.alignment.path.size();
        ASSERT_EQ(p.amp.values.size(), k);
        ASSERT_EQ(p.ts.values.size(), k);
        EXPECT_GE(k, std::max(m, n));
        EXPECT_LE(k, m + n - 1);
        EXPECT_EQ(p.ts.values.front(), 0.0);
        EXPECT_EQ(p.ts.values.back(), static_cast<double>(m) - static_cast<double>(n));
        double sq = 0;
        for (double v : p.amp.values) {
            EXPECT_GE(v, 0.0);
            sq += v * v;
        }
        const double d = wf::dtw(ref.samples, tgt.samples).distance;
        EXPECT_NEAR(sq, d * d, 1e-9);
        EXPECT_EQ(p.amp.ref_id, ref.id());
        EXPECT_EQ(p.amp.target_id, tgt.id());
    }
}

TEST(DeltaTs, DelayedEventGivesAPlateauOfTheDelay) {
    // a bump at 20..29, delayed by 6 samples, flat elsewhere
    std::vector<double> x(60, 0.0);
    std::vector<double> y(60, 0.0);
    for (int i = 0; i < 10; ++i) {
        x[20 + i] = std::sin(M_PI * (i + 0.5) / 10.0);
        y[26 + i] = x[20 + i];
    }
    const auto ref = make_cycle(x, wf::ClassLabel::NF, 0);
    const auto tgt = make_cycle(y, wf::ClassLabel::A, 0);
    const auto p = wf::delta_amp_ts(ref, tgt);
    EXPECT_NEAR(p.alignment.distance, 0.0, 1e-12);
    const auto& pairs = p.alignment.path.pairs;
    for (std::size_t a = 0; a < pairs.size(); ++a) {
        if (pairs[a].p >= 20 && pairs[a].p <= 29) {
            EXPECT_EQ(p.ts.values[a], -6.0) << "ref index " << pairs[a].p;
        }
        EXPECT_LE(std::abs(p.ts.values[a]), 6.0);
    }
}

TEST(DeltaAmpTs, SwappingArgumentsTransposesThePath) {
    wf::Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = make_cycle(random_reals(rng, 5 + wf::uniform_index(rng, 20)), wf::ClassLabel::NF, 0);
        const auto b = make_cycle(random_reals(rng, 5 + wf::uniform_index(rng, 20)), wf::ClassLabel::NF, 1);
        const auto ab = wf::delta_amp_ts(a, b);
        const auto ba = wf::delta_amp_ts(b, a);
        EXPECT_NEAR(ab.alignment.distance, ba.alignment.distance, 1e-12);
        // on ba's own path, ts flips sign relative to the transposed pairs
        for (std::size_t k = 0; k < ba.alignment.path.size(); ++k) {
            const auto [p, q] = ba.alignment.path.pairs[k];
            EXPECT_EQ(ba.ts.values[k], -(static_cast<double>(q) - static_cast<double>(p)));
        }
    }
}

TEST(DeltaAmpTs, BiasInvariance) {
    wf::Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = random_reals(rng, 10 + wf::uniform_index(rng, 40));
        auto y = random_reals(rng, 10 + wf::uniform_index(rng, 40));
        // dyadic values keep the shifted arithmetic exact
        for (auto* v : {&x, &y}) {
            for (auto& s : *v) s = std::round(s * 64.0) / 64.0;
        }
        const double b = std::round(wf::standard_normal(rng) * 8.0) / 4.0;
        auto xb = x;
        auto yb = y;
        for (auto& s : xb) s += b;
        for (auto& s : yb) s += b;
        const auto p0 = wf::delta_amp_ts(make_cycle(x, wf::ClassLabel::NF, 0), make_cycle(y, wf::ClassLabel::V, 0));
        const auto p1 = wf::delta_amp_ts(make_cycle(xb, wf::ClassLabel::NF, 0), make_cycle(yb, wf::ClassLabel::V, 0));
        EXPECT_EQ(p0.alignment.path, p1.alignment.path);
        ASSERT_EQ(p0.amp.values.size(), p1.amp.values.size());
        for (std::size_t k = 0; k < p0.amp.values.size(); ++k) EXPECT_NEAR(p0.amp.values[k], p1.amp.values[k], 1e-9);
        EXPECT_EQ(p0.ts.values, p1.ts.values);
        const auto d0 = wf::delta_pdrop(make_cycle(x, wf::ClassLabel::NF, 0), make_cycle(y, wf::ClassLabel::V, 0));
        const auto d1 = wf::delta_pdrop(make_cycle(xb, wf::ClassLabel::NF, 0), make_cycle(yb, wf::ClassLabel::V, 0));
        EXPECT_NEAR(d0.values[0], d1.values[0], 1e-9);
    }
}

TEST(DeltaAmpTs, WindowRestrictsToTheSection) {
    std::vector<double> x(101);
    std::vector<double> y(101);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::sin(0.1 * static_cast<double>(i));
        y[i] = std::cos(0.1 * static_cast<double>(i));
    }
    wf::RelativeOptions opt;
    opt.window = wf::PhaseWindow{0.2, 0.4};
    const auto p = wf::delta_amp_ts(make_cycle(x, wf::ClassLabel::NF, 0), make_cycle(y, wf::ClassLabel::S, 0), opt);
    const std::vector<double> xs(x.begin() + 20, x.begin() + 41);
    const std::vector<double> ys(y.begin() + 20, y.begin() + 41);
    EXPECT_EQ(p.alignment.path, wf::dtw(xs, ys).path);
}

TEST(DeltaPdrop, OffsetAndThreshold) {
    std::vector<double> ref(101);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = std::sin(0.07 * static_cast<double>(i));
    auto shifted = ref;
    for (auto& v : shifted) v += 2.5;
    EXPECT_NEAR(wf::delta_pdrop(make_cycle(ref, wf::ClassLabel::NF, 0), make_cycle(shifted, wf::ClassLabel::NF, 1)).values[0],
                0.0, 1e-12);
    auto deeper = ref;
    for (std::size_t i = 55; i < deeper.size(); ++i) deeper[i] -= std::min(1.0, static_cast<double>(i - 55) / 40.0);
    const auto d = wf::delta_pdrop(make_cycle(ref, wf::ClassLabel::NF, 0), make_cycle(deeper, wf::ClassLabel::C, 0));
    EXPECT_NEAR(d.values[0], -1.0, 1e-12);
    EXPECT_EQ(d.kind, wf::FeatureKind::Pdrop);
}

TEST(DeltaPdrop, GeneratorBiasLeavesItUnchanged) {
    const auto cfg = wf::synth::stock_config();
    auto ind = cfg.individuals[2];
    auto run = [&](double bias) {
        ind.pressure_bias = bias;
        auto [nf, l1] = wf::synth::generate_recording(ind, wf::ClassLabel::NF, cfg.faults, cfg.duration(), cfg.sample_rate,
                                                      cfg.noise, 5, cfg.shape);
        auto [c, l2] = wf::synth::generate_recording(ind, wf::ClassLabel::C, cfg.faults, cfg.duration(), cfg.sample_rate,
                                                     cfg.noise, 6, cfg.shape);
        const auto ref = wf::segment_recording(nf);
        const auto tgt = wf::segment_recording(c);
        std::vector<double> out;
        for (std::size_t k = 0; k < 10; ++k) out.push_back(wf::delta_pdrop(ref[0], tgt[k]).values[0]);
        return out;
    };
    const auto a = run(0.0);
    const auto b = run(3.0);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(RelativeFeatures, PairingContract) {
    const auto nf0 = make_cycle({0, 1, 0}, wf::ClassLabel::NF, 0, 0);
    const auto a0 = make_cycle({0, 2, 0}, wf::ClassLabel::A, 0, 0);
    const auto nf_other = make_cycle({0, 1, 0}, wf::ClassLabel::NF, 1, 3);
    EXPECT_EQ(kind_of([&] { (void)wf::delta_amp_ts(nf0, nf0); }), wf::ErrorKind::SelfComparison);
    EXPECT_EQ(kind_of([&] { (void)wf::delta_pdrop(nf0, nf0); }), wf::ErrorKind::SelfComparison);
    EXPECT_EQ(kind_of([&] { (void)wf::delta_amp_ts(a0, nf0); }), wf::ErrorKind::NotReference);
    EXPECT_EQ(kind_of([&] { (void)wf::delta_amp_ts(nf_other, a0); }), wf::ErrorKind::NotReference);
    wf::RelativeOptions loose;
    loose.enforce_reference = false;
    EXPECT_NO_THROW((void)wf::delta_amp_ts(nf_other, a0, loose));
    EXPECT_EQ(kind_of([&] { (void)wf::delta_amp_ts(nf0, nf0, loose); }), wf::ErrorKind::SelfComparison);
}
