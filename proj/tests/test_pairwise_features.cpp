#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <iostream>
#include <cmath>
#include <set>
#include <vector>

#include "wavefault/dataset.hpp"
#include "wavefault/experiment.hpp"
#include "wavefault/generator_config.hpp"
#include "wavefault/pairwise_features.hpp"

namespace wf = wavefault;

namespace {

wf::RelativeFeature feature(wf::FeatureKind kind, std::vector<double> values, wf::ClassLabel label, std::uint32_t index,
                            wf::IndividualId ind = 0) {
    wf::RelativeFeature f;
    f.kind = kind;
    f.values = std::move(values);
    f.target_id = {label, ind, index};
    f.ref_id = {wf::ClassLabel::NF, ind, 1000 + index};
    return f;
}

std::vector<double> random_reals(wf::Rng& rng, std::size_t len) {
    std::vector<double> v(len);
    for (auto& x : v) x = std::abs(wf::standard_normal(rng));
    return v;
}

// count per class, amp and ts for every cycle
std::vector<wf::RelativeFeature> random_training_set(wf::Rng& rng, std::size_t per_class, wf::IndividualId ind = 0) {
    std::vector<wf::RelativeFeature> out;
    for (auto c : wf::kAllClasses) {
        for (std::uint32_t k = 0; k < per_class; ++k) {
            out.push_back(feature(wf::FeatureKind::Amp, random_reals(rng, 5 + wf::uniform_index(rng, 10)), c, k, ind));
            out.push_back(feature(wf::FeatureKind::Ts, random_reals(rng, 5 + wf::uniform_index(rng, 10)), c, k, ind));
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

} // namespace

TEST(Aggregation, StipulatedDistances) {
    const std::vector<double> ones{1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(wf::aggregate(ones, wf::Aggregation::SqrtOfSum), 0.5);
    EXPECT_DOUBLE_EQ(wf::aggregate(ones, wf::Aggregation::Mean), 1.0);
    EXPECT_EQ(wf::parse_aggregation("mean"), wf::Aggregation::Mean);
    EXPECT_EQ(wf::parse_aggregation("sqrt_sum"), wf::Aggregation::SqrtOfSum);
    EXPECT_THROW((void)wf::parse_aggregation("median"), wf::Error);
}

TEST(ReferenceBank, CardinalityAndIndividual) {
    wf::Rng rng(1);
    const auto train = random_training_set(rng, 40);
    const auto bank = wf::build_reference_bank(train, 5, 99, 0);
    for (auto c : wf::kAllClasses) {
        for (auto k : {wf::FeatureKind::Amp, wf::FeatureKind::Ts}) {
            const auto& e = bank.entries(c, k);
            ASSERT_EQ(e.size(), 5u);
            for (const auto& f : e) {
                EXPECT_EQ(f.target_id.individual, 0u);
                EXPECT_EQ(f.target_id.label, c);
                EXPECT_EQ(f.kind, k);
            }
        }
        // same cycles for both kinds
        for (std::size_t s = 0; s < 5; ++s) {
            EXPECT_EQ(bank.entries(c, wf::FeatureKind::Amp)[s].target_id, bank.entries(c, wf::FeatureKind::Ts)[s].target_id);
        }
    }
    EXPECT_EQ(bank.ids().size(), 55u);
}

TEST(ReferenceBank, IgnoresOtherIndividuals) {
    wf::Rng rng(2);
    auto train = random_training_set(rng, 8, 0);
    const auto foreign = random_training_set(rng, 8, 4);
    train.insert(train.end(), foreign.begin(), foreign.end());
    const auto bank = wf::build_reference_bank(train, 5, 3, 0);
    for (const auto& id : bank.ids()) EXPECT_EQ(id.individual, 0u);
}

TEST(ReferenceBank, DeterministicAndOrderIndependent) {
    wf::Rng rng(3);
    auto train = random_training_set(rng, 20);
    const auto a = wf::build_reference_bank(train, 5, 42, 0).ids();
    const auto b = wf::build_reference_bank(train, 5, 42, 0).ids();
    EXPECT_EQ(a, b);
    std::reverse(train.begin(), train.end());
    EXPECT_EQ(wf::build_reference_bank(train, 5, 42, 0).ids(), a);
    EXPECT_NE(wf::build_reference_bank(train, 5, 43, 0).ids(), a);
}

TEST(ReferenceBank, InsufficientReferences) {
    wf::Rng rng(4);
    auto train = random_training_set(rng, 40);
    std::erase_if(train, [](const wf::RelativeFeature& f) {
        return f.target_id.label == wf::ClassLabel::Q && f.target_id.cycle_index >= 3;
    });
    EXPECT_EQ(kind_of([&] { (void)wf::build_reference_bank(train, 5, 1, 0); }), wf::ErrorKind::InsufficientReferences);
}

TEST(PairwiseEntry, IdenticalToTheSingleBankedVectorIsZero) {
    wf::Rng rng(5);
    auto train = random_training_set(rng, 1);
    const auto bank = wf::build_reference_bank(train, 1, 1, 0);
    const auto& banked = bank.entries(wf::ClassLabel::T, wf::FeatureKind::Amp).front();
    auto query = banked;
    query.target_id.cycle_index = 77;
    EXPECT_EQ(wf::pairwise_entry(bank, wf::ClassLabel::T, wf::FeatureKind::Amp, query), 0.0);
}

TEST(PairwiseEntry, MatchesIndependentRecomputation) {
    wf::Rng rng(6);
    const auto train = random_training_set(rng, 10);
    const auto bank = wf::build_reference_bank(train, 4, 8, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = wf::kAllClasses[wf::uniform_index(rng, wf::kNumClasses)];
        const auto k = trial % 2 ? wf::FeatureKind::Amp : wf::FeatureKind::Ts;
        const auto q = feature(k, random_reals(rng, 5 + wf::uniform_index(rng, 12)), wf::ClassLabel::NF, 500);
        double sum = 0;
        std::vector<double> ds;
        for (const auto& r : bank.entries(c, k)) ds.push_back(wf::dtw(r.values, q.values).distance);
        for (double d : ds) sum += d;
        EXPECT_NEAR(wf::pairwise_entry(bank, c, k, q, wf::Aggregation::SqrtOfSum), std::sqrt(sum) / 4.0, 1e-9);
        EXPECT_NEAR(wf::pairwise_entry(bank, c, k, q, wf::Aggregation::Mean), sum / 4.0, 1e-9);
    }
}

TEST(PairwiseEntry, MeanWithOneReferenceIsOneDtwDistance) {
    wf::Rng rng(7);
    const auto train = random_training_set(rng, 3);
    const auto bank = wf::build_reference_bank(train, 1, 2, 0);
    const auto q = feature(wf::FeatureKind::Ts, random_reals(rng, 9), wf::ClassLabel::NF, 600);
    const auto& r = bank.entries(wf::ClassLabel::B, wf::FeatureKind::Ts).front();
    EXPECT_EQ(wf::pairwise_entry(bank, wf::ClassLabel::B, wf::FeatureKind::Ts, q, wf::Aggregation::Mean),
              wf::dtw(r.values, q.values).distance);
}

TEST(PairwiseEntry, KindMismatch) {
    wf::Rng rng(8);
    const auto bank = wf::build_reference_bank(random_training_set(rng, 5), 2, 1, 0);
    const auto q = feature(wf::FeatureKind::Ts, {1, 2, 3}, wf::ClassLabel::NF, 1);
    EXPECT_EQ(kind_of([&] { (void)wf::pairwise_entry(bank, wf::ClassLabel::A, wf::FeatureKind::Amp, q); }),
              wf::ErrorKind::KindMismatch);
}

TEST(PdVector, LayoutLengthsAndOrder) {
    wf::Rng rng(9);
    const auto bank = wf::build_reference_bank(random_training_set(rng, 6), 3, 1, 0);
    const std::vector<wf::RelativeFeature> feats{feature(wf::FeatureKind::Amp, random_reals(rng, 8), wf::ClassLabel::NF, 50),
                                                 feature(wf::FeatureKind::Ts, random_reals(rng, 8), wf::ClassLabel::NF, 50)};
    const std::vector<wf::NamedScalar> extras{{"f", 1.03}};
    const auto v = wf::build_pd_vector(bank, feats, extras);
    ASSERT_EQ(v.values.size(), 23u);
    ASSERT_EQ(v.layout.size(), 23u);
    EXPECT_EQ(v.layout.front(), "p_amp_NF");
    EXPECT_EQ(v.layout[11], "p_ts_NF");
    EXPECT_EQ(v.layout.back(), "f");
    EXPECT_EQ(v.values.back(), 1.03);
    for (std::size_t d = 0; d < 22; ++d) {
        EXPECT_TRUE(std::isfinite(v.values[d]));
        EXPECT_GE(v.values[d], 0.0);
    }
    EXPECT_EQ(wf::build_pd_vector(bank, feats).values.size(), 22u);

    // arrival order of the features does not matter
    const std::vector<wf::RelativeFeature> swapped{feats[1], feats[0]};
    const auto w = wf::build_pd_vector(bank, swapped, extras);
    EXPECT_EQ(w.layout, v.layout);
    EXPECT_EQ(w.values, v.values);
}

TEST(PdVector, MissingKind) {
    wf::Rng rng(10);
    const auto bank = wf::build_reference_bank(random_training_set(rng, 4), 2, 1, 0);
    const std::vector<wf::RelativeFeature> only_amp{feature(wf::FeatureKind::Amp, {1, 2}, wf::ClassLabel::NF, 9)};
    EXPECT_EQ(kind_of([&] { (void)wf::build_pd_vector(bank, only_amp); }), wf::ErrorKind::MissingKind);
}

// On the training individual of the stock benchmark, a training cycle's
// own-class entries are usually the smallest of their kind.
TEST(PdVector, OwnClassEntryIsUsuallyTheMinimum) {
    const auto b = wf::make_benchmark(wf::synth::stock_config(), 42);
    const wf::ExperimentConfig cfg;
    const auto data = wf::prepare_data(b.dataset, cfg, true);
    const auto split = wf::make_split(data, cfg);
    const auto table = wf::build_pairwise_table(data, split, cfg);

    std::array<std::size_t, wf::kNumClasses> hits_amp{};
    std::array<std::size_t, wf::kNumClasses> hits_ts{};
    std::array<std::size_t, wf::kNumClasses> count{};
    for (const auto& r : split.train) {
        const auto& pc = wf::at(data, r);
        const std::vector<wf::RelativeFeature> feats{pc.amp.front(), pc.ts.front()};
        const auto v = wf::build_pd_vector(table.bank, feats, {}, cfg.aggregation, cfg.band);
        const auto own = wf::class_index(r.label);
        const auto amp_min = std::min_element(v.values.begin(), v.values.begin() + 11) - v.values.begin();
        const auto ts_min = std::min_element(v.values.begin() + 11, v.values.end()) - v.values.begin() - 11;
        hits_amp[own] += static_cast<std::size_t>(amp_min) == own;
        hits_ts[own] += static_cast<std::size_t>(ts_min) == own;
        ++count[own];
    }
    std::size_t total = 0;
    std::size_t amp = 0;
    std::size_t ts = 0;
    for (auto c : wf::kAllClasses) {
        const auto i = wf::class_index(c);
        std::cout << wf::class_code(c) << ": amp " << hits_amp[i] << "/" << count[i] << ", ts " << hits_ts[i] << "/"
                  << count[i] << "\n";
        total += count[i];
        amp += hits_amp[i];
        ts += hits_ts[i];
    }
    const double amp_rate = static_cast<double>(amp) / static_cast<double>(total);
    const double ts_rate = static_cast<double>(ts) / static_cast<double>(total);
    RecordProperty("amp_rate", std::to_string(amp_rate));
    RecordProperty("ts_rate", std::to_string(ts_rate));
    std::cout << "own-class minimum: amp " << amp_rate << ", ts " << ts_rate << " over " << total << " cycles\n";
    EXPECT_GE(ts_rate, 0.8);
    EXPECT_GE(amp_rate, 0.8);
}
