#ifndef WAVEFAULT_EXPERIMENT_HPP
#define WAVEFAULT_EXPERIMENT_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavefault/classifiers.hpp"
#include "wavefault/dataset.hpp"
#include "wavefault/model.hpp"
#include "wavefault/pairwise_features.hpp"
#include "wavefault/parallel.hpp"
#include "wavefault/random.hpp"
#include "wavefault/relative_features.hpp"
#include "wavefault/signal_model.hpp"

namespace wavefault {

// ---------------------------------------------------------------------------
// Methods and configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
    /// Sakoe-Chiba half-width in samples (2.4 ms at the stock 10 kHz).
    Band band = 24;
    std::size_t n_refs = 5;
    Aggregation aggregation = Aggregation::SqrtOfSum;
    std::vector<std::size_t> batch_sizes{1, 5, 10, 25, 50};
    BatchRule batch_rule = BatchRule::MeanScore;
    std::uint64_t seed = 1;
    /// Overrides the manifest's training individual; every other individual
    /// is then a test individual.
    std::optional<IndividualId> train_individual;
    double holdout_fraction = 0.3;
    /// Leading NF cycles of each individual reserved as its reference pool.
    std::size_t nf_pool_size = 10;
    /// Reference cycles paired with each target; scores are averaged over them.
    std::size_t refs_per_cycle = 1;
    /// Cycles kept per (class, individual) after balancing; 0 keeps all.
    std::size_t max_cycles_per_class = 40;
    PhaseWindow phase;
    std::optional<PhaseWindow> feature_window;
    SegmentationConfig segmentation;
    SvmHyper svm;
};

inline Json to_json(const ExperimentConfig& c) {
    Json methods = Json::array();
    for (auto m : c.methods) methods.push_back(std::string(method_name(m)));
    Json j{{"methods", methods},
           {"band", c.band ? Json(*c.band) : Json(nullptr)},
           {"n", c.n_refs},
           {"aggregation", std::string(aggregation_name(c.aggregation))},
           {"batch_sizes", c.batch_sizes},
           {"batch_rule", c.batch_rule == BatchRule::MeanScore ? "mean_score" : "majority_vote"},
           {"seed", c.seed},
           {"train_individual", c.train_individual ? Json(*c.train_individual) : Json(nullptr)},
           {"holdout_fraction", c.holdout_fraction},
           {"nf_pool_size", c.nf_pool_size},
           {"refs_per_cycle", c.refs_per_cycle},
           {"max_cycles_per_class", c.max_cycles_per_class},
           {"phase_window", {c.phase.start, c.phase.end}},
           {"feature_window", c.feature_window ? Json{c.feature_window->start, c.feature_window->end} : Json(nullptr)},
           {"segmentation",
            {{"smooth_seconds", c.segmentation.smooth_seconds},
             {"k_mad", c.segmentation.k_mad},
             {"refractory_seconds", c.segmentation.refractory_seconds},
             {"min_length_ratio", c.segmentation.min_length_ratio},
             {"max_length_ratio", c.segmentation.max_length_ratio}}},
           {"svm",
            {{"lambda", c.svm.lambda},
             {"epochs", c.svm.epochs},
             {"learning_rate", c.svm.learning_rate},
             {"seed", c.svm.seed}}}};
    return j;
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
    ExperimentConfig c;
    try {
        c.methods.clear();
        for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
        if (!j.at("band").is_null()) c.band = j.at("band").get<std::size_t>();
        c.n_refs = j.at("n").get<std::size_t>();
        c.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
        c.batch_sizes = j.at("batch_sizes").get<std::vector<std::size_t>>();
        c.batch_rule = j.at("batch_rule").get<std::string>() == "majority_vote" ? BatchRule::MajorityVote : BatchRule::MeanScore;
        c.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("train_individual").is_null()) c.train_individual = j.at("train_individual").get<IndividualId>();
        c.holdout_fraction = j.at("holdout_fraction").get<double>();
        c.nf_pool_size = j.at("nf_pool_size").get<std::size_t>();
        c.refs_per_cycle = j.at("refs_per_cycle").get<std::size_t>();
        c.max_cycles_per_class = j.at("max_cycles_per_class").get<std::size_t>();
        c.phase = {j.at("phase_window").at(0).get<double>(), j.at("phase_window").at(1).get<double>()};
        if (!j.at("feature_window").is_null()) {
            c.feature_window = PhaseWindow{j.at("feature_window").at(0).get<double>(), j.at("feature_window").at(1).get<double>()};
        }
        const auto& s = j.at("segmentation");
        c.segmentation = {s.at("smooth_seconds").get<double>(), s.at("k_mad").get<double>(),
                          s.at("refractory_seconds").get<double>(), s.at("min_length_ratio").get<double>(),
                          s.at("max_length_ratio").get<double>()};
        const auto& v = j.at("svm");
        c.svm = {v.at("lambda").get<double>(), v.at("epochs").get<int>(), v.at("learning_rate").get<double>(),
                 v.at("seed").get<std::uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatError, std::string("experiment config: ") + e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

struct BatchAccuracy {
    std::size_t batch_size = 1;
    double same = 0.0;
    double different = 0.0;
    friend bool operator==(const BatchAccuracy&, const BatchAccuracy&) = default;
};

struct MethodResult {
    Method method = Method::OneNnRaw;
    double accuracy_same = 0.0;
    double accuracy_different = 0.0;
    std::vector<BatchAccuracy> by_batch;
    std::map<IndividualId, double> different_by_individual;
    /// rows: true class, columns: predicted class; test individuals, single cycles
    ConfusionMatrix confusion{};
    std::size_t training_vectors = 0;
    std::vector<std::string> excluded_columns;
    friend bool operator==(const MethodResult&, const MethodResult&) = default;
};

/// Identities used by one run, kept for the leakage audit.
/// A recording as listed in the manifest, with a digest of its samples.
struct SourceRecord {
    IndividualId individual = 0;
    ClassLabel label = ClassLabel::NF;
    std::string digest;
    friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

/// FNV-1a over the sample bit patterns, as 16 hex digits.
inline std::string recording_digest(const Recording& rec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : rec.samples) {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Provenance {
    std::vector<SourceRecord> sources;
    IndividualId train_individual = 0;
    std::vector<IndividualId> test_individuals;
    std::vector<CycleId> train;
    std::vector<CycleId> holdout;
    std::vector<CycleId> bank;
    std::vector<CycleId> different;
    /// reference cycle of every evaluated target, keyed by target
    std::vector<std::pair<CycleId, CycleId>> references;
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ResultsReport {
    Json config = Json::object();
    std::size_t cycles_per_class = 0;
    std::vector<MethodResult> methods;
    Provenance provenance;
    double wall_clock_seconds = 0.0;

    const MethodResult* find(Method m) const {
        for (const auto& r : methods) {
            if (r.method == m) return &r;
        }
        return nullptr;
    }

    friend bool operator==(const ResultsReport&, const ResultsReport&) = default;
};

inline Json id_json(const CycleId& id) { return Json::array({std::string(class_code(id.label)), id.individual, id.cycle_index}); }

inline CycleId id_from_json(const Json& j) {
    return {class_from_code(j.at(0).get<std::string>()), j.at(1).get<IndividualId>(), j.at(2).get<std::uint32_t>()};
}

inline Json ids_json(const std::vector<CycleId>& ids) {
    Json a = Json::array();
    for (const auto& id : ids) a.push_back(id_json(id));
    return a;
}

inline std::vector<CycleId> ids_from_json(const Json& j) {
    std::vector<CycleId> out;
    for (const auto& e : j) out.push_back(id_from_json(e));
    return out;
}

inline Json to_json(const ResultsReport& r, bool include_wall_clock = true) {
    Json methods = Json::array();
    for (const auto& m : r.methods) {
        Json batches = Json::array();
        for (const auto& b : m.by_batch) {
            batches.push_back({{"batch_size", b.batch_size}, {"same", b.same}, {"different", b.different}});
        }
        Json per_ind = Json::object();
        for (const auto& [ind, acc] : m.different_by_individual) per_ind[std::to_string(ind)] = acc;
        Json matrix = Json::array();
        for (const auto& row : m.confusion) matrix.push_back(row);
        Json classes = Json::array();
        for (auto c : kAllClasses) classes.push_back(std::string(class_code(c)));
        methods.push_back({{"method", std::string(method_name(m.method))},
                           {"accuracy_same", m.accuracy_same},
                           {"accuracy_different", m.accuracy_different},
                           {"accuracy_by_batch_size", batches},
                           {"accuracy_different_by_individual", per_ind},
                           {"confusion", {{"classes", classes}, {"matrix", matrix}}},
                           {"training_vectors", m.training_vectors},
                           {"excluded_columns", m.excluded_columns}});
    }
    Json refs = Json::array();
    for (const auto& [target, ref] : r.provenance.references) refs.push_back({id_json(target), id_json(ref)});
    Json sources = Json::array();
    for (const auto& s : r.provenance.sources) {
        sources.push_back({{"individual", s.individual}, {"class", std::string(class_code(s.label))}, {"digest", s.digest}});
    }
    Json j{{"format", "wavefault-report"},
           {"version", 1},
           {"config", r.config},
           {"cycles_per_class", r.cycles_per_class},
           {"methods", methods},
           {"provenance",
            {{"sources", sources},
             {"train_individual", r.provenance.train_individual},
             {"test_individuals", r.provenance.test_individuals},
             {"train", ids_json(r.provenance.train)},
             {"holdout", ids_json(r.provenance.holdout)},
             {"bank", ids_json(r.provenance.bank)},
             {"different", ids_json(r.provenance.different)},
             {"references", refs}}}};
    if (include_wall_clock) j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

inline ResultsReport report_from_json(const Json& j) {
    ResultsReport r;
    try {
        if (j.value("format", "") != "wavefault-report") throw Error(ErrorKind::FormatError, "not a wavefault report");
        r.config = j.at("config");
        r.cycles_per_class = j.at("cycles_per_class").get<std::size_t>();
        for (const auto& m : j.at("methods")) {
            MethodResult mr;
            mr.method = parse_method(m.at("method").get<std::string>());
            mr.accuracy_same = m.at("accuracy_same").get<double>();
            mr.accuracy_different = m.at("accuracy_different").get<double>();
            for (const auto& b : m.at("accuracy_by_batch_size")) {
                mr.by_batch.push_back({b.at("batch_size").get<std::size_t>(), b.at("same").get<double>(),
                                       b.at("different").get<double>()});
            }
            for (const auto& [k, v] : m.at("accuracy_different_by_individual").items()) {
                mr.different_by_individual[static_cast<IndividualId>(std::stoul(k))] = v.get<double>();
            }
            const auto& matrix = m.at("confusion").at("matrix");
            for (std::size_t a = 0; a < kNumClasses; ++a) {
                for (std::size_t b = 0; b < kNumClasses; ++b) mr.confusion[a][b] = matrix.at(a).at(b).get<std::size_t>();
            }
            mr.training_vectors = m.at("training_vectors").get<std::size_t>();
            mr.excluded_columns = m.at("excluded_columns").get<std::vector<std::string>>();
            r.methods.push_back(std::move(mr));
        }
        const auto& p = j.at("provenance");
        for (const auto& s : p.value("sources", Json::array())) {
            r.provenance.sources.push_back({s.at("individual").get<IndividualId>(),
                                            class_from_code(s.at("class").get<std::string>()),
                                            s.at("digest").get<std::string>()});
        }
        r.provenance.train_individual = p.at("train_individual").get<IndividualId>();
        r.provenance.test_individuals = p.at("test_individuals").get<std::vector<IndividualId>>();
        r.provenance.train = ids_from_json(p.at("train"));
        r.provenance.holdout = ids_from_json(p.at("holdout"));
        r.provenance.bank = ids_from_json(p.at("bank"));
        r.provenance.different = ids_from_json(p.at("different"));
        for (const auto& e : p.at("references")) r.provenance.references.emplace_back(id_from_json(e.at(0)), id_from_json(e.at(1)));
        r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatError, std::string("report: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

struct PreparedCycle {
    Cycle cycle; ///< normalized with its individual's reference statistics
    std::vector<RelativeFeature> amp; ///< one per reference cycle
    std::vector<RelativeFeature> ts;
    /// Impact frequency of this cycle relative to its reference pool.
    double relative_frequency = 0.0;
};

struct IndividualSet {
    IndividualId id = 0;
    NormStats stats;
    std::vector<Cycle> pool; ///< normalized NF reference cycles
    double pool_frequency = 0.0;
    std::array<std::vector<PreparedCycle>, kNumClasses> targets;
};

struct PreparedData {
    IndividualId train_individual = 0;
    std::vector<IndividualId> test_individuals;
    std::map<IndividualId, IndividualSet> individuals;
    std::size_t cycles_per_class = 0;
};

/// Segments, splits off the NF reference pools, normalizes, balances and,
/// when requested, computes the relative features of every target cycle.
inline PreparedData prepare_data(const Dataset& ds, const ExperimentConfig& cfg, bool relative) {
    validate_manifest(ds.manifest);
    if (ds.recordings.size() != ds.manifest.recordings.size()) {
        throw Error(ErrorKind::ManifestInvalid, "recording count does not match the manifest");
    }
    PreparedData out;
    out.train_individual = cfg.train_individual.value_or(ds.manifest.train_individual);
    if (std::find(ds.manifest.individuals.begin(), ds.manifest.individuals.end(), out.train_individual) ==
        ds.manifest.individuals.end()) {
        throw Error(ErrorKind::ManifestInvalid, "train individual " + std::to_string(out.train_individual) + " not in manifest");
    }
    if (cfg.train_individual) {
        for (auto i : ds.manifest.individuals) {
            if (i != out.train_individual) out.test_individuals.push_back(i);
        }
    } else {
        out.test_individuals = ds.manifest.test_individuals;
    }
    if (cfg.nf_pool_size == 0) throw Error(ErrorKind::InvalidConfig, "nf_pool_size must be positive");
    if (cfg.refs_per_cycle == 0 || cfg.refs_per_cycle > cfg.nf_pool_size) {
        throw Error(ErrorKind::InvalidConfig, "refs_per_cycle must be in [1, nf_pool_size]");
    }

    std::vector<std::vector<Cycle>> segmented(ds.recordings.size());
    parallel_for(ds.recordings.size(), [&](std::size_t i) {
        segmented[i] = segment_recording(ds.recordings[i], cfg.segmentation);
    });

    std::map<std::pair<IndividualId, ClassLabel>, std::size_t> where;
    for (std::size_t i = 0; i < ds.manifest.recordings.size(); ++i) {
        const auto& e = ds.manifest.recordings[i];
        where[{e.individual, e.label}] = i;
    }

    std::size_t balanced = std::numeric_limits<std::size_t>::max();
    for (auto ind : ds.manifest.individuals) {
        auto& set = out.individuals[ind];
        set.id = ind;
        const auto& nf = segmented[where.at({ind, ClassLabel::NF})];
        if (nf.size() <= cfg.nf_pool_size) {
            throw Error(ErrorKind::ClassImbalanceUnfixable,
                        "individual " + std::to_string(ind) + " has " + std::to_string(nf.size()) +
                            " NF cycles, the reference pool alone needs " + std::to_string(cfg.nf_pool_size));
        }
        std::vector<Cycle> raw_pool(nf.begin(), nf.begin() + static_cast<std::ptrdiff_t>(cfg.nf_pool_size));
        set.stats = compute_norm_stats(raw_pool);
        for (const auto& c : raw_pool) set.pool.push_back(normalize_cycle(c, set.stats));
        set.pool_frequency = estimate_impact_frequency(set.pool);
        for (auto c : kAllClasses) {
            const auto& cycles = segmented[where.at({ind, c})];
            const std::size_t skip = c == ClassLabel::NF ? cfg.nf_pool_size : 0;
            balanced = std::min(balanced, cycles.size() - skip);
        }
    }
    if (cfg.max_cycles_per_class > 0) balanced = std::min(balanced, cfg.max_cycles_per_class);
    if (balanced < 4) {
        throw Error(ErrorKind::ClassImbalanceUnfixable,
                    "only " + std::to_string(balanced) + " cycles per class after balancing");
    }
    out.cycles_per_class = balanced;

    struct Job {
        IndividualId ind;
        ClassLabel label;
        std::size_t k;
    };
    std::vector<Job> jobs;
    for (auto ind : ds.manifest.individuals) {
        auto& set = out.individuals[ind];
        for (auto c : kAllClasses) {
            const auto& cycles = segmented[where.at({ind, c})];
            const std::size_t skip = c == ClassLabel::NF ? cfg.nf_pool_size : 0;
            auto& dst = set.targets[class_index(c)];
            dst.resize(balanced);
            for (std::size_t k = 0; k < balanced; ++k) {
                dst[k].cycle = normalize_cycle(cycles[skip + k], set.stats);
                jobs.push_back({ind, c, k});
            }
        }
    }

    RelativeOptions ropt;
    ropt.enforce_reference = false; // pairing follows the manifest; the audit checks identities
    ropt.band = cfg.band;
    ropt.window = cfg.feature_window;
    parallel_for(jobs.size(), [&](std::size_t j) {
        const auto& job = jobs[j];
        auto& set = out.individuals.at(job.ind);
        auto& pc = set.targets[class_index(job.label)][job.k];
        pc.relative_frequency = pc.cycle.sample_rate / static_cast<double>(pc.cycle.size()) / set.pool_frequency;
        if (!relative) return;
        Rng rng(derive_seed(cfg.seed, {0x4EF, job.ind, class_index(job.label), pc.cycle.cycle_index}));
        std::vector<std::size_t> picks(set.pool.size());
        std::iota(picks.begin(), picks.end(), 0);
        shuffle(std::span<std::size_t>(picks), rng);
        for (std::size_t r = 0; r < cfg.refs_per_cycle; ++r) {
            const auto& ref = set.pool[picks[r]];
            RelativeOptions o = ropt;
            o.band = effective_band(cfg.band, ref.size(), pc.cycle.size());
            auto pair = delta_amp_ts(ref, pc.cycle, o);
            pc.amp.push_back(std::move(pair.amp));
            pc.ts.push_back(std::move(pair.ts));
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Per-cycle scores of one (individual, class) sequence in temporal order.
struct EvalSequence {
    IndividualId individual = 0;
    ClassLabel label = ClassLabel::NF;
    std::vector<ClassScores> scores;
};

/// Sliding windows of `batch` consecutive cycles (the whole sequence when it
/// is shorter); returns (correct, total).
inline std::pair<std::size_t, std::size_t> batch_hits(const EvalSequence& seq, std::size_t batch, BatchRule rule) {
    const std::size_t n = seq.scores.size();
    if (n == 0) return {0, 0};
    const std::size_t w = std::min(std::max<std::size_t>(batch, 1), n);
    std::size_t correct = 0;
    const std::span<const ClassScores> all(seq.scores);
    for (std::size_t s = 0; s + w <= n; ++s) {
        if (predict_batch(all.subspan(s, w), rule).label == seq.label) ++correct;
    }
    return {correct, n - w + 1};
}

inline double batch_accuracy(const std::vector<EvalSequence>& seqs, std::size_t batch, BatchRule rule) {
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const auto& s : seqs) {
        const auto [c, t] = batch_hits(s, batch, rule);
        correct += c;
        total += t;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

namespace detail {

inline ClassScores mean_scores(std::span<const ClassScores> s) {
    ClassScores out{};
    for (const auto& x : s) {
        for (std::size_t c = 0; c < kNumClasses; ++c) out[c] += x[c];
    }
    for (auto& v : out) v /= static_cast<double>(s.size());
    return out;
}

} // namespace detail

/// Cycles a run trains on and evaluates, by reference into PreparedData.
struct Split {
    struct Ref {
        IndividualId ind;
        ClassLabel label;
        std::size_t k;
    };
    std::vector<Ref> train;
    std::vector<Ref> holdout;   ///< class-major, temporal order inside a class
    std::vector<Ref> different; ///< individual-major, then class, then time
};

inline Split make_split(const PreparedData& data, const ExperimentConfig& cfg) {
    Split s;
    const std::size_t n = data.cycles_per_class;
    const auto n_hold = static_cast<std::size_t>(std::lround(cfg.holdout_fraction * static_cast<double>(n)));
    if (n_hold == 0 || n_hold >= n) throw Error(ErrorKind::InvalidConfig, "holdout fraction leaves an empty split");
    for (auto c : kAllClasses) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(derive_seed(cfg.seed, {0x5B1, class_index(c)}));
        shuffle(std::span<std::size_t>(idx), rng);
        std::vector<std::size_t> hold(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
        std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
        std::sort(hold.begin(), hold.end());
        std::sort(train.begin(), train.end());
        for (auto k : train) s.train.push_back({data.train_individual, c, k});
        for (auto k : hold) s.holdout.push_back({data.train_individual, c, k});
    }
    for (auto ind : data.test_individuals) {
        for (auto c : kAllClasses) {
            for (std::size_t k = 0; k < n; ++k) s.different.push_back({ind, c, k});
        }
    }
    return s;
}

inline const PreparedCycle& at(const PreparedData& d, const Split::Ref& r) {
    return d.individuals.at(r.ind).targets[class_index(r.label)][r.k];
}

/// Groups per-cycle scores into (individual, class) sequences.
inline std::vector<EvalSequence> group_scores(const std::vector<Split::Ref>& refs, const std::vector<ClassScores>& scores) {
    std::vector<EvalSequence> out;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (out.empty() || out.back().individual != refs[i].ind || out.back().label != refs[i].label) {
            out.push_back({refs[i].ind, refs[i].label, {}});
        }
        out.back().scores.push_back(scores[i]);
    }
    return out;
}

struct MethodScores {
    std::vector<ClassScores> same;
    std::vector<ClassScores> different;
    std::size_t training_vectors = 0;
    std::vector<std::string> excluded_columns;
};

/// Pairwise-distance vectors (all kinds plus the relative frequency `f`)
/// for one run; shared by every SVM-on-pairwise method.
struct PairwiseTable {
    ReferenceBank bank;
    std::vector<std::string> layout;
    std::vector<Split::Ref> svm_train;
    std::vector<std::vector<double>> train_vectors;
    std::vector<std::vector<double>> same_vectors;
    std::vector<std::vector<double>> different_vectors;
};

inline PairwiseTable build_pairwise_table(const PreparedData& data, const Split& split, const ExperimentConfig& cfg) {
    PairwiseTable t;
    std::vector<RelativeFeature> train_features;
    for (const auto& r : split.train) {
        const auto& pc = at(data, r);
        train_features.push_back(pc.amp.front());
        train_features.push_back(pc.ts.front());
    }
    t.bank = build_reference_bank(train_features, cfg.n_refs, derive_seed(cfg.seed, {0xBA4}), data.train_individual);
    const auto bank_ids = t.bank.ids();
    const std::set<CycleId> banked(bank_ids.begin(), bank_ids.end());
    for (const auto& r : split.train) {
        if (!banked.contains(at(data, r).cycle.id())) t.svm_train.push_back(r);
    }
    const std::vector<NamedScalar> extras_layout{{"f", 0.0}};
    t.layout = pd_layout(t.bank.kinds(), extras_layout);

    auto vector_for = [&](const Split::Ref& r) {
        const auto& pc = at(data, r);
        std::vector<double> acc(t.layout.size(), 0.0);
        for (std::size_t k = 0; k < pc.amp.size(); ++k) {
            const std::vector<RelativeFeature> feats{pc.amp[k], pc.ts[k]};
            const std::vector<NamedScalar> extras{{"f", pc.relative_frequency}};
            const auto v = build_pd_vector(t.bank, feats, extras, cfg.aggregation, cfg.band);
            for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += v.values[d];
        }
        for (auto& x : acc) x /= static_cast<double>(pc.amp.size());
        return acc;
    };
    auto fill = [&](const std::vector<Split::Ref>& refs, std::vector<std::vector<double>>& dst) {
        dst.resize(refs.size());
        parallel_for(refs.size(), [&](std::size_t i) { dst[i] = vector_for(refs[i]); });
    };
    fill(t.svm_train, t.train_vectors);
    fill(split.holdout, t.same_vectors);
    fill(split.different, t.different_vectors);
    return t;
}

/// Trains one method on the training split. Pairwise methods take their
/// bank and vectors from `pd`.
inline TrainedModel fit_model(Method m, const PreparedData& data, const Split& split, const ExperimentConfig& cfg,
                              const PairwiseTable* pd) {
    TrainedModel model;
    model.method = m;
    model.individual = data.train_individual;
    model.config = to_json(cfg);
    model.band = cfg.band;
    model.aggregation = cfg.aggregation;
    if (is_nearest_neighbor(m)) {
        std::vector<Exemplar> exemplars;
        for (const auto& r : split.train) {
            const auto& pc = at(data, r);
            const auto& values = m == Method::OneNnRaw ? pc.cycle.samples
                                 : m == Method::OneNnAmp ? pc.amp.front().values
                                                         : pc.ts.front().values;
            exemplars.push_back({values, r.label, pc.cycle.id()});
        }
        model.nn = NearestNeighbor::train(std::move(exemplars), cfg.band);
    } else if (m == Method::SvmRaw) {
        std::vector<double> lengths;
        for (const auto& r : split.train) lengths.push_back(static_cast<double>(at(data, r).cycle.size()));
        model.fit_length = static_cast<std::size_t>(detail::median_of(lengths));
        std::vector<std::vector<double>> vectors;
        std::vector<ClassLabel> labels;
        for (const auto& r : split.train) {
            vectors.push_back(detail::fit_length(at(data, r).cycle.samples, model.fit_length));
            labels.push_back(r.label);
        }
        model.svm = LinearSvm::train(vectors, labels, {}, cfg.svm);
    } else {
        model.bank = pd->bank;
        model.pd_columns = pairwise_columns(m, pd->layout);
        std::vector<std::string> layout;
        for (auto c : model.pd_columns) layout.push_back(pd->layout[c]);
        std::vector<std::vector<double>> vectors;
        std::vector<ClassLabel> labels;
        for (std::size_t i = 0; i < pd->svm_train.size(); ++i) {
            vectors.push_back(detail::select_columns(pd->train_vectors[i], model.pd_columns));
            labels.push_back(pd->svm_train[i].label);
        }
        model.svm = LinearSvm::train(vectors, labels, layout, cfg.svm);
    }
    return model;
}

inline MethodScores score_method(const TrainedModel& model, const PreparedData& data, const Split& split,
                                 const PairwiseTable* pd) {
    MethodScores out;
    out.same.resize(split.holdout.size());
    out.different.resize(split.different.size());
    const Method m = model.method;
    if (is_nearest_neighbor(m)) {
        out.training_vectors = model.exemplar_count();
    } else {
        out.training_vectors = m == Method::SvmRaw ? split.train.size() : pd->svm_train.size();
        out.excluded_columns = model.svm.excluded_columns();
    }

    if (uses_pairwise(m)) {
        for (std::size_t i = 0; i < split.holdout.size(); ++i) out.same[i] = model.scores_pairwise(pd->same_vectors[i]);
        for (std::size_t i = 0; i < split.different.size(); ++i) {
            out.different[i] = model.scores_pairwise(pd->different_vectors[i]);
        }
        return out;
    }
    auto scorer = [&](const Split::Ref& r) {
        const auto& pc = at(data, r);
        if (!is_relative(m)) return model.scores_raw(pc.cycle.samples);
        const auto& feats = m == Method::OneNnAmp ? pc.amp : pc.ts;
        std::vector<ClassScores> per_ref;
        for (const auto& f : feats) per_ref.push_back(model.scores_relative(f));
        return detail::mean_scores(per_ref);
    };
    parallel_for(split.holdout.size(), [&](std::size_t i) { out.same[i] = scorer(split.holdout[i]); });
    parallel_for(split.different.size(), [&](std::size_t i) { out.different[i] = scorer(split.different[i]); });
    return out;
}

inline MethodResult summarize(Method m, const Split& split, const MethodScores& scores, const ExperimentConfig& cfg) {
    MethodResult r;
    r.method = m;
    r.training_vectors = scores.training_vectors;
    r.excluded_columns = scores.excluded_columns;
    const auto same = group_scores(split.holdout, scores.same);
    const auto diff = group_scores(split.different, scores.different);
    r.accuracy_same = batch_accuracy(same, 1, cfg.batch_rule);
    r.accuracy_different = batch_accuracy(diff, 1, cfg.batch_rule);
    for (auto b : cfg.batch_sizes) {
        r.by_batch.push_back({b, batch_accuracy(same, b, cfg.batch_rule), batch_accuracy(diff, b, cfg.batch_rule)});
    }
    std::map<IndividualId, std::vector<EvalSequence>> per_ind;
    for (const auto& s : diff) per_ind[s.individual].push_back(s);
    for (const auto& [ind, seqs] : per_ind) r.different_by_individual[ind] = batch_accuracy(seqs, 1, cfg.batch_rule);
    for (std::size_t i = 0; i < split.different.size(); ++i) {
        ++r.confusion[class_index(split.different[i].label)][class_index(argmax_label(scores.different[i]))];
    }
    return r;
}

/// Trains every configured method on the training individual and evaluates
/// it on held-out cycles of that individual ("same") and on every test
/// individual ("different").
inline ResultsReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.methods.empty()) throw Error(ErrorKind::InvalidConfig, "no methods selected");
    if (std::find(cfg.batch_sizes.begin(), cfg.batch_sizes.end(), std::size_t{1}) == cfg.batch_sizes.end()) {
        throw Error(ErrorKind::InvalidConfig, "batch sizes must include 1");
    }
    const bool relative = std::any_of(cfg.methods.begin(), cfg.methods.end(), is_relative);
    const auto data = prepare_data(ds, cfg, relative);
    const auto split = make_split(data, cfg);

    std::optional<PairwiseTable> pd;
    if (std::any_of(cfg.methods.begin(), cfg.methods.end(), uses_pairwise)) pd = build_pairwise_table(data, split, cfg);

    ResultsReport report;
    report.config = to_json(cfg);
    report.cycles_per_class = data.cycles_per_class;
    for (auto m : cfg.methods) {
        const auto* table = pd ? &*pd : nullptr;
        const auto scores = score_method(fit_model(m, data, split, cfg, table), data, split, table);
        report.methods.push_back(summarize(m, split, scores, cfg));
    }

    auto& p = report.provenance;
    for (std::size_t i = 0; i < ds.recordings.size(); ++i) {
        const auto& e = ds.manifest.recordings[i];
        p.sources.push_back({e.individual, e.label, recording_digest(ds.recordings[i])});
    }
    p.train_individual = data.train_individual;
    p.test_individuals = data.test_individuals;
    for (const auto& r : split.train) p.train.push_back(at(data, r).cycle.id());
    for (const auto& r : split.holdout) p.holdout.push_back(at(data, r).cycle.id());
    for (const auto& r : split.different) p.different.push_back(at(data, r).cycle.id());
    if (pd) p.bank = pd->bank.ids();
    if (relative) {
        for (const auto* refs : {&split.train, &split.holdout, &split.different}) {
            for (const auto& r : *refs) {
                const auto& pc = at(data, r);
                for (const auto& f : pc.amp) p.references.emplace_back(f.target_id, f.ref_id);
            }
        }
    }
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/// Trains one method exactly as run_experiment would, without evaluating it.
inline TrainedModel train_model(const Dataset& ds, const ExperimentConfig& cfg, Method m) {
    const auto data = prepare_data(ds, cfg, is_relative(m));
    const auto split = make_split(data, cfg);
    std::optional<PairwiseTable> pd;
    if (uses_pairwise(m)) pd = build_pairwise_table(data, split, cfg);
    return fit_model(m, data, split, cfg, pd ? &*pd : nullptr);
}

struct ReferenceSweep {
    std::vector<IndividualId> trainers;
    std::vector<ResultsReport> reports;
};

/// Re-runs the experiment with every individual of the manifest as trainer.
inline ReferenceSweep sweep_reference(const Dataset& ds, ExperimentConfig cfg) {
    ReferenceSweep sweep;
    for (auto ind : ds.manifest.individuals) {
        cfg.train_individual = ind;
        sweep.trainers.push_back(ind);
        sweep.reports.push_back(run_experiment(ds, cfg));
    }
    return sweep;
}

/// Per method: min, mean and max accuracy_different over the trainers.
inline Json sweep_summary(const ReferenceSweep& sweep) {
    Json out = Json::array();
    if (sweep.reports.empty()) return out;
    for (const auto& first : sweep.reports.front().methods) {
        std::vector<double> acc;
        Json per = Json::object();
        for (std::size_t i = 0; i < sweep.reports.size(); ++i) {
            const auto* r = sweep.reports[i].find(first.method);
            acc.push_back(r->accuracy_different);
            per[std::to_string(sweep.trainers[i])] = r->accuracy_different;
        }
        const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
        out.push_back({{"method", std::string(method_name(first.method))},
                       {"accuracy_different_min", *std::min_element(acc.begin(), acc.end())},
                       {"accuracy_different_mean", mean},
                       {"accuracy_different_max", *std::max_element(acc.begin(), acc.end())},
                       {"by_trainer", per}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Leakage audit
// ---------------------------------------------------------------------------

struct AuditVerdict {
    bool pass = true;
    std::vector<std::string> violations;

    void fail(std::string msg) {
        pass = false;
        violations.push_back(std::move(msg));
    }
};

/// Checks the recorded provenance of a run: training and holdout data come
/// from the training individual only, "different" data never does, holdout
/// and training cycles are disjoint, banked references are training cycles,
/// and every target was paired with an NF reference of its own individual.
inline AuditVerdict audit_no_leakage(const ResultsReport& report) {
    AuditVerdict v;
    const auto& p = report.provenance;
    const auto ti = p.train_individual;
    std::map<std::string, const SourceRecord*> by_digest;
    for (const auto& s : p.sources) {
        auto [it, fresh] = by_digest.emplace(s.digest, &s);
        if (fresh) continue;
        const auto& o = *it->second;
        v.fail("recording " + std::string(class_code(s.label)) + "/" + std::to_string(s.individual) +
               " has the same samples as " + std::string(class_code(o.label)) + "/" + std::to_string(o.individual));
    }
    for (const auto& id : p.train) {
        if (id.individual != ti) v.fail("training cycle " + to_string(id) + " is not from individual " + std::to_string(ti));
    }
    for (const auto& id : p.holdout) {
        if (id.individual != ti) v.fail("holdout cycle " + to_string(id) + " is not from individual " + std::to_string(ti));
    }
    const std::set<CycleId> train(p.train.begin(), p.train.end());
    for (const auto& id : p.holdout) {
        if (train.contains(id)) v.fail("holdout cycle " + to_string(id) + " is also a training cycle");
    }
    for (const auto& id : p.bank) {
        if (!train.contains(id)) v.fail("banked reference " + to_string(id) + " is not a training cycle");
    }
    const std::set<IndividualId> tests(p.test_individuals.begin(), p.test_individuals.end());
    if (tests.contains(ti)) v.fail("training individual " + std::to_string(ti) + " is also a test individual");
    for (const auto& id : p.different) {
        if (id.individual == ti) v.fail("evaluation cycle " + to_string(id) + " is from the training individual");
        else if (!tests.contains(id.individual)) v.fail("evaluation cycle " + to_string(id) + " is from an unlisted individual");
        if (train.contains(id)) v.fail("evaluation cycle " + to_string(id) + " is also a training cycle");
    }
    for (const auto& [target, ref] : p.references) {
        if (ref.label != ClassLabel::NF) v.fail("reference " + to_string(ref) + " of " + to_string(target) + " is not NF");
        if (ref.individual != target.individual) {
            v.fail("reference " + to_string(ref) + " of " + to_string(target) + " belongs to another individual");
        }
        if (ref == target) v.fail("cycle " + to_string(target) + " was compared with itself");
    }
    return v;
}

} // namespace wavefault

#endif // WAVEFAULT_EXPERIMENT_HPP
