#ifndef WAVEFAULT_PAIRWISE_FEATURES_HPP
#define WAVEFAULT_PAIRWISE_FEATURES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavefault/dtw.hpp"
#include "wavefault/random.hpp"
#include "wavefault/relative_features.hpp"

namespace wavefault {

/// How the n reference distances of one class are folded into one entry.
enum class Aggregation : std::uint8_t {
    SqrtOfSum, ///< (1/n) * sqrt(sum of distances)
    Mean,      ///< plain mean of the distances
};

constexpr std::string_view aggregation_name(Aggregation a) {
    return a == Aggregation::Mean ? "mean" : "sqrt_sum";
}

inline Aggregation parse_aggregation(std::string_view s) {
    if (s == "mean") return Aggregation::Mean;
    if (s == "sqrt_sum" || s == "eq12") return Aggregation::SqrtOfSum;
    throw Error(ErrorKind::FormatError, "unknown aggregation '" + std::string(s) + "'");
}

inline double aggregate(std::span<const double> distances, Aggregation how) {
    const double n = static_cast<double>(distances.size());
    const double sum = std::accumulate(distances.begin(), distances.end(), 0.0);
    return how == Aggregation::Mean ? sum / n : std::sqrt(sum) / n;
}

/// Banked relative features of the training individual, n per (class, kind).
/// The same n reference cycles are used for every kind of a class.
class ReferenceBank {
public:
    ReferenceBank() = default;
    ReferenceBank(IndividualId individual, std::size_t n, std::vector<FeatureKind> kinds)
        : individual_(individual), n_(n), kinds_(std::move(kinds)) {}

    IndividualId individual() const { return individual_; }
    std::size_t n() const { return n_; }
    const std::vector<FeatureKind>& kinds() const { return kinds_; }

    const std::vector<RelativeFeature>& entries(ClassLabel c, FeatureKind k) const {
        static const std::vector<RelativeFeature> empty;
        auto it = entries_.find(key(c, k));
        return it == entries_.end() ? empty : it->second;
    }

    void add(ClassLabel c, FeatureKind k, RelativeFeature f) { entries_[key(c, k)].push_back(std::move(f)); }

    /// Target ids of the banked cycles, class order then selection order.
    std::vector<CycleId> ids() const {
        std::vector<CycleId> out;
        if (kinds_.empty()) return out;
        for (auto c : kAllClasses) {
            for (const auto& f : entries(c, kinds_.front())) out.push_back(f.target_id);
        }
        return out;
    }

private:
    static std::pair<std::uint8_t, std::uint8_t> key(ClassLabel c, FeatureKind k) {
        return {static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(k)};
    }

    IndividualId individual_ = 0;
    std::size_t n_ = 0;
    std::vector<FeatureKind> kinds_;
    std::map<std::pair<std::uint8_t, std::uint8_t>, std::vector<RelativeFeature>> entries_;
};

/// Picks n reference cycles per class (seeded, independent of input order)
/// among training features carrying every requested kind.
inline ReferenceBank build_reference_bank(std::span<const RelativeFeature> train_features, std::size_t n,
                                          std::uint64_t seed, IndividualId individual,
                                          std::vector<FeatureKind> kinds = {FeatureKind::Amp, FeatureKind::Ts}) {
    if (n == 0) throw Error(ErrorKind::InvalidConfig, "reference count n must be positive");
    // target id -> per-kind feature index
    std::map<CycleId, std::map<FeatureKind, std::size_t>> by_target;
    for (std::size_t i = 0; i < train_features.size(); ++i) {
        const auto& f = train_features[i];
        if (f.target_id.individual != individual) continue;
        by_target[f.target_id][f.kind] = i;
    }

    ReferenceBank bank(individual, n, kinds);
    for (auto c : kAllClasses) {
        std::vector<CycleId> candidates;
        for (const auto& [id, kinds_present] : by_target) {
            if (id.label != c) continue;
            bool complete = std::all_of(kinds.begin(), kinds.end(),
                                        [&](FeatureKind k) { return kinds_present.contains(k); });
            if (complete) candidates.push_back(id);
        }
        if (candidates.size() < n) {
            throw Error(ErrorKind::InsufficientReferences,
                        "class " + std::string(class_code(c)) + ", kind " + std::string(kind_name(kinds.front())) +
                            ": have " + std::to_string(candidates.size()) + ", need " + std::to_string(n));
        }
        Rng rng(derive_seed(seed, {0xBA4C, class_index(c)}));
        shuffle(std::span<CycleId>(candidates), rng);
        for (std::size_t s = 0; s < n; ++s) {
            for (auto k : kinds) bank.add(c, k, train_features[by_target[candidates[s]][k]]);
        }
    }
    return bank;
}

/// Aggregated DTW distance between one relative feature and the banked
/// features of class `c`.
inline double pairwise_entry(const ReferenceBank& bank, ClassLabel c, FeatureKind kind, const RelativeFeature& feat,
                             Aggregation how = Aggregation::SqrtOfSum, const Band& band = std::nullopt) {
    if (feat.kind != kind) {
        throw Error(ErrorKind::KindMismatch, "feature kind " + std::string(kind_name(feat.kind)) + " vs requested " +
                                                 std::string(kind_name(kind)));
    }
    const auto& refs = bank.entries(c, kind);
    if (refs.empty()) {
        throw Error(ErrorKind::InsufficientReferences, "bank has no entries for class " + std::string(class_code(c)));
    }
    std::vector<double> distances;
    distances.reserve(refs.size());
    for (const auto& r : refs) {
        const Band b = effective_band(band, r.values.size(), feat.values.size());
        distances.push_back(dtw_distance_only(r.values, feat.values, b));
    }
    return aggregate(distances, how);
}

/// Fixed-length pairwise-distance vector with its entry names.
struct PairwiseFeatureVector {
    std::vector<double> values;
    std::vector<std::string> layout;
    CycleId target_id;

    std::string layout_string() const {
        std::string s;
        for (std::size_t i = 0; i < layout.size(); ++i) {
            if (i) s += ',';
            s += layout[i];
        }
        return s;
    }
};

using NamedScalar = std::pair<std::string, double>;

inline std::vector<std::string> pd_layout(const std::vector<FeatureKind>& kinds, std::span<const NamedScalar> extras) {
    std::vector<std::string> names;
    for (auto k : kinds) {
        for (auto c : kAllClasses) names.push_back("p_" + std::string(kind_name(k)) + "_" + std::string(class_code(c)));
    }
    for (const auto& [name, value] : extras) names.push_back(name);
    return names;
}

/// Concatenates per-class entries (kind-major, class order) and the extras.
inline PairwiseFeatureVector build_pd_vector(const ReferenceBank& bank, std::span<const RelativeFeature> cycle_features,
                                             std::span<const NamedScalar> extras = {},
                                             Aggregation how = Aggregation::SqrtOfSum,
                                             const Band& band = std::nullopt) {
    PairwiseFeatureVector out;
    out.layout = pd_layout(bank.kinds(), extras);
    out.values.reserve(out.layout.size());
    for (auto k : bank.kinds()) {
        auto it = std::find_if(cycle_features.begin(), cycle_features.end(),
                               [k](const RelativeFeature& f) { return f.kind == k; });
        if (it == cycle_features.end()) {
            throw Error(ErrorKind::MissingKind, "no " + std::string(kind_name(k)) + " feature for the target cycle");
        }
        out.target_id = it->target_id;
        for (auto c : kAllClasses) out.values.push_back(pairwise_entry(bank, c, k, *it, how, band));
    }
    for (const auto& [name, value] : extras) out.values.push_back(value);
    return out;
}

} // namespace wavefault

#endif // WAVEFAULT_PAIRWISE_FEATURES_HPP
