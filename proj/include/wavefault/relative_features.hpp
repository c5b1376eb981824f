#ifndef WAVEFAULT_RELATIVE_FEATURES_HPP
#define WAVEFAULT_RELATIVE_FEATURES_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavefault/dtw.hpp"
#include "wavefault/error.hpp"
#include "wavefault/signal_model.hpp"

namespace wavefault {

enum class FeatureKind : std::uint8_t { Euclidean, Amp, Ts, Pdrop };

constexpr std::string_view kind_name(FeatureKind k) {
    switch (k) {
    case FeatureKind::Euclidean: return "euclidean";
    case FeatureKind::Amp: return "amp";
    case FeatureKind::Ts: return "ts";
    case FeatureKind::Pdrop: return "pdrop";
    }
    return "?";
}

inline FeatureKind parse_kind(std::string_view name) {
    for (auto k : {FeatureKind::Euclidean, FeatureKind::Amp, FeatureKind::Ts, FeatureKind::Pdrop}) {
        if (kind_name(k) == name) return k;
    }
    throw Error(ErrorKind::FormatError, "unknown feature kind '" + std::string(name) + "'");
}

/// A reference-relative representation of one target cycle.
struct RelativeFeature {
    FeatureKind kind = FeatureKind::Amp;
    std::vector<double> values;
    CycleId ref_id;
    CycleId target_id;

    std::span<const double> view() const { return values; }
};

struct RelativeOptions {
    /// Require an NF reference from the target's own individual.
    bool enforce_reference = true;
    Band band = std::nullopt;
    /// Restrict the DTW-based features to a fractional section of both cycles.
    std::optional<PhaseWindow> window = std::nullopt;
};

namespace detail {

inline void check_pairing(const Cycle& ref, const Cycle& target, bool enforce_reference) {
    if (ref.id() == target.id()) {
        throw Error(ErrorKind::SelfComparison, "reference and target are the same cycle " + to_string(ref.id()));
    }
    if (!enforce_reference) return;
    if (ref.label != ClassLabel::NF) {
        throw Error(ErrorKind::NotReference, "reference " + to_string(ref.id()) + " is not an NF cycle");
    }
    if (ref.individual != target.individual) {
        throw Error(ErrorKind::NotReference, "reference " + to_string(ref.id()) + " belongs to another individual than " +
                                                 to_string(target.id()));
    }
}

inline std::span<const double> section(const Cycle& c, const std::optional<PhaseWindow>& window) {
    if (!window) return c.values();
    const auto [i0, i1] = window_indices(c.size(), *window);
    return c.values().subspan(i0, i1 - i0 + 1);
}

} // namespace detail

inline RelativeFeature delta_euclidean(const Cycle& ref, const Cycle& target) {
    if (ref.size() != target.size()) {
        throw Error(ErrorKind::LengthMismatch, "element-wise difference needs equal lengths (" +
                                                   std::to_string(ref.size()) + " vs " + std::to_string(target.size()) + ")");
    }
    RelativeFeature f{FeatureKind::Euclidean, std::vector<double>(ref.size()), ref.id(), target.id()};
    for (std::size_t t = 0; t < ref.size(); ++t) f.values[t] = std::abs(ref.samples[t] - target.samples[t]);
    return f;
}

/// Amplitude difference and time shift along one shared warping path.
struct RelativePair {
    RelativeFeature amp;
    RelativeFeature ts;
    DtwResult alignment;
};

inline RelativePair delta_amp_ts(const Cycle& ref, const Cycle& target, const RelativeOptions& opt = {}) {
    detail::check_pairing(ref, target, opt.enforce_reference);
    const auto x = detail::section(ref, opt.window);
    const auto y = detail::section(target, opt.window);
    RelativePair out;
    out.alignment = dtw(x, y, opt.band);
    const auto& pairs = out.alignment.path.pairs;
    out.amp = {FeatureKind::Amp, std::vector<double>(pairs.size()), ref.id(), target.id()};
    out.ts = {FeatureKind::Ts, std::vector<double>(pairs.size()), ref.id(), target.id()};
    for (std::size_t a = 0; a < pairs.size(); ++a) {
        out.amp.values[a] = std::abs(x[pairs[a].p] - y[pairs[a].q]);
        out.ts.values[a] = static_cast<double>(pairs[a].p) - static_cast<double>(pairs[a].q);
    }
    return out;
}

inline RelativeFeature delta_amp(const Cycle& ref, const Cycle& target, const RelativeOptions& opt = {}) {
    return delta_amp_ts(ref, target, opt).amp;
}

/// Signed p - q with the reference as the first DTW argument.
inline RelativeFeature delta_ts(const Cycle& ref, const Cycle& target, const RelativeOptions& opt = {}) {
    return delta_amp_ts(ref, target, opt).ts;
}

/// P_drop(target) - P_drop(reference); removes any per-individual bias.
inline RelativeFeature delta_pdrop(const Cycle& ref, const Cycle& target, const PhaseWindow& phase = {},
                                   bool enforce_reference = true) {
    detail::check_pairing(ref, target, enforce_reference);
    const double value = compute_p_drop(target, phase) - compute_p_drop(ref, phase);
    return {FeatureKind::Pdrop, {value}, ref.id(), target.id()};
}

} // namespace wavefault

#endif // WAVEFAULT_RELATIVE_FEATURES_HPP
