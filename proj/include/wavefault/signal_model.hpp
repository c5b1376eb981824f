#ifndef WAVEFAULT_SIGNAL_MODEL_HPP
#define WAVEFAULT_SIGNAL_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavefault/error.hpp"

namespace wavefault {

// ---------------------------------------------------------------------------
// Class labels and identities
// ---------------------------------------------------------------------------

/// Fault classes. NF (no fault) is the reference class; the enumerator order
/// is the canonical class order used in every feature layout and report.
enum class ClassLabel : std::uint8_t { NF, S, D, R, V, Q, C, A, B, T, O };

inline constexpr std::size_t kNumClasses = 11;

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::NF, ClassLabel::S, ClassLabel::D, ClassLabel::R, ClassLabel::V, ClassLabel::Q,
    ClassLabel::C,  ClassLabel::A, ClassLabel::B, ClassLabel::T, ClassLabel::O};

constexpr std::size_t class_index(ClassLabel c) { return static_cast<std::size_t>(c); }

constexpr std::string_view class_code(ClassLabel c) {
    constexpr std::array<std::string_view, kNumClasses> codes = {"NF", "S", "D", "R", "V", "Q",
                                                                 "C",  "A", "B", "T", "O"};
    return codes[class_index(c)];
}

inline std::optional<ClassLabel> parse_class(std::string_view code) {
    for (auto c : kAllClasses) {
        if (class_code(c) == code) return c;
    }
    return std::nullopt;
}

inline ClassLabel class_from_code(std::string_view code) {
    if (auto c = parse_class(code)) return *c;
    throw Error(ErrorKind::FormatError, "unknown class code '" + std::string(code) + "'");
}

using IndividualId = std::uint32_t;

/// (class, individual, cycle index) identifies one cycle within a dataset.
struct CycleId {
    ClassLabel label = ClassLabel::NF;
    IndividualId individual = 0;
    std::uint32_t cycle_index = 0;

    friend bool operator==(const CycleId&, const CycleId&) = default;
    friend auto operator<=>(const CycleId&, const CycleId&) = default;
};

inline std::string to_string(const CycleId& id) {
    std::ostringstream os;
    os << class_code(id.label) << '/' << id.individual << '/' << id.cycle_index;
    return os.str();
}

// ---------------------------------------------------------------------------
// Cycles and recordings
// ---------------------------------------------------------------------------

/// One impact cycle. Lengths differ between cycles; nothing resamples them.
struct Cycle {
    std::vector<double> samples;
    ClassLabel label = ClassLabel::NF;
    IndividualId individual = 0;
    std::uint32_t cycle_index = 0;
    double sample_rate = 0.0;
    /// First sample of this cycle within its source recording.
    std::size_t start = 0;

    CycleId id() const { return {label, individual, cycle_index}; }
    std::size_t size() const { return samples.size(); }
    std::span<const double> values() const { return samples; }
};

struct Recording {
    std::vector<double> samples;
    double sample_rate = 0.0;
    ClassLabel label = ClassLabel::NF;
    IndividualId individual = 0;
    double duration = 0.0;
};

struct CycleMeta {
    double impact_frequency = 0.0;
    double p_drop = 0.0;
};

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

struct SegmentationConfig {
    /// Centered moving-average width applied before differentiation.
    double smooth_seconds = 1.0e-3;
    /// Onset threshold on the smoothed derivative: median + k_mad * MAD.
    double k_mad = 8.0;
    /// Floor for the threshold when the MAD collapses (noise-free input):
    /// median + peak_fraction * (peak_quantile of the derivative - median).
    double peak_quantile = 0.99;
    double peak_fraction = 0.3;
    /// Crossings closer than this to the previous onset are ignored.
    double refractory_seconds = 8.0e-3;
    /// Accepted cycle length range as fractions of the median cycle length.
    double min_length_ratio = 0.5;
    double max_length_ratio = 2.0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

inline std::vector<double> moving_average(std::span<const double> x, std::size_t width) {
    const std::size_t n = x.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
    std::vector<double> out(n);
    const std::size_t half = width / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }
    return out;
}

} // namespace detail

struct OnsetDetection {
    std::vector<std::size_t> onsets;
    double threshold = 0.0;
};

/// Upward threshold crossings of the smoothed derivative.
inline OnsetDetection detect_onsets(std::span<const double> samples, double sample_rate,
                                    const SegmentationConfig& cfg = {}) {
    OnsetDetection result;
    if (samples.size() < 3 || !(sample_rate > 0.0)) return result;

    const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.smooth_seconds * sample_rate)));
    const auto smooth = detail::moving_average(samples, width);
    std::vector<double> deriv(smooth.size() - 1);
    for (std::size_t i = 0; i + 1 < smooth.size(); ++i) deriv[i] = smooth[i + 1] - smooth[i];

    const double med = detail::median_of(deriv);
    std::vector<double> dev(deriv.size());
    std::transform(deriv.begin(), deriv.end(), dev.begin(), [med](double d) { return std::abs(d - med); });
    double spread = detail::median_of(dev);
    if (spread <= 0.0) spread = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(dev.size());
    std::vector<double> sorted = deriv;
    const auto qi = static_cast<std::size_t>(std::clamp(cfg.peak_quantile, 0.0, 1.0) * static_cast<double>(sorted.size() - 1));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(qi), sorted.end());
    const double peak = sorted[qi];
    result.threshold = std::max(med + cfg.k_mad * spread, med + cfg.peak_fraction * (peak - med));
    if (!(result.threshold > med)) return result;

    const auto refractory = static_cast<std::size_t>(std::lround(cfg.refractory_seconds * sample_rate));
    std::optional<std::size_t> last;
    for (std::size_t i = 1; i < deriv.size(); ++i) {
        if (deriv[i - 1] < result.threshold && deriv[i] >= result.threshold) {
            if (last && i - *last < refractory) continue;
            result.onsets.push_back(i);
            last = i;
        }
    }
    return result;
}

/// Cuts a recording at detected cycle onsets. Cycles outside the configured
/// length bounds (relative to the median) are dropped; the survivors are
/// re-indexed consecutively in temporal order.
inline std::vector<Cycle> segment_recording(const Recording& rec, const SegmentationConfig& cfg = {}) {
    const auto detection = detect_onsets(rec.samples, rec.sample_rate, cfg);
    const auto& onsets = detection.onsets;
    if (onsets.size() < 2) {
        std::ostringstream os;
        os << "found " << onsets.size() << " onset(s) with derivative threshold " << detection.threshold;
        throw Error(ErrorKind::NoCyclesDetected, os.str());
    }

    std::vector<double> lengths;
    lengths.reserve(onsets.size() - 1);
    for (std::size_t i = 0; i + 1 < onsets.size(); ++i) lengths.push_back(static_cast<double>(onsets[i + 1] - onsets[i]));
    const double median_len = detail::median_of(lengths);

    std::vector<Cycle> cycles;
    std::uint32_t index = 0;
    for (std::size_t i = 0; i + 1 < onsets.size(); ++i) {
        const double len = lengths[i];
        if (len < cfg.min_length_ratio * median_len || len > cfg.max_length_ratio * median_len) continue;
        Cycle c;
        c.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(onsets[i]),
                         rec.samples.begin() + static_cast<std::ptrdiff_t>(onsets[i + 1]));
        c.label = rec.label;
        c.individual = rec.individual;
        c.cycle_index = index++;
        c.sample_rate = rec.sample_rate;
        c.start = onsets[i];
        cycles.push_back(std::move(c));
    }
    if (cycles.size() < 1) throw Error(ErrorKind::NoCyclesDetected, "no cycle within the length bounds");
    return cycles;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Affine normalization parameters: x -> (x - offset) / scale.
struct NormStats {
    double offset = 0.0;
    double scale = 1.0;
};

/// Mean and population standard deviation over all samples of the given
/// (reference) cycles.
inline NormStats compute_norm_stats(std::span<const Cycle> reference) {
    double count = 0.0;
    double sum = 0.0;
    for (const auto& c : reference) {
        for (double v : c.samples) sum += v;
        count += static_cast<double>(c.samples.size());
    }
    if (count == 0.0) throw Error(ErrorKind::DegenerateStats, "no reference samples");
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& c : reference) {
        for (double v : c.samples) ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / count)};
}

inline void check_stats(const NormStats& stats) {
    if (!std::isfinite(stats.scale) || !(stats.scale > 0.0) || !std::isfinite(stats.offset)) {
        std::ostringstream os;
        os << "offset " << stats.offset << ", scale " << stats.scale;
        throw Error(ErrorKind::DegenerateStats, os.str());
    }
}

inline Cycle normalize_cycle(const Cycle& c, const NormStats& stats) {
    check_stats(stats);
    Cycle out = c;
    for (auto& v : out.samples) v = (v - stats.offset) / stats.scale;
    return out;
}

inline Cycle denormalize_cycle(const Cycle& c, const NormStats& stats) {
    check_stats(stats);
    Cycle out = c;
    for (auto& v : out.samples) v = v * stats.scale + stats.offset;
    return out;
}

// ---------------------------------------------------------------------------
// Scalar features
// ---------------------------------------------------------------------------

/// Fractional sub-interval of a cycle. The default brackets the forward
/// acceleration phase.
struct PhaseWindow {
    double start = 0.55;
    double end = 0.95;
};

inline std::pair<std::size_t, std::size_t> window_indices(std::size_t length, const PhaseWindow& w) {
    if (length == 0 || !(w.start >= 0.0) || !(w.end <= 1.0) || !(w.start <= w.end)) {
        std::ostringstream os;
        os << "window [" << w.start << ", " << w.end << "] on a cycle of " << length << " samples";
        throw Error(ErrorKind::WindowOutOfRange, os.str());
    }
    const double last = static_cast<double>(length - 1);
    return {static_cast<std::size_t>(std::lround(w.start * last)),
            static_cast<std::size_t>(std::lround(w.end * last))};
}

/// Pressure at the end of the phase minus pressure at its start.
inline double compute_p_drop(std::span<const double> samples, const PhaseWindow& phase = {}) {
    const auto [i0, i1] = window_indices(samples.size(), phase);
    return samples[i1] - samples[i0];
}

inline double compute_p_drop(const Cycle& c, const PhaseWindow& phase = {}) {
    return compute_p_drop(c.values(), phase);
}

inline double estimate_impact_frequency(std::span<const Cycle> cycles) {
    if (cycles.size() < 2) {
        throw Error(ErrorKind::InsufficientCycles,
                    "need at least 2 cycles, got " + std::to_string(cycles.size()));
    }
    double total = 0.0;
    for (const auto& c : cycles) total += static_cast<double>(c.size());
    const double mean_len = total / static_cast<double>(cycles.size());
    return cycles.front().sample_rate / mean_len;
}

inline CycleMeta cycle_meta(std::span<const Cycle> recording_cycles, const Cycle& c, const PhaseWindow& phase = {}) {
    return {estimate_impact_frequency(recording_cycles), compute_p_drop(c, phase)};
}

} // namespace wavefault

#endif // WAVEFAULT_SIGNAL_MODEL_HPP
