#ifndef WAVEFAULT_SYNTHGEN_HPP
#define WAVEFAULT_SYNTHGEN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavefault/error.hpp"
#include "wavefault/random.hpp"
#include "wavefault/signal_model.hpp"

namespace wavefault::synth {

/// The four flow-change events that trigger pressure waves in every cycle.
inline constexpr std::size_t kNumEvents = 4;
inline constexpr std::array<std::string_view, kNumEvents> kEventNames = {"valve_close", "valve_open", "impact",
                                                                         "control_line"};

using EventArray = std::array<double, kNumEvents>;

/// Physical configuration of one (pseudo-)individual.
struct IndividualParams {
    double fundamental_freq = 60.0;      ///< impact frequency, Hz
    double oscillation_period_scale = 1; ///< hose-length analog; scales every wave period
    double reflection_delay = 0.5e-3;    ///< echo delay, s
    double amplitude_gain = 1.0;
    double pressure_bias = 0.0;
    double supply_drop = 1.0; ///< supply-system share of the forward-acceleration drop
    std::uint64_t seed = 0;
    IndividualId id = 0;
};

/// Deviation of one class from the no-fault behaviour.
struct FaultRow {
    EventArray event_time_shifts{};             ///< s
    EventArray event_amplitude_scales{1, 1, 1, 1};
    EventArray event_period_scales{1, 1, 1, 1};
    double damping_scale = 1.0;    ///< >1 decays faster
    double trend_drop_scale = 1.0; ///< forward-acceleration drop (accumulator charge analog)
    double frequency_scale = 1.0;

    bool is_identity() const {
        auto all = [](const EventArray& a, double v) { return std::all_of(a.begin(), a.end(), [v](double x) { return x == v; }); };
        return all(event_time_shifts, 0.0) && all(event_amplitude_scales, 1.0) && all(event_period_scales, 1.0) &&
               damping_scale == 1.0 && trend_drop_scale == 1.0 && frequency_scale == 1.0;
    }
};

struct FaultParams {
    std::array<FaultRow, kNumClasses> rows{};
    const FaultRow& operator[](ClassLabel c) const { return rows[class_index(c)]; }
    FaultRow& operator[](ClassLabel c) { return rows[class_index(c)]; }
};

struct NoiseConfig {
    double white = 0.0;             ///< additive measurement noise (std)
    double period_jitter = 0.0;     ///< relative std of the cycle period
    double event_time_jitter = 0.0; ///< s, std of each event time
    double amplitude_jitter = 0.0;  ///< relative std of each event amplitude

    bool is_zero() const { return white == 0 && period_jitter == 0 && event_time_jitter == 0 && amplitude_jitter == 0; }
};

/// Shape constants shared by every individual and class.
struct CycleShape {
    double low_level = -1.5;     ///< pressure right after impact
    double nominal_level = 1.0;  ///< recovered supply pressure
    double buildup_rise = 0.2;   ///< slow increase before forward acceleration
    double base_drop = 1.6;      ///< forward-acceleration drop for supply_drop = 1
    double rise_end = 0.05;      ///< end of the recovery rise (cycle fraction)
    double accel_start = 0.5;    ///< start of forward acceleration
    double impact_start = 0.975; ///< start of the impact pressure fall
    EventArray event_phase{0.975, 0.12, 0.0, 0.30};
    EventArray event_amplitude{0.8, -0.7, -0.6, -0.35};
    EventArray event_period{1.6e-3, 2.2e-3, 1.4e-3, 1.8e-3}; ///< s
    EventArray event_decay{1.8e-3, 2.2e-3, 1.5e-3, 2.0e-3};  ///< s
    double reflection_coefficient = -0.5;
};

/// Ground truth emitted alongside every recording.
struct GeneratorLog {
    std::vector<double> onset_times;                ///< s, start of every cycle
    std::vector<EventArray> event_times;            ///< s, per cycle
    IndividualParams individual;
    FaultRow fault;
    ClassLabel label = ClassLabel::NF;
    NoiseConfig noise;
    std::uint64_t seed = 0;
    double sample_rate = 0.0;
    double duration = 0.0;

    /// Onsets whose following cycle is complete within the recording.
    std::size_t complete_cycles() const { return onset_times.empty() ? 0 : onset_times.size() - 1; }
};

namespace detail {

inline double raised_cosine(double v) { return 0.5 - 0.5 * std::cos(std::numbers::pi * v); }

/// Slow supply/demand trend over one cycle, u in [0, 1).
inline double trend(double u, double drop, const CycleShape& s) {
    const double top = s.nominal_level + s.buildup_rise;
    const double accel_end_level = top - drop;
    if (u < s.rise_end) return s.low_level + (s.nominal_level - s.low_level) * raised_cosine(u / s.rise_end);
    if (u < s.accel_start) return s.nominal_level + s.buildup_rise * (u - s.rise_end) / (s.accel_start - s.rise_end);
    if (u < s.impact_start) return top - drop * (u - s.accel_start) / (s.impact_start - s.accel_start);
    return accel_end_level + (s.low_level - accel_end_level) * raised_cosine((u - s.impact_start) / (1.0 - s.impact_start));
}

inline void add_damped_sine(std::vector<double>& out, double sample_rate, double t0, double amplitude, double period,
                            double decay) {
    const double horizon = t0 + 8.0 * decay;
    auto k0 = static_cast<long long>(std::ceil(t0 * sample_rate));
    auto k1 = static_cast<long long>(std::floor(horizon * sample_rate));
    k0 = std::max(k0, 0LL);
    k1 = std::min(k1, static_cast<long long>(out.size()) - 1);
    const double w = 2.0 * std::numbers::pi / period;
    for (long long k = k0; k <= k1; ++k) {
        const double dt = static_cast<double>(k) / sample_rate - t0;
        out[static_cast<std::size_t>(k)] += amplitude * std::exp(-dt / decay) * std::sin(w * dt);
    }
}

inline void validate(const IndividualParams& ind, const FaultRow& row, const CycleShape& shape, double duration,
                     double sample_rate) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
    if (!(ind.fundamental_freq > 0) || !(ind.oscillation_period_scale > 0) || !(ind.reflection_delay > 0) ||
        !(ind.amplitude_gain > 0) || !std::isfinite(ind.pressure_bias) || !(ind.supply_drop > 0)) {
        fail("individual parameters must be positive (bias finite)");
    }
    if (!(row.damping_scale > 0) || !(row.trend_drop_scale > 0) || !(row.frequency_scale > 0)) {
        fail("fault scales must be positive");
    }
    if (!(sample_rate > 0)) fail("sample_rate must be positive");
    const double f = ind.fundamental_freq * row.frequency_scale;
    if (!(duration * f >= 3.0)) fail("duration must span at least three cycles");
    for (std::size_t e = 0; e < kNumEvents; ++e) {
        if (!(row.event_period_scales[e] > 0)) fail("event period scales must be positive");
        const double period = shape.event_period[e] * ind.oscillation_period_scale * row.event_period_scales[e];
        if (sample_rate < 10.0 / period) {
            std::ostringstream os;
            os << "sample_rate " << sample_rate << " below 10x the " << kEventNames[e] << " oscillation frequency "
               << 1.0 / period;
            fail(os.str());
        }
    }
}

} // namespace detail

/// One recording of `label` on individual `ind`: per-cycle trend plus four
/// event-triggered damped sinusoids, each followed by one reflected echo.
inline std::pair<Recording, GeneratorLog> generate_recording(const IndividualParams& ind, ClassLabel label,
                                                             const FaultParams& fp, double duration, double sample_rate,
                                                             const NoiseConfig& noise, std::uint64_t seed,
                                                             const CycleShape& shape = {}) {
    const FaultRow& row = fp[label];
    detail::validate(ind, row, shape, duration, sample_rate);

    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    const double end = static_cast<double>(n) / sample_rate;
    std::vector<double> clean(n, 0.0);
    Rng rng(seed);

    GeneratorLog log;
    log.individual = ind;
    log.fault = row;
    log.label = label;
    log.noise = noise;
    log.seed = seed;
    log.sample_rate = sample_rate;
    log.duration = duration;

    const double nominal = 1.0 / (ind.fundamental_freq * row.frequency_scale);
    const double drop = shape.base_drop * ind.supply_drop * row.trend_drop_scale;

    // Draw every period first, then place the first onset 0.1 to 0.5 of a
    // cycle after the start so that the recording ends 0.25 to 0.92 of a cycle
    // after the last onset. No further onset falls inside the recording, and
    // the early events of the preceding partial cycle fire before sample 0
    // (their upswing would otherwise pass for an onset).
    const auto max_cycles = static_cast<std::size_t>(std::ceil(duration / nominal)) + 3;
    std::vector<double> periods(max_cycles);
    for (auto& p : periods) p = nominal * (1.0 + noise.period_jitter * standard_normal(rng));
    std::vector<double> offsets(max_cycles + 1, 0.0);
    for (std::size_t j = 0; j < max_cycles; ++j) offsets[j + 1] = offsets[j] + periods[j];
    std::size_t last = max_cycles;
    double first_onset = -1.0;
    bool placed = false;
    while (last > 0 && !placed) {
        --last;
        const double total = end - offsets[last];
        if (total < 0.35 * nominal) continue;
        first_onset = std::clamp(total - 0.6 * nominal, 0.1 * nominal, 0.5 * nominal);
        const double margin = total - first_onset;
        placed = margin >= 0.25 * nominal && margin <= 0.92 * nominal && margin < periods[last];
    }
    if (!placed) throw Error(ErrorKind::InvalidConfig, "duration too short for one cycle");

    // (onset, period) of every cycle touching the recording, including the
    // partial ones at both edges.
    std::vector<std::pair<double, double>> cycles;
    cycles.emplace_back(first_onset - nominal, nominal);
    for (std::size_t j = 0; j <= last; ++j) {
        cycles.emplace_back(first_onset + offsets[j], periods[j]);
        log.onset_times.push_back(first_onset + offsets[j]);
    }

    for (std::size_t ci = 0; ci < cycles.size(); ++ci) {
        const auto [t0, period] = cycles[ci];
        const auto k0 = std::max(0LL, static_cast<long long>(std::ceil(t0 * sample_rate)));
        const auto k1 = std::min(static_cast<long long>(n), static_cast<long long>(std::ceil((t0 + period) * sample_rate)));
        for (long long k = k0; k < k1; ++k) {
            const double u = (static_cast<double>(k) / sample_rate - t0) / period;
            clean[static_cast<std::size_t>(k)] += detail::trend(u, drop, shape);
        }
        EventArray times{};
        for (std::size_t e = 0; e < kNumEvents; ++e) {
            const double jitter = noise.event_time_jitter * standard_normal(rng);
            const double amp_jitter = 1.0 + noise.amplitude_jitter * standard_normal(rng);
            times[e] = t0 + shape.event_phase[e] * period + row.event_time_shifts[e] + jitter;
            const double amplitude = shape.event_amplitude[e] * row.event_amplitude_scales[e] * amp_jitter;
            const double wave_period = shape.event_period[e] * ind.oscillation_period_scale * row.event_period_scales[e];
            const double decay = shape.event_decay[e] / row.damping_scale;
            detail::add_damped_sine(clean, sample_rate, times[e], amplitude, wave_period, decay);
            detail::add_damped_sine(clean, sample_rate, times[e] + ind.reflection_delay,
                                    amplitude * shape.reflection_coefficient, wave_period, decay);
        }
        // complete cycles only: skip the leading partial one and the last onset's
        if (ci >= 1 && ci < cycles.size() - 1) log.event_times.push_back(times);
    }

    Recording rec;
    rec.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = noise.white > 0 ? noise.white * standard_normal(rng) : 0.0;
        rec.samples[k] = ind.amplitude_gain * clean[k] + ind.pressure_bias + w;
    }
    rec.sample_rate = sample_rate;
    rec.label = label;
    rec.individual = ind.id;
    rec.duration = duration;
    return {std::move(rec), std::move(log)};
}

} // namespace wavefault::synth

#endif // WAVEFAULT_SYNTHGEN_HPP
