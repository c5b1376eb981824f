#ifndef WAVEFAULT_GENERATOR_CONFIG_HPP
#define WAVEFAULT_GENERATOR_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "wavefault/keyvalue.hpp"
#include "wavefault/synthgen.hpp"

namespace wavefault::synth {

inline constexpr int kGeneratorConfigVersion = 1;

/// Everything needed to regenerate the benchmark except the master seed.
struct GeneratorConfig {
    int version = kGeneratorConfigVersion;
    double sample_rate = 10000.0;
    /// Minimum complete cycles per recording; all recordings share one duration.
    std::size_t cycles_per_case = 60;
    IndividualId train_individual = 0;
    NoiseConfig noise;
    CycleShape shape;
    std::vector<IndividualParams> individuals;
    FaultParams faults;

    /// Common recording duration: enough cycles for the slowest case.
    double duration() const {
        double slowest = INFINITY;
        for (const auto& ind : individuals) {
            for (const auto& row : faults.rows) slowest = std::min(slowest, ind.fundamental_freq * row.frequency_scale);
        }
        return (static_cast<double>(cycles_per_case) + 2.0) / slowest;
    }
};

inline std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

/// The frozen stock configuration. config/stock_generator.toml carries the
/// same values.
inline GeneratorConfig stock_config() {
    GeneratorConfig cfg;
    cfg.noise = {.white = 0.02, .period_jitter = 0.003, .event_time_jitter = 2.0e-5, .amplitude_jitter = 0.03};

    // Three supply pressures x two feed forces.
    cfg.individuals = {
        {.fundamental_freq = 62.0, .oscillation_period_scale = 1.00, .reflection_delay = 0.50e-3, .amplitude_gain = 1.00, .pressure_bias = 0.0, .supply_drop = 1.00},
        {.fundamental_freq = 58.0, .oscillation_period_scale = 1.12, .reflection_delay = 0.65e-3, .amplitude_gain = 0.90, .pressure_bias = 0.4, .supply_drop = 1.45},
        {.fundamental_freq = 66.0, .oscillation_period_scale = 0.91, .reflection_delay = 0.40e-3, .amplitude_gain = 1.10, .pressure_bias = -0.3, .supply_drop = 0.90},
        {.fundamental_freq = 60.0, .oscillation_period_scale = 1.18, .reflection_delay = 0.80e-3, .amplitude_gain = 1.05, .pressure_bias = 0.2, .supply_drop = 1.25},
        {.fundamental_freq = 64.0, .oscillation_period_scale = 0.88, .reflection_delay = 0.55e-3, .amplitude_gain = 0.95, .pressure_bias = -0.5, .supply_drop = 0.95},
        {.fundamental_freq = 56.0, .oscillation_period_scale = 1.06, .reflection_delay = 0.70e-3, .amplitude_gain = 1.15, .pressure_bias = 0.6, .supply_drop = 1.40},
    };
    for (std::size_t i = 0; i < cfg.individuals.size(); ++i) {
        cfg.individuals[i].id = static_cast<IndividualId>(i);
        cfg.individuals[i].seed = i;
    }

    auto& f = cfg.faults;
    // S: extra long steel, slower impact wave
    f[ClassLabel::S].event_period_scales = {1, 1, 1.25, 1};
    f[ClassLabel::S].event_amplitude_scales = {1, 1, 1.15, 1};
    f[ClassLabel::S].frequency_scale = 0.98;
    // D: larger damper orifice, faster decay
    f[ClassLabel::D].damping_scale = 1.5;
    f[ClassLabel::D].event_amplitude_scales = {1, 1, 0.85, 1};
    // R: damaged return accumulator, barely visible
    f[ClassLabel::R].event_amplitude_scales = {1, 1.2, 1, 1};
    // V: wear-flat on a valve land, earlier valve opening
    f[ClassLabel::V].event_time_shifts = {0, -0.3e-3, 0, 0};
    // Q: low damper flow, slower decay
    f[ClassLabel::Q].damping_scale = 0.7;
    f[ClassLabel::Q].frequency_scale = 0.97;
    // C: low accumulator charge, deeper forward-acceleration drop
    f[ClassLabel::C].trend_drop_scale = 1.5;
    // A: leakage into the control channel, late valve closing
    f[ClassLabel::A].event_time_shifts = {0.4e-3, 0, 0, 0};
    // B: leakage into the return channel, late and stronger control-line event
    f[ClassLabel::B].event_time_shifts = {0, 0, 0, 0.5e-3};
    f[ClassLabel::B].event_amplitude_scales = {1, 1, 1, 1.6};
    // T: thicker steel, faster impact wave
    f[ClassLabel::T].event_period_scales = {1, 1, 0.82, 1};
    f[ClassLabel::T].event_amplitude_scales = {1, 1, 1.3, 1};
    // O: larger control outlet orifice
    f[ClassLabel::O].event_amplitude_scales = {1, 1, 1, 0.4};
    f[ClassLabel::O].event_time_shifts = {0, 0.2e-3, 0, 0};
    return cfg;
}

namespace detail {

inline std::string format_array(const EventArray& a) {
    std::string s = "[";
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) s += ", ";
        s += format_number(a[i]);
    }
    return s + "]";
}

inline EventArray read_array(const KeyValueDoc& doc, const std::string& key, const EventArray& fallback) {
    if (!doc.has(key)) return fallback;
    const auto v = doc.array(key);
    if (v.size() != kNumEvents) {
        throw Error(ErrorKind::InvalidConfig, "key '" + key + "' needs " + std::to_string(kNumEvents) + " entries");
    }
    EventArray out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

} // namespace detail

inline std::string format_generator_config(const GeneratorConfig& cfg) {
    std::ostringstream os;
    using detail::format_array;
    os << "# wavefault synthetic benchmark generator configuration\n";
    os << "version = " << cfg.version << "\n";
    os << "sample_rate = " << format_number(cfg.sample_rate) << "\n";
    os << "cycles_per_case = " << cfg.cycles_per_case << "\n";
    os << "train_individual = " << cfg.train_individual << "\n\n";
    os << "[noise]\n";
    os << "white = " << format_number(cfg.noise.white) << "\n";
    os << "period_jitter = " << format_number(cfg.noise.period_jitter) << "\n";
    os << "event_time_jitter = " << format_number(cfg.noise.event_time_jitter) << "\n";
    os << "amplitude_jitter = " << format_number(cfg.noise.amplitude_jitter) << "\n\n";
    const auto& s = cfg.shape;
    os << "[shape]\n";
    os << "low_level = " << format_number(s.low_level) << "\n";
    os << "nominal_level = " << format_number(s.nominal_level) << "\n";
    os << "buildup_rise = " << format_number(s.buildup_rise) << "\n";
    os << "base_drop = " << format_number(s.base_drop) << "\n";
    os << "rise_end = " << format_number(s.rise_end) << "\n";
    os << "accel_start = " << format_number(s.accel_start) << "\n";
    os << "impact_start = " << format_number(s.impact_start) << "\n";
    os << "event_phase = " << format_array(s.event_phase) << "\n";
    os << "event_amplitude = " << format_array(s.event_amplitude) << "\n";
    os << "event_period = " << format_array(s.event_period) << "\n";
    os << "event_decay = " << format_array(s.event_decay) << "\n";
    os << "reflection_coefficient = " << format_number(s.reflection_coefficient) << "\n";
    for (const auto& ind : cfg.individuals) {
        os << "\n[individual." << ind.id << "]\n";
        os << "fundamental_freq = " << format_number(ind.fundamental_freq) << "\n";
        os << "oscillation_period_scale = " << format_number(ind.oscillation_period_scale) << "\n";
        os << "reflection_delay = " << format_number(ind.reflection_delay) << "\n";
        os << "amplitude_gain = " << format_number(ind.amplitude_gain) << "\n";
        os << "pressure_bias = " << format_number(ind.pressure_bias) << "\n";
        os << "supply_drop = " << format_number(ind.supply_drop) << "\n";
        os << "seed = " << ind.seed << "\n";
    }
    for (auto c : kAllClasses) {
        const auto& r = cfg.faults[c];
        os << "\n[fault." << class_code(c) << "]\n";
        os << "event_time_shifts = " << format_array(r.event_time_shifts) << "\n";
        os << "event_amplitude_scales = " << format_array(r.event_amplitude_scales) << "\n";
        os << "event_period_scales = " << format_array(r.event_period_scales) << "\n";
        os << "damping_scale = " << format_number(r.damping_scale) << "\n";
        os << "trend_drop_scale = " << format_number(r.trend_drop_scale) << "\n";
        os << "frequency_scale = " << format_number(r.frequency_scale) << "\n";
    }
    return os.str();
}

/// Parses a generator configuration. Missing keys keep the stock defaults;
/// individuals are read as [individual.0], [individual.1], ... until a gap.
inline GeneratorConfig parse_generator_config(std::string_view text) {
    const auto doc = KeyValueDoc::parse(text);
    const GeneratorConfig stock = stock_config();
    GeneratorConfig cfg = stock;
    cfg.version = static_cast<int>(doc.number_or("version", kGeneratorConfigVersion));
    if (cfg.version != kGeneratorConfigVersion) {
        throw Error(ErrorKind::InvalidConfig, "unsupported generator config version " + std::to_string(cfg.version));
    }
    cfg.sample_rate = doc.number_or("sample_rate", stock.sample_rate);
    cfg.cycles_per_case = static_cast<std::size_t>(doc.number_or("cycles_per_case", static_cast<double>(stock.cycles_per_case)));
    cfg.train_individual = static_cast<IndividualId>(doc.number_or("train_individual", stock.train_individual));
    cfg.noise.white = doc.number_or("noise.white", stock.noise.white);
    cfg.noise.period_jitter = doc.number_or("noise.period_jitter", stock.noise.period_jitter);
    cfg.noise.event_time_jitter = doc.number_or("noise.event_time_jitter", stock.noise.event_time_jitter);
    cfg.noise.amplitude_jitter = doc.number_or("noise.amplitude_jitter", stock.noise.amplitude_jitter);

    auto& s = cfg.shape;
    s.low_level = doc.number_or("shape.low_level", s.low_level);
    s.nominal_level = doc.number_or("shape.nominal_level", s.nominal_level);
    s.buildup_rise = doc.number_or("shape.buildup_rise", s.buildup_rise);
    s.base_drop = doc.number_or("shape.base_drop", s.base_drop);
    s.rise_end = doc.number_or("shape.rise_end", s.rise_end);
    s.accel_start = doc.number_or("shape.accel_start", s.accel_start);
    s.impact_start = doc.number_or("shape.impact_start", s.impact_start);
    s.event_phase = detail::read_array(doc, "shape.event_phase", s.event_phase);
    s.event_amplitude = detail::read_array(doc, "shape.event_amplitude", s.event_amplitude);
    s.event_period = detail::read_array(doc, "shape.event_period", s.event_period);
    s.event_decay = detail::read_array(doc, "shape.event_decay", s.event_decay);
    s.reflection_coefficient = doc.number_or("shape.reflection_coefficient", s.reflection_coefficient);

    bool any_individual = false;
    for (const auto& key : doc.keys()) any_individual |= key.rfind("individual.", 0) == 0;
    if (any_individual) {
        cfg.individuals.clear();
        for (IndividualId i = 0;; ++i) {
            const std::string p = "individual." + std::to_string(i) + ".";
            if (!doc.has(p + "fundamental_freq")) break;
            IndividualParams ind;
            ind.id = i;
            ind.fundamental_freq = doc.number(p + "fundamental_freq");
            ind.oscillation_period_scale = doc.number_or(p + "oscillation_period_scale", 1.0);
            ind.reflection_delay = doc.number_or(p + "reflection_delay", ind.reflection_delay);
            ind.amplitude_gain = doc.number_or(p + "amplitude_gain", 1.0);
            ind.pressure_bias = doc.number_or(p + "pressure_bias", 0.0);
            ind.supply_drop = doc.number_or(p + "supply_drop", 1.0);
            ind.seed = static_cast<std::uint64_t>(doc.number_or(p + "seed", i));
            cfg.individuals.push_back(ind);
        }
    }
    for (auto c : kAllClasses) {
        const std::string p = "fault." + std::string(class_code(c)) + ".";
        auto& r = cfg.faults[c];
        r.event_time_shifts = detail::read_array(doc, p + "event_time_shifts", r.event_time_shifts);
        r.event_amplitude_scales = detail::read_array(doc, p + "event_amplitude_scales", r.event_amplitude_scales);
        r.event_period_scales = detail::read_array(doc, p + "event_period_scales", r.event_period_scales);
        r.damping_scale = doc.number_or(p + "damping_scale", r.damping_scale);
        r.trend_drop_scale = doc.number_or(p + "trend_drop_scale", r.trend_drop_scale);
        r.frequency_scale = doc.number_or(p + "frequency_scale", r.frequency_scale);
    }
    if (!cfg.faults[ClassLabel::NF].is_identity()) {
        throw Error(ErrorKind::InvalidConfig, "the NF fault row must be the identity");
    }
    if (cfg.individuals.size() < 2) throw Error(ErrorKind::InvalidConfig, "need at least two individuals");
    bool train_found = false;
    for (const auto& ind : cfg.individuals) train_found |= ind.id == cfg.train_individual;
    if (!train_found) throw Error(ErrorKind::InvalidConfig, "train_individual is not among the individuals");
    return cfg;
}

} // namespace wavefault::synth

#endif // WAVEFAULT_GENERATOR_CONFIG_HPP
