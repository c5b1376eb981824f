#ifndef WAVEFAULT_DATASET_HPP
#define WAVEFAULT_DATASET_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavefault/error.hpp"
#include "wavefault/generator_config.hpp"
#include "wavefault/parallel.hpp"
#include "wavefault/random.hpp"
#include "wavefault/signal_model.hpp"
#include "wavefault/synthgen.hpp"

namespace wavefault {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr int kManifestVersion = 1;

// ---------------------------------------------------------------------------
// Flat little-endian float32 sample files with a JSON sidecar
// ---------------------------------------------------------------------------

inline void write_f32le(const fs::path& path, std::span<const double> samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    std::vector<unsigned char> bytes(samples.size() * 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(samples[i]));
        for (int b = 0; b < 4; ++b) bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

inline std::vector<double> read_f32le(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0) throw Error(ErrorKind::FormatError, path.string() + ": size is not a multiple of 4");
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
        out[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return out;
}

inline Json sidecar_json(const Recording& rec) {
    return Json{{"format", "f32le"},
                {"class", std::string(class_code(rec.label))},
                {"individual", rec.individual},
                {"sample_rate", rec.sample_rate},
                {"duration", rec.duration},
                {"samples", rec.samples.size()}};
}

inline Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatError, path.string() + ": " + e.what());
    }
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

/// Writes `<stem>.f32` and `<stem>.json`.
inline void save_recording(const fs::path& stem, const Recording& rec) {
    write_f32le(fs::path(stem).concat(".f32"), rec.samples);
    write_text(fs::path(stem).concat(".json"), sidecar_json(rec).dump(2) + "\n");
}

/// Reads a sample file and its sidecar (`x.f32` pairs with `x.json`).
inline Recording load_recording(const fs::path& samples_path, const fs::path& sidecar_path) {
    const auto meta = read_json(sidecar_path);
    Recording rec;
    try {
        if (meta.value("format", "f32le") != "f32le") throw Error(ErrorKind::FormatError, "unsupported sample format");
        rec.label = class_from_code(meta.at("class").get<std::string>());
        rec.individual = meta.at("individual").get<IndividualId>();
        rec.sample_rate = meta.at("sample_rate").get<double>();
        rec.duration = meta.at("duration").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatError, sidecar_path.string() + ": " + e.what());
    }
    rec.samples = read_f32le(samples_path);
    return rec;
}

inline Recording load_recording(const fs::path& samples_path) {
    return load_recording(samples_path, fs::path(samples_path).replace_extension(".json"));
}

// ---------------------------------------------------------------------------
// Generator log
// ---------------------------------------------------------------------------

inline Json to_json(const synth::GeneratorLog& log) {
    Json events = Json::array();
    for (const auto& e : log.event_times) events.push_back(e);
    const auto& ind = log.individual;
    const auto& f = log.fault;
    return Json{{"class", std::string(class_code(log.label))},
                {"individual", ind.id},
                {"seed", log.seed},
                {"sample_rate", log.sample_rate},
                {"duration", log.duration},
                {"event_names", synth::kEventNames},
                {"onset_times", log.onset_times},
                {"event_times", events},
                {"individual_params",
                 {{"fundamental_freq", ind.fundamental_freq},
                  {"oscillation_period_scale", ind.oscillation_period_scale},
                  {"reflection_delay", ind.reflection_delay},
                  {"amplitude_gain", ind.amplitude_gain},
                  {"pressure_bias", ind.pressure_bias},
                  {"supply_drop", ind.supply_drop}}},
                {"fault_params",
                 {{"event_time_shifts", f.event_time_shifts},
                  {"event_amplitude_scales", f.event_amplitude_scales},
                  {"event_period_scales", f.event_period_scales},
                  {"damping_scale", f.damping_scale},
                  {"trend_drop_scale", f.trend_drop_scale},
                  {"frequency_scale", f.frequency_scale}}},
                {"noise",
                 {{"white", log.noise.white},
                  {"period_jitter", log.noise.period_jitter},
                  {"event_time_jitter", log.noise.event_time_jitter},
                  {"amplitude_jitter", log.noise.amplitude_jitter}}}};
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ManifestEntry {
    ClassLabel label = ClassLabel::NF;
    IndividualId individual = 0;
    std::string samples;  ///< relative to the dataset root
    std::string sidecar;
    std::string log;      ///< may be empty
};

struct Manifest {
    int version = kManifestVersion;
    double sample_rate = 0.0;
    std::vector<IndividualId> individuals;
    IndividualId train_individual = 0;
    std::vector<IndividualId> test_individuals;
    std::vector<ManifestEntry> recordings;
    Json generator = Json::object();
};

inline Json to_json(const Manifest& m) {
    Json recs = Json::array();
    for (const auto& e : m.recordings) {
        Json r{{"class", std::string(class_code(e.label))},
               {"individual", e.individual},
               {"samples", e.samples},
               {"sidecar", e.sidecar}};
        if (!e.log.empty()) r["log"] = e.log;
        recs.push_back(std::move(r));
    }
    return Json{{"format", "wavefault-manifest"},
                {"version", m.version},
                {"sample_rate", m.sample_rate},
                {"individuals", m.individuals},
                {"train_individual", m.train_individual},
                {"test_individuals", m.test_individuals},
                {"recordings", recs},
                {"generator", m.generator}};
}

/// Structural checks: one recording per (class, individual), the training
/// individual listed and disjoint from the test individuals.
inline void validate_manifest(const Manifest& m) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::ManifestInvalid, msg); };
    if (m.version != kManifestVersion) fail("unsupported manifest version " + std::to_string(m.version));
    const std::set<IndividualId> inds(m.individuals.begin(), m.individuals.end());
    if (inds.size() != m.individuals.size()) fail("duplicate individual ids");
    if (!inds.contains(m.train_individual)) fail("train individual " + std::to_string(m.train_individual) + " not listed");
    if (m.test_individuals.empty()) fail("no test individuals");
    std::set<IndividualId> tests;
    for (auto t : m.test_individuals) {
        if (!inds.contains(t)) fail("test individual " + std::to_string(t) + " not listed");
        if (t == m.train_individual) fail("individual " + std::to_string(t) + " is both train and test");
        if (!tests.insert(t).second) fail("duplicate test individual " + std::to_string(t));
    }
    std::set<std::pair<IndividualId, int>> seen;
    for (const auto& e : m.recordings) {
        if (!inds.contains(e.individual)) fail("recording for unlisted individual " + std::to_string(e.individual));
        if (!seen.insert({e.individual, static_cast<int>(e.label)}).second) {
            fail("duplicate recording for " + std::string(class_code(e.label)) + "/" + std::to_string(e.individual));
        }
    }
    for (auto i : m.individuals) {
        for (auto c : kAllClasses) {
            if (!seen.contains({i, static_cast<int>(c)})) {
                fail("missing recording for class " + std::string(class_code(c)) + ", individual " + std::to_string(i));
            }
        }
    }
}

inline Manifest manifest_from_json(const Json& j) {
    Manifest m;
    try {
        if (j.value("format", "") != "wavefault-manifest") throw Error(ErrorKind::ManifestInvalid, "not a wavefault manifest");
        m.version = j.at("version").get<int>();
        m.sample_rate = j.value("sample_rate", 0.0);
        m.individuals = j.at("individuals").get<std::vector<IndividualId>>();
        m.train_individual = j.at("train_individual").get<IndividualId>();
        m.test_individuals = j.at("test_individuals").get<std::vector<IndividualId>>();
        for (const auto& r : j.at("recordings")) {
            ManifestEntry e;
            const auto code = r.at("class").get<std::string>();
            const auto label = parse_class(code);
            if (!label) throw Error(ErrorKind::ManifestInvalid, "unknown class code '" + code + "'");
            e.label = *label;
            e.individual = r.at("individual").get<IndividualId>();
            e.samples = r.at("samples").get<std::string>();
            e.sidecar = r.at("sidecar").get<std::string>();
            e.log = r.value("log", "");
            m.recordings.push_back(std::move(e));
        }
        if (j.contains("generator")) m.generator = j.at("generator");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ManifestInvalid, e.what());
    }
    validate_manifest(m);
    return m;
}

/// Manifest plus the recordings it lists, in manifest order. Each recording
/// keeps the identity stored in its own sidecar.
struct Dataset {
    Manifest manifest;
    std::vector<Recording> recordings;
};

inline Dataset load_dataset(const fs::path& root) {
    Dataset ds;
    ds.manifest = manifest_from_json(read_json(root / "manifest.json"));
    for (const auto& e : ds.manifest.recordings) {
        if (!fs::exists(root / e.samples)) throw Error(ErrorKind::ManifestInvalid, "missing file " + e.samples);
        ds.recordings.push_back(load_recording(root / e.samples, root / e.sidecar));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Benchmark generation
// ---------------------------------------------------------------------------

struct Benchmark {
    Dataset dataset;
    std::vector<synth::GeneratorLog> logs;
};

inline std::uint64_t recording_seed(std::uint64_t master, ClassLabel c, const synth::IndividualParams& ind) {
    return derive_seed(master, {class_index(c), ind.id, ind.seed});
}

/// Generates one recording per (class, individual), all of equal duration.
inline Benchmark make_benchmark(const synth::GeneratorConfig& cfg, std::uint64_t seed) {
    Benchmark b;
    auto& m = b.dataset.manifest;
    m.sample_rate = cfg.sample_rate;
    m.train_individual = cfg.train_individual;
    for (const auto& ind : cfg.individuals) {
        m.individuals.push_back(ind.id);
        if (ind.id != cfg.train_individual) m.test_individuals.push_back(ind.id);
    }
    m.generator = Json{{"seed", seed}, {"config_version", cfg.version}, {"config", synth::format_generator_config(cfg)}};
    const double duration = cfg.duration();
    const std::size_t n = cfg.individuals.size() * kNumClasses;
    b.dataset.recordings.resize(n);
    b.logs.resize(n);
    // every recording has its own seed, so slots can be filled in any order
    parallel_for(n, [&](std::size_t i) {
        const auto& ind = cfg.individuals[i / kNumClasses];
        const auto c = kAllClasses[i % kNumClasses];
        auto [rec, log] = synth::generate_recording(ind, c, cfg.faults, duration, cfg.sample_rate, cfg.noise,
                                                    recording_seed(seed, c, ind), cfg.shape);
        for (auto& x : rec.samples) x = static_cast<double>(static_cast<float>(x)); // as stored on disk
        b.dataset.recordings[i] = std::move(rec);
        b.logs[i] = std::move(log);
    });
    for (const auto& ind : cfg.individuals) {
        for (auto c : kAllClasses) {
            const std::string stem = "recordings/" + std::string(class_code(c)) + "_i" + std::to_string(ind.id);
            m.recordings.push_back({c, ind.id, stem + ".f32", stem + ".json", "logs/" + std::string(class_code(c)) +
                                                                               "_i" + std::to_string(ind.id) + ".json"});
        }
    }
    validate_manifest(m);
    return b;
}

inline void write_manifest(const fs::path& root, const Manifest& m) {
    write_text(root / "manifest.json", to_json(m).dump(2) + "\n");
}

inline void write_benchmark(const fs::path& root, const Benchmark& b) {
    fs::create_directories(root / "recordings");
    fs::create_directories(root / "logs");
    const auto& m = b.dataset.manifest;
    for (std::size_t i = 0; i < m.recordings.size(); ++i) {
        const auto& e = m.recordings[i];
        write_f32le(root / e.samples, b.dataset.recordings[i].samples);
        write_text(root / e.sidecar, sidecar_json(b.dataset.recordings[i]).dump(2) + "\n");
        if (i < b.logs.size() && !e.log.empty()) write_text(root / e.log, to_json(b.logs[i]).dump(2) + "\n");
    }
    write_manifest(root, m);
}

} // namespace wavefault

#endif // WAVEFAULT_DATASET_HPP
