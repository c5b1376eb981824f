#ifndef WAVEFAULT_MODEL_HPP
#define WAVEFAULT_MODEL_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavefault/classifiers.hpp"
#include "wavefault/dataset.hpp"
#include "wavefault/pairwise_features.hpp"
#include "wavefault/relative_features.hpp"

namespace wavefault {

enum class Method : std::uint8_t { OneNnRaw, SvmRaw, OneNnAmp, OneNnTs, SvmAmp, SvmTs, SvmAmpTs, SvmAmpTsF };

inline constexpr std::array<Method, 8> kAllMethods = {Method::OneNnRaw, Method::SvmRaw,   Method::OneNnAmp,
                                                      Method::OneNnTs,  Method::SvmAmp,   Method::SvmTs,
                                                      Method::SvmAmpTs, Method::SvmAmpTsF};

constexpr std::string_view method_name(Method m) {
    switch (m) {
    case Method::OneNnRaw: return "1nn_raw";
    case Method::SvmRaw: return "svm_raw";
    case Method::OneNnAmp: return "1nn_amp";
    case Method::OneNnTs: return "1nn_ts";
    case Method::SvmAmp: return "svm_amp";
    case Method::SvmTs: return "svm_ts";
    case Method::SvmAmpTs: return "svm_amp_ts";
    case Method::SvmAmpTsF: return "svm_amp_ts_f";
    }
    return "?";
}

inline Method parse_method(std::string_view name) {
    for (auto m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

/// Methods working on reference-relative features rather than raw cycles.
constexpr bool is_relative(Method m) { return m != Method::OneNnRaw && m != Method::SvmRaw; }
constexpr bool uses_pairwise(Method m) {
    return m == Method::SvmAmp || m == Method::SvmTs || m == Method::SvmAmpTs || m == Method::SvmAmpTsF;
}
constexpr bool is_nearest_neighbor(Method m) {
    return m == Method::OneNnRaw || m == Method::OneNnAmp || m == Method::OneNnTs;
}

/// Columns of the full pairwise layout (amp entries, ts entries, f) a method uses.
inline std::vector<std::size_t> pairwise_columns(Method m, const std::vector<std::string>& layout) {
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& name = layout[i];
        const bool amp = name.rfind("p_amp_", 0) == 0;
        const bool ts = name.rfind("p_ts_", 0) == 0;
        const bool f = name == "f";
        const bool keep = (m == Method::SvmAmp && amp) || (m == Method::SvmTs && ts) ||
                          (m == Method::SvmAmpTs && (amp || ts)) || (m == Method::SvmAmpTsF && (amp || ts || f));
        if (keep) cols.push_back(i);
    }
    return cols;
}

namespace detail {

inline std::vector<double> fit_length(std::span<const double> x, std::size_t length) {
    std::vector<double> out(length);
    if (x.size() >= length) {
        const std::size_t start = (x.size() - length) / 2;
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(start), length, out.begin());
    } else {
        const std::size_t left = (length - x.size()) / 2;
        for (std::size_t i = 0; i < length; ++i) {
            if (i < left) out[i] = x.front();
            else if (i - left < x.size()) out[i] = x[i - left];
            else out[i] = x.back();
        }
    }
    return out;
}

inline std::vector<double> select_columns(std::span<const double> v, const std::vector<std::size_t>& cols) {
    std::vector<double> out;
    out.reserve(cols.size());
    for (auto c : cols) out.push_back(v[c]);
    return out;
}

} // namespace detail

/// A classifier trained on one individual, ready to score new inputs.
struct TrainedModel {
    Method method = Method::OneNnRaw;
    IndividualId individual = 0;
    Json config = Json::object();
    NearestNeighbor nn;     ///< 1nn_* methods
    LinearSvm svm;          ///< svm_* methods
    std::size_t fit_length = 0; ///< svm_raw: center-crop / edge-pad length
    ReferenceBank bank;     ///< pairwise methods
    std::vector<std::size_t> pd_columns; ///< pairwise methods: used columns of the full layout
    Aggregation aggregation = Aggregation::SqrtOfSum;
    Band band;

    /// Raw-cycle methods.
    ClassScores scores_raw(std::span<const double> cycle) const {
        if (method == Method::OneNnRaw) return nn.scores(cycle);
        if (method == Method::SvmRaw) return svm.decision(detail::fit_length(cycle, fit_length));
        throw Error(ErrorKind::KindMismatch, std::string(method_name(method)) + " does not take raw cycles");
    }

    /// 1NN over relative features.
    ClassScores scores_relative(const RelativeFeature& f) const {
        const bool ok = (method == Method::OneNnAmp && f.kind == FeatureKind::Amp) ||
                        (method == Method::OneNnTs && f.kind == FeatureKind::Ts);
        if (!ok) {
            throw Error(ErrorKind::KindMismatch, std::string(method_name(method)) + " does not take " +
                                                     std::string(kind_name(f.kind)) + " features");
        }
        return nn.scores(f.values);
    }

    /// Full pairwise vector (all kinds of the bank plus f) for one cycle.
    std::vector<double> pairwise_vector(const RelativeFeature& amp, const RelativeFeature& ts, double f) const {
        const std::vector<RelativeFeature> feats{amp, ts};
        const std::vector<NamedScalar> extras{{"f", f}};
        return build_pd_vector(bank, feats, extras, aggregation, band).values;
    }

    ClassScores scores_pairwise(std::span<const double> full_vector) const {
        if (!uses_pairwise(method)) {
            throw Error(ErrorKind::KindMismatch, std::string(method_name(method)) + " does not take pairwise vectors");
        }
        return svm.decision(detail::select_columns(full_vector, pd_columns));
    }

    std::size_t exemplar_count() const { return nn.exemplars().size(); }
};

/// Ids of the individual-specific data a model stores that do not belong to
/// the model's training individual.
inline std::vector<CycleId> foreign_content(const TrainedModel& m) {
    std::vector<CycleId> bad;
    for (const auto& e : m.nn.exemplars()) {
        if (e.id.individual != m.individual) bad.push_back(e.id);
    }
    for (const auto& id : m.bank.ids()) {
        if (id.individual != m.individual) bad.push_back(id);
    }
    return bad;
}

// ---------------------------------------------------------------------------
// Binary container: magic, u32 version, u64 header length, JSON header,
// little-endian payload.
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 8> kModelMagic = {'W', 'F', 'M', 'O', 'D', 'E', 'L', '\0'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    void doubles(std::span<const double> v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void id(const CycleId& c) {
        u8(static_cast<std::uint8_t>(c.label));
        u32(c.individual);
        u32(c.cycle_index);
    }
    const std::vector<unsigned char>& bytes() const { return bytes_; }

private:
    template <typename T>
    void put(T v) {
        for (std::size_t b = 0; b < sizeof(T); ++b) bytes_.push_back(static_cast<unsigned char>(v >> (8 * b)));
    }
    std::vector<unsigned char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}
    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string raw(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::vector<double> doubles() {
        const auto n = u64();
        need(n * 8);
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    CycleId id() {
        const auto label = u8();
        if (label >= kNumClasses) throw Error(ErrorKind::FormatError, "model: bad class index");
        const auto ind = u32();
        const auto cyc = u32();
        return {kAllClasses[label], ind, cyc};
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (n > bytes_.size() - pos_) throw Error(ErrorKind::FormatError, "model: truncated payload");
    }
    template <typename T>
    T get() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + b]) << (8 * b));
        pos_ += sizeof(T);
        return v;
    }
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Json model_header(const TrainedModel& m) {
    Json h{{"method", std::string(method_name(m.method))},
           {"individual", m.individual},
           {"config", m.config},
           {"band", m.band ? Json(*m.band) : Json(nullptr)},
           {"aggregation", std::string(aggregation_name(m.aggregation))}};
    if (is_nearest_neighbor(m.method)) {
        std::array<std::size_t, kNumClasses> counts{};
        for (const auto& e : m.nn.exemplars()) ++counts[class_index(e.label)];
        Json per = Json::object();
        for (auto c : kAllClasses) per[std::string(class_code(c))] = counts[class_index(c)];
        h["exemplars"] = m.nn.exemplars().size();
        h["exemplars_per_class"] = per;
    } else {
        const auto& hy = m.svm.hyper();
        h["layout"] = m.svm.layout();
        h["excluded_columns"] = m.svm.excluded_columns();
        h["hyper"] = {{"lambda", hy.lambda}, {"epochs", hy.epochs}, {"learning_rate", hy.learning_rate}, {"seed", hy.seed}};
        if (m.method == Method::SvmRaw) h["fit_length"] = m.fit_length;
        if (uses_pairwise(m.method)) {
            Json kinds = Json::array();
            for (auto k : m.bank.kinds()) kinds.push_back(std::string(kind_name(k)));
            h["bank"] = {{"n", m.bank.n()}, {"kinds", kinds}};
            h["pd_columns"] = m.pd_columns;
        }
    }
    return h;
}

inline std::vector<unsigned char> serialize_model(const TrainedModel& m) {
    detail::ByteWriter w;
    w.raw(std::string_view(kModelMagic.data(), kModelMagic.size()));
    w.u32(kModelVersion);
    const std::string header = model_header(m).dump();
    w.u64(header.size());
    w.raw(header);
    if (is_nearest_neighbor(m.method)) {
        w.u64(m.nn.exemplars().size());
        for (const auto& e : m.nn.exemplars()) {
            w.u8(static_cast<std::uint8_t>(e.label));
            w.id(e.id);
            w.doubles(e.values);
        }
    } else {
        const auto dim = m.svm.layout().size();
        w.doubles(m.svm.mean());
        w.doubles(m.svm.scale());
        for (std::size_t d = 0; d < dim; ++d) w.u8(m.svm.active()[d] ? 1 : 0);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            w.u8(m.svm.trained()[c] ? 1 : 0);
            w.f64(m.svm.bias()[c]);
            w.doubles(m.svm.weights()[c]);
        }
        if (uses_pairwise(m.method)) {
            for (auto c : kAllClasses) {
                for (auto k : m.bank.kinds()) {
                    const auto& entries = m.bank.entries(c, k);
                    w.u64(entries.size());
                    for (const auto& f : entries) {
                        w.u8(static_cast<std::uint8_t>(f.kind));
                        w.id(f.ref_id);
                        w.id(f.target_id);
                        w.doubles(f.values);
                    }
                }
            }
        }
    }
    return w.bytes();
}

inline TrainedModel deserialize_model(std::span<const unsigned char> bytes) {
    detail::ByteReader r(bytes);
    if (r.raw(kModelMagic.size()) != std::string(kModelMagic.data(), kModelMagic.size())) {
        throw Error(ErrorKind::FormatError, "not a wavefault model file");
    }
    const auto version = r.u32();
    if (version != kModelVersion) {
        throw Error(ErrorKind::FormatError, "unsupported model version " + std::to_string(version));
    }
    const auto header_len = r.u64();
    Json h;
    try {
        h = Json::parse(r.raw(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatError, std::string("model header: ") + e.what());
    }
    TrainedModel m;
    try {
        m.method = parse_method(h.at("method").get<std::string>());
        m.individual = h.at("individual").get<IndividualId>();
        m.config = h.at("config");
        if (!h.at("band").is_null()) m.band = h.at("band").get<std::size_t>();
        m.aggregation = parse_aggregation(h.at("aggregation").get<std::string>());
        if (is_nearest_neighbor(m.method)) {
            std::vector<Exemplar> ex(r.u64());
            for (auto& e : ex) {
                const auto label = r.u8();
                if (label >= kNumClasses) throw Error(ErrorKind::FormatError, "model: bad class index");
                e.label = kAllClasses[label];
                e.id = r.id();
                e.values = r.doubles();
            }
            m.nn = NearestNeighbor::train(std::move(ex), m.band);
        } else {
            auto layout = h.at("layout").get<std::vector<std::string>>();
            const auto& hj = h.at("hyper");
            SvmHyper hy{hj.at("lambda").get<double>(), hj.at("epochs").get<int>(), hj.at("learning_rate").get<double>(),
                        hj.at("seed").get<std::uint64_t>()};
            auto mean = r.doubles();
            auto scale = r.doubles();
            std::vector<bool> active(layout.size());
            for (std::size_t d = 0; d < layout.size(); ++d) active[d] = r.u8() != 0;
            std::array<std::vector<double>, kNumClasses> weights;
            std::array<double, kNumClasses> bias{};
            std::array<bool, kNumClasses> trained{};
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                trained[c] = r.u8() != 0;
                bias[c] = r.f64();
                weights[c] = r.doubles();
            }
            m.svm = LinearSvm::from_parts(std::move(layout), hy, std::move(mean), std::move(scale), std::move(active),
                                          std::move(weights), bias, trained);
            if (m.method == Method::SvmRaw) m.fit_length = h.at("fit_length").get<std::size_t>();
            if (uses_pairwise(m.method)) {
                std::vector<FeatureKind> kinds;
                for (const auto& k : h.at("bank").at("kinds")) kinds.push_back(parse_kind(k.get<std::string>()));
                m.bank = ReferenceBank(m.individual, h.at("bank").at("n").get<std::size_t>(), kinds);
                m.pd_columns = h.at("pd_columns").get<std::vector<std::size_t>>();
                for (auto c : kAllClasses) {
                    for (auto k : kinds) {
                        const auto count = r.u64();
                        for (std::uint64_t i = 0; i < count; ++i) {
                            RelativeFeature f;
                            const auto kind = r.u8();
                            if (kind > static_cast<std::uint8_t>(FeatureKind::Pdrop)) {
                                throw Error(ErrorKind::FormatError, "model: bad feature kind");
                            }
                            f.kind = static_cast<FeatureKind>(kind);
                            f.ref_id = r.id();
                            f.target_id = r.id();
                            f.values = r.doubles();
                            m.bank.add(c, k, std::move(f));
                        }
                    }
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatError, std::string("model header: ") + e.what());
    }
    if (!r.done()) throw Error(ErrorKind::FormatError, "model: trailing bytes");
    return m;
}

inline void save_model(const fs::path& path, const TrainedModel& m) {
    const auto bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

inline TrainedModel load_model(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

} // namespace wavefault

#endif // WAVEFAULT_MODEL_HPP
