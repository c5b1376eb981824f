#ifndef WAVEFAULT_CLASSIFIERS_HPP
#define WAVEFAULT_CLASSIFIERS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavefault/dtw.hpp"
#include "wavefault/error.hpp"
#include "wavefault/random.hpp"
#include "wavefault/signal_model.hpp"

namespace wavefault {

using ClassScores = std::array<double, kNumClasses>;

struct Prediction {
    ClassLabel label = ClassLabel::NF;
    ClassScores scores{};
};

/// Highest score wins; ties go to the earlier class in canonical order.
inline ClassLabel argmax_label(const ClassScores& scores) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return kAllClasses[best];
}

inline Prediction make_prediction(const ClassScores& scores) { return {argmax_label(scores), scores}; }

// ---------------------------------------------------------------------------
// 1NN-DTW
// ---------------------------------------------------------------------------

/// A stored training sequence: a raw cycle or a relative-feature vector.
struct Exemplar {
    std::vector<double> values;
    ClassLabel label = ClassLabel::NF;
    CycleId id;
};

class NearestNeighbor {
public:
    NearestNeighbor() = default;

    /// Stores the exemplars verbatim. Every class must be represented.
    static NearestNeighbor train(std::vector<Exemplar> exemplars, Band band = std::nullopt) {
        std::array<std::size_t, kNumClasses> counts{};
        for (const auto& e : exemplars) {
            if (e.values.empty()) throw Error(ErrorKind::EmptyInput, "empty exemplar " + to_string(e.id));
            ++counts[class_index(e.label)];
        }
        for (auto c : kAllClasses) {
            if (counts[class_index(c)] == 0) {
                throw Error(ErrorKind::MissingClass, "no exemplar of class " + std::string(class_code(c)));
            }
        }
        NearestNeighbor nn;
        nn.exemplars_ = std::move(exemplars);
        nn.band_ = band;
        return nn;
    }

    const std::vector<Exemplar>& exemplars() const { return exemplars_; }
    const Band& band() const { return band_; }

    /// Negative nearest DTW distance per class. Distances are exact; the
    /// search abandons a candidate once it cannot beat its class's best.
    ClassScores scores(std::span<const double> query) const {
        ClassScores best;
        best.fill(std::numeric_limits<double>::infinity());
        for (const auto& e : exemplars_) {
            auto& b = best[class_index(e.label)];
            const double d = dtw_distance_bounded(e.values, query, effective_band(band_, e.values.size(), query.size()), b);
            b = std::min(b, d);
        }
        ClassScores out;
        for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = -best[c];
        return out;
    }

    Prediction predict(std::span<const double> query) const { return make_prediction(scores(query)); }

private:
    std::vector<Exemplar> exemplars_;
    Band band_;
};

// ---------------------------------------------------------------------------
// Linear one-vs-rest max-margin classifier
// ---------------------------------------------------------------------------

struct SvmHyper {
    double lambda = 1.0e-3; ///< L2 regularization
    int epochs = 80;
    double learning_rate = 0.1;
    std::uint64_t seed = 1;
};

class LinearSvm {
public:
    LinearSvm() = default;

    /// Hinge-loss subgradient descent per class on standardized features.
    /// Zero-variance columns are excluded (see excluded_columns()). Positive
    /// and negative samples are weighted to equal total mass. The returned
    /// weights are the average over the second half of the iterations.
    static LinearSvm train(const std::vector<std::vector<double>>& vectors, std::span<const ClassLabel> labels,
                           std::vector<std::string> layout, const SvmHyper& hyper) {
        if (vectors.empty() || vectors.size() != labels.size()) {
            throw Error(ErrorKind::InvalidConfig, "need one label per training vector");
        }
        const std::size_t dim = vectors.front().size();
        if (layout.empty()) {
            for (std::size_t d = 0; d < dim; ++d) layout.push_back("x" + std::to_string(d));
        }
        for (const auto& v : vectors) {
            if (v.size() != dim || layout.size() != dim) {
                throw Error(ErrorKind::LayoutMismatch, "training vectors of length " + std::to_string(v.size()) +
                                                           ", expected " + std::to_string(dim));
            }
        }
        std::array<std::size_t, kNumClasses> counts{};
        for (auto l : labels) ++counts[class_index(l)];
        const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
        if (present < 2) throw Error(ErrorKind::MissingClass, "need at least two classes");

        LinearSvm m;
        m.layout_ = std::move(layout);
        m.hyper_ = hyper;
        m.mean_.assign(dim, 0.0);
        m.scale_.assign(dim, 1.0);
        m.active_.assign(dim, true);
        const double nvec = static_cast<double>(vectors.size());
        for (const auto& v : vectors) {
            for (std::size_t d = 0; d < dim; ++d) m.mean_[d] += v[d];
        }
        for (auto& x : m.mean_) x /= nvec;
        std::vector<double> var(dim, 0.0);
        for (const auto& v : vectors) {
            for (std::size_t d = 0; d < dim; ++d) var[d] += (v[d] - m.mean_[d]) * (v[d] - m.mean_[d]);
        }
        for (std::size_t d = 0; d < dim; ++d) {
            const double sd = std::sqrt(var[d] / nvec);
            if (!(sd > 1e-12) || !std::isfinite(sd)) {
                m.active_[d] = false;
                m.scale_[d] = 1.0;
            } else {
                m.scale_[d] = sd;
            }
        }

        std::vector<std::vector<double>> z;
        z.reserve(vectors.size());
        for (const auto& v : vectors) z.push_back(m.standardize(v));

        for (std::size_t c = 0; c < kNumClasses; ++c) {
            m.weights_[c].assign(dim, 0.0);
            m.bias_[c] = 0.0;
            m.trained_[c] = counts[c] > 0;
        }

        std::vector<std::size_t> order(vectors.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(hyper.seed, {0x5F3}));
        const long total = static_cast<long>(hyper.epochs) * static_cast<long>(vectors.size());
        const long average_from = total / 2;
        std::array<std::vector<double>, kNumClasses> w;
        std::array<double, kNumClasses> b{};
        for (auto& wc : w) wc.assign(dim, 0.0);
        long t = 0;
        long averaged = 0;
        for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
            shuffle(std::span<std::size_t>(order), rng);
            for (auto i : order) {
                const double eta = hyper.learning_rate / (1.0 + hyper.lambda * hyper.learning_rate * static_cast<double>(t));
                for (std::size_t c = 0; c < kNumClasses; ++c) {
                    if (!m.trained_[c]) continue;
                    const bool positive = class_index(labels[i]) == c;
                    const double y = positive ? 1.0 : -1.0;
                    const double weight = positive ? nvec / (2.0 * static_cast<double>(counts[c]))
                                                   : nvec / (2.0 * (nvec - static_cast<double>(counts[c])));
                    double margin = b[c];
                    for (std::size_t d = 0; d < dim; ++d) margin += w[c][d] * z[i][d];
                    margin *= y;
                    const double shrink = 1.0 - eta * hyper.lambda;
                    for (auto& wd : w[c]) wd *= shrink;
                    if (margin < 1.0) {
                        for (std::size_t d = 0; d < dim; ++d) w[c][d] += eta * weight * y * z[i][d];
                        b[c] += eta * weight * y;
                    }
                }
                ++t;
                if (t > average_from) {
                    ++averaged;
                    const double a = 1.0 / static_cast<double>(averaged);
                    for (std::size_t c = 0; c < kNumClasses; ++c) {
                        if (!m.trained_[c]) continue;
                        for (std::size_t d = 0; d < dim; ++d) m.weights_[c][d] += a * (w[c][d] - m.weights_[c][d]);
                        m.bias_[c] += a * (b[c] - m.bias_[c]);
                    }
                }
            }
        }
        return m;
    }

    std::size_t dim() const { return layout_.size(); }
    const std::vector<std::string>& layout() const { return layout_; }
    const SvmHyper& hyper() const { return hyper_; }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& scale() const { return scale_; }
    const std::vector<bool>& active() const { return active_; }
    const std::array<std::vector<double>, kNumClasses>& weights() const { return weights_; }
    const std::array<double, kNumClasses>& bias() const { return bias_; }
    const std::array<bool, kNumClasses>& trained() const { return trained_; }

    std::vector<std::string> excluded_columns() const {
        std::vector<std::string> out;
        for (std::size_t d = 0; d < active_.size(); ++d) {
            if (!active_[d]) out.push_back(layout_[d]);
        }
        return out;
    }

    std::vector<double> standardize(std::span<const double> x) const {
        check_dim(x.size());
        std::vector<double> z(x.size());
        for (std::size_t d = 0; d < x.size(); ++d) z[d] = active_[d] ? (x[d] - mean_[d]) / scale_[d] : 0.0;
        return z;
    }

    /// Decision values for an already standardized vector.
    ClassScores decision_standardized(std::span<const double> z) const {
        check_dim(z.size());
        ClassScores s;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            if (!trained_[c]) {
                s[c] = -std::numeric_limits<double>::infinity();
                continue;
            }
            double v = bias_[c];
            for (std::size_t d = 0; d < z.size(); ++d) {
                if (active_[d]) v += weights_[c][d] * z[d];
            }
            s[c] = v;
        }
        return s;
    }

    ClassScores decision(std::span<const double> x) const { return decision_standardized(standardize(x)); }
    Prediction predict(std::span<const double> x) const { return make_prediction(decision(x)); }

    /// Reassembles a model from stored parameters.
    static LinearSvm from_parts(std::vector<std::string> layout, SvmHyper hyper, std::vector<double> mean,
                                std::vector<double> scale, std::vector<bool> active,
                                std::array<std::vector<double>, kNumClasses> weights,
                                std::array<double, kNumClasses> bias, std::array<bool, kNumClasses> trained) {
        LinearSvm m;
        m.layout_ = std::move(layout);
        m.hyper_ = hyper;
        m.mean_ = std::move(mean);
        m.scale_ = std::move(scale);
        m.active_ = std::move(active);
        m.weights_ = std::move(weights);
        m.bias_ = bias;
        m.trained_ = trained;
        const auto dim = m.layout_.size();
        if (m.mean_.size() != dim || m.scale_.size() != dim || m.active_.size() != dim) {
            throw Error(ErrorKind::LayoutMismatch, "inconsistent model parameter sizes");
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            if (m.trained_[c] && m.weights_[c].size() != dim) {
                throw Error(ErrorKind::LayoutMismatch, "inconsistent weight vector size");
            }
            if (!m.trained_[c]) m.weights_[c].assign(dim, 0.0);
        }
        return m;
    }

private:
    void check_dim(std::size_t n) const {
        if (n != layout_.size()) {
            throw Error(ErrorKind::LayoutMismatch,
                        "vector of length " + std::to_string(n) + ", model expects " + std::to_string(layout_.size()));
        }
    }

    std::vector<std::string> layout_;
    SvmHyper hyper_;
    std::vector<double> mean_;
    std::vector<double> scale_;
    std::vector<bool> active_;
    std::array<std::vector<double>, kNumClasses> weights_;
    std::array<double, kNumClasses> bias_{};
    std::array<bool, kNumClasses> trained_{};
};

// ---------------------------------------------------------------------------
// Consecutive-cycle aggregation
// ---------------------------------------------------------------------------

enum class BatchRule : std::uint8_t { MeanScore, MajorityVote };

/// Combines per-cycle predictions of consecutive cycles into one decision.
inline Prediction predict_batch(std::span<const ClassScores> per_cycle, BatchRule rule = BatchRule::MeanScore) {
    if (per_cycle.empty()) throw Error(ErrorKind::EmptyBatch, "batch has no cycles");
    ClassScores agg{};
    if (rule == BatchRule::MeanScore) {
        for (const auto& s : per_cycle) {
            for (std::size_t c = 0; c < kNumClasses; ++c) agg[c] += s[c];
        }
        for (auto& v : agg) v /= static_cast<double>(per_cycle.size());
    } else {
        for (const auto& s : per_cycle) agg[class_index(argmax_label(s))] += 1.0;
    }
    return make_prediction(agg);
}

} // namespace wavefault

#endif // WAVEFAULT_CLASSIFIERS_HPP
