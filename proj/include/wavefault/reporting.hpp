#ifndef WAVEFAULT_REPORTING_HPP
#define WAVEFAULT_REPORTING_HPP

#include <charconv>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wavefault/experiment.hpp"

namespace wavefault {

struct ReportFormats {
    bool json = true;
    bool csv = true;
};

inline std::string csv_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

inline std::string table1_csv(const ResultsReport& r) {
    const auto aggregation = r.config.value("aggregation", std::string("sqrt_sum"));
    std::ostringstream os;
    os << "method,accuracy_same,accuracy_different,aggregation\n";
    for (const auto& m : r.methods) {
        os << method_name(m.method) << ',' << csv_number(m.accuracy_same) << ',' << csv_number(m.accuracy_different)
           << ',' << aggregation << '\n';
    }
    return os.str();
}

/// One row per method, same/different accuracy per batch size.
inline std::string table2_csv(const ResultsReport& r) {
    std::ostringstream os;
    os << "method";
    if (!r.methods.empty()) {
        for (const auto& b : r.methods.front().by_batch) os << ",same_b" << b.batch_size << ",different_b" << b.batch_size;
    }
    os << '\n';
    for (const auto& m : r.methods) {
        os << method_name(m.method);
        for (const auto& b : m.by_batch) os << ',' << csv_number(b.same) << ',' << csv_number(b.different);
        os << '\n';
    }
    return os.str();
}

inline std::string confusion_csv(const MethodResult& m) {
    std::ostringstream os;
    os << "true\\predicted";
    for (auto c : kAllClasses) os << ',' << class_code(c);
    os << '\n';
    for (auto t : kAllClasses) {
        os << class_code(t);
        for (auto v : m.confusion[class_index(t)]) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

inline std::string per_individual_csv(const ResultsReport& r) {
    std::set<IndividualId> inds;
    for (const auto& m : r.methods) {
        for (const auto& [i, a] : m.different_by_individual) inds.insert(i);
    }
    std::ostringstream os;
    os << "method";
    for (auto i : inds) os << ",individual_" << i;
    os << '\n';
    for (const auto& m : r.methods) {
        os << method_name(m.method);
        for (auto i : inds) {
            auto it = m.different_by_individual.find(i);
            os << ',' << (it == m.different_by_individual.end() ? std::string() : csv_number(it->second));
        }
        os << '\n';
    }
    return os.str();
}

/// Writes report.json and/or the CSV tables into `dir`; returns the files written.
inline std::vector<fs::path> emit_report(const ResultsReport& r, const fs::path& dir, ReportFormats formats = {}) {
    std::vector<fs::path> written;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    auto put = [&](const fs::path& name, const std::string& text) {
        write_text(dir / name, text);
        written.push_back(dir / name);
    };
    if (formats.json) put("report.json", to_json(r).dump(2) + "\n");
    if (formats.csv) {
        put("table1.csv", table1_csv(r));
        put("table2.csv", table2_csv(r));
        put("per_individual.csv", per_individual_csv(r));
        for (const auto& m : r.methods) put("confusion_" + std::string(method_name(m.method)) + ".csv", confusion_csv(m));
    }
    return written;
}

// ---------------------------------------------------------------------------
// Feature export
// ---------------------------------------------------------------------------

struct FeatureExport {
    std::string scalars_csv;  ///< one row per cycle: length, frequency, P_drop, delta P_drop
    std::string pairwise_csv; ///< one row per cycle: full pairwise vector
    std::string relative_csv; ///< long format: one row per feature element
};

/// Relative and pairwise features of every balanced cycle. The bank is built
/// from the training split of the training individual, as in run_experiment.
inline FeatureExport extract_features(const Dataset& ds, const ExperimentConfig& cfg, bool with_relative_values) {
    const auto data = prepare_data(ds, cfg, true);
    const auto split = make_split(data, cfg);
    const auto pd = build_pairwise_table(data, split, cfg);

    std::vector<Split::Ref> all;
    for (const auto& [ind, set] : data.individuals) {
        for (auto c : kAllClasses) {
            for (std::size_t k = 0; k < data.cycles_per_class; ++k) all.push_back({ind, c, k});
        }
    }
    std::vector<std::vector<double>> vectors(all.size());
    std::vector<double> pdrop(all.size());
    std::vector<double> delta(all.size());
    parallel_for(all.size(), [&](std::size_t i) {
        const auto& pc = at(data, all[i]);
        const auto& set = data.individuals.at(all[i].ind);
        std::vector<double> acc(pd.layout.size(), 0.0);
        for (std::size_t r = 0; r < pc.amp.size(); ++r) {
            const std::vector<RelativeFeature> feats{pc.amp[r], pc.ts[r]};
            const std::vector<NamedScalar> extras{{"f", pc.relative_frequency}};
            const auto v = build_pd_vector(pd.bank, feats, extras, cfg.aggregation, cfg.band);
            for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += v.values[d];
        }
        for (auto& x : acc) x /= static_cast<double>(pc.amp.size());
        vectors[i] = std::move(acc);
        pdrop[i] = compute_p_drop(pc.cycle, cfg.phase);
        const auto ref_index = pc.amp.front().ref_id.cycle_index;
        delta[i] = delta_pdrop(set.pool.at(ref_index), pc.cycle, cfg.phase, false).values.front();
    });

    FeatureExport out;
    std::ostringstream sc;
    std::ostringstream pw;
    std::ostringstream rel;
    sc << "class,individual,cycle,length,impact_frequency,relative_frequency,p_drop,delta_pdrop\n";
    pw << "class,individual,cycle";
    for (const auto& name : pd.layout) pw << ',' << name;
    pw << '\n';
    if (with_relative_values) rel << "class,individual,cycle,ref_class,ref_individual,ref_cycle,kind,index,value\n";
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& pc = at(data, all[i]);
        const auto id = pc.cycle.id();
        const std::string key = std::string(class_code(id.label)) + ',' + std::to_string(id.individual) + ',' +
                                std::to_string(id.cycle_index);
        sc << key << ',' << pc.cycle.size() << ',' << csv_number(pc.cycle.sample_rate / static_cast<double>(pc.cycle.size()))
           << ',' << csv_number(pc.relative_frequency) << ',' << csv_number(pdrop[i]) << ',' << csv_number(delta[i]) << '\n';
        pw << key;
        for (double v : vectors[i]) pw << ',' << csv_number(v);
        pw << '\n';
        if (!with_relative_values) continue;
        for (const auto* feats : {&pc.amp, &pc.ts}) {
            for (const auto& f : *feats) {
                const std::string prefix = key + ',' + std::string(class_code(f.ref_id.label)) + ',' +
                                           std::to_string(f.ref_id.individual) + ',' + std::to_string(f.ref_id.cycle_index) +
                                           ',' + std::string(kind_name(f.kind)) + ',';
                for (std::size_t j = 0; j < f.values.size(); ++j) rel << prefix << j << ',' << csv_number(f.values[j]) << '\n';
            }
        }
    }
    out.scalars_csv = sc.str();
    out.pairwise_csv = pw.str();
    out.relative_csv = rel.str();
    return out;
}

} // namespace wavefault

#endif // WAVEFAULT_REPORTING_HPP
