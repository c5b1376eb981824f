// wavefault: benchmark generation, feature extraction, training and evaluation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavefault/wavefault.hpp"

namespace wf = wavefault;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;

// Experiment flags shared by the dataset-consuming subcommands.
struct ExperimentFlags {
    std::string dataset;
    std::vector<std::string> methods;
    std::string band = "24";
    std::size_t n = 5;
    std::string aggregation = "sqrt_sum";
    std::vector<std::size_t> batch_sizes{1, 5, 10, 25, 50};
    std::string batch_rule = "mean_score";
    std::optional<std::uint64_t> seed;
    std::optional<wf::IndividualId> train_individual;
    double holdout = 0.3;
    std::size_t nf_pool = 10;
    std::size_t refs_per_cycle = 1;
    std::size_t cycles_per_class = 40;
    double svm_lambda = 1.0e-3;
    int svm_epochs = 80;

    void attach(CLI::App* app, bool seed_required) {
        app->add_option("--dataset", dataset, "Benchmark directory containing manifest.json")->required();
        app->add_option("--band", band, "Sakoe-Chiba half-width in samples, or 'none'");
        app->add_option("--n", n, "Banked references per class for pairwise features");
        app->add_option("--aggregation", aggregation, "Pairwise aggregation: sqrt_sum or mean");
        app->add_option("--batch-sizes", batch_sizes, "Batch sizes to report (must include 1)")->delimiter(',');
        app->add_option("--batch-rule", batch_rule, "mean_score or majority_vote");
        auto* s = app->add_option("--seed", seed, "Split, reference and SVM seed");
        if (seed_required) s->required();
        app->add_option("--train-individual", train_individual, "Override the manifest's training individual");
        app->add_option("--holdout", holdout, "Held-out fraction of the training individual");
        app->add_option("--nf-pool", nf_pool, "Leading NF cycles per individual reserved as references");
        app->add_option("--refs-per-cycle", refs_per_cycle, "Reference cycles paired with each target");
        app->add_option("--cycles-per-class", cycles_per_class, "Cycles kept per class and individual (0 = all)");
        app->add_option("--svm-lambda", svm_lambda, "SVM L2 regularization");
        app->add_option("--svm-epochs", svm_epochs, "SVM epochs");
    }

    wf::ExperimentConfig build() const {
        wf::ExperimentConfig cfg;
        if (!methods.empty()) {
            cfg.methods.clear();
            for (const auto& m : methods) cfg.methods.push_back(wf::parse_method(m));
        }
        if (band == "none") {
            cfg.band = std::nullopt;
        } else {
            std::size_t b = 0;
            std::istringstream in(band);
            if (!(in >> b) || !in.eof()) throw wf::Error(wf::ErrorKind::InvalidConfig, "bad --band '" + band + "'");
            cfg.band = b;
        }
        cfg.n_refs = n;
        cfg.aggregation = wf::parse_aggregation(aggregation);
        cfg.batch_sizes = batch_sizes;
        if (batch_rule == "mean_score") cfg.batch_rule = wf::BatchRule::MeanScore;
        else if (batch_rule == "majority_vote") cfg.batch_rule = wf::BatchRule::MajorityVote;
        else throw wf::Error(wf::ErrorKind::InvalidConfig, "bad --batch-rule '" + batch_rule + "'");
        if (seed) {
            cfg.seed = *seed;
            cfg.svm.seed = *seed;
        }
        cfg.train_individual = train_individual;
        cfg.holdout_fraction = holdout;
        cfg.nf_pool_size = nf_pool;
        cfg.refs_per_cycle = refs_per_cycle;
        cfg.max_cycles_per_class = cycles_per_class;
        cfg.svm.lambda = svm_lambda;
        cfg.svm.epochs = svm_epochs;
        return cfg;
    }
};

void print_table1(const wf::ResultsReport& r) {
    std::printf("%-14s %8s %10s\n", "method", "same", "different");
    for (const auto& m : r.methods) {
        std::printf("%-14s %8.4f %10.4f\n", std::string(wf::method_name(m.method)).c_str(), m.accuracy_same,
                    m.accuracy_different);
    }
}

void print_table2(const wf::ResultsReport& r) {
    if (r.methods.empty()) return;
    std::printf("%-14s", "different");
    for (const auto& b : r.methods.front().by_batch) std::printf(" %7s", ("b=" + std::to_string(b.batch_size)).c_str());
    std::printf("\n");
    for (const auto& m : r.methods) {
        std::printf("%-14s", std::string(wf::method_name(m.method)).c_str());
        for (const auto& b : m.by_batch) std::printf(" %7.4f", b.different);
        std::printf("\n");
    }
}

wf::ReportFormats parse_formats(const std::vector<std::string>& names) {
    wf::ReportFormats f{false, false};
    for (const auto& n : names) {
        if (n == "json") f.json = true;
        else if (n == "csv") f.csv = true;
        else throw wf::Error(wf::ErrorKind::InvalidConfig, "unknown format '" + n + "'");
    }
    return f;
}

int print_audit(const wf::AuditVerdict& v) {
    if (v.pass) {
        std::cout << "audit: PASS\n";
        return kExitOk;
    }
    std::cout << "audit: FAIL (" << v.violations.size() << " violation(s))\n";
    for (const auto& s : v.violations) std::cout << "  " << s << "\n";
    return kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relative-DTW fault classification benchmark"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write the synthetic benchmark (recordings, logs, manifest)");
    std::string gen_out;
    std::string gen_config;
    std::optional<std::uint64_t> gen_seed;
    std::optional<std::size_t> gen_cycles;
    std::optional<double> gen_rate;
    bool gen_dump_config = false;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--seed", gen_seed, "Generator seed")->required();
    gen->add_option("--config", gen_config, "Generator config file (defaults to the stock config)");
    gen->add_option("--cycles-per-case", gen_cycles, "Override cycles per recording");
    gen->add_option("--sample-rate", gen_rate, "Override the sample rate in Hz");
    gen->add_flag("--write-config", gen_dump_config, "Also write the effective config as generator.toml");

    // segment
    auto* seg = app.add_subcommand("segment", "Cut a recording into cycles and list them");
    std::string seg_input;
    std::string seg_out;
    wf::SegmentationConfig seg_cfg;
    seg->add_option("--input", seg_input, "Sample file (.f32 with a .json sidecar)")->required();
    seg->add_option("--out", seg_out, "CSV output (default stdout)");
    seg->add_option("--k-mad", seg_cfg.k_mad, "Threshold in MADs above the median derivative");
    seg->add_option("--smooth", seg_cfg.smooth_seconds, "Smoothing width in seconds");
    seg->add_option("--refractory", seg_cfg.refractory_seconds, "Minimum onset spacing in seconds");

    // extract
    auto* ext = app.add_subcommand("extract", "Export scalar, pairwise and relative features as CSV");
    ExperimentFlags ext_flags;
    ext_flags.attach(ext, false);
    std::string ext_out;
    bool ext_relative = false;
    ext->add_option("--out", ext_out, "Output directory")->required();
    ext->add_flag("--relative", ext_relative, "Also write every delta_amp / delta_ts element");

    // train
    auto* trn = app.add_subcommand("train", "Train one method and save the model");
    ExperimentFlags trn_flags;
    trn_flags.attach(trn, true);
    std::string trn_method;
    std::string trn_out;
    trn->add_option("--method", trn_method, "Method to train")->required();
    trn->add_option("--out", trn_out, "Model file")->required();

    // evaluate
    auto* evl = app.add_subcommand("evaluate", "Run the same/different evaluation and write the report");
    ExperimentFlags evl_flags;
    evl_flags.attach(evl, false);
    std::string evl_out;
    std::vector<std::string> evl_formats{"json", "csv"};
    evl->add_option("--method", evl_flags.methods, "Methods to evaluate (default all)")->delimiter(',');
    evl->add_option("--out", evl_out, "Report directory")->required();
    evl->add_option("--format", evl_formats, "json and/or csv")->delimiter(',');

    // sweep-batch
    auto* swb = app.add_subcommand("sweep-batch", "Accuracy as a function of consecutive-cycle batch size");
    ExperimentFlags swb_flags;
    swb_flags.attach(swb, false);
    std::string swb_out;
    swb->add_option("--method", swb_flags.methods, "Methods to evaluate (default all)")->delimiter(',');
    swb->add_option("--out", swb_out, "Report directory (optional)");

    // sweep-reference
    auto* swr = app.add_subcommand("sweep-reference", "Repeat the evaluation with every individual as trainer");
    ExperimentFlags swr_flags;
    swr_flags.attach(swr, false);
    std::string swr_out;
    swr->add_option("--method", swr_flags.methods, "Methods to evaluate (default all)")->delimiter(',');
    swr->add_option("--out", swr_out, "Output directory")->required();

    // audit
    auto* aud = app.add_subcommand("audit", "Check a report's provenance for cross-individual leakage");
    std::string aud_report;
    std::string aud_model;
    aud->add_option("--report", aud_report, "report.json written by evaluate");
    aud->add_option("--model", aud_model, "Model file written by train");
    aud->require_option(1);

    // inspect-model
    auto* ins = app.add_subcommand("inspect-model", "Print a model's layout, exemplar counts and hyperparameters");
    std::string ins_model;
    ins->add_option("model", ins_model, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*gen) {
            auto cfg = wf::synth::stock_config();
            if (!gen_config.empty()) {
                std::ifstream in(gen_config);
                if (!in) throw wf::Error(wf::ErrorKind::IoError, "cannot open " + gen_config);
                std::stringstream ss;
                ss << in.rdbuf();
                cfg = wf::synth::parse_generator_config(ss.str());
            }
            if (gen_cycles) cfg.cycles_per_case = *gen_cycles;
            if (gen_rate) cfg.sample_rate = *gen_rate;
            const auto bench = wf::make_benchmark(cfg, *gen_seed);
            wf::write_benchmark(gen_out, bench);
            if (gen_dump_config) wf::write_text(wf::fs::path(gen_out) / "generator.toml", wf::synth::format_generator_config(cfg));
            std::cout << "wrote " << bench.dataset.recordings.size() << " recordings to " << gen_out << "\n";
        } else if (*seg) {
            const auto rec = wf::load_recording(seg_input);
            const auto cycles = wf::segment_recording(rec, seg_cfg);
            std::ostringstream os;
            os << "cycle,start,length,impact_frequency,p_drop\n";
            for (const auto& c : cycles) {
                os << c.cycle_index << ',' << c.start << ',' << c.size() << ','
                   << wf::csv_number(c.sample_rate / static_cast<double>(c.size())) << ','
                   << wf::csv_number(wf::compute_p_drop(c, {})) << '\n';
            }
            if (seg_out.empty()) std::cout << os.str();
            else wf::write_text(seg_out, os.str());
            std::cerr << cycles.size() << " cycles\n";
        } else if (*ext) {
            const auto ds = wf::load_dataset(ext_flags.dataset);
            const auto fx = wf::extract_features(ds, ext_flags.build(), ext_relative);
            wf::fs::create_directories(ext_out);
            wf::write_text(wf::fs::path(ext_out) / "scalars.csv", fx.scalars_csv);
            wf::write_text(wf::fs::path(ext_out) / "pairwise.csv", fx.pairwise_csv);
            if (ext_relative) wf::write_text(wf::fs::path(ext_out) / "relative.csv", fx.relative_csv);
            std::cout << "wrote features to " << ext_out << "\n";
        } else if (*trn) {
            const auto ds = wf::load_dataset(trn_flags.dataset);
            const auto method = wf::parse_method(trn_method);
            const auto model = wf::train_model(ds, trn_flags.build(), method);
            wf::save_model(trn_out, model);
            std::cout << "trained " << trn_method << " on individual " << model.individual << " -> " << trn_out << "\n";
        } else if (*evl) {
            const auto formats = parse_formats(evl_formats);
            const auto ds = wf::load_dataset(evl_flags.dataset);
            const auto report = wf::run_experiment(ds, evl_flags.build());
            wf::emit_report(report, evl_out, formats);
            print_table1(report);
            std::printf("wall clock %.1f s\n", report.wall_clock_seconds);
        } else if (*swb) {
            const auto ds = wf::load_dataset(swb_flags.dataset);
            const auto report = wf::run_experiment(ds, swb_flags.build());
            if (!swb_out.empty()) wf::emit_report(report, swb_out);
            print_table2(report);
        } else if (*swr) {
            const auto ds = wf::load_dataset(swr_flags.dataset);
            const auto sweep = wf::sweep_reference(ds, swr_flags.build());
            for (std::size_t i = 0; i < sweep.trainers.size(); ++i) {
                wf::emit_report(sweep.reports[i], wf::fs::path(swr_out) / ("trainer_" + std::to_string(sweep.trainers[i])));
            }
            const auto summary = wf::sweep_summary(sweep);
            wf::write_text(wf::fs::path(swr_out) / "summary.json", summary.dump(2) + "\n");
            std::printf("%-14s %8s %8s %8s\n", "method", "min", "mean", "max");
            for (const auto& s : summary) {
                std::printf("%-14s %8.4f %8.4f %8.4f\n", s["method"].get<std::string>().c_str(),
                            s["accuracy_different_min"].get<double>(), s["accuracy_different_mean"].get<double>(),
                            s["accuracy_different_max"].get<double>());
            }
        } else if (*aud) {
            if (!aud_report.empty()) return print_audit(wf::audit_no_leakage(wf::report_from_json(wf::read_json(aud_report))));
            const auto model = wf::load_model(aud_model);
            wf::AuditVerdict v;
            for (const auto& id : wf::foreign_content(model)) {
                v.fail("model content " + wf::to_string(id) + " is not from individual " + std::to_string(model.individual));
            }
            return print_audit(v);
        } else if (*ins) {
            const auto model = wf::load_model(ins_model);
            std::cout << wf::model_header(model).dump(2) << "\n";
        }
    } catch (const wf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_validation() ? kExitValidation : kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
