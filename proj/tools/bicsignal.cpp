// bicsignal: drug / adverse-event signal detection by BIC model selection.
//
//   bicsignal run --reports data.csv --reference ref.csv --out results/
//   bicsignal generate --spec planted.json --seed 7 --out data.csv
//   bicsignal census --reports data.csv --out census.csv
//   bicsignal baselines --reports data.csv --out baselines.csv
//   bicsignal verify --out results/

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bicsignal/dataset.hpp"
#include "bicsignal/eval.hpp"
#include "bicsignal/pipeline.hpp"
#include "bicsignal/synthetic.hpp"

namespace {

using namespace bicsignal;

std::vector<std::string> split_events(const std::string& list) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : list) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drug / adverse-event signal detection by BIC model selection over logistic regressions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // run
    RunConfig cfg;
    std::string reports, drug_triplets, event_triplets, reference, events;
    bool no_baselines = false;
    auto* run_cmd = app.add_subcommand("run", "Search every selected event and write signals, metrics and a manifest");
    run_cmd->add_option("--reports", reports, "Report file (#drugs/#events header format)");
    run_cmd->add_option("--drug-triplets", drug_triplets, "report_id,drug_id,value triplets (two-file mode)");
    run_cmd->add_option("--event-triplets", event_triplets, "report_id,event_id,value triplets (two-file mode)");
    run_cmd->add_option("--reference", reference, "Reference set CSV: event_id,drug_id,label");
    run_cmd->add_option("--events", events, "Comma-separated event ids (default: all)");
    run_cmd->add_option("--alpha", cfg.chain.alpha, "Proposal Hamming radius")->default_val(5)->check(CLI::PositiveNumber);
    run_cmd->add_option("--iters", cfg.chain.iterations, "Iterations per chain")->default_val(5000)->check(CLI::PositiveNumber);
    run_cmd->add_option("--restarts", cfg.chain.restarts, "Chains per event")->default_val(100)->check(CLI::PositiveNumber);
    run_cmd->add_option("--exhaustive-cutoff", cfg.chain.exhaustive_cutoff,
                        "Enumerate all models when at most this many drugs are eligible")
        ->default_val(12);
    run_cmd->add_option("--seed", cfg.chain.seed, "RNG seed")->required();
    run_cmd->add_option("--out", cfg.out_dir, "Output directory")->default_val("out");
    run_cmd->add_option("--threads", cfg.threads, "Worker threads (0: all cores; BICSIGNAL_THREADS overrides)")
        ->default_val(0);
    run_cmd->add_flag("--trace", cfg.trace, "Write per-iteration chain traces");
    run_cmd->add_flag("--no-baselines", no_baselines, "Skip PRR / ROR / RFET baselines");

    // generate
    std::string spec_path, gen_out;
    std::uint64_t gen_seed = 0;
    SyntheticSpec inline_spec;
    std::size_t gen_p = 10;
    double gen_prevalence = 0.1;
    std::vector<std::uint32_t> support;
    std::vector<double> coefficients;
    auto* gen_cmd = app.add_subcommand("generate", "Sample a planted-truth synthetic report file");
    gen_cmd->add_option("--spec", spec_path, "JSON synthetic specification");
    gen_cmd->add_option("--n", inline_spec.n, "Reports (without --spec)")->default_val(5000);
    gen_cmd->add_option("--p", gen_p, "Drugs (without --spec)")->default_val(10);
    gen_cmd->add_option("--prevalence", gen_prevalence, "Drug prevalence (without --spec)")->default_val(0.1);
    gen_cmd->add_option("--intercept", inline_spec.intercept, "beta_0 (without --spec)")->default_val(-2.0);
    gen_cmd->add_option("--support", support, "Causal drug indices (without --spec)")->delimiter(',');
    gen_cmd->add_option("--coef", coefficients, "Coefficients for --support (one, or one per drug)")->delimiter(',');
    gen_cmd->add_option("--seed", gen_seed, "RNG seed")->required();
    gen_cmd->add_option("--out", gen_out, "Report file to write; truth goes to <stem>.truth.json")->required();

    // census
    std::string census_reports, census_out;
    auto* census_cmd = app.add_subcommand("census", "Per-event headcount and eligible-drug count");
    census_cmd->add_option("--reports", census_reports, "Report file")->required();
    census_cmd->add_option("--out", census_out, "CSV output (default: stdout)");

    // baselines
    std::string base_reports, base_events, base_out;
    auto* base_cmd = app.add_subcommand("baselines", "PRR / ROR / RFET for every drug-event pair");
    base_cmd->add_option("--reports", base_reports, "Report file")->required();
    base_cmd->add_option("--events", base_events, "Comma-separated event ids (default: all)");
    base_cmd->add_option("--out", base_out, "CSV output (default: stdout)");

    // verify
    std::string verify_dir;
    auto* verify_cmd = app.add_subcommand("verify", "Check output files against manifest.json hashes");
    verify_cmd->add_option("--out", verify_dir, "Run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            cfg.reports = reports;
            cfg.drug_triplets = drug_triplets;
            cfg.event_triplets = event_triplets;
            if (!reference.empty()) cfg.reference = reference;
            cfg.events = split_events(events);
            cfg.baselines = !no_baselines;
            const auto summary = run(cfg, &std::cerr);
            std::cerr << "wrote " << summary.files.size() << " files to " << cfg.out_dir.string() << '\n';
        } else if (*gen_cmd) {
            SyntheticSpec spec;
            if (!spec_path.empty()) {
                std::ifstream in(spec_path);
                if (!in) throw std::runtime_error("cannot open spec '" + spec_path + "'");
                std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
                spec = parse_synthetic_spec(text);
            } else {
                spec = inline_spec;
                spec.prevalence.assign(gen_p, gen_prevalence);
                if (!coefficients.empty() && coefficients.size() != 1 && coefficients.size() != support.size())
                    throw std::invalid_argument("--coef needs one value or one per --support entry");
                for (std::size_t k = 0; k < support.size(); ++k)
                    spec.effects.emplace_back(support[k], coefficients.empty()      ? 1.5
                                                          : coefficients.size() == 1 ? coefficients[0]
                                                                                     : coefficients[k]);
            }
            const auto sidecar = write_synthetic(spec, gen_seed, gen_out);
            std::cerr << "wrote " << gen_out << " and " << sidecar.string() << '\n';
        } else if (*census_cmd) {
            auto data = load_reports(census_reports);
            data.reports.validate();
            const auto rows = eligibility_census(data.reports, data.events);
            if (census_out.empty()) {
                write_census_csv(std::cout, rows);
            } else {
                auto out = open_out(census_out);
                write_census_csv(out, rows);
            }
        } else if (*base_cmd) {
            auto data = load_reports(base_reports);
            data.reports.validate();
            auto ids = split_events(base_events);
            if (ids.empty())
                for (const auto& e : data.events) ids.push_back(e.event_id);
            if (base_out.empty()) {
                write_baselines_csv(std::cout, data, ids);
            } else {
                auto out = open_out(base_out);
                write_baselines_csv(out, data, ids);
            }
        } else if (*verify_cmd) {
            const auto bad = verify_manifest(verify_dir);
            for (const auto& name : bad) std::cerr << "mismatch: " << name << '\n';
            if (!bad.empty()) return 1;
            std::cerr << "all files match manifest.json\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
