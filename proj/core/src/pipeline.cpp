#include "bicsignal/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bicsignal/baselines.hpp"
#include "bicsignal/eval.hpp"
#include "bicsignal/logistic.hpp"
#include "text.hpp"

namespace bicsignal {

namespace fs = std::filesystem;

void RunConfig::validate() const {
    if (reports.empty() && (drug_triplets.empty() || event_triplets.empty()))
        throw ConfigError("no input: pass a report file or both triplet files");
    for (const auto& p : {reports, drug_triplets, event_triplets})
        if (!p.empty() && !fs::exists(p)) throw ConfigError("input file not found: " + p.string());
    if (baselines && !reference)
        throw ConfigError("baselines are enabled but no reference set was given");
    if (reference && !fs::exists(*reference))
        throw ConfigError("reference set not found: " + reference->string());
    try {
        chain.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

unsigned resolve_threads(unsigned requested) {
    if (const char* env = std::getenv(kThreadsEnv); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<unsigned>(v);
        throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer, got '" + env + "'");
    }
    if (requested > 0) return requested;
    return std::max(1U, std::thread::hardware_concurrency());
}

Dataset load_dataset(const RunConfig& cfg) {
    Dataset data = cfg.reports.empty() ? load_triplets(cfg.drug_triplets, cfg.event_triplets)
                                       : load_reports(cfg.reports);
    data.reports.validate();
    return data;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
    return hex.str();
}

void write_baselines_csv(std::ostream& out, const Dataset& data, const std::vector<std::string>& events) {
    const auto columns = data.reports.columns();
    out << "event,drug,method,statistic,pvalue,signaled\n";
    for (const auto& id : events) {
        const auto& ev = data.event(id);
        for (std::size_t j = 0; j < data.reports.p(); ++j) {
            const auto table = project(columns[j], ev);
            for (const auto& r : evaluate_baselines(table))
                out << id << ',' << data.reports.drug_ids[j] << ',' << to_string(r.method) << ','
                    << detail::format_real(r.statistic) << ',' << detail::format_real(r.pvalue) << ','
                    << (r.signaled ? 1 : 0) << '\n';
        }
    }
}

void write_trace_csv(std::ostream& out, const SearchReport& report) {
    out << "chain,iter,bic_current,bic_best,accepted\n";
    for (std::size_t c = 0; c < report.traces.size(); ++c)
        for (const auto& row : report.traces[c])
            out << c << ',' << row.iter << ',' << detail::format_real(row.bic_current, 12) << ','
                << detail::format_real(row.bic_best, 12) << ',' << (row.accepted ? 1 : 0) << '\n';
}

namespace {

struct SignalRow {
    std::string event;
    std::string drug;
    std::uint64_t headcount;
    double beta;
    ControlLabel label;
};

class OutputTracker {
public:
    explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {}
    ~OutputTracker() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
    }

    std::ofstream open(const std::string& name) {
        auto path = dir_ / name;
        files_.push_back(path);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        return out;
    }
    const std::vector<fs::path>& files() const noexcept { return files_; }
    void commit() { committed_ = true; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
    bool committed_ = false;
};

std::string safe_name(const std::string& id) {
    std::string s = id;
    for (auto& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
    return s;
}

}  // namespace

RunSummary run(const RunConfig& cfg, std::ostream* log) {
    cfg.validate();
    const unsigned threads = resolve_threads(cfg.threads);

    Dataset data = load_dataset(cfg);
    ReferenceSet reference;
    if (cfg.reference) reference = load_reference_set(*cfg.reference);

    std::vector<std::string> events = cfg.events;
    if (events.empty())
        for (const auto& e : data.events) events.push_back(e.event_id);
    for (const auto& id : events) {
        try {
            data.event(id);
        } catch (const SchemaError&) {
            throw ConfigError("requested event '" + id + "' is not declared in the report file");
        }
    }
    if (data.reports.n() == 0) throw std::runtime_error("empty dataset: the report file lists no reports");

    fs::create_directories(cfg.out_dir);
    OutputTracker outputs(cfg.out_dir);
    RunSummary summary;

    std::vector<SignalRow> signal_rows;
    const auto columns = data.reports.columns();

    for (const auto& id : events) {
        const auto& ev = data.event(id);
        const auto start = std::chrono::steady_clock::now();

        const auto mask = eligibility_mask(data.reports, ev);
        EventData working(data.reports, ev, mask);
        auto report = search(working, cfg.chain, threads, cfg.trace);

        EventSummary es;
        es.event_id = id;
        es.headcount = ev.headcount();
        es.p_eligible = mask.p_eligible;
        es.exhaustive = report.exhaustive;
        es.no_eligible_drugs = report.no_eligible_drugs;
        es.converged = report.best_fit.converged;
        es.hit_count = report.hit_count;
        es.models_evaluated = report.models_evaluated;
        es.best_bic = report.best_fit.bic;
        es.model_size = report.best_model.size();
        es.unique_profiles = compress_profiles(working, report.best_model.selected()).m();

        if (report.best_fit.converged) {
            std::vector<std::uint32_t> drugs;
            for (auto k : report.best_model.selected()) drugs.push_back(working.drug_index(k));
            for (const auto& s : signal_coefficients(report.best_fit, drugs)) {
                const auto& drug_id = data.reports.drug_ids[s.drug];
                signal_rows.push_back({id, drug_id, project(columns[s.drug], ev).a, s.coefficient,
                                       reference.label(id, drug_id)});
                ++es.signals;
            }
        }

        if (cfg.trace) {
            auto out = outputs.open("trace_" + safe_name(id) + ".csv");
            write_trace_csv(out, report);
        }

        es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (log)
            *log << id << ": headcount=" << es.headcount << " eligible=" << es.p_eligible
                 << (es.exhaustive ? " exhaustive" : " mh") << " hits=" << es.hit_count << "/"
                 << cfg.chain.restarts << " |gamma*|=" << es.model_size << " signals=" << es.signals
                 << (es.no_eligible_drugs ? " (warning: no eligible drugs)" : "") << '\n';
        summary.events.push_back(std::move(es));
    }

    std::stable_sort(signal_rows.begin(), signal_rows.end(), [](const SignalRow& a, const SignalRow& b) {
        if (a.beta != b.beta) return a.beta > b.beta;
        if (a.event != b.event) return a.event < b.event;
        return a.drug < b.drug;
    });
    {
        auto out = outputs.open("signals.csv");
        out << "event,drug,headcount,beta,label\n";
        for (const auto& s : signal_rows)
            out << s.event << ',' << s.drug << ',' << s.headcount << ',' << detail::format_real(s.beta) << ','
                << to_string(s.label) << '\n';
    }

    std::vector<MetricsRow> metrics;
    {
        std::vector<DetectedSignal> detected;
        for (const auto& s : signal_rows) detected.push_back({s.event, s.drug});
        metrics.push_back(score_signals(detected, reference, "Logistic BIC"));
    }
    if (cfg.baselines) {
        std::array<std::vector<DetectedSignal>, 3> flagged;
        for (const auto& id : events) {
            const auto& ev = data.event(id);
            for (std::size_t j = 0; j < data.reports.p(); ++j) {
                const auto results = evaluate_baselines(project(columns[j], ev));
                for (std::size_t m = 0; m < results.size(); ++m)
                    if (results[m].signaled) flagged[m].push_back({id, data.reports.drug_ids[j]});
            }
        }
        for (auto method : {BaselineMethod::PRR, BaselineMethod::ROR, BaselineMethod::RFET})
            metrics.push_back(score_signals(flagged[static_cast<std::size_t>(method)], reference,
                                            std::string(to_string(method))));
        auto out = outputs.open("baselines.csv");
        write_baselines_csv(out, data, events);
    }
    {
        auto out = outputs.open("metrics.csv");
        write_metrics_csv(out, metrics);
    }
    {
        std::vector<EventVector> selected;
        for (const auto& id : events) selected.push_back(data.event(id));
        auto out = outputs.open("census.csv");
        write_census_csv(out, eligibility_census(data.reports, selected));
    }

    nlohmann::json manifest;
    manifest["tool"] = "bicsignal";
    manifest["version"] = kVersion;
    manifest["config"] = {
        {"reports", cfg.reports.string()},
        {"drug_triplets", cfg.drug_triplets.string()},
        {"event_triplets", cfg.event_triplets.string()},
        {"reference", cfg.reference ? cfg.reference->string() : ""},
        {"events", events},
        {"alpha", cfg.chain.alpha},
        {"iters", cfg.chain.iterations},
        {"restarts", cfg.chain.restarts},
        {"exhaustive_cutoff", cfg.chain.exhaustive_cutoff},
        {"seed", cfg.chain.seed},
        {"baselines", cfg.baselines},
        {"trace", cfg.trace},
        {"threads", threads},
    };
    manifest["dataset"] = {{"n", data.reports.n()}, {"p", data.reports.p()}, {"d", data.events.size()}};
    manifest["events"] = nlohmann::json::array();
    for (std::size_t e = 0; e < summary.events.size(); ++e) {
        const auto& es = summary.events[e];
        manifest["events"].push_back({
            {"event", es.event_id},
            {"headcount", es.headcount},
            {"p_eligible", es.p_eligible},
            {"search", es.exhaustive ? "exhaustive" : "metropolis-hastings"},
            {"chain_seeds", es.exhaustive ? 0 : cfg.chain.restarts},
            {"hit_count", es.hit_count},
            {"models_evaluated", es.models_evaluated},
            {"best_bic", es.converged ? nlohmann::json(es.best_bic) : nlohmann::json(nullptr)},
            {"model_size", es.model_size},
            {"unique_profiles", es.unique_profiles},
            {"signals", es.signals},
            {"no_eligible_drugs", es.no_eligible_drugs},
            {"seconds", es.seconds},
        });
    }
    if (cfg.reference) {
        nlohmann::json missing = nlohmann::json::array();
        for (const auto& [ev, drug] : out_of_universe(reference, data.reports.drug_ids, events))
            missing.push_back({{"event", ev}, {"drug", drug}});
        manifest["reference_out_of_universe"] = missing;
    }
    manifest["files"] = nlohmann::json::array();
    for (const auto& f : outputs.files())
        manifest["files"].push_back({{"name", f.filename().string()}, {"sha256", sha256_file(f)}});
    {
        auto out = outputs.open("manifest.json");
        out << manifest.dump(2) << '\n';
    }

    summary.files = outputs.files();
    outputs.commit();
    return summary;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no manifest.json in '" + dir.string() + "'");
    const auto manifest = nlohmann::json::parse(in);
    std::vector<std::string> bad;
    for (const auto& f : manifest.at("files")) {
        const auto name = f.at("name").get<std::string>();
        const auto path = dir / name;
        if (!fs::exists(path) || sha256_file(path) != f.at("sha256").get<std::string>()) bad.push_back(name);
    }
    return bad;
}

fs::path write_synthetic(const SyntheticSpec& spec, std::uint64_t seed, const fs::path& reports_out) {
    const auto generated = generate_synthetic(spec, seed);
    if (reports_out.has_parent_path()) fs::create_directories(reports_out.parent_path());
    {
        std::ofstream out(reports_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + reports_out.string() + "'");
        write_reports(out, generated.data);
    }
    auto sidecar = reports_out;
    sidecar.replace_extension(".truth.json");
    std::ofstream out(sidecar, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + sidecar.string() + "'");
    out << truth_json(spec, generated, seed) << '\n';
    return sidecar;
}

}  // namespace bicsignal
