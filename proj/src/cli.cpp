#include "swphm/cli.hpp"

#include "swphm/api_service.hpp"
#include "swphm/csv.hpp"
#include "swphm/error.hpp"
#include "swphm/testbed_sim.hpp"
#include "swphm/workflow.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <ostream>

namespace swphm::cli {

namespace {

json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::validation, path + ": invalid JSON: " + e.what());
    }
}

struct DataArgs {
    std::string dataset;
    std::string backlog;
    std::string releases;

    void add_to(CLI::App* cmd) {
        auto* d = cmd->add_option("--dataset", dataset, "Normalized dataset written by 'ingest'");
        cmd->add_option("--backlog", backlog, "Backlog file (.json or .csv)")->excludes(d);
        cmd->add_option("--releases", releases, "Releases/measurements file (.json or .csv)")->excludes(d);
    }

    bool given() const { return !dataset.empty() || !backlog.empty(); }

    Dataset load() const {
        if (!dataset.empty()) return dataset_from_json(read_json_file(dataset));
        if (backlog.empty()) fail(ErrorCode::usage, "a dataset is required: pass --dataset or --backlog");
        auto items = parse_backlog(backlog);
        std::vector<ReleaseRecord> recs;
        if (!releases.empty()) recs = parse_measurements(releases);
        return Dataset(std::move(items), std::move(recs));
    }
};

struct ModelArgs {
    std::string impact;
    std::string severity_model;
    std::string sp_model;
    std::string kind_model;

    void add_to(CLI::App* cmd, bool with_kind) {
        cmd->add_option("--impact", impact, "Impact-factor overrides {\"Critical\": 1, ...}");
        cmd->add_option("--severity-model", severity_model, "Severity classifier for items lacking a severity");
        cmd->add_option("--sp-model", sp_model, "Story-point classifier for items lacking story points");
        if (with_kind) cmd->add_option("--kind-model", kind_model, "Category classifier stored with the model");
    }

    ImpactTable table() const { return impact.empty() ? ImpactTable{} : ImpactTable::from_json(read_json_file(impact)); }

    Classifiers classifiers() const {
        Classifiers c;
        if (!severity_model.empty()) c.severity = nb_model_from_json(read_json_file(severity_model));
        if (!sp_model.empty()) c.story_points = nb_model_from_json(read_json_file(sp_model));
        if (!kind_model.empty()) c.kind = nb_model_from_json(read_json_file(kind_model));
        return c;
    }
};

struct Globals {
    double threshold_s = 10.0;
    std::uint64_t seed = 42;
    std::string format = "json";
    std::string out;
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(int argc, const char* const* argv);

private:
    void emit(const std::string& text) const {
        if (g_.out.empty()) {
            out_ << text;
        } else {
            write_text_file(g_.out, text);
        }
    }
    void emit(const json& doc) const { emit(dump_json(doc)); }
    bool csv() const { return g_.format == "csv"; }
    RtThreshold threshold() const { return RtThreshold::from_seconds(g_.threshold_s); }

    void ingest();
    void classify_train();
    void classify_apply();
    void classify_text();
    void weigh();
    void cluster();
    void train();
    void predict();
    void rul();
    void plan();
    void adjust();
    void simulate();
    void serve();

    std::ostream& out_;
    std::ostream& err_;
    Globals g_;
    DataArgs data_;
    ModelArgs model_args_;

    std::string model_path_;
    std::string plan_path_;
    std::string target_;
    std::string corpus_;
    std::string text_;
    double alpha_ = 1.0;
    std::optional<int> k_;
    int k_max_ = 6;
    std::optional<double> os_factor_;
    std::string os_pairs_;
    std::optional<double> clock_coefficient_;
    double train_fraction_ = 0.8;
    std::string report_path_;
    double cpv_ = 0.0;
    std::optional<int> cluster_id_;
    std::optional<std::string> strategy_;
    std::uint64_t cap_ = kDefaultEnumerationCap;
    std::optional<double> rt_;
    std::optional<double> from_ghz_, to_ghz_;
    std::optional<int> from_bits_, to_bits_;
    std::string config_path_;
    std::string host_ = "127.0.0.1";
    int port_ = 8080;
    std::string state_dir_;
    std::string cors_origin_ = "*";
    bool seed_given_ = false;
};

int Runner::run(int argc, const char* const* argv) {
    CLI::App app{"Remaining-useful-life prognostics for software releases", "swphm"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--threshold", g_.threshold_s, "Response-time threshold in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", g_.seed, "Random seed (default 42, or $SWPHM_SEED)");
    app.add_option("--format", g_.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_option("--out", g_.out, "Output file (directory for simulate)");

    auto* ingest = app.add_subcommand("ingest", "Validate and normalize backlog and release files");
    data_.add_to(ingest);

    auto* classify = app.add_subcommand("classify", "Naive Bayes text classification");
    classify->require_subcommand(1);
    auto* c_train = classify->add_subcommand("train", "Train from a backlog field or a labeled corpus");
    auto* c_backlog = c_train->add_option("--backlog", data_.backlog, "Backlog whose items provide labels");
    c_train->add_option("--target", target_, "Label field")
        ->check(CLI::IsMember({"kind", "severity", "story_points"}))
        ->needs(c_backlog);
    c_train->add_option("--corpus", corpus_, "JSON array of {\"text\", \"label\"}")->excludes(c_backlog);
    c_train->add_option("--alpha", alpha_, "Laplace smoothing")->check(CLI::PositiveNumber)->capture_default_str();
    auto* c_apply = classify->add_subcommand("apply", "Classify every item of a backlog");
    c_apply->add_option("--model", model_path_, "Classifier JSON")->required();
    c_apply->add_option("--backlog", data_.backlog, "Backlog file")->required();
    auto* c_text = classify->add_subcommand("text", "Classify one text");
    c_text->add_option("--model", model_path_, "Classifier JSON")->required();
    c_text->add_option("--text", text_, "Text to classify")->required();

    auto* weigh = app.add_subcommand("weigh", "Per-release PV and CPV");
    data_.add_to(weigh);
    model_args_.add_to(weigh, false);

    auto* cluster = app.add_subcommand("cluster", "k-means clusters of analogous releases");
    data_.add_to(cluster);
    model_args_.add_to(cluster, false);
    cluster->add_option("--k", k_, "Fixed number of clusters (default: chosen by silhouette)")->check(CLI::PositiveNumber);
    cluster->add_option("--k-max", k_max_, "Largest k tried")->check(CLI::Range(2, 64))->capture_default_str();

    auto* train = app.add_subcommand("train", "Fit the RT regression and write a model bundle");
    data_.add_to(train);
    model_args_.add_to(train, true);
    train->add_option("--k", k_, "Fixed number of release clusters")->check(CLI::PositiveNumber);
    train->add_option("--k-max", k_max_, "Largest k tried")->check(CLI::Range(2, 64))->capture_default_str();
    auto* os_factor = train->add_option("--os-factor", os_factor_, "RT(32-bit) / RT(64-bit)")->check(CLI::PositiveNumber);
    train->add_option("--os-pairs", os_pairs_, "Paired 32/64-bit readings to estimate the OS factor")->excludes(os_factor);
    train->add_option("--clock-coefficient", clock_coefficient_, "RT change per relative clock change")
        ->check(CLI::PositiveNumber);
    train->add_option("--train-fraction", train_fraction_, "Training share of the reported split")
        ->check(CLI::Bound(0.0, 1.0))
        ->capture_default_str();
    train->add_option("--report", report_path_, "Write the training report here instead of stdout");

    auto* predict = app.add_subcommand("predict", "Predicted RT at a CPV");
    predict->add_option("--model", model_path_, "Model bundle")->required();
    predict->add_option("--cpv", cpv_, "Cumulative predictive variable")->required();
    predict->add_option("--cluster", cluster_id_, "Use this cluster's model when one exists");

    auto* rul = app.add_subcommand("rul", "Trajectory and remaining useful life of a plan");
    rul->add_option("--model", model_path_, "Model bundle")->required();
    rul->add_option("--plan", plan_path_, "Plan with releases or an allocation")->required();
    data_.add_to(rul);

    auto* plan = app.add_subcommand("plan", "Best allocation of the backlog over future releases");
    plan->add_option("--model", model_path_, "Model bundle")->required();
    plan->add_option("--plan", plan_path_, "Plan spec {horizon, strategy, items, env_overrides}")->required();
    data_.add_to(plan);
    plan->add_option("--strategy", strategy_, "Override the plan's strategy")
        ->check(CLI::IsMember({"exhaustive", "greedy"}));
    plan->add_option("--cap", cap_, "Enumeration cap for exhaustive search")->check(CLI::PositiveNumber)->capture_default_str();

    auto* adjust = app.add_subcommand("adjust", "Environment adjustment of a response time, or OS-factor estimation");
    auto* rt = adjust->add_option("--rt", rt_, "Response time in ms")->check(CLI::PositiveNumber);
    adjust->add_option("--from-ghz", from_ghz_, "Current clock speed")->check(CLI::PositiveNumber);
    adjust->add_option("--to-ghz", to_ghz_, "New clock speed")->check(CLI::PositiveNumber);
    adjust->add_option("--from-bits", from_bits_, "Current OS word size")->check(CLI::IsMember({32, 64}));
    adjust->add_option("--to-bits", to_bits_, "New OS word size")->check(CLI::IsMember({32, 64}));
    adjust->add_option("--os-factor", os_factor_, "RT(32-bit) / RT(64-bit)")->check(CLI::PositiveNumber);
    adjust->add_option("--clock-coefficient", clock_coefficient_, "RT change per relative clock change")
        ->check(CLI::PositiveNumber);
    adjust->add_option("--model", model_path_, "Take the adjustment parameters from a model bundle");
    adjust->add_option("--os-pairs", os_pairs_, "Estimate the OS factor from paired readings instead")->excludes(rt);

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic release history with ground truth");
    simulate->add_option("--config", config_path_, "Simulator configuration JSON");

    auto* serve = app.add_subcommand("serve", "Start the HTTP API");
    serve->add_option("--host", host_, "Bind address")->capture_default_str();
    serve->add_option("--port", port_, "Port (0 picks a free one)")->check(CLI::Range(0, 65535))->capture_default_str();
    serve->add_option("--state-dir", state_dir_, "Directory holding the persisted session");
    serve->add_option("--cors-origin", cors_origin_, "Allowed browser origin")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out_, err_);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out_, err_);
    } catch (const CLI::ParseError& e) {
        err_ << "swphm: " << e.what() << "\n\n" << app.help();
        out_ << json{{"error", to_string(ErrorCode::usage)}}.dump() << "\n";
        return 2;
    }

    try {
        seed_given_ = app.count("--seed") > 0;
        if (!seed_given_) {
            if (const char* env = std::getenv("SWPHM_SEED"); env && *env) {
                try {
                    std::size_t used = 0;
                    g_.seed = std::stoull(env, &used);
                    if (used != std::string_view(env).size()) throw std::invalid_argument(env);
                } catch (const std::exception&) {
                    fail(ErrorCode::usage, std::string("SWPHM_SEED is not an unsigned integer: ") + env);
                }
                seed_given_ = true;
            }
        }

        if (ingest->parsed()) this->ingest();
        else if (c_train->parsed()) classify_train();
        else if (c_apply->parsed()) classify_apply();
        else if (c_text->parsed()) classify_text();
        else if (weigh->parsed()) this->weigh();
        else if (cluster->parsed()) this->cluster();
        else if (train->parsed()) this->train();
        else if (predict->parsed()) this->predict();
        else if (rul->parsed()) this->rul();
        else if (plan->parsed()) this->plan();
        else if (adjust->parsed()) this->adjust();
        else if (simulate->parsed()) this->simulate();
        else if (serve->parsed()) this->serve();
        return 0;
    } catch (const Error& e) {
        out_ << json{{"error", to_string(e.code())}}.dump() << "\n";
        err_ << "swphm: error: " << e.what() << "\n";
        return e.code() == ErrorCode::usage ? 2 : 1;
    } catch (const std::exception& e) {
        out_ << json{{"error", to_string(ErrorCode::io)}}.dump() << "\n";
        err_ << "swphm: error: " << e.what() << "\n";
        return 1;
    }
}

void Runner::ingest() {
    const Dataset dataset = data_.load();
    if (!csv()) {
        emit(dataset_to_json(dataset));
        return;
    }
    if (g_.out.empty()) fail(ErrorCode::usage, "ingest --format csv needs --out <directory>");
    const std::filesystem::path dir = g_.out;
    write_text_file(dir / "backlog.csv", backlog_to_csv(dataset.items()));
    write_text_file(dir / "releases.csv", releases_to_csv(dataset.releases()));
    out_ << dump_json(dataset_summary(dataset));
}

void Runner::classify_train() {
    std::vector<LabeledDoc> docs;
    if (!corpus_.empty()) {
        const json corpus = read_json_file(corpus_);
        if (!corpus.is_array()) fail(ErrorCode::validation, corpus_ + ": expected an array of {\"text\", \"label\"}");
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto& rec = corpus[i];
            if (!rec.is_object() || !rec.contains("text") || !rec.contains("label") || !rec["text"].is_string() ||
                !rec["label"].is_string()) {
                fail(ErrorCode::validation, corpus_ + ": record " + std::to_string(i + 1) + " needs string text and label");
            }
            docs.push_back({tokenize(rec["text"].get<std::string>()), rec["label"].get<std::string>()});
        }
    } else {
        if (data_.backlog.empty() || target_.empty()) {
            fail(ErrorCode::usage, "classify train needs --corpus, or --backlog with --target");
        }
        for (const auto& item : parse_backlog(data_.backlog)) {
            std::string label;
            if (target_ == "kind") {
                label = std::string(to_string(item.kind));
            } else if (target_ == "severity") {
                if (!item.severity) continue;
                label = std::string(to_string(*item.severity));
            } else {
                if (!item.story_points) continue;
                label = std::to_string(*item.story_points);
            }
            docs.push_back({tokenize(item.text()), label});
        }
    }
    emit(to_json(train_nb(docs, alpha_)));
}

void Runner::classify_apply() {
    const NbModel model = nb_model_from_json(read_json_file(model_path_));
    const auto items = parse_backlog(data_.backlog);
    if (csv()) {
        std::string text = csv::format_row({"id", "label", "posterior", "no_evidence"});
        for (const auto& item : items) {
            const auto p = classify_nb(model, tokenize(item.text()));
            text += csv::format_row({item.id, p.label, csv::format_number(p.posteriors[model.class_index(p.label)]),
                                     p.no_evidence ? "true" : "false"});
        }
        emit(text);
        return;
    }
    json out = json::array();
    for (const auto& item : items) {
        json j = prediction_json(classify_nb(model, tokenize(item.text())), model);
        j["id"] = item.id;
        out.push_back(std::move(j));
    }
    emit(out);
}

void Runner::classify_text() {
    const NbModel model = nb_model_from_json(read_json_file(model_path_));
    emit(prediction_json(classify_nb(model, tokenize(text_)), model));
}

void Runner::weigh() {
    const Dataset dataset = data_.load();
    const Classifiers classifiers = model_args_.classifiers();
    const ImpactTable table = model_args_.table();
    if (csv()) {
        emit(weigh_csv(dataset, table, classifiers.estimators()));
    } else {
        emit(weigh_json(dataset, table, classifiers.estimators()));
    }
}

void Runner::cluster() {
    const Dataset dataset = data_.load();
    const Classifiers classifiers = model_args_.classifiers();
    ClusterOptions options;
    options.k = k_;
    options.k_max = k_max_;
    options.seed = g_.seed;
    const auto clusterer =
        fit_release_clusters(dataset_release_features(dataset, model_args_.table(), classifiers.estimators()), options);
    if (csv()) {
        emit(cluster_csv(clusterer));
    } else {
        emit(cluster_json(clusterer));
    }
}

void Runner::train() {
    if (g_.out.empty()) fail(ErrorCode::usage, "train needs --out <model.json>");
    const Dataset dataset = data_.load();
    TrainOptions options;
    options.impact = model_args_.table();
    options.classifiers = model_args_.classifiers();
    options.clock_coefficient = clock_coefficient_.value_or(kDefaultClockCoefficient);
    options.os_factor = os_factor_;
    if (!os_pairs_.empty()) options.os_pairs = os_pairs_from_json(read_json_file(os_pairs_));
    options.cluster.k = k_;
    options.cluster.k_max = k_max_;
    options.train_fraction = train_fraction_;
    options.seed = g_.seed;
    const TrainOutcome outcome = train_bundle(dataset, options);
    write_text_file(g_.out, dump_json(to_json(outcome.bundle)));
    if (report_path_.empty()) {
        out_ << dump_json(outcome.report);
    } else {
        write_text_file(report_path_, dump_json(outcome.report));
    }
}

void Runner::predict() {
    const TrainedBundle bundle = trained_bundle_from_json(read_json_file(model_path_));
    const json result = predict_json(bundle, cpv_, cluster_id_);
    if (csv()) {
        emit(csv::format_row({"cpv", "rt_ms"}) +
             csv::format_row({csv::format_number(cpv_), csv::format_number(result["rt_ms"].get<double>())}));
    } else {
        emit(result);
    }
}

void Runner::rul() {
    const TrainedBundle bundle = trained_bundle_from_json(read_json_file(model_path_));
    const json plan_doc = read_json_file(plan_path_);
    std::optional<Dataset> dataset;
    if (data_.given()) dataset = data_.load();
    const RulEstimate estimate = plan_rul(bundle, plan_doc, dataset ? &*dataset : nullptr, threshold());
    if (csv()) {
        emit(trajectory_csv(estimate));
    } else {
        emit(to_json(estimate));
    }
}

void Runner::plan() {
    const TrainedBundle bundle = trained_bundle_from_json(read_json_file(model_path_));
    json plan_doc = read_json_file(plan_path_);
    if (strategy_ && plan_doc.is_object()) plan_doc["strategy"] = *strategy_;
    const Dataset dataset = data_.load();
    const PlanSpec spec = plan_spec_from_json(bundle, plan_doc, dataset);
    const PlanResult result = best_plan(spec, plan_context(bundle, threshold()), cap_);
    if (csv()) {
        emit(trajectory_csv(result.rul));
    } else {
        emit(to_json(result, spec));
    }
}

void Runner::adjust() {
    EnvAdjustment defaults;
    if (!model_path_.empty()) defaults = trained_bundle_from_json(read_json_file(model_path_)).adjustment;
    if (!os_pairs_.empty()) {
        const auto pairs = os_pairs_from_json(read_json_file(os_pairs_));
        const json result = {{"os_factor", estimate_os_factor(pairs)}, {"pairs", pairs.size()}};
        if (csv()) {
            emit(csv::format_row({"os_factor"}) + csv::format_row({csv::format_number(result["os_factor"].get<double>())}));
        } else {
            emit(result);
        }
        return;
    }
    if (!rt_) fail(ErrorCode::usage, "adjust needs --rt, or --os-pairs to estimate the OS factor");
    json from = json::object(), to = json::object();
    if (from_ghz_) from["clock_ghz"] = *from_ghz_;
    if (to_ghz_) to["clock_ghz"] = *to_ghz_;
    if (from_bits_) from["os_bits"] = *from_bits_;
    if (to_bits_) to["os_bits"] = *to_bits_;
    json request = {{"rt_ms", *rt_}, {"from", from}, {"to", to}};
    if (os_factor_) request["os_factor"] = *os_factor_;
    if (clock_coefficient_) request["clock_coefficient"] = *clock_coefficient_;
    const json result = adjust_json(request, defaults);
    if (csv()) {
        emit(csv::format_row({"rt_ms"}) + csv::format_row({csv::format_number(result["rt_ms"].get<double>())}));
    } else {
        emit(result);
    }
}

void Runner::simulate() {
    if (g_.out.empty()) fail(ErrorCode::usage, "simulate needs --out <directory>");
    SimConfig cfg = config_path_.empty() ? SimConfig{} : sim_config_from_json(read_json_file(config_path_));
    if (config_path_.empty() || seed_given_) cfg.seed = g_.seed;
    const SimOutput sim = generate_dataset(cfg);
    write_sim_output(sim, g_.out);
    json summary = dataset_summary(sim.dataset);
    summary["seed"] = cfg.seed;
    out_ << dump_json(summary);
}

void Runner::serve() {
    std::optional<std::filesystem::path> dir;
    if (!state_dir_.empty()) dir = state_dir_;
    ApiService service(dir, cors_origin_);
    err_ << "swphm: serving on " << host_ << ":" << port_ << "\n";
    err_.flush();
    service.listen(host_, port_);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Runner runner(out, err);
    return runner.run(argc, argv);
}

} // namespace swphm::cli
