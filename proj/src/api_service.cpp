#include "swphm/api_service.hpp"

#include "swphm/error.hpp"

#include <httplib.h>

namespace swphm {

namespace {

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::usage:
    case ErrorCode::validation:
        return 400;
    case ErrorCode::not_trained:
        return 409;
    case ErrorCode::out_of_range:
    case ErrorCode::cap_exceeded:
    case ErrorCode::degenerate:
        return 422;
    case ErrorCode::io:
        return 500;
    }
    return 500;
}

ApiResponse ok(const json& body) { return {200, body.dump()}; }

ApiResponse error_response(int status, std::string_view code, std::string_view message) {
    return {status, json{{"error", code}, {"message", message}}.dump()};
}

RtThreshold threshold_of(const json& body) {
    if (!body.contains("threshold_s") || body["threshold_s"].is_null()) return RtThreshold{};
    if (!body["threshold_s"].is_number()) fail(ErrorCode::validation, "threshold_s must be a number");
    return RtThreshold::from_seconds(body["threshold_s"].get<double>());
}

const json& member_or_self(const json& body, const char* key) {
    if (body.contains(key)) return body[key];
    return body;
}

} // namespace

ApiService::ApiService(std::optional<std::filesystem::path> state_dir, std::string cors_origin)
    : state_dir_(std::move(state_dir)), cors_origin_(std::move(cors_origin)), server_(std::make_unique<httplib::Server>()) {
    if (state_dir_) {
        const auto backlog = *state_dir_ / "backlog.json";
        const auto releases = *state_dir_ / "releases.json";
        const auto model = *state_dir_ / "model.json";
        if (std::filesystem::exists(backlog)) {
            std::vector<ReleaseRecord> recs;
            if (std::filesystem::exists(releases)) recs = parse_releases_json(std::string_view(read_text_file(releases)));
            state_.dataset = std::make_shared<const Dataset>(parse_backlog(backlog, FileFormat::json), std::move(recs));
        }
        if (std::filesystem::exists(model)) {
            state_.bundle = std::make_shared<const TrainedBundle>(
                trained_bundle_from_json(json::parse(read_text_file(model))));
        }
    }

    server_->set_default_headers({{"Access-Control-Allow-Origin", cors_origin_}});
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    for (const char* path : {"/datasets", "/train", "/predict", "/rul", "/plan/evaluate", "/plan/best", "/adjust"}) {
        server_->Post(path, route);
    }
    server_->Get("/model", route);
    server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
}

ApiService::~ApiService() { stop(); }

ApiService::State ApiService::snapshot() const {
    std::lock_guard lock(state_mutex_);
    return state_;
}

void ApiService::publish(State next) {
    std::lock_guard lock(state_mutex_);
    state_ = std::move(next);
}

void ApiService::persist(const State& state) const {
    if (!state_dir_) return;
    if (state.dataset) {
        write_text_file(*state_dir_ / "backlog.json", dump_json(backlog_to_json(state.dataset->items())));
        write_text_file(*state_dir_ / "releases.json", dump_json(releases_to_json(state.dataset->releases())));
    }
    const auto model = *state_dir_ / "model.json";
    if (state.bundle) {
        write_text_file(model, dump_json(to_json(*state.bundle)));
    } else {
        std::error_code ec;
        std::filesystem::remove(model, ec);
    }
}

ApiResponse ApiService::handle(std::string_view method, std::string_view path, std::string_view body) {
    try {
        if (method == "OPTIONS") return {204, ""};
        if (method == "GET") {
            if (path == "/model") return get_model();
            return error_response(404, "E_NOT_FOUND", "no such endpoint");
        }
        if (method != "POST") return error_response(405, "E_METHOD", "method not allowed");

        json doc;
        try {
            doc = body.empty() ? json::object() : json::parse(body);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::validation, std::string("request body is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) fail(ErrorCode::validation, "request body must be a JSON object");

        if (path == "/datasets") return post_datasets(doc);
        if (path == "/train") return post_train(doc);
        if (path == "/predict") return post_predict(doc);
        if (path == "/rul") return post_rul(doc);
        if (path == "/plan/evaluate") return post_plan_evaluate(doc);
        if (path == "/plan/best") return post_plan_best(doc);
        if (path == "/adjust") return post_adjust(doc);
        return error_response(404, "E_NOT_FOUND", "no such endpoint");
    } catch (const Error& e) {
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
        return error_response(400, to_string(ErrorCode::validation), e.what());
    } catch (const std::exception& e) {
        return error_response(500, to_string(ErrorCode::io), e.what());
    }
}

ApiResponse ApiService::post_datasets(const json& body) {
    std::lock_guard write(write_mutex_);
    auto dataset = std::make_shared<const Dataset>(dataset_from_json(body));
    State next{dataset, nullptr}; // a new dataset invalidates the trained model
    persist(next);
    publish(next);
    return ok(dataset_summary(*dataset));
}

ApiResponse ApiService::post_train(const json& body) {
    std::lock_guard write(write_mutex_);
    State current = snapshot();
    if (!current.dataset) fail(ErrorCode::not_trained, "no dataset uploaded");
    TrainOutcome outcome = train_bundle(*current.dataset, train_options_from_json(body));
    State next{current.dataset, std::make_shared<const TrainedBundle>(std::move(outcome.bundle))};
    persist(next);
    publish(next);
    return ok(outcome.report);
}

ApiResponse ApiService::get_model() const {
    const State s = snapshot();
    if (!s.bundle) fail(ErrorCode::not_trained, "model not trained");
    return ok(to_json(*s.bundle));
}

ApiResponse ApiService::post_predict(const json& body) const {
    const State s = snapshot();
    if (!s.bundle) fail(ErrorCode::not_trained, "model not trained");
    if (!body.contains("cpv") || !body["cpv"].is_number()) fail(ErrorCode::validation, "cpv must be a number");
    std::optional<int> cluster;
    if (body.contains("cluster") && !body["cluster"].is_null()) cluster = body["cluster"].get<int>();
    return ok(predict_json(*s.bundle, body["cpv"].get<double>(), cluster));
}

ApiResponse ApiService::post_rul(const json& body) const {
    const State s = snapshot();
    if (!s.bundle) fail(ErrorCode::not_trained, "model not trained");
    if (!body.contains("plan")) fail(ErrorCode::validation, "request needs a \"plan\"");
    return ok(to_json(plan_rul(*s.bundle, body["plan"], s.dataset.get(), threshold_of(body))));
}

ApiResponse ApiService::post_plan_evaluate(const json& body) const {
    const State s = snapshot();
    if (!s.bundle) fail(ErrorCode::not_trained, "model not trained");
    if (!body.contains("allocation")) fail(ErrorCode::validation, "request needs an \"allocation\"");
    return ok(to_json(plan_rul(*s.bundle, body, s.dataset.get(), threshold_of(body))));
}

ApiResponse ApiService::post_plan_best(const json& body) const {
    const State s = snapshot();
    if (!s.bundle) fail(ErrorCode::not_trained, "model not trained");
    if (!s.dataset) fail(ErrorCode::not_trained, "no dataset uploaded");
    return ok(plan_best_json(*s.bundle, member_or_self(body, "spec"), *s.dataset, threshold_of(body)));
}

ApiResponse ApiService::post_adjust(const json& body) const {
    const State s = snapshot();
    const EnvAdjustment defaults = s.bundle ? s.bundle->adjustment : EnvAdjustment{};
    return ok(adjust_json(body, defaults));
}

void ApiService::listen(const std::string& host, int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
    } else if (server_->bind_to_port(host, port)) {
        port_ = port;
    } else {
        port_ = -1;
    }
    if (port_ <= 0) fail(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
    server_->listen_after_bind();
}

int ApiService::port() const { return port_; }

bool ApiService::running() const { return server_ && server_->is_running(); }

void ApiService::stop() {
    if (server_) server_->stop();
}

} // namespace swphm
