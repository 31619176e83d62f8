#pragma once

#include "swphm/workflow.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace swphm {

struct ApiResponse {
    int status = 200;
    std::string body; // JSON
};

/// Single-session HTTP facade over the pipeline. Reads run against an
/// immutable snapshot; uploads and training are serialized and swap the
/// snapshot in one step.
class ApiService {
public:
    /// Loads backlog.json, releases.json and model.json from `state_dir`
    /// when present, and writes them there after every change.
    explicit ApiService(std::optional<std::filesystem::path> state_dir = std::nullopt,
                        std::string cors_origin = "*");
    ~ApiService();

    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    /// Dispatches one request without a socket.
    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body);

    /// Blocks serving on host:port until stop(). Port 0 binds any free port.
    void listen(const std::string& host, int port);
    /// Port bound by the running server, or 0.
    int port() const;
    bool running() const;
    void stop();

private:
    struct State {
        std::shared_ptr<const Dataset> dataset;
        std::shared_ptr<const TrainedBundle> bundle;
    };

    State snapshot() const;
    void publish(State next);
    void persist(const State& state) const;

    ApiResponse post_datasets(const json& body);
    ApiResponse post_train(const json& body);
    ApiResponse get_model() const;
    ApiResponse post_predict(const json& body) const;
    ApiResponse post_rul(const json& body) const;
    ApiResponse post_plan_evaluate(const json& body) const;
    ApiResponse post_plan_best(const json& body) const;
    ApiResponse post_adjust(const json& body) const;

    std::optional<std::filesystem::path> state_dir_;
    std::string cors_origin_;
    mutable std::mutex state_mutex_;
    std::mutex write_mutex_;
    State state_;
    std::unique_ptr<httplib::Server> server_;
    std::atomic<int> port_{0};
};

} // namespace swphm
