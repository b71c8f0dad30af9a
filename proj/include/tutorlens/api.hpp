#pragma once

#include "tutorlens/engine.hpp"
#include "tutorlens/error.hpp"
#include "tutorlens/gateway.hpp"
#include "tutorlens/storage.hpp"

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace tutorlens {

// Documented (status, code) pair for every error path.
struct ApiError {
    int status = 500;
    std::string code;
    std::string message;
};

int http_status(ErrorCode code);
ApiError to_api_error(const Error& e);

struct ApiRequest {
    std::string method;  // GET, POST, OPTIONS
    std::string path;    // without query string
    std::multimap<std::string, std::string> params;
    std::string body;
    std::string content_type;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

struct ServiceOptions {
    HttpProviderOptions provider_options;  // injected into http-kind providers
};

// Transport-independent request handler behind the HTTP server. Holds the
// in-memory registry of classification jobs; finished runs live in the store.
class Service {
public:
    explicit Service(std::shared_ptr<Store> store, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Never throws; internal faults become 500 responses.
    ApiResponse handle(const ApiRequest& req);

    // Blocks until no classification job is running.
    void wait_for_jobs();

    [[nodiscard]] Store& store() { return *store_; }

private:
    enum class JobState { Running, Completed, Failed };
    struct Job {
        std::string transcript_id;
        JobState state = JobState::Running;
        std::optional<ApiError> failure;
    };

    ApiResponse route(const ApiRequest& req);
    ApiResponse post_transcript(const ApiRequest& req);
    ApiResponse start_classification(const std::string& transcript_id, const ApiRequest& req);
    ApiResponse get_run(const std::string& run_id);
    ApiResponse run_table(const std::string& run_id, const ApiRequest& req);
    ApiResponse all_results_table(const ApiRequest& req);
    ApiResponse export_run(const std::string& run_id, const ApiRequest& req);
    ApiResponse list_runs(const ApiRequest& req);
    ApiResponse post_gold(const ApiRequest& req);
    ApiResponse post_evaluation(const ApiRequest& req);

    void run_job(std::string run_id, Transcript transcript, RunConfig cfg);

    std::shared_ptr<Store> store_;
    ServiceOptions options_;
    std::mutex jobs_mutex_;
    std::condition_variable jobs_changed_;
    std::map<std::string, Job> jobs_;
    std::set<std::string> active_transcripts_;
    std::vector<std::thread> workers_;
};

// Binds the service to a cpp-httplib server.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // port 0 picks a free port; returns the bound port. Serves on a
    // background thread until stop().
    int start(const std::string& host, int port);
    // Blocks in the calling thread.
    bool listen(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tutorlens
