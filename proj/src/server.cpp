#include <httplib.h>

#include "tutorlens/api.hpp"

#include <thread>

namespace tutorlens {

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Service& s) : service(s) {
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            ApiRequest api;
            api.method = req.method;
            api.path = req.path;
            for (const auto& [k, v] : req.params) api.params.emplace(k, v);
            api.body = req.body;
            api.content_type = req.get_header_value("Content-Type");
            const ApiResponse out = service.handle(api);
            res.status = out.status;
            for (const auto& [k, v] : out.headers) res.set_header(k, v);
            res.set_content(out.body, out.content_type);
        };
        server.Get(R"(.*)", forward);
        server.Post(R"(.*)", forward);
        server.Options(R"(.*)", forward);
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            res.status = 500;
            res.set_content(R"({"status":500,"code":"Internal","message":"unhandled server error"})",
                            "application/json");
        });
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) return -1;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tutorlens
