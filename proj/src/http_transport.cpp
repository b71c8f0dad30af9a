#include <httplib.h>

#include "tutorlens/gateway.hpp"

namespace tutorlens {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

    HttpResponse post(const std::string& url, const std::string& body, const Headers& headers) override {
        const auto scheme_end = url.find("://");
        const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        const std::string origin = url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        if (!client.is_valid()) throw TransportError("invalid base url " + origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        client.set_connection_timeout(secs);
        client.set_read_timeout(secs);
        client.set_write_timeout(secs);

        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(path, h, body, "application/json");
        if (!res) throw TransportError(httplib::to_string(res.error()));
        return HttpResponse{res->status, res->body};
    }

private:
    std::chrono::milliseconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport(std::chrono::milliseconds timeout) {
    return std::make_shared<HttplibTransport>(timeout);
}

}  // namespace tutorlens
