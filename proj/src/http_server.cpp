#include "csm/http_server.hpp"

#include <httplib.h>
#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

struct HttpServer::Impl {
    explicit Impl(ForecastService& s) : service(s) {}
    ForecastService& service;
    httplib::Server server;
};

namespace {

void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

ForecastQuery query_of(const httplib::Request& req) {
    return ForecastQuery{param(req, "h"), param(req, "strategy"), param(req, "sentiment"),
                         param(req, "personnel_shortage")};
}

}  // namespace

HttpServer::HttpServer(ForecastService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& svr = impl_->server;
    auto& svc = impl_->service;
    svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    svr.Get("/zones", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.zones()); });
    svr.Get(R"(/zones/([^/]+)/forecast)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.forecast(req.matches[1].str(), query_of(req)));
    });
    svr.Get(R"(/zones/([^/]+)/risk)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.risk(req.matches[1].str(), query_of(req)));
    });
    svr.Post("/whatif", [&svc](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            send(res, Response{422, nlohmann::json{{"error", "parse_error"}, {"message", e.what()}}});
            return;
        }
        send(res, svc.whatif(body));
    });
    svr.Get("/models", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.models()); });
    svr.Post("/reload", [&svc](const httplib::Request&, httplib::Response& res) {
        try {
            svc.reload();
            send(res, Response{200, nlohmann::json{{"reloaded", true}}});
        } catch (const Error& e) {
            send(res, Response{http_status(e.kind()), error_body(e)});
        }
    });
    svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        res.set_content(
            nlohmann::json{{"error", "not_found"}, {"message", fmt::format("no route for {} {}", req.method, req.path)}}
                .dump(),
            "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw Error(ErrorKind::io, fmt::format("cannot bind {}", host));
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error(ErrorKind::io, fmt::format("cannot bind {}:{}", host, port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace csm
