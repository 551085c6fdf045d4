#pragma once

#include <memory>
#include <string>

#include "csm/service.hpp"

namespace csm {

/// Routes:
///   GET  /zones
///   GET  /zones/{id}/forecast?h=&strategy=&sentiment=&personnel_shortage=
///   GET  /zones/{id}/risk?h=&strategy=&sentiment=&personnel_shortage=
///   POST /whatif
///   GET  /models
///   POST /reload      re-reads the active model pointers
class HttpServer {
public:
    explicit HttpServer(ForecastService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and returns the port; 0 picks a free one.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called.
    void listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace csm
