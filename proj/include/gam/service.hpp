#pragma once

#include <memory>
#include <string>

#include "gam/engine.hpp"

namespace gam {

// HTTP front end over one Engine. Reads are served from snapshots, so they
// stay available while an ingest is staging.
class Service {
public:
    explicit Service(Engine& engine);
    ~Service();

    // Binds to a free port and returns it; run() then serves until stop().
    int bind_any_port(const std::string& host = "127.0.0.1");
    bool run();

    // Bind-and-serve in one call; blocks until stop().
    bool listen(const std::string& host, int port);

    void stop();
    bool is_running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gam
