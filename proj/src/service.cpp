#include "gam/service.hpp"

#include <httplib.h>
#include <json.hpp>

namespace gam {

using ordered_json = nlohmann::ordered_json;

struct Service::Impl {
    explicit Impl(Engine& engine) : engine(engine) {}
    Engine& engine;
    httplib::Server server;
};

namespace {

void reply_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, ordered_json{{"error", message}});
}

void handle_ingest(Engine& engine, const httplib::Request& req, httplib::Response& res) {
    const auto doc = nlohmann::json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        reply_error(res, 400, "body must be a JSON object");
        return;
    }

    Session session;
    try {
        session.id = doc.at("id").get<std::int64_t>();
        session.content = doc.at("content").get<std::string>();
        if (const auto it = doc.find("created_at"); it != doc.end() && it->is_string()) {
            session.created_at = it->get<std::string>();
        }
        if (const auto it = doc.find("metadata"); it != doc.end() && it->is_object()) {
            for (const auto& [key, value] : it->items()) {
                session.metadata[key] = value.is_string() ? value.get<std::string>()
                                                          : value.dump();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        reply_error(res, 400, std::string("malformed session: ") + e.what());
        return;
    }
    if (session.content.empty()) {
        reply_error(res, 400, "session content is empty");
        return;
    }

    try {
        const auto summary = engine.ingest_session(session);
        engine.persist_store();
        ordered_json body;
        body["session_id"] = summary.session_id;
        body["page_ids"] = summary.page_ids;
        reply_json(res, 200, body);
    } catch (const OutOfOrderSession& e) {
        reply_error(res, 409, e.what());
    } catch (const ConcurrentWrite& e) {
        reply_error(res, 409, e.what());
    } catch (const BackendError& e) {
        reply_error(res, 502, e.what());
    } catch (const EmptyCompletion& e) {
        reply_error(res, 502, e.what());
    } catch (const NoMatchingRule& e) {
        reply_error(res, 502, e.what());
    } catch (const Error& e) {
        reply_error(res, 400, e.what());
    }
}

void handle_research(Engine& engine, const httplib::Request& req, httplib::Response& res) {
    const auto doc = nlohmann::json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        reply_error(res, 400, "body must be a JSON object");
        return;
    }

    Request request;
    ResearcherConfig overrides = researcher_config(engine.config());
    try {
        request.text = doc.at("request").get<std::string>();
        if (const auto it = doc.find("format"); it != doc.end() && !it->is_null()) {
            overrides.output_format = output_format_from_string(it->get<std::string>());
        }
        if (const auto it = doc.find("max_depth"); it != doc.end() && !it->is_null()) {
            const auto depth = it->get<std::int64_t>();
            if (depth < 1) throw Error("max_depth must be positive");
            overrides.max_reflection_depth = static_cast<std::size_t>(depth);
        }
        if (const auto it = doc.find("top_k"); it != doc.end() && !it->is_null()) {
            const auto k = it->get<std::int64_t>();
            if (k < 1) throw Error("top_k must be positive");
            overrides.top_k = static_cast<std::size_t>(k);
        }
    } catch (const nlohmann::json::exception& e) {
        reply_error(res, 400, std::string("malformed research request: ") + e.what());
        return;
    } catch (const Error& e) {
        reply_error(res, 400, e.what());
        return;
    }
    if (request.text.empty()) {
        reply_error(res, 400, "request text is empty");
        return;
    }

    try {
        const auto result = engine.research(request, overrides);
        res.status = 200;
        res.set_content(final_context_json(result.context, result.trace), "application/json");
    } catch (const ResearchAborted& e) {
        ordered_json body;
        body["error"] = e.what();
        body["trace"] = nlohmann::ordered_json::parse(trace_json(e.trace()));
        reply_json(res, 502, body);
    } catch (const Error& e) {
        reply_error(res, 502, e.what());
    }
}

void handle_memory(Engine& engine, httplib::Response& res) {
    const auto memory = engine.memory_snapshot();
    ordered_json body;
    body["memos"] = ordered_json::array();
    for (const auto& memo : memory->memos()) {
        ordered_json row;
        row["session_id"] = memo.session_id;
        row["source_page_ids"] = memo.source_page_ids;
        row["text"] = memo.text;
        body["memos"].push_back(std::move(row));
    }
    reply_json(res, 200, body);
}

void handle_page(Engine& engine, const httplib::Request& req, httplib::Response& res) {
    const auto store = engine.store_snapshot();
    PageId id = 0;
    try {
        id = std::stoll(req.matches[1].str());
    } catch (const std::logic_error&) {
        reply_error(res, 400, "page id must be an integer");
        return;
    }
    if (!store->contains(id)) {
        reply_error(res, 404, "no page " + std::to_string(id));
        return;
    }
    const Page& page = store->page(id);
    ordered_json body;
    body["id"] = page.id;
    body["session_id"] = page.session_id;
    body["header"] = page.header;
    body["content"] = page.content;
    reply_json(res, 200, body);
}

}  // namespace

Service::Service(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {
    auto& server = impl_->server;
    Engine& bound = impl_->engine;

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.status = 200;
        res.set_content("ok", "text/plain");
    });
    server.Post("/v1/sessions", [&bound](const httplib::Request& req, httplib::Response& res) {
        handle_ingest(bound, req, res);
    });
    server.Post("/v1/research", [&bound](const httplib::Request& req, httplib::Response& res) {
        handle_research(bound, req, res);
    });
    server.Get("/v1/memory", [&bound](const httplib::Request&, httplib::Response& res) {
        handle_memory(bound, res);
    });
    server.Get(R"(/v1/pages/(-?\d+))",
               [&bound](const httplib::Request& req, httplib::Response& res) {
                   handle_page(bound, req, res);
               });
}

Service::~Service() {
    stop();
}

int Service::bind_any_port(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) {
        throw IoError("cannot bind service to " + host);
    }
    return port;
}

bool Service::run() {
    return impl_->server.listen_after_bind();
}

bool Service::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

void Service::stop() {
    if (impl_ && impl_->server.is_running()) {
        impl_->server.stop();
    }
}

bool Service::is_running() const {
    return impl_->server.is_running();
}

}  // namespace gam
