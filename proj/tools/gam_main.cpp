#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gam/config.hpp"
#include "gam/engine.hpp"
#include "gam/eval.hpp"
#include "gam/service.hpp"
#include "gam/storage.hpp"
#include "gam/text.hpp"

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitBackend = 3;

struct CommonOpts {
    std::string config_file;
    std::string store;
    std::string backend_kind;
    std::string rules;
    std::string base_url;
    std::string model;
    std::size_t page_size = 0;
    std::size_t max_depth = 0;
    std::size_t top_k = 0;
    std::string format;
    std::string tools;
    std::size_t context_budget = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "config file with key = value lines");
    cmd->add_option("--store", opts.store, "store directory (env GAM_STORE)");
    cmd->add_option("--backend", opts.backend_kind, "backend kind: http or scripted");
    cmd->add_option("--rules", opts.rules, "rules file for the scripted backend");
    cmd->add_option("--base-url", opts.base_url, "chat completion base URL (env GAM_BASE_URL)");
    cmd->add_option("--model", opts.model, "model name for the http backend");
    cmd->add_option("--page-size", opts.page_size, "tokens per page");
    cmd->add_option("--max-depth", opts.max_depth, "maximum reflection depth");
    cmd->add_option("--top-k", opts.top_k, "maximum pages per retrieval call");
    cmd->add_option("--format", opts.format,
                    "output format: integration-only, integration-with-page, "
                    "integration-with-extraction");
    cmd->add_option("--tools", opts.tools, "comma-separated retrieval tools to enable");
    cmd->add_option("--context-budget", opts.context_budget, "prompt token budget");
}

gam::EngineConfig build_config(const CLI::App* cmd, const CommonOpts& opts) {
    std::optional<std::filesystem::path> file;
    if (cmd->count("--config")) {
        file = opts.config_file;
    }
    gam::EngineConfig config = gam::load_config(file);
    if (cmd->count("--store")) config.store_path = opts.store;
    if (cmd->count("--backend")) config.backend_kind = opts.backend_kind;
    if (cmd->count("--rules")) {
        config.scripted_rules = opts.rules;
        if (!cmd->count("--backend")) config.backend_kind = "scripted";
    }
    if (cmd->count("--base-url")) config.base_url = opts.base_url;
    if (cmd->count("--model")) config.model = opts.model;
    if (cmd->count("--page-size")) config.page_size = opts.page_size;
    if (cmd->count("--max-depth")) config.max_reflection_depth = opts.max_depth;
    if (cmd->count("--top-k")) config.top_k = opts.top_k;
    if (cmd->count("--format")) {
        config.output_format = gam::output_format_from_string(opts.format);
    }
    if (cmd->count("--tools")) config.enabled_tools = gam::parse_tool_list(opts.tools);
    if (cmd->count("--context-budget")) config.context_budget = opts.context_budget;
    return config;
}

std::vector<gam::Session> load_sessions_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw gam::IoError("cannot open sessions file: " + path);
    }
    std::vector<gam::Session> sessions;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (gam::is_blank(line)) continue;
        const auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw gam::Error("sessions row " + std::to_string(row) + ": not a JSON object");
        }
        try {
            gam::Session session;
            session.id = doc.at("id").get<std::int64_t>();
            session.content = doc.at("content").get<std::string>();
            if (session.content.empty()) {
                throw gam::Error("sessions row " + std::to_string(row) + ": content is empty");
            }
            if (const auto it = doc.find("created_at"); it != doc.end() && it->is_string()) {
                session.created_at = it->get<std::string>();
            }
            if (const auto it = doc.find("metadata"); it != doc.end() && it->is_object()) {
                for (const auto& [key, value] : it->items()) {
                    if (!value.is_string()) {
                        throw gam::Error("sessions row " + std::to_string(row) +
                                         ": metadata values must be strings");
                    }
                    session.metadata[key] = value.get<std::string>();
                }
            }
            sessions.push_back(std::move(session));
        } catch (const nlohmann::json::exception& e) {
            throw gam::Error("sessions row " + std::to_string(row) + ": " + e.what());
        }
    }
    return sessions;
}

int cmd_ingest(const std::string& sessions_file, gam::EngineConfig config) {
    const auto sessions = load_sessions_jsonl(sessions_file);
    gam::Engine engine(std::move(config));
    std::size_t pages = 0;
    std::size_t memos = 0;
    for (const auto& session : sessions) {
        const auto summary = engine.ingest_session(session);
        pages += summary.page_ids.size();
        memos += summary.memos_added;
    }
    engine.persist_store();
    std::cout << sessions.size() << " sessions, " << pages << " pages, " << memos << " memos\n";
    return 0;
}

int cmd_research(const std::string& request_text, gam::EngineConfig config) {
    if (!gam::store_exists(config.store_path)) {
        std::cerr << "no store at " << config.store_path.string() << "\n";
        return kExitBadInput;
    }
    const auto trace_path = config.store_path / "trace.json";
    gam::Engine engine(std::move(config));
    try {
        const auto result = engine.research(gam::Request{request_text, {}});
        std::ofstream(trace_path) << gam::trace_json(result.trace);
        std::cout << result.context.context << "\n";
        return 0;
    } catch (const gam::ResearchAborted& e) {
        std::ofstream(trace_path) << gam::trace_json(e.trace());
        std::cerr << "research aborted: " << e.what() << "\n";
        return kExitBackend;
    }
}

int cmd_eval(const std::string& dataset_file, const std::string& mode_name,
             const std::string& report_path, gam::EngineConfig config) {
    const auto mode = gam::eval_mode_from_string(mode_name);
    const auto dataset = gam::load_dataset_jsonl(dataset_file);
    const auto backend = gam::make_backend(config);

    gam::EvalConfig eval_config;
    eval_config.memorizer = gam::memorizer_config(config);
    eval_config.researcher = gam::researcher_config(config);
    eval_config.rag.segment_tokens = config.page_size;
    eval_config.rag.top_k = config.top_k;
    eval_config.chunk_window = config.page_size;

    const auto report = gam::run_benchmark(dataset, mode, *backend, eval_config);
    std::cout << gam::report_table(report);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) {
            throw gam::IoError("cannot write report: " + report_path);
        }
        out << gam::report_json(report);
    }
    return 0;
}

int cmd_serve(const std::string& host, int port, gam::EngineConfig config) {
    if (!gam::store_exists(config.store_path)) {
        std::cerr << "no store at " << config.store_path.string() << "\n";
        return kExitBadInput;
    }
    gam::Engine engine(std::move(config));
    gam::Service service(engine);
    std::cout << "serving on " << host << ":" << port << "\n" << std::flush;
    if (!service.listen(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agentic memory engine: offline memorizer, online researcher"};
    app.require_subcommand(1);

    CommonOpts ingest_opts;
    std::string sessions_file;
    auto* ingest_cmd = app.add_subcommand("ingest", "ingest a JSONL session stream");
    ingest_cmd->add_option("sessions", sessions_file, "sessions JSONL file")->required();
    add_common(ingest_cmd, ingest_opts);

    CommonOpts research_opts;
    std::string request_text;
    auto* research_cmd = app.add_subcommand("research", "research a request over the store");
    research_cmd->add_option("request", request_text, "request text")->required();
    add_common(research_cmd, research_opts);

    CommonOpts eval_opts;
    std::string dataset_file;
    std::string mode_name = "gam";
    std::string report_path;
    auto* eval_cmd = app.add_subcommand("eval", "run a QA benchmark");
    eval_cmd->add_option("dataset", dataset_file, "dataset JSONL file")->required();
    eval_cmd->add_option("--mode", mode_name,
                         "gam, rag, chunked-max, memory-only or research-only");
    eval_cmd->add_option("--report", report_path, "write report JSON here");
    add_common(eval_cmd, eval_opts);

    CommonOpts serve_opts;
    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "serve the HTTP API");
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "bind port");
    add_common(serve_cmd, serve_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed()) {
            return cmd_ingest(sessions_file, build_config(ingest_cmd, ingest_opts));
        }
        if (research_cmd->parsed()) {
            return cmd_research(request_text, build_config(research_cmd, research_opts));
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(dataset_file, mode_name, report_path,
                            build_config(eval_cmd, eval_opts));
        }
        if (serve_cmd->parsed()) {
            return cmd_serve(host, port, build_config(serve_cmd, serve_opts));
        }
    } catch (const gam::BackendError& e) {
        std::cerr << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const gam::EmptyCompletion& e) {
        std::cerr << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const gam::NoMatchingRule& e) {
        std::cerr << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const gam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
    return 0;
}
