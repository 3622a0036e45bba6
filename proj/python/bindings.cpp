#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <string>
#include <vector>

#include "gam/backend.hpp"
#include "gam/config.hpp"
#include "gam/errors.hpp"
#include "gam/eval.hpp"
#include "gam/memorizer.hpp"
#include "gam/pagestore.hpp"
#include "gam/prompts.hpp"
#include "gam/researcher.hpp"
#include "gam/storage.hpp"
#include "gam/text.hpp"

namespace py = pybind11;

namespace {

// Lets python classes implement the backend interface; the override hook
// re-acquires the GIL, so completions may arrive from worker threads.
class PyModelBackend : public gam::ModelBackend {
public:
    using gam::ModelBackend::ModelBackend;

    std::string complete(const gam::ChatExchange& exchange) override {
        PYBIND11_OVERRIDE_PURE(std::string, gam::ModelBackend, complete, exchange);
    }
};

class PyEmbeddingProvider : public gam::EmbeddingProvider {
public:
    using gam::EmbeddingProvider::EmbeddingProvider;

    std::size_t dimension() const override {
        PYBIND11_OVERRIDE_PURE(std::size_t, gam::EmbeddingProvider, dimension);
    }

    std::vector<float> embed(const std::string& text) const override {
        PYBIND11_OVERRIDE_PURE(std::vector<float>, gam::EmbeddingProvider, embed, text);
    }
};

gam::ScriptRule::Match match_kind(const std::string& kind) {
    if (kind == "substring") return gam::ScriptRule::Match::substring;
    if (kind == "prefix") return gam::ScriptRule::Match::prefix;
    if (kind == "exact") return gam::ScriptRule::Match::exact;
    if (kind == "regex") return gam::ScriptRule::Match::regex;
    throw gam::Error("unknown script rule kind: " + kind);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "agentic memory engine: offline memorizer, online researcher";

    // --- errors ---
    static py::exception<gam::Error> py_error(m, "Error", PyExc_RuntimeError);
    py::register_exception<gam::BackendError>(m, "BackendError", py_error.ptr());
    py::register_exception<gam::EmptyCompletion>(m, "EmptyCompletion", py_error.ptr());
    py::register_exception<gam::NoMatchingRule>(m, "NoMatchingRule", py_error.ptr());
    py::register_exception<gam::MissingBinding>(m, "MissingBinding", py_error.ptr());
    py::register_exception<gam::IdMismatch>(m, "IdMismatch", py_error.ptr());
    py::register_exception<gam::DimensionMismatch>(m, "DimensionMismatch", py_error.ptr());
    py::register_exception<gam::IoError>(m, "IoError", py_error.ptr());
    py::register_exception<gam::CorruptManifest>(m, "CorruptManifest", py_error.ptr());
    py::register_exception<gam::OutOfOrderSession>(m, "OutOfOrderSession", py_error.ptr());
    py::register_exception<gam::ConcurrentWrite>(m, "ConcurrentWrite", py_error.ptr());
    py::register_exception<gam::PlanParseError>(m, "PlanParseError", py_error.ptr());
    py::register_exception<gam::IntegrationParseError>(m, "IntegrationParseError", py_error.ptr());
    py::register_exception<gam::ReflectionParseError>(m, "ReflectionParseError", py_error.ptr());

    static py::exception<gam::ResearchAborted> py_aborted(m, "ResearchAborted", py_error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const gam::ResearchAborted& e) {
            py::object instance = py::reinterpret_borrow<py::object>(py_aborted.ptr())(e.what());
            instance.attr("trace_json") = gam::trace_json(e.trace());
            PyErr_SetObject(py_aborted.ptr(), instance.ptr());
        }
    });

    // --- text ---
    m.def(
        "tokenize", [](const std::string& text) { return gam::tokenize(text).tokens; },
        py::arg("text"));
    m.def(
        "count_tokens", [](const std::string& text) { return gam::count_tokens(text); },
        py::arg("text"));
    m.def(
        "segment_into_pages",
        [](const std::string& text, std::size_t page_size) {
            return gam::segment_into_pages(text, page_size);
        },
        py::arg("text"), py::arg("page_size"));
    m.def(
        "truncate_middle",
        [](const std::string& text, std::size_t budget) {
            return gam::truncate_middle(text, budget);
        },
        py::arg("text"), py::arg("budget"));
    m.def(
        "fnv1a64", [](const std::string& data) { return gam::fnv1a64(data); }, py::arg("data"));
    m.def(
        "is_blank", [](const std::string& text) { return gam::is_blank(text); }, py::arg("text"));

    // --- metrics ---
    m.def("normalize_answer", &gam::normalize_answer, py::arg("text"));
    m.def("token_f1", &gam::token_f1, py::arg("prediction"), py::arg("golds"));
    m.def(
        "bleu1",
        [](const std::string& prediction, const std::vector<std::string>& golds,
           bool brevity_penalty) {
            gam::BleuOptions options;
            options.brevity_penalty = brevity_penalty;
            return gam::bleu1(prediction, golds, options);
        },
        py::arg("prediction"), py::arg("golds"), py::arg("brevity_penalty") = true);

    // --- backend ---
    py::class_<gam::ChatMessage> message(m, "ChatMessage");
    py::enum_<gam::ChatMessage::Role>(message, "Role")
        .value("user", gam::ChatMessage::Role::user)
        .value("assistant", gam::ChatMessage::Role::assistant);
    message
        .def(py::init([](gam::ChatMessage::Role role, std::string content) {
                 return gam::ChatMessage{role, std::move(content)};
             }),
             py::arg("role"), py::arg("content"))
        .def_readwrite("role", &gam::ChatMessage::role)
        .def_readwrite("content", &gam::ChatMessage::content);

    py::class_<gam::ChatExchange>(m, "ChatExchange")
        .def(py::init<>())
        .def_readwrite("system", &gam::ChatExchange::system)
        .def_readwrite("messages", &gam::ChatExchange::messages)
        .def_readwrite("max_output_tokens", &gam::ChatExchange::max_output_tokens)
        .def_readwrite("temperature", &gam::ChatExchange::temperature)
        .def("last_user_message", &gam::ChatExchange::last_user_message);

    py::class_<gam::ModelBackend, PyModelBackend>(m, "ModelBackend")
        .def(py::init<>())
        .def("complete", &gam::ModelBackend::complete, py::arg("exchange"));

    py::class_<gam::ScriptRule>(m, "ScriptRule")
        .def(py::init([](std::string pattern, std::string response, const std::string& kind,
                         std::optional<std::size_t> max_uses) {
                 gam::ScriptRule rule;
                 rule.pattern = std::move(pattern);
                 rule.match = match_kind(kind);
                 rule.response = std::move(response);
                 rule.max_uses = max_uses;
                 return rule;
             }),
             py::arg("pattern"), py::arg("response"), py::arg("kind") = "substring",
             py::arg("max_uses") = std::nullopt)
        .def_readwrite("pattern", &gam::ScriptRule::pattern)
        .def_readwrite("response", &gam::ScriptRule::response);

    py::class_<gam::ScriptedBackend, gam::ModelBackend>(m, "ScriptedBackend")
        .def(py::init([]() { return std::make_unique<gam::ScriptedBackend>(); }))
        .def(py::init([](const std::vector<gam::ScriptRule>& rules) {
                 return std::make_unique<gam::ScriptedBackend>(rules);
             }),
             py::arg("rules"))
        .def_static(
            "from_json",
            [](const std::string& json_text) {
                return std::make_unique<gam::ScriptedBackend>(
                    gam::script_rules_from_json(json_text));
            },
            py::arg("json_text"))
        .def_static(
            "from_file",
            [](const std::filesystem::path& path) {
                return std::make_unique<gam::ScriptedBackend>(gam::script_rules_from_file(path));
            },
            py::arg("path"))
        .def("add_rule",
             [](gam::ScriptedBackend& backend, const std::string& pattern,
                const std::string& response, const std::string& kind,
                std::optional<std::size_t> max_uses) {
                 gam::ScriptRule rule;
                 rule.pattern = pattern;
                 rule.match = match_kind(kind);
                 rule.response = response;
                 rule.max_uses = max_uses;
                 backend.add_rule(std::move(rule));
             },
             py::arg("pattern"), py::arg("response"), py::arg("kind") = "substring",
             py::arg("max_uses") = std::nullopt)
        .def_property_readonly("call_count", &gam::ScriptedBackend::call_count);

    // --- page store ---
    py::enum_<gam::RetrievalTool>(m, "RetrievalTool")
        .value("bm25", gam::RetrievalTool::bm25)
        .value("embedding", gam::RetrievalTool::embedding)
        .value("page_id", gam::RetrievalTool::page_id);

    py::class_<gam::Page>(m, "Page")
        .def(py::init([](gam::PageId id, std::int64_t session_id, std::string header,
                         std::string content) {
                 return gam::Page{id, session_id, std::move(header), std::move(content)};
             }),
             py::arg("id"), py::arg("session_id") = 0, py::arg("header") = "",
             py::arg("content") = "")
        .def_readwrite("id", &gam::Page::id)
        .def_readwrite("session_id", &gam::Page::session_id)
        .def_readwrite("header", &gam::Page::header)
        .def_readwrite("content", &gam::Page::content);

    py::class_<gam::RetrievalResult>(m, "RetrievalResult")
        .def_readonly("page_id", &gam::RetrievalResult::page_id)
        .def_readonly("score", &gam::RetrievalResult::score)
        .def_readonly("tool", &gam::RetrievalResult::tool);

    py::class_<gam::EmbeddingProvider, PyEmbeddingProvider,
               std::shared_ptr<gam::EmbeddingProvider>>(m, "EmbeddingProvider")
        .def(py::init<>())
        .def("dimension", &gam::EmbeddingProvider::dimension)
        .def("embed", &gam::EmbeddingProvider::embed, py::arg("text"));

    py::class_<gam::HashingEmbedder, gam::EmbeddingProvider,
               std::shared_ptr<gam::HashingEmbedder>>(m, "HashingEmbedder")
        .def(py::init<std::size_t>(), py::arg("dim") = 256);

    py::class_<gam::PageStore::Lookup>(m, "StoreLookup")
        .def_readonly("pages", &gam::PageStore::Lookup::pages)
        .def_readonly("missing", &gam::PageStore::Lookup::missing);

    py::class_<gam::PageStore>(m, "PageStore")
        .def(py::init([](std::shared_ptr<gam::EmbeddingProvider> provider, bool index_headers) {
                 return gam::PageStore(std::move(provider), index_headers);
             }),
             py::arg("provider") = nullptr, py::arg("index_headers") = true)
        .def("append", &gam::PageStore::append, py::arg("page"))
        .def("__len__", &gam::PageStore::size)
        .def("size", &gam::PageStore::size)
        .def("empty", &gam::PageStore::empty)
        .def("page", &gam::PageStore::page, py::arg("id"),
             py::return_value_policy::reference_internal)
        .def("pages", &gam::PageStore::pages, py::return_value_policy::reference_internal)
        .def("contains", &gam::PageStore::contains, py::arg("id"))
        .def(
            "get_by_ids",
            [](const gam::PageStore& store, const std::vector<gam::PageId>& ids) {
                return store.get_by_ids(ids);
            },
            py::arg("ids"))
        .def("search_bm25", &gam::PageStore::search_bm25, py::arg("query"), py::arg("k"))
        .def(
            "search_embedding",
            [](const gam::PageStore& store, const std::string& query, std::size_t k) {
                return store.search_embedding(query, k);
            },
            py::arg("query"), py::arg("k"))
        .def("avg_doc_length", &gam::PageStore::avg_doc_length)
        .def("searchable_text", &gam::PageStore::searchable_text, py::arg("page"))
        .def_property_readonly("read_count", &gam::PageStore::read_count);

    // --- memorizer ---
    py::class_<gam::Session>(m, "Session")
        .def(py::init([](std::int64_t id, std::string content,
                         std::optional<std::string> created_at,
                         std::map<std::string, std::string> metadata) {
                 return gam::Session{id, std::move(content), std::move(created_at),
                                     std::move(metadata)};
             }),
             py::arg("id"), py::arg("content"), py::arg("created_at") = std::nullopt,
             py::arg("metadata") = std::map<std::string, std::string>{})
        .def_readwrite("id", &gam::Session::id)
        .def_readwrite("content", &gam::Session::content)
        .def_readwrite("created_at", &gam::Session::created_at)
        .def_readwrite("metadata", &gam::Session::metadata);

    py::class_<gam::Memo>(m, "Memo")
        .def(py::init([](std::string text, std::vector<gam::PageId> source_page_ids,
                         std::int64_t session_id) {
                 return gam::Memo{std::move(text), std::move(source_page_ids), session_id};
             }),
             py::arg("text"), py::arg("source_page_ids") = std::vector<gam::PageId>{},
             py::arg("session_id") = 0)
        .def_readwrite("text", &gam::Memo::text)
        .def_readwrite("source_page_ids", &gam::Memo::source_page_ids)
        .def_readwrite("session_id", &gam::Memo::session_id);

    py::class_<gam::MemoryState>(m, "MemoryState")
        .def(py::init<>())
        .def("append", &gam::MemoryState::append, py::arg("memo"))
        .def("memos", &gam::MemoryState::memos, py::return_value_policy::reference_internal)
        .def("__len__", &gam::MemoryState::size)
        .def("size", &gam::MemoryState::size)
        .def("empty", &gam::MemoryState::empty)
        .def("last_session_id", &gam::MemoryState::last_session_id);

    m.def("render_memory", &gam::render_memory, py::arg("memory"));

    py::class_<gam::MemorizerConfig>(m, "MemorizerConfig")
        .def(py::init<>())
        .def_readwrite("page_size", &gam::MemorizerConfig::page_size)
        .def_readwrite("memo_budget", &gam::MemorizerConfig::memo_budget)
        .def_readwrite("header_budget", &gam::MemorizerConfig::header_budget)
        .def_readwrite("context_budget", &gam::MemorizerConfig::context_budget)
        .def_readwrite("max_output_tokens", &gam::MemorizerConfig::max_output_tokens)
        .def_readwrite("temperature", &gam::MemorizerConfig::temperature);

    py::class_<gam::IngestResult>(m, "IngestResult")
        .def_readonly("memory", &gam::IngestResult::memory)
        .def_readonly("page_ids", &gam::IngestResult::page_ids);

    m.def("memorize", &gam::memorize, py::arg("session_chunk"), py::arg("memory"),
          py::arg("backend"), py::arg("config") = gam::MemorizerConfig{},
          py::call_guard<py::gil_scoped_release>());
    m.def("make_header", &gam::make_header, py::arg("session_chunk"), py::arg("memory"),
          py::arg("backend"), py::arg("config") = gam::MemorizerConfig{},
          py::call_guard<py::gil_scoped_release>());
    m.def("ingest", &gam::ingest, py::arg("session"), py::arg("memory"), py::arg("store"),
          py::arg("backend"), py::arg("config") = gam::MemorizerConfig{},
          py::call_guard<py::gil_scoped_release>());

    // --- researcher ---
    py::enum_<gam::Termination>(m, "Termination")
        .value("sufficient", gam::Termination::sufficient)
        .value("no_new_calls", gam::Termination::no_new_calls)
        .value("depth_reached", gam::Termination::depth_reached)
        .value("memory_sufficient", gam::Termination::memory_sufficient);

    py::enum_<gam::OutputFormat>(m, "OutputFormat")
        .value("integration_only", gam::OutputFormat::integration_only)
        .value("integration_with_page", gam::OutputFormat::integration_with_page)
        .value("integration_with_extraction", gam::OutputFormat::integration_with_extraction);

    py::class_<gam::Request>(m, "Request")
        .def(py::init([](std::string text, std::vector<std::string> refined_from) {
                 return gam::Request{std::move(text), std::move(refined_from)};
             }),
             py::arg("text"), py::arg("refined_from") = std::vector<std::string>{})
        .def_readwrite("text", &gam::Request::text)
        .def_readwrite("refined_from", &gam::Request::refined_from);

    py::class_<gam::ToolCall>(m, "ToolCall")
        .def_readonly("tool", &gam::ToolCall::tool)
        .def_readonly("query", &gam::ToolCall::query)
        .def_readonly("ids", &gam::ToolCall::ids);

    py::class_<gam::SearchPlan>(m, "SearchPlan")
        .def_readonly("reasoning", &gam::SearchPlan::reasoning)
        .def_readonly("sufficient_from_memory", &gam::SearchPlan::sufficient_from_memory)
        .def_readonly("calls", &gam::SearchPlan::calls);

    py::class_<gam::CallRecord>(m, "CallRecord")
        .def_readonly("call", &gam::CallRecord::call)
        .def_readonly("returned", &gam::CallRecord::returned)
        .def_readonly("missing", &gam::CallRecord::missing)
        .def_readonly("error", &gam::CallRecord::error);

    py::class_<gam::IntegrationResult>(m, "IntegrationResult")
        .def_readonly("text", &gam::IntegrationResult::text)
        .def_readonly("cited_page_ids", &gam::IntegrationResult::cited_page_ids);

    py::class_<gam::ReflectionOutcome>(m, "ReflectionOutcome")
        .def_readonly("sufficient", &gam::ReflectionOutcome::sufficient)
        .def_readonly("refined_request", &gam::ReflectionOutcome::refined_request)
        .def_readonly("reasoning", &gam::ReflectionOutcome::reasoning);

    py::class_<gam::ResearchIteration>(m, "ResearchIteration")
        .def_readonly("request_text", &gam::ResearchIteration::request_text)
        .def_readonly("plan", &gam::ResearchIteration::plan)
        .def_readonly("new_page_ids", &gam::ResearchIteration::new_page_ids)
        .def_readonly("call_records", &gam::ResearchIteration::call_records)
        .def_readonly("integration", &gam::ResearchIteration::integration)
        .def_readonly("reflection", &gam::ResearchIteration::reflection);

    py::class_<gam::ResearchTrace>(m, "ResearchTrace")
        .def_readonly("original_request", &gam::ResearchTrace::original_request)
        .def_readonly("iterations", &gam::ResearchTrace::iterations)
        .def_readonly("termination", &gam::ResearchTrace::termination)
        .def_readonly("extraction_degraded", &gam::ResearchTrace::extraction_degraded)
        .def("to_json", [](const gam::ResearchTrace& trace) { return gam::trace_json(trace); });

    py::class_<gam::FinalContext>(m, "FinalContext")
        .def_readonly("context", &gam::FinalContext::context)
        .def_readonly("format", &gam::FinalContext::format)
        .def_readonly("extraction_degraded", &gam::FinalContext::extraction_degraded);

    py::class_<gam::ResearcherConfig>(m, "ResearcherConfig")
        .def(py::init<>())
        .def_readwrite("max_reflection_depth", &gam::ResearcherConfig::max_reflection_depth)
        .def_readwrite("top_k", &gam::ResearcherConfig::top_k)
        .def_readwrite("output_format", &gam::ResearcherConfig::output_format)
        .def_readwrite("enabled_tools", &gam::ResearcherConfig::enabled_tools)
        .def_readwrite("parse_retries", &gam::ResearcherConfig::parse_retries)
        .def_readwrite("reflect_sees_pages", &gam::ResearcherConfig::reflect_sees_pages)
        .def_readwrite("context_budget", &gam::ResearcherConfig::context_budget)
        .def_readwrite("max_output_tokens", &gam::ResearcherConfig::max_output_tokens)
        .def_readwrite("temperature", &gam::ResearcherConfig::temperature);

    py::class_<gam::ResearchResult>(m, "ResearchResult")
        .def_readonly("context", &gam::ResearchResult::context)
        .def_readonly("trace", &gam::ResearchResult::trace);

    m.def("render_page", &gam::render_page, py::arg("page"));
    m.def("extract_json_object", &gam::extract_json_object, py::arg("completion"));
    m.def(
        "toolkit_description",
        [](const std::vector<gam::RetrievalTool>& enabled) {
            return gam::toolkit_description(enabled);
        },
        py::arg("enabled") = std::vector<gam::RetrievalTool>{});
    m.def("research", &gam::research, py::arg("request"), py::arg("memory"), py::arg("store"),
          py::arg("backend"), py::arg("config") = gam::ResearcherConfig{},
          py::call_guard<py::gil_scoped_release>());
    m.def("trace_json", &gam::trace_json, py::arg("trace"));
    m.def("final_context_json", &gam::final_context_json, py::arg("context"), py::arg("trace"));

    // --- storage ---
    py::class_<gam::StoreManifest>(m, "StoreManifest")
        .def_readonly("version", &gam::StoreManifest::version)
        .def_readonly("page_count", &gam::StoreManifest::page_count)
        .def_readonly("memo_count", &gam::StoreManifest::memo_count)
        .def_readonly("page_size", &gam::StoreManifest::page_size)
        .def_readonly("checksum_pages", &gam::StoreManifest::checksum_pages)
        .def_readonly("checksum_memos", &gam::StoreManifest::checksum_memos);

    py::class_<gam::LoadedState>(m, "LoadedState")
        .def_readonly("store", &gam::LoadedState::store)
        .def_readonly("memory", &gam::LoadedState::memory)
        .def_readonly("manifest", &gam::LoadedState::manifest);

    m.def("persist", &gam::persist, py::arg("store"), py::arg("memory"), py::arg("dir"),
          py::arg("page_size") = 2048);
    m.def(
        "load",
        [](const std::filesystem::path& dir) { return gam::load(dir); }, py::arg("dir"));
    m.def("store_exists", &gam::store_exists, py::arg("dir"));
}
