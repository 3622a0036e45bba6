#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gam/backend.hpp"
#include "gam/memorizer.hpp"
#include "gam/researcher.hpp"

namespace gam {

// One QA record over an interaction history: the generic shape long-term
// memory benchmarks reduce to.
struct QaExample {
    std::vector<Session> history;
    std::string question;
    std::vector<std::string> gold_answers;
    std::vector<std::string> choices;
    std::optional<std::size_t> gold_index;
    std::string category;
};

enum class EvalMode { gam, rag, chunked_max, memory_only, research_only };

std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(const std::string& name);

struct ExampleScore {
    double f1 = 0.0;
    double bleu1 = 0.0;
    std::optional<bool> correct;
    std::size_t context_tokens = 0;
    std::string prediction;
    bool errored = false;
    std::string error;
};

struct MetricReport {
    EvalMode mode = EvalMode::gam;
    std::vector<ExampleScore> per_example;
    double mean_f1 = 0.0;
    double mean_bleu1 = 0.0;
    std::optional<double> accuracy;
    double mean_context_tokens = 0.0;
};

// Answer normalization: lowercase, punctuation stripped, articles dropped.
std::vector<std::string> normalize_answer(const std::string& text);

// Bag-of-tokens overlap F1 against each gold, best gold wins.
double token_f1(const std::string& prediction, const std::vector<std::string>& golds);

struct BleuOptions {
    bool brevity_penalty = true;
};

// Clipped unigram precision times brevity penalty, best gold wins.
double bleu1(const std::string& prediction, const std::vector<std::string>& golds,
             const BleuOptions& options = {});

struct RagConfig {
    std::size_t segment_tokens = 2048;
    std::size_t top_k = 5;
    RetrievalTool retriever = RetrievalTool::bm25;
};

// The retrieval-augmented baseline context: history split into fixed-size
// segments, top-k by the configured retriever. When retrieval returns fewer
// than k segments the context is padded with unretrieved segments in order,
// so a degenerate corpus still yields a context.
std::string rag_context(const QaExample& example, const RagConfig& config = {});

struct EvalConfig {
    MemorizerConfig memorizer;
    ResearcherConfig researcher;
    RagConfig rag;
    std::size_t chunk_window = 2048;
    BleuOptions bleu;
};

// One question-answering completion over an assembled context.
std::string answer_with_context(const std::string& context, const std::string& question,
                                ModelBackend& backend, const EvalConfig& config = {});

// Evaluates each chunk of the history independently and keeps the best score
// per metric.
ExampleScore chunked_max_score(const QaExample& example, std::size_t window,
                               ModelBackend& backend, const EvalConfig& config = {});

MetricReport run_benchmark(const std::vector<QaExample>& dataset, EvalMode mode,
                           ModelBackend& backend, const EvalConfig& config = {});

// JSONL rows: {"history":[{"id":int,"content":string}],"question":string,
// "answers":[string],"choices":[string]?,"gold_index":int?,"category":string?}
std::vector<QaExample> load_dataset_jsonl(const std::filesystem::path& path);

std::string report_json(const MetricReport& report);
std::string report_table(const MetricReport& report);

}  // namespace gam
