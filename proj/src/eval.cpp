#include "gam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gam/text.hpp"

namespace gam {

using ordered_json = nlohmann::ordered_json;

std::string to_string(EvalMode mode) {
    switch (mode) {
        case EvalMode::gam: return "gam";
        case EvalMode::rag: return "rag";
        case EvalMode::chunked_max: return "chunked-max";
        case EvalMode::memory_only: return "memory-only";
        case EvalMode::research_only: return "research-only";
    }
    return "unknown";
}

EvalMode eval_mode_from_string(const std::string& name) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "gam") return EvalMode::gam;
    if (key == "rag") return EvalMode::rag;
    if (key == "chunked-max") return EvalMode::chunked_max;
    if (key == "memory-only") return EvalMode::memory_only;
    if (key == "research-only") return EvalMode::research_only;
    throw Error("unknown eval mode: " + name);
}

std::vector<std::string> normalize_answer(const std::string& text) {
    std::vector<std::string> tokens = tokenize(text).tokens;
    std::erase_if(tokens, [](const std::string& token) {
        return token == "a" || token == "an" || token == "the";
    });
    return tokens;
}

namespace {

std::map<std::string, int> bag(const std::vector<std::string>& tokens) {
    std::map<std::string, int> counts;
    for (const auto& token : tokens) {
        ++counts[token];
    }
    return counts;
}

double f1_against(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    const auto pred_bag = bag(pred);
    const auto gold_bag = bag(gold);
    int overlap = 0;
    for (const auto& [token, count] : pred_bag) {
        const auto it = gold_bag.find(token);
        if (it != gold_bag.end()) {
            overlap += std::min(count, it->second);
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

double bleu1_against(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                     const BleuOptions& options) {
    if (pred.empty()) return 0.0;
    const auto gold_bag = bag(gold);
    int clipped = 0;
    for (const auto& [token, count] : bag(pred)) {
        const auto it = gold_bag.find(token);
        if (it != gold_bag.end()) {
            clipped += std::min(count, it->second);
        }
    }
    double score = static_cast<double>(clipped) / static_cast<double>(pred.size());
    if (options.brevity_penalty) {
        const double c = static_cast<double>(pred.size());
        const double r = static_cast<double>(gold.size());
        if (c <= r) {
            score *= std::exp(1.0 - r / c);
        }
    }
    return score;
}

}  // namespace

double token_f1(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty()) {
        throw Error("token_f1: golds must not be empty");
    }
    const auto pred = normalize_answer(prediction);
    double best = 0.0;
    for (const auto& gold : golds) {
        best = std::max(best, f1_against(pred, normalize_answer(gold)));
    }
    return best;
}

double bleu1(const std::string& prediction, const std::vector<std::string>& golds,
             const BleuOptions& options) {
    if (golds.empty()) {
        throw Error("bleu1: golds must not be empty");
    }
    const auto pred = tokenize(prediction).tokens;
    double best = 0.0;
    for (const auto& gold : golds) {
        best = std::max(best, bleu1_against(pred, tokenize(gold).tokens, options));
    }
    return best;
}

namespace {

std::string concat_history(const QaExample& example) {
    std::string out;
    for (const auto& session : example.history) {
        if (!out.empty()) out += "\n\n";
        out += session.content;
    }
    return out;
}

std::vector<std::string> effective_golds(const QaExample& example) {
    if (!example.gold_answers.empty()) return example.gold_answers;
    if (example.gold_index && *example.gold_index < example.choices.size()) {
        return {example.choices[*example.gold_index]};
    }
    throw Error("example has neither gold answers nor a gold choice");
}

void score_against_golds(ExampleScore& score, const QaExample& example,
                         const std::string& prediction, const EvalConfig& config) {
    score.prediction = prediction;
    const auto golds = effective_golds(example);
    score.f1 = token_f1(prediction, golds);
    score.bleu1 = gam::bleu1(prediction, golds, config.bleu);
    if (!example.choices.empty() && example.gold_index) {
        score.correct = normalize_answer(prediction) ==
                        normalize_answer(example.choices[*example.gold_index]);
    }
}

struct IngestedExample {
    PageStore store;
    MemoryState memory;
};

IngestedExample ingest_history(const QaExample& example, ModelBackend& backend,
                               const EvalConfig& config) {
    IngestedExample state;
    for (const auto& session : example.history) {
        auto result = ingest(session, state.memory, state.store, backend, config.memorizer);
        state.memory = std::move(result.memory);
    }
    return state;
}

}  // namespace

std::string rag_context(const QaExample& example, const RagConfig& config) {
    const std::string history = concat_history(example);
    if (history.empty()) {
        throw Error("rag_context: example history is empty");
    }
    const auto segments = segment_into_pages(history, config.segment_tokens);

    PageStore store;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        Page page;
        page.id = static_cast<PageId>(i);
        page.content = segments[i];
        store.append(std::move(page));
    }

    std::vector<RetrievalResult> hits;
    if (config.retriever == RetrievalTool::embedding) {
        hits = store.search_embedding(example.question, config.top_k);
    } else {
        hits = store.search_bm25(example.question, config.top_k);
    }

    std::vector<std::size_t> picked;
    for (const auto& hit : hits) {
        picked.push_back(static_cast<std::size_t>(hit.page_id));
    }
    for (std::size_t i = 0; i < segments.size() && picked.size() < config.top_k; ++i) {
        if (std::find(picked.begin(), picked.end(), i) == picked.end()) {
            picked.push_back(i);
        }
    }

    std::string context;
    for (std::size_t index : picked) {
        if (!context.empty()) context += "\n\n";
        context += segments[index];
    }
    return context;
}

std::string answer_with_context(const std::string& context, const std::string& question,
                                ModelBackend& backend, const EvalConfig& config) {
    static const std::string system =
        "You answer questions about an agent's interaction history. Use only the provided "
        "context. Reply with the answer alone, as briefly as possible.";

    const std::string scaffold = "Context:\n\n\nQuestion:\n" + question + "\n\nAnswer:";
    const std::size_t budget = config.researcher.context_budget;
    const std::size_t fixed = count_tokens(system) + count_tokens(scaffold);
    const std::size_t room = budget > fixed + 2 ? budget - fixed : 2;
    std::string fitted = context;
    if (count_tokens(fitted) > room) {
        fitted = truncate_middle(fitted, room);
    }

    ChatExchange exchange;
    exchange.system = system;
    exchange.messages.push_back(
        {ChatMessage::Role::user,
         "Context:\n" + fitted + "\n\nQuestion:\n" + question + "\n\nAnswer:"});
    exchange.max_output_tokens = config.researcher.max_output_tokens;
    exchange.temperature = config.researcher.temperature;
    return backend.complete(exchange);
}

ExampleScore chunked_max_score(const QaExample& example, std::size_t window,
                               ModelBackend& backend, const EvalConfig& config) {
    if (window < 1) {
        throw Error("chunked_max_score: window must be at least 1");
    }
    const std::string history = concat_history(example);
    if (history.empty()) {
        throw Error("chunked_max_score: example history is empty");
    }
    const auto chunks = segment_into_pages(history, window);

    ExampleScore best;
    double best_f1 = -1.0;
    double max_bleu = 0.0;
    bool correct_known = false;
    bool any_correct = false;
    for (const auto& chunk : chunks) {
        const std::string prediction = answer_with_context(chunk, example.question, backend,
                                                           config);
        ExampleScore score;
        score_against_golds(score, example, prediction, config);
        score.context_tokens = count_tokens(chunk);
        max_bleu = std::max(max_bleu, score.bleu1);
        if (score.correct) {
            correct_known = true;
            any_correct = any_correct || *score.correct;
        }
        if (score.f1 > best_f1) {
            best_f1 = score.f1;
            best = std::move(score);
        }
    }
    best.bleu1 = max_bleu;
    if (correct_known) {
        best.correct = any_correct;
    }
    return best;
}

MetricReport run_benchmark(const std::vector<QaExample>& dataset, EvalMode mode,
                           ModelBackend& backend, const EvalConfig& config) {
    if (dataset.empty()) {
        throw Error("run_benchmark: dataset is empty");
    }

    MetricReport report;
    report.mode = mode;
    report.per_example.reserve(dataset.size());

    for (const auto& example : dataset) {
        ExampleScore score;
        try {
            switch (mode) {
                case EvalMode::gam: {
                    auto state = ingest_history(example, backend, config);
                    const auto result = research(Request{example.question, {}}, state.memory,
                                                 state.store, backend, config.researcher);
                    const std::string prediction = answer_with_context(
                        result.context.context, example.question, backend, config);
                    score_against_golds(score, example, prediction, config);
                    score.context_tokens = count_tokens(result.context.context);
                    break;
                }
                case EvalMode::memory_only: {
                    auto state = ingest_history(example, backend, config);
                    const std::string context = render_memory(state.memory);
                    const std::string prediction =
                        answer_with_context(context, example.question, backend, config);
                    score_against_golds(score, example, prediction, config);
                    score.context_tokens = count_tokens(context);
                    break;
                }
                case EvalMode::research_only: {
                    auto state = ingest_history(example, backend, config);
                    const auto result = research(Request{example.question, {}}, MemoryState{},
                                                 state.store, backend, config.researcher);
                    const std::string prediction = answer_with_context(
                        result.context.context, example.question, backend, config);
                    score_against_golds(score, example, prediction, config);
                    score.context_tokens = count_tokens(result.context.context);
                    break;
                }
                case EvalMode::rag: {
                    const std::string context = rag_context(example, config.rag);
                    const std::string prediction =
                        answer_with_context(context, example.question, backend, config);
                    score_against_golds(score, example, prediction, config);
                    score.context_tokens = count_tokens(context);
                    break;
                }
                case EvalMode::chunked_max: {
                    score = chunked_max_score(example, config.chunk_window, backend, config);
                    break;
                }
            }
        } catch (const Error& e) {
            score = ExampleScore{};
            score.errored = true;
            score.error = e.what();
            if (!example.choices.empty() && example.gold_index) {
                score.correct = false;
            }
        }
        report.per_example.push_back(std::move(score));
    }

    double f1_sum = 0.0;
    double bleu_sum = 0.0;
    double token_sum = 0.0;
    std::size_t correct_count = 0;
    std::size_t correct_total = 0;
    for (const auto& score : report.per_example) {
        f1_sum += score.f1;
        bleu_sum += score.bleu1;
        token_sum += static_cast<double>(score.context_tokens);
        if (score.correct) {
            ++correct_total;
            if (*score.correct) ++correct_count;
        }
    }
    const double n = static_cast<double>(report.per_example.size());
    report.mean_f1 = f1_sum / n;
    report.mean_bleu1 = bleu_sum / n;
    report.mean_context_tokens = token_sum / n;
    if (correct_total > 0) {
        report.accuracy = static_cast<double>(correct_count) / static_cast<double>(correct_total);
    }
    return report;
}

std::vector<QaExample> load_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset: " + path.string());
    }

    std::vector<QaExample> dataset;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (is_blank(line)) continue;
        const auto fail = [&row](const std::string& why) -> Error {
            return Error("dataset row " + std::to_string(row) + ": " + why);
        };
        const auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw fail("not a JSON object");
        }
        try {
            QaExample example;
            const auto history_it = doc.find("history");
            if (history_it == doc.end() || !history_it->is_array() || history_it->empty()) {
                throw fail("history must be a non-empty array");
            }
            for (const auto& entry : *history_it) {
                Session session;
                session.id = entry.at("id").get<std::int64_t>();
                session.content = entry.at("content").get<std::string>();
                if (session.content.empty()) {
                    throw fail("history entry has empty content");
                }
                example.history.push_back(std::move(session));
            }
            example.question = doc.at("question").get<std::string>();
            if (example.question.empty()) {
                throw fail("question is empty");
            }
            if (const auto it = doc.find("answers"); it != doc.end()) {
                example.gold_answers = it->get<std::vector<std::string>>();
            }
            if (const auto it = doc.find("choices"); it != doc.end()) {
                example.choices = it->get<std::vector<std::string>>();
            }
            if (const auto it = doc.find("gold_index"); it != doc.end() && !it->is_null()) {
                const auto index = it->get<std::int64_t>();
                if (index < 0 || static_cast<std::size_t>(index) >= example.choices.size()) {
                    throw fail("gold_index out of range");
                }
                example.gold_index = static_cast<std::size_t>(index);
            }
            if (const auto it = doc.find("category"); it != doc.end() && it->is_string()) {
                example.category = it->get<std::string>();
            }
            if (example.gold_answers.empty() && !example.gold_index) {
                throw fail("need answers or choices with gold_index");
            }
            dataset.push_back(std::move(example));
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
    }
    return dataset;
}

std::string report_json(const MetricReport& report) {
    ordered_json out;
    out["mode"] = to_string(report.mode);
    out["examples"] = report.per_example.size();
    out["mean_f1"] = report.mean_f1;
    out["mean_bleu1"] = report.mean_bleu1;
    if (report.accuracy) {
        out["accuracy"] = *report.accuracy;
    } else {
        out["accuracy"] = nullptr;
    }
    out["mean_context_tokens"] = report.mean_context_tokens;
    out["per_example"] = ordered_json::array();
    for (const auto& score : report.per_example) {
        ordered_json row;
        row["f1"] = score.f1;
        row["bleu1"] = score.bleu1;
        if (score.correct) {
            row["correct"] = *score.correct;
        } else {
            row["correct"] = nullptr;
        }
        row["context_tokens"] = score.context_tokens;
        row["prediction"] = score.prediction;
        row["errored"] = score.errored;
        row["error"] = score.error;
        out["per_example"].push_back(std::move(row));
    }
    return out.dump(2) + "\n";
}

std::string report_table(const MetricReport& report) {
    std::size_t errors = 0;
    for (const auto& score : report.per_example) {
        if (score.errored) ++errors;
    }

    char buffer[96];
    std::ostringstream out;
    out << "metric                mode=" << to_string(report.mode) << '\n';
    out << "--------------------  ----------\n";
    std::snprintf(buffer, sizeof buffer, "%-20s  %10zu\n", "examples",
                  report.per_example.size());
    out << buffer;
    std::snprintf(buffer, sizeof buffer, "%-20s  %10.4f\n", "mean_f1", report.mean_f1);
    out << buffer;
    std::snprintf(buffer, sizeof buffer, "%-20s  %10.4f\n", "mean_bleu1", report.mean_bleu1);
    out << buffer;
    if (report.accuracy) {
        std::snprintf(buffer, sizeof buffer, "%-20s  %10.4f\n", "accuracy", *report.accuracy);
    } else {
        std::snprintf(buffer, sizeof buffer, "%-20s  %10s\n", "accuracy", "-");
    }
    out << buffer;
    std::snprintf(buffer, sizeof buffer, "%-20s  %10.2f\n", "mean_context_tokens",
                  report.mean_context_tokens);
    out << buffer;
    std::snprintf(buffer, sizeof buffer, "%-20s  %10zu\n", "errors", errors);
    out << buffer;
    return out.str();
}

}  // namespace gam
