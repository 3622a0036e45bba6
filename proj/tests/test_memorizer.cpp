#include <doctest.h>

#include <string>
#include <vector>

#include "gam/memorizer.hpp"
#include "gam/text.hpp"
#include "support.hpp"

using namespace gam;

TEST_CASE("memory renders one bracketed line per memo") {
    MemoryState memory;
    memory.append({"Alice owns Rex.", {0}, 0});
    CHECK(render_memory(memory) == "[session 0 | pages 0] Alice owns Rex.");

    memory.append({"Rex learned to fetch.", {1, 2}, 1});
    CHECK(render_memory(memory) ==
          "[session 0 | pages 0] Alice owns Rex.\n"
          "[session 1 | pages 1,2] Rex learned to fetch.");
}

TEST_CASE("empty memory renders as the empty string") {
    CHECK(render_memory(MemoryState{}).empty());
}

TEST_CASE("memory append rejects session ids that go backwards") {
    MemoryState memory;
    memory.append({"first", {0}, 3});
    memory.append({"same session is fine", {1}, 3});
    CHECK_THROWS_AS(memory.append({"stale", {2}, 2}), OutOfOrderSession);
    CHECK(memory.size() == 2);
    CHECK(memory.last_session_id() == 3);
    CHECK(MemoryState{}.last_session_id() == -1);
}

TEST_CASE("memorize returns the completion as the memo text") {
    ScriptedBackend backend({gamtest::rule("New session excerpt:", "a tidy summary")});
    const Memo memo = memorize("the raw chunk", MemoryState{}, backend);
    CHECK(memo.text == "a tidy summary");
    CHECK(memo.source_page_ids.empty());
}

TEST_CASE("memorize shows the backend both memory and chunk") {
    ScriptedBackend inner({gamtest::rule("", "m")});
    gamtest::RecordingBackend backend(inner);
    MemoryState memory;
    memory.append({"Alice owns Rex.", {0}, 0});
    memorize("Rex fetched the ball.", memory, backend);
    const auto& prompt = backend.last().last_user_message();
    CHECK(prompt.find("[session 0 | pages 0] Alice owns Rex.") != std::string::npos);
    CHECK(prompt.find("Rex fetched the ball.") != std::string::npos);
    CHECK(prompt.find("Memo:") != std::string::npos);
}

TEST_CASE("memorize enforces the memo budget") {
    gamtest::TextGen gen(41);
    const std::string huge = gen.words(600, 600);
    ScriptedBackend backend({gamtest::rule("", huge)});
    MemorizerConfig config;
    config.memo_budget = 32;
    const Memo memo = memorize("chunk", MemoryState{}, backend, config);
    CHECK(count_tokens(memo.text) <= 32);
    CHECK(memo.text.find("...") != std::string::npos);
}

TEST_CASE("memorize rejects empty chunks and blank completions") {
    ScriptedBackend blank({gamtest::rule("", "   \n")});
    CHECK_THROWS_AS(memorize("", MemoryState{}, blank), Error);
    CHECK_THROWS_AS(memorize("chunk", MemoryState{}, blank), EmptyCompletion);
}

TEST_CASE("make_header returns the completion under its budget") {
    ScriptedBackend backend({gamtest::rule("Session excerpt:", "a landmark header")});
    CHECK(make_header("chunk", MemoryState{}, backend) == "a landmark header");

    gamtest::TextGen gen(42);
    ScriptedBackend long_backend({gamtest::rule("", gen.words(400, 400))});
    MemorizerConfig config;
    config.header_budget = 16;
    CHECK(count_tokens(make_header("chunk", MemoryState{}, long_backend, config)) <= 16);
}

TEST_CASE("make_header degrades to empty instead of failing") {
    ScriptedBackend blank({gamtest::rule("", " \t ")});
    CHECK(make_header("chunk", MemoryState{}, blank).empty());

    struct Refusing final : ModelBackend {
        std::string complete(const ChatExchange&) override {
            throw EmptyCompletion("nothing");
        }
    } refusing;
    CHECK(make_header("chunk", MemoryState{}, refusing).empty());

    CHECK_THROWS_AS(make_header("", MemoryState{}, blank), Error);
}

namespace {

ScriptedBackend ingest_backend() {
    return ScriptedBackend({gamtest::rule("New session excerpt:", "memo line"),
                            gamtest::rule("Session excerpt:", "header line")});
}

}  // namespace

TEST_CASE("ingest pages one session and appends one memo per chunk") {
    auto backend = ingest_backend();
    PageStore store;
    Session session;
    session.id = 1;
    session.content = "alpha beta gamma delta";

    const auto result = ingest(session, MemoryState{}, store, backend);
    CHECK(result.page_ids == std::vector<PageId>{0});
    REQUIRE(result.memory.size() == 1);
    CHECK(result.memory.memos()[0].text == "memo line");
    CHECK(result.memory.memos()[0].session_id == 1);
    CHECK(result.memory.memos()[0].source_page_ids == std::vector<PageId>{0});
    REQUIRE(store.size() == 1);
    CHECK(store.page(0).header == "header line");
    CHECK(store.page(0).content == "alpha beta gamma delta");
    CHECK(store.page(0).session_id == 1);
}

TEST_CASE("ingest splits long sessions losslessly") {
    gamtest::TextGen gen(43);
    auto backend = ingest_backend();
    PageStore store;
    MemorizerConfig config;
    config.page_size = 16;
    Session session;
    session.id = 1;
    session.content = gen.words(70, 70);

    const auto result = ingest(session, MemoryState{}, store, backend, config);
    CHECK(result.page_ids.size() == 5);
    CHECK(result.memory.size() == 5);
    std::string joined;
    for (PageId id : result.page_ids) {
        CHECK(count_tokens(store.page(id).content) <= 16);
        joined += store.page(id).content;
    }
    CHECK(joined == session.content);
}

TEST_CASE("ingest numbers pages after the existing store") {
    auto backend = ingest_backend();
    PageStore store;
    store.append(gamtest::make_page(0, 1, "", "existing page"));

    Session session;
    session.id = 2;
    session.content = "fresh content";
    const auto result = ingest(session, MemoryState{}, store, backend);
    CHECK(result.page_ids == std::vector<PageId>{1});
    CHECK(store.page(1).content == "fresh content");
}

TEST_CASE("each chunk memo sees the memos staged before it") {
    gamtest::TextGen gen(44);
    ScriptedBackend inner({gamtest::rule("New session excerpt:", "running memo"),
                           gamtest::rule("Session excerpt:", "hdr")});
    gamtest::RecordingBackend backend(inner);
    PageStore store;
    MemorizerConfig config;
    config.page_size = 8;
    Session session;
    session.id = 5;
    session.content = gen.words(20, 20);

    ingest(session, MemoryState{}, store, backend, config);
    const auto& exchanges = backend.exchanges();
    REQUIRE(exchanges.size() == 6);
    const auto& second_memo_prompt = exchanges[3].last_user_message();
    CHECK(second_memo_prompt.find("[session 5 | pages 0] running memo") != std::string::npos);
    const auto& second_header_prompt = exchanges[2].last_user_message();
    CHECK(second_header_prompt.find("running memo") != std::string::npos);
}

TEST_CASE("ingest rejects stale and empty sessions") {
    auto backend = ingest_backend();
    PageStore store;
    MemoryState memory;
    memory.append({"old", {0}, 4});

    Session stale;
    stale.id = 4;
    stale.content = "text";
    CHECK_THROWS_AS(ingest(stale, memory, store, backend), OutOfOrderSession);

    Session empty;
    empty.id = 9;
    CHECK_THROWS_AS(ingest(empty, memory, store, backend), Error);
}

TEST_CASE("ingest also orders against pages already stored") {
    auto backend = ingest_backend();
    PageStore store;
    store.append(gamtest::make_page(0, 7, "", "from session seven"));

    Session stale;
    stale.id = 6;
    stale.content = "late arrival";
    CHECK_THROWS_AS(ingest(stale, MemoryState{}, store, backend), OutOfOrderSession);
}

TEST_CASE("a mid-session failure leaves store and memory untouched") {
    gamtest::TextGen gen(45);
    ScriptedBackend backend({gamtest::rule("Session excerpt:", "hdr"),
                             gamtest::rule_once("New session excerpt:", "only memo")});
    PageStore store;
    store.append(gamtest::make_page(0, 1, "", "pre-existing"));
    MemoryState memory;
    memory.append({"kept", {0}, 1});

    MemorizerConfig config;
    config.page_size = 8;
    Session session;
    session.id = 2;
    session.content = gen.words(20, 20);

    CHECK_THROWS_AS(ingest(session, memory, store, backend, config), NoMatchingRule);
    CHECK(store.size() == 1);
    CHECK(memory.size() == 1);
    CHECK(memory.memos()[0].text == "kept");
}

TEST_CASE("ingest is deterministic for a fixed backend") {
    gamtest::TextGen gen(46);
    const std::string content = gen.words(40, 40);
    MemorizerConfig config;
    config.page_size = 8;

    auto run = [&] {
        auto backend = ingest_backend();
        PageStore store;
        Session session;
        session.id = 1;
        session.content = content;
        return ingest(session, MemoryState{}, store, backend, config);
    };
    const auto first = run();
    const auto second = run();
    CHECK(first.page_ids == second.page_ids);
    CHECK(render_memory(first.memory) == render_memory(second.memory));
}
