#include "gam/storage.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "gam/text.hpp"

namespace gam {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t value) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << value;
    return out.str();
}

std::string render_pages_jsonl(const PageStore& store) {
    std::string out;
    for (const auto& page : store.pages()) {
        ordered_json row;
        row["id"] = page.id;
        row["session_id"] = page.session_id;
        row["header"] = page.header;
        row["content"] = page.content;
        out += row.dump();
        out += '\n';
    }
    return out;
}

std::string render_memos_jsonl(const MemoryState& memory) {
    std::string out;
    for (const auto& memo : memory.memos()) {
        ordered_json row;
        row["session_id"] = memo.session_id;
        row["source_page_ids"] = memo.source_page_ids;
        row["text"] = memo.text;
        out += row.dump();
        out += '\n';
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open for reading: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

void persist(const PageStore& store, const MemoryState& memory,
             const std::filesystem::path& dir, std::size_t page_size) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create store directory " + dir.string() + ": " + ec.message());
    }

    const std::string pages = render_pages_jsonl(store);
    const std::string memos = render_memos_jsonl(memory);

    ordered_json manifest;
    manifest["version"] = 1;
    manifest["page_count"] = store.size();
    manifest["memo_count"] = memory.size();
    manifest["page_size"] = page_size;
    manifest["checksum_pages"] = hex64(fnv1a64(pages));
    manifest["checksum_memos"] = hex64(fnv1a64(memos));

    write_file(dir / "pages.jsonl", pages);
    write_file(dir / "memos.jsonl", memos);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

bool store_exists(const std::filesystem::path& dir) {
    return std::filesystem::exists(dir / "manifest.json");
}

LoadedState load(const std::filesystem::path& dir,
                 std::shared_ptr<const EmbeddingProvider> provider, bool index_headers) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw CorruptManifest("no manifest at " + manifest_path.string());
    }

    StoreManifest manifest;
    try {
        const auto doc = nlohmann::json::parse(read_file(manifest_path));
        manifest.version = doc.at("version").get<int>();
        manifest.page_count = doc.at("page_count").get<std::size_t>();
        manifest.memo_count = doc.at("memo_count").get<std::size_t>();
        manifest.page_size = doc.at("page_size").get<std::size_t>();
        manifest.checksum_pages = doc.at("checksum_pages").get<std::string>();
        manifest.checksum_memos = doc.at("checksum_memos").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptManifest(std::string("unreadable manifest: ") + e.what());
    }
    if (manifest.version != 1) {
        throw CorruptManifest("unsupported store version " + std::to_string(manifest.version));
    }

    const std::string pages_text = read_file(dir / "pages.jsonl");
    const std::string memos_text = read_file(dir / "memos.jsonl");
    if (hex64(fnv1a64(pages_text)) != manifest.checksum_pages) {
        throw CorruptManifest("pages.jsonl checksum mismatch");
    }
    if (hex64(fnv1a64(memos_text)) != manifest.checksum_memos) {
        throw CorruptManifest("memos.jsonl checksum mismatch");
    }

    LoadedState state{PageStore(std::move(provider), index_headers), MemoryState{}, manifest};

    std::istringstream pages_in(pages_text);
    std::string line;
    while (std::getline(pages_in, line)) {
        if (line.empty()) continue;
        try {
            const auto row = nlohmann::json::parse(line);
            Page page;
            page.id = row.at("id").get<PageId>();
            page.session_id = row.at("session_id").get<std::int64_t>();
            page.header = row.at("header").get<std::string>();
            page.content = row.at("content").get<std::string>();
            state.store.append(std::move(page));
        } catch (const nlohmann::json::exception& e) {
            throw CorruptManifest(std::string("bad pages.jsonl row: ") + e.what());
        }
    }
    if (state.store.size() != manifest.page_count) {
        throw CorruptManifest("page count mismatch: manifest says " +
                              std::to_string(manifest.page_count) + ", file holds " +
                              std::to_string(state.store.size()));
    }

    std::istringstream memos_in(memos_text);
    while (std::getline(memos_in, line)) {
        if (line.empty()) continue;
        try {
            const auto row = nlohmann::json::parse(line);
            Memo memo;
            memo.session_id = row.at("session_id").get<std::int64_t>();
            memo.source_page_ids = row.at("source_page_ids").get<std::vector<PageId>>();
            memo.text = row.at("text").get<std::string>();
            state.memory.append(std::move(memo));
        } catch (const nlohmann::json::exception& e) {
            throw CorruptManifest(std::string("bad memos.jsonl row: ") + e.what());
        }
    }
    if (state.memory.size() != manifest.memo_count) {
        throw CorruptManifest("memo count mismatch: manifest says " +
                              std::to_string(manifest.memo_count) + ", file holds " +
                              std::to_string(state.memory.size()));
    }
    return state;
}

}  // namespace gam
