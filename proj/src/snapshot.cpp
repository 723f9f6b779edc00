#include "ragbench/indexing.hpp"

#include "ragbench/error.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace ragbench {

using json = nlohmann::json;

void save_snapshot(const IndexSet& index, const std::string& path) {
    json chunks = json::array();
    for (std::size_t i = 0; i < index.chunks.size(); ++i) {
        const auto& c = index.chunks[i];
        const auto& entry = index.vectors.entries().at(i);
        if (entry.chunk_id != c.chunk_id) throw IndexError("vector index out of step with chunk list");
        chunks.push_back({{"chunk_id", c.chunk_id},
                          {"doc_id", c.doc_id},
                          {"text", c.text},
                          {"token_start", c.token_span.start},
                          {"token_end", c.token_span.end},
                          {"token_count", c.token_count},
                          {"embedding", entry.embedding},
                          {"keyword_length", index.keywords.doc_length(c.chunk_id)}});
    }
    json postings = json::object();
    for (const auto& term : index.keywords.vocabulary()) {
        json list = json::array();
        for (const auto& p : index.keywords.postings(term)) list.push_back({p.chunk_id, p.tf});
        postings[term] = std::move(list);
    }
    const json doc = {
        {"magic", kSnapshotMagic},
        {"version", kSnapshotVersion},
        {"embedder_model", index.embedder_model},
        {"dimension", index.vectors.dimension()},
        {"chunking", {{"chunk_size", index.chunking.chunk_size}, {"overlap", index.chunking.overlap}}},
        {"bm25", {{"k1", index.keywords.params().k1}, {"b", index.keywords.params().b}}},
        {"chunks", std::move(chunks)},
        {"postings", std::move(postings)},
    };

    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IndexError("cannot write snapshot " + path);
        out << doc.dump() << '\n';
        if (!out) throw IndexError("write failed for snapshot " + path);
    }
    std::filesystem::rename(tmp, target);
}

IndexSet load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IndexError("cannot read snapshot " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw IndexError("snapshot " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || doc.value("magic", "") != kSnapshotMagic) {
        throw IndexError(path + " is not an index snapshot");
    }
    const int version = doc.value("version", 0);
    if (version != kSnapshotVersion) {
        throw IndexError("unsupported snapshot version " + std::to_string(version) + " in " + path);
    }
    try {
        IndexSet set;
        set.embedder_model = doc.at("embedder_model").get<std::string>();
        set.chunking.chunk_size = doc.at("chunking").at("chunk_size").get<std::size_t>();
        set.chunking.overlap = doc.at("chunking").at("overlap").get<std::size_t>();
        set.vectors = VectorIndex(doc.at("dimension").get<std::size_t>());
        set.keywords = KeywordIndex({doc.at("bm25").at("k1").get<double>(), doc.at("bm25").at("b").get<double>()});

        std::unordered_map<std::string, std::vector<std::pair<std::string, std::uint32_t>>> term_freqs;
        for (const auto& [term, list] : doc.at("postings").items()) {
            for (const auto& p : list) term_freqs[p.at(0).get<std::string>()].emplace_back(term, p.at(1).get<std::uint32_t>());
        }
        for (const auto& jc : doc.at("chunks")) {
            Chunk c;
            c.chunk_id = jc.at("chunk_id").get<std::string>();
            c.doc_id = jc.at("doc_id").get<std::string>();
            c.text = jc.at("text").get<std::string>();
            c.token_span = {jc.at("token_start").get<std::size_t>(), jc.at("token_end").get<std::size_t>()};
            c.token_count = jc.at("token_count").get<std::size_t>();
            set.vectors.add_normalized(c.chunk_id, jc.at("embedding").get<model::Embedding>());
            set.keywords.add_raw(c.chunk_id, jc.at("keyword_length").get<std::uint32_t>(), term_freqs[c.chunk_id]);
            set.chunks.push_back(std::move(c));
        }
        set.rebuild_lookup();
        return set;
    } catch (const json::exception& e) {
        throw IndexError("malformed snapshot " + path + ": " + e.what());
    }
}

}  // namespace ragbench
