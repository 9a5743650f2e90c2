#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ideatopics/cluster.hpp"
#include "ideatopics/coherence.hpp"
#include "ideatopics/corpus.hpp"
#include "ideatopics/dimred.hpp"
#include "ideatopics/embed.hpp"
#include "ideatopics/error.hpp"
#include "ideatopics/random.hpp"
#include "ideatopics/svg.hpp"
#include "ideatopics/topics.hpp"

namespace ideatopics {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

using KeyValues = std::map<std::string, std::string>;

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "input", "format", "provider", "dim", "embeddings", "endpoint", "batch_size",
        "stopwords", "min_token_len", "alphabetic_only",
        "n_neighbors", "min_dist", "n_epochs", "negative_sample_rate", "metric", "init",
        "min_cluster_size", "min_samples", "k", "topics", "preserve_below",
        "coherence", "top_n", "window_size", "epsilon", "reference", "out", "seed",
    };
    return keys;
}

// Grammar: one `key = value` per line. Blank lines and lines starting with
// '#' are ignored; whitespace around key and value is trimmed. Keys are the
// long CLI option names without dashes.
inline KeyValues parse_config_text(std::istream& in, const std::string& origin = "config") {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        std::string key(detail::trim(t.substr(0, eq)));
        std::string value(detail::trim(t.substr(eq + 1)));
        if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
            throw ConfigError(where + ": unknown key '" + key + "'");
        if (kv.contains(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

inline KeyValues load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    return parse_config_text(in, path.string());
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

inline bool parse_flag(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <class F>
auto as_config_error(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ArgumentError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

}  // namespace detail

struct PipelineConfig {
    fs::path input;
    InputFormat format = InputFormat::jsonl;

    std::string provider = "hash";  // hash | file | http
    std::size_t dim = 128;          // hash provider
    fs::path embeddings_file;       // file provider
    std::string endpoint;           // http provider
    std::size_t batch_size = 32;

    std::optional<fs::path> stopwords_file;
    std::size_t min_token_len = 2;
    bool alphabetic_only = true;

    UmapConfig umap;
    HdbscanConfig hdbscan;
    std::size_t k = 10;
    std::optional<std::size_t> target_topics;
    std::optional<double> preserve_below;
    CoherenceConfig coherence;
    std::optional<fs::path> reference;  // coherence corpus; the input itself when absent

    fs::path out = "out";
    std::uint64_t seed = 42;

    // Seed streams for the stochastic stages, all derived from `seed`.
    std::uint64_t embedding_seed() const { return seed; }
    std::uint64_t layout_seed(std::uint64_t run = 0) const { return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (run + 1))); }

    static PipelineConfig from_values(const KeyValues& kv) {
        PipelineConfig c;
        for (const auto& [key, v] : kv) {
            if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
                throw ConfigError("unknown key '" + key + "'");
            using namespace detail;
            if (key == "input") c.input = v;
            else if (key == "format") c.format = as_config_error(key, [&] { return parse_input_format(v); });
            else if (key == "provider") c.provider = v;
            else if (key == "dim") c.dim = parse_u64(key, v);
            else if (key == "embeddings") c.embeddings_file = v;
            else if (key == "endpoint") c.endpoint = v;
            else if (key == "batch_size") c.batch_size = parse_u64(key, v);
            else if (key == "stopwords") c.stopwords_file = fs::path(v);
            else if (key == "min_token_len") c.min_token_len = parse_u64(key, v);
            else if (key == "alphabetic_only") c.alphabetic_only = parse_flag(key, v);
            else if (key == "n_neighbors") c.umap.n_neighbors = parse_u64(key, v);
            else if (key == "min_dist") c.umap.min_dist = parse_real(key, v);
            else if (key == "n_epochs") c.umap.n_epochs = parse_u64(key, v);
            else if (key == "negative_sample_rate") c.umap.negative_sample_rate = parse_u64(key, v);
            else if (key == "metric") c.umap.metric = as_config_error(key, [&] { return parse_metric(v); });
            else if (key == "init") c.umap.init = as_config_error(key, [&] { return parse_layout_init(v); });
            else if (key == "min_cluster_size") c.hdbscan.min_cluster_size = parse_u64(key, v);
            else if (key == "min_samples") c.hdbscan.min_samples = parse_u64(key, v);
            else if (key == "k") c.k = parse_u64(key, v);
            else if (key == "topics") c.target_topics = parse_u64(key, v);
            else if (key == "preserve_below") c.preserve_below = parse_real(key, v);
            else if (key == "coherence") c.coherence.metric = as_config_error(key, [&] { return parse_coherence_metric(v); });
            else if (key == "top_n") c.coherence.top_n = parse_u64(key, v);
            else if (key == "window_size") c.coherence.window_size = parse_u64(key, v);
            else if (key == "epsilon") c.coherence.epsilon = parse_real(key, v);
            else if (key == "reference") c.reference = fs::path(v);
            else if (key == "out") c.out = v;
            else if (key == "seed") c.seed = parse_u64(key, v);
        }
        return c;
    }

    // Canonical settings, minus the output directory, for the manifest.
    nlohmann::json canonical() const {
        nlohmann::json j;
        j["input"] = input.string();
        j["format"] = format == InputFormat::jsonl ? "jsonl" : "text";
        j["provider"] = provider;
        if (provider == "hash") j["dim"] = dim;
        if (provider == "file") j["embeddings"] = embeddings_file.string();
        if (provider == "http") {
            j["endpoint"] = endpoint;
            j["batch_size"] = batch_size;
        }
        j["stopwords"] = stopwords_file ? stopwords_file->string() : "";
        j["min_token_len"] = min_token_len;
        j["alphabetic_only"] = alphabetic_only;
        j["n_neighbors"] = umap.n_neighbors;
        j["min_dist"] = umap.min_dist;
        j["n_epochs"] = umap.n_epochs;
        j["negative_sample_rate"] = umap.negative_sample_rate;
        j["metric"] = umap.metric == Metric::cosine ? "cosine" : "euclidean";
        j["init"] = umap.init == LayoutInit::spectral ? "spectral" : "random";
        j["min_cluster_size"] = hdbscan.min_cluster_size;
        j["min_samples"] = hdbscan.effective_min_samples();
        j["k"] = k;
        j["topics"] = target_topics ? nlohmann::json(*target_topics) : nlohmann::json(nullptr);
        j["preserve_below"] = preserve_below ? nlohmann::json(*preserve_below) : nlohmann::json(nullptr);
        j["coherence"] = metric_name(coherence.metric);
        j["top_n"] = coherence.top_n;
        j["window_size"] = coherence.window();
        j["epsilon"] = coherence.epsilon;
        j["reference"] = reference ? reference->string() : "";
        j["seed"] = seed;
        return j;
    }

    // Checks that need no input data.
    void validate() const {
        if (input.empty()) throw ConfigError("input: no input file given");
        if (provider != "hash" && provider != "file" && provider != "http")
            throw ConfigError("provider: expected hash, file or http, got '" + provider + "'");
        if (provider == "hash" && dim < 2) throw ConfigError("dim: must be >= 2");
        if (provider == "file" && embeddings_file.empty()) throw ConfigError("embeddings: file provider needs a path");
        if (provider == "http" && endpoint.empty()) throw ConfigError("endpoint: http provider needs a URL");
        if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
        if (min_token_len < 1) throw ConfigError("min_token_len: must be >= 1");
        if (k < 1) throw ConfigError("k: must be >= 1");
        if (target_topics && *target_topics < 1) throw ConfigError("topics: must be >= 1");
        if (out.empty()) throw ConfigError("out: no output directory");
        detail::as_config_error("umap", [&] {
            if (umap.n_neighbors < 2) throw ArgumentError("n_neighbors must be >= 2");
            if (!(umap.min_dist > 0.0)) throw ArgumentError("min_dist must be > 0");
            kernel_params(umap.min_dist);
            if (umap.n_epochs < 1) throw ArgumentError("n_epochs must be >= 1");
            return 0;
        });
        detail::as_config_error("hdbscan", [&] {
            hdbscan.validate();
            return 0;
        });
        detail::as_config_error("coherence", [&] {
            coherence.validate();
            return 0;
        });
    }

    // Checks that depend on the number of ideas; run before any heavy stage.
    void validate_for(std::size_t n_ideas) const {
        if (n_ideas <= umap.n_neighbors)
            throw ConfigError("input has " + std::to_string(n_ideas) + " ideas; need at least n_neighbors+1 = " +
                              std::to_string(umap.n_neighbors + 1));
        if (n_ideas <= hdbscan.effective_min_samples())
            throw ConfigError("input has " + std::to_string(n_ideas) + " ideas; need more than min_samples = " +
                              std::to_string(hdbscan.effective_min_samples()));
    }

    // Tokenized coherence corpus: the reference file when set, else `ideas`.
    TokenizedCorpus reference_corpus(const std::vector<TokenizedIdea>& ideas) const {
        TokenizedCorpus out;
        if (reference) {
            for (const auto& idea : tokenize_ideas(ingest(*reference, format), preprocess())) out.push_back(idea.tokens);
        } else {
            for (const auto& idea : ideas) out.push_back(idea.tokens);
        }
        return out;
    }

    PreprocessConfig preprocess() const {
        PreprocessConfig p = default_preprocess_config();
        if (stopwords_file) p.stopwords = load_stopwords(*stopwords_file);
        p.min_token_len = min_token_len;
        p.alphabetic_only = alphabetic_only;
        return p;
    }
};

// ---------------------------------------------------------------- files

namespace detail {

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string content_hash(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, std::string_view bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + p.string());
}

inline std::vector<std::vector<std::string>> read_csv(const fs::path& p, const std::string& header) {
    std::istringstream in(read_file(p));
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != header)
        throw FormatError(p.string() + ": expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls{std::string(detail::trim(line))};
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace detail

// Holds <dir>/.lock for the lifetime of the object.
class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / ".lock") {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
        std::FILE* f = std::fopen(path_.c_str(), "wx");
        if (!f) throw IoError("output directory is locked by another run (remove " + path_.string() + " if stale)");
        std::fclose(f);
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path path_;
};

inline std::string coordinates_csv(const Matrix& coords) {
    std::string s = "id,x,y\n";
    for (std::size_t i = 0; i < coords.rows(); ++i)
        s += std::to_string(i) + "," + detail::fmt_double(coords(i, 0)) + "," + detail::fmt_double(coords(i, 1)) + "\n";
    return s;
}

inline std::string assignments_csv(const ClusterAssignment& a) {
    std::string s = "id,label,probability\n";
    for (std::size_t i = 0; i < a.labels.size(); ++i)
        s += std::to_string(i) + "," + std::to_string(a.labels[i]) + "," + detail::fmt_double(a.probabilities[i]) + "\n";
    return s;
}

inline Matrix read_coordinates_csv(const fs::path& p) {
    Matrix m(0, 2);
    std::size_t expect = 0;
    for (const auto& row : detail::read_csv(p, "id,x,y")) {
        if (row.size() != 3) throw FormatError(p.string() + ": expected 3 columns");
        try {
            if (std::stoull(row[0]) != expect++) throw FormatError(p.string() + ": ids must be 0..n-1 in order");
            m.append_row(std::vector<double>{std::stod(row[1]), std::stod(row[2])});
        } catch (const std::logic_error&) {
            throw FormatError(p.string() + ": bad number");
        }
    }
    return m;
}

inline std::vector<int> read_assignment_labels(const fs::path& p) {
    std::vector<int> labels;
    for (const auto& row : detail::read_csv(p, "id,label,probability")) {
        if (row.size() != 3) throw FormatError(p.string() + ": expected 3 columns");
        try {
            if (std::stoull(row[0]) != labels.size()) throw FormatError(p.string() + ": ids must be 0..n-1 in order");
            labels.push_back(std::stoi(row[1]));
        } catch (const std::logic_error&) {
            throw FormatError(p.string() + ": bad number");
        }
    }
    return labels;
}

inline nlohmann::json topics_json(const TopicSet& set, const ClusterAssignment& a) {
    nlohmann::json topics = nlohmann::json::array();
    for (const auto& t : set.topics) {
        nlohmann::json words = nlohmann::json::array();
        for (const auto& w : t.words) words.push_back({{"word", w.word}, {"score", w.score}});
        topics.push_back({{"cluster_id", t.cluster_id}, {"words", words}, {"member_ids", t.member_ids}});
    }
    std::vector<std::size_t> outliers;
    for (std::size_t i = 0; i < a.labels.size(); ++i)
        if (a.labels[i] < 0) outliers.push_back(i);
    nlohmann::json merges = nlohmann::json::array();
    for (const auto& m : set.merges)
        merges.push_back({{"absorbed", m.absorbed}, {"into", m.into}, {"similarity", m.similarity}});
    nlohmann::json j{{"topics", topics}, {"outlier_ids", outliers}, {"merges", merges}};
    if (set.target_count) j["target_count"] = *set.target_count;
    if (!set.preserved.empty()) j["preserved"] = set.preserved;
    return j;
}

inline nlohmann::json coherence_json(const CoherenceReport& r, const CoherenceConfig& cfg) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& e : r.per_topic) {
        nlohmann::json row{{"id", e.id}, {"score", e.score ? nlohmann::json(*e.score) : nlohmann::json(nullptr)}};
        if (!e.missing_words.empty()) row["missing_words"] = e.missing_words;
        if (!e.error.empty()) row["error"] = e.error;
        per.push_back(std::move(row));
    }
    return {{"metric", metric_name(r.metric)},
            {"per_topic", per},
            {"overall", r.overall ? nlohmann::json(*r.overall) : nlohmann::json(nullptr)},
            {"top_n", cfg.top_n},
            {"window_size", cfg.window()},
            {"warnings", r.warnings}};
}

// Reads word lists from a topics file ({"topics":[{"cluster_id","words":[...]}]},
// words either strings or {"word":...}) or from plain text, one topic per line.
inline std::vector<WordList> load_word_lists(const fs::path& p) {
    const auto text = detail::read_file(p);
    std::vector<WordList> lists;
    if (p.extension() == ".json") {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(p.string() + ": " + e.what());
        }
        if (!doc.is_object() || !doc.contains("topics") || !doc["topics"].is_array())
            throw FormatError(p.string() + ": expected {\"topics\": [...]}");
        int next = 0;
        for (const auto& t : doc["topics"]) {
            WordList l{t.value("cluster_id", next), {}};
            ++next;
            for (const auto& w : t.value("words", nlohmann::json::array())) {
                if (w.is_string()) l.words.push_back(w.get<std::string>());
                else if (w.is_object() && w.contains("word")) l.words.push_back(w["word"].get<std::string>());
                else throw FormatError(p.string() + ": bad word entry");
            }
            lists.push_back(std::move(l));
        }
        return lists;
    }
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        WordList l{static_cast<int>(lists.size()), {}};
        for (std::string w; ls >> w;) l.words.push_back(w);
        if (!l.words.empty()) lists.push_back(std::move(l));
    }
    return lists;
}

// ---------------------------------------------------------------- stages

struct Analysis {
    Matrix coordinates;
    ClusterAssignment assignment;
    TopicSet topics;
    std::vector<std::string> warnings;
};

namespace detail {

// Embeds every distinct token of the clustered ideas in one call so word
// lookups during vocabulary building never go back to the provider.
inline PrecomputedEmbeddingProvider embed_vocabulary(const std::vector<TokenizedIdea>& ideas,
                                                     const EmbeddingProvider& provider) {
    std::set<std::string> words;
    for (const auto& idea : ideas) words.insert(idea.tokens.begin(), idea.tokens.end());
    EmbeddingMap map;
    if (!words.empty()) {
        const std::vector<std::string> list(words.begin(), words.end());
        const auto m = embed_texts(provider, list);
        for (std::size_t i = 0; i < list.size(); ++i) map[list[i]].assign(m.row(i).begin(), m.row(i).end());
    }
    return PrecomputedEmbeddingProvider(std::move(map), "vocabulary");
}

template <class F>
auto stage(const char* name, std::string& current, F&& f) {
    current = name;
    return f();
}

}  // namespace detail

inline TopicSet extract_from_assignment(const ClusterAssignment& assignment, const std::vector<TokenizedIdea>& ideas,
                                        const EmbeddingProvider& words, const EmbeddingMatrix& sentences,
                                        std::size_t k) {
    return extract_topics(assignment, build_vocabularies(assignment, ideas, words, sentences), k);
}

// ---------------------------------------------------------------- run

struct RunArtifacts {
    fs::path dir;
    fs::path embeddings, coordinates, assignments, topics, coherence, manifest;
    std::vector<fs::path> figures;
    std::vector<fs::path> extra;

    std::vector<IdeaRecord> records;
    EmbeddingMatrix sentence_embeddings;
    Analysis analysis;
    CoherenceReport coherence_report;        // configured metric
    CoherenceReport other_coherence_report;  // the other metric
    bool embeddings_from_cache = false;
    std::string run_key;
};

namespace detail {

inline std::string embedding_key(const EmbeddingProvider& provider, const std::vector<std::string>& texts) {
    std::uint64_t h = fnv1a64(provider.describe());
    for (const auto& t : texts) {
        h = fnv1a64(std::string_view("\x1f", 1), h);
        h = fnv1a64(t, h);
    }
    return hex64(h);
}

inline std::optional<EmbeddingMatrix> cached_embeddings(const fs::path& dir, const std::string& key,
                                                        const std::vector<std::string>& texts) {
    const auto manifest = dir / "manifest.json";
    const auto file = dir / "embeddings.json";
    if (!fs::exists(manifest) || !fs::exists(file)) return std::nullopt;
    try {
        const auto m = nlohmann::json::parse(read_file(manifest));
        if (m.value("embedding_key", "") != key) return std::nullopt;
        const auto bytes = read_file(file);
        if (m["artifacts"].value("embeddings.json", "") != content_hash(bytes)) return std::nullopt;
        PrecomputedEmbeddingProvider cache(parse_embedding_json(nlohmann::json::parse(bytes)), file.string());
        return embed_texts(cache, texts);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace detail

// Full run: ingest, embed (cached by manifest key), reduce, cluster, exclude
// outliers, build vocabularies, extract, optionally refine, score coherence,
// then write every artifact and a manifest. On a stage failure the manifest
// records status "failed" and the stage, artifacts written so far stay, and
// the original exception is rethrown.
inline RunArtifacts run_pipeline(const PipelineConfig& cfg, const EmbeddingProvider& provider) {
    cfg.validate();
    OutputLock lock(cfg.out);

    RunArtifacts art;
    art.dir = cfg.out;
    art.embeddings = cfg.out / "embeddings.json";
    art.coordinates = cfg.out / "coordinates.csv";
    art.assignments = cfg.out / "assignments.csv";
    art.topics = cfg.out / "topics.json";
    art.coherence = cfg.out / "coherence.json";
    art.manifest = cfg.out / "manifest.json";

    nlohmann::json manifest;
    manifest["config"] = cfg.canonical();
    manifest["provider"] = provider.describe();
    nlohmann::json hashes = nlohmann::json::object();
    std::vector<std::string> warnings;
    std::string current;

    auto put = [&](const fs::path& p, std::string_view bytes) {
        detail::write_file(p, bytes);
        hashes[p.filename().string()] = detail::content_hash(bytes);
    };
    auto write_manifest = [&](const std::string& status, const std::string& error) {
        manifest["status"] = status;
        if (status != "ok") {
            manifest["failed_stage"] = current;
            manifest["error"] = error;
        }
        manifest["artifacts"] = hashes;
        manifest["warnings"] = warnings;
        detail::write_file(art.manifest, manifest.dump(2) + "\n");
    };

    try {
        const auto input_bytes = detail::stage("ingest", current, [&] { return detail::read_file(cfg.input); });
        manifest["input_hash"] = detail::content_hash(input_bytes);
        manifest["run_key"] = art.run_key =
            detail::content_hash(manifest["config"].dump() + "\n" + provider.describe() + "\n" + input_bytes);

        art.records = detail::stage("ingest", current, [&] {
            std::istringstream in(input_bytes);
            return parse_ideas(in, cfg.format);
        });
        cfg.validate_for(art.records.size());
        const auto ideas = detail::stage("preprocess", current, [&] { return tokenize_ideas(art.records, cfg.preprocess()); });

        std::vector<std::string> texts;
        for (const auto& r : art.records) texts.push_back(r.text);
        const auto key = detail::embedding_key(provider, texts);
        manifest["embedding_key"] = key;
        art.sentence_embeddings = detail::stage("embed", current, [&] {
            if (auto cached = detail::cached_embeddings(cfg.out, key, texts)) {
                art.embeddings_from_cache = true;
                return std::move(*cached);
            }
            return embed_texts(provider, texts);
        });
        put(art.embeddings, embedding_json(art.sentence_embeddings).dump() + "\n");

        auto& an = art.analysis;
        an.coordinates = detail::stage("reduce", current, [&] {
            UmapConfig u = cfg.umap;
            u.seed = cfg.layout_seed();
            return umap_reduce(art.sentence_embeddings.data, u);
        });
        put(art.coordinates, coordinates_csv(an.coordinates));

        an.assignment = detail::stage("cluster", current, [&] { return hdbscan(an.coordinates, cfg.hdbscan); });
        put(art.assignments, assignments_csv(an.assignment));
        if (an.assignment.n_clusters == 0) throw DegenerateClusterError("no clusters found; every idea is an outlier");

        an.topics = detail::stage("extract", current, [&] {
            std::vector<TokenizedIdea> clustered;
            for (const auto& idea : ideas)
                if (an.assignment.labels[idea.id] >= 0) clustered.push_back(idea);
            const auto words = detail::embed_vocabulary(clustered, provider);
            return extract_from_assignment(an.assignment, ideas, words, art.sentence_embeddings, cfg.k);
        });
        for (const auto& t : an.topics.topics)
            if (t.degenerate()) warnings.push_back("topic " + std::to_string(t.cluster_id) + " has no words");

        if (cfg.target_topics) {
            detail::stage("refine", current, [&] {
                if (*cfg.target_topics > an.topics.topics.size()) {
                    warnings.push_back("refinement skipped: insufficient clusters (" +
                                       std::to_string(an.topics.topics.size()) + " < " +
                                       std::to_string(*cfg.target_topics) + ")");
                } else {
                    an.topics = refine_topics(std::move(an.topics), *cfg.target_topics, RefineOptions{cfg.preserve_below});
                    if (an.topics.stopped_early) warnings.push_back("refinement stopped early");
                }
                return 0;
            });
        }
        put(art.topics, topics_json(an.topics, an.assignment).dump(2) + "\n");

        detail::stage("coherence", current, [&] {
            auto other = cfg.coherence;
            other.metric = cfg.coherence.metric == CoherenceMetric::c_v ? CoherenceMetric::c_npmi : CoherenceMetric::c_v;
            if (!cfg.coherence.window_size) other.window_size.reset();
            const auto reference = cfg.reference_corpus(ideas);
            art.coherence_report = score_topic_set(an.topics, reference, cfg.coherence);
            art.other_coherence_report = score_topic_set(an.topics, reference, other);
            put(art.coherence, coherence_json(art.coherence_report, cfg.coherence).dump(2) + "\n");
            const auto other_path = cfg.out / ("coherence_" + metric_name(other.metric) + ".json");
            put(other_path, coherence_json(art.other_coherence_report, other).dump(2) + "\n");
            art.extra.push_back(other_path);
            return 0;
        });

        detail::stage("plot", current, [&] {
            const std::pair<const char*, ScatterStage> figs[] = {
                {"unclustered.svg", ScatterStage::unclustered},
                {"clustered.svg", ScatterStage::clustered},
                {"no_outliers.svg", ScatterStage::no_outliers},
            };
            for (const auto& [name, st] : figs) {
                const auto p = cfg.out / name;
                put(p, render_scatter_svg(an.coordinates, an.assignment.labels, st));
                art.figures.push_back(p);
            }
            return 0;
        });
        an.warnings = warnings;
        write_manifest("ok", "");
    } catch (const std::exception& e) {
        write_manifest("failed", e.what());
        throw;
    }
    return art;
}

// ---------------------------------------------------------------- sweep

struct SweepRun {
    std::size_t count = 0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::size_t discovered = 0;  // clusters found before refinement
    std::optional<double> c_v;
    std::optional<double> c_npmi;
    std::string status = "ok";  // ok | skipped: ...

    bool executed() const { return status == "ok"; }
};

struct SweepRow {
    std::size_t count = 0;
    std::size_t executed = 0;
    std::optional<double> c_v;
    std::optional<double> c_npmi;
    std::string status = "ok";
};

struct SweepReport {
    std::vector<SweepRun> runs;
    std::vector<SweepRow> rows;
    std::size_t executed = 0;
    std::optional<double> c_v;  // grand mean over executed runs
    std::optional<double> c_npmi;
};

inline SweepReport summarize_sweep(std::vector<SweepRun> runs, const std::vector<std::size_t>& counts) {
    SweepReport rep;
    double gv = 0.0, gn = 0.0;
    for (std::size_t count : counts) {
        SweepRow row;
        row.count = count;
        double sv = 0.0, sn = 0.0;
        std::string skip;
        for (const auto& r : runs) {
            if (r.count != count) continue;
            if (!r.executed()) {
                skip = r.status;
                continue;
            }
            ++row.executed;
            sv += *r.c_v;
            sn += *r.c_npmi;
        }
        if (row.executed > 0) {
            row.c_v = sv / static_cast<double>(row.executed);
            row.c_npmi = sn / static_cast<double>(row.executed);
            if (!skip.empty()) row.status = "partial: " + skip;
        } else {
            row.status = skip.empty() ? "skipped: no runs" : skip;
        }
        rep.rows.push_back(std::move(row));
    }
    for (const auto& r : runs) {
        if (!r.executed()) continue;
        ++rep.executed;
        gv += *r.c_v;
        gn += *r.c_npmi;
    }
    if (rep.executed > 0) {
        rep.c_v = gv / static_cast<double>(rep.executed);
        rep.c_npmi = gn / static_cast<double>(rep.executed);
    }
    rep.runs = std::move(runs);
    return rep;
}

inline nlohmann::json sweep_json(const SweepReport& rep) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : rep.runs)
        runs.push_back({{"count", r.count}, {"run", r.run}, {"seed", r.seed}, {"discovered_clusters", r.discovered},
                        {"c_v", opt(r.c_v)}, {"c_npmi", opt(r.c_npmi)}, {"status", r.status}});
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"count", r.count}, {"runs", r.executed}, {"c_v", opt(r.c_v)}, {"c_npmi", opt(r.c_npmi)},
                        {"status", r.status}});
    return {{"runs", runs},
            {"rows", rows},
            {"grand_mean", {{"runs", rep.executed}, {"c_v", opt(rep.c_v)}, {"c_npmi", opt(rep.c_npmi)}}}};
}

// Table-shaped summary: one row per topic count plus the grand mean.
inline std::string sweep_csv(const SweepReport& rep) {
    auto cell = [](const std::optional<double>& v) { return v ? detail::fmt_double(*v) : std::string(); };
    std::string s = "topics,runs,tc_c_v,tc_c_npmi,status\n";
    for (const auto& r : rep.rows)
        s += std::to_string(r.count) + "," + std::to_string(r.executed) + "," + cell(r.c_v) + "," + cell(r.c_npmi) +
             "," + r.status + "\n";
    s += "mean," + std::to_string(rep.executed) + "," + cell(rep.c_v) + "," + cell(rep.c_npmi) + ",ok\n";
    return s;
}

// For each target count, runs_per_count runs of reduce, cluster, extract,
// refine and coherence scoring. Run r uses layout seed cfg.layout_seed(r) at
// every count, so layouts are computed once per run index. A count larger
// than the discovered clusters marks that run skipped.
inline SweepReport sweep_topics(const PipelineConfig& cfg, const EmbeddingProvider& provider,
                                const std::vector<std::size_t>& counts, std::size_t runs_per_count) {
    cfg.validate();
    if (counts.empty()) throw ConfigError("counts: need at least one topic count");
    for (auto c : counts)
        if (c < 1) throw ConfigError("counts: topic counts must be >= 1");
    if (runs_per_count < 1) throw ConfigError("runs: must be >= 1");
    OutputLock lock(cfg.out);

    const auto records = ingest(cfg.input, cfg.format);
    cfg.validate_for(records.size());
    const auto ideas = tokenize_ideas(records, cfg.preprocess());
    const auto reference = cfg.reference_corpus(ideas);
    std::vector<std::string> texts;
    for (const auto& r : records) texts.push_back(r.text);
    const auto sentences = embed_texts(provider, texts);
    const auto words = detail::embed_vocabulary(ideas, provider);

    auto cv_cfg = cfg.coherence;
    cv_cfg.metric = CoherenceMetric::c_v;
    auto np_cfg = cfg.coherence;
    np_cfg.metric = CoherenceMetric::c_npmi;
    if (!cfg.coherence.window_size) cv_cfg.window_size.reset(), np_cfg.window_size.reset();

    std::vector<SweepRun> out;
    std::vector<std::optional<std::pair<ClusterAssignment, TopicSet>>> per_run(runs_per_count);
    for (std::size_t r = 0; r < runs_per_count; ++r) {
        UmapConfig u = cfg.umap;
        u.seed = cfg.layout_seed(r);
        const auto coords = umap_reduce(sentences.data, u);
        auto assignment = hdbscan(coords, cfg.hdbscan);
        auto topics = extract_from_assignment(assignment, ideas, words, sentences, cfg.k);
        per_run[r].emplace(std::move(assignment), std::move(topics));
    }
    for (std::size_t count : counts) {
        for (std::size_t r = 0; r < runs_per_count; ++r) {
            const auto& [assignment, topics] = *per_run[r];
            SweepRun run;
            run.count = count;
            run.run = r;
            run.seed = cfg.layout_seed(r);
            run.discovered = topics.topics.size();
            if (count > topics.topics.size()) {
                run.status = "skipped: insufficient clusters";
                out.push_back(std::move(run));
                continue;
            }
            const auto refined = refine_topics(topics, count, RefineOptions{cfg.preserve_below});
            const auto cv = score_topic_set(refined, reference, cv_cfg);
            const auto np = score_topic_set(refined, reference, np_cfg);
            if (!cv.overall || !np.overall) {
                run.status = "skipped: no scoreable topics";
            } else {
                run.c_v = cv.overall;
                run.c_npmi = np.overall;
            }
            out.push_back(std::move(run));
        }
    }
    auto rep = summarize_sweep(std::move(out), counts);
    detail::write_file(cfg.out / "sweep.json", sweep_json(rep).dump(2) + "\n");
    detail::write_file(cfg.out / "sweep.csv", sweep_csv(rep));
    return rep;
}

}  // namespace ideatopics
