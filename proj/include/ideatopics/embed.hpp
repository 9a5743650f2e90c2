#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ideatopics/error.hpp"
#include "ideatopics/matrix.hpp"
#include "ideatopics/random.hpp"

namespace ideatopics {

// n x d vectors with a parallel id per row (idea text or vocabulary word).
struct EmbeddingMatrix {
    Matrix data;
    std::vector<std::string> ids;

    std::size_t rows() const noexcept { return data.rows(); }
    std::size_t dim() const noexcept { return data.cols(); }
    std::span<const double> row(std::size_t i) const { return data.row(i); }

    void validate() const {
        if (ids.size() != data.rows()) throw FormatError("embedding rows and ids misaligned");
        if (data.rows() > 0 && data.cols() < 2) throw FormatError("embedding dimension must be >= 2");
        if (!data.all_finite()) throw FormatError("embedding contains non-finite values");
    }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

namespace detail {

inline std::vector<std::string> hash_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    };
    auto is_punct = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && std::ispunct(u);
    };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        std::size_t lo = i;
        std::size_t hi = j;
        while (lo < hi && is_punct(text[lo])) ++lo;
        while (hi > lo && is_punct(text[hi - 1])) --hi;
        if (hi > lo) {
            std::string tok(text.substr(lo, hi - lo));
            for (char& c : tok)
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            out.push_back(std::move(tok));
        }
        i = j;
    }
    return out;
}

inline std::uint64_t seeded_token_hash(std::string_view token, std::uint64_t seed) {
    char seed_bytes[8];
    for (int b = 0; b < 8; ++b) seed_bytes[b] = static_cast<char>((seed >> (8 * b)) & 0xFF);
    return fnv1a64(token, fnv1a64(std::string_view(seed_bytes, 8)));
}

}  // namespace detail

// Deterministic bag-of-tokens embedding used as a stand-in for a sentence
// model. Each whitespace token (ASCII-lowercased, edge punctuation stripped) is
// hashed with 64-bit FNV-1a over (seed as 8 little-endian bytes, then token
// bytes); the hash seeds a splitmix64 stream whose outputs map to coordinates
// uniform in [-1, 1). Token vectors are normalized, averaged, and the mean is
// normalized again. Texts without tokens map to e_0.
inline std::vector<double> deterministic_hash_embed(std::string_view text, std::size_t dim,
                                                    std::uint64_t seed) {
    if (dim < 2) throw ArgumentError("hash embedding dimension must be >= 2");
    std::vector<double> out(dim, 0.0);
    const auto tokens = detail::hash_tokens(text);
    std::vector<double> tv(dim);
    for (const auto& tok : tokens) {
        std::uint64_t state = detail::seeded_token_hash(tok, seed);
        for (std::size_t i = 0; i < dim; ++i) {
            state = splitmix64(state);
            tv[i] = static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;
        }
        const double n = norm(tv);
        for (std::size_t i = 0; i < dim; ++i) out[i] += tv[i] / n;
    }
    const double n = norm(out);
    if (tokens.empty() || n == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = 1.0;
        return out;
    }
    for (double& v : out) v /= n;
    return out;
}

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // One row per text, in input order. Implementations may assume texts is
    // non-empty; embed_texts checks it.
    virtual EmbeddingMatrix embed(const std::vector<std::string>& texts) const = 0;

    // Stable description used in run manifests.
    virtual std::string describe() const = 0;
};

class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
        if (dim < 2) throw ArgumentError("hash embedding dimension must be >= 2");
    }

    EmbeddingMatrix embed(const std::vector<std::string>& texts) const override {
        EmbeddingMatrix m{Matrix(texts.size(), dim_), texts};
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const auto v = deterministic_hash_embed(texts[i], dim_, seed_);
            std::copy(v.begin(), v.end(), m.data.row(i).begin());
        }
        return m;
    }

    std::string describe() const override {
        return "hash(dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) + ")";
    }

    std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

using EmbeddingMap = std::map<std::string, std::vector<double>>;

// Parses {"dim": d, "vectors": {"<text>": [..], ...}}. "dim" is optional; when
// present every vector must match it.
inline EmbeddingMap parse_embedding_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw FormatError("embedding file: top level must be an object");
    const auto vectors = doc.find("vectors");
    if (vectors == doc.end() || !vectors->is_object())
        throw FormatError("embedding file: missing object \"vectors\"");

    std::optional<std::size_t> dim;
    if (const auto d = doc.find("dim"); d != doc.end()) {
        if (!d->is_number_unsigned()) throw FormatError("embedding file: \"dim\" must be a non-negative integer");
        dim = d->get<std::size_t>();
    }

    EmbeddingMap out;
    for (const auto& [text, arr] : vectors->items()) {
        if (!arr.is_array()) throw FormatError("embedding file: vector for \"" + text + "\" is not an array");
        std::vector<double> v;
        v.reserve(arr.size());
        for (const auto& x : arr) {
            if (!x.is_number()) throw FormatError("embedding file: non-numeric value for \"" + text + "\"");
            const double val = x.get<double>();
            if (!std::isfinite(val)) throw FormatError("embedding file: non-finite value for \"" + text + "\"");
            v.push_back(val);
        }
        if (!dim) dim = v.size();
        if (v.size() != *dim) throw FormatError("embedding file: mixed dimensions at \"" + text + "\"");
        out.emplace(text, std::move(v));
    }
    return out;
}

inline EmbeddingMap load_embedding_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("embedding file is not valid JSON: ") + e.what());
    }
    return parse_embedding_json(doc);
}

// Serializes in the same format load_embedding_file reads. Duplicate ids keep
// their first vector (identical texts embed identically).
inline nlohmann::json embedding_json(const EmbeddingMatrix& m) {
    nlohmann::json vectors = nlohmann::json::object();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (vectors.contains(m.ids[i])) continue;
        const auto r = m.row(i);
        vectors[m.ids[i]] = std::vector<double>(r.begin(), r.end());
    }
    return {{"dim", m.dim()}, {"vectors", std::move(vectors)}};
}

class PrecomputedEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit PrecomputedEmbeddingProvider(EmbeddingMap vectors, std::string origin = "memory")
        : vectors_(std::move(vectors)), origin_(std::move(origin)) {}

    static PrecomputedEmbeddingProvider from_file(const std::filesystem::path& path) {
        return PrecomputedEmbeddingProvider(load_embedding_file(path), path.string());
    }

    EmbeddingMatrix embed(const std::vector<std::string>& texts) const override {
        EmbeddingMatrix m;
        m.ids = texts;
        for (const auto& t : texts) {
            const auto it = vectors_.find(t);
            if (it == vectors_.end()) throw LookupError("no precomputed embedding for text: \"" + t + "\"");
            m.data.append_row(it->second);
        }
        return m;
    }

    std::string describe() const override { return "file(" + origin_ + ")"; }

    const EmbeddingMap& vectors() const noexcept { return vectors_; }

private:
    EmbeddingMap vectors_;
    std::string origin_;
};

inline EmbeddingMatrix embed_texts(const EmbeddingProvider& provider,
                                   const std::vector<std::string>& texts) {
    if (texts.empty()) throw ArgumentError("embed_texts: no texts");
    auto m = provider.embed(texts);
    if (m.rows() != texts.size()) throw ProtocolError("provider returned wrong number of rows");
    m.ids = texts;
    m.validate();
    return m;
}

}  // namespace ideatopics
