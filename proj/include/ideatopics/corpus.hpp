#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ideatopics/error.hpp"

namespace ideatopics {

struct IdeaRecord {
    std::size_t id = 0;
    std::optional<std::string> speaker;
    std::optional<std::string> group;
    std::string text;

    friend bool operator==(const IdeaRecord&, const IdeaRecord&) = default;
};

enum class InputFormat { jsonl, plaintext };

struct PreprocessConfig {
    std::set<std::string> stopwords;
    std::size_t min_token_len = 2;
    bool alphabetic_only = true;
    bool lowercase = true;
};

struct TokenizedIdea {
    std::size_t id = 0;
    std::vector<std::string> tokens;

    friend bool operator==(const TokenizedIdea&, const TokenizedIdea&) = default;
};

namespace detail {

// Decodes the code point starting at s[i] and advances i. Returns nullopt on
// malformed UTF-8.
inline std::optional<char32_t> next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len;
    char32_t cp;
    if (b0 < 0x80) {
        ++i;
        return b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return std::nullopt;
    }
    if (i + len > s.size()) return std::nullopt;
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return std::nullopt;
        cp = (cp << 6) | (b & 0x3F);
    }
    // overlong forms and surrogates
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        return std::nullopt;
    }
    i += len;
    return cp;
}

inline bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size())
        if (!next_code_point(s, i)) return false;
    return true;
}

inline bool is_unicode_space(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

inline bool is_punctuation(char32_t c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
               (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    }
    // general punctuation block, Latin-1 punctuation, CJK punctuation
    return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || c == 0xA1 ||
           c == 0xAB || c == 0xBB || c == 0xBF || (c >= 0x3001 && c <= 0x3003);
}

struct Piece {
    std::string_view bytes;
    std::vector<char32_t> cps;
};

inline std::vector<Piece> split_whitespace(std::string_view text) {
    std::vector<Piece> out;
    std::size_t i = 0;
    std::size_t start = 0;
    std::vector<char32_t> cur;
    while (i < text.size()) {
        const std::size_t at = i;
        const auto cp = next_code_point(text, i);
        if (!cp) {
            // treat a stray byte as an opaque non-alphabetic character
            i = at + 1;
            if (cur.empty()) start = at;
            cur.push_back(0xFFFD);
            continue;
        }
        if (is_unicode_space(*cp)) {
            if (!cur.empty()) out.push_back({text.substr(start, at - start), std::move(cur)});
            cur.clear();
            continue;
        }
        if (cur.empty()) start = at;
        cur.push_back(*cp);
    }
    if (!cur.empty()) out.push_back({text.substr(start), std::move(cur)});
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\v\f");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\v\f");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

// Built-in English stopword list (lowercase).
inline const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "also", "am", "an",
        "and", "any", "are", "aren", "as", "at", "be", "because", "been", "before",
        "being", "below", "between", "both", "but", "by", "can", "could", "couldn",
        "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each",
        "else", "even", "ever", "every", "few", "for", "from", "further", "get", "gets",
        "got", "had", "hadn", "has", "hasn", "have", "haven", "having", "he", "her",
        "here", "hers", "herself", "him", "himself", "his", "how", "however", "if", "in",
        "into", "is", "isn", "it", "its", "itself", "just", "like", "ll", "may", "maybe",
        "me", "might", "more", "most", "much", "must", "mustn", "my", "myself", "need",
        "needn", "no", "nor", "not", "now", "of", "off", "often", "oh", "ok", "okay",
        "on", "once", "one", "only", "or", "other", "others", "our", "ours", "ourselves",
        "out", "over", "own", "really", "same", "say", "shall", "shan", "she", "should",
        "shouldn", "so", "some", "something", "such", "than", "that", "the", "their",
        "theirs", "them", "themselves", "then", "there", "these", "they", "thing",
        "things", "think", "this", "those", "though", "through", "to", "too", "under",
        "until", "up", "us", "very", "was", "wasn", "we", "well", "were", "weren", "what",
        "when", "where", "whether", "which", "while", "who", "whom", "why", "will", "with",
        "won", "would", "wouldn", "yeah", "yes", "yet", "you", "your", "yours", "yourself",
        "yourselves", "re", "ve", "let", "lot", "lots", "many", "make", "made", "go",
        "going", "want", "kind", "sort", "still", "way", "within", "without",
    };
    return words;
}

inline PreprocessConfig default_preprocess_config() {
    PreprocessConfig cfg;
    cfg.stopwords = default_stopwords();
    return cfg;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

// Splits on Unicode whitespace, strips edge punctuation, lowercases (ASCII) and
// drops stopwords, short tokens and, when alphabetic_only is set, anything that
// is not purely ASCII letters. Token order is preserved.
inline std::vector<std::string> tokenize_and_filter(std::string_view text,
                                                    const PreprocessConfig& cfg) {
    std::vector<std::string> tokens;
    for (const auto& piece : detail::split_whitespace(text)) {
        std::size_t lo = 0;
        std::size_t hi = piece.cps.size();
        while (lo < hi && detail::is_punctuation(piece.cps[lo])) ++lo;
        while (hi > lo && detail::is_punctuation(piece.cps[hi - 1])) --hi;
        if (hi - lo < cfg.min_token_len) continue;

        std::string token;
        bool alphabetic = true;
        for (std::size_t k = lo; k < hi; ++k) {
            char32_t c = piece.cps[k];
            const bool upper = c >= U'A' && c <= U'Z';
            const bool lower = c >= U'a' && c <= U'z';
            if (!upper && !lower) alphabetic = false;
            if (upper && cfg.lowercase) c = c - U'A' + U'a';
            detail::append_utf8(token, c);
        }
        if (cfg.alphabetic_only && !alphabetic) continue;
        if (cfg.stopwords.contains(cfg.lowercase ? token : ascii_lower(token))) continue;
        tokens.push_back(std::move(token));
    }
    return tokens;
}

inline std::vector<TokenizedIdea> tokenize_ideas(const std::vector<IdeaRecord>& records,
                                                 const PreprocessConfig& cfg) {
    std::vector<TokenizedIdea> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.id, tokenize_and_filter(r.text, cfg)});
    return out;
}

inline InputFormat parse_input_format(std::string_view name) {
    if (name == "jsonl") return InputFormat::jsonl;
    if (name == "text" || name == "plaintext" || name == "txt") return InputFormat::plaintext;
    throw ArgumentError("unknown input format: " + std::string(name));
}

// Reads ideas from a stream. Ids are assigned densely in input order; blank
// lines and blank texts are skipped.
inline std::vector<IdeaRecord> parse_ideas(std::istream& in, InputFormat format) {
    std::vector<IdeaRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!detail::is_valid_utf8(line)) throw ParseError("invalid UTF-8", lineno);
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;

        IdeaRecord rec;
        if (format == InputFormat::plaintext) {
            rec.text = std::string(trimmed);
        } else {
            nlohmann::json row;
            try {
                row = nlohmann::json::parse(trimmed);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
            }
            if (!row.is_object()) throw ParseError("JSON row is not an object", lineno);
            const auto text = row.find("text");
            if (text == row.end() || !text->is_string())
                throw ParseError("missing string field \"text\"", lineno);
            for (const char* key : {"speaker", "group"}) {
                const auto it = row.find(key);
                if (it == row.end() || it->is_null()) continue;
                if (!it->is_string())
                    throw ParseError(std::string("field \"") + key + "\" is not a string", lineno);
                (std::string_view(key) == "speaker" ? rec.speaker : rec.group) =
                    it->get<std::string>();
            }
            const auto body = detail::trim(text->get_ref<const std::string&>());
            if (body.empty()) continue;
            rec.text = std::string(body);
        }
        rec.id = records.size();
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<IdeaRecord> ingest(const std::filesystem::path& source, InputFormat format) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + source.string());
    auto records = parse_ideas(in, format);
    if (in.bad()) throw IoError("read failure: " + source.string());
    return records;
}

// Stopword file: one word per line; blank lines and '#' comments ignored.
inline std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword file: " + path.string());
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        const auto w = detail::trim(line);
        if (w.empty() || w.front() == '#') continue;
        words.insert(ascii_lower(w));
    }
    return words;
}

}  // namespace ideatopics
