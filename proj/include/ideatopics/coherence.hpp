#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ideatopics/error.hpp"
#include "ideatopics/matrix.hpp"
#include "ideatopics/topics.hpp"

namespace ideatopics {

enum class CoherenceMetric { c_v, c_npmi };

inline std::string metric_name(CoherenceMetric m) { return m == CoherenceMetric::c_v ? "c_v" : "c_npmi"; }

inline CoherenceMetric parse_coherence_metric(const std::string& s) {
    if (s == "c_v" || s == "cv") return CoherenceMetric::c_v;
    if (s == "c_npmi" || s == "npmi") return CoherenceMetric::c_npmi;
    throw ArgumentError("unknown coherence metric: " + s);
}

struct CoherenceConfig {
    CoherenceMetric metric = CoherenceMetric::c_v;
    std::size_t top_n = 10;
    std::optional<std::size_t> window_size;  // 110 for c_v, 10 for c_npmi
    double epsilon = 1e-12;

    std::size_t window() const { return window_size.value_or(metric == CoherenceMetric::c_v ? 110 : 10); }

    void validate() const {
        if (top_n < 2) throw ArgumentError("top_n must be >= 2");
        if (window() < 2) throw ArgumentError("window_size must be >= 2");
        if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
    }
};

using TokenizedCorpus = std::vector<std::vector<std::string>>;

// Boolean sliding-window statistics.
struct WindowCounts {
    std::size_t total_windows = 0;
    std::map<std::string, std::size_t> doc_freq;
    std::map<std::pair<std::string, std::string>, std::size_t> co_freq;  // key ordered first < second

    std::size_t doc(const std::string& w) const {
        const auto it = doc_freq.find(w);
        return it == doc_freq.end() ? 0 : it->second;
    }

    std::size_t co(const std::string& a, const std::string& b) const {
        if (a == b) return doc(a);
        const auto it = co_freq.find(a < b ? std::pair{a, b} : std::pair{b, a});
        return it == co_freq.end() ? 0 : it->second;
    }

    bool contains(const std::string& w) const { return doc(w) > 0; }
};

// Windows of window_size tokens slide with stride 1 inside each document; a
// document shorter than the window is one window and an empty document none.
// Each distinct word counts once per window. When `only` is given, words
// outside it are ignored (their counts are simply not recorded).
inline WindowCounts count_windows(const TokenizedCorpus& corpus, std::size_t window_size,
                                  const std::set<std::string>* only = nullptr) {
    if (corpus.empty()) throw ArgumentError("count_windows: empty corpus");
    if (window_size < 1) throw ArgumentError("window_size must be >= 1");
    WindowCounts wc;
    std::vector<std::string> distinct;
    for (const auto& doc : corpus) {
        if (doc.empty()) continue;
        const std::size_t n_windows = doc.size() <= window_size ? 1 : doc.size() - window_size + 1;
        const std::size_t width = std::min(window_size, doc.size());
        for (std::size_t start = 0; start < n_windows; ++start) {
            ++wc.total_windows;
            distinct.clear();
            for (std::size_t i = start; i < start + width; ++i)
                if (!only || only->contains(doc[i])) distinct.push_back(doc[i]);
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            for (std::size_t a = 0; a < distinct.size(); ++a) {
                ++wc.doc_freq[distinct[a]];
                for (std::size_t b = a + 1; b < distinct.size(); ++b) ++wc.co_freq[{distinct[a], distinct[b]}];
            }
        }
    }
    return wc;
}

// Normalized PMI over window probabilities with epsilon smoothing:
//   log((p(a,b) + eps) / (p(a) p(b))) / -log(p(a,b) + eps)
// For a == b the pair probability is p(a).
inline double npmi(const std::string& a, const std::string& b, const WindowCounts& counts, double epsilon) {
    for (const auto* w : {&a, &b})
        if (!counts.contains(*w)) throw MissingWordError("word not in reference corpus: " + *w);
    const double total = static_cast<double>(counts.total_windows);
    const double pa = static_cast<double>(counts.doc(a)) / total;
    const double pb = static_cast<double>(counts.doc(b)) / total;
    const double pab = static_cast<double>(counts.co(a, b)) / total;
    return std::log((pab + epsilon) / (pa * pb)) / -std::log(pab + epsilon);
}

struct TopicCoherence {
    double score = 0.0;
    std::vector<std::string> missing_words;  // absent from the corpus, scored as NPMI 0
    std::size_t zero_norm_words = 0;         // c_v context vectors with zero norm
};

namespace detail {

inline std::vector<std::string> top_words(const std::vector<std::string>& words, std::size_t top_n) {
    return {words.begin(), words.begin() + static_cast<std::ptrdiff_t>(std::min(top_n, words.size()))};
}

// NPMI, with 0 for any pair involving a word the corpus never saw.
inline double npmi_or_zero(const std::string& a, const std::string& b, const WindowCounts& counts, double eps) {
    if (!counts.contains(a) || !counts.contains(b)) return 0.0;
    return npmi(a, b, counts, eps);
}

inline std::vector<std::string> check_scoreable(const std::vector<std::string>& words, const WindowCounts& counts) {
    std::vector<std::string> missing;
    std::size_t present = 0;
    for (const auto& w : words) {
        if (counts.contains(w)) {
            ++present;
        } else {
            missing.push_back(w);
        }
    }
    if (present < 2) throw UndefinedScoreError("fewer than two topic words occur in the reference corpus");
    return missing;
}

}  // namespace detail

// Mean NPMI over all unordered pairs of the first top_n words.
inline TopicCoherence c_npmi_score(const std::vector<std::string>& topic_words, const WindowCounts& counts,
                                   const CoherenceConfig& cfg) {
    cfg.validate();
    const auto words = detail::top_words(topic_words, cfg.top_n);
    TopicCoherence out;
    out.missing_words = detail::check_scoreable(words, counts);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        for (std::size_t j = i + 1; j < words.size(); ++j) {
            sum += detail::npmi_or_zero(words[i], words[j], counts, cfg.epsilon);
            ++pairs;
        }
    }
    out.score = sum / static_cast<double>(pairs);
    return out;
}

// One-set segmentation with indirect cosine: each word's context vector holds
// its NPMI with every topic word (itself included); the score is the mean
// cosine between each context vector and their sum.
inline TopicCoherence c_v_score(const std::vector<std::string>& topic_words, const WindowCounts& counts,
                                const CoherenceConfig& cfg) {
    cfg.validate();
    const auto words = detail::top_words(topic_words, cfg.top_n);
    TopicCoherence out;
    out.missing_words = detail::check_scoreable(words, counts);

    const std::size_t m = words.size();
    Matrix ctx(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) ctx(i, j) = detail::npmi_or_zero(words[i], words[j], counts, cfg.epsilon);
    std::vector<double> set_vec(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) set_vec[j] += ctx(i, j);

    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (norm(ctx.row(i)) == 0.0) {
            ++out.zero_norm_words;
            continue;
        }
        sum += cosine(ctx.row(i), set_vec);
    }
    out.score = sum / static_cast<double>(m);
    return out;
}

inline TopicCoherence score_words(const std::vector<std::string>& words, const WindowCounts& counts,
                                  const CoherenceConfig& cfg) {
    return cfg.metric == CoherenceMetric::c_v ? c_v_score(words, counts, cfg) : c_npmi_score(words, counts, cfg);
}

struct CoherenceReport {
    struct Entry {
        int id;
        std::optional<double> score;  // nullopt when the topic could not be scored
        std::vector<std::string> missing_words;
        std::string error;
    };

    CoherenceMetric metric = CoherenceMetric::c_v;
    std::vector<Entry> per_topic;
    std::optional<double> overall;  // mean of the scored topics
    std::size_t warnings = 0;
};

struct WordList {
    int id;
    std::vector<std::string> words;
};

// Scores arbitrary word lists (e.g. another model's topics) against a corpus.
inline CoherenceReport score_word_lists(const std::vector<WordList>& lists, const TokenizedCorpus& corpus,
                                        const CoherenceConfig& cfg) {
    cfg.validate();
    std::set<std::string> vocab;
    for (const auto& l : lists)
        for (const auto& w : detail::top_words(l.words, cfg.top_n)) vocab.insert(w);
    const auto counts = count_windows(corpus, cfg.window(), &vocab);

    CoherenceReport report;
    report.metric = cfg.metric;
    double sum = 0.0;
    std::size_t scored = 0;
    for (const auto& l : lists) {
        CoherenceReport::Entry e{l.id, std::nullopt, {}, {}};
        try {
            const auto tc = score_words(l.words, counts, cfg);
            e.score = tc.score;
            e.missing_words = tc.missing_words;
            if (!tc.missing_words.empty() || tc.zero_norm_words > 0) ++report.warnings;
            sum += tc.score;
            ++scored;
        } catch (const UndefinedScoreError& err) {
            e.error = err.what();
            ++report.warnings;
        }
        report.per_topic.push_back(std::move(e));
    }
    if (scored > 0) report.overall = sum / static_cast<double>(scored);
    return report;
}

inline std::vector<WordList> topic_word_lists(const TopicSet& topics) {
    std::vector<WordList> lists;
    for (const auto& t : topics.topics) {
        WordList l{t.cluster_id, {}};
        for (const auto& w : t.words) l.words.push_back(w.word);
        lists.push_back(std::move(l));
    }
    return lists;
}

inline CoherenceReport score_topic_set(const TopicSet& topics, const TokenizedCorpus& corpus,
                                       const CoherenceConfig& cfg) {
    return score_word_lists(topic_word_lists(topics), corpus, cfg);
}

}  // namespace ideatopics
