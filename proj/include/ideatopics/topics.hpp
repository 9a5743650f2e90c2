#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ideatopics/cluster.hpp"
#include "ideatopics/corpus.hpp"
#include "ideatopics/embed.hpp"
#include "ideatopics/error.hpp"
#include "ideatopics/matrix.hpp"

namespace ideatopics {

// Vocabulary W of one cluster (words sorted, unique) with the member
// sentences S it is scored against.
struct ClusterVocabulary {
    int cluster_id = 0;
    std::vector<std::string> words;
    Matrix word_vectors;
    std::vector<std::size_t> sentence_ids;
    Matrix sentence_vectors;

    bool degenerate() const noexcept { return words.empty(); }

    std::optional<std::size_t> word_index(const std::string& w) const {
        const auto it = std::lower_bound(words.begin(), words.end(), w);
        if (it == words.end() || *it != w) return std::nullopt;
        return static_cast<std::size_t>(it - words.begin());
    }
};

struct ScoredWord {
    std::string word;
    double score = 0.0;

    friend bool operator==(const ScoredWord&, const ScoredWord&) = default;
};

struct Topic {
    int cluster_id = 0;
    std::vector<ScoredWord> words;  // descending score, ties by word
    std::size_t k = 10;
    std::vector<std::size_t> member_ids;
    ClusterVocabulary vocabulary;

    std::size_t member_count() const noexcept { return member_ids.size(); }
    bool degenerate() const noexcept { return words.empty(); }
};

struct MergeRecord {
    int absorbed;
    int into;
    double similarity;
};

struct TopicSet {
    std::vector<Topic> topics;
    std::optional<std::size_t> target_count;
    std::vector<MergeRecord> merges;
    std::vector<int> preserved;  // cluster ids kept by the similarity threshold
    bool stopped_early = false;
};

// Mean cosine between one word vector and each sentence vector of its
// cluster. Zero-norm vectors contribute 0.
inline double average_cosine_similarity(std::span<const double> word_vec, const Matrix& sentence_vecs) {
    if (sentence_vecs.rows() == 0) throw ArgumentError("average_cosine_similarity: no sentences");
    if (sentence_vecs.cols() != word_vec.size())
        throw ArgumentError("average_cosine_similarity: dimension mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < sentence_vecs.rows(); ++j) sum += cosine(word_vec, sentence_vecs.row(j));
    return sum / static_cast<double>(sentence_vecs.rows());
}

inline bool ranks_before(const ScoredWord& a, const ScoredWord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.word < b.word;
}

inline std::vector<ScoredWord> score_vocabulary(const ClusterVocabulary& vocab) {
    std::vector<ScoredWord> scored;
    scored.reserve(vocab.words.size());
    for (std::size_t i = 0; i < vocab.words.size(); ++i)
        scored.push_back({vocab.words[i], average_cosine_similarity(vocab.word_vectors.row(i), vocab.sentence_vectors)});
    std::sort(scored.begin(), scored.end(), ranks_before);
    return scored;
}

// Rows of `sentences` are looked up by idea id.
inline Matrix gather_rows(const EmbeddingMatrix& sentences, const std::vector<std::size_t>& ids) {
    Matrix out(ids.size(), sentences.dim());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] >= sentences.rows()) throw ArgumentError("idea id out of range for sentence embeddings");
        const auto src = sentences.row(ids[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

// Builds W for one cluster. Word vectors come from embedding each word as a
// one-token text through the same provider as the sentences. Throws
// DegenerateClusterError when no token survives preprocessing.
inline ClusterVocabulary build_cluster_vocabulary(int cluster_id, std::span<const TokenizedIdea> members,
                                                  const EmbeddingProvider& provider,
                                                  const EmbeddingMatrix& sentence_embeddings) {
    if (members.empty()) throw ArgumentError("cluster has no members");
    ClusterVocabulary v;
    v.cluster_id = cluster_id;
    std::set<std::string> words;
    for (const auto& m : members) {
        v.sentence_ids.push_back(m.id);
        words.insert(m.tokens.begin(), m.tokens.end());
    }
    v.sentence_vectors = gather_rows(sentence_embeddings, v.sentence_ids);
    if (words.empty())
        throw DegenerateClusterError("cluster " + std::to_string(cluster_id) + " has no words after preprocessing");
    v.words.assign(words.begin(), words.end());
    v.word_vectors = embed_texts(provider, v.words).data;
    if (v.word_vectors.cols() != v.sentence_vectors.cols())
        throw ArgumentError("word and sentence embeddings differ in dimension");
    return v;
}

// One vocabulary per cluster label, ordered by label. Degenerate clusters get
// a vocabulary with no words instead of an exception.
inline std::vector<ClusterVocabulary> build_vocabularies(const ClusterAssignment& assignment,
                                                         const std::vector<TokenizedIdea>& ideas,
                                                         const EmbeddingProvider& provider,
                                                         const EmbeddingMatrix& sentence_embeddings) {
    std::vector<std::vector<TokenizedIdea>> members(assignment.n_clusters);
    for (const auto& idea : ideas) {
        const int label = assignment.labels.at(idea.id);
        if (label >= 0) members[static_cast<std::size_t>(label)].push_back(idea);
    }
    std::vector<ClusterVocabulary> out;
    for (std::size_t c = 0; c < members.size(); ++c) {
        try {
            out.push_back(build_cluster_vocabulary(static_cast<int>(c), members[c], provider, sentence_embeddings));
        } catch (const DegenerateClusterError&) {
            ClusterVocabulary empty;
            empty.cluster_id = static_cast<int>(c);
            for (const auto& m : members[c]) empty.sentence_ids.push_back(m.id);
            empty.sentence_vectors = gather_rows(sentence_embeddings, empty.sentence_ids);
            out.push_back(std::move(empty));
        }
    }
    return out;
}

inline Topic make_topic(ClusterVocabulary vocab, std::size_t k) {
    if (k < 1) throw ArgumentError("k must be >= 1");
    Topic t;
    t.cluster_id = vocab.cluster_id;
    t.k = k;
    t.member_ids = vocab.sentence_ids;
    std::sort(t.member_ids.begin(), t.member_ids.end());
    if (!vocab.degenerate()) {
        t.words = score_vocabulary(vocab);
        if (t.words.size() > k) t.words.resize(k);
    }
    t.vocabulary = std::move(vocab);
    return t;
}

// Scores every vocabulary word, keeps the top min(k, n) per cluster. Outliers
// (label -1) carry no vocabulary and never reach this point.
inline TopicSet extract_topics(const ClusterAssignment& assignment, std::vector<ClusterVocabulary> vocabularies,
                               std::size_t k) {
    if (k < 1) throw ArgumentError("k must be >= 1");
    std::sort(vocabularies.begin(), vocabularies.end(),
              [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
    for (std::size_t i = 1; i < vocabularies.size(); ++i)
        if (vocabularies[i].cluster_id == vocabularies[i - 1].cluster_id)
            throw ArgumentError("duplicate vocabulary for cluster " + std::to_string(vocabularies[i].cluster_id));

    TopicSet set;
    for (auto& vocab : vocabularies) {
        if (vocab.cluster_id < 0) throw ArgumentError("outlier label has no topic");
        std::vector<std::size_t> expected;
        for (std::size_t i = 0; i < assignment.labels.size(); ++i)
            if (assignment.labels[i] == vocab.cluster_id) expected.push_back(i);
        auto have = vocab.sentence_ids;
        std::sort(have.begin(), have.end());
        if (have != expected)
            throw ArgumentError("vocabulary members of cluster " + std::to_string(vocab.cluster_id) +
                                " disagree with the assignment");
        set.topics.push_back(make_topic(std::move(vocab), k));
    }
    return set;
}

inline std::vector<double> topic_centroid(const Topic& t) {
    if (t.degenerate()) throw UndefinedSimilarityError("topic " + std::to_string(t.cluster_id) + " has no words");
    std::vector<double> c(t.vocabulary.word_vectors.cols(), 0.0);
    for (const auto& w : t.words) {
        const auto idx = t.vocabulary.word_index(w.word);
        if (!idx) throw ArgumentError("topic word missing from its vocabulary: " + w.word);
        const auto row = t.vocabulary.word_vectors.row(*idx);
        for (std::size_t d = 0; d < c.size(); ++d) c[d] += row[d];
    }
    for (double& x : c) x /= static_cast<double>(t.words.size());
    return c;
}

// Cosine between the mean top-k word vectors of two topics.
inline double topic_similarity(const Topic& a, const Topic& b) {
    const auto ca = topic_centroid(a);
    const auto cb = topic_centroid(b);
    if (ca.size() != cb.size()) throw ArgumentError("topic_similarity: dimension mismatch");
    return cosine(ca, cb);
}

// Union of two topics; words re-scored from scratch over the merged sentences.
inline Topic merge_topics(const Topic& absorbed, const Topic& into) {
    ClusterVocabulary v;
    v.cluster_id = into.cluster_id;

    std::map<std::string, std::span<const double>> words;
    for (const Topic* t : {&into, &absorbed})
        for (std::size_t i = 0; i < t->vocabulary.words.size(); ++i)
            words.try_emplace(t->vocabulary.words[i], t->vocabulary.word_vectors.row(i));
    for (const auto& [w, vec] : words) {
        v.words.push_back(w);
        v.word_vectors.append_row(vec);
    }

    std::map<std::size_t, std::span<const double>> sentences;
    for (const Topic* t : {&into, &absorbed})
        for (std::size_t i = 0; i < t->vocabulary.sentence_ids.size(); ++i)
            sentences.try_emplace(t->vocabulary.sentence_ids[i], t->vocabulary.sentence_vectors.row(i));
    for (const auto& [id, vec] : sentences) {
        v.sentence_ids.push_back(id);
        v.sentence_vectors.append_row(vec);
    }
    return make_topic(std::move(v), into.k);
}

struct RefineOptions {
    // When set, a topic whose best similarity to every other topic is below
    // this value is kept as a unique topic instead of being merged.
    std::optional<double> preserve_below;
};

// Repeatedly merges the least common topic (fewest members, then smallest
// cluster id) into its most similar counterpart (highest similarity, then
// smallest cluster id) until target_count topics remain.
inline TopicSet refine_topics(TopicSet set, std::size_t target_count, const RefineOptions& options = {}) {
    if (target_count < 1 || target_count > set.topics.size())
        throw ArgumentError("target topic count " + std::to_string(target_count) + " outside [1, " +
                            std::to_string(set.topics.size()) + "]");
    set.target_count = target_count;
    std::set<int> preserved(set.preserved.begin(), set.preserved.end());

    while (set.topics.size() > target_count) {
        std::vector<std::size_t> order(set.topics.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& ta = set.topics[a];
            const auto& tb = set.topics[b];
            if (ta.member_count() != tb.member_count()) return ta.member_count() < tb.member_count();
            return ta.cluster_id < tb.cluster_id;
        });

        std::optional<std::pair<std::size_t, std::size_t>> choice;
        double choice_sim = 0.0;
        for (std::size_t src : order) {
            const Topic& s = set.topics[src];
            if (preserved.contains(s.cluster_id)) continue;

            // degenerate topics are only targets when nothing else is left
            std::vector<std::size_t> targets;
            for (std::size_t j = 0; j < set.topics.size(); ++j)
                if (j != src && !set.topics[j].degenerate()) targets.push_back(j);
            if (targets.empty())
                for (std::size_t j = 0; j < set.topics.size(); ++j)
                    if (j != src) targets.push_back(j);
            const bool defined = !s.degenerate() && !set.topics[targets.front()].degenerate();

            std::optional<std::size_t> best;
            double best_sim = 0.0;
            for (std::size_t j : targets) {
                const Topic& c = set.topics[j];
                // undefined similarity: all candidates tie
                const double sim = defined ? topic_similarity(s, c) : 0.0;
                if (!best || sim > best_sim || (sim == best_sim && c.cluster_id < set.topics[*best].cluster_id)) {
                    best = j;
                    best_sim = sim;
                }
            }
            if (!best) continue;
            if (options.preserve_below && defined && best_sim < *options.preserve_below) {
                preserved.insert(s.cluster_id);
                continue;
            }
            choice = {src, *best};
            choice_sim = defined ? best_sim : 0.0;
            break;
        }
        if (!choice) {
            set.stopped_early = true;
            break;
        }

        const auto [src, dst] = *choice;
        set.merges.push_back({set.topics[src].cluster_id, set.topics[dst].cluster_id, choice_sim});
        set.topics[dst] = merge_topics(set.topics[src], set.topics[dst]);
        set.topics.erase(set.topics.begin() + static_cast<std::ptrdiff_t>(src));
    }
    set.preserved.assign(preserved.begin(), preserved.end());
    return set;
}

}  // namespace ideatopics
