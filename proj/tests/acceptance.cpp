// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <fstream>
#include <iostream>

#include "ideatopics/ideatopics.hpp"
#include "support.hpp"

using namespace ideatopics;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs > budget_s) {
        o.ok = false;
        o.detail = "over time budget";
    }
    if (!o.ok) ++failures;
    std::printf("%s  %-44s %7.3fs / %gs  %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs, budget_s,
                o.detail.c_str());
    std::fflush(stdout);
}

std::vector<double> rand_vec(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.uniform(-1, 1);
    return v;
}

Outcome avg_cosine_oracle() {
    Outcome o;
    Rng rng(20240601);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + rng.below(32), n = 1 + rng.below(20), words = 2 + rng.below(6);
        std::vector<std::vector<double>> sents, wv;
        for (std::size_t i = 0; i < n; ++i) sents.push_back(rand_vec(rng, d));
        for (std::size_t i = 0; i < words; ++i) wv.push_back(rand_vec(rng, d));
        ClusterVocabulary v;
        for (std::size_t i = 0; i < words; ++i) v.words.push_back("w" + std::to_string(10 + i));
        v.word_vectors = Matrix::from_rows(wv);
        v.sentence_vectors = Matrix::from_rows(sents);
        v.sentence_ids.resize(n);
        for (std::size_t i = 0; i < words; ++i) {
            const double got = average_cosine_similarity(wv[i], v.sentence_vectors);
            worst = std::max(worst, std::abs(got - ref::avg_cosine(wv[i], sents)));
            o.require(got >= -1.0 && got <= 1.0, "score outside [-1,1]");
        }
        const auto ranked = score_vocabulary(v);
        for (std::size_t r = 0; r < n; ++r) {
            const double s = 0.05 + 20 * rng.uniform();
            for (std::size_t c = 0; c < d; ++c) v.sentence_vectors(r, c) *= s;
        }
        const auto scaled = score_vocabulary(v);
        for (std::size_t i = 0; i < ranked.size(); ++i)
            o.require(ranked[i].word == scaled[i].word, "ranking changed under positive scaling");
    }
    o.require(worst <= 1e-12, "max deviation " + std::to_string(worst));
    if (o.ok) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "100 instances, max |diff| = %.2e", worst);
        o.detail = buf;
    }
    return o;
}

Outcome hdbscan_reference() {
    Outcome o;
    Rng rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 6 + rng.below(35);
        const bool grid = trial % 2 == 1;
        Matrix x(n, 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < 2; ++c)
                x(i, c) = grid ? static_cast<double>(rng.below(7)) + (rng.below(3) == 0 ? 9.0 : 0.0) : rng.uniform(0, 10);
        const std::size_t mcs = 2 + rng.below(4), ms = 1 + rng.below(std::min<std::size_t>(4, n - 1));
        const auto got = hdbscan(x, {mcs, ms}).labels;
        const auto want = ref::hdbscan_labels(x, mcs, ms);
        o.require(ref::same_partition(got, want), "partition mismatch on dataset " + std::to_string(trial));
    }
    Rng brng(5);
    auto x = ref::blobs({{0, 0}, {10, 0}}, 20, 0.1, brng);
    for (const auto& p : std::vector<std::vector<double>>{{40, 40}, {-40, 35}, {5, -45}}) x.append_row(p);
    const auto a = hdbscan(x, {5, std::nullopt});
    o.require(a.n_clusters == 2, "planted blobs: " + std::to_string(a.n_clusters) + " clusters");
    o.require(a.outlier_count() == 3, "planted blobs: " + std::to_string(a.outlier_count()) + " outliers");
    if (o.ok) o.detail = "50 datasets match; planted: 2 clusters, 3 outliers";
    return o;
}

Outcome mst_optimality() {
    Outcome o;
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(6);
        Matrix pts(n, 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < 2; ++c) pts(i, c) = static_cast<double>(rng.below(5));
        const auto d = mutual_reachability(pts, 1);
        double w = 0;
        for (const auto& e : build_mst(d)) w += e.weight;
        o.require(w == ref::brute_force_mst_weight(d), "instance " + std::to_string(trial) + " not minimal");
    }
    if (o.ok) o.detail = "20 instances, n <= 7, exact";
    return o;
}

Outcome umap_structure() {
    Outcome o;
    Rng rng(31337);
    std::vector<std::vector<double>> centers(3, std::vector<double>(16, 0.0));
    centers[1][0] = 10;
    centers[2][3] = 10;
    std::vector<int> truth;
    const auto x = ref::blobs(centers, 30, 0.05, rng, &truth);
    UmapConfig cfg;
    cfg.metric = Metric::euclidean;
    const auto y = umap_reduce(x, cfg);
    const auto y2 = umap_reduce(x, cfg);
    std::size_t kept = 0;
    double worst_point = 1.0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < y.rows(); ++j)
            if (j != i) d.emplace_back(ref::l2(y, i, j), j);
        std::partial_sort(d.begin(), d.begin() + 5, d.end());
        std::size_t mine = 0;
        for (int t = 0; t < 5; ++t) mine += truth[d[t].second] == truth[i];
        kept += mine;
        worst_point = std::min(worst_point, mine / 5.0);
    }
    const double frac = static_cast<double>(kept) / (5.0 * static_cast<double>(y.rows()));
    o.require(frac >= 0.9, "neighbor preservation " + std::to_string(frac));
    o.require(worst_point >= 0.9, "a point keeps only " + std::to_string(worst_point) + " of its neighbors");
    o.require(std::memcmp(y.data().data(), y2.data().data(), sizeof(double) * y.rows() * 2) == 0, "coordinates differ between runs");
    if (o.ok) o.detail = "neighbor preservation " + std::to_string(frac) + ", byte-identical rerun";
    return o;
}

Outcome coherence_oracle() {
    Outcome o;
    const TokenizedCorpus corpus = {
        {"parking", "permit", "garage", "ticket"}, {"parking", "garage", "permit", "bus"},
        {"dining", "lunch", "menu", "food"},       {"dining", "menu", "food", "parking"},
        {"bus", "shuttle", "ticket", "lunch"},     {"shuttle", "bus", "parking", "permit"},
    };
    const std::vector<WordList> topics = {
        {0, {"parking", "permit", "garage", "ticket"}},
        {1, {"dining", "lunch", "menu", "food"}},
        {2, {"bus", "shuttle", "ticket"}},
    };
    // hand-computed reference values
    const double npmi110[] = {0.27511641076191334, 0.6131471927702423, 0.28574137970476104};
    const double cv110[] = {0.7571319386238666, 0.894532143479202, 0.7978617929968178};
    const double npmi3[] = {0.025622059264535438, 0.4110231540500527, 0.31142134539578764};
    const double cv3[] = {0.5315815243792242, 0.873515360826842, 0.825845181603472};
    double worst = 0;
    for (std::size_t w : {std::size_t{110}, std::size_t{3}}) {
        CoherenceConfig c;
        c.window_size = w;
        c.metric = CoherenceMetric::c_npmi;
        const auto np = score_word_lists(topics, corpus, c);
        c.metric = CoherenceMetric::c_v;
        const auto cv = score_word_lists(topics, corpus, c);
        for (int t = 0; t < 3; ++t) {
            worst = std::max(worst, std::abs(*np.per_topic[t].score - (w == 3 ? npmi3 : npmi110)[t]));
            worst = std::max(worst, std::abs(*cv.per_topic[t].score - (w == 3 ? cv3 : cv110)[t]));
            o.require(*cv.per_topic[t].score >= -1 && *cv.per_topic[t].score <= 1, "C_V outside [-1,1]");
        }
    }
    o.require(worst <= 1e-9, "max deviation " + std::to_string(worst));
    if (o.ok) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "max |diff| = %.2e", worst);
        o.detail = buf;
    }
    return o;
}

Outcome planted_recovery() {
    Outcome o;
    const auto dir = ref::scratch_dir("acceptance_e2e");
    const auto pc = generate_planted_corpus(4, 200, 2024);
    {
        std::ofstream f(dir / "ideas.jsonl");
        for (const auto& r : pc.records) f << nlohmann::json{{"text", r.text}}.dump() << "\n";
    }
    PipelineConfig cfg;
    cfg.input = dir / "ideas.jsonl";
    cfg.out = dir / "out";
    cfg.target_topics = 4;
    cfg.coherence.metric = CoherenceMetric::c_npmi;
    HashEmbeddingProvider hp(cfg.dim, cfg.embedding_seed());
    const auto art = run_pipeline(cfg, hp);
    const auto& topics = art.analysis.topics.topics;
    o.require(topics.size() == 4, std::to_string(topics.size()) + " topics after refinement");
    if (!o.ok) return o;

    std::vector<std::vector<std::size_t>> members;
    for (const auto& t : topics) members.push_back(t.member_ids);
    const double purity = ref::purity(members, pc.theme_of);
    o.require(purity >= 0.9, "purity " + std::to_string(purity));

    for (std::size_t theme = 0; theme < 4; ++theme) {
        // the topic holding most of this theme's ideas
        std::size_t best = 0, best_count = 0;
        for (std::size_t t = 0; t < topics.size(); ++t) {
            std::size_t c = 0;
            for (auto id : topics[t].member_ids) c += pc.theme_of[id] == static_cast<int>(theme);
            if (c > best_count) best = t, best_count = c;
        }
        bool found = false;
        for (const auto& w : topics[best].words) found = found || w.word == pc.seed_words[theme];
        o.require(found, "seed word '" + pc.seed_words[theme] + "' missing from its topic's top words");
    }

    TokenizedCorpus corpus;
    std::set<std::string> vocab_set;
    for (const auto& idea : tokenize_ideas(art.records, cfg.preprocess())) {
        corpus.push_back(idea.tokens);
        vocab_set.insert(idea.tokens.begin(), idea.tokens.end());
    }
    std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());
    Rng rng(4242);
    std::vector<WordList> random_sets;
    for (int s = 0; s < 4; ++s) {
        auto pool = vocab;
        WordList l{s, {}};
        for (int i = 0; i < 10; ++i) {
            const std::size_t at = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[at]);
            l.words.push_back(pool[i]);
        }
        random_sets.push_back(l);
    }
    const double recovered = *art.coherence_report.overall;
    const double random = *score_word_lists(random_sets, corpus, cfg.coherence).overall;
    o.require(recovered - random >= 0.2,
              "C_NPMI margin " + std::to_string(recovered) + " vs random " + std::to_string(random));
    if (o.ok)
        o.detail = "purity " + std::to_string(purity) + ", C_NPMI " + std::to_string(recovered) + " vs random " +
                   std::to_string(random);
    return o;
}

Outcome sweep_protocol() {
    Outcome o;
    const auto dir = ref::scratch_dir("acceptance_sweep");
    const auto pc = generate_planted_corpus(12, 360, 7);
    {
        std::ofstream f(dir / "ideas.jsonl");
        for (const auto& r : pc.records) f << nlohmann::json{{"text", r.text}}.dump() << "\n";
    }
    const std::string cmd = std::string(IDEATOPICS_CLI) + " sweep --input " + (dir / "ideas.jsonl").string() +
                            " --out " + (dir / "out").string() + " --counts 2,4,6,8,10 --runs 3 > /dev/null";
    o.require(std::system(cmd.c_str()) == 0, "sweep command failed");
    if (!o.ok) return o;
    const auto doc = nlohmann::json::parse(detail::read_file(dir / "out" / "sweep.json"));
    const auto& runs = doc["runs"];
    std::size_t executed = 0;
    double gv = 0, gn = 0;
    for (const auto& r : runs) {
        if (r["status"] != "ok") continue;
        ++executed;
        gv += r["c_v"].get<double>();
        gn += r["c_npmi"].get<double>();
    }
    o.require(runs.size() == 15 && executed == 15, std::to_string(executed) + " of " + std::to_string(runs.size()) +
                                                       " runs executed");
    o.require(doc["rows"].size() == 5, "expected 5 averaged rows");
    for (const auto& row : doc["rows"]) {
        double sv = 0, sn = 0;
        int k = 0;
        for (const auto& r : runs)
            if (r["count"] == row["count"] && r["status"] == "ok") sv += r["c_v"].get<double>(), sn += r["c_npmi"].get<double>(), ++k;
        o.require(k == 3, "count " + row["count"].dump() + " has " + std::to_string(k) + " runs");
        o.require(std::abs(row["c_v"].get<double>() - sv / k) <= 1e-12 &&
                      std::abs(row["c_npmi"].get<double>() - sn / k) <= 1e-12,
                  "row average mismatch at count " + row["count"].dump());
    }
    const auto& gm = doc["grand_mean"];
    o.require(std::abs(gm["c_v"].get<double>() - gv / 15) <= 1e-12 &&
                  std::abs(gm["c_npmi"].get<double>() - gn / 15) <= 1e-12,
              "grand mean mismatch");
    if (o.ok) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "15 runs, 5 rows; grand mean C_V %.3f, C_NPMI %.3f", gv / 15, gn / 15);
        o.detail = buf;
    }
    return o;
}

Outcome refinement_contract() {
    Outcome o;
    Rng rng(1010);
    TopicSet set;
    std::size_t next = 0, total = 0;
    for (int t = 0; t < 10; ++t) {
        ClusterVocabulary v;
        v.cluster_id = t;
        std::vector<std::vector<double>> wv, sv;
        for (int w = 0; w < 6; ++w) {
            v.words.push_back("c" + std::to_string(t) + "_" + std::to_string(w));
            wv.push_back(rand_vec(rng, 12));
        }
        std::sort(v.words.begin(), v.words.end());
        const std::size_t m = 3 + rng.below(12);
        for (std::size_t i = 0; i < m; ++i) {
            v.sentence_ids.push_back(next++);
            sv.push_back(rand_vec(rng, 12));
        }
        v.word_vectors = Matrix::from_rows(wv);
        v.sentence_vectors = Matrix::from_rows(sv);
        total += m;
        set.topics.push_back(make_topic(std::move(v), 10));
    }
    const auto r = refine_topics(set, 4);
    std::size_t after = 0;
    std::set<std::size_t> ids;
    for (const auto& t : r.topics) {
        after += t.member_count();
        ids.insert(t.member_ids.begin(), t.member_ids.end());
    }
    o.require(r.merges.size() == 6, std::to_string(r.merges.size()) + " merges");
    o.require(r.topics.size() == 4, std::to_string(r.topics.size()) + " topics");
    o.require(after == total && ids.size() == total, "membership not conserved");
    if (o.ok) o.detail = "6 merges, " + std::to_string(total) + " members conserved";
    return o;
}

}  // namespace

int main() {
    criterion("Average-cosine word score oracle", 1, avg_cosine_oracle);
    criterion("HDBSCAN reference equivalence", 10, hdbscan_reference);
    criterion("MST optimality", 5, mst_optimality);
    criterion("UMAP structure preservation", 30, umap_structure);
    criterion("Coherence oracle", 1, coherence_oracle);
    criterion("End-to-end planted-topic recovery", 60, planted_recovery);
    criterion("Sweep protocol shape (15 runs)", 120, sweep_protocol);
    criterion("Refinement contract", 1, refinement_contract);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
