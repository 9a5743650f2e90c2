#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "ideatopics/corpus.hpp"
#include "ideatopics/error.hpp"
#include "ideatopics/random.hpp"

namespace ideatopics {

// Planted-theme brainstorming transcripts for demos and end-to-end tests.
// Theme vocabularies are disjoint; the first word of each is its seed word and
// occurs in every idea of the theme.
struct PlantedTheme {
    std::string name;
    std::vector<std::string> words;
};

inline const std::vector<PlantedTheme>& planted_themes() {
    static const std::vector<PlantedTheme> themes = {
        {"parking", {"parking", "garage", "permit", "ticket", "lot", "spaces", "meter", "commuter", "driving", "towing"}},
        {"dining", {"dining", "menu", "lunch", "cafeteria", "food", "meals", "vegetarian", "breakfast", "snacks", "kitchen"}},
        {"housing", {"housing", "dorm", "residence", "roommate", "rent", "apartment", "laundry", "elevator", "maintenance", "furniture"}},
        {"tuition", {"tuition", "scholarship", "financial", "aid", "loans", "fees", "grants", "budget", "payment", "debt"}},
        {"library", {"library", "books", "quiet", "printing", "librarian", "journals", "study", "carrels", "archives", "checkout"}},
        {"advising", {"advising", "advisor", "degree", "courses", "curriculum", "major", "requirements", "planning", "counselor", "career"}},
        {"athletics", {"athletics", "gym", "football", "stadium", "fitness", "basketball", "coach", "tournament", "swimming", "intramural"}},
        {"transit", {"transit", "shuttle", "bus", "bike", "route", "schedule", "stops", "rides", "scooter", "station"}},
        {"internet", {"internet", "wifi", "network", "bandwidth", "router", "laptop", "connection", "outage", "password", "signal"}},
        {"events", {"events", "concert", "festival", "newsletter", "announcements", "calendar", "posters", "clubs", "social", "gathering"}},
        {"safety", {"safety", "security", "lighting", "police", "emergency", "escort", "crime", "cameras", "patrol", "alarm"}},
        {"sustainability", {"sustainability", "recycling", "solar", "compost", "energy", "plastic", "garden", "emissions", "water", "trees"}},
    };
    return themes;
}

struct PlantedCorpus {
    std::vector<IdeaRecord> records;
    std::vector<int> theme_of;  // theme index per idea, -1 for noise ideas
    std::vector<std::string> theme_names;
    std::vector<std::string> seed_words;
};

// n_ideas themed ideas assigned round-robin over the first n_themes themes,
// plus n_noise gibberish ideas appended at the end.
inline PlantedCorpus generate_planted_corpus(std::size_t n_themes, std::size_t n_ideas, std::uint64_t seed,
                                             std::size_t n_noise = 0) {
    const auto& themes = planted_themes();
    if (n_themes < 1 || n_themes > themes.size())
        throw ArgumentError("theme count must be in [1, " + std::to_string(themes.size()) + "]");
    // Short connectives keep the theme words dominant in bag-of-words
    // embeddings while still giving the stopword filter something to do.
    static const std::array<const char*, 8> openers{
        "we need", "more", "better", "fix the", "add", "what about", "improve", "please",
    };
    static const std::array<const char*, 6> closers{"for students", "on campus", "", "", "", "soon"};

    Rng rng(seed);
    PlantedCorpus pc;
    for (std::size_t t = 0; t < n_themes; ++t) {
        pc.theme_names.push_back(themes[t].name);
        pc.seed_words.push_back(themes[t].words.front());
    }
    for (std::size_t i = 0; i < n_ideas; ++i) {
        const std::size_t t = i % n_themes;
        const auto& words = themes[t].words;
        std::vector<std::string> picked{words.front()};
        std::vector<std::size_t> pool(words.size() - 1);
        for (std::size_t p = 0; p < pool.size(); ++p) pool[p] = p + 1;
        const std::size_t extra = 3 + rng.below(2);
        for (std::size_t e = 0; e < extra; ++e) {
            const std::size_t at = e + rng.below(pool.size() - e);
            std::swap(pool[e], pool[at]);
            picked.push_back(words[pool[e]]);
        }
        std::swap(picked[0], picked[rng.below(picked.size())]);

        std::string text = openers[rng.below(openers.size())];
        for (const auto& w : picked) text += " " + w;
        const std::string closer = closers[rng.below(closers.size())];
        if (!closer.empty()) text += " " + closer;

        IdeaRecord r;
        r.id = pc.records.size();
        r.group = themes[t].name;
        r.text = std::move(text);
        pc.records.push_back(std::move(r));
        pc.theme_of.push_back(static_cast<int>(t));
    }
    for (std::size_t i = 0; i < n_noise; ++i) {
        std::string text;
        const std::size_t n_tokens = 2 + rng.below(3);
        for (std::size_t w = 0; w < n_tokens; ++w) {
            if (w) text += ' ';
            const std::size_t len = 4 + rng.below(4);
            for (std::size_t c = 0; c < len; ++c) text += static_cast<char>('a' + rng.below(26));
        }
        IdeaRecord r;
        r.id = pc.records.size();
        r.text = std::move(text);
        pc.records.push_back(std::move(r));
        pc.theme_of.push_back(-1);
    }
    return pc;
}

}  // namespace ideatopics
