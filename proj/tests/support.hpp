#pragma once
// Independent reference implementations and fixtures shared by the unit
// tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "ideatopics/matrix.hpp"
#include "ideatopics/random.hpp"

namespace ref {

using ideatopics::Matrix;
using ideatopics::Rng;

inline double normal(Rng& rng) {
    const double u1 = std::max(rng.uniform(), 1e-300);
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// n_per points around each center with isotropic noise sigma.
inline Matrix blobs(const std::vector<std::vector<double>>& centers, std::size_t n_per, double sigma, Rng& rng,
                    std::vector<int>* truth = nullptr) {
    Matrix m(0, centers.front().size());
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (std::size_t i = 0; i < n_per; ++i) {
            std::vector<double> p = centers[c];
            for (double& x : p) x += sigma * normal(rng);
            m.append_row(p);
            if (truth) truth->push_back(static_cast<int>(c));
        }
    }
    return m;
}

inline double l2(const Matrix& x, std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
    return std::sqrt(s);
}

// Average cosine word score by explicit loops: mean over sentences of dot / (|w| |s|), zero-norm -> 0.
inline double avg_cosine(const std::vector<double>& w, const std::vector<std::vector<double>>& sents) {
    double total = 0;
    for (const auto& s : sents) {
        double d = 0, nw = 0, ns = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            d += w[i] * s[i];
            nw += w[i] * w[i];
            ns += s[i] * s[i];
        }
        total += (nw == 0 || ns == 0) ? 0.0 : d / (std::sqrt(nw) * std::sqrt(ns));
    }
    return total / static_cast<double>(sents.size());
}

// ---- HDBSCAN straight from the definitions -------------------------------

struct RefResult {
    std::vector<int> labels;
};

inline Matrix mreach(const Matrix& x, std::size_t min_samples) {
    const std::size_t n = x.rows();
    std::vector<double> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d.push_back(l2(x, i, j));
        std::sort(d.begin(), d.end());
        core[i] = d[min_samples - 1];
    }
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) m(i, j) = std::max({core[i], core[j], l2(x, i, j)});
    return m;
}

// connected components of `pts` using edges with weight < t (strict) or <= t
inline std::vector<std::vector<std::size_t>> components(const Matrix& d, const std::vector<std::size_t>& pts, double t,
                                                        bool inclusive) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<bool> seen(pts.size(), false);
    for (std::size_t s = 0; s < pts.size(); ++s) {
        if (seen[s]) continue;
        std::vector<std::size_t> comp, stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            comp.push_back(pts[a]);
            for (std::size_t b = 0; b < pts.size(); ++b) {
                if (seen[b]) continue;
                const double w = d(pts[a], pts[b]);
                if (inclusive ? w <= t : w < t) {
                    seen[b] = true;
                    stack.push_back(b);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(comp);
    }
    return out;
}

struct Node {
    double stability = 0;
    std::vector<std::vector<std::size_t>> selection;  // chosen clusters in this subtree
};

inline double lam(double d) { return 1.0 / std::max(d, 1e-12); }

// A cluster born at `birth` holding `pts`: shrink the threshold until it
// splits, let small pieces fall out, recurse into two or more large pieces.
inline Node cluster_node(const Matrix& d, std::vector<std::size_t> pts, double birth, std::size_t mcs) {
    const std::vector<std::size_t> members = pts;
    double stab = 0;
    std::vector<Node> children;
    while (true) {
        std::set<double> weights;
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) weights.insert(d(pts[a], pts[b]));
        double top = 0;
        for (double w : weights) {  // smallest threshold connecting pts
            if (components(d, pts, w, true).size() == 1) {
                top = w;
                break;
            }
        }
        const double l = lam(top);
        std::vector<std::vector<std::size_t>> big;
        for (auto& comp : components(d, pts, top, false)) {
            if (comp.size() >= mcs) big.push_back(comp);
            else stab += (l - birth) * static_cast<double>(comp.size());
        }
        if (big.size() == 1) {
            pts = big.front();
            continue;
        }
        for (auto& comp : big) {
            stab += (l - birth) * static_cast<double>(comp.size());
            children.push_back(cluster_node(d, comp, l, mcs));
        }
        break;
    }
    Node node;
    node.stability = stab;
    double child_sum = 0;
    for (const auto& c : children) child_sum += c.stability;
    if (children.empty() || stab > child_sum) {
        node.selection = {members};
    } else {
        node.stability = child_sum;
        for (auto& c : children)
            for (auto& s : c.selection) node.selection.push_back(s);
    }
    return node;
}

inline std::vector<int> hdbscan_labels(const Matrix& x, std::size_t mcs, std::size_t min_samples) {
    const std::size_t n = x.rows();
    std::vector<int> labels(n, -1);
    if (n < mcs) return labels;
    const auto d = mreach(x, min_samples);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto root = cluster_node(d, all, 0.0, mcs);
    // selected clusters own all their members, including points that fell out
    // of sub-clusters; unselected points stay noise
    int next = 0;
    for (const auto& s : root.selection) {
        for (std::size_t p : s) labels[p] = next;
        ++next;
    }
    return labels;
}

inline std::vector<std::vector<bool>> co_membership(const std::vector<int>& labels) {
    const std::size_t n = labels.size();
    std::vector<std::vector<bool>> m(n, std::vector<bool>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = labels[i] >= 0 && labels[i] == labels[j];
    return m;
}

inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if ((a[i] < 0) != (b[i] < 0)) return false;
    return co_membership(a) == co_membership(b);
}

// ---- exhaustive minimum spanning tree ------------------------------------

inline double brute_force_mst_weight(const Matrix& d) {
    const std::size_t n = d.rows();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> pick(edges.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n - 1), true);
    std::sort(pick.begin(), pick.end());
    do {
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        bool tree = true;
        double w = 0;
        for (std::size_t e = 0; e < edges.size() && tree; ++e) {
            if (!pick[e]) continue;
            const auto a = find(edges[e].first), b = find(edges[e].second);
            if (a == b) tree = false;
            parent[a] = b;
            w += d(edges[e].first, edges[e].second);
        }
        if (tree) best = std::min(best, w);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

// ---- scratch directories ---------------------------------------------------

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("ideatopics_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace ref

namespace ref {

// Fraction of clustered items whose topic's majority theme equals their own.
inline double purity(const std::vector<std::vector<std::size_t>>& topics, const std::vector<int>& theme_of) {
    std::size_t agree = 0, total = 0;
    for (const auto& members : topics) {
        std::map<int, std::size_t> count;
        for (auto id : members) ++count[theme_of[id]];
        std::size_t best = 0;
        for (const auto& [t, c] : count) best = std::max(best, c);
        agree += best;
        total += members.size();
    }
    return total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
}

}  // namespace ref
