#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ideatopics/error.hpp"
#include "ideatopics/matrix.hpp"

namespace ideatopics {

struct HdbscanConfig {
    std::size_t min_cluster_size = 5;
    std::optional<std::size_t> min_samples;  // defaults to min_cluster_size

    std::size_t effective_min_samples() const { return min_samples.value_or(min_cluster_size); }

    void validate() const {
        if (min_cluster_size < 2) throw ArgumentError("min_cluster_size must be >= 2");
        if (effective_min_samples() < 1) throw ArgumentError("min_samples must be >= 1");
    }
};

struct ClusterAssignment {
    std::vector<int> labels;            // -1 = outlier
    std::size_t n_clusters = 0;
    std::vector<double> probabilities;  // membership strength, 0 for outliers

    std::size_t outlier_count() const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
    }

    std::vector<std::size_t> cluster_sizes() const {
        std::vector<std::size_t> sizes(n_clusters, 0);
        for (int l : labels)
            if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
        return sizes;
    }
};

// Condensed cluster hierarchy. Children below n_points are points; cluster
// ids start at n_points (the root). Rows are emitted parents-first.
struct CondensedTree {
    struct Row {
        std::size_t parent;
        std::size_t child;
        double lambda;
        std::size_t child_size;
    };

    std::size_t n_points = 0;
    std::size_t n_clusters = 0;
    std::vector<Row> rows;
    std::vector<double> stability;  // indexed by cluster id - n_points
    std::vector<bool> selected;     // indexed by cluster id - n_points
};

struct MstEdge {
    std::size_t u;  // u < v
    std::size_t v;
    double weight;

    auto key() const { return std::tie(weight, u, v); }
    friend bool operator==(const MstEdge&, const MstEdge&) = default;
};

// Distances below this are treated as equal to it when converting to lambda.
inline constexpr double kMinClusterDistance = 1e-12;

inline double lambda_of(double distance) { return 1.0 / std::max(distance, kMinClusterDistance); }

inline double point_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline std::vector<double> core_distances(const Matrix& points, std::size_t min_samples) {
    const std::size_t n = points.rows();
    if (min_samples < 1) throw ArgumentError("min_samples must be >= 1");
    if (n <= min_samples)
        throw ArgumentError("need more than min_samples=" + std::to_string(min_samples) +
                            " points, got " + std::to_string(n));
    std::vector<double> core(n);
    std::vector<double> row(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row[m++] = point_distance(points.row(i), points.row(j));
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(min_samples - 1), row.end());
        core[i] = row[min_samples - 1];
    }
    return core;
}

// d_mreach(a, b) = max(core(a), core(b), d(a, b)); zero diagonal.
inline Matrix mutual_reachability(const Matrix& points, std::size_t min_samples) {
    const auto core = core_distances(points, min_samples);
    const std::size_t n = points.rows();
    Matrix out(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::max({core[i], core[j], point_distance(points.row(i), points.row(j))});
            out(i, j) = d;
            out(j, i) = d;
        }
    }
    return out;
}

// Prim's algorithm on a dense symmetric matrix. Candidate edges are compared
// by (weight, min endpoint, max endpoint), which makes the tree unique; the
// result is sorted by the same key.
inline std::vector<MstEdge> build_mst(const Matrix& dist) {
    const std::size_t n = dist.rows();
    if (dist.cols() != n) throw ArgumentError("distance matrix must be square");
    std::vector<MstEdge> edges;
    if (n < 2) return edges;
    edges.reserve(n - 1);

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<bool> in_tree(n, false);
    std::vector<MstEdge> best(n, MstEdge{0, 0, inf});
    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const MstEdge cand{std::min(current, v), std::max(current, v), dist(current, v)};
            if (cand.key() < best[v].key()) best[v] = cand;
        }
        std::size_t next = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            if (next == n || best[v].key() < best[next].key()) next = v;
        }
        edges.push_back(best[next]);
        in_tree[next] = true;
        current = next;
    }
    std::sort(edges.begin(), edges.end(), [](const MstEdge& a, const MstEdge& b) { return a.key() < b.key(); });
    return edges;
}

namespace detail {

struct LinkageNode {
    std::size_t left;
    std::size_t right;
    double distance;
    std::size_t size;
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void link(std::size_t child, std::size_t root) { parent_[child] = root; }

private:
    std::vector<std::size_t> parent_;
};

// Single-linkage dendrogram from ascending MST edges: node n + s is the merge
// made by edge s.
inline std::vector<LinkageNode> single_linkage(const std::vector<MstEdge>& edges, std::size_t n) {
    std::vector<LinkageNode> nodes;
    nodes.reserve(edges.size());
    UnionFind uf(2 * n);
    std::vector<std::size_t> size(2 * n, 1);
    for (std::size_t s = 0; s < edges.size(); ++s) {
        const std::size_t a = uf.find(edges[s].u);
        const std::size_t b = uf.find(edges[s].v);
        if (a == b) throw ArgumentError("edge list contains a cycle");
        const std::size_t id = n + s;
        size[id] = size[a] + size[b];
        nodes.push_back({a, b, edges[s].weight, size[id]});
        uf.link(a, id);
        uf.link(b, id);
    }
    return nodes;
}

}  // namespace detail

// Condenses the single-linkage hierarchy of an MST and selects clusters by
// excess of mass. Merges at one distance are handled as one multi-way split:
// components smaller than min_cluster_size fall out of the parent, two or more
// large components become child clusters, and a single large one continues
// the parent.
inline std::pair<CondensedTree, ClusterAssignment> condense_and_extract(const std::vector<MstEdge>& edges,
                                                                        std::size_t n,
                                                                        std::size_t min_cluster_size) {
    if (min_cluster_size < 2) throw ArgumentError("min_cluster_size must be >= 2");
    if (n > 0 && edges.size() != n - 1) throw ArgumentError("spanning tree must have n - 1 edges");

    CondensedTree tree;
    tree.n_points = n;
    ClusterAssignment result;
    result.labels.assign(n, -1);
    result.probabilities.assign(n, 0.0);
    if (n < min_cluster_size || n < 2) return {tree, result};

    const auto nodes = detail::single_linkage(edges, n);
    auto node_size = [&](std::size_t x) { return x < n ? std::size_t{1} : nodes[x - n].size; };
    auto node_dist = [&](std::size_t x) { return nodes[x - n].distance; };

    auto leaves_of = [&](std::size_t x, std::vector<std::size_t>& out) {
        std::vector<std::size_t> stack{x};
        while (!stack.empty()) {
            const std::size_t y = stack.back();
            stack.pop_back();
            if (y < n) {
                out.push_back(y);
            } else {
                stack.push_back(nodes[y - n].right);
                stack.push_back(nodes[y - n].left);
            }
        }
    };

    std::vector<double> birth{0.0};
    std::vector<std::size_t> parent_cluster{n};  // root has no parent; n marks that
    std::vector<std::pair<std::size_t, std::size_t>> work{{0, 2 * n - 2}};  // (cluster, dendrogram node)
    std::vector<std::size_t> point_leaf_cluster(n, 0);
    std::vector<double> point_lambda(n, 0.0);

    while (!work.empty()) {
        auto [cluster, node] = work.back();
        work.pop_back();
        const std::size_t cid = n + cluster;

        // a single large component continues the cluster without recursion
        while (true) {
            const double dist = node_dist(node);
            const double lambda = lambda_of(dist);

            std::vector<std::size_t> components;
            std::vector<std::size_t> expand{nodes[node - n].left, nodes[node - n].right};
            while (!expand.empty()) {
                const std::size_t y = expand.back();
                expand.pop_back();
                if (y >= n && node_dist(y) == dist) {
                    expand.push_back(nodes[y - n].right);
                    expand.push_back(nodes[y - n].left);
                } else {
                    components.push_back(y);
                }
            }

            std::vector<std::size_t> big;
            for (std::size_t comp : components) {
                if (node_size(comp) >= min_cluster_size) {
                    big.push_back(comp);
                    continue;
                }
                std::vector<std::size_t> pts;
                leaves_of(comp, pts);
                for (std::size_t p : pts) {
                    tree.rows.push_back({cid, p, lambda, 1});
                    point_leaf_cluster[p] = cluster;
                    point_lambda[p] = lambda;
                }
            }

            if (big.size() == 1) {
                node = big.front();
                continue;
            }
            // children are pushed in reverse so they are processed in creation order
            std::vector<std::pair<std::size_t, std::size_t>> children;
            for (std::size_t comp : big) {
                const std::size_t child = birth.size();
                birth.push_back(lambda);
                parent_cluster.push_back(cluster);
                tree.rows.push_back({cid, n + child, lambda, node_size(comp)});
                children.emplace_back(child, comp);
            }
            work.insert(work.end(), children.rbegin(), children.rend());
            break;
        }
    }

    const std::size_t n_clusters = birth.size();
    tree.n_clusters = n_clusters;
    tree.stability.assign(n_clusters, 0.0);
    for (const auto& row : tree.rows) {
        const std::size_t c = row.parent - n;
        tree.stability[c] += (row.lambda - birth[c]) * static_cast<double>(row.child_size);
    }

    // Children always have larger ids than their parent, so a reverse sweep
    // is bottom-up.
    std::vector<double> subtree(n_clusters, 0.0);
    std::vector<double> child_sum(n_clusters, 0.0);
    std::vector<bool> has_children(n_clusters, false);
    std::vector<bool> choose_self(n_clusters, false);
    for (std::size_t c = n_clusters; c-- > 0;) {
        if (!has_children[c] || tree.stability[c] > child_sum[c]) {
            choose_self[c] = true;
            subtree[c] = tree.stability[c];
        } else {
            subtree[c] = child_sum[c];
        }
        if (c > 0) {
            child_sum[parent_cluster[c]] += subtree[c];
            has_children[parent_cluster[c]] = true;
        }
    }

    // top-down: a cluster is selected when it prefers itself and no ancestor
    // was selected
    tree.selected.assign(n_clusters, false);
    std::vector<std::size_t> owner(n_clusters, n_clusters);
    std::vector<int> label_of(n_clusters, -1);
    int next_label = 0;
    for (std::size_t c = 0; c < n_clusters; ++c) {
        const std::size_t inherited = c == 0 ? n_clusters : owner[parent_cluster[c]];
        if (inherited != n_clusters) {
            owner[c] = inherited;
        } else if (choose_self[c]) {
            tree.selected[c] = true;
            owner[c] = c;
            label_of[c] = next_label++;
        }
    }

    std::vector<double> lambda_max(n_clusters, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t o = owner[point_leaf_cluster[p]];
        if (o == n_clusters) continue;
        result.labels[p] = label_of[o];
        lambda_max[o] = std::max(lambda_max[o], point_lambda[p]);
    }
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t o = owner[point_leaf_cluster[p]];
        if (o == n_clusters) continue;
        const double prob = lambda_max[o] > 0 ? point_lambda[p] / lambda_max[o] : 1.0;
        result.probabilities[p] = std::clamp(prob, 0.0, 1.0);
    }
    result.n_clusters = static_cast<std::size_t>(next_label);
    return {tree, result};
}

inline ClusterAssignment hdbscan(const Matrix& points, const HdbscanConfig& cfg) {
    cfg.validate();
    const auto mreach = mutual_reachability(points, cfg.effective_min_samples());
    const auto mst = build_mst(mreach);
    return condense_and_extract(mst, points.rows(), cfg.min_cluster_size).second;
}

}  // namespace ideatopics
