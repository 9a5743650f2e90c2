#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ideatopics/error.hpp"
#include "ideatopics/matrix.hpp"
#include "ideatopics/random.hpp"

namespace ideatopics {

enum class Metric { cosine, euclidean };
enum class LayoutInit { seeded_random, spectral };

inline Metric parse_metric(const std::string& s) {
    if (s == "cosine") return Metric::cosine;
    if (s == "euclidean") return Metric::euclidean;
    throw ArgumentError("unknown metric: " + s);
}

inline LayoutInit parse_layout_init(const std::string& s) {
    if (s == "random" || s == "seeded-random") return LayoutInit::seeded_random;
    if (s == "spectral") return LayoutInit::spectral;
    throw ArgumentError("unknown init: " + s);
}

struct UmapConfig {
    std::size_t n_neighbors = 15;
    double min_dist = 0.1;
    std::size_t n_epochs = 200;
    std::size_t negative_sample_rate = 5;
    Metric metric = Metric::cosine;
    std::uint64_t seed = 42;
    LayoutInit init = LayoutInit::seeded_random;

    static constexpr std::size_t n_components = 2;

    void validate(std::size_t n) const {
        if (n_neighbors < 2) throw ArgumentError("n_neighbors must be >= 2");
        if (n <= n_neighbors)
            throw ArgumentError("need more than n_neighbors=" + std::to_string(n_neighbors) +
                                " points, got " + std::to_string(n));
        if (!(min_dist > 0.0)) throw ArgumentError("min_dist must be > 0");
        if (n_epochs < 1) throw ArgumentError("n_epochs must be >= 1");
    }
};

// Exact k nearest neighbors, self excluded, rows ascending by (distance, index).
struct KnnGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::size_t> indices;
    std::vector<double> distances;

    std::span<const std::size_t> neighbors(std::size_t i) const { return {indices.data() + i * k, k}; }
    std::span<const double> row_distances(std::size_t i) const { return {distances.data() + i * k, k}; }
};

inline double metric_distance(Metric metric, std::span<const double> a, std::span<const double> b) {
    if (metric == Metric::euclidean) return euclidean(a, b);
    // clamp the rounding residue of 1 - cos for identical directions
    return std::max(0.0, 1.0 - cosine(a, b));
}

inline KnnGraph build_knn_graph(const Matrix& x, std::size_t k, Metric metric) {
    const std::size_t n = x.rows();
    if (k < 1) throw ArgumentError("k must be >= 1");
    if (n <= k) throw ArgumentError("kNN graph needs n > k (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");

    KnnGraph g{n, k, std::vector<std::size_t>(n * k), std::vector<double>(n * k)};
    std::vector<std::pair<double, std::size_t>> row(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row[m++] = {metric_distance(metric, x.row(i), x.row(j)), j};
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
        for (std::size_t t = 0; t < k; ++t) {
            g.distances[i * k + t] = row[t].first;
            g.indices[i * k + t] = row[t].second;
        }
    }
    return g;
}

struct Calibration {
    double rho = 0.0;
    double sigma = 1.0;
};

inline double membership_sum(std::span<const double> dists, double rho, double sigma) {
    double s = 0.0;
    for (double d : dists) s += std::exp(-std::max(0.0, d - rho) / sigma);
    return s;
}

// Local connectivity (rho) and bandwidth (sigma) for one kNN row so that the
// memberships sum to log2(k). Sigma is floored at 1e-3 times the mean row
// distance; rows whose distances are all equal get sigma = 1.
inline Calibration smooth_knn_calibration(std::span<const double> dists, std::size_t k) {
    if (k < 2 || dists.size() < 2) throw ArgumentError("calibration needs k >= 2");
    constexpr int kIterations = 64;
    constexpr double kTolerance = 1e-5;
    constexpr double kMinScale = 1e-3;

    Calibration c;
    for (double d : dists) {
        if (d > 0.0) {
            c.rho = d;
            break;
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(dists.begin(), dists.end());
    if (*lo_it == *hi_it) {
        c.sigma = 1.0;
        return c;
    }

    const double target = std::log2(static_cast<double>(k));
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double mid = 1.0;
    for (int it = 0; it < kIterations; ++it) {
        const double psum = membership_sum(dists, c.rho, mid);
        if (std::abs(psum - target) < kTolerance) break;
        if (psum > target) {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
        }
    }
    const double mean = std::accumulate(dists.begin(), dists.end(), 0.0) / static_cast<double>(dists.size());
    c.sigma = std::max(mid, kMinScale * mean);
    return c;
}

// Symmetric sparse weights in compressed-row form, columns ascending per row.
struct FuzzyGraph {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> cols;
    std::vector<double> vals;

    std::size_t nnz() const noexcept { return vals.size(); }

    double weight(std::size_t i, std::size_t j) const {
        const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
        const auto last = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
        const auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return 0.0;
        return vals[static_cast<std::size_t>(it - cols.begin())];
    }
};

inline double directed_membership(double d, const Calibration& c) {
    return std::exp(-std::max(0.0, d - c.rho) / c.sigma);
}

// Directed memberships symmetrized with the probabilistic t-conorm
// a + a' - a * a'. Each unordered pair is evaluated once so the result is
// exactly symmetric; zero weights are dropped.
inline FuzzyGraph fuzzy_graph(const KnnGraph& knn, std::span<const Calibration> calibrations) {
    if (calibrations.size() != knn.n) throw ArgumentError("one calibration per kNN row required");
    std::map<std::pair<std::size_t, std::size_t>, double> directed;
    for (std::size_t i = 0; i < knn.n; ++i) {
        const auto nb = knn.neighbors(i);
        const auto ds = knn.row_distances(i);
        for (std::size_t t = 0; t < knn.k; ++t)
            directed[{i, nb[t]}] = directed_membership(ds[t], calibrations[i]);
    }

    std::map<std::pair<std::size_t, std::size_t>, double> sym;
    for (const auto& [key, a] : directed) {
        const auto [i, j] = key;
        const std::pair<std::size_t, std::size_t> lo_hi{std::min(i, j), std::max(i, j)};
        if (sym.contains(lo_hi)) continue;
        const auto rev = directed.find({j, i});
        const double b = rev == directed.end() ? 0.0 : rev->second;
        const double w = a + b - a * b;
        if (w > 0.0) sym[lo_hi] = w;
    }

    std::vector<std::vector<std::pair<std::size_t, double>>> rows(knn.n);
    for (const auto& [key, w] : sym) {
        rows[key.first].emplace_back(key.second, w);
        rows[key.second].emplace_back(key.first, w);
    }
    FuzzyGraph g;
    g.n = knn.n;
    g.row_ptr.assign(1, 0);
    for (auto& r : rows) {
        std::sort(r.begin(), r.end());
        for (const auto& [j, w] : r) {
            g.cols.push_back(j);
            g.vals.push_back(std::min(1.0, w));
        }
        g.row_ptr.push_back(g.cols.size());
    }
    return g;
}

struct KernelParams {
    double a;
    double b;
};

// Least-squares fits of 1 / (1 + a d^(2b)) to the target membership curve
// (1 below min_dist, exp(-(d - min_dist)) above) on 300 samples of [0, 3],
// spread = 1. Generated by tests/oracles/fit_ab.py.
inline constexpr std::array<std::array<double, 3>, 15> kKernelTable{{
    {0.001, 1.9290733959, 0.7915045334},
    {0.01, 1.8956058664, 0.8006378443},
    {0.05, 1.7502249633, 0.8420553925},
    {0.1, 1.5769434603, 0.8950608779},
    {0.15, 1.4139999226, 0.9488152490},
    {0.2, 1.2620581228, 1.0030054002},
    {0.25, 1.1214363422, 1.0574998767},
    {0.3, 0.9921756196, 1.1122533844},
    {0.4, 0.7668736386, 1.2225638163},
    {0.5, 0.5830300203, 1.3341669924},
    {0.6, 0.4360710943, 1.4474621187},
    {0.7, 0.3208193715, 1.5629515581},
    {0.8, 0.2320627270, 1.6812316033},
    {0.9, 0.1649038846, 1.8030384679},
    {0.99, 0.1193052999, 1.9163904169},
}};

// Table lookup, linear between entries.
inline KernelParams kernel_params(double min_dist) {
    const double lo = kKernelTable.front()[0];
    const double hi = kKernelTable.back()[0];
    if (!(min_dist >= lo && min_dist <= hi))
        throw ArgumentError("min_dist must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    for (std::size_t i = 0; i + 1 < kKernelTable.size(); ++i) {
        const auto& p = kKernelTable[i];
        const auto& q = kKernelTable[i + 1];
        if (min_dist == p[0]) return {p[1], p[2]};
        if (min_dist < q[0]) {
            const double t = (min_dist - p[0]) / (q[0] - p[0]);
            return {p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])};
        }
    }
    return {kKernelTable.back()[1], kKernelTable.back()[2]};
}

namespace detail {

inline Matrix random_layout(std::size_t n, Rng& rng) {
    Matrix y(n, 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < 2; ++d) y(i, d) = rng.uniform(-10.0, 10.0);
    return y;
}

// Eigenvectors 2 and 3 of the symmetric normalized Laplacian, scaled to
// [-10, 10] with a small jitter. Signs are fixed so that the largest-magnitude
// entry of each vector is positive.
inline Matrix spectral_layout(const FuzzyGraph& g, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(g.n);
    Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) deg(static_cast<Eigen::Index>(i)) += g.vals[p];

    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
            const auto a = static_cast<Eigen::Index>(i);
            const auto b = static_cast<Eigen::Index>(g.cols[p]);
            if (deg(a) > 0 && deg(b) > 0) lap(a, b) -= g.vals[p] / std::sqrt(deg(a) * deg(b));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) return random_layout(g.n, rng);

    Matrix y(g.n, 2);
    for (int c = 0; c < 2; ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(c + 1);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        const double scale = v.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i)
            y(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) =
                (scale > 0 ? 10.0 * v(i) / scale : 0.0) + rng.uniform(-1e-4, 1e-4);
    }
    return y;
}

inline double clip4(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace detail

// Edge-sampled stochastic gradient layout of the fuzzy graph in two
// dimensions. Single-threaded: the update order is part of the output.
inline Matrix optimize_layout(const FuzzyGraph& graph, Matrix y, const UmapConfig& cfg, Rng& rng) {
    const auto [a, b] = kernel_params(cfg.min_dist);
    const std::size_t n = graph.n;

    struct Edge {
        std::size_t head, tail;
        double epochs_per_sample;
        double next_sample;
    };
    double max_w = 0.0;
    for (double w : graph.vals) max_w = std::max(max_w, w);

    std::vector<Edge> edges;
    const double n_epochs = static_cast<double>(cfg.n_epochs);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = graph.row_ptr[i]; p < graph.row_ptr[i + 1]; ++p) {
            const double w = graph.vals[p];
            // edges too weak to be sampled even once are pruned
            if (w < max_w / n_epochs) continue;
            const double eps = max_w / w;
            edges.push_back({i, graph.cols[p], eps, eps});
        }
    }

    for (std::size_t epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        const double alpha = 1.0 - static_cast<double>(epoch) / n_epochs;
        const double e = static_cast<double>(epoch);
        for (auto& edge : edges) {
            if (edge.next_sample > e + 1.0) continue;
            edge.next_sample += edge.epochs_per_sample;

            auto yi = y.row(edge.head);
            auto yj = y.row(edge.tail);
            double dsq = 0.0;
            for (int d = 0; d < 2; ++d) dsq += (yi[d] - yj[d]) * (yi[d] - yj[d]);
            double coeff = 0.0;
            if (dsq > 0.0) {
                const double pb = std::pow(dsq, b);
                coeff = -2.0 * a * b * std::pow(dsq, b - 1.0) / (a * pb + 1.0);
            }
            for (int d = 0; d < 2; ++d) {
                const double g = detail::clip4(coeff * (yi[d] - yj[d]));
                yi[d] += g * alpha;
                yj[d] -= g * alpha;
            }

            for (std::size_t s = 0; s < cfg.negative_sample_rate; ++s) {
                const std::size_t k = static_cast<std::size_t>(rng.below(n));
                if (k == edge.head) continue;
                auto yk = y.row(k);
                double nsq = 0.0;
                for (int d = 0; d < 2; ++d) nsq += (yi[d] - yk[d]) * (yi[d] - yk[d]);
                double rep = 0.0;
                if (nsq > 0.0) rep = 2.0 * b / ((0.001 + nsq) * (a * std::pow(nsq, b) + 1.0));
                for (int d = 0; d < 2; ++d) {
                    const double g = rep > 0.0 ? detail::clip4(rep * (yi[d] - yk[d])) : 4.0;
                    yi[d] += g * alpha;
                }
            }
        }
    }
    return y;
}

inline Matrix umap_reduce(const Matrix& x, const UmapConfig& cfg) {
    cfg.validate(x.rows());
    kernel_params(cfg.min_dist);  // range check before the heavy part

    const auto knn = build_knn_graph(x, cfg.n_neighbors, cfg.metric);
    std::vector<Calibration> cal(knn.n);
    for (std::size_t i = 0; i < knn.n; ++i) cal[i] = smooth_knn_calibration(knn.row_distances(i), knn.k);
    const auto graph = fuzzy_graph(knn, cal);

    Rng rng(cfg.seed);
    Matrix y = cfg.init == LayoutInit::spectral ? detail::spectral_layout(graph, rng)
                                                : detail::random_layout(x.rows(), rng);
    return optimize_layout(graph, std::move(y), cfg, rng);
}

}  // namespace ideatopics
