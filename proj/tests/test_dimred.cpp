#include <gtest/gtest.h>

#include "ideatopics/dimred.hpp"
#include "support.hpp"

using namespace ideatopics;

namespace {

Matrix pts(std::initializer_list<std::vector<double>> rows) { return Matrix::from_rows(std::vector<std::vector<double>>(rows)); }

std::vector<std::size_t> nb(const KnnGraph& g, std::size_t i) {
    const auto s = g.neighbors(i);
    return {s.begin(), s.end()};
}

}  // namespace

TEST(Knn, LineExample) {
    const auto g = build_knn_graph(pts({{0, 0}, {1, 0}, {10, 0}}), 1, Metric::euclidean);
    EXPECT_EQ(nb(g, 0), std::vector<std::size_t>{1});
    EXPECT_EQ(nb(g, 1), std::vector<std::size_t>{0});
    EXPECT_EQ(nb(g, 2), std::vector<std::size_t>{1});
}

TEST(Knn, UnitSquareTiesPickLowerIndex) {
    // distances: sides 1, diagonals sqrt(2)
    const auto x = pts({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    const auto g2 = build_knn_graph(x, 2, Metric::euclidean);
    EXPECT_EQ(nb(g2, 0), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(nb(g2, 1), (std::vector<std::size_t>{0, 3}));
    EXPECT_EQ(nb(g2, 2), (std::vector<std::size_t>{0, 3}));
    EXPECT_EQ(nb(g2, 3), (std::vector<std::size_t>{1, 2}));
    const auto g1 = build_knn_graph(x, 1, Metric::euclidean);
    EXPECT_EQ(nb(g1, 0), std::vector<std::size_t>{1});
    EXPECT_EQ(nb(g1, 3), std::vector<std::size_t>{1});
}

TEST(Knn, FirstNeighborIsNearestAndRowsSorted) {
    Rng rng(3);
    Matrix x(25, 4);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t c = 0; c < 4; ++c) x(i, c) = rng.uniform(-1, 1);
    for (auto metric : {Metric::euclidean, Metric::cosine}) {
        const auto g = build_knn_graph(x, 5, metric);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double best = 1e300;
            for (std::size_t j = 0; j < x.rows(); ++j)
                if (j != i) best = std::min(best, metric_distance(metric, x.row(i), x.row(j)));
            EXPECT_EQ(g.row_distances(i)[0], best);
            for (std::size_t t = 0; t < 5; ++t) EXPECT_NE(g.neighbors(i)[t], i);
            EXPECT_TRUE(std::is_sorted(g.row_distances(i).begin(), g.row_distances(i).end()));
        }
    }
}

TEST(Knn, TooFewPoints) {
    EXPECT_THROW(build_knn_graph(pts({{0, 0}, {1, 1}}), 2, Metric::euclidean), ArgumentError);
}

TEST(Calibration, AllEqualDistances) {
    const std::vector<double> d{1, 1, 1, 1};
    const auto c = smooth_knn_calibration(d, 4);
    EXPECT_EQ(c.rho, 1.0);
    EXPECT_EQ(c.sigma, 1.0);
    EXPECT_EQ(membership_sum(d, c.rho, c.sigma), 4.0);
}

TEST(Calibration, UnreachableTargetClampsSigma) {
    const std::vector<double> d{0.5, 1.0};
    const auto c = smooth_knn_calibration(d, 2);
    EXPECT_EQ(c.rho, 0.5);
    // the sum can only approach 1 as sigma shrinks; the search stops inside
    // tolerance and never goes below the floor
    EXPECT_GE(c.sigma, 1e-3 * 0.75);
    EXPECT_LT(c.sigma, 0.05);
    EXPECT_NEAR(membership_sum(d, c.rho, c.sigma), 1.0, 1e-5);
}

TEST(Calibration, BisectionOracle) {
    // reference roots from an independent scalar bisection
    {
        const std::vector<double> d{1, 2, 3};
        const auto c = smooth_knn_calibration(d, 3);
        EXPECT_EQ(c.rho, 1.0);
        EXPECT_NEAR(c.sigma, 1.1331928143895706, 1e-4);
        EXPECT_NEAR(membership_sum(d, c.rho, c.sigma), std::log2(3.0), 1e-5);
    }
    {
        const std::vector<double> d{0.2, 0.3, 0.7, 1.1, 1.5};
        const auto c = smooth_knn_calibration(d, 5);
        EXPECT_DOUBLE_EQ(c.rho, 0.2);
        EXPECT_NEAR(c.sigma, 0.450472882126041, 1e-4);
    }
}

TEST(Calibration, ZeroDistancesSkippedForRho) {
    const std::vector<double> d{0, 0, 0.4, 0.9};
    EXPECT_DOUBLE_EQ(smooth_knn_calibration(d, 4).rho, 0.4);
}

TEST(FuzzyGraph, DirectedMembership) {
    EXPECT_EQ(directed_membership(0.7, {0.7, 2.0}), 1.0);
    EXPECT_EQ(directed_membership(0.1, {0.7, 2.0}), 1.0);
    EXPECT_DOUBLE_EQ(directed_membership(2.7, {0.7, 2.0}), std::exp(-1.0));
}

TEST(FuzzyGraph, TConorm) {
    // 0 -> 1 with weight 1 (distance at rho); 1 -> 2 and 2 -> 1 with weight 0.5
    KnnGraph g{3, 1, {1, 2, 1}, {1.0, std::log(2.0), std::log(2.0)}};
    const std::vector<Calibration> cal{{1.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    const auto f = fuzzy_graph(g, cal);
    EXPECT_DOUBLE_EQ(f.weight(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(f.weight(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(f.weight(1, 2), 0.75);
    EXPECT_EQ(f.weight(0, 2), 0.0);
}

TEST(FuzzyGraph, SymmetricWithWeightsInUnitInterval) {
    Rng rng(11);
    Matrix x(40, 6);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t c = 0; c < x.cols(); ++c) x(i, c) = rng.uniform(-1, 1);
    const auto knn = build_knn_graph(x, 7, Metric::cosine);
    std::vector<Calibration> cal;
    for (std::size_t i = 0; i < knn.n; ++i) cal.push_back(smooth_knn_calibration(knn.row_distances(i), knn.k));
    const auto f = fuzzy_graph(knn, cal);
    for (std::size_t i = 0; i < f.n; ++i) {
        EXPECT_EQ(f.weight(i, i), 0.0);
        for (std::size_t p = f.row_ptr[i]; p < f.row_ptr[i + 1]; ++p) {
            EXPECT_GT(f.vals[p], 0.0);
            EXPECT_LE(f.vals[p], 1.0);
            EXPECT_EQ(f.vals[p], f.weight(f.cols[p], i));
        }
    }
}

TEST(Kernel, FrozenCurveFit) {
    const auto p = kernel_params(0.1);
    EXPECT_NEAR(p.a, 1.577, 1e-3);
    EXPECT_NEAR(p.b, 0.895, 1e-3);
    const auto q = kernel_params(0.125);  // halfway between table rows
    EXPECT_DOUBLE_EQ(q.a, 0.5 * (1.5769434603 + 1.4139999226));
    EXPECT_THROW(kernel_params(0.0005), ArgumentError);
    EXPECT_THROW(kernel_params(1.5), ArgumentError);
}

TEST(Umap, ConfigValidation) {
    UmapConfig c;
    EXPECT_THROW(c.validate(15), ArgumentError);
    EXPECT_NO_THROW(c.validate(16));
    c.min_dist = 0;
    EXPECT_THROW(c.validate(100), ArgumentError);
    EXPECT_THROW(parse_metric("manhattan"), ArgumentError);
}

TEST(Umap, TwoDistinctVectorsGiveTwoGroups) {
    Matrix x(0, 8);
    Rng rng(1);
    std::vector<double> a(8), b(8);
    for (std::size_t c = 0; c < 8; ++c) {
        a[c] = rng.uniform(-1, 1);
        b[c] = rng.uniform(-1, 1);
    }
    for (int i = 0; i < 50; ++i) x.append_row(i % 2 ? b : a);
    UmapConfig cfg;
    cfg.n_neighbors = 10;
    cfg.metric = Metric::euclidean;
    const auto y = umap_reduce(x, cfg);
    ASSERT_EQ(y.rows(), 50u);
    ASSERT_EQ(y.cols(), 2u);
    EXPECT_TRUE(y.all_finite());
    double within = 0, between = 0;
    int nw = 0, nbt = 0;
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = i + 1; j < 50; ++j) {
            const double d = ref::l2(y, i, j);
            if (i % 2 == j % 2) within += d, ++nw;
            else between += d, ++nbt;
        }
    EXPECT_LT(within / nw, between / nbt);
}

TEST(Umap, DeterministicForSeed) {
    Rng rng(5);
    std::vector<int> truth;
    const auto x = ref::blobs({std::vector<double>(6, 0.0), std::vector<double>(6, 5.0)}, 20, 0.3, rng, &truth);
    UmapConfig cfg;
    cfg.n_neighbors = 8;
    cfg.metric = Metric::euclidean;
    EXPECT_EQ(umap_reduce(x, cfg), umap_reduce(x, cfg));
    cfg.init = LayoutInit::spectral;
    const auto s = umap_reduce(x, cfg);
    EXPECT_EQ(s, umap_reduce(x, cfg));
    EXPECT_TRUE(s.all_finite());
    cfg.seed = 43;
    cfg.init = LayoutInit::seeded_random;
    EXPECT_NE(umap_reduce(x, cfg), s);
}

TEST(Umap, PlantedBlobsKeepNeighbors) {
    Rng rng(17);
    std::vector<std::vector<double>> centers(3, std::vector<double>(16, 0.0));
    centers[1][0] = 10;
    centers[2][1] = 10;
    std::vector<int> truth;
    const auto x = ref::blobs(centers, 30, 0.05, rng, &truth);
    UmapConfig cfg;
    cfg.metric = Metric::euclidean;
    const auto y = umap_reduce(x, cfg);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < y.rows(); ++j)
            if (j != i) d.emplace_back(ref::l2(y, i, j), j);
        std::partial_sort(d.begin(), d.begin() + 5, d.end());
        for (int t = 0; t < 5; ++t) kept += truth[d[t].second] == truth[i];
    }
    EXPECT_GE(static_cast<double>(kept) / (5.0 * y.rows()), 0.9);
}
