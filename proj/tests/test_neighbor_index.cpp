#include <numeric>
#include <random>

#include "doctest.h"
#include "embroid/neighbor_index.hpp"
#include "oracles.hpp"

using namespace embroid;

namespace {

EmbeddingSpace space_from(const std::vector<std::vector<float>>& pts) {
    EmbeddingSpace s{"s", pts.front().size(), {}};
    for (const auto& p : pts) s.vectors.insert(s.vectors.end(), p.begin(), p.end());
    return s;
}

std::vector<std::vector<std::uint32_t>> rows_of(const NeighborTable& t) {
    std::vector<std::vector<std::uint32_t>> out;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        const auto r = t.neighbors_of(i);
        out.emplace_back(r.begin(), r.end());
    }
    return out;
}

}  // namespace

TEST_CASE("nearest neighbour on a line") {
    const auto t = build_neighbor_table(space_from({{0}, {1}, {10}}), 1);
    CHECK(rows_of(t) == std::vector<std::vector<std::uint32_t>>{{1}, {0}, {1}});
    CHECK(t.distances == std::vector<double>{1.0, 1.0, 9.0});
}

TEST_CASE("distance ties are broken toward the smaller index") {
    const auto t = build_neighbor_table(space_from({{0}, {1}, {2}}), 2);
    const auto r1 = t.neighbors_of(1);
    CHECK(r1[0] == 0);
    CHECK(r1[1] == 2);

    // duplicate points are legal and ranked by index
    const auto d = build_neighbor_table(space_from({{5}, {5}, {5}, {5}}), 3);
    CHECK(rows_of(d)[2] == std::vector<std::uint32_t>{0, 1, 3});
    CHECK(d.distances_of(2)[0] == 0.0);
}

TEST_CASE("k out of range is rejected") {
    const auto s = space_from({{0}, {1}, {2}});
    CHECK_THROWS_AS(build_neighbor_table(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_neighbor_table(s, 3), std::invalid_argument);
    CHECK_NOTHROW(build_neighbor_table(s, 2));
}

TEST_CASE("50 random 2-D points, k = 5, match the full-sort oracle") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<std::vector<float>> pts(50, std::vector<float>(2));
    for (auto& p : pts)
        for (auto& v : p) v = g(rng);
    const auto s = space_from(pts);
    const auto t = build_neighbor_table(s, 5);
    CHECK(rows_of(t) == embroid::testing::brute_force_knn(embroid::testing::to_points(s), 5));
}

TEST_CASE("table invariants hold on random fixtures") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + rng() % 60;
        const std::size_t d = 1 + rng() % 5;
        const std::size_t k = 1 + rng() % (n - 1);
        EmbeddingSpace s{"r", d, {}};
        // small integer grid: lots of exact ties
        for (std::size_t i = 0; i < n * d; ++i) s.vectors.push_back(static_cast<float>(rng() % 4));
        const auto t = build_neighbor_table(s, k);
        for (std::size_t i = 0; i < n; ++i) {
            const auto nb = t.neighbors_of(i);
            const auto dist = t.distances_of(i);
            for (std::size_t c = 0; c < k; ++c) {
                CHECK(nb[c] != i);
                CHECK(nb[c] < n);
                if (c > 0) CHECK(dist[c - 1] <= dist[c]);
            }
        }
        CHECK(rows_of(t) == embroid::testing::brute_force_knn(embroid::testing::to_points(s), k));
    }
}

TEST_CASE("max_neighbor_distance returns the last distance of a row") {
    NeighborTable t{"s", 3, {1, 2, 3}, {0.1, 0.4, 0.9}};
    CHECK(max_neighbor_distance(t, 0) == 0.9);
    CHECK_THROWS_AS(max_neighbor_distance(t, 1), std::out_of_range);

    const auto one = build_neighbor_table(space_from({{0}, {3}, {4}}), 1);
    CHECK(max_neighbor_distance(one, 0) == 3.0);

    // random fixture against directly recomputed distances
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(-3.0f, 3.0f);
    std::vector<std::vector<float>> pts(40, std::vector<float>(3));
    for (auto& p : pts)
        for (auto& v : p) v = u(rng);
    const auto t2 = build_neighbor_table(space_from(pts), 7);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double worst = 0.0;
        for (const auto j : t2.neighbors_of(i)) {
            double d = 0.0;
            for (int c = 0; c < 3; ++c) d += (double(pts[i][c]) - pts[j][c]) * (double(pts[i][c]) - pts[j][c]);
            worst = std::max(worst, std::sqrt(d));
        }
        CHECK(max_neighbor_distance(t2, i) == doctest::Approx(worst).epsilon(1e-12));
    }
}

TEST_CASE("permutation equivariance (no ties)") {
    std::mt19937_64 rng(17);
    std::normal_distribution<float> g(0.0f, 1.0f);
    const std::size_t n = 40, d = 3, k = 4;
    std::vector<std::vector<float>> pts(n, std::vector<float>(d));
    for (auto& p : pts)
        for (auto& v : p) v = g(rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<float>> permuted(n);
    for (std::size_t i = 0; i < n; ++i) permuted[perm[i]] = pts[i];  // sample i -> position perm[i]

    const auto a = build_neighbor_table(space_from(pts), k);
    const auto b = build_neighbor_table(space_from(permuted), k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) CHECK(b.neighbors_of(perm[i])[c] == perm[a.neighbors_of(i)[c]]);
}

TEST_CASE("neighbour cache round-trips and is keyed by content") {
    embroid::testing::TempDir dir;
    const auto ds = embroid::testing::random_dataset(30, 1, 1, 3, 3);
    const auto& s = ds.embeddings[0];
    const auto built = cached_neighbor_table(s, 4, dir.path());
    const auto path = neighbor_cache_path(dir.path(), s, 4);
    REQUIRE(std::filesystem::exists(path));
    CHECK(std::filesystem::file_size(path) == 12 + 30 * 4 * 8);

    const auto loaded = cached_neighbor_table(s, 4, dir.path());
    CHECK(loaded.neighbors == built.neighbors);
    for (std::size_t c = 0; c < built.distances.size(); ++c)
        CHECK(loaded.distances[c] == doctest::Approx(built.distances[c]).epsilon(1e-6));

    auto changed = s;
    changed.vectors[0] += 1.0f;
    CHECK(neighbor_cache_path(dir.path(), changed, 4) != path);
    CHECK(neighbor_cache_path(dir.path(), s, 5) != path);
}
