#pragma once
// Exact Euclidean k-nearest-neighbour tables with self-exclusion.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embroid/dataset_io.hpp"

namespace embroid {

struct NeighborTable {
    std::string space_name;
    std::size_t k = 0;
    std::vector<std::uint32_t> neighbors;  // n x k, row-major
    std::vector<double> distances;         // n x k, non-decreasing per row

    std::size_t rows() const noexcept { return k == 0 ? 0 : neighbors.size() / k; }
    std::span<const std::uint32_t> neighbors_of(std::size_t i) const {
        return {neighbors.data() + i * k, k};
    }
    std::span<const double> distances_of(std::size_t i) const {
        return {distances.data() + i * k, k};
    }
};

// For every row i, the k rows j != i closest to it under L2, ordered by
// (distance, index). Throws std::invalid_argument unless 1 <= k <= n - 1.
// Rows are processed in parallel; output does not depend on scheduling.
NeighborTable build_neighbor_table(const EmbeddingSpace& space, std::size_t k);

// Largest of the k distances in row i (epsilon_k for sample i).
double max_neighbor_distance(const NeighborTable& table, std::size_t i);

// --- on-disk cache ---------------------------------------------------------
// Layout: magic "NNB1", u32 LE n, u32 LE k, then n*k u32 LE indices and n*k
// IEEE-754 float32 LE distances. Files are keyed by (space name, k, content
// hash) through their file name, see neighbor_cache_path().

std::uint64_t content_hash(const EmbeddingSpace& space);
std::filesystem::path neighbor_cache_path(const std::filesystem::path& dir,
                                          const EmbeddingSpace& space, std::size_t k);
void save_neighbor_table(const NeighborTable& table, const std::filesystem::path& path);
NeighborTable load_neighbor_table(const std::filesystem::path& path, std::string space_name);

// Loads from `cache_dir` when a matching file exists, otherwise builds and
// stores the table there.
NeighborTable cached_neighbor_table(const EmbeddingSpace& space, std::size_t k,
                                    const std::filesystem::path& cache_dir);

}  // namespace embroid
