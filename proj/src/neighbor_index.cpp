#include "embroid/neighbor_index.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "parallel.hpp"

namespace embroid {

namespace fs = std::filesystem;

namespace {

double squared_l2(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double diff = static_cast<double>(a[t]) - static_cast<double>(b[t]);
        acc += diff * diff;
    }
    return acc;
}

constexpr std::array<char, 4> kCacheMagic{'N', 'N', 'B', '1'};

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) buf.push_back(static_cast<unsigned char>(v >> s));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

NeighborTable build_neighbor_table(const EmbeddingSpace& space, std::size_t k) {
    const std::size_t n = space.rows();
    if (k < 1 || n < 2 || k > n - 1)
        throw std::invalid_argument("k = " + std::to_string(k) + " out of range [1, " +
                                    std::to_string(n < 1 ? 0 : n - 1) + "] for space '" +
                                    space.name + "'");
    NeighborTable table{space.name, k, std::vector<std::uint32_t>(n * k),
                        std::vector<double>(n * k)};

    detail::parallel_for(n, [&](std::size_t i) {
        std::vector<std::pair<double, std::uint32_t>> cand;
        cand.reserve(n - 1);
        const auto qi = space.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.emplace_back(squared_l2(qi, space.row(j)), static_cast<std::uint32_t>(j));
        }
        // pair ordering = (distance, index): ties go to the smaller index
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t t = 0; t < k; ++t) {
            table.neighbors[i * k + t] = cand[t].second;
            table.distances[i * k + t] = std::sqrt(cand[t].first);
        }
    }, 16);
    return table;
}

double max_neighbor_distance(const NeighborTable& table, std::size_t i) {
    if (i >= table.rows())
        throw std::out_of_range("sample index " + std::to_string(i) + " out of range");
    return table.distances[i * table.k + table.k - 1];
}

std::uint64_t content_hash(const EmbeddingSpace& space) {
    // FNV-1a over (n, d, float bits)
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint32_t word) {
        for (int s = 0; s < 32; s += 8) {
            h ^= (word >> s) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint32_t>(space.rows()));
    mix(static_cast<std::uint32_t>(space.dim));
    for (const float v : space.vectors) mix(std::bit_cast<std::uint32_t>(v));
    return h;
}

fs::path neighbor_cache_path(const fs::path& dir, const EmbeddingSpace& space, std::size_t k) {
    std::string safe = space.name;
    for (auto& c : safe)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    std::ostringstream name;
    name << safe << ".k" << k << '.' << std::hex << std::setw(16) << std::setfill('0')
         << content_hash(space) << ".nnb";
    return dir / name.str();
}

void save_neighbor_table(const NeighborTable& table, const fs::path& path) {
    const std::size_t cells = table.neighbors.size();
    std::vector<unsigned char> buf(kCacheMagic.begin(), kCacheMagic.end());
    buf.reserve(12 + cells * 8);
    put_u32(buf, static_cast<std::uint32_t>(table.rows()));
    put_u32(buf, static_cast<std::uint32_t>(table.k));
    for (const auto idx : table.neighbors) put_u32(buf, idx);
    for (const double d : table.distances)
        put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(d)));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("cannot write neighbour cache", path.string());
}

NeighborTable load_neighbor_table(const fs::path& path, std::string space_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open neighbour cache", path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), kCacheMagic.data(), 4) != 0)
        throw DataError("bad neighbour cache header", path.string());
    const std::size_t n = get_u32(buf.data() + 4);
    const std::size_t k = get_u32(buf.data() + 8);
    if (k == 0 || buf.size() != 12 + n * k * 8)
        throw DataError("neighbour cache size does not match header", path.string());

    NeighborTable table{std::move(space_name), k, std::vector<std::uint32_t>(n * k),
                        std::vector<double>(n * k)};
    const unsigned char* p = buf.data() + 12;
    for (std::size_t c = 0; c < n * k; ++c, p += 4) {
        table.neighbors[c] = get_u32(p);
        if (table.neighbors[c] >= n || table.neighbors[c] == c / k)
            throw DataError("invalid neighbour index in cache", path.string(), c / k, c % k);
    }
    for (std::size_t c = 0; c < n * k; ++c, p += 4)
        table.distances[c] = std::bit_cast<float>(get_u32(p));
    return table;
}

NeighborTable cached_neighbor_table(const EmbeddingSpace& space, std::size_t k,
                                    const fs::path& cache_dir) {
    const fs::path path = neighbor_cache_path(cache_dir, space, k);
    if (fs::exists(path)) {
        auto table = load_neighbor_table(path, space.name);
        if (table.rows() == space.rows() && table.k == k) return table;
    }
    auto table = build_neighbor_table(space, k);
    fs::create_directories(cache_dir);
    save_neighbor_table(table, path);
    return table;
}

}  // namespace embroid
