#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "embroid/dataset_io.hpp"
#include "oracles.hpp"

using namespace embroid;
using embroid::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

EmbeddingSpace line_space(std::size_t n) {
    EmbeddingSpace s{"e", 1, {}};
    for (std::size_t i = 0; i < n; ++i) s.vectors.push_back(static_cast<float>(i));
    return s;
}

// 4 samples, 1 source, 1 space.
std::filesystem::path minimal_fixture(const TempDir& dir) {
    write_text(dir / "preds.csv", "id,source_1\na,1\nb,-1\nc,1\nd,-1\n");
    write_embedding_file(dir / "e.bin", line_space(4));
    write_text(dir / "manifest.json",
               R"({"predictions": "preds.csv", "embeddings": [{"name": "e", "path": "e.bin"}]})");
    return dir / "manifest.json";
}

}  // namespace

TEST_CASE("load_dataset reads a minimal fixture") {
    TempDir dir;
    const Dataset ds = load_dataset(minimal_fixture(dir));
    CHECK(ds.n_samples() == 4);
    CHECK(ds.n_sources() == 1);
    CHECK(ds.n_spaces() == 1);
    CHECK(ds.sample_ids == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(ds.predictions(1, 0) == -1);
    CHECK(ds.embeddings[0].row(3)[0] == 3.0f);
    CHECK_FALSE(ds.gold_labels.has_value());
}

TEST_CASE("load_dataset rejects a row-count mismatch naming both files") {
    TempDir dir;
    minimal_fixture(dir);
    write_embedding_file(dir / "e.bin", line_space(3));
    try {
        load_dataset(dir / "manifest.json");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("e.bin") != std::string::npos);
        CHECK(msg.find("preds.csv") != std::string::npos);
        CHECK(msg.find("row-count mismatch") != std::string::npos);
    }
}

TEST_CASE("load_dataset reports an out-of-alphabet value at (row, column)") {
    TempDir dir;
    minimal_fixture(dir);
    write_text(dir / "preds.csv", "id,source_1,source_2\na,1,1\nb,-1,2\nc,1,1\nd,-1,1\n");
    try {
        load_dataset(dir / "manifest.json");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.row() == 1);
        CHECK(e.column() == 1);
        CHECK(e.file().find("preds.csv") != std::string::npos);
    }
}

TEST_CASE("load_dataset error paths") {
    TempDir dir;
    const auto manifest = minimal_fixture(dir);

    SUBCASE("missing manifest") { CHECK_THROWS_AS(load_dataset(dir / "nope.json"), DataError); }
    SUBCASE("missing predictions file") {
        std::filesystem::remove(dir / "preds.csv");
        CHECK_THROWS_AS(load_dataset(manifest), DataError);
    }
    SUBCASE("missing embedding file") {
        std::filesystem::remove(dir / "e.bin");
        CHECK_THROWS_AS(load_dataset(manifest), DataError);
    }
    SUBCASE("duplicate id") {
        write_text(dir / "preds.csv", "id,source_1\na,1\nb,-1\na,1\nd,-1\n");
        try {
            load_dataset(manifest);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.row() == 2);
        }
    }
    SUBCASE("non-finite embedding entry") {
        auto s = line_space(4);
        s.vectors[2] = std::numeric_limits<float>::quiet_NaN();
        write_embedding_file(dir / "e.bin", s);
        try {
            load_dataset(manifest);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.row() == 2);
        }
    }
    SUBCASE("bad magic") {
        write_text(dir / "e.bin", "XXXX12345678");
        CHECK_THROWS_AS(load_dataset(manifest), DataError);
    }
    SUBCASE("too few samples") {
        write_text(dir / "preds.csv", "id,source_1\na,1\n");
        write_embedding_file(dir / "e.bin", line_space(1));
        CHECK_THROWS_AS(load_dataset(manifest), DataError);
    }
    SUBCASE("malformed manifest") {
        write_text(manifest, "{\"predictions\": 3}");
        CHECK_THROWS_AS(load_dataset(manifest), DataError);
    }
}

TEST_CASE("gold labels are matched by id, not row position") {
    TempDir dir;
    const auto manifest = minimal_fixture(dir);
    write_text(dir / "gold.csv", "id,label\nd,1\nc,-1\nb,1\na,-1\n");
    write_text(manifest, R"({"predictions": "preds.csv", "gold_labels": "gold.csv",
                            "embeddings": [{"name": "e", "path": "e.bin"}]})");
    const Dataset ds = load_dataset(manifest);
    REQUIRE(ds.gold_labels);
    CHECK(*ds.gold_labels == std::vector<int>{-1, 1, -1, 1});

    write_text(dir / "gold.csv", "id,label\nd,1\nc,-1\nb,1\nz,-1\n");
    CHECK_THROWS_AS(load_dataset(manifest), DataError);
}

TEST_CASE("embedding file layout is bit-exact") {
    TempDir dir;
    EmbeddingSpace s{"e", 2, {1.0f, -2.5f, 0.0f, 3.25f}};
    write_embedding_file(dir / "e.bin", s);
    std::ifstream in(dir / "e.bin", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 12 + 16);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "EMB1");
    CHECK(bytes[4] == 2);  // n
    CHECK(bytes[8] == 2);  // d
    // 1.0f = 0x3f800000 little endian
    CHECK(bytes[12] == 0x00);
    CHECK(bytes[15] == 0x3f);
    CHECK(read_embedding_file(dir / "e.bin", "e") == s);
}

TEST_CASE("write_labels rows and tie rule") {
    TempDir dir;
    const std::vector<std::string> ids{"a", "b", "c"};
    const std::vector<double> post{0.9, 0.5, 0.1};
    write_labels(ids, post, dir / "out.csv");
    std::ifstream in(dir / "out.csv");
    std::string header, r1, r2, r3;
    std::getline(in, header);
    std::getline(in, r1);
    std::getline(in, r2);
    std::getline(in, r3);
    CHECK(header == "id,label,posterior");
    CHECK(r1 == "a,1,0.900000");
    CHECK(r2 == "b,1,0.500000");
    CHECK(r3 == "c,-1,0.100000");

    CHECK_THROWS_AS(write_labels(ids, std::vector<double>{0.1}, dir / "x.csv"), std::invalid_argument);
    CHECK_THROWS_AS(write_labels(ids, post, dir / "no_such_dir" / "x.csv"), DataError);
}

TEST_CASE("write_labels then read_labels round-trips ids and posteriors") {
    TempDir dir;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<std::string> ids;
        std::vector<double> post;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("id_" + std::to_string(rng()));
            post.push_back(u(rng));
        }
        const std::vector<std::string> header{"k=10"};
        write_labels(ids, post, dir / "rt.csv", header);
        const LabelFile back = read_labels(dir / "rt.csv");
        REQUIRE(back.posteriors);
        CHECK(back.ids == ids);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs((*back.posteriors)[i] - post[i]) <= 1e-6);
            CHECK(back.labels[i] == hard_label(post[i]));
        }
    }
}

TEST_CASE("load_dataset is deterministic and save_dataset round-trips") {
    TempDir dir;
    auto ds = embroid::testing::random_dataset(30, 3, 2, 4, 11);
    const auto manifest = save_dataset(ds, dir.path());
    const Dataset a = load_dataset(manifest);
    const Dataset b = load_dataset(manifest);
    CHECK(a == b);
    CHECK(a == ds);
}

TEST_CASE("PredictionMatrix alphabet enforcement") {
    CHECK_THROWS_AS(PredictionMatrix(1, 2, Alphabet::Binary, {1, 0}), DataError);
    CHECK_NOTHROW(PredictionMatrix(1, 2, Alphabet::Ternary, {1, 0}));
    PredictionMatrix m(2, 2, Alphabet::Binary);
    CHECK_THROWS_AS(m.set(0, 0, 0), std::invalid_argument);
    const auto t = m.hconcat(PredictionMatrix(2, 1, Alphabet::Ternary));
    CHECK(t.cols() == 3);
    CHECK(t.alphabet() == Alphabet::Ternary);
    CHECK(t(1, 2) == 0);
}
