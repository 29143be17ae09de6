#pragma once
// On-disk dataset contract: manifest (JSON), predictions and labels
// (comma-delimited text), embeddings (EMB1 binary).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace embroid {

// Input validation failure. Carries the offending file and, when known, the
// 0-based data row / column.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::string file = {},
              std::optional<std::size_t> row = std::nullopt,
              std::optional<std::size_t> column = std::nullopt);

    const std::string& file() const noexcept { return file_; }
    std::optional<std::size_t> row() const noexcept { return row_; }
    std::optional<std::size_t> column() const noexcept { return column_; }

private:
    std::string file_;
    std::optional<std::size_t> row_;
    std::optional<std::size_t> column_;
};

enum class Alphabet : std::uint8_t {
    Binary,   // {-1, +1}
    Ternary,  // {-1, 0, +1}, 0 = abstain
};

bool in_alphabet(int value, Alphabet alphabet) noexcept;

// Row-major n x m grid of votes.
class PredictionMatrix {
public:
    PredictionMatrix() = default;
    PredictionMatrix(std::size_t rows, std::size_t cols, Alphabet alphabet);
    // Throws DataError if a value falls outside the alphabet or the size is wrong.
    PredictionMatrix(std::size_t rows, std::size_t cols, Alphabet alphabet,
                     std::vector<std::int8_t> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    Alphabet alphabet() const noexcept { return alphabet_; }

    std::int8_t operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    // Throws std::invalid_argument on a value outside the alphabet.
    void set(std::size_t r, std::size_t c, int value);

    std::span<const std::int8_t> row(std::size_t r) const {
        return {values_.data() + r * cols_, cols_};
    }
    std::span<const std::int8_t> values() const noexcept { return values_; }

    // Columns of `this` followed by columns of `other`; result alphabet is
    // the wider of the two.
    PredictionMatrix hconcat(const PredictionMatrix& other) const;
    PredictionMatrix negated() const;

    bool operator==(const PredictionMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Alphabet alphabet_ = Alphabet::Binary;
    std::vector<std::int8_t> values_;
};

struct EmbeddingSpace {
    std::string name;
    std::size_t dim = 0;
    std::vector<float> vectors;  // rows() x dim, row-major

    std::size_t rows() const noexcept { return dim == 0 ? 0 : vectors.size() / dim; }
    std::span<const float> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }

    bool operator==(const EmbeddingSpace&) const = default;
};

struct Dataset {
    std::vector<std::string> sample_ids;
    std::vector<std::string> source_names;
    PredictionMatrix predictions;  // Binary alphabet
    std::vector<EmbeddingSpace> embeddings;
    std::optional<std::vector<int>> gold_labels;  // evaluation only

    std::size_t n_samples() const noexcept { return sample_ids.size(); }
    std::size_t n_sources() const noexcept { return predictions.cols(); }
    std::size_t n_spaces() const noexcept { return embeddings.size(); }

    // Throws DataError when a structural invariant is broken.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

// Parsed label file. `posteriors` is present only for output-style files
// (`id,label,posterior`).
struct LabelFile {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::optional<std::vector<double>> posteriors;
};

Dataset load_dataset(const std::filesystem::path& manifest_path);

// Hard label for a posterior; exactly 0.5 maps to +1.
int hard_label(double posterior) noexcept;

// Writes `id,label,posterior` rows. Lines in `header_comments` are emitted
// first, each prefixed with "# ".
void write_labels(const Dataset& dataset, std::span<const double> posteriors,
                  const std::filesystem::path& out_path,
                  std::span<const std::string> header_comments = {});
void write_labels(std::span<const std::string> ids, std::span<const double> posteriors,
                  const std::filesystem::path& out_path,
                  std::span<const std::string> header_comments = {});

// Reads either `id,label` or `id,label,posterior`. Lines starting with '#'
// are skipped.
LabelFile read_labels(const std::filesystem::path& path);

// Lower-level readers/writers, also used to produce fixtures.
struct PredictionFile {
    std::vector<std::string> ids;
    std::vector<std::string> source_names;
    PredictionMatrix predictions;
};
PredictionFile read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, std::span<const std::string> ids,
                       std::span<const std::string> source_names,
                       const PredictionMatrix& predictions);
void write_gold_labels(const std::filesystem::path& path, std::span<const std::string> ids,
                       std::span<const int> labels);

EmbeddingSpace read_embedding_file(const std::filesystem::path& path, std::string name);
void write_embedding_file(const std::filesystem::path& path, const EmbeddingSpace& space);

// Writes the dataset as manifest.json + predictions.csv + emb_<j>.bin
// (+ gold.csv) under `dir`. Returns the manifest path.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace embroid
