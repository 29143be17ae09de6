#include "embroid/dataset_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace embroid {

namespace fs = std::filesystem;

namespace {

std::string describe(const std::string& what, const std::string& file,
                     std::optional<std::size_t> row, std::optional<std::size_t> column) {
    std::ostringstream os;
    if (!file.empty()) os << file << ": ";
    if (row) {
        os << "row " << *row;
        if (column) os << ", column " << *column;
        os << ": ";
    }
    os << what;
    return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        std::string field = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        // tolerate surrounding blanks
        const auto b = field.find_first_not_of(" \t");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool skip_line(const std::string& line) {
    const auto b = line.find_first_not_of(" \t\r");
    return b == std::string::npos || line[b] == '#';
}

std::optional<int> parse_int(const std::string& s) {
    std::string_view v = s;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) return std::nullopt;
    return value;
}

std::optional<double> parse_double(const std::string& s) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

std::ifstream open_input(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    if (!fs::exists(path)) throw DataError("file not found", path.string());
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open file", path.string());
    return in;
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing", path.string());
    return out;
}

void check_unique_ids(std::span<const std::string> ids, const std::string& file) {
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r].empty()) throw DataError("empty sample id", file, r);
        if (!seen.insert(ids[r]).second)
            throw DataError("duplicate sample id '" + ids[r] + "'", file, r);
    }
}

std::uint32_t load_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
    p[2] = static_cast<unsigned char>(v >> 16);
    p[3] = static_cast<unsigned char>(v >> 24);
}

constexpr std::array<char, 4> kEmbeddingMagic{'E', 'M', 'B', '1'};

}  // namespace

DataError::DataError(const std::string& what, std::string file, std::optional<std::size_t> row,
                     std::optional<std::size_t> column)
    : std::runtime_error(describe(what, file, row, column)),
      file_(std::move(file)),
      row_(row),
      column_(column) {}

bool in_alphabet(int value, Alphabet alphabet) noexcept {
    if (value == 1 || value == -1) return true;
    return value == 0 && alphabet == Alphabet::Ternary;
}

PredictionMatrix::PredictionMatrix(std::size_t rows, std::size_t cols, Alphabet alphabet)
    : rows_(rows),
      cols_(cols),
      alphabet_(alphabet),
      values_(rows * cols, alphabet == Alphabet::Binary ? std::int8_t{1} : std::int8_t{0}) {}

PredictionMatrix::PredictionMatrix(std::size_t rows, std::size_t cols, Alphabet alphabet,
                                   std::vector<std::int8_t> values)
    : rows_(rows), cols_(cols), alphabet_(alphabet), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_)
        throw DataError("prediction matrix has " + std::to_string(values_.size()) +
                        " cells, expected " + std::to_string(rows_ * cols_));
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!in_alphabet(values_[i], alphabet_))
            throw DataError("value " + std::to_string(values_[i]) + " outside alphabet", {},
                            i / cols_, i % cols_);
}

void PredictionMatrix::set(std::size_t r, std::size_t c, int value) {
    if (!in_alphabet(value, alphabet_))
        throw std::invalid_argument("value " + std::to_string(value) + " outside alphabet");
    values_.at(r * cols_ + c) = static_cast<std::int8_t>(value);
}

PredictionMatrix PredictionMatrix::hconcat(const PredictionMatrix& other) const {
    if (other.rows_ != rows_)
        throw std::invalid_argument("hconcat: row counts differ");
    const Alphabet alpha = (alphabet_ == Alphabet::Ternary || other.alphabet_ == Alphabet::Ternary)
                               ? Alphabet::Ternary
                               : Alphabet::Binary;
    PredictionMatrix out(rows_, cols_ + other.cols_, alpha);
    for (std::size_t r = 0; r < rows_; ++r) {
        auto* dst = out.values_.data() + r * out.cols_;
        std::copy_n(values_.data() + r * cols_, cols_, dst);
        std::copy_n(other.values_.data() + r * other.cols_, other.cols_, dst + cols_);
    }
    return out;
}

PredictionMatrix PredictionMatrix::negated() const {
    PredictionMatrix out = *this;
    for (auto& v : out.values_) v = static_cast<std::int8_t>(-v);
    return out;
}

void Dataset::validate() const {
    const std::size_t n = sample_ids.size();
    if (n < 2) throw DataError("dataset needs at least 2 samples, got " + std::to_string(n));
    if (predictions.cols() == 0) throw DataError("dataset needs at least 1 source");
    if (embeddings.empty()) throw DataError("dataset needs at least 1 embedding space");
    if (predictions.rows() != n)
        throw DataError("predictions have " + std::to_string(predictions.rows()) +
                        " rows but there are " + std::to_string(n) + " sample ids");
    if (predictions.alphabet() != Alphabet::Binary)
        throw DataError("original predictions must use the {-1,+1} alphabet");
    if (source_names.size() != predictions.cols())
        throw DataError("source name count does not match prediction columns");
    check_unique_ids(sample_ids, {});
    for (const auto& space : embeddings) {
        if (space.dim == 0) throw DataError("embedding '" + space.name + "' has dimension 0");
        if (space.vectors.size() != n * space.dim)
            throw DataError("embedding '" + space.name + "' has " + std::to_string(space.rows()) +
                            " rows, predictions have " + std::to_string(n));
        for (std::size_t i = 0; i < space.vectors.size(); ++i)
            if (!std::isfinite(space.vectors[i]))
                throw DataError("non-finite embedding entry in '" + space.name + "'", {},
                                i / space.dim, i % space.dim);
    }
    if (gold_labels) {
        if (gold_labels->size() != n) throw DataError("gold label count does not match samples");
        for (std::size_t r = 0; r < n; ++r)
            if ((*gold_labels)[r] != 1 && (*gold_labels)[r] != -1)
                throw DataError("gold label outside {-1,+1}", {}, r);
    }
}

PredictionFile read_predictions(const fs::path& path) {
    auto in = open_input(path);
    const std::string file = path.string();
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (skip_line(line)) continue;
        header = split_csv_line(line);
        break;
    }
    if (header.size() < 2 || header.front() != "id")
        throw DataError("expected header 'id,source_1,...'", file);

    PredictionFile out;
    out.source_names.assign(header.begin() + 1, header.end());
    const std::size_t m = out.source_names.size();
    std::vector<std::int8_t> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (skip_line(line)) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != m + 1)
            throw DataError("expected " + std::to_string(m + 1) + " fields, got " +
                                std::to_string(fields.size()),
                            file, row);
        out.ids.push_back(fields[0]);
        for (std::size_t c = 0; c < m; ++c) {
            const auto v = parse_int(fields[c + 1]);
            if (!v || !in_alphabet(*v, Alphabet::Binary))
                throw DataError("value '" + fields[c + 1] + "' outside alphabet {-1,+1}", file,
                                row, c);
            values.push_back(static_cast<std::int8_t>(*v));
        }
        ++row;
    }
    check_unique_ids(out.ids, file);
    out.predictions = PredictionMatrix(row, m, Alphabet::Binary, std::move(values));
    return out;
}

void write_predictions(const fs::path& path, std::span<const std::string> ids,
                       std::span<const std::string> source_names,
                       const PredictionMatrix& predictions) {
    auto out = open_output(path);
    out << "id";
    for (const auto& s : source_names) out << ',' << s;
    out << '\n';
    for (std::size_t r = 0; r < predictions.rows(); ++r) {
        out << ids[r];
        for (const auto v : predictions.row(r)) out << ',' << static_cast<int>(v);
        out << '\n';
    }
    if (!out) throw DataError("write failed", path.string());
}

void write_gold_labels(const fs::path& path, std::span<const std::string> ids,
                       std::span<const int> labels) {
    auto out = open_output(path);
    out << "id,label\n";
    for (std::size_t r = 0; r < ids.size(); ++r) out << ids[r] << ',' << labels[r] << '\n';
    if (!out) throw DataError("write failed", path.string());
}

EmbeddingSpace read_embedding_file(const fs::path& path, std::string name) {
    auto in = open_input(path, std::ios::binary);
    const std::string file = path.string();
    std::array<unsigned char, 12> header{};
    if (!in.read(reinterpret_cast<char*>(header.data()), header.size()))
        throw DataError("truncated header", file);
    if (std::memcmp(header.data(), kEmbeddingMagic.data(), 4) != 0)
        throw DataError("bad magic, expected EMB1", file);
    const std::uint32_t n = load_u32_le(header.data() + 4);
    const std::uint32_t d = load_u32_le(header.data() + 8);
    if (d == 0) throw DataError("embedding dimension is 0", file);

    const std::size_t count = static_cast<std::size_t>(n) * d;
    std::vector<unsigned char> raw(count * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw DataError("truncated payload: expected " + std::to_string(count) + " floats", file);
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("trailing bytes after " + std::to_string(count) + " floats", file);

    EmbeddingSpace space{std::move(name), d, std::vector<float>(count)};
    for (std::size_t i = 0; i < count; ++i) {
        const float v = std::bit_cast<float>(load_u32_le(raw.data() + 4 * i));
        if (!std::isfinite(v)) throw DataError("non-finite embedding entry", file, i / d, i % d);
        space.vectors[i] = v;
    }
    return space;
}

void write_embedding_file(const fs::path& path, const EmbeddingSpace& space) {
    auto out = open_output(path, std::ios::binary);
    std::vector<unsigned char> buf(12 + space.vectors.size() * 4);
    std::memcpy(buf.data(), kEmbeddingMagic.data(), 4);
    store_u32_le(buf.data() + 4, static_cast<std::uint32_t>(space.rows()));
    store_u32_le(buf.data() + 8, static_cast<std::uint32_t>(space.dim));
    for (std::size_t i = 0; i < space.vectors.size(); ++i)
        store_u32_le(buf.data() + 12 + 4 * i, std::bit_cast<std::uint32_t>(space.vectors[i]));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failed", path.string());
}

LabelFile read_labels(const fs::path& path) {
    auto in = open_input(path);
    const std::string file = path.string();
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (skip_line(line)) continue;
        header = split_csv_line(line);
        break;
    }
    const bool with_posterior = header == std::vector<std::string>{"id", "label", "posterior"};
    if (!with_posterior && header != std::vector<std::string>{"id", "label"})
        throw DataError("expected header 'id,label' or 'id,label,posterior'", file);

    LabelFile out;
    if (with_posterior) out.posteriors.emplace();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (skip_line(line)) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("expected " + std::to_string(header.size()) + " fields", file, row);
        const auto label = parse_int(fields[1]);
        if (!label || !in_alphabet(*label, Alphabet::Binary))
            throw DataError("label '" + fields[1] + "' outside alphabet {-1,+1}", file, row, 1);
        out.ids.push_back(fields[0]);
        out.labels.push_back(*label);
        if (with_posterior) {
            const auto p = parse_double(fields[2]);
            if (!p || !(*p >= 0.0 && *p <= 1.0))
                throw DataError("posterior '" + fields[2] + "' outside [0,1]", file, row, 2);
            out.posteriors->push_back(*p);
        }
        ++row;
    }
    check_unique_ids(out.ids, file);
    return out;
}

int hard_label(double posterior) noexcept { return posterior >= 0.5 ? 1 : -1; }

void write_labels(std::span<const std::string> ids, std::span<const double> posteriors,
                  const fs::path& out_path, std::span<const std::string> header_comments) {
    if (posteriors.size() != ids.size())
        throw std::invalid_argument("write_labels: " + std::to_string(posteriors.size()) +
                                    " posteriors for " + std::to_string(ids.size()) + " samples");
    auto out = open_output(out_path);
    for (const auto& c : header_comments) out << "# " << c << '\n';
    out << "id,label,posterior\n" << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << ids[i] << ',' << hard_label(posteriors[i]) << ',' << posteriors[i] << '\n';
    if (!out) throw DataError("write failed", out_path.string());
}

void write_labels(const Dataset& dataset, std::span<const double> posteriors,
                  const fs::path& out_path, std::span<const std::string> header_comments) {
    write_labels(dataset.sample_ids, posteriors, out_path, header_comments);
}

Dataset load_dataset(const fs::path& manifest_path) {
    const std::string mfile = manifest_path.string();
    auto in = open_input(manifest_path);
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid JSON: ") + e.what(), mfile);
    }
    if (!manifest.is_object() || !manifest.contains("predictions") ||
        !manifest["predictions"].is_string() || !manifest.contains("embeddings") ||
        !manifest["embeddings"].is_array())
        throw DataError("manifest needs string 'predictions' and array 'embeddings'", mfile);

    const fs::path base = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path path(p);
        return path.is_absolute() ? path : base / path;
    };

    const fs::path pred_path = resolve(manifest["predictions"].get<std::string>());
    auto preds = read_predictions(pred_path);
    const std::size_t n = preds.ids.size();

    Dataset ds;
    ds.sample_ids = std::move(preds.ids);
    ds.source_names = std::move(preds.source_names);
    ds.predictions = std::move(preds.predictions);

    for (const auto& entry : manifest["embeddings"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry.contains("path") ||
            !entry["name"].is_string() || !entry["path"].is_string())
            throw DataError("each embedding entry needs string 'name' and 'path'", mfile);
        const fs::path emb_path = resolve(entry["path"].get<std::string>());
        auto space = read_embedding_file(emb_path, entry["name"].get<std::string>());
        if (space.rows() != n)
            throw DataError("row-count mismatch: " + emb_path.string() + " has " +
                                std::to_string(space.rows()) + " rows, " + pred_path.string() +
                                " has " + std::to_string(n),
                            emb_path.string());
        ds.embeddings.push_back(std::move(space));
    }

    if (manifest.contains("gold_labels") && !manifest["gold_labels"].is_null()) {
        if (!manifest["gold_labels"].is_string())
            throw DataError("'gold_labels' must be a path string", mfile);
        const fs::path gold_path = resolve(manifest["gold_labels"].get<std::string>());
        const auto gold = read_labels(gold_path);
        if (gold.ids.size() != n)
            throw DataError("row-count mismatch: " + gold_path.string() + " has " +
                                std::to_string(gold.ids.size()) + " rows, " + pred_path.string() +
                                " has " + std::to_string(n),
                            gold_path.string());
        std::unordered_map<std::string, std::size_t> index;
        for (std::size_t r = 0; r < n; ++r) index.emplace(gold.ids[r], r);
        std::vector<int> labels(n);
        for (std::size_t r = 0; r < n; ++r) {
            const auto it = index.find(ds.sample_ids[r]);
            if (it == index.end())
                throw DataError("sample id '" + ds.sample_ids[r] + "' missing from gold labels",
                                gold_path.string());
            labels[r] = gold.labels[it->second];
        }
        ds.gold_labels = std::move(labels);
    }

    try {
        ds.validate();
    } catch (const DataError& e) {
        throw DataError(e.what(), mfile);
    }
    return ds;
}

fs::path save_dataset(const Dataset& dataset, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    write_predictions(dir / "predictions.csv", dataset.sample_ids, dataset.source_names,
                      dataset.predictions);
    manifest["predictions"] = "predictions.csv";
    manifest["embeddings"] = nlohmann::json::array();
    for (std::size_t j = 0; j < dataset.embeddings.size(); ++j) {
        const std::string file = "emb_" + std::to_string(j) + ".bin";
        write_embedding_file(dir / file, dataset.embeddings[j]);
        manifest["embeddings"].push_back({{"name", dataset.embeddings[j].name}, {"path", file}});
    }
    if (dataset.gold_labels) {
        write_gold_labels(dir / "gold.csv", dataset.sample_ids, *dataset.gold_labels);
        manifest["gold_labels"] = "gold.csv";
    }
    const fs::path manifest_path = dir / "manifest.json";
    auto out = open_output(manifest_path);
    out << manifest.dump(2) << '\n';
    return manifest_path;
}

}  // namespace embroid
