#include "dnnsr/datasets.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <utility>

#include "dnnsr/errors.hpp"

namespace dnnsr {

namespace {

double g(double x) { return 1.71 * std::tanh(2.0 / 3.0 * x); }

/// First `count` entries of a seeded Fisher-Yates shuffle of 0..n-1.
std::vector<Index> sample_without_replacement(Index n, Index count, Rng& rng) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index i = 0; i < count; ++i) {
        const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + sep.size();
    }
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return in;
}

}  // namespace

Matrix gen_synthetic(Index m, Index n, Index r, std::uint64_t seed) {
    if (m <= 0 || n <= 0 || r <= 0 || r >= std::min(m, n)) {
        throw ArgumentError("gen_synthetic: need 0 < r < min(m, n)");
    }
    Rng rng(seed);
    const Matrix a = rng.normal_matrix(m, r);
    const Matrix b = rng.normal_matrix(r, n);
    const Matrix ab = a * b;
    Matrix x(m, n);
    for (Index k = 0; k < ab.size(); ++k) {
        const double v = ab.data()[k];
        const double gv = g(v);
        x.data()[k] = g(1.2 * (0.5 * gv * gv - gv - 1.0)) + v;
    }
    return x;
}

ObservedMatrix apply_mask(const Matrix& x, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ArgumentError("apply_mask: rho must lie in [0, 1)");
    const Index total = x.size();
    const auto removed = static_cast<Index>(std::llround(rho * static_cast<double>(total)));
    if (removed >= total) throw ArgumentError("apply_mask: rho leaves no observed entries");
    Rng rng(seed);
    Matrix mask = Matrix::Ones(x.rows(), x.cols());
    for (Index k : sample_without_replacement(total, removed, rng)) mask.data()[k] = 0.0;
    return ObservedMatrix::from(x, std::move(mask));
}

// --- images -----------------------------------------------------------------

void RgbImage::validate() const {
    if (width <= 0 || height <= 0) throw FormatError("image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(width * height * 3)) {
        throw FormatError("pixel buffer does not match image dimensions");
    }
}

Matrix image_to_matrix(const RgbImage& image) {
    image.validate();
    const Index w = image.width;
    Matrix m(image.height, 3 * w);
    for (Index y = 0; y < image.height; ++y)
        for (Index x = 0; x < w; ++x)
            for (Index c = 0; c < 3; ++c)
                m(y, c * w + x) = image.pixels[static_cast<std::size_t>((y * w + x) * 3 + c)] / 255.0;
    return m;
}

RgbImage matrix_to_image(const Matrix& m, Index width, Index height) {
    if (width <= 0 || height <= 0 || m.rows() != height || m.cols() != 3 * width) {
        throw FormatError("matrix does not have the height x 3 width layout of an RGB image");
    }
    RgbImage img{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width * height * 3))};
    for (Index y = 0; y < height; ++y)
        for (Index x = 0; x < width; ++x)
            for (Index c = 0; c < 3; ++c) {
                double v = m(y, c * width + x);
                v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
                img.pixels[static_cast<std::size_t>((y * width + x) * 3 + c)] =
                    static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
            }
    return img;
}

// --- ratings ----------------------------------------------------------------

void RatingsTable::validate() const {
    std::set<std::pair<Index, Index>> seen;
    for (const Rating& t : triples) {
        if (t.user < 0 || t.user >= rows || t.item < 0 || t.item >= cols) {
            throw ValidationError("rating index out of range");
        }
        if (!(t.value >= 1.0 && t.value <= 5.0)) throw ValidationError("rating outside [1, 5]");
        if (!seen.emplace(t.user, t.item).second) throw ValidationError("duplicate (user, item) pair");
    }
}

std::string_view to_string(MovieLensFormat f) {
    return f == MovieLensFormat::ml100k_tab ? "ml100k_tab" : "ml1m_colons";
}

std::optional<MovieLensFormat> parse_movielens_format(std::string_view name) {
    if (name == "ml100k" || name == "ml100k_tab") return MovieLensFormat::ml100k_tab;
    if (name == "ml1m" || name == "ml1m_colons") return MovieLensFormat::ml1m_colons;
    return std::nullopt;
}

RatingsTable parse_movielens(std::istream& in, MovieLensFormat format) {
    RatingsTable table;
    const bool tab = format == MovieLensFormat::ml100k_tab;
    table.rows = tab ? 943 : 6040;
    table.cols = tab ? 1682 : 3952;
    const std::string_view sep = tab ? "\t" : "::";

    std::set<std::pair<Index, Index>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = split(body, sep);
        if (fields.size() != 4) throw ParseError("expected 4 fields", lineno);
        long long user = 0;
        long long item = 0;
        long long stamp = 0;
        double value = 0.0;
        if (!parse_number(fields[0], user) || !parse_number(fields[1], item) || !parse_number(fields[2], value) ||
            !parse_number(fields[3], stamp)) {
            throw ParseError("non-numeric field", lineno);
        }
        if (!(value >= 1.0 && value <= 5.0)) {
            throw ValidationError("rating outside [1, 5] on line " + std::to_string(lineno));
        }
        if (user < 1 || user > table.rows || item < 1 || item > table.cols) {
            throw ValidationError("id out of range on line " + std::to_string(lineno));
        }
        const Rating r{static_cast<Index>(user - 1), static_cast<Index>(item - 1), value};
        if (!seen.emplace(r.user, r.item).second) {
            throw ValidationError("duplicate (user, item) pair on line " + std::to_string(lineno));
        }
        table.triples.push_back(r);
    }
    return table;
}

RatingsTable parse_movielens(const std::filesystem::path& path, MovieLensFormat format) {
    auto in = open_in(path);
    return parse_movielens(in, format);
}

RatingsSplit split_ratings(const RatingsTable& table, double fraction, std::uint64_t seed) {
    if (table.triples.empty()) throw ArgumentError("split_ratings: empty table");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("split_ratings: fraction must lie in (0, 1]");
    const auto n = static_cast<Index>(table.triples.size());
    const auto n_train = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
    Rng rng(seed);
    const std::vector<Index> order = sample_without_replacement(n, n, rng);

    Matrix data = Matrix::Zero(table.rows, table.cols);
    Matrix mask = Matrix::Zero(table.rows, table.cols);
    RatingsSplit out;
    for (Index k = 0; k < n; ++k) {
        const Rating& t = table.triples[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        if (k < n_train) {
            data(t.user, t.item) = t.value;
            mask(t.user, t.item) = 1.0;
        } else {
            out.holdout.push_back(t);
        }
    }
    out.train = ObservedMatrix::from(std::move(data), std::move(mask));
    return out;
}

// --- matrix CSV -------------------------------------------------------------

void write_matrix_csv(std::ostream& out, const Matrix& m) {
    char buf[32];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    write_matrix_csv(out, m);
    if (!out) throw ValidationError("write failed: " + path.string());
}

Matrix read_matrix_csv(std::istream& in) {
    std::vector<double> values;
    Index cols = -1;
    Index rows = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = split(body, ",");
        if (cols < 0) cols = static_cast<Index>(fields.size());
        if (static_cast<Index>(fields.size()) != cols) throw ParseError("ragged row", lineno);
        for (auto f : fields) {
            double v = 0.0;
            if (!parse_number(f, v)) throw ParseError("non-numeric field", lineno);
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) return Matrix(0, 0);
    return make_matrix(rows, cols, values);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_matrix_csv(in);
}

}  // namespace dnnsr
