#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "dnnsr/numeric.hpp"
#include "dnnsr/observed_matrix.hpp"

namespace dnnsr {

// --- synthetic data and masking ---------------------------------------------

/// X = g(1.2 (0.5 g(AB)^2 - g(AB) - 1)) + AB with g(x) = 1.71 tanh(2x/3) applied
/// elementwise, A (m x r) then B (r x n) drawn standard normal from Rng(seed).
/// Throws ArgumentError unless 0 < r < min(m, n).
Matrix gen_synthetic(Index m, Index n, Index r, std::uint64_t seed);

/// Removes exactly round(rho m n) entries chosen uniformly without replacement.
/// Throws ArgumentError unless 0 <= rho < 1 and at least one entry stays observed.
ObservedMatrix apply_mask(const Matrix& x, double rho, std::uint64_t seed);

// --- images -----------------------------------------------------------------

/// 8-bit RGB raster, row-major, three bytes per pixel.
struct RgbImage {
    Index width = 0;
    Index height = 0;
    std::vector<std::uint8_t> pixels;

    /// Throws FormatError when the pixel buffer does not hold width * height * 3 bytes.
    void validate() const;
};

/// height x 3 width matrix [R | G | B] scaled to [0, 1].
Matrix image_to_matrix(const RgbImage& image);
/// Inverse of image_to_matrix: clamps to [0, 1], scales by 255 and rounds half up.
/// Throws FormatError unless m has `height` rows and 3 * `width` columns.
RgbImage matrix_to_image(const Matrix& m, Index width, Index height);

/// Reads an 8-bit PNG, converting to RGB. Throws FormatError on unreadable data.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

// --- ratings ----------------------------------------------------------------

struct Rating {
    Index user = 0;  ///< 0-based
    Index item = 0;  ///< 0-based
    double value = 0.0;

    bool operator==(const Rating&) const = default;
};

struct RatingsTable {
    Index rows = 0;  ///< users
    Index cols = 0;  ///< items
    std::vector<Rating> triples;

    /// Throws ValidationError on out-of-range indices or ratings and on duplicate pairs.
    void validate() const;
};

enum class MovieLensFormat { ml100k_tab, ml1m_colons };

std::string_view to_string(MovieLensFormat f);
/// Accepts "ml100k", "ml100k_tab", "ml1m", "ml1m_colons".
std::optional<MovieLensFormat> parse_movielens_format(std::string_view name);

/// Parses "user item rating timestamp" lines (tab- or "::"-separated). Dimensions
/// are 943 x 1682 for ml100k and 6040 x 3952 for ml1m. Blank lines are skipped.
/// Throws ParseError with the line number on malformed lines and ValidationError
/// on ratings outside [1, 5], ids out of range or duplicate pairs.
RatingsTable parse_movielens(std::istream& in, MovieLensFormat format);
RatingsTable parse_movielens(const std::filesystem::path& path, MovieLensFormat format);

struct RatingsSplit {
    ObservedMatrix train;          ///< users x items, zero outside the training triples
    std::vector<Rating> holdout;
};

/// Seeded uniform split: round(fraction * N) triples train, the rest are held out.
/// Throws ArgumentError unless 0 < fraction <= 1 and the table is nonempty.
RatingsSplit split_ratings(const RatingsTable& table, double fraction, std::uint64_t seed);

// --- matrix CSV -------------------------------------------------------------

/// One row per line, comma-separated, 17 significant digits.
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
/// Throws ParseError (with line number) on non-numeric fields or ragged rows.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace dnnsr
