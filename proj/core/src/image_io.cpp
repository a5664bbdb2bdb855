#include <cstring>

#include <png.h>

#include "dnnsr/datasets.hpp"
#include "dnnsr/errors.hpp"

namespace dnnsr {

RgbImage read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    RgbImage out{static_cast<Index>(image.width), static_cast<Index>(image.height), {}};
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
    }
    out.validate();
    return out;
}

void write_png(const RgbImage& img, const std::filesystem::path& path) {
    img.validate();
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.pixels.data(), 0, nullptr)) {
        throw FormatError("cannot write PNG " + path.string() + ": " + image.message);
    }
}

}  // namespace dnnsr
