#include "lucgen/raster.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lucgen/errors.hpp"

namespace lucgen::raster {

namespace {

Image blank(int side_px) {
    Image img;
    img.width = side_px;
    img.height = side_px;
    img.pixels.assign(static_cast<std::size_t>(side_px) * static_cast<std::size_t>(side_px) * 3,
                      255);
    return img;
}

// Paints the scale x scale block of grid cell (row, col).
void fill_block(Image& img, int row, int col, int scale, unsigned char r, unsigned char g,
                unsigned char b) {
    for (int dy = 0; dy < scale; ++dy) {
        const std::size_t y = static_cast<std::size_t>(row * scale + dy);
        std::size_t off = (y * static_cast<std::size_t>(img.width) +
                           static_cast<std::size_t>(col * scale)) *
                          3;
        for (int dx = 0; dx < scale; ++dx) {
            img.pixels[off] = r;
            img.pixels[off + 1] = g;
            img.pixels[off + 2] = b;
            off += 3;
        }
    }
}

} // namespace

Image channel_heatmap(const land::LandUseConfig& cfg, int channel, int scale) {
    land::check_config(cfg);
    if (scale < 1) throw PreconditionError("heatmap: scale must be >= 1");
    if (channel < 0 || channel >= cfg.categories())
        throw PreconditionError("heatmap: channel out of range");

    const int n = cfg.grid();
    double top = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            top = std::max(top, cfg.tensor.at3(static_cast<std::size_t>(channel),
                                               static_cast<std::size_t>(r),
                                               static_cast<std::size_t>(c)));

    Image img = blank(n * scale);
    if (top == 0.0) return img;  // nothing to draw: all white
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double v = cfg.tensor.at3(static_cast<std::size_t>(channel),
                                            static_cast<std::size_t>(r),
                                            static_cast<std::size_t>(c));
            const auto gray =
                static_cast<unsigned char>(255 - std::lround(255.0 * v / top));
            fill_block(img, r, c, scale, gray, gray, gray);
        }
    return img;
}

Image merged_map(const land::CategoryMap& map, int scale) {
    if (scale < 1) throw PreconditionError("merged map: scale must be >= 1");
    if (map.grid < 1 ||
        map.codes.size() != static_cast<std::size_t>(map.grid) * static_cast<std::size_t>(map.grid))
        throw PreconditionError("merged map: malformed category map");

    Image img = blank(map.grid * scale);
    for (int r = 0; r < map.grid; ++r)
        for (int c = 0; c < map.grid; ++c) {
            const int code = map.at(r, c);
            if (code == land::kEmptyCell) continue;  // stays white
            if (code < 0) throw PreconditionError("merged map: negative category code");
            const auto& rgb = kPalette[static_cast<std::size_t>(code) % kPalette.size()];
            fill_block(img, r, c, scale, rgb[0], rgb[1], rgb[2]);
        }
    return img;
}

void write_ppm(const std::string& path, const Image& img) {
    if (img.width < 1 || img.height < 1 ||
        img.pixels.size() !=
            static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3)
        throw PreconditionError("ppm: malformed image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("ppm: cannot open for writing: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IngestError("ppm: short write: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("ppm: cannot open: " + path);
    std::string magic;
    int width = 0, height = 0, maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (!in || magic != "P6" || width < 1 || height < 1 || maxval != 255)
        throw IngestError("ppm: bad header: " + path);
    in.get();  // the single whitespace byte after maxval
    Image img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw IngestError("ppm: truncated pixel data: " + path);
    return img;
}

} // namespace lucgen::raster
