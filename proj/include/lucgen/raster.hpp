#pragma once

#include <array>
#include <string>
#include <vector>

#include "lucgen/landuse.hpp"

namespace lucgen::raster {

// RGB image, row-major from the top-left pixel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> pixels;  // 3 bytes per pixel

    unsigned char at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(x)) *
                          3 +
                      static_cast<std::size_t>(c)];
    }
};

// Fixed category palette for merged maps. Cells keep the color of their
// dominant category; codes at or above 20 reuse the palette cyclically and
// empty cells render white. The colors, in category order 0..19:
//   #1f77b4 #ff7f0e #2ca02c #d62728 #9467bd #8c564b #e377c2 #7f7f7f
//   #bcbd22 #17becf #aec7e8 #ffbb78 #98df8a #ff9896 #c5b0d5 #c49c94
//   #f7b6d2 #c7c7c7 #dbdb8d #9edae5
inline constexpr std::array<std::array<unsigned char, 3>, 20> kPalette = {{
    {31, 119, 180},  {255, 127, 14},  {44, 160, 44},   {214, 39, 40},
    {148, 103, 189}, {140, 86, 75},   {227, 119, 194}, {127, 127, 127},
    {188, 189, 34},  {23, 190, 207},  {174, 199, 232}, {255, 187, 120},
    {152, 223, 138}, {255, 152, 150}, {197, 176, 213}, {196, 156, 148},
    {247, 182, 210}, {199, 199, 199}, {219, 219, 141}, {158, 218, 229},
}};

inline constexpr std::array<unsigned char, 3> kEmptyColor = {255, 255, 255};

// Grayscale intensity map of one channel, n*scale pixels on each side; every
// grid cell becomes a scale x scale block. Cell values are normalized by the
// channel's own maximum, darker = larger (gray = 255 - round(255 * v / max));
// an all-zero channel renders white. Throws PreconditionError when scale < 1
// or the channel index is out of range.
Image channel_heatmap(const land::LandUseConfig& cfg, int channel, int scale);

// Indexed-color map of per-cell dominant categories using kPalette.
Image merged_map(const land::CategoryMap& map, int scale);

// Binary portable pixmap: "P6\n<width> <height>\n255\n" followed by raw RGB
// rows. Byte-exact for identical images.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);  // throws IngestError on malformed files

} // namespace lucgen::raster
