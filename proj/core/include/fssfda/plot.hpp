#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fssfda/distributions.hpp"

namespace fssfda {

// Minimal RGB raster canvas with a 5x7 bitmap font, enough for bar charts
// and scatter reports.
class Canvas {
public:
    Canvas(int width, int height, std::uint8_t r = 255, std::uint8_t g = 255, std::uint8_t b = 255);

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<std::uint8_t>& pixels() const { return pixels_; }

    void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void fill_rect(int x0, int y0, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void draw_line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void draw_disc(int cx, int cy, int radius, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    // Uppercases lowercase input; unknown glyphs render as blanks.
    void draw_text(int x, int y, const std::string& text, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                   int scale = 1);

private:
    int width_, height_;
    std::vector<std::uint8_t> pixels_;
};

// Truecolor PNG with stored (uncompressed) deflate blocks.
void write_png(const std::filesystem::path& path, const Canvas& canvas);

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
};

void plot_scatter(const std::filesystem::path& path, const std::vector<ScatterPoint>& points,
                  const std::string& x_label, const std::string& y_label);

// One bar panel per domain: normalized class frequencies over the class
// index.
void plot_label_distributions(const std::filesystem::path& path,
                              const std::vector<std::pair<std::string, LabelDistribution>>& domains);

}  // namespace fssfda
