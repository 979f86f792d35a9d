#include "fssfda/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fssfda/error.hpp"

namespace fssfda {

Canvas::Canvas(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height * 3) {
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = r;
        pixels_[i + 1] = g;
        pixels_[i + 2] = b;
    }
}

void Canvas::set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || x >= width_ || y < 0 || y >= height_) return;
    const std::size_t off = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[off] = r;
    pixels_[off + 1] = g;
    pixels_[off + 2] = b;
}

void Canvas::fill_rect(int x0, int y0, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) set_pixel(x, y, r, g, b);
    }
}

void Canvas::draw_line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        set_pixel(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void Canvas::draw_disc(int cx, int cy, int radius, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = -radius; y <= radius; ++y) {
        for (int x = -radius; x <= radius; ++x) {
            if (x * x + y * y <= radius * radius) set_pixel(cx + x, cy + y, r, g, b);
        }
    }
}

namespace {

// 5x7 glyphs, 7 rows of 5-bit masks (MSB = left column).
struct Glyph {
    char ch;
    std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}}, {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}}, {'%', {0x19, 0x1A, 0x02, 0x04, 0x08, 0x0B, 0x13}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}}, {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {'>', {0x08, 0x04, 0x02, 0x01, 0x02, 0x04, 0x08}},
    {'<', {0x02, 0x04, 0x08, 0x10, 0x08, 0x04, 0x02}}, {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}}, {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const std::uint8_t* find_glyph(char c) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    for (const auto& g : kFont) {
        if (g.ch == c) return g.rows;
    }
    return nullptr;
}

}  // namespace

void Canvas::draw_text(int x, int y, const std::string& text, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                       int scale) {
    int cx = x;
    for (char c : text) {
        const std::uint8_t* rows = find_glyph(c);
        if (rows != nullptr) {
            for (int row = 0; row < 7; ++row) {
                for (int col = 0; col < 5; ++col) {
                    if (rows[row] & (1 << (4 - col))) {
                        fill_rect(cx + col * scale, y + row * scale, scale, scale, r, g, b);
                    }
                }
            }
        }
        cx += 6 * scale;
    }
}

// ---------------------------------------------------------------------------
// PNG writer (stored deflate blocks)
// ---------------------------------------------------------------------------

namespace {

std::uint32_t crc32_table_entry(std::uint32_t n) {
    for (int k = 0; k < 8; ++k) n = (n & 1) ? 0xEDB88320U ^ (n >> 1) : n >> 1;
    return n;
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static std::uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (std::uint32_t i = 0; i < 256; ++i) table[i] = crc32_table_entry(i);
        init = true;
    }
    std::uint32_t c = 0xFFFFFFFFU;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFU;
}

std::uint32_t adler32(const std::uint8_t* data, std::size_t len) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % 65521U;
        b = (b + a) % 65521U;
    }
    return (b << 16) | a;
}

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> buf;
    push_be32(buf, static_cast<std::uint32_t>(data.size()));
    buf.insert(buf.end(), type, type + 4);
    buf.insert(buf.end(), data.begin(), data.end());
    const std::uint32_t crc = crc32(buf.data() + 4, buf.size() - 4);
    push_be32(buf, crc);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

void write_png(const std::filesystem::path& path, const Canvas& canvas) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write png: " + path.string());

    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(canvas.width()));
    push_be32(ihdr, static_cast<std::uint32_t>(canvas.height()));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    write_chunk(out, "IHDR", ihdr);

    // Raw scanlines with filter byte 0.
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(canvas.height()) * (1 + static_cast<std::size_t>(canvas.width()) * 3));
    const auto& px = canvas.pixels();
    for (int y = 0; y < canvas.height(); ++y) {
        raw.push_back(0);
        const std::size_t off = static_cast<std::size_t>(y) * canvas.width() * 3;
        raw.insert(raw.end(), px.begin() + static_cast<std::ptrdiff_t>(off),
                   px.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(canvas.width()) * 3));
    }

    std::vector<std::uint8_t> idat;
    idat.push_back(0x78);
    idat.push_back(0x01);
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t block = std::min<std::size_t>(65535, raw.size() - pos);
        const bool final = pos + block == raw.size();
        idat.push_back(final ? 1 : 0);
        idat.push_back(static_cast<std::uint8_t>(block & 0xFF));
        idat.push_back(static_cast<std::uint8_t>(block >> 8));
        idat.push_back(static_cast<std::uint8_t>(~block & 0xFF));
        idat.push_back(static_cast<std::uint8_t>((~block >> 8) & 0xFF));
        idat.insert(idat.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
                    raw.begin() + static_cast<std::ptrdiff_t>(pos + block));
        pos += block;
    }
    push_be32(idat, adler32(raw.data(), raw.size()));
    write_chunk(out, "IDAT", idat);
    write_chunk(out, "IEND", {});
}

// ---------------------------------------------------------------------------
// High-level plots
// ---------------------------------------------------------------------------

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

void plot_scatter(const std::filesystem::path& path, const std::vector<ScatterPoint>& points,
                  const std::string& x_label, const std::string& y_label) {
    const int w = 480, h = 360, margin = 50;
    Canvas canvas(w, h);

    double xmin = points.empty() ? 0.0 : points[0].x, xmax = xmin;
    double ymin = points.empty() ? 0.0 : points[0].y, ymax = ymin;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    canvas.draw_line(margin, h - margin, w - margin / 2, h - margin, 0, 0, 0);
    canvas.draw_line(margin, h - margin, margin, margin / 2, 0, 0, 0);
    canvas.draw_text(w / 2 - 3 * static_cast<int>(x_label.size()), h - margin + 18, x_label, 0, 0, 0);
    canvas.draw_text(4, margin / 2 - 10, y_label, 0, 0, 0);
    canvas.draw_text(margin - 12, h - margin + 6, format_number(xmin), 0, 0, 0);
    canvas.draw_text(w - margin - 30, h - margin + 6, format_number(xmax), 0, 0, 0);
    canvas.draw_text(2, h - margin - 8, format_number(ymin), 0, 0, 0);
    canvas.draw_text(2, margin / 2 + 2, format_number(ymax), 0, 0, 0);

    for (const auto& p : points) {
        const int x = margin + static_cast<int>((p.x - xmin) / (xmax - xmin) * (w - 1.5 * margin));
        const int y = h - margin - static_cast<int>((p.y - ymin) / (ymax - ymin) * (h - 1.5 * margin));
        canvas.draw_disc(x, y, 4, 30, 60, 180);
    }
    write_png(path, canvas);
}

void plot_label_distributions(const std::filesystem::path& path,
                              const std::vector<std::pair<std::string, LabelDistribution>>& domains) {
    if (domains.empty()) throw Error("plot_label_distributions: no domains");
    const int panel_w = 420, panel_h = 160, margin = 40;
    const int w = panel_w + 2 * margin;
    const int h = static_cast<int>(domains.size()) * (panel_h + margin) + margin;
    Canvas canvas(w, h);

    double pmax = 0.0;
    for (const auto& [name, dist] : domains) {
        (void)name;
        for (double v : dist.probs) pmax = std::max(pmax, v);
    }
    if (pmax <= 0.0) pmax = 1.0;

    for (std::size_t d = 0; d < domains.size(); ++d) {
        const auto& [name, dist] = domains[d];
        const int top = margin + static_cast<int>(d) * (panel_h + margin);
        const int base = top + panel_h;
        canvas.draw_text(margin, top - 14, name, 0, 0, 0);
        canvas.draw_line(margin, base, margin + panel_w, base, 0, 0, 0);
        canvas.draw_line(margin, base, margin, top, 0, 0, 0);
        canvas.draw_text(2, top - 2, format_number(pmax), 0, 0, 0);

        const int k = dist.size();
        const int slot = std::max(1, panel_w / std::max(1, k));
        const int bar = std::max(1, slot - 2);
        for (int c = 0; c < k; ++c) {
            const int bh = static_cast<int>(dist.probs[static_cast<std::size_t>(c)] / pmax * (panel_h - 4));
            canvas.fill_rect(margin + 1 + c * slot, base - bh, bar, bh, 60, 120, 200);
        }
    }
    write_png(path, canvas);
}

}  // namespace fssfda
