#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phovo {

/// Dense row-major grayscale image.
template <class T>
class Image {
public:
    Image() = default;

    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(checked_size(width, height), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return data_.size(); }

    T& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    template <class U>
    bool same_size(const Image<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    friend bool operator==(const Image& a, const Image& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    static std::size_t checked_size(int width, int height) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("Image: dimensions must be positive");
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

namespace detail {

inline int pgm_next_token(std::istream& in, const std::string& file) {
    // PGM headers allow '#' comments between tokens.
    while (in) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    if (!(in >> value) || value < 0)
        throw std::runtime_error("PGM header malformed in " + file);
    return value;
}

} // namespace detail

inline void write_pgm(const Image<std::uint8_t>& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data()),
              static_cast<std::streamsize>(image.pixel_count()));
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

/// 16-bit PGM, big-endian sample order.
inline void write_pgm16(const Image<std::uint16_t>& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << "P5\n" << image.width() << " " << image.height() << "\n65535\n";
    std::vector<unsigned char> buffer(image.pixel_count() * 2);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        buffer[2 * i] = static_cast<unsigned char>(image[i] >> 8);
        buffer[2 * i + 1] = static_cast<unsigned char>(image[i] & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

inline Image<std::uint8_t> read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5")
        throw std::runtime_error("not a binary PGM (P5): " + path.string());
    const int width = detail::pgm_next_token(in, path.string());
    const int height = detail::pgm_next_token(in, path.string());
    const int maxval = detail::pgm_next_token(in, path.string());
    if (maxval != 255)
        throw std::runtime_error("expected 8-bit PGM (maxval 255) in " + path.string());
    in.get(); // single whitespace after maxval
    Image<std::uint8_t> image(width, height);
    in.read(reinterpret_cast<char*>(image.data()),
            static_cast<std::streamsize>(image.pixel_count()));
    if (in.gcount() != static_cast<std::streamsize>(image.pixel_count()))
        throw std::runtime_error("truncated PGM data in " + path.string());
    return image;
}

inline Image<std::uint16_t> read_pgm16(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5")
        throw std::runtime_error("not a binary PGM (P5): " + path.string());
    const int width = detail::pgm_next_token(in, path.string());
    const int height = detail::pgm_next_token(in, path.string());
    const int maxval = detail::pgm_next_token(in, path.string());
    if (maxval != 65535)
        throw std::runtime_error("expected 16-bit PGM (maxval 65535) in " + path.string());
    in.get();
    Image<std::uint16_t> image(width, height);
    std::vector<unsigned char> buffer(image.pixel_count() * 2);
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size()))
        throw std::runtime_error("truncated PGM data in " + path.string());
    for (std::size_t i = 0; i < image.pixel_count(); ++i)
        image[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    return image;
}

} // namespace phovo
