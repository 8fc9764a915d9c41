#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/rng.hpp"

namespace voxsr {

/// Dense 2D image, channel-major, column fastest: data[(c*rows + r)*cols + col].
/// Rows may be fewer than cols: low-resolution observations are R x N with R <= N.
template <class T>
struct BasicImage2D {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    BasicImage2D() = default;
    BasicImage2D(int c, int r, int n, T fill = T(0))
        : channels(c), rows(r), cols(n), data(static_cast<std::size_t>(c) * r * n, fill) {}

    std::size_t index(int c, int r, int col) const {
        return (static_cast<std::size_t>(c) * rows + r) * cols + col;
    }
    T& at(int c, int r, int col) { return data[index(c, r, col)]; }
    const T& at(int c, int r, int col) const { return data[index(c, r, col)]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const BasicImage2D& o) const {
        return channels == o.channels && rows == o.rows && cols == o.cols;
    }

    template <class U>
    BasicImage2D<U> cast() const {
        BasicImage2D<U> out(channels, rows, cols);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    bool operator==(const BasicImage2D&) const = default;
};

using Image2D = BasicImage2D<float>;

inline std::string shape_string(int c, int r, int n) {
    return std::to_string(c) + "x" + std::to_string(r) + "x" + std::to_string(n);
}

template <class T>
inline void require_same_shape(const BasicImage2D<T>& a, const BasicImage2D<T>& b,
                               const char* what) {
    if (!a.same_shape(b))
        throw DataError(std::string(what) + ": shape mismatch " +
                        shape_string(a.channels, a.rows, a.cols) + " vs " +
                        shape_string(b.channels, b.rows, b.cols));
}

/// i.i.d. standard normal image.
template <class T = float>
inline BasicImage2D<T> normal_image(int c, int r, int n, Rng& rng) {
    BasicImage2D<T> img(c, r, n);
    for (auto& x : img.data) x = static_cast<T>(rng.normal());
    return img;
}

/// i.i.d. uniform [0,1) image.
template <class T = float>
inline BasicImage2D<T> uniform_image(int c, int r, int n, Rng& rng) {
    BasicImage2D<T> img(c, r, n);
    for (auto& x : img.data) x = static_cast<T>(rng.uniform01());
    return img;
}

template <class T>
inline BasicImage2D<T> clamped01(BasicImage2D<T> img) {
    for (auto& x : img.data) x = clamp01(x);
    return img;
}

}  // namespace voxsr
