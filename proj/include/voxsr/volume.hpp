#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/image.hpp"

namespace voxsr {

/// Slicing plane of a volume. Slices are indexed along the remaining axis:
/// XY by depth, XZ by height, YZ by width.
enum class Axis { XY, XZ, YZ };

inline const char* axis_name(Axis a) {
    switch (a) {
        case Axis::XY: return "xy";
        case Axis::XZ: return "xz";
        case Axis::YZ: return "yz";
    }
    return "?";
}

/// Dense 3D volume, channel-major, depth fastest:
/// data[((c*H + h)*W + w)*Z + z]. Values nominally in [0,1]; diffusion
/// arithmetic may leave that range, clamping happens at I/O boundaries only.
template <class T>
struct BasicVolume {
    int channels = 0;
    int height = 0;
    int width = 0;
    int depth = 0;
    int z_step = 1;  // acquisition stride along z, set by downsample_z
    std::vector<T> data;

    BasicVolume() = default;
    BasicVolume(int c, int h, int w, int z, T fill = T(0))
        : channels(c), height(h), width(w), depth(z),
          data(static_cast<std::size_t>(c) * h * w * z, fill) {}

    std::size_t index(int c, int h, int w, int z) const {
        return ((static_cast<std::size_t>(c) * height + h) * width + w) * depth + z;
    }
    T& at(int c, int h, int w, int z) { return data[index(c, h, w, z)]; }
    const T& at(int c, int h, int w, int z) const { return data[index(c, h, w, z)]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const BasicVolume& o) const {
        return channels == o.channels && height == o.height && width == o.width &&
               depth == o.depth;
    }
    bool isotropic() const { return height == width && width == depth; }

    template <class U>
    BasicVolume<U> cast() const {
        BasicVolume<U> out(channels, height, width, depth);
        out.z_step = z_step;
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Volume = BasicVolume<float>;

inline std::string shape_string(int c, int h, int w, int z) {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w) + "x" +
           std::to_string(z);
}

template <class T>
inline bool same_values(const BasicVolume<T>& a, const BasicVolume<T>& b) {
    return a.same_shape(b) && a.data == b.data;
}

/// Number of slices a volume has along an axis.
template <class T>
inline int slice_count(const BasicVolume<T>& v, Axis axis) {
    switch (axis) {
        case Axis::XY: return v.depth;
        case Axis::XZ: return v.height;
        case Axis::YZ: return v.width;
    }
    return 0;
}

template <class T>
inline void check_slice_index(const BasicVolume<T>& v, Axis axis, int index) {
    const int n = slice_count(v, axis);
    if (index < 0 || index >= n)
        throw DataError(std::string("slice: index ") + std::to_string(index) + " out of range [0," +
                        std::to_string(n) + ") on axis " + axis_name(axis));
}

/// Cross-section of a volume. Row/column order per axis:
///   XY at depth k:  rows = H, cols = W
///   XZ at height i: rows = Z, cols = W
///   YZ at width j:  rows = Z, cols = H
/// For XZ/YZ the rows run along z, so a row mask on the slice masks z-planes.
template <class T>
inline BasicImage2D<T> slice(const BasicVolume<T>& v, Axis axis, int index) {
    check_slice_index(v, axis, index);
    switch (axis) {
        case Axis::XY: {
            BasicImage2D<T> img(v.channels, v.height, v.width);
            for (int c = 0; c < v.channels; ++c)
                for (int h = 0; h < v.height; ++h)
                    for (int w = 0; w < v.width; ++w) img.at(c, h, w) = v.at(c, h, w, index);
            return img;
        }
        case Axis::XZ: {
            BasicImage2D<T> img(v.channels, v.depth, v.width);
            for (int c = 0; c < v.channels; ++c)
                for (int z = 0; z < v.depth; ++z)
                    for (int w = 0; w < v.width; ++w) img.at(c, z, w) = v.at(c, index, w, z);
            return img;
        }
        case Axis::YZ: {
            BasicImage2D<T> img(v.channels, v.depth, v.height);
            for (int c = 0; c < v.channels; ++c)
                for (int z = 0; z < v.depth; ++z)
                    for (int h = 0; h < v.height; ++h) img.at(c, z, h) = v.at(c, h, index, z);
            return img;
        }
    }
    return {};
}

/// Inverse of slice(): writes img back into v at the given cross-section.
template <class T>
inline void set_slice(BasicVolume<T>& v, Axis axis, int index, const BasicImage2D<T>& img) {
    check_slice_index(v, axis, index);
    const auto expect = [&](int r, int n) {
        if (img.channels != v.channels || img.rows != r || img.cols != n)
            throw DataError(std::string("set_slice: got ") +
                            shape_string(img.channels, img.rows, img.cols) + ", want " +
                            shape_string(v.channels, r, n) + " on axis " + axis_name(axis));
    };
    switch (axis) {
        case Axis::XY:
            expect(v.height, v.width);
            for (int c = 0; c < v.channels; ++c)
                for (int h = 0; h < v.height; ++h)
                    for (int w = 0; w < v.width; ++w) v.at(c, h, w, index) = img.at(c, h, w);
            break;
        case Axis::XZ:
            expect(v.depth, v.width);
            for (int c = 0; c < v.channels; ++c)
                for (int z = 0; z < v.depth; ++z)
                    for (int w = 0; w < v.width; ++w) v.at(c, index, w, z) = img.at(c, z, w);
            break;
        case Axis::YZ:
            expect(v.depth, v.height);
            for (int c = 0; c < v.channels; ++c)
                for (int z = 0; z < v.depth; ++z)
                    for (int h = 0; h < v.height; ++h) v.at(c, h, index, z) = img.at(c, z, h);
            break;
    }
}

/// Keeps every factor-th XY plane starting at z = 0. Simulates anisotropic
/// acquisition; the stride is recorded in z_step.
template <class T>
inline BasicVolume<T> downsample_z(const BasicVolume<T>& v, int factor) {
    if (factor < 1) throw DataError("downsample_z: factor must be >= 1");
    if (v.depth % factor != 0)
        throw DataError("downsample_z: factor " + std::to_string(factor) +
                        " does not divide depth " + std::to_string(v.depth));
    BasicVolume<T> out(v.channels, v.height, v.width, v.depth / factor);
    out.z_step = v.z_step * factor;
    for (int c = 0; c < v.channels; ++c)
        for (int h = 0; h < v.height; ++h)
            for (int w = 0; w < v.width; ++w)
                for (int z = 0; z < out.depth; ++z) out.at(c, h, w, z) = v.at(c, h, w, z * factor);
    return out;
}

/// Voxelwise mean. The summation a+b is symmetric, so average(a,b) and
/// average(b,a) are bit-equal.
template <class T>
inline BasicVolume<T> average_volumes(const BasicVolume<T>& a, const BasicVolume<T>& b) {
    if (!a.same_shape(b))
        throw DataError("average_volumes: shape mismatch " +
                        shape_string(a.channels, a.height, a.width, a.depth) + " vs " +
                        shape_string(b.channels, b.height, b.width, b.depth));
    BasicVolume<T> out(a.channels, a.height, a.width, a.depth);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = (a.data[i] + b.data[i]) * T(0.5);
    return out;
}

struct TilingSpec {
    int tile_h = 32, tile_w = 32, tile_z = 32;
    int stride_h = 32, stride_w = 32, stride_z = 32;
};

template <class T>
struct VolumeTile {
    BasicVolume<T> data;
    int h0 = 0, w0 = 0, z0 = 0;
};

namespace detail {
// Tile start offsets along one extent: stride steps, final tile clamped to the
// boundary so the whole extent is covered.
inline std::vector<int> tile_offsets(int extent, int tile, int stride) {
    std::vector<int> offs;
    for (int o = 0;; o += stride) {
        if (o + tile >= extent) {
            offs.push_back(extent - tile);
            break;
        }
        offs.push_back(o);
    }
    return offs;
}
}  // namespace detail

template <class T>
inline std::vector<VolumeTile<T>> patch_volume(const BasicVolume<T>& v, const TilingSpec& spec) {
    if (spec.tile_h < 1 || spec.tile_w < 1 || spec.tile_z < 1 || spec.stride_h < 1 ||
        spec.stride_w < 1 || spec.stride_z < 1)
        throw DataError("patch_volume: tile dims and strides must be >= 1");
    if (spec.tile_h > v.height || spec.tile_w > v.width || spec.tile_z > v.depth)
        throw DataError("patch_volume: tile " +
                        shape_string(v.channels, spec.tile_h, spec.tile_w, spec.tile_z) +
                        " larger than volume " +
                        shape_string(v.channels, v.height, v.width, v.depth));
    std::vector<VolumeTile<T>> tiles;
    for (int h0 : detail::tile_offsets(v.height, spec.tile_h, spec.stride_h))
        for (int w0 : detail::tile_offsets(v.width, spec.tile_w, spec.stride_w))
            for (int z0 : detail::tile_offsets(v.depth, spec.tile_z, spec.stride_z)) {
                VolumeTile<T> t;
                t.h0 = h0;
                t.w0 = w0;
                t.z0 = z0;
                t.data = BasicVolume<T>(v.channels, spec.tile_h, spec.tile_w, spec.tile_z);
                for (int c = 0; c < v.channels; ++c)
                    for (int h = 0; h < spec.tile_h; ++h)
                        for (int w = 0; w < spec.tile_w; ++w)
                            for (int z = 0; z < spec.tile_z; ++z)
                                t.data.at(c, h, w, z) = v.at(c, h0 + h, w0 + w, z0 + z);
                tiles.push_back(std::move(t));
            }
    return tiles;
}

/// Reassembles tiles; overlapping voxels are averaged. Output dims are
/// inferred from the tile extents.
template <class T>
inline BasicVolume<T> stitch(const std::vector<VolumeTile<T>>& tiles) {
    if (tiles.empty()) throw DataError("stitch: no tiles");
    const int C = tiles.front().data.channels;
    int H = 0, W = 0, Z = 0;
    for (const auto& t : tiles) {
        if (t.data.channels != C) throw DataError("stitch: inconsistent channel counts");
        H = std::max(H, t.h0 + t.data.height);
        W = std::max(W, t.w0 + t.data.width);
        Z = std::max(Z, t.z0 + t.data.depth);
    }
    BasicVolume<double> acc(C, H, W, Z);
    BasicVolume<double> weight(1, H, W, Z);
    for (const auto& t : tiles)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < t.data.height; ++h)
                for (int w = 0; w < t.data.width; ++w)
                    for (int z = 0; z < t.data.depth; ++z) {
                        acc.at(c, t.h0 + h, t.w0 + w, t.z0 + z) +=
                            static_cast<double>(t.data.at(c, h, w, z));
                        if (c == 0) weight.at(0, t.h0 + h, t.w0 + w, t.z0 + z) += 1.0;
                    }
    BasicVolume<T> out(C, H, W, Z);
    for (int c = 0; c < C; ++c)
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w)
                for (int z = 0; z < Z; ++z) {
                    const double n = weight.at(0, h, w, z);
                    if (n == 0.0) throw DataError("stitch: uncovered voxel");
                    out.at(c, h, w, z) = static_cast<T>(acc.at(c, h, w, z) / n);
                }
    return out;
}

}  // namespace voxsr
