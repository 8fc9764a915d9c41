#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/image.hpp"
#include "voxsr/rng.hpp"

namespace voxsr {

/// Set of conditioned row indices of an n-row image. Indices are strictly
/// increasing and non-empty; the binary vector form is derived on demand.
struct RowMask {
    int n = 0;
    std::vector<int> indices;

    static RowMask from_indices(int n, std::vector<int> indices) {
        if (n < 1) throw DataError("RowMask: n must be >= 1");
        if (indices.empty()) throw DataError("RowMask: at least one conditioned row required");
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] < 0 || indices[i] >= n)
                throw DataError("RowMask: index " + std::to_string(indices[i]) +
                                " out of range [0," + std::to_string(n) + ")");
            if (i > 0 && indices[i] <= indices[i - 1])
                throw DataError("RowMask: indices must be strictly increasing");
        }
        RowMask m;
        m.n = n;
        m.indices = std::move(indices);
        return m;
    }

    int count() const { return static_cast<int>(indices.size()); }

    std::vector<std::uint8_t> bits() const {
        std::vector<std::uint8_t> b(n, 0);
        for (int i : indices) b[i] = 1;
        return b;
    }
};

/// Evenly spaced mask {0, n/l, 2n/l, ...}; l must divide n so the grid matches
/// the z-subsampling simulator exactly.
inline RowMask make_uniform_mask(int n, int l) {
    if (l < 1 || l > n) throw DataError("make_uniform_mask: need 1 <= l <= n");
    if (n % l != 0)
        throw DataError("make_uniform_mask: l = " + std::to_string(l) +
                        " does not divide n = " + std::to_string(n));
    const int step = n / l;
    std::vector<int> idx(l);
    for (int i = 0; i < l; ++i) idx[i] = i * step;
    return RowMask::from_indices(n, std::move(idx));
}

/// l ~ U[l_min, l_max], then l distinct uniform indices without replacement.
inline RowMask sample_random_mask(int n, int l_min, int l_max, Rng& rng) {
    if (!(0 < l_min && l_min <= l_max && l_max < n))
        throw DataError("sample_random_mask: need 0 < l_min <= l_max < n");
    const int l = static_cast<int>(rng.uniform_int(l_min, l_max));
    // Partial Fisher-Yates over [0, n): first l entries are the sample.
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < l; ++i) {
        const int j = static_cast<int>(rng.uniform_int(i, n - 1));
        std::swap(pool[i], pool[j]);
    }
    std::vector<int> idx(pool.begin(), pool.begin() + l);
    std::sort(idx.begin(), idx.end());
    return RowMask::from_indices(n, std::move(idx));
}

/// Rowwise blend: output row i is the condition row for i in the mask, the
/// target row otherwise. The condition may carry all n rows (rows off the
/// mask are ignored) or exactly l rows (expanded onto the mask in order).
template <class T>
inline BasicImage2D<T> interlace(const BasicImage2D<T>& target, const BasicImage2D<T>& condition,
                                 const RowMask& mask) {
    if (target.rows != mask.n)
        throw DataError("interlace: target has " + std::to_string(target.rows) + " rows, mask n = " +
                        std::to_string(mask.n));
    if (condition.channels != target.channels || condition.cols != target.cols)
        throw DataError("interlace: condition " +
                        shape_string(condition.channels, condition.rows, condition.cols) +
                        " incompatible with target " +
                        shape_string(target.channels, target.rows, target.cols));
    const bool compact = condition.rows == mask.count();
    if (!compact && condition.rows != mask.n)
        throw DataError("interlace: condition must carry n or l rows, got " +
                        std::to_string(condition.rows));
    BasicImage2D<T> out = target;
    for (int k = 0; k < mask.count(); ++k) {
        const int row = mask.indices[k];
        const int src = compact ? k : row;
        for (int c = 0; c < out.channels; ++c)
            for (int col = 0; col < out.cols; ++col)
                out.at(c, row, col) = condition.at(c, src, col);
    }
    return out;
}

/// Collects the masked rows of an n-row image into an l x cols observation,
/// in mask order.
template <class T>
inline BasicImage2D<T> gather_rows(const BasicImage2D<T>& img, const RowMask& mask) {
    if (img.rows != mask.n)
        throw DataError("gather_rows: image has " + std::to_string(img.rows) + " rows, mask n = " +
                        std::to_string(mask.n));
    BasicImage2D<T> out(img.channels, mask.count(), img.cols);
    for (int k = 0; k < mask.count(); ++k)
        for (int c = 0; c < img.channels; ++c)
            for (int col = 0; col < img.cols; ++col)
                out.at(c, k, col) = img.at(c, mask.indices[k], col);
    return out;
}

}  // namespace voxsr
