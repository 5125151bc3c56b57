#pragma once

#include <cstddef>
#include <vector>

#include "hypgcn/errors.hpp"
#include "hypgcn/fixed_point.hpp"

namespace hypgcn {

inline constexpr int kVertices = 25;  // joints in the skeleton graph

/// Activation tensor indexed (channel, time, vertex), channel-major.
struct FeatureTensor {
    int channels = 0;
    int frames = 0;
    int vertices = kVertices;
    std::vector<FixedQ8p8> data;

    FeatureTensor() = default;
    FeatureTensor(int c, int t, int v = kVertices)
        : channels(c), frames(t), vertices(v),
          data(static_cast<std::size_t>(c) * t * v) {}

    std::size_t index(int c, int t, int v) const {
        return (static_cast<std::size_t>(c) * frames + t) * vertices + v;
    }
    FixedQ8p8& at(int c, int t, int v) { return data[index(c, t, v)]; }
    FixedQ8p8 at(int c, int t, int v) const { return data[index(c, t, v)]; }

    bool same_shape(const FeatureTensor& o) const {
        return channels == o.channels && frames == o.frames && vertices == o.vertices;
    }
    bool operator==(const FeatureTensor&) const = default;
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw DimMismatch(msg);
}

}  // namespace hypgcn
