#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hypgcn/fixed_point.hpp"
#include "hypgcn/tensor.hpp"

namespace hypgcn {

inline constexpr int kNeighbourSets = 3;  // K_v

/// One 25x25 real-valued graph matrix, row-major.
using GraphMatrix = std::array<float, kVertices * kVertices>;

/// The K_v = 3 summed graphs G_k = A_k + B_k used by the spatial stage.
/// Compute always goes through the Q8.8-quantized copy so that both
/// multiplication orders accumulate identical integer products; the float
/// values are what the weight file stores. G_k - A_k may be fully dense:
/// nothing here assumes sparsity of the learned part.
struct AdjacencyStack {
    std::array<GraphMatrix, kNeighbourSets> graphs{};        // G_k, real-valued
    std::array<std::array<std::uint8_t, kVertices * kVertices>, kNeighbourSets>
        static_part{};                                        // A_k, binary
    std::array<std::array<FixedQ8p8, kVertices * kVertices>, kNeighbourSets>
        graphs_q{};                                           // quantize(G_k)

    /// Refresh graphs_q after mutating `graphs`.
    void requantize() {
        for (int k = 0; k < kNeighbourSets; ++k)
            for (int i = 0; i < kVertices * kVertices; ++i)
                graphs_q[k][i] = quantize(graphs[k][i]);
    }

    FixedQ8p8 q(int k, int p, int w) const { return graphs_q[k][p * kVertices + w]; }
};

/// Row-normalized skeleton adjacency stack for the 25-joint skeleton:
/// k=0 identity, k=1 inward (towards the spine centre), k=2 outward.
AdjacencyStack skeleton_adjacency();

/// skeleton_adjacency() with a dense learned residue B_k added to every
/// graph, values uniform in [-b_range, b_range] from the given seed.
AdjacencyStack skeleton_adjacency_with_residue(std::uint64_t seed, float b_range = 0.05f);

}  // namespace hypgcn
