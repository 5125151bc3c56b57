#include "hypgcn/graph.hpp"

#include <random>

namespace hypgcn {
namespace {

// Bone list for the 25-joint skeleton, (joint, parent) pairs, 1-indexed,
// parents pointing towards the spine centre (joint 21).
constexpr int kBones[][2] = {
    {1, 2},   {2, 21},  {3, 21},  {4, 3},   {5, 21},  {6, 5},   {7, 6},
    {8, 7},   {9, 21},  {10, 9},  {11, 10}, {12, 11}, {13, 1},  {14, 13},
    {15, 14}, {16, 15}, {17, 1},  {18, 17}, {19, 18}, {20, 19}, {22, 23},
    {23, 8},  {24, 25}, {25, 12},
};

void row_normalize(GraphMatrix& m) {
    for (int r = 0; r < kVertices; ++r) {
        float sum = 0.0f;
        for (int c = 0; c < kVertices; ++c) sum += m[r * kVertices + c];
        if (sum == 0.0f) continue;
        for (int c = 0; c < kVertices; ++c) m[r * kVertices + c] /= sum;
    }
}

}  // namespace

AdjacencyStack skeleton_adjacency() {
    AdjacencyStack stack;

    // k=0: self links
    for (int v = 0; v < kVertices; ++v)
        stack.static_part[0][v * kVertices + v] = 1;

    // k=1 inward (child -> parent), k=2 outward (parent -> child)
    for (const auto& bone : kBones) {
        const int child = bone[0] - 1;
        const int parent = bone[1] - 1;
        stack.static_part[1][child * kVertices + parent] = 1;
        stack.static_part[2][parent * kVertices + child] = 1;
    }

    for (int k = 0; k < kNeighbourSets; ++k) {
        for (int i = 0; i < kVertices * kVertices; ++i)
            stack.graphs[k][i] = static_cast<float>(stack.static_part[k][i]);
        row_normalize(stack.graphs[k]);
    }
    stack.requantize();
    return stack;
}

AdjacencyStack skeleton_adjacency_with_residue(std::uint64_t seed, float b_range) {
    AdjacencyStack stack = skeleton_adjacency();
    std::mt19937_64 rng(seed);
    const double span = 2.0 * b_range;
    for (int k = 0; k < kNeighbourSets; ++k) {
        for (int i = 0; i < kVertices * kVertices; ++i) {
            // uniform in [-b_range, b_range], derived from raw bits so the
            // stream is identical across platforms
            const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
            stack.graphs[k][i] += static_cast<float>(u * span - b_range);
        }
    }
    stack.requantize();
    return stack;
}

}  // namespace hypgcn
