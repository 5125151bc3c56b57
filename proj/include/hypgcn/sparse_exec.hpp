#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hypgcn/prune.hpp"
#include "hypgcn/reference.hpp"

namespace hypgcn {

/// MACs executed/skipped per stage. performed + skipped always equals the
/// dense-equivalent totals derived from tensor dims.
struct WorkCounters {
    std::uint64_t graph_macs_performed = 0;
    std::uint64_t graph_macs_skipped = 0;
    std::uint64_t spatial_macs_performed = 0;
    std::uint64_t spatial_macs_skipped = 0;
    std::uint64_t temporal_macs_performed = 0;
    std::uint64_t temporal_macs_skipped = 0;

    WorkCounters& operator+=(const WorkCounters& o) {
        graph_macs_performed += o.graph_macs_performed;
        graph_macs_skipped += o.graph_macs_skipped;
        spatial_macs_performed += o.spatial_macs_performed;
        spatial_macs_skipped += o.spatial_macs_skipped;
        temporal_macs_performed += o.temporal_macs_performed;
        temporal_macs_skipped += o.temporal_macs_skipped;
        return *this;
    }

    double graph_skip_efficiency() const {
        const double total =
            static_cast<double>(graph_macs_performed) + static_cast<double>(graph_macs_skipped);
        return total > 0.0 ? static_cast<double>(graph_macs_skipped) / total : 0.0;
    }
    std::uint64_t total_performed() const {
        return graph_macs_performed + spatial_macs_performed + temporal_macs_performed;
    }
    std::uint64_t total_skipped() const {
        return graph_macs_skipped + spatial_macs_skipped + temporal_macs_skipped;
    }
};

/// Temporal subsampling: keeps even-indexed frames; ceil(frames/2) out.
FeatureTensor input_skip(const FeatureTensor& f);

/// Reordered dataflow over kept input channels only: a dropped channel
/// executes neither its 25-wide graph products nor its convolution
/// multiplies; the temporal stage skips dropped filters, cavity-masked
/// taps and zero-valued features. Bitwise equal to block_forward_ref on
/// the same pruned block.
FeatureTensor sparse_block_forward(const FeatureTensor& f_in, const Block& block,
                                   const PrunedBlockMasks& masks, WorkCounters& counters);

struct InferenceResult {
    std::vector<double> scores;
    WorkCounters counters;
};

/// Optional input skip (per spec flag), then the sparse blocks, pool and
/// classifier.
InferenceResult run_inference(const FeatureTensor& f_in, const PrunedModel& pruned);

/// Dense-equivalent MAC totals for a model at the given input length
/// (after any input skipping), for counter-conservation checks.
WorkCounters dense_equivalent_totals(const Model& model, int input_frames);

}  // namespace hypgcn
