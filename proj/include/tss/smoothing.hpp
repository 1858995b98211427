#pragma once
// Adaptive boundary smoothing: duration-proportional vicinities around
// segment boundaries with sigmoid-mixed soft labels, plus the fixed-width
// linear baseline.

#include <span>
#include <vector>

#include "tss/common.hpp"
#include "tss/seqcore.hpp"

namespace tss {

// Frame range adjacent to a boundary in which the boundary's two labels mix.
struct Vicinity {
    enum class Side { Left, Right };
    Side side = Side::Left;
    int start = 0;      // [start, end) lies inside the owning segment
    int end = 0;
    int boundary = 0;   // first frame of the right segment
    int own_label = 0;
    int other_label = 0;

    int length() const { return end - start; }
};

// Vicinities of every internal boundary. Each side's length is
// round(v * segment length), capped at half the segment so the two ends of a
// segment never overlap; segments shorter than 3 frames get none.
std::vector<Vicinity> vicinities(const SegmentList& segments, double v);

// Soft T x K target matrix: one-hot outside all vicinities; inside, the
// own-label probability follows a sigmoid in the distance to the boundary
// scaled by eps / |V|, rising from 0.5 at the boundary frame to sigmoid(eps)
// at the far end of a left vicinity. With v = 0 the output is exactly one-hot.
Matrix smooth_labels(std::span<const int> labels, int num_classes, double v, double eps);

// Fixed-slope baseline: own-label probability ramps linearly from 0.5 at the
// boundary to 1 at half_width frames in, clipped to segment interiors.
Matrix smooth_fixed_linear(std::span<const int> labels, int num_classes, int half_width);

}  // namespace tss
