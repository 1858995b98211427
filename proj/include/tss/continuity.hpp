#pragma once
// Action-sequence sub-sampling, constrained DTW alignment of an ordered
// action sequence onto frames, and the resulting continuity loss.

#include <vector>

#include "tss/common.hpp"
#include "tss/losses.hpp"
#include "tss/seqcore.hpp"

namespace tss {

// Ordered class ids with no two adjacent elements equal.
struct ActionSequence {
    std::vector<int> elements;

    int length() const { return static_cast<int>(elements.size()); }
};

// Monotone partition of T frames into L ordered segments: L+1 cut indices
// with 0 = boundaries[0] < ... < boundaries[L] = T. Frames in
// [boundaries[l], boundaries[l+1]) carry the l-th element's label.
struct AssignmentPath {
    std::vector<int> boundaries;
};

struct DtwResult {
    AssignmentPath path;
    double cost = 0.0;        // sum of -log p^t(o_l) along the path
    std::vector<int> labels;  // per-frame labels parsed from the path
};

// Dominant class of each non-overlapping width-omega window (the final
// window may be shorter), with adjacent duplicates merged.
ActionSequence subsample_actions(const Matrix& probs, int omega);

// Minimum-cost assignment of the L ordered actions to the T frames where
// every action covers at least one frame. Cost of frame t under element l is
// -log p^t(o_l) after the probability clamp. Cost ties during backtracking
// keep the frame in the current element.
DtwResult dtw_align(const ActionSequence& actions, const Matrix& probs);

struct ContinuityResult {
    LossResult loss;
    std::vector<int> labels;  // the aligned pseudo-labels
    ActionSequence actions;
    AssignmentPath path;
    double dtw_cost = 0.0;
};

// Mean -log p^t(labels[t]) where labels come from aligning the sub-sampled
// action sequence back onto the frames. The labels are constant under
// differentiation.
ContinuityResult continuity_loss(const Matrix& probs, int omega);

}  // namespace tss
