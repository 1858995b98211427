#pragma once
// Frame-label sequences, their run-length segment form, action frequencies,
// and the KL divergence primitive shared by the loss functions.

#include <span>
#include <string>
#include <vector>

#include "tss/common.hpp"

namespace tss {

// Per-frame class ids in [0, num_classes). Class ids are zero-based.
struct LabelSequence {
    std::vector<int> labels;
    int num_classes = 0;
};

// Half-open frame range [start, end) carrying one class label.
struct Segment {
    int label = 0;
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
    bool operator==(const Segment&) const = default;
};

using SegmentList = std::vector<Segment>;

// A length-K simplex vector: per-class temporal proportion of a video.
using ActionFrequency = std::vector<double>;

// Validates labels against a class count; throws LabelOutOfRange / EmptySequence.
void validate_labels(std::span<const int> labels, int num_classes);

// Run-length encodes a label sequence. Adjacent segments never share a label
// and concatenating them reproduces the input exactly.
SegmentList segments_from_labels(std::span<const int> labels);

// Inverse of segments_from_labels.
std::vector<int> labels_from_segments(const SegmentList& segments);

// Fraction of frames carrying each class (sums to 1).
ActionFrequency action_frequency_from_labels(std::span<const int> labels, int num_classes);

// Column means of a row-stochastic T x K matrix (sums to 1).
ActionFrequency soft_action_frequency(const Matrix& probs);

// KL(q || p) with p clamped to kProbFloor before the log and 0*log(0) = 0
// for zero entries of q. Always finite and >= 0 for simplex inputs.
double kl_divergence(const ActionFrequency& q, const ActionFrequency& p);

// True when every row of m sums to 1 within tol and all entries are >= 0.
bool is_row_stochastic(const Matrix& m, double tol = 1e-6);

}  // namespace tss
