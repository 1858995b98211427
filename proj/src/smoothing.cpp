#include "tss/smoothing.hpp"

#include <cmath>

namespace tss {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix one_hot(std::span<const int> labels, int num_classes) {
    validate_labels(labels, num_classes);
    Matrix m(static_cast<int>(labels.size()), num_classes);
    for (size_t t = 0; t < labels.size(); ++t)
        m.at(static_cast<int>(t), labels[t]) = 1.0;
    return m;
}

int side_length(int segment_length, double v) {
    if (segment_length < 3) return 0;
    const int len = static_cast<int>(std::lround(v * segment_length));
    return std::min(len, segment_length / 2);
}

}  // namespace

std::vector<Vicinity> vicinities(const SegmentList& segments, double v) {
    if (v < 0.0 || v > 0.5)
        throw InvalidVicinity("vicinity parameter must lie in [0, 0.5], got " + std::to_string(v));

    std::vector<Vicinity> out;
    for (size_t i = 0; i + 1 < segments.size(); ++i) {
        const Segment& left = segments[i];
        const Segment& right = segments[i + 1];
        const int boundary = right.start;

        const int left_len = side_length(left.length(), v);
        if (left_len > 0)
            out.push_back({Vicinity::Side::Left, boundary - left_len, boundary, boundary,
                           left.label, right.label});

        const int right_len = side_length(right.length(), v);
        if (right_len > 0)
            out.push_back({Vicinity::Side::Right, boundary, boundary + right_len, boundary,
                           right.label, left.label});
    }
    return out;
}

Matrix smooth_labels(std::span<const int> labels, int num_classes, double v, double eps) {
    if (eps <= 0.0) throw InvalidVicinity("eps must be > 0, got " + std::to_string(eps));
    Matrix out = one_hot(labels, num_classes);

    const SegmentList segments = segments_from_labels(labels);
    for (const Vicinity& vic : vicinities(segments, v)) {
        const double scale = eps / vic.length();
        for (int t = vic.start; t < vic.end; ++t) {
            // Distance from the boundary: left-side frames start at 1 (the
            // boundary frame itself belongs to the right segment), right-side
            // frames start at 0 so the boundary frame sits at sigmoid(0) = 0.5.
            const int dist = vic.side == Vicinity::Side::Left ? vic.boundary - t : t - vic.boundary;
            const double own = sigmoid(scale * dist);
            out.at(t, vic.own_label) = own;
            out.at(t, vic.other_label) = 1.0 - own;
        }
    }
    return out;
}

Matrix smooth_fixed_linear(std::span<const int> labels, int num_classes, int half_width) {
    if (half_width < 0)
        throw InvalidVicinity("half_width must be >= 0, got " + std::to_string(half_width));
    Matrix out = one_hot(labels, num_classes);
    if (half_width == 0) return out;

    const SegmentList segments = segments_from_labels(labels);
    for (size_t i = 0; i + 1 < segments.size(); ++i) {
        const Segment& left = segments[i];
        const Segment& right = segments[i + 1];
        const int boundary = right.start;

        const int left_len = std::min(half_width, left.length() / 2);
        for (int t = boundary - left_len; t < boundary; ++t) {
            const double own = std::min(1.0, 0.5 + 0.5 * (boundary - t) / half_width);
            out.at(t, left.label) = own;
            out.at(t, right.label) = 1.0 - own;
        }

        const int right_len = std::min(half_width, right.length() / 2);
        for (int t = boundary; t < boundary + right_len; ++t) {
            const double own = std::min(1.0, 0.5 + 0.5 * (t - boundary) / half_width);
            out.at(t, right.label) = own;
            out.at(t, left.label) = 1.0 - own;
        }
    }
    return out;
}

}  // namespace tss
