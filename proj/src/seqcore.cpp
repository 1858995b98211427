#include "tss/seqcore.hpp"

#include <cmath>

namespace tss {

void validate_labels(std::span<const int> labels, int num_classes) {
    if (labels.empty()) throw EmptySequence("label sequence has no frames");
    for (size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] < 0 || labels[t] >= num_classes)
            throw LabelOutOfRange("label " + std::to_string(labels[t]) + " at frame " +
                                  std::to_string(t) + " not in [0, " +
                                  std::to_string(num_classes) + ")");
    }
}

SegmentList segments_from_labels(std::span<const int> labels) {
    if (labels.empty()) throw EmptySequence("cannot segment an empty label sequence");
    SegmentList segments;
    int start = 0;
    for (size_t t = 1; t <= labels.size(); ++t) {
        if (t == labels.size() || labels[t] != labels[start]) {
            segments.push_back({labels[start], start, static_cast<int>(t)});
            start = static_cast<int>(t);
        }
    }
    return segments;
}

std::vector<int> labels_from_segments(const SegmentList& segments) {
    std::vector<int> labels;
    for (const Segment& s : segments)
        labels.insert(labels.end(), static_cast<size_t>(s.length()), s.label);
    return labels;
}

ActionFrequency action_frequency_from_labels(std::span<const int> labels, int num_classes) {
    validate_labels(labels, num_classes);
    ActionFrequency freq(static_cast<size_t>(num_classes), 0.0);
    for (int y : labels) freq[static_cast<size_t>(y)] += 1.0;
    const double inv_t = 1.0 / static_cast<double>(labels.size());
    for (double& f : freq) f *= inv_t;
    return freq;
}

ActionFrequency soft_action_frequency(const Matrix& probs) {
    if (probs.rows < 1 || probs.cols < 1)
        throw EmptySequence("probability matrix has no frames");
    ActionFrequency freq(static_cast<size_t>(probs.cols), 0.0);
    for (int t = 0; t < probs.rows; ++t) {
        const double* row = probs.row(t);
        for (int k = 0; k < probs.cols; ++k) freq[static_cast<size_t>(k)] += row[k];
    }
    const double inv_t = 1.0 / static_cast<double>(probs.rows);
    for (double& f : freq) f *= inv_t;
    return freq;
}

double kl_divergence(const ActionFrequency& q, const ActionFrequency& p) {
    if (q.size() != p.size())
        throw DimensionMismatch("kl_divergence: " + std::to_string(q.size()) + " vs " +
                                std::to_string(p.size()) + " classes");
    double kl = 0.0;
    for (size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0) continue;
        kl += q[k] * (std::log(q[k]) - clamped_log(p[k]));
    }
    return kl;
}

bool is_row_stochastic(const Matrix& m, double tol) {
    for (int t = 0; t < m.rows; ++t) {
        double sum = 0.0;
        for (int k = 0; k < m.cols; ++k) {
            const double v = m.at(t, k);
            if (v < 0.0) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

}  // namespace tss
