#include "tss/continuity.hpp"

#include <cmath>
#include <limits>

namespace tss {

ActionSequence subsample_actions(const Matrix& probs, int omega) {
    if (omega < 1) throw InvalidStride("window stride must be >= 1, got " + std::to_string(omega));
    if (probs.rows < 1) throw EmptySequence("subsample_actions: no frames");

    ActionSequence seq;
    std::vector<double> mean(static_cast<size_t>(probs.cols));
    for (int start = 0; start < probs.rows; start += omega) {
        const int end = std::min(start + omega, probs.rows);
        std::fill(mean.begin(), mean.end(), 0.0);
        for (int t = start; t < end; ++t) {
            const double* row = probs.row(t);
            for (int k = 0; k < probs.cols; ++k) mean[static_cast<size_t>(k)] += row[k];
        }
        int best = 0;
        for (int k = 1; k < probs.cols; ++k)
            if (mean[static_cast<size_t>(k)] > mean[static_cast<size_t>(best)]) best = k;
        if (seq.elements.empty() || seq.elements.back() != best) seq.elements.push_back(best);
    }
    return seq;
}

DtwResult dtw_align(const ActionSequence& actions, const Matrix& probs) {
    const int num_elems = actions.length();
    const int num_frames = probs.rows;
    if (num_elems < 1) throw EmptySequence("dtw_align: empty action sequence");
    if (num_elems > num_frames)
        throw InfeasibleAlignment(std::to_string(num_elems) + " actions cannot partition " +
                                  std::to_string(num_frames) + " frames");
    for (int o : actions.elements)
        if (o < 0 || o >= probs.cols)
            throw LabelOutOfRange("action id " + std::to_string(o) + " outside [0, " +
                                  std::to_string(probs.cols) + ")");

    auto frame_cost = [&](int l, int t) {
        return -clamped_log(probs.at(t, actions.elements[static_cast<size_t>(l)]));
    };

    // E(l,t) = cost of assigning frames [0,t] to elements [0,l] with frame t
    // in element l. Element l can only start once l frames are behind it, so
    // cells with t < l stay infeasible.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    Matrix acc(num_elems, num_frames, kInf);
    acc.at(0, 0) = frame_cost(0, 0);
    for (int t = 1; t < num_frames; ++t)
        acc.at(0, t) = acc.at(0, t - 1) + frame_cost(0, t);
    for (int l = 1; l < num_elems; ++l) {
        for (int t = l; t < num_frames; ++t) {
            const double stay = acc.at(l, t - 1);
            const double enter = acc.at(l - 1, t - 1);
            acc.at(l, t) = frame_cost(l, t) + std::min(stay, enter);
        }
    }

    DtwResult out;
    out.cost = acc.at(num_elems - 1, num_frames - 1);
    out.labels.assign(static_cast<size_t>(num_frames), 0);
    out.path.boundaries.assign(static_cast<size_t>(num_elems) + 1, 0);
    out.path.boundaries[static_cast<size_t>(num_elems)] = num_frames;

    int l = num_elems - 1;
    for (int t = num_frames - 1; t >= 0; --t) {
        out.labels[static_cast<size_t>(t)] = actions.elements[static_cast<size_t>(l)];
        if (t == 0) break;
        if (l > 0 && (t == l || acc.at(l - 1, t - 1) < acc.at(l, t - 1))) {
            out.path.boundaries[static_cast<size_t>(l)] = t;
            --l;
        }
    }
    return out;
}

ContinuityResult continuity_loss(const Matrix& probs, int omega) {
    ContinuityResult out;
    out.actions = subsample_actions(probs, omega);
    DtwResult dtw = dtw_align(out.actions, probs);
    out.labels = std::move(dtw.labels);
    out.path = std::move(dtw.path);
    out.dtw_cost = dtw.cost;
    // Per-frame form of the alignment cost; identical to the classification
    // loss against the aligned labels.
    out.loss = classification_loss(probs, out.labels);
    return out;
}

}  // namespace tss
