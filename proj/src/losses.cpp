#include "tss/losses.hpp"

#include <cmath>

namespace tss {

namespace {

// Derivative of -log(max(p, floor)): zero once the clamp takes over.
double d_neglog(double p) { return p > kProbFloor ? -1.0 / p : 0.0; }

}  // namespace

LossResult classification_loss(const Matrix& probs, std::span<const int> targets) {
    if (static_cast<int>(targets.size()) != probs.rows)
        throw DimensionMismatch("classification_loss: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(probs.rows) + " frames");
    validate_labels(targets, probs.cols);

    const double inv_t = 1.0 / probs.rows;
    LossResult out;
    out.grad = Matrix(probs.rows, probs.cols);
    for (int t = 0; t < probs.rows; ++t) {
        const int y = targets[static_cast<size_t>(t)];
        const double p = probs.at(t, y);
        out.value += -clamped_log(p);
        out.grad.at(t, y) = inv_t * d_neglog(p);
    }
    out.value *= inv_t;
    return out;
}

LossResult classification_loss(const Matrix& probs, const Matrix& soft_targets) {
    require_same_shape(probs, soft_targets, "classification_loss");

    const double inv_t = 1.0 / probs.rows;
    LossResult out;
    out.grad = Matrix(probs.rows, probs.cols);
    for (int t = 0; t < probs.rows; ++t) {
        for (int k = 0; k < probs.cols; ++k) {
            const double y = soft_targets.at(t, k);
            if (y == 0.0) continue;
            const double p = probs.at(t, k);
            out.value += -y * clamped_log(p);
            out.grad.at(t, k) = inv_t * y * d_neglog(p);
        }
    }
    out.value *= inv_t;
    return out;
}

LossResult smoothing_loss(const Matrix& log_probs, double tau) {
    if (log_probs.rows < 2)
        throw SequenceTooShort("smoothing_loss needs at least 2 frames, got " +
                               std::to_string(log_probs.rows));

    const double scale = 1.0 / (static_cast<double>(log_probs.rows) * log_probs.cols);
    LossResult out;
    out.grad = Matrix(log_probs.rows, log_probs.cols);
    for (int t = 1; t < log_probs.rows; ++t) {
        for (int k = 0; k < log_probs.cols; ++k) {
            const double delta = log_probs.at(t, k) - log_probs.at(t - 1, k);
            if (std::abs(delta) <= tau) {
                out.value += delta * delta;
                out.grad.at(t, k) += scale * 2.0 * delta;
                out.grad.at(t - 1, k) -= scale * 2.0 * delta;
            } else {
                out.value += tau * tau;
            }
        }
    }
    out.value *= scale;
    return out;
}

LossResult smoothing_loss_from_probs(const Matrix& probs, double tau) {
    Matrix log_probs(probs.rows, probs.cols);
    for (size_t i = 0; i < probs.data.size(); ++i)
        log_probs.data[i] = clamped_log(probs.data[i]);

    LossResult out = smoothing_loss(log_probs, tau);
    for (size_t i = 0; i < probs.data.size(); ++i) {
        const double p = probs.data[i];
        out.grad.data[i] = p > kProbFloor ? out.grad.data[i] / p : 0.0;
    }
    return out;
}

LossResult pseudo_label_loss(const Matrix& probs) {
    if (probs.rows < 1) throw EmptySequence("pseudo_label_loss: no frames");

    const double inv_t = 1.0 / probs.rows;
    LossResult out;
    out.grad = Matrix(probs.rows, probs.cols);
    for (int t = 0; t < probs.rows; ++t) {
        const double* row = probs.row(t);
        int best = 0;
        for (int k = 1; k < probs.cols; ++k)
            if (row[k] > row[best]) best = k;
        out.value += -clamped_log(row[best]);
        out.grad.at(t, best) = inv_t * d_neglog(row[best]);
    }
    out.value *= inv_t;
    return out;
}

LossResult entropy_loss(const Matrix& probs) {
    if (probs.rows < 1) throw EmptySequence("entropy_loss: no frames");

    const double inv_t = 1.0 / probs.rows;
    LossResult out;
    out.grad = Matrix(probs.rows, probs.cols);
    for (int t = 0; t < probs.rows; ++t) {
        for (int k = 0; k < probs.cols; ++k) {
            const double p = probs.at(t, k);
            const double logp = clamped_log(p);
            out.value += -p * logp;
            out.grad.at(t, k) = p > kProbFloor ? -inv_t * (logp + 1.0) : -inv_t * logp;
        }
    }
    out.value *= inv_t;
    return out;
}

std::pair<int, ActionFrequency> associate_anchor(const ActionFrequency& p,
                                                 const std::vector<Anchor>& anchors,
                                                 const std::string& activity) {
    if (anchors.empty()) throw NoAnchorAvailable("anchor set is empty");

    int best = -1;
    double best_kl = 0.0;
    for (size_t i = 0; i < anchors.size(); ++i) {
        if (!activity.empty() && anchors[i].activity != activity) continue;
        const double kl = kl_divergence(anchors[i].frequency, p);
        if (best < 0 || kl < best_kl) {
            best = static_cast<int>(i);
            best_kl = kl;
        }
    }
    if (best < 0)
        throw NoAnchorAvailable("no anchor carries activity '" + activity + "'");
    return {best, anchors[static_cast<size_t>(best)].frequency};
}

LossResult affinity_loss(const Matrix& probs, const std::vector<Anchor>& anchors,
                         const std::string& activity) {
    const ActionFrequency mean = soft_action_frequency(probs);
    const auto [index, anchor] = associate_anchor(mean, anchors, activity);
    (void)index;

    const double inv_t = 1.0 / probs.rows;
    LossResult out;
    out.value = kl_divergence(anchor, mean);
    out.grad = Matrix(probs.rows, probs.cols);
    for (int k = 0; k < probs.cols; ++k) {
        const double a = anchor[static_cast<size_t>(k)];
        if (a == 0.0) continue;
        const double g = inv_t * a * d_neglog(mean[static_cast<size_t>(k)]);
        for (int t = 0; t < probs.rows; ++t) out.grad.at(t, k) = g;
    }
    return out;
}

LossResult total_objective(const LossParts& parts, const LossWeights& w, bool labelled,
                           double pseudo_weight, double entropy_weight) {
    if (!parts.sm) throw MissingLossTerm("smoothing term is required for every video");
    if (labelled) {
        if (!parts.cls) throw MissingLossTerm("labelled video without classification term");
    } else {
        if (!parts.aff && !parts.cont && !parts.pse)
            throw MissingLossTerm("unlabelled video without any unsupervised term");
    }

    LossResult out;
    out.grad = Matrix(parts.sm->grad.rows, parts.sm->grad.cols);
    auto add = [&out](const std::optional<LossResult>& part, double weight) {
        if (!part) return;
        require_same_shape(out.grad, part->grad, "total_objective");
        out.value += weight * part->value;
        for (size_t i = 0; i < out.grad.data.size(); ++i)
            out.grad.data[i] += weight * part->grad.data[i];
    };

    add(parts.cls, 1.0);
    add(parts.sm, w.gamma);
    add(parts.aff, w.alpha);
    add(parts.cont, w.beta);
    add(parts.pse, pseudo_weight);
    add(parts.ent, entropy_weight);
    return out;
}

}  // namespace tss
