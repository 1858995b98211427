#pragma once
// Frame-level and video-level loss functions with analytic gradients:
// classification (hard and soft targets), truncated-MSE smoothing, naive
// pseudo-labelling, frame-wise entropy, anchor-based affinity, and the
// weighted total objective.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tss/common.hpp"
#include "tss/seqcore.hpp"

namespace tss {

// Scalar loss plus its gradient with respect to the operation's input matrix.
struct LossResult {
    double value = 0.0;
    Matrix grad;
};

struct LossWeights {
    double alpha = 0.1;   // affinity
    double beta = 0.01;   // continuity
    double gamma = 0.15;  // smoothing
    double tau = 4.0;     // smoothing clamp threshold
};

// Mean negative log-likelihood of hard targets. grad[t][k] = -1[k==y_t]/(T*p).
LossResult classification_loss(const Matrix& probs, std::span<const int> targets);

// Cross-entropy against row-stochastic soft targets; reduces bit-exactly to
// the hard-target form when every target row is one-hot.
LossResult classification_loss(const Matrix& probs, const Matrix& soft_targets);

// Truncated MSE over temporal log-probability deltas. Input is a T x K matrix
// of log-probabilities; the gradient is with respect to that input and is
// zero wherever the clamp at tau is active.
LossResult smoothing_loss(const Matrix& log_probs, double tau);

// Same loss evaluated on probabilities: takes clamped logs internally and
// chains the gradient back to probability space.
LossResult smoothing_loss_from_probs(const Matrix& probs, double tau);

// Mean -log p of each row's argmax class (ties to the lowest index). The
// argmax selection is constant under differentiation.
LossResult pseudo_label_loss(const Matrix& probs);

// Mean per-frame Shannon entropy.
LossResult entropy_loss(const Matrix& probs);

// A labelled video's action frequency, optionally tagged with its activity.
struct Anchor {
    ActionFrequency frequency;
    std::string activity;
};

// Index and frequency of the KL-nearest anchor to p, optionally restricted
// to anchors carrying the given activity tag. Ties go to the lowest index.
std::pair<int, ActionFrequency> associate_anchor(const ActionFrequency& p,
                                                 const std::vector<Anchor>& anchors,
                                                 const std::string& activity = "");

// KL from the associated anchor to the video-level soft frequency of probs.
// The anchor choice is held constant under differentiation.
LossResult affinity_loss(const Matrix& probs, const std::vector<Anchor>& anchors,
                         const std::string& activity = "");

// Per-video loss terms feeding the total objective. Terms a mode does not
// use are simply left unset.
struct LossParts {
    std::optional<LossResult> cls;
    std::optional<LossResult> sm;
    std::optional<LossResult> aff;
    std::optional<LossResult> cont;
    std::optional<LossResult> pse;
    std::optional<LossResult> ent;
};

// Weighted sum of the supplied terms. Labelled videos require cls + sm;
// unlabelled videos require sm plus at least one unsupervised term
// (aff, cont, or pse). Weights: cls*1, sm*gamma, aff*alpha, cont*beta,
// pse*pseudo_weight, ent*entropy_weight.
LossResult total_objective(const LossParts& parts, const LossWeights& w, bool labelled,
                           double pseudo_weight = 1.0, double entropy_weight = 0.0);

}  // namespace tss
