#pragma once
// Semi-supervised training loop: labelled-only warmup, then joint epochs
// whose unlabelled-video losses depend on the training mode. Adam optimizer,
// per-epoch logging of losses, pseudo-label accuracy, and held-out metrics.

#include <cstdint>
#include <string>
#include <vector>

#include "tss/data.hpp"
#include "tss/losses.hpp"
#include "tss/metrics.hpp"
#include "tss/model.hpp"

namespace tss {

enum class TrainMode {
    Base,      // labelled data only
    Pseudo,    // + naive argmax pseudo-labels on unlabelled videos
    Affinity,  // + affinity loss with a frame-wise entropy term
    AffCont,   // + affinity and continuity losses
    Full,      // + affinity, continuity with adaptive boundary smoothing
    SupAbs,    // supervised training on boundary-smoothed ground truth
};

std::string to_string(TrainMode mode);
TrainMode mode_from_string(const std::string& name);

struct TrainConfig {
    int warmup_epochs = 30;
    int joint_epochs = 20;
    double learning_rate = 5e-4;
    LossWeights weights;
    int omega = 20;          // action sub-sampling stride
    double vicinity = 0.05;  // boundary smoothing fraction
    double abs_eps = 5.0;    // boundary smoothing sigmoid sharpness
    uint64_t seed = 1;
    TrainMode mode = TrainMode::Full;
    ModelConfig model;            // feature_dim / num_classes set from the dataset
    double pseudo_weight = 1.0;   // weight of the naive pseudo-label loss
    double entropy_weight = 0.1;  // entropy term weight, Affinity mode only
    bool smooth_in_warmup = true;
    bool all_stage_unsupervised = true;  // unsupervised losses on all stages vs final only
    bool activity_anchors = false;       // restrict anchors to the video's activity
};

struct EpochLog {
    int epoch = 0;
    double l_cls = 0.0;
    double l_sm = 0.0;
    double l_aff = 0.0;
    double l_cont = 0.0;
    double l_pse = 0.0;
    double pseudo_acc = 0.0;  // accuracy of this mode's pseudo-labels on unlabelled videos
    MetricReport held_out;

    bool operator==(const EpochLog&) const = default;
};

std::string epoch_log_csv_header();
std::string epoch_log_csv_row(const EpochLog& log);

struct AdamState {
    ModelParams m;
    ModelParams v;
    long step = 0;
};

AdamState make_adam_state(const ModelParams& params);

// Adaptive-moment update, decay rates 0.9 / 0.999, epsilon 1e-8, bias
// corrected. Throws DivergenceDetected on non-finite gradients.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

struct TrainResult {
    ModelParams params;
    std::vector<EpochLog> logs;
};

// Runs warmup + joint training per the config. Base and SupAbs are
// supervised-only and skip the joint phase. Deterministic for a fixed
// (dataset, split, config).
TrainResult train(const Dataset& dataset, const SplitSpec& split, const TrainConfig& config);

// Final-stage argmax predictions against the videos' labels.
MetricReport evaluate(const ModelParams& params, const std::vector<Video>& videos);

std::vector<int> argmax_labels(const Matrix& probs);

}  // namespace tss
