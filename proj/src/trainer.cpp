#include "tss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "tss/continuity.hpp"
#include "tss/smoothing.hpp"

namespace tss {

namespace {

constexpr uint64_t kShuffleSalt = 0x6a09e667f3bcc908ull;

std::vector<std::vector<double>*> param_buffers(ModelParams& params) {
    std::vector<std::vector<double>*> out;
    visit_params(params, [&out](std::vector<double>& buf) { out.push_back(&buf); });
    return out;
}

LossResult zero_loss(int rows, int cols) { return {0.0, Matrix(rows, cols)}; }

struct EpochAccumulator {
    double cls = 0, sm = 0, aff = 0, cont = 0, pse = 0;
    int n_cls = 0, n_sm = 0, n_aff = 0, n_cont = 0, n_pse = 0;

    void add(double& sum, int& count, const std::optional<LossResult>& part) {
        if (!part) return;
        sum += part->value;
        ++count;
    }
    static double mean(double sum, int count) { return count > 0 ? sum / count : 0.0; }
};

}  // namespace

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::Base: return "base";
        case TrainMode::Pseudo: return "pseudo";
        case TrainMode::Affinity: return "aff";
        case TrainMode::AffCont: return "aff_cont";
        case TrainMode::Full: return "full";
        case TrainMode::SupAbs: return "sup_abs";
    }
    return "unknown";
}

TrainMode mode_from_string(const std::string& name) {
    if (name == "base") return TrainMode::Base;
    if (name == "pseudo") return TrainMode::Pseudo;
    if (name == "aff") return TrainMode::Affinity;
    if (name == "aff_cont") return TrainMode::AffCont;
    if (name == "full") return TrainMode::Full;
    if (name == "sup_abs") return TrainMode::SupAbs;
    throw SchemaError("unknown training mode '" + name + "'");
}

std::string epoch_log_csv_header() {
    return "epoch,l_cls,l_sm,l_aff,l_cont,l_pse,pseudo_acc,acc,edit,f1_10,f1_25,f1_50";
}

std::string epoch_log_csv_row(const EpochLog& log) {
    auto f1_at = [&log](int k) {
        auto it = log.held_out.f1.find(k);
        return it == log.held_out.f1.end() ? 0.0 : it->second;
    };
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f", log.epoch,
                  log.l_cls, log.l_sm, log.l_aff, log.l_cont, log.l_pse, log.pseudo_acc,
                  log.held_out.acc, log.held_out.edit, f1_at(10), f1_at(25), f1_at(50));
    return buf;
}

AdamState make_adam_state(const ModelParams& params) {
    return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(state.step));

    auto p = param_buffers(params);
    auto g = param_buffers(const_cast<ModelParams&>(grads));
    auto m = param_buffers(state.m);
    auto v = param_buffers(state.v);
    if (p.size() != g.size() || p.size() != m.size())
        throw DimensionMismatch("adam_step: parameter and gradient structures differ");

    for (size_t b = 0; b < p.size(); ++b) {
        std::vector<double>& pb = *p[b];
        const std::vector<double>& gb = *g[b];
        std::vector<double>& mb = *m[b];
        std::vector<double>& vb = *v[b];
        if (pb.size() != gb.size())
            throw DimensionMismatch("adam_step: buffer size mismatch");
        for (size_t i = 0; i < pb.size(); ++i) {
            const double grad = gb[i];
            if (!std::isfinite(grad))
                throw DivergenceDetected("non-finite gradient at optimizer step " +
                                         std::to_string(state.step));
            mb[i] = 0.9 * mb[i] + 0.1 * grad;
            vb[i] = 0.999 * vb[i] + 0.001 * grad * grad;
            const double m_hat = mb[i] / bc1;
            const double v_hat = vb[i] / bc2;
            pb[i] -= lr * m_hat / (std::sqrt(v_hat) + 1e-8);
        }
    }
}

std::vector<int> argmax_labels(const Matrix& probs) {
    std::vector<int> labels(static_cast<size_t>(probs.rows));
    for (int t = 0; t < probs.rows; ++t) {
        const double* row = probs.row(t);
        int best = 0;
        for (int k = 1; k < probs.cols; ++k)
            if (row[k] > row[best]) best = k;
        labels[static_cast<size_t>(t)] = best;
    }
    return labels;
}

MetricReport evaluate(const ModelParams& params, const std::vector<Video>& videos) {
    if (videos.empty()) throw InsufficientData("evaluate: no videos");
    std::vector<std::vector<int>> preds, gts;
    for (const Video& video : videos) {
        const std::vector<Matrix> outs = forward(params, video.features);
        preds.push_back(argmax_labels(outs.back()));
        gts.push_back(video.labels);
    }
    return aggregate_metrics(preds, gts);
}

TrainResult train(const Dataset& dataset, const SplitSpec& split, const TrainConfig& config) {
    const int n_train = static_cast<int>(dataset.train.size());
    if (split.labelled.empty()) throw InsufficientData("split has no labelled videos");
    for (int idx : split.labelled)
        if (idx < 0 || idx >= n_train)
            throw DimensionMismatch("split index " + std::to_string(idx) + " out of range");
    for (int idx : split.unlabelled)
        if (idx < 0 || idx >= n_train)
            throw DimensionMismatch("split index " + std::to_string(idx) + " out of range");
    if (static_cast<int>(split.labelled.size() + split.unlabelled.size()) != n_train)
        throw DimensionMismatch("split does not partition the train set");

    const int num_classes = dataset.num_classes;
    ModelConfig model_cfg = config.model;
    model_cfg.feature_dim = dataset.feature_dim;
    model_cfg.num_classes = num_classes;

    const bool supervised_only =
        config.mode == TrainMode::Base || config.mode == TrainMode::SupAbs;
    const int joint_epochs = supervised_only ? 0 : config.joint_epochs;
    const int total_epochs = config.warmup_epochs + joint_epochs;

    std::vector<bool> is_labelled(static_cast<size_t>(n_train), false);
    for (int idx : split.labelled) is_labelled[static_cast<size_t>(idx)] = true;

    // Anchors are the labelled videos' ground-truth frequencies; the labels
    // never change, so they are built once.
    std::vector<Anchor> anchors;
    for (int idx : split.labelled) {
        const Video& video = dataset.train[static_cast<size_t>(idx)];
        anchors.push_back(
            {action_frequency_from_labels(video.labels, num_classes), video.activity});
    }

    // Precomputed soft targets for the supervised smoothing mode.
    std::vector<Matrix> smoothed_gt;
    if (config.mode == TrainMode::SupAbs) {
        smoothed_gt.resize(static_cast<size_t>(n_train));
        for (int idx : split.labelled)
            smoothed_gt[static_cast<size_t>(idx)] = smooth_labels(
                dataset.train[static_cast<size_t>(idx)].labels, num_classes, config.vicinity,
                config.abs_eps);
    }

    TrainResult result;
    result.params = init_params(model_cfg, config.seed);
    AdamState state = make_adam_state(result.params);
    std::mt19937_64 shuffle_rng(config.seed ^ kShuffleSalt);

    const std::vector<Video>* held_out = nullptr;
    std::vector<Video> unlabelled_videos;
    for (int idx : split.unlabelled)
        unlabelled_videos.push_back(dataset.train[static_cast<size_t>(idx)]);
    std::vector<Video> labelled_videos;
    for (int idx : split.labelled)
        labelled_videos.push_back(dataset.train[static_cast<size_t>(idx)]);
    if (!dataset.test.empty())
        held_out = &dataset.test;
    else if (!unlabelled_videos.empty())
        held_out = &unlabelled_videos;
    else
        held_out = &labelled_videos;

    for (int epoch = 0; epoch < total_epochs; ++epoch) {
        const bool joint = epoch >= config.warmup_epochs;

        std::vector<int> order;
        if (joint) {
            order.resize(static_cast<size_t>(n_train));
            std::iota(order.begin(), order.end(), 0);
        } else {
            order = split.labelled;
        }
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        EpochAccumulator acc;
        for (int step = 0; step < static_cast<int>(order.size()); ++step) {
            const int idx = order[static_cast<size_t>(step)];
            const Video& video = dataset.train[static_cast<size_t>(idx)];
            const bool labelled = is_labelled[static_cast<size_t>(idx)];
            const int num_frames = video.features.rows;

            ForwardCache cache;
            const std::vector<Matrix> outs = forward(result.params, video.features, cache);

            double video_loss = 0.0;
            std::vector<Matrix> stage_grads;
            for (int s = 0; s < model_cfg.stages; ++s) {
                const Matrix& probs = outs[static_cast<size_t>(s)];
                const bool attach_unsup =
                    config.all_stage_unsupervised || s == model_cfg.stages - 1;

                LossParts parts;
                if (num_frames >= 2 && (joint || config.smooth_in_warmup))
                    parts.sm = smoothing_loss_from_probs(probs, config.weights.tau);
                else
                    parts.sm = zero_loss(num_frames, num_classes);

                if (labelled) {
                    if (config.mode == TrainMode::SupAbs)
                        parts.cls = classification_loss(probs, smoothed_gt[static_cast<size_t>(idx)]);
                    else
                        parts.cls = classification_loss(probs, video.labels);
                } else if (attach_unsup) {
                    const std::string& activity =
                        config.activity_anchors ? video.activity : std::string();
                    switch (config.mode) {
                        case TrainMode::Pseudo:
                            parts.pse = pseudo_label_loss(probs);
                            break;
                        case TrainMode::Affinity:
                            parts.aff = affinity_loss(probs, anchors, activity);
                            parts.ent = entropy_loss(probs);
                            break;
                        case TrainMode::AffCont: {
                            parts.aff = affinity_loss(probs, anchors, activity);
                            ContinuityResult cont = continuity_loss(probs, config.omega);
                            parts.cont = classification_loss(probs, cont.labels);
                            break;
                        }
                        case TrainMode::Full: {
                            parts.aff = affinity_loss(probs, anchors, activity);
                            ContinuityResult cont = continuity_loss(probs, config.omega);
                            const Matrix soft = smooth_labels(cont.labels, num_classes,
                                                              config.vicinity, config.abs_eps);
                            parts.cont = classification_loss(probs, soft);
                            break;
                        }
                        default:
                            break;  // Base / SupAbs never reach unlabelled videos
                    }
                }

                acc.add(acc.cls, acc.n_cls, parts.cls);
                acc.add(acc.sm, acc.n_sm, parts.sm);
                acc.add(acc.aff, acc.n_aff, parts.aff);
                acc.add(acc.cont, acc.n_cont, parts.cont);
                acc.add(acc.pse, acc.n_pse, parts.pse);

                LossResult combined;
                if (!labelled && !parts.aff && !parts.cont && !parts.pse) {
                    // Stage carries only the smoothing regularizer.
                    combined = *parts.sm;
                    combined.value *= config.weights.gamma;
                    for (double& gr : combined.grad.data) gr *= config.weights.gamma;
                } else {
                    combined = total_objective(parts, config.weights, labelled,
                                               config.pseudo_weight, config.entropy_weight);
                }
                video_loss += combined.value;
                stage_grads.push_back(std::move(combined.grad));
            }

            if (!std::isfinite(video_loss))
                throw DivergenceDetected("non-finite loss at epoch " + std::to_string(epoch) +
                                         " step " + std::to_string(step) + " video " + video.id);

            const ModelParams grads = backward(result.params, cache, stage_grads);
            adam_step(result.params, grads, state, config.learning_rate);
        }

        EpochLog log;
        log.epoch = epoch;
        log.l_cls = EpochAccumulator::mean(acc.cls, acc.n_cls);
        log.l_sm = EpochAccumulator::mean(acc.sm, acc.n_sm);
        log.l_aff = EpochAccumulator::mean(acc.aff, acc.n_aff);
        log.l_cont = EpochAccumulator::mean(acc.cont, acc.n_cont);
        log.l_pse = EpochAccumulator::mean(acc.pse, acc.n_pse);

        if (!unlabelled_videos.empty()) {
            // One mechanism for every mode: the aligned labels the continuity
            // path would assign, so the curves are comparable across modes.
            size_t hits = 0, frames = 0;
            for (const Video& video : unlabelled_videos) {
                const std::vector<Matrix> outs = forward(result.params, video.features);
                const std::vector<int> pseudo =
                    continuity_loss(outs.back(), config.omega).labels;
                for (size_t t = 0; t < pseudo.size(); ++t)
                    if (pseudo[t] == video.labels[t]) ++hits;
                frames += pseudo.size();
            }
            log.pseudo_acc = 100.0 * static_cast<double>(hits) / static_cast<double>(frames);
        }

        log.held_out = evaluate(result.params, *held_out);
        result.logs.push_back(std::move(log));
    }
    return result;
}

}  // namespace tss
