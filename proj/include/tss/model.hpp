#pragma once
// Multi-stage dilated temporal convolutional network over per-frame features
// with exact reverse-mode gradients. Stage 1 consumes features, later stages
// consume the previous stage's probabilities; every stage emits row-stochastic
// T x K probabilities through a softmax.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tss/common.hpp"

namespace tss {

struct ModelConfig {
    int stages = 2;
    int layers_per_stage = 6;
    int channels = 32;
    int feature_dim = 0;
    int num_classes = 0;

    bool operator==(const ModelConfig&) const = default;
};

// 1x1 convolution: w is out x in, one bias per output channel.
struct Conv1x1 {
    Matrix w;
    std::vector<double> b;
};

// Width-3 dilated convolution (zero padding) followed by ReLU, a 1x1
// convolution, and a residual connection. taps[j] reads frame t + (j-1)*d.
struct DilatedLayer {
    std::array<Matrix, 3> taps;
    std::vector<double> bias;
    Conv1x1 pointwise;
};

struct StageParams {
    Conv1x1 in_proj;
    std::vector<DilatedLayer> layers;  // layer l uses dilation 2^l
    Conv1x1 out_proj;
};

struct ModelParams {
    ModelConfig config;
    std::vector<StageParams> stages;
};

struct LayerCache {
    Matrix input;     // T x C, layer input
    Matrix pre_act;   // T x C, dilated convolution output
    Matrix post_act;  // T x C, after ReLU
};

struct StageCache {
    Matrix input;  // T x D for stage 0, T x K afterwards
    std::vector<LayerCache> layers;
    Matrix hidden;  // T x C after the last layer
    Matrix probs;   // T x K
};

struct ForwardCache {
    bool valid = false;
    std::vector<StageCache> stages;
};

// Weights uniform in (-sqrt(3/fan_in), sqrt(3/fan_in)), biases zero.
// Deterministic for a given seed.
ModelParams init_params(const ModelConfig& config, uint64_t seed);

// Same structure as params with every parameter zeroed (gradient/moment buffers).
ModelParams zeros_like(const ModelParams& params);

// Applies fn to every parameter buffer in declaration order (the order used
// by the checkpoint format and the optimizer).
void visit_params(ModelParams& params, const std::function<void(std::vector<double>&)>& fn);
void visit_params(const ModelParams& params,
                  const std::function<void(const std::vector<double>&)>& fn);

// Per-stage probabilities; cache feeds backward.
std::vector<Matrix> forward(const ModelParams& params, const Matrix& features,
                            ForwardCache& cache);
std::vector<Matrix> forward(const ModelParams& params, const Matrix& features);

// Chains per-stage dL/dprobs back to parameter gradients. Stage s > 0
// receives its input gradient from stage s+1's chain in addition to its own
// upstream term.
ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     const std::vector<Matrix>& upstream);

// Checkpoint: magic "TSSM", version u32, config as five u32 fields, then all
// parameters as little-endian f64 in declaration order.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace tss
