#include "tss/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace tss {

namespace {

Conv1x1 make_conv1x1(int out_ch, int in_ch) {
    return {Matrix(out_ch, in_ch), std::vector<double>(static_cast<size_t>(out_ch), 0.0)};
}

void conv1x1_forward(const Conv1x1& conv, const Matrix& x, Matrix& y) {
    const int out_ch = conv.w.rows, in_ch = conv.w.cols;
    for (int t = 0; t < x.rows; ++t) {
        const double* xt = x.row(t);
        double* yt = y.row(t);
        for (int o = 0; o < out_ch; ++o) {
            const double* wo = conv.w.row(o);
            double acc = conv.b[static_cast<size_t>(o)];
            for (int i = 0; i < in_ch; ++i) acc += wo[i] * xt[i];
            yt[o] = acc;
        }
    }
}

// Accumulates dW, db and the input gradient for a 1x1 convolution.
void conv1x1_backward(const Conv1x1& conv, const Matrix& x, const Matrix& dy, Conv1x1& dconv,
                      Matrix& dx) {
    const int out_ch = conv.w.rows, in_ch = conv.w.cols;
    for (int t = 0; t < x.rows; ++t) {
        const double* xt = x.row(t);
        const double* dyt = dy.row(t);
        double* dxt = dx.row(t);
        for (int o = 0; o < out_ch; ++o) {
            const double g = dyt[o];
            if (g == 0.0) continue;
            dconv.b[static_cast<size_t>(o)] += g;
            double* dwo = dconv.w.row(o);
            const double* wo = conv.w.row(o);
            for (int i = 0; i < in_ch; ++i) {
                dwo[i] += g * xt[i];
                dxt[i] += g * wo[i];
            }
        }
    }
}

void dilated_conv_forward(const DilatedLayer& layer, int dilation, const Matrix& x, Matrix& y) {
    const int ch = x.cols;
    for (int t = 0; t < x.rows; ++t) {
        double* yt = y.row(t);
        for (int o = 0; o < ch; ++o) yt[o] = layer.bias[static_cast<size_t>(o)];
        for (int j = 0; j < 3; ++j) {
            const int src = t + (j - 1) * dilation;
            if (src < 0 || src >= x.rows) continue;  // zero padding
            const double* xs = x.row(src);
            const Matrix& w = layer.taps[static_cast<size_t>(j)];
            for (int o = 0; o < ch; ++o) {
                const double* wo = w.row(o);
                double acc = 0.0;
                for (int i = 0; i < ch; ++i) acc += wo[i] * xs[i];
                yt[o] += acc;
            }
        }
    }
}

void dilated_conv_backward(const DilatedLayer& layer, int dilation, const Matrix& x,
                           const Matrix& dy, DilatedLayer& dlayer, Matrix& dx) {
    const int ch = x.cols;
    for (int t = 0; t < x.rows; ++t) {
        const double* dyt = dy.row(t);
        for (int o = 0; o < ch; ++o) dlayer.bias[static_cast<size_t>(o)] += dyt[o];
        for (int j = 0; j < 3; ++j) {
            const int src = t + (j - 1) * dilation;
            if (src < 0 || src >= x.rows) continue;
            const double* xs = x.row(src);
            double* dxs = dx.row(src);
            const Matrix& w = layer.taps[static_cast<size_t>(j)];
            Matrix& dw = dlayer.taps[static_cast<size_t>(j)];
            for (int o = 0; o < ch; ++o) {
                const double g = dyt[o];
                if (g == 0.0) continue;
                const double* wo = w.row(o);
                double* dwo = dw.row(o);
                for (int i = 0; i < ch; ++i) {
                    dwo[i] += g * xs[i];
                    dxs[i] += g * wo[i];
                }
            }
        }
    }
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
    for (int t = 0; t < logits.rows; ++t) {
        const double* zt = logits.row(t);
        double* pt = probs.row(t);
        double max = zt[0];
        for (int k = 1; k < logits.cols; ++k) max = std::max(max, zt[k]);
        double sum = 0.0;
        for (int k = 0; k < logits.cols; ++k) {
            pt[k] = std::exp(zt[k] - max);
            sum += pt[k];
        }
        const double inv = 1.0 / sum;
        for (int k = 0; k < logits.cols; ++k) pt[k] *= inv;
    }
}

// dz_k = p_k * (dp_k - sum_j dp_j p_j)
void softmax_backward(const Matrix& probs, const Matrix& dprobs, Matrix& dlogits) {
    for (int t = 0; t < probs.rows; ++t) {
        const double* pt = probs.row(t);
        const double* dpt = dprobs.row(t);
        double* dzt = dlogits.row(t);
        double dot = 0.0;
        for (int k = 0; k < probs.cols; ++k) dot += dpt[k] * pt[k];
        for (int k = 0; k < probs.cols; ++k) dzt[k] = pt[k] * (dpt[k] - dot);
    }
}

void validate_config(const ModelConfig& c) {
    if (c.stages < 1 || c.layers_per_stage < 1 || c.channels < 1 || c.feature_dim < 1 ||
        c.num_classes < 1)
        throw DimensionMismatch("model config requires all counts >= 1");
}

int stage_input_dim(const ModelConfig& c, int stage) {
    return stage == 0 ? c.feature_dim : c.num_classes;
}

void write_u32_le(std::ostream& out, uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_f64_le(std::ostream& out, double d) {
    const uint64_t v = std::bit_cast<uint64_t>(d);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

uint32_t read_u32_le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw IoError("checkpoint truncated");
    return static_cast<uint32_t>(bytes[0]) | static_cast<uint32_t>(bytes[1]) << 8 |
           static_cast<uint32_t>(bytes[2]) << 16 | static_cast<uint32_t>(bytes[3]) << 24;
}

double read_f64_le(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw IoError("checkpoint truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

constexpr uint32_t kCheckpointVersion = 1;

}  // namespace

ModelParams zeros_like(const ModelParams& params) {
    const ModelConfig& c = params.config;
    ModelParams out;
    out.config = c;
    out.stages.resize(static_cast<size_t>(c.stages));
    for (int s = 0; s < c.stages; ++s) {
        StageParams& st = out.stages[static_cast<size_t>(s)];
        st.in_proj = make_conv1x1(c.channels, stage_input_dim(c, s));
        st.layers.resize(static_cast<size_t>(c.layers_per_stage));
        for (DilatedLayer& layer : st.layers) {
            for (Matrix& tap : layer.taps) tap = Matrix(c.channels, c.channels);
            layer.bias.assign(static_cast<size_t>(c.channels), 0.0);
            layer.pointwise = make_conv1x1(c.channels, c.channels);
        }
        st.out_proj = make_conv1x1(c.num_classes, c.channels);
    }
    return out;
}

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
    validate_config(config);
    ModelParams params;
    params.config = config;
    params = zeros_like(params);

    std::mt19937_64 rng(seed);
    auto fill_uniform = [&rng](Matrix& w, int fan_in) {
        const double bound = std::sqrt(3.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : w.data) v = dist(rng);
    };
    for (StageParams& st : params.stages) {
        fill_uniform(st.in_proj.w, st.in_proj.w.cols);
        for (DilatedLayer& layer : st.layers) {
            for (Matrix& tap : layer.taps) fill_uniform(tap, 3 * config.channels);
            fill_uniform(layer.pointwise.w, config.channels);
        }
        fill_uniform(st.out_proj.w, config.channels);
    }
    return params;
}

void visit_params(ModelParams& params, const std::function<void(std::vector<double>&)>& fn) {
    for (StageParams& st : params.stages) {
        fn(st.in_proj.w.data);
        fn(st.in_proj.b);
        for (DilatedLayer& layer : st.layers) {
            for (Matrix& tap : layer.taps) fn(tap.data);
            fn(layer.bias);
            fn(layer.pointwise.w.data);
            fn(layer.pointwise.b);
        }
        fn(st.out_proj.w.data);
        fn(st.out_proj.b);
    }
}

void visit_params(const ModelParams& params,
                  const std::function<void(const std::vector<double>&)>& fn) {
    visit_params(const_cast<ModelParams&>(params),
                 [&fn](std::vector<double>& buf) { fn(buf); });
}

std::vector<Matrix> forward(const ModelParams& params, const Matrix& features,
                            ForwardCache& cache) {
    const ModelConfig& c = params.config;
    validate_config(c);
    if (features.cols != c.feature_dim)
        throw DimensionMismatch("forward: features have " + std::to_string(features.cols) +
                                " dims, model expects " + std::to_string(c.feature_dim));
    if (features.rows < 1) throw EmptySequence("forward: no frames");

    const int num_frames = features.rows;
    cache.stages.assign(static_cast<size_t>(c.stages), StageCache{});
    std::vector<Matrix> outputs;
    outputs.reserve(static_cast<size_t>(c.stages));

    for (int s = 0; s < c.stages; ++s) {
        StageCache& sc = cache.stages[static_cast<size_t>(s)];
        const StageParams& st = params.stages[static_cast<size_t>(s)];
        sc.input = s == 0 ? features : outputs.back();

        Matrix h(num_frames, c.channels);
        conv1x1_forward(st.in_proj, sc.input, h);

        sc.layers.resize(static_cast<size_t>(c.layers_per_stage));
        for (int l = 0; l < c.layers_per_stage; ++l) {
            LayerCache& lc = sc.layers[static_cast<size_t>(l)];
            const DilatedLayer& layer = st.layers[static_cast<size_t>(l)];
            const int dilation = 1 << l;

            lc.input = h;
            lc.pre_act = Matrix(num_frames, c.channels);
            dilated_conv_forward(layer, dilation, lc.input, lc.pre_act);

            lc.post_act = lc.pre_act;
            for (double& v : lc.post_act.data) v = v > 0.0 ? v : 0.0;

            Matrix branch(num_frames, c.channels);
            conv1x1_forward(layer.pointwise, lc.post_act, branch);
            for (size_t i = 0; i < h.data.size(); ++i) h.data[i] = lc.input.data[i] + branch.data[i];
        }
        sc.hidden = h;

        Matrix logits(num_frames, c.num_classes);
        conv1x1_forward(st.out_proj, sc.hidden, logits);
        sc.probs = Matrix(num_frames, c.num_classes);
        softmax_rows(logits, sc.probs);
        outputs.push_back(sc.probs);
    }
    cache.valid = true;
    return outputs;
}

std::vector<Matrix> forward(const ModelParams& params, const Matrix& features) {
    ForwardCache cache;
    return forward(params, features, cache);
}

ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                     const std::vector<Matrix>& upstream) {
    const ModelConfig& c = params.config;
    if (!cache.valid || static_cast<int>(cache.stages.size()) != c.stages)
        throw StaleCache("backward needs the cache of a matching forward call");
    if (static_cast<int>(upstream.size()) != c.stages)
        throw DimensionMismatch("backward: " + std::to_string(upstream.size()) +
                                " upstream gradients for " + std::to_string(c.stages) + " stages");
    for (int s = 0; s < c.stages; ++s)
        require_same_shape(upstream[static_cast<size_t>(s)], cache.stages[static_cast<size_t>(s)].probs,
                           "backward upstream");

    ModelParams grads = zeros_like(params);
    const int num_frames = cache.stages[0].input.rows;

    Matrix chained;  // gradient into stage s's probs from stage s+1's input
    for (int s = c.stages - 1; s >= 0; --s) {
        const StageCache& sc = cache.stages[static_cast<size_t>(s)];
        const StageParams& st = params.stages[static_cast<size_t>(s)];
        StageParams& gst = grads.stages[static_cast<size_t>(s)];

        Matrix dprobs = upstream[static_cast<size_t>(s)];
        if (chained.rows > 0)
            for (size_t i = 0; i < dprobs.data.size(); ++i) dprobs.data[i] += chained.data[i];

        Matrix dlogits(num_frames, c.num_classes);
        softmax_backward(sc.probs, dprobs, dlogits);

        Matrix dh(num_frames, c.channels);
        conv1x1_backward(st.out_proj, sc.hidden, dlogits, gst.out_proj, dh);

        for (int l = c.layers_per_stage - 1; l >= 0; --l) {
            const LayerCache& lc = sc.layers[static_cast<size_t>(l)];
            const DilatedLayer& layer = st.layers[static_cast<size_t>(l)];
            DilatedLayer& glayer = gst.layers[static_cast<size_t>(l)];
            const int dilation = 1 << l;

            // Residual: dh feeds both the branch and the skip path.
            Matrix dpost(num_frames, c.channels);
            conv1x1_backward(layer.pointwise, lc.post_act, dh, glayer.pointwise, dpost);

            Matrix dpre = dpost;
            for (size_t i = 0; i < dpre.data.size(); ++i)
                if (lc.pre_act.data[i] <= 0.0) dpre.data[i] = 0.0;

            Matrix dinput(num_frames, c.channels);
            dilated_conv_backward(layer, dilation, lc.input, dpre, glayer, dinput);
            for (size_t i = 0; i < dh.data.size(); ++i) dh.data[i] += dinput.data[i];
        }

        Matrix dstage_input(num_frames, sc.input.cols);
        conv1x1_backward(st.in_proj, sc.input, dh, gst.in_proj, dstage_input);
        chained = std::move(dstage_input);
    }
    return grads;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write("TSSM", 4);
    write_u32_le(out, kCheckpointVersion);
    const ModelConfig& c = params.config;
    for (int v : {c.stages, c.layers_per_stage, c.channels, c.feature_dim, c.num_classes})
        write_u32_le(out, static_cast<uint32_t>(v));
    visit_params(params, [&out](const std::vector<double>& buf) {
        for (double d : buf) write_f64_le(out, d);
    });
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TSSM", 4) != 0)
        throw IoError("bad checkpoint magic in " + path);
    const uint32_t version = read_u32_le(in);
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));

    ModelConfig c;
    c.stages = static_cast<int>(read_u32_le(in));
    c.layers_per_stage = static_cast<int>(read_u32_le(in));
    c.channels = static_cast<int>(read_u32_le(in));
    c.feature_dim = static_cast<int>(read_u32_le(in));
    c.num_classes = static_cast<int>(read_u32_le(in));
    validate_config(c);

    ModelParams params;
    params.config = c;
    params = zeros_like(params);
    visit_params(params, [&in](std::vector<double>& buf) {
        for (double& d : buf) d = read_f64_le(in);
    });
    char extra;
    if (in.read(&extra, 1))
        throw IoError("trailing bytes in checkpoint: " + path);
    return params;
}

}  // namespace tss
