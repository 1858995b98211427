#pragma once
// Shared test utilities: seeded random inputs, a central-difference gradient
// checker, and brute-force oracles kept independent of the library's
// implementation paths.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "tss/common.hpp"
#include "tss/model.hpp"

namespace testutil {

// Row-stochastic matrix with entries bounded away from the probability
// floor, so finite differences stay inside the smooth region of the losses.
inline tss::Matrix random_prob_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    tss::Matrix m(rows, cols);
    for (int t = 0; t < rows; ++t) {
        double sum = 0.0;
        for (int k = 0; k < cols; ++k) {
            m.at(t, k) = dist(rng);
            sum += m.at(t, k);
        }
        for (int k = 0; k < cols; ++k) m.at(t, k) /= sum;
    }
    return m;
}

inline std::vector<double> random_simplex(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    std::vector<double> v(static_cast<size_t>(n));
    double sum = 0.0;
    for (double& x : v) {
        x = dist(rng);
        sum += x;
    }
    for (double& x : v) x /= sum;
    return v;
}

// Max elementwise |fd - analytic| scaled by the gradient's magnitude.
inline double gradient_rel_error(const std::function<double(const tss::Matrix&)>& f,
                                 const tss::Matrix& at, const tss::Matrix& analytic,
                                 double h = 1e-5) {
    double max_abs_grad = 1e-8;
    for (double g : analytic.data) max_abs_grad = std::max(max_abs_grad, std::abs(g));

    double worst = 0.0;
    tss::Matrix probe = at;
    for (size_t i = 0; i < probe.data.size(); ++i) {
        const double saved = probe.data[i];
        probe.data[i] = saved + h;
        const double up = f(probe);
        probe.data[i] = saved - h;
        const double down = f(probe);
        probe.data[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - analytic.data[i]) / max_abs_grad);
    }
    return worst;
}

// Central differences over every model parameter against an analytic
// parameter gradient.
inline double model_gradient_rel_error(const std::function<double(const tss::ModelParams&)>& f,
                                       tss::ModelParams params, const tss::ModelParams& analytic,
                                       double h = 1e-5) {
    std::vector<std::vector<double>*> bufs;
    tss::visit_params(params, [&bufs](std::vector<double>& b) { bufs.push_back(&b); });
    std::vector<const std::vector<double>*> grads;
    tss::visit_params(analytic,
                      [&grads](const std::vector<double>& b) { grads.push_back(&b); });

    double max_abs_grad = 1e-8;
    for (const auto* g : grads)
        for (double v : *g) max_abs_grad = std::max(max_abs_grad, std::abs(v));

    double worst = 0.0;
    for (size_t b = 0; b < bufs.size(); ++b) {
        for (size_t i = 0; i < bufs[b]->size(); ++i) {
            const double saved = (*bufs[b])[i];
            (*bufs[b])[i] = saved + h;
            const double up = f(params);
            (*bufs[b])[i] = saved - h;
            const double down = f(params);
            (*bufs[b])[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - (*grads[b])[i]) / max_abs_grad);
        }
    }
    return worst;
}

// Exhaustive minimum over all ways to cut T frames into L ordered non-empty
// runs; the independent check for the DTW recurrence.
struct BruteForceAlignment {
    double cost = 0.0;
    std::vector<int> labels;
};

inline BruteForceAlignment brute_force_align(const std::vector<int>& actions,
                                             const tss::Matrix& probs) {
    const int num_elems = static_cast<int>(actions.size());
    const int num_frames = probs.rows;

    BruteForceAlignment best;
    best.cost = std::numeric_limits<double>::infinity();

    std::vector<int> cuts(static_cast<size_t>(num_elems) + 1, 0);
    cuts[static_cast<size_t>(num_elems)] = num_frames;

    std::function<void(int, int)> recurse = [&](int elem, int start) {
        if (elem == num_elems - 1) {
            // Last element takes [start, T).
            double cost = 0.0;
            std::vector<int> labels(static_cast<size_t>(num_frames));
            for (int l = 0; l < num_elems; ++l) {
                const int seg_start = cuts[static_cast<size_t>(l)];
                const int seg_end = l == num_elems - 1 ? num_frames : cuts[static_cast<size_t>(l) + 1];
                for (int t = seg_start; t < seg_end; ++t) {
                    cost += -tss::clamped_log(probs.at(t, actions[static_cast<size_t>(l)]));
                    labels[static_cast<size_t>(t)] = actions[static_cast<size_t>(l)];
                }
            }
            if (cost < best.cost) {
                best.cost = cost;
                best.labels = labels;
            }
            return;
        }
        // Leave at least one frame for each remaining element.
        const int remaining = num_elems - elem - 1;
        for (int end = start + 1; end <= num_frames - remaining; ++end) {
            cuts[static_cast<size_t>(elem) + 1] = end;
            recurse(elem + 1, end);
        }
    };
    cuts[0] = 0;
    recurse(0, 0);
    return best;
}

}  // namespace testutil
