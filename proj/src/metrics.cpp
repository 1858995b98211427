#include "tss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tss {

namespace {

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

std::vector<int> segment_labels(std::span<const int> labels) {
    std::vector<int> out;
    for (const Segment& s : segments_from_labels(labels)) out.push_back(s.label);
    return out;
}

double interval_iou(const Segment& a, const Segment& b) {
    const int inter = std::min(a.end, b.end) - std::max(a.start, b.start);
    if (inter <= 0) return 0.0;
    const int uni = std::max(a.end, b.end) - std::min(a.start, b.start);
    return static_cast<double>(inter) / uni;
}

}  // namespace

double frame_accuracy(std::span<const int> pred, std::span<const int> gt) {
    if (pred.size() != gt.size())
        throw DimensionMismatch("frame_accuracy: " + std::to_string(pred.size()) + " vs " +
                                std::to_string(gt.size()) + " frames");
    if (pred.empty()) throw EmptySequence("frame_accuracy: no frames");
    size_t hits = 0;
    for (size_t t = 0; t < pred.size(); ++t)
        if (pred[t] == gt[t]) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

double edit_score(std::span<const int> pred, std::span<const int> gt) {
    const std::vector<int> a = segment_labels(pred);
    const std::vector<int> b = segment_labels(gt);
    const int dist = levenshtein(a, b);
    const double norm = static_cast<double>(std::max(a.size(), b.size()));
    return 100.0 * (1.0 - dist / norm);
}

double f1_at_overlap(std::span<const int> pred, std::span<const int> gt, double k) {
    if (k <= 0.0 || k > 1.0)
        throw InvalidVicinity("overlap threshold must lie in (0, 1], got " + std::to_string(k));
    const SegmentList pred_segs = segments_from_labels(pred);
    const SegmentList gt_segs = segments_from_labels(gt);

    std::vector<bool> matched(gt_segs.size(), false);
    int tp = 0, fp = 0;
    for (const Segment& p : pred_segs) {
        int best = -1;
        double best_iou = 0.0;
        for (size_t j = 0; j < gt_segs.size(); ++j) {
            if (matched[j] || gt_segs[j].label != p.label) continue;
            const double iou = interval_iou(p, gt_segs[j]);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0 && best_iou >= k) {
            matched[static_cast<size_t>(best)] = true;
            ++tp;
        } else {
            ++fp;
        }
    }
    const int fn = static_cast<int>(gt_segs.size()) - tp;
    if (2 * tp + fp + fn == 0) return 0.0;
    return 100.0 * 2.0 * tp / (2.0 * tp + fp + fn);
}

double total_variance(const std::vector<ActionFrequency>& freqs, int num_classes) {
    if (freqs.size() < 2)
        throw InsufficientData("total_variance needs at least 2 frequency vectors, got " +
                               std::to_string(freqs.size()));
    for (const ActionFrequency& f : freqs)
        if (static_cast<int>(f.size()) != num_classes)
            throw DimensionMismatch("total_variance: frequency vector of size " +
                                    std::to_string(f.size()) + ", expected " +
                                    std::to_string(num_classes));

    const double n = static_cast<double>(freqs.size());
    double trace = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        double mean = 0.0, sq = 0.0;
        for (const ActionFrequency& f : freqs) {
            mean += f[static_cast<size_t>(k)];
            sq += f[static_cast<size_t>(k)] * f[static_cast<size_t>(k)];
        }
        mean /= n;
        trace += sq / n - mean * mean;
    }
    return trace / num_classes;
}

double pseudo_label_accuracy(std::span<const int> pseudo, std::span<const int> gt) {
    return frame_accuracy(pseudo, gt);
}

MetricReport aggregate_metrics(const std::vector<std::vector<int>>& preds,
                               const std::vector<std::vector<int>>& gts,
                               const std::vector<double>& overlaps) {
    if (preds.size() != gts.size())
        throw DimensionMismatch("aggregate_metrics: " + std::to_string(preds.size()) + " vs " +
                                std::to_string(gts.size()) + " videos");
    if (preds.empty()) throw InsufficientData("aggregate_metrics: no videos");

    MetricReport report;
    size_t frames = 0, hits = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].size() != gts[i].size())
            throw DimensionMismatch("aggregate_metrics: video " + std::to_string(i) +
                                    " length mismatch");
        for (size_t t = 0; t < preds[i].size(); ++t)
            if (preds[i][t] == gts[i][t]) ++hits;
        frames += preds[i].size();
        report.edit += edit_score(preds[i], gts[i]);
        for (double k : overlaps)
            report.f1[static_cast<int>(std::lround(k * 100))] += f1_at_overlap(preds[i], gts[i], k);
    }
    report.acc = 100.0 * static_cast<double>(hits) / static_cast<double>(frames);
    report.edit /= static_cast<double>(preds.size());
    for (auto& [k, v] : report.f1) v /= static_cast<double>(preds.size());
    return report;
}

std::string metrics_csv_header() { return "split,seed,method,acc,edit,f1_10,f1_25,f1_50"; }

std::string metrics_csv_row(const std::string& split, const std::string& seed,
                            const std::string& method, const MetricReport& report) {
    auto f1_at = [&report](int k) {
        auto it = report.f1.find(k);
        return it == report.f1.end() ? 0.0 : it->second;
    };
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f,%.4f", report.acc, report.edit,
                  f1_at(10), f1_at(25), f1_at(50));
    return split + "," + seed + "," + method + "," + buf;
}

}  // namespace tss
