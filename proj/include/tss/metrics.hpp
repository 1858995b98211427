#pragma once
// Segmentation evaluation: frame accuracy, segmental edit score, segmental
// F1 at IoU thresholds, action-frequency total variance, and corpus-level
// aggregation.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tss/seqcore.hpp"

namespace tss {

// All values are percentages in [0, 100]. F1 is keyed by the overlap
// threshold in percent (10, 25, 50).
struct MetricReport {
    double acc = 0.0;
    double edit = 0.0;
    std::map<int, double> f1;

    bool operator==(const MetricReport&) const = default;
};

inline const std::vector<double> kDefaultOverlaps = {0.10, 0.25, 0.50};

double frame_accuracy(std::span<const int> pred, std::span<const int> gt);

// 100 * (1 - Levenshtein(pred segments, gt segments) / max segment count).
double edit_score(std::span<const int> pred, std::span<const int> gt);

// Greedy one-to-one matching in prediction order: a predicted segment is a
// true positive when its best same-class IoU against a still-unmatched
// ground-truth segment reaches k.
double f1_at_overlap(std::span<const int> pred, std::span<const int> gt, double k);

// Trace of the population covariance of the frequency vectors, divided by
// the class count.
double total_variance(const std::vector<ActionFrequency>& freqs, int num_classes);

// Same contract as frame_accuracy, applied to pseudo-labels vs held-out truth.
double pseudo_label_accuracy(std::span<const int> pseudo, std::span<const int> gt);

// Corpus aggregation: accuracy over all frames pooled, edit and F1 averaged
// per video.
MetricReport aggregate_metrics(const std::vector<std::vector<int>>& preds,
                               const std::vector<std::vector<int>>& gts,
                               const std::vector<double>& overlaps = kDefaultOverlaps);

// One CSV row in the schema `split,seed,method,acc,edit,f1_10,f1_25,f1_50`.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& split, const std::string& seed,
                            const std::string& method, const MetricReport& report);

}  // namespace tss
