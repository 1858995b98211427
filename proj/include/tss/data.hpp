#pragma once
// Synthetic procedural-video generation, labelled/unlabelled split sampling,
// and on-disk dataset formats (feature files, ground-truth text, manifest).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tss/common.hpp"

namespace tss {

struct DurationLaw {
    int mean = 1;
    int spread = 0;  // duration ~ uniform over [mean - spread, mean + spread], floored at 1
};

struct GrammarSlot {
    int action = 0;
    DurationLaw duration;
};

// Ordered template of actions for one activity. Swap pairs name adjacent
// template positions whose actions may exchange order with probability 0.5;
// the duration laws stay attached to the positions.
struct ActivityGrammar {
    std::string tag;
    std::vector<GrammarSlot> slots;
    std::vector<std::pair<int, int>> swap_pairs;
};

struct Video {
    std::string id;
    Matrix features;  // T x D
    std::vector<int> labels;
    std::string activity;
    std::vector<int> realized_actions;  // deduped action order this video realised
};

struct Dataset {
    int num_classes = 0;
    int feature_dim = 0;
    uint64_t seed = 0;
    std::vector<Video> train;
    std::vector<Video> test;
    Matrix class_means;  // K x D cluster centers the generator used
};

struct SplitSpec {
    double fraction = 0.0;
    uint64_t seed = 0;
    std::vector<int> labelled;    // indices into Dataset::train
    std::vector<int> unlabelled;
};

void validate_grammars(const std::vector<ActivityGrammar>& grammars);

// Per-frame features are the per-action mean vector plus Gaussian noise.
// Videos cycle through the grammars. Bit-identical for a given seed; the
// train portion does not depend on n_test.
Dataset generate(const std::vector<ActivityGrammar>& grammars, int n_videos, int feature_dim,
                 double noise_sigma, uint64_t seed, int n_test = 0);

// Uniform random subset of ceil(fraction * n) train videos, re-sampled (up
// to 1000 tries) until every action class present in the dataset appears in
// some labelled video.
SplitSpec sample_split(const Dataset& dataset, double fraction, uint64_t seed);

// Feature file: magic "TSFT", u32 T, u32 D, then T*D little-endian f32
// frame-major.
void write_features(const Matrix& features, const std::string& path);
Matrix read_features(const std::string& path);

struct GroundTruthDir {
    std::map<std::string, std::vector<int>> videos;  // video id -> labels
    std::map<std::string, int> mapping;              // action name -> id
    int num_classes = 0;
};

// Directory of per-video text files (one action name per line per frame)
// plus a mapping.txt of "action_name id" lines.
GroundTruthDir read_groundtruth_dir(const std::string& path);

std::string action_name(int id);

// Dataset directory: manifest.json, mapping.txt, features/<id>.tsft,
// groundTruth/<id>.txt.
void write_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace tss
