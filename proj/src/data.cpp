#include "tss/data.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tss/seqcore.hpp"

namespace fs = std::filesystem;

namespace tss {

namespace {

constexpr uint64_t kVideoStreamSalt = 0x9e3779b97f4a7c15ull;
constexpr uint64_t kTestStreamSalt = 0xd1b54a32d192ed03ull;

int grammar_class_count(const std::vector<ActivityGrammar>& grammars) {
    int max_action = -1;
    for (const ActivityGrammar& g : grammars)
        for (const GrammarSlot& s : g.slots) max_action = std::max(max_action, s.action);
    return max_action + 1;
}

Video realize_video(const ActivityGrammar& grammar, const Matrix& class_means,
                    double noise_sigma, std::mt19937_64& rng) {
    std::vector<GrammarSlot> slots = grammar.slots;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (const auto& [a, b] : grammar.swap_pairs)
        if (coin(rng) < 0.5)
            std::swap(slots[static_cast<size_t>(a)].action, slots[static_cast<size_t>(b)].action);

    Video video;
    video.activity = grammar.tag;
    for (const GrammarSlot& slot : slots) {
        const int lo = std::max(1, slot.duration.mean - slot.duration.spread);
        const int hi = slot.duration.mean + slot.duration.spread;
        std::uniform_int_distribution<int> dur(lo, hi);
        const int frames = dur(rng);
        video.labels.insert(video.labels.end(), static_cast<size_t>(frames), slot.action);
        if (video.realized_actions.empty() || video.realized_actions.back() != slot.action)
            video.realized_actions.push_back(slot.action);
    }

    const int num_frames = static_cast<int>(video.labels.size());
    const int dim = class_means.cols;
    video.features = Matrix(num_frames, dim);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int t = 0; t < num_frames; ++t) {
        const double* mean = class_means.row(video.labels[static_cast<size_t>(t)]);
        double* row = video.features.row(t);
        for (int d = 0; d < dim; ++d) row[d] = mean[d] + noise_sigma * noise(rng);
    }
    return video;
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_f32(std::ostream& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    write_u32(out, v);
}

uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw CorruptFeatureFile("truncated feature file");
    return static_cast<uint32_t>(bytes[0]) | static_cast<uint32_t>(bytes[1]) << 8 |
           static_cast<uint32_t>(bytes[2]) << 16 | static_cast<uint32_t>(bytes[3]) << 24;
}

}  // namespace

void validate_grammars(const std::vector<ActivityGrammar>& grammars) {
    if (grammars.empty()) throw GrammarError("no activity grammars given");
    for (size_t g = 0; g < grammars.size(); ++g) {
        const ActivityGrammar& grammar = grammars[g];
        const std::string where = "grammar[" + std::to_string(g) + "]";
        if (grammar.slots.empty()) throw GrammarError(where + ".slots is empty");
        for (size_t i = 0; i < grammar.slots.size(); ++i) {
            const GrammarSlot& s = grammar.slots[i];
            const std::string slot = where + ".slots[" + std::to_string(i) + "]";
            if (s.action < 0) throw GrammarError(slot + ".action is negative");
            if (s.duration.mean < 1) throw GrammarError(slot + ".mean must be >= 1");
            if (s.duration.spread < 0) throw GrammarError(slot + ".spread must be >= 0");
        }
        for (size_t i = 0; i < grammar.swap_pairs.size(); ++i) {
            const auto& [a, b] = grammar.swap_pairs[i];
            const std::string pair = where + ".swap_pairs[" + std::to_string(i) + "]";
            if (a < 0 || b < 0 || a >= static_cast<int>(grammar.slots.size()) ||
                b >= static_cast<int>(grammar.slots.size()))
                throw GrammarError(pair + " index out of range");
            if (b != a + 1) throw GrammarError(pair + " must name adjacent slots (a, a+1)");
        }
    }
}

Dataset generate(const std::vector<ActivityGrammar>& grammars, int n_videos, int feature_dim,
                 double noise_sigma, uint64_t seed, int n_test) {
    validate_grammars(grammars);
    if (n_videos < 1) throw GrammarError("n_videos must be >= 1");
    if (n_test < 0) throw GrammarError("n_test must be >= 0");
    if (feature_dim < 1) throw GrammarError("feature_dim must be >= 1");
    if (noise_sigma < 0.0) throw GrammarError("noise_sigma must be >= 0");

    Dataset dataset;
    dataset.num_classes = grammar_class_count(grammars);
    dataset.feature_dim = feature_dim;
    dataset.seed = seed;

    // Class cluster centers come from their own stream so the video count
    // never perturbs them.
    std::mt19937_64 mean_rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    dataset.class_means = Matrix(dataset.num_classes, feature_dim);
    for (double& v : dataset.class_means.data) v = unit(mean_rng);

    std::mt19937_64 train_rng(seed ^ kVideoStreamSalt);
    for (int v = 0; v < n_videos; ++v) {
        Video video = realize_video(grammars[static_cast<size_t>(v) % grammars.size()],
                                    dataset.class_means, noise_sigma, train_rng);
        char id[32];
        std::snprintf(id, sizeof(id), "vid_%04d", v);
        video.id = id;
        dataset.train.push_back(std::move(video));
    }

    std::mt19937_64 test_rng(seed ^ kTestStreamSalt);
    for (int v = 0; v < n_test; ++v) {
        Video video = realize_video(grammars[static_cast<size_t>(v) % grammars.size()],
                                    dataset.class_means, noise_sigma, test_rng);
        char id[32];
        std::snprintf(id, sizeof(id), "tst_%04d", v);
        video.id = id;
        dataset.test.push_back(std::move(video));
    }
    return dataset;
}

SplitSpec sample_split(const Dataset& dataset, double fraction, uint64_t seed) {
    const int n = static_cast<int>(dataset.train.size());
    if (n < 1) throw InsufficientData("dataset has no train videos");
    if (fraction <= 0.0 || fraction > 1.0)
        throw CoverageInfeasible("labelled fraction must lie in (0, 1], got " +
                                 std::to_string(fraction));

    std::set<int> required;
    for (const Video& v : dataset.train) required.insert(v.labels.begin(), v.labels.end());

    const int n_labelled = static_cast<int>(std::ceil(fraction * n));
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::shuffle(order.begin(), order.end(), rng);
        std::set<int> covered;
        for (int i = 0; i < n_labelled; ++i) {
            const Video& v = dataset.train[static_cast<size_t>(order[static_cast<size_t>(i)])];
            covered.insert(v.labels.begin(), v.labels.end());
        }
        if (covered == required) {
            SplitSpec split;
            split.fraction = fraction;
            split.seed = seed;
            split.labelled.assign(order.begin(), order.begin() + n_labelled);
            split.unlabelled.assign(order.begin() + n_labelled, order.end());
            std::sort(split.labelled.begin(), split.labelled.end());
            std::sort(split.unlabelled.begin(), split.unlabelled.end());
            return split;
        }
    }
    throw CoverageInfeasible("no labelled subset of " + std::to_string(n_labelled) +
                             " videos covers all actions after 1000 tries");
}

void write_features(const Matrix& features, const std::string& path) {
    if (features.rows < 1 || features.cols < 1)
        throw CorruptFeatureFile("refusing to write an empty feature matrix");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open feature file for writing: " + path);
    out.write("TSFT", 4);
    write_u32(out, static_cast<uint32_t>(features.rows));
    write_u32(out, static_cast<uint32_t>(features.cols));
    for (double v : features.data) write_f32(out, static_cast<float>(v));
    if (!out) throw IoError("failed writing feature file: " + path);
}

Matrix read_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feature file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TSFT", 4) != 0)
        throw CorruptFeatureFile("bad magic in " + path);
    const uint32_t rows = read_u32(in);
    const uint32_t cols = read_u32(in);
    if (rows == 0 || cols == 0)
        throw CorruptFeatureFile("zero dimension in " + path);

    Matrix features(static_cast<int>(rows), static_cast<int>(cols));
    for (double& v : features.data) {
        const uint32_t bits = read_u32(in);
        float f;
        std::memcpy(&f, &bits, 4);
        v = static_cast<double>(f);
    }
    char extra;
    if (in.read(&extra, 1)) throw CorruptFeatureFile("trailing bytes in " + path);
    return features;
}

GroundTruthDir read_groundtruth_dir(const std::string& path) {
    const fs::path dir(path);
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + path);

    GroundTruthDir out;
    const fs::path mapping_path = dir / "mapping.txt";
    std::ifstream mapping(mapping_path);
    if (!mapping) throw IoError("missing mapping file: " + mapping_path.string());
    std::string name;
    int id;
    while (mapping >> name >> id) out.mapping[name] = id;
    for (const auto& [n, i] : out.mapping) out.num_classes = std::max(out.num_classes, i + 1);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        if (entry.path().filename() == "mapping.txt") continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    for (const fs::path& file : files) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open " + file.string());
        std::vector<int> labels;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty()) continue;
            auto it = out.mapping.find(line);
            if (it == out.mapping.end())
                throw UnknownAction("'" + line + "' in " + file.string() +
                                    " is not in the mapping");
            labels.push_back(it->second);
        }
        if (labels.empty()) throw EmptySequence("no frames in " + file.string());
        out.videos[file.stem().string()] = std::move(labels);
    }
    return out;
}

std::string action_name(int id) { return "action_" + std::to_string(id); }

void write_dataset(const Dataset& dataset, const std::string& dir) {
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root / "features", ec);
    fs::create_directories(root / "groundTruth", ec);
    if (ec) throw IoError("cannot create dataset directory " + dir + ": " + ec.message());

    std::ofstream mapping(root / "groundTruth" / "mapping.txt");
    if (!mapping) throw IoError("cannot write mapping.txt under " + dir);
    for (int k = 0; k < dataset.num_classes; ++k) mapping << action_name(k) << " " << k << "\n";

    nlohmann::json manifest;
    manifest["k"] = dataset.num_classes;
    manifest["d"] = dataset.feature_dim;
    manifest["seed"] = dataset.seed;
    manifest["videos"] = nlohmann::json::array();

    auto emit = [&](const Video& video, const char* split) {
        const std::string feat_rel = "features/" + video.id + ".tsft";
        const std::string gt_rel = "groundTruth/" + video.id + ".txt";
        write_features(video.features, (root / feat_rel).string());
        std::ofstream gt(root / gt_rel);
        if (!gt) throw IoError("cannot write " + gt_rel + " under " + dir);
        for (int y : video.labels) gt << action_name(y) << "\n";
        manifest["videos"].push_back({{"id", video.id},
                                      {"activity", video.activity},
                                      {"split", split},
                                      {"features", feat_rel},
                                      {"labels", gt_rel}});
    };
    for (const Video& v : dataset.train) emit(v, "train");
    for (const Video& v : dataset.test) emit(v, "test");

    std::ofstream mf(root / "manifest.json");
    if (!mf) throw IoError("cannot write manifest.json under " + dir);
    mf << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream mf(root / "manifest.json");
    if (!mf) throw IoError("missing manifest.json under " + dir);
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("manifest.json: " + std::string(e.what()));
    }
    for (const char* key : {"k", "d", "videos"})
        if (!manifest.contains(key))
            throw SchemaError("manifest.json lacks required key '" + std::string(key) + "'");

    const GroundTruthDir gt = read_groundtruth_dir((root / "groundTruth").string());

    Dataset dataset;
    dataset.num_classes = manifest["k"].get<int>();
    dataset.feature_dim = manifest["d"].get<int>();
    dataset.seed = manifest.value("seed", 0ull);
    for (const auto& entry : manifest["videos"]) {
        Video video;
        video.id = entry.at("id").get<std::string>();
        video.activity = entry.value("activity", "");
        video.features = read_features((root / entry.at("features").get<std::string>()).string());
        auto it = gt.videos.find(video.id);
        if (it == gt.videos.end())
            throw SchemaError("manifest lists '" + video.id + "' but groundTruth has no file");
        video.labels = it->second;
        if (static_cast<int>(video.labels.size()) != video.features.rows)
            throw DimensionMismatch("video '" + video.id + "': " +
                                    std::to_string(video.labels.size()) + " labels vs " +
                                    std::to_string(video.features.rows) + " feature rows");
        validate_labels(video.labels, dataset.num_classes);
        if (entry.value("split", "train") == "test")
            dataset.test.push_back(std::move(video));
        else
            dataset.train.push_back(std::move(video));
    }
    if (dataset.train.empty()) throw SchemaError("dataset has no train videos");
    return dataset;
}

}  // namespace tss
