// Command-line surface: synthetic dataset generation, semi-supervised
// training with seed-averaged summaries, pseudo-label and boundary-smoothing
// inspection, and SVG log plots.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tss/continuity.hpp"
#include "tss/data.hpp"
#include "tss/manifest.hpp"
#include "tss/metrics.hpp"
#include "tss/model.hpp"
#include "tss/smoothing.hpp"
#include "tss/svg_plot.hpp"
#include "tss/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<tss::ActivityGrammar> parse_grammar_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tss::IoError("cannot open grammar file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw tss::GrammarError(path + ": " + e.what());
    }
    if (!doc.contains("activities") || !doc["activities"].is_array() || doc["activities"].empty())
        throw tss::GrammarError("activities must be a non-empty array");

    std::vector<tss::ActivityGrammar> grammars;
    for (size_t g = 0; g < doc["activities"].size(); ++g) {
        const json& a = doc["activities"][g];
        const std::string where = "activities[" + std::to_string(g) + "]";
        tss::ActivityGrammar grammar;
        if (!a.contains("tag") || !a["tag"].is_string())
            throw tss::GrammarError(where + ".tag missing or not a string");
        grammar.tag = a["tag"].get<std::string>();
        if (!a.contains("slots") || !a["slots"].is_array())
            throw tss::GrammarError(where + ".slots missing or not an array");
        for (size_t i = 0; i < a["slots"].size(); ++i) {
            const json& s = a["slots"][i];
            const std::string slot = where + ".slots[" + std::to_string(i) + "]";
            tss::GrammarSlot out;
            if (!s.contains("action") || !s["action"].is_number_integer())
                throw tss::GrammarError(slot + ".action missing or not an integer");
            out.action = s["action"].get<int>();
            if (!s.contains("mean") || !s["mean"].is_number_integer())
                throw tss::GrammarError(slot + ".mean missing or not an integer");
            out.duration.mean = s["mean"].get<int>();
            out.duration.spread = s.value("spread", 0);
            grammar.slots.push_back(out);
        }
        if (a.contains("swap_pairs")) {
            if (!a["swap_pairs"].is_array())
                throw tss::GrammarError(where + ".swap_pairs is not an array");
            for (size_t i = 0; i < a["swap_pairs"].size(); ++i) {
                const json& p = a["swap_pairs"][i];
                if (!p.is_array() || p.size() != 2)
                    throw tss::GrammarError(where + ".swap_pairs[" + std::to_string(i) +
                                            "] must be an [i, i+1] pair");
                grammar.swap_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
            }
        }
        grammars.push_back(std::move(grammar));
    }
    tss::validate_grammars(grammars);
    return grammars;
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw tss::SchemaError("no seeds in '" + text + "'");
    return seeds;
}

std::vector<tss::TrainMode> parse_mode_list(const std::string& text) {
    std::vector<tss::TrainMode> modes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        modes.push_back(tss::mode_from_string(item));
    }
    if (modes.empty()) throw tss::SchemaError("no modes in '" + text + "'");
    return modes;
}

int worker_threads(size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("TSS_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<size_t>(n, jobs));
}

struct TrainFlags {
    std::string data_dir;
    std::string out_dir;
    std::string modes = "full";
    std::string seeds = "1,2,3,4,5";
    double labelled_frac = 0.10;
    tss::TrainConfig base;  // shared hyperparameters; mode/seed set per run
    bool final_stage_only = false;
};

json train_config_json(const TrainFlags& flags) {
    const tss::TrainConfig& c = flags.base;
    return {{"labelled_frac", flags.labelled_frac},
            {"modes", flags.modes},
            {"seeds", flags.seeds},
            {"warmup_epochs", c.warmup_epochs},
            {"joint_epochs", c.joint_epochs},
            {"learning_rate", c.learning_rate},
            {"alpha", c.weights.alpha},
            {"beta", c.weights.beta},
            {"gamma", c.weights.gamma},
            {"tau", c.weights.tau},
            {"omega", c.omega},
            {"vicinity", c.vicinity},
            {"abs_eps", c.abs_eps},
            {"pseudo_weight", c.pseudo_weight},
            {"entropy_weight", c.entropy_weight},
            {"smooth_in_warmup", c.smooth_in_warmup},
            {"all_stage_unsupervised", !flags.final_stage_only},
            {"activity_anchors", c.activity_anchors},
            {"stages", c.model.stages},
            {"layers_per_stage", c.model.layers_per_stage},
            {"channels", c.model.channels}};
}

int run_generate(const std::string& grammar_file, int n_videos, int n_test, int dim, double noise,
                 uint64_t seed, const std::string& out_dir) {
    const auto grammars = parse_grammar_file(grammar_file);
    const tss::Dataset dataset = tss::generate(grammars, n_videos, dim, noise, seed, n_test);
    tss::write_dataset(dataset, out_dir);

    // Fold the run snapshot into the dataset manifest so the directory keeps
    // exactly one manifest.
    const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
    std::ifstream in(manifest_path);
    json manifest;
    in >> manifest;
    in.close();
    manifest["run"] = {{"command", "generate"},
                       {"config",
                        {{"grammars", grammar_file},
                         {"n_videos", n_videos},
                         {"n_test", n_test},
                         {"dim", dim},
                         {"noise", noise},
                         {"seed", seed}}},
                       {"content_hash", tss::sha256_hex_of_files({grammar_file})}};
    std::ofstream out(manifest_path);
    if (!out) throw tss::IoError("cannot rewrite " + manifest_path);
    out << manifest.dump(2) << "\n";

    std::cout << "generated " << dataset.train.size() << " train + " << dataset.test.size()
              << " test videos, K=" << dataset.num_classes << " D=" << dataset.feature_dim
              << " -> " << out_dir << "\n";
    return 0;
}

int run_train(const TrainFlags& flags) {
    const tss::Dataset dataset = tss::load_dataset(flags.data_dir);
    const std::vector<tss::TrainMode> modes = parse_mode_list(flags.modes);
    const std::vector<uint64_t> seeds = parse_seed_list(flags.seeds);

    struct Job {
        tss::TrainMode mode;
        uint64_t seed;
        tss::MetricReport final_metrics;
    };
    std::vector<Job> jobs;
    for (tss::TrainMode mode : modes)
        for (uint64_t seed : seeds) jobs.push_back({mode, seed, {}});

    fs::create_directories(flags.out_dir);
    const std::string dataset_manifest = (fs::path(flags.data_dir) / "manifest.json").string();

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto run_job = [&](Job& job) {
        tss::TrainConfig config = flags.base;
        config.mode = job.mode;
        config.seed = job.seed;
        config.all_stage_unsupervised = !flags.final_stage_only;

        const tss::SplitSpec split = tss::sample_split(dataset, flags.labelled_frac, job.seed);
        const tss::TrainResult result = tss::train(dataset, split, config);

        const fs::path run_dir =
            fs::path(flags.out_dir) / tss::to_string(job.mode) / ("seed_" + std::to_string(job.seed));
        fs::create_directories(run_dir);
        std::ofstream log((run_dir / "epochs.csv"));
        if (!log) throw tss::IoError("cannot write epochs.csv under " + run_dir.string());
        log << tss::epoch_log_csv_header() << "\n";
        for (const tss::EpochLog& e : result.logs) log << tss::epoch_log_csv_row(e) << "\n";
        tss::save_checkpoint(result.params, (run_dir / "model.tssm").string());

        job.final_metrics = result.logs.empty()
                                ? tss::evaluate(result.params, dataset.test.empty()
                                                                   ? dataset.train
                                                                   : dataset.test)
                                : result.logs.back().held_out;
    };

    const int threads = worker_threads(jobs.size());
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= jobs.size() || failed.load()) break;
            try {
                run_job(jobs[i]);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failed.store(true);
                if (failure.empty()) failure = e.what();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (failed.load()) throw tss::Error("TrainFailed", failure);

    // Summary: per-run rows, a seed-mean row per mode, and a gain row per
    // non-base mode whenever base is present.
    char frac[16];
    std::snprintf(frac, sizeof(frac), "%.2f", flags.labelled_frac);
    std::ofstream summary(fs::path(flags.out_dir) / "summary.csv");
    if (!summary) throw tss::IoError("cannot write summary.csv under " + flags.out_dir);
    summary << tss::metrics_csv_header() << "\n";

    auto mean_report = [&](tss::TrainMode mode) {
        tss::MetricReport mean;
        int n = 0;
        for (const Job& job : jobs) {
            if (job.mode != mode) continue;
            mean.acc += job.final_metrics.acc;
            mean.edit += job.final_metrics.edit;
            for (const auto& [k, v] : job.final_metrics.f1) mean.f1[k] += v;
            ++n;
        }
        mean.acc /= n;
        mean.edit /= n;
        for (auto& [k, v] : mean.f1) v /= n;
        return mean;
    };

    for (const Job& job : jobs)
        summary << tss::metrics_csv_row(frac, std::to_string(job.seed), tss::to_string(job.mode),
                                        job.final_metrics)
                << "\n";
    std::map<tss::TrainMode, tss::MetricReport> means;
    for (tss::TrainMode mode : modes) {
        means[mode] = mean_report(mode);
        summary << tss::metrics_csv_row(frac, "mean", tss::to_string(mode), means[mode]) << "\n";
    }
    const bool has_base = means.count(tss::TrainMode::Base) > 0;
    if (has_base) {
        const tss::MetricReport& base = means[tss::TrainMode::Base];
        for (tss::TrainMode mode : modes) {
            if (mode == tss::TrainMode::Base) continue;
            tss::MetricReport gain = means[mode];
            gain.acc -= base.acc;
            gain.edit -= base.edit;
            for (auto& [k, v] : gain.f1) v -= base.f1.at(k);
            summary << tss::metrics_csv_row(frac, "mean", tss::to_string(mode) + "_gain", gain)
                    << "\n";
        }
    }
    summary.close();

    tss::RunManifest manifest =
        tss::make_manifest("train", train_config_json(flags), seeds, {dataset_manifest},
                           {(fs::path(flags.out_dir) / "summary.csv").string()});
    tss::write_manifest(manifest, (fs::path(flags.out_dir) / "manifest.json").string());

    std::cout << "trained " << jobs.size() << " runs -> " << flags.out_dir << "/summary.csv\n";
    return 0;
}

int run_pseudo(const std::string& data_dir, const std::string& checkpoint,
               const std::string& video_id, int omega) {
    const tss::Dataset dataset = tss::load_dataset(data_dir);
    const tss::Video* video = nullptr;
    for (const tss::Video& v : dataset.train)
        if (v.id == video_id) video = &v;
    for (const tss::Video& v : dataset.test)
        if (v.id == video_id) video = &v;
    if (!video) throw tss::SchemaError("video '" + video_id + "' not in dataset " + data_dir);

    const tss::ModelParams params = tss::load_checkpoint(checkpoint);
    const std::vector<tss::Matrix> outs = tss::forward(params, video->features);
    const tss::ContinuityResult cont = tss::continuity_loss(outs.back(), omega);

    std::cout << "video " << video->id << " frames " << video->features.rows << "\n";
    std::cout << "O:";
    for (int o : cont.actions.elements) std::cout << " " << tss::action_name(o);
    std::cout << "\n";
    std::cout << "segments (label start end):\n";
    for (const tss::Segment& s : tss::segments_from_labels(cont.labels))
        std::cout << "  " << tss::action_name(s.label) << " " << s.start << " " << s.end << "\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "continuity_cost %.6f\n", cont.loss.value);
    std::cout << buf;
    std::snprintf(buf, sizeof(buf), "dtw_cost_total %.6f\n", cont.dtw_cost);
    std::cout << buf;
    return 0;
}

int run_smooth(const std::string& labels_file, double v, double eps,
               const std::string& mapping_file, int classes) {
    std::ifstream in(labels_file);
    if (!in) throw tss::IoError("cannot open labels file: " + labels_file);

    std::map<std::string, int> mapping;
    if (!mapping_file.empty()) {
        std::ifstream map_in(mapping_file);
        if (!map_in) throw tss::IoError("cannot open mapping file: " + mapping_file);
        std::string name;
        int id;
        while (map_in >> name >> id) mapping[name] = id;
    }

    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        try {
            size_t used = 0;
            const int value = std::stoi(line, &used);
            if (used == line.size()) {
                labels.push_back(value);
                continue;
            }
        } catch (const std::exception&) {
        }
        auto it = mapping.find(line);
        if (it == mapping.end())
            throw tss::UnknownAction("'" + line + "' needs --mapping to resolve");
        labels.push_back(it->second);
    }
    if (labels.empty()) throw tss::EmptySequence("no labels in " + labels_file);

    int num_classes = classes;
    for (int y : labels) num_classes = std::max(num_classes, y + 1);
    for (const auto& [name, id] : mapping) num_classes = std::max(num_classes, id + 1);

    const tss::SegmentList segments = tss::segments_from_labels(labels);
    const std::vector<tss::Vicinity> vics = tss::vicinities(segments, v);
    std::cout << "vicinities " << vics.size() << "\n";
    std::cout << "boundary side start end own other\n";
    for (const tss::Vicinity& vic : vics)
        std::cout << vic.boundary << " " << (vic.side == tss::Vicinity::Side::Left ? "left" : "right")
                  << " " << vic.start << " " << vic.end << " " << vic.own_label << " "
                  << vic.other_label << "\n";

    const tss::Matrix soft = tss::smooth_labels(labels, num_classes, v, eps);
    for (const tss::Vicinity& vic : vics) {
        std::cout << "rows near boundary " << vic.boundary
                  << (vic.side == tss::Vicinity::Side::Left ? " (left)" : " (right)") << ":\n";
        for (int t = vic.start; t < vic.end; ++t) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "  t=%d p(%d)=%.6f p(%d)=%.6f\n", t, vic.own_label,
                          soft.at(t, vic.own_label), vic.other_label, soft.at(t, vic.other_label));
            std::cout << buf;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal action segmentation toolkit"};
    app.require_subcommand(1);

    // generate
    std::string grammar_file, gen_out;
    int n_videos = 60, n_test = 0, dim = 8;
    double noise = 0.5;
    uint64_t gen_seed = 1;
    CLI::App* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    gen->add_option("--grammars", grammar_file, "activity grammar JSON")->required();
    gen->add_option("--n-videos", n_videos, "train video count");
    gen->add_option("--n-test", n_test, "test video count");
    gen->add_option("--dim", dim, "feature dimension");
    gen->add_option("--noise", noise, "feature noise sigma");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // train
    TrainFlags tf;
    CLI::App* tr = app.add_subcommand("train", "train one or more modes over split seeds");
    tr->add_option("--data", tf.data_dir, "dataset directory")->required();
    tr->add_option("--out", tf.out_dir, "output directory")->required();
    tr->add_option("--labelled-frac", tf.labelled_frac, "labelled fraction of train videos");
    tr->add_option("--mode", tf.modes, "comma list of base|pseudo|aff|aff_cont|full|sup_abs");
    tr->add_option("--seeds", tf.seeds, "comma list of split seeds");
    tr->add_option("--warmup-epochs", tf.base.warmup_epochs, "labelled-only epochs");
    tr->add_option("--joint-epochs", tf.base.joint_epochs, "joint epochs");
    tr->add_option("--lr", tf.base.learning_rate, "learning rate");
    tr->add_option("--alpha", tf.base.weights.alpha, "affinity weight");
    tr->add_option("--beta", tf.base.weights.beta, "continuity weight");
    tr->add_option("--gamma", tf.base.weights.gamma, "smoothing weight");
    tr->add_option("--tau", tf.base.weights.tau, "smoothing clamp");
    tr->add_option("--omega", tf.base.omega, "sub-sampling stride");
    tr->add_option("--v", tf.base.vicinity, "boundary vicinity fraction");
    tr->add_option("--eps", tf.base.abs_eps, "boundary sigmoid sharpness");
    tr->add_option("--pseudo-weight", tf.base.pseudo_weight, "naive pseudo-label weight");
    tr->add_option("--entropy-weight", tf.base.entropy_weight, "entropy weight (aff mode)");
    tr->add_option("--stages", tf.base.model.stages, "model stages");
    tr->add_option("--layers", tf.base.model.layers_per_stage, "layers per stage");
    tr->add_option("--channels", tf.base.model.channels, "hidden channels");
    tr->add_flag("--activity-anchors", tf.base.activity_anchors,
                 "restrict anchors to same-activity videos");
    tr->add_flag("--final-stage-only", tf.final_stage_only,
                 "attach unsupervised losses to the final stage only");

    // pseudo
    std::string ps_data, ps_ckpt, ps_video;
    int ps_omega = 20;
    CLI::App* ps = app.add_subcommand("pseudo", "inspect DTW pseudo-labels for one video");
    ps->add_option("--data", ps_data, "dataset directory")->required();
    ps->add_option("--checkpoint", ps_ckpt, "model checkpoint")->required();
    ps->add_option("--video", ps_video, "video id")->required();
    ps->add_option("--omega", ps_omega, "sub-sampling stride");

    // smooth
    std::string sm_labels, sm_mapping;
    double sm_v = 0.05, sm_eps = 5.0;
    int sm_classes = 0;
    CLI::App* sm = app.add_subcommand("smooth", "inspect boundary smoothing for a label file");
    sm->add_option("--labels", sm_labels, "label file (ints or names per line)")->required();
    sm->add_option("--v", sm_v, "vicinity fraction");
    sm->add_option("--eps", sm_eps, "sigmoid sharpness");
    sm->add_option("--mapping", sm_mapping, "action name mapping file");
    sm->add_option("--classes", sm_classes, "class count override");

    // plot
    std::string pl_logs, pl_out;
    CLI::App* pl = app.add_subcommand("plot", "render epoch logs as an SVG chart");
    pl->add_option("--logs", pl_logs, "directory of <mode>/seed_*/epochs.csv")->required();
    pl->add_option("--out", pl_out, "output SVG file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_generate(grammar_file, n_videos, n_test, dim, noise,
                                               gen_seed, gen_out);
        if (tr->parsed()) return run_train(tf);
        if (ps->parsed()) return run_pseudo(ps_data, ps_ckpt, ps_video, ps_omega);
        if (sm->parsed()) return run_smooth(sm_labels, sm_v, sm_eps, sm_mapping, sm_classes);
        if (pl->parsed()) {
            tss::plot_logs_to_svg(pl_logs, pl_out);
            std::cout << "wrote " << pl_out << "\n";
            return 0;
        }
    } catch (const tss::Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Unhandled: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
