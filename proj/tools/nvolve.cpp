// nvolve: command-line front end for the embedding optimization pipeline.
//
//   synth     synthetic subject, atlas and train/val datasets
//   train     fit an encoder checkpoint
//   optimize  optimize embeddings under a neural objective
//   sample    pick embeddings at progress fractions of a trajectory
//   eval      predicted-activation report (pool vs top pool vs generated)
//   export    re-export a trajectory for downstream rendering
//   replay    re-run a command from its run manifest
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "nvolve/nvolve.hpp"

namespace fs = std::filesystem;
using namespace nvolve;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        double f = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), f);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size())
            throw UsageError("bad fraction '" + item + "'");
        if (!(f > 0.0 && f <= 1.0)) throw UsageError("fraction " + item + " is outside (0, 1]");
        out.push_back(f);
        pos = comma + 1;
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const char* what) {
    try {
        return detail::split_sizes(text);
    } catch (const FormatError&) {
        throw UsageError(std::string("bad ") + what + " list '" + text + "'");
    }
}

std::vector<RegionSpec> parse_regions(const std::string& text) {
    std::vector<RegionSpec> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        const auto colon = item.find(':');
        if (colon == std::string::npos || colon == 0) throw UsageError("region '" + item + "' must be NAME:SIZE");
        std::size_t size = 0;
        const std::string count = item.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), size);
        if (ec != std::errc{} || ptr != count.data() + count.size() || size == 0)
            throw UsageError("region '" + item + "' needs a positive size");
        out.push_back({item.substr(0, colon), size});
        pos = comma + 1;
    }
    return out;
}

unsigned thread_cap() {
    if (const char* env = std::getenv("NVOLVE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Records every option of the subcommand so the run can be replayed.
void write_run_manifest(const fs::path& dir, const CLI::App& sub) {
    KeyValueDoc doc;
    auto& run = doc.add("run");
    run.set("subcommand", sub.get_name());
    run.set("tool_version", kVersion);
    auto& args = doc.add("args");
    for (const auto* opt : sub.get_options()) {
        const auto name = opt->get_single_name();
        if (name.empty() || name == "help") continue;
        const bool flag = opt->get_expected_min() == 0;
        if (flag) {
            args.set(name, opt->count() ? "true" : "false");
        } else if (opt->count()) {
            for (const auto& r : opt->results()) args.set(name, r);
        } else if (!opt->get_default_str().empty()) {
            const auto ex = opt->get_excludes();
            if (std::any_of(ex.begin(), ex.end(), [](const CLI::Option* o) { return o->count() > 0; })) continue;
            args.set(name, opt->get_default_str());
        }
    }
    write_file_atomic(dir / "run_manifest.txt", format_keyvalue(doc));
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string regions;
    std::size_t samples = 1000;
    std::size_t sessions = 4;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::size_t tokens = 16;
    std::size_t dim = 768;
    double val_fraction = 0.1;
    std::string nonlinearity = "linear";
    double overlap = 0.0;
    std::string out;
};

int cmd_synth(const SynthArgs& a, const CLI::App& sub) {
    SubjectSpec spec;
    spec.regions = parse_regions(a.regions);
    spec.noise_sigma = a.noise;
    spec.direction_overlap = a.overlap;
    try {
        spec.nonlinearity = parse_nonlinearity(a.nonlinearity);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const EmbeddingShape shape{a.tokens, a.dim};
    const fs::path out = a.out;
    SyntheticSubject subject;
    ResponseDataset train_set, val_set;
    try {
        subject = make_subject(shape, spec, derive_seed(a.seed, 0));
        std::tie(train_set, val_set) =
            split_by_session(make_dataset(subject, a.samples, a.sessions, derive_seed(a.seed, 1)), a.val_fraction);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }

    save_subject(out / "subject", subject);
    write_atlas(out / "atlas.txt", subject.atlas);
    save_dataset(out / "train", train_set);
    save_dataset(out / "val", val_set);
    write_run_manifest(out, sub);
    std::cout << "subject " << to_string(shape) << " with " << subject.n_voxels << " voxels in "
              << subject.atlas.size() << " regions; " << train_set.size() << " train / " << val_set.size()
              << " val samples -> " << out.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string train_dir;
    std::string val_dir;
    std::string hidden = "2048,1024,512";
    double lr = 3e-4;
    int max_epochs = 50;
    int patience = 5;
    std::size_t batch_size = 32;
    double weight_decay = 1e-2;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_train(const TrainArgs& a, const CLI::App& sub) {
    fs::path train_path = a.train_dir, val_path = a.val_dir;
    if (!a.data.empty()) {
        if (train_path.empty()) train_path = fs::path(a.data) / "train";
        if (val_path.empty()) val_path = fs::path(a.data) / "val";
    }
    if (train_path.empty() || val_path.empty()) throw UsageError("give --data or both --train and --val");
    for (const auto& p : {train_path, val_path})
        if (!fs::is_directory(p)) throw UsageError("dataset directory '" + p.string() + "' does not exist");

    const auto train_set = load_dataset(train_path);
    const auto val_set = load_dataset(val_path);
    EncoderArchitecture arch{train_set.shape.size(), parse_sizes(a.hidden, "hidden width"), train_set.n_voxels()};
    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.max_epochs = a.max_epochs;
    cfg.patience = a.patience;
    cfg.batch_size = a.batch_size;
    cfg.weight_decay = a.weight_decay;
    cfg.seed = a.seed;
    try {
        cfg.validate();
        arch.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }

    const auto result = train(train_set, val_set, arch, cfg);
    const fs::path out = a.out;
    save_checkpoint(out, result.model, CheckpointInfo{train_set.shape, cfg, result.log, result.best_epoch});
    write_file_atomic(out / "train_log.csv", training_log_csv(result.log));
    write_run_manifest(out, sub);
    const auto& best = result.log[static_cast<std::size_t>(result.best_epoch - 1)];
    std::cout << "trained " << result.log.size() << " epoch(s); best epoch " << best.epoch << " val_mean_r "
              << detail::format_double(best.val_mean_r) << " -> " << out.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
    std::string model;
    std::string atlas;
    std::string objective;
    int steps = 300;
    double lr = 0.01;
    std::uint64_t seed = 0;
    std::string seed_embedding;
    int num_seeds = 1;
    unsigned jobs = 1;
    int record_every = 1;
    std::string fractions;
    std::string out;
};

void write_samples(const fs::path& dir, const std::vector<ProgressSample>& samples) {
    KeyValueDoc listing;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::string file = "sample_" + std::to_string(i) + "_step_" + std::to_string(s.step) + ".nvtf";
        write_embedding(dir / file, s.embedding);
        auto& sec = listing.add("sample");
        sec.set("fraction", s.fraction);
        sec.set("step", s.step);
        sec.set("embedding", file);
    }
    write_file_atomic(dir / "samples.txt", format_keyvalue(listing));
}

int cmd_optimize(const OptimizeArgs& a, const CLI::App& sub) {
    const auto ckpt = load_checkpoint(a.model);
    const auto atlas = read_atlas(a.atlas);
    std::optional<NeuralObjective> objective;
    try {
        objective = compile(a.objective, atlas, ckpt.model.arch.n_voxels);
    } catch (const ParseError& e) {
        throw UsageError(std::string("objective: ") + e.what());
    } catch (const UnknownRegion& e) {
        throw UsageError(e.what());
    }
    std::vector<double> fractions;
    if (!a.fractions.empty()) fractions = parse_fractions(a.fractions);

    OptimizeConfig cfg;
    cfg.steps = a.steps;
    cfg.learning_rate = a.lr;
    cfg.record_every = a.record_every;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (a.num_seeds < 1) throw UsageError("--num-seeds must be >= 1");

    std::optional<Embedding> fixed_start;
    if (!a.seed_embedding.empty()) fixed_start = read_embedding(a.seed_embedding);
    EmbeddingShape shape;
    if (fixed_start) shape = fixed_start->shape();
    else if (ckpt.shape) shape = *ckpt.shape;
    else shape = {1, ckpt.model.arch.input_len};
    if (shape.size() != ckpt.model.arch.input_len)
        throw UsageError("seed embedding has " + std::to_string(shape.size()) + " values, model expects " +
                         std::to_string(ckpt.model.arch.input_len));

    const fs::path out = a.out;
    const auto runs = static_cast<std::size_t>(a.num_seeds);
    std::vector<std::string> failures(runs);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < runs; i = next++) {
            OptimizeConfig run_cfg = cfg;
            run_cfg.seed = a.seed + i;
            const fs::path dir = runs == 1 ? out : out / ("seed_" + std::to_string(run_cfg.seed));
            try {
                const Embedding q0 = fixed_start ? *fixed_start : random_embedding(shape, run_cfg.seed);
                const auto traj = optimize(ckpt.model, *objective, q0, run_cfg);
                export_trajectory(traj, dir);
                if (!fractions.empty()) write_samples(dir / "samples", sample_at_fractions(traj, fractions));
                const auto& best = traj.points[traj.best_index()];
                std::lock_guard lock(log_mutex);
                std::cout << "seed " << run_cfg.seed << ": " << traj.points.size() << " losses, initial "
                          << detail::format_double(traj.points.front().loss) << ", best "
                          << detail::format_double(best.loss) << " at step " << best.step << " -> " << dir.string() << "\n";
            } catch (const OptimizationAborted& e) {
                export_trajectory(e.partial(), dir);
                failures[i] = e.what();
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min({a.jobs, thread_cap(), static_cast<unsigned>(runs)}));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    write_run_manifest(out, sub);
    int rc = kOk;
    for (std::size_t i = 0; i < runs; ++i)
        if (!failures[i].empty()) {
            std::cerr << "seed " << a.seed + i << " failed: " << failures[i] << "\n";
            rc = kFailure;
        }
    return rc;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
    std::string trajectory;
    std::string fractions = "0.2,0.5,0.8,1.0";
    std::string out;
};

int cmd_sample(const SampleArgs& a, const CLI::App& sub) {
    const auto fractions = parse_fractions(a.fractions);
    const auto traj = import_trajectory(a.trajectory);
    std::vector<ProgressSample> samples;
    try {
        samples = sample_at_fractions(traj, fractions);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << " (re-run optimize with --record-every 1)\n";
        return kFailure;
    }
    const fs::path out = a.out.empty() ? fs::path(a.trajectory) / "samples" : fs::path(a.out);
    write_samples(out, samples);
    write_run_manifest(out, sub);
    for (const auto& s : samples)
        std::cout << "fraction " << detail::format_double(s.fraction) << " -> step " << s.step << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string model;
    std::string atlas;
    std::vector<std::string> regions;
    std::vector<std::string> pool;
    std::vector<std::string> generated;
    std::size_t k = 100;
    bool plot = false;
    std::string out;
};

// A dataset directory, an NVTF embedding file/stack, a trajectory directory
// (contributes its best-loss embedding) or a directory of trajectories.
std::vector<Embedding> collect_embeddings(const fs::path& p) {
    if (fs::is_regular_file(p)) return read_embeddings(p);
    if (fs::exists(p / "embeddings.nvtf")) return read_embeddings(p / "embeddings.nvtf");
    if (fs::exists(p / "manifest.txt")) {
        const auto traj = import_trajectory(p);
        const double full = 1.0;
        return {sample_at_fractions(traj, std::span<const double>(&full, 1)).front().embedding};
    }
    if (fs::is_directory(p)) {
        std::vector<fs::path> children;
        for (const auto& entry : fs::directory_iterator(p))
            if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt")) children.push_back(entry.path());
        std::sort(children.begin(), children.end());
        std::vector<Embedding> out;
        for (const auto& c : children) {
            auto more = collect_embeddings(c);
            out.insert(out.end(), more.begin(), more.end());
        }
        if (!out.empty()) return out;
    }
    throw UsageError("no embeddings found at '" + p.string() + "'");
}

int cmd_eval(const EvalArgs& a, const CLI::App& sub) {
    if (a.k == 0) throw UsageError("--k must be >= 1");
    const auto ckpt = load_checkpoint(a.model);
    const auto atlas = read_atlas(a.atlas);
    atlas.validate(ckpt.model.arch.n_voxels);

    std::vector<Embedding> pool, generated;
    for (const auto& p : a.pool) {
        auto more = collect_embeddings(p);
        pool.insert(pool.end(), more.begin(), more.end());
    }
    for (const auto& p : a.generated) {
        auto more = collect_embeddings(p);
        generated.insert(generated.end(), more.begin(), more.end());
    }
    if (a.k > pool.size() || a.k > generated.size())
        throw UsageError("--k " + std::to_string(a.k) + " exceeds pool (" + std::to_string(pool.size()) +
                         ") or generated (" + std::to_string(generated.size()) + ") size");

    const auto regions = a.regions.empty() ? atlas.names() : a.regions;
    std::vector<ActivationReport> reports;
    for (const auto& r : regions) {
        if (!atlas.contains(r)) throw UsageError("unknown region '" + r + "'");
        reports.push_back(activation_report(ckpt.model, atlas, r, pool, generated, a.k));
    }
    const fs::path out = a.out;
    write_file_atomic(out / "report.csv", report_csv(reports));
    if (a.plot) write_file_atomic(out / "report.svg", report_svg(reports));
    write_run_manifest(out, sub);
    for (const auto& r : reports)
        std::cout << r.region << ": pool max " << detail::format_double(r.pool.max) << ", top_pool max "
                  << detail::format_double(r.top_pool.max) << ", generated min " << detail::format_double(r.generated.min)
                  << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
    std::string trajectory;
    std::string out;
    std::string dtype = "f64";
    int stride = 1;
};

int cmd_export(const ExportArgs& a, const CLI::App& sub) {
    if (a.dtype != "f32" && a.dtype != "f64") throw UsageError("--dtype must be f32 or f64");
    if (a.stride < 1) throw UsageError("--stride must be >= 1");
    auto traj = import_trajectory(a.trajectory);
    if (a.stride > 1) {
        for (std::size_t i = 1; i + 1 < traj.points.size(); ++i)
            if (traj.points[i].step % a.stride != 0) traj.points[i].embedding.reset();
    }
    export_trajectory(traj, a.out, a.dtype == "f32" ? DType::f32 : DType::f64);
    write_run_manifest(a.out, sub);
    std::cout << "exported " << traj.points.size() << " points (" << a.dtype << ") -> " << a.out << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv);

int cmd_replay(const std::string& manifest_path, const std::string& out_override) {
    const auto doc = parse_keyvalue(read_file(manifest_path));
    std::vector<std::string> args{"nvolve", doc.section("run").get("subcommand")};
    for (const auto& [key, value] : doc.section("args").entries) {
        if (value == "false") continue;
        if (key == "out" && !out_override.empty()) continue;
        args.push_back("--" + key);
        if (value != "true") args.push_back(value);
    }
    if (!out_override.empty()) {
        args.push_back("--out");
        args.push_back(out_override);
    }
    std::vector<char*> argv;
    for (auto& s : args) argv.push_back(s.data());
    return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, char** argv) {
    CLI::App app{"Brain-guided embedding optimization"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic subject and datasets");
    synth->add_option("--regions", sa.regions, "Regions as NAME:SIZE,...")->required();
    synth->add_option("--samples", sa.samples, "Total samples (train + val)")->capture_default_str();
    synth->add_option("--sessions", sa.sessions, "Scanning sessions")->capture_default_str();
    synth->add_option("--noise", sa.noise, "Response noise sigma")->capture_default_str();
    synth->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    synth->add_option("--tokens", sa.tokens, "Embedding tokens")->capture_default_str();
    synth->add_option("--dim", sa.dim, "Embedding width")->capture_default_str();
    synth->add_option("--val-fraction", sa.val_fraction, "Held-out fraction per session")->capture_default_str();
    synth->add_option("--nonlinearity", sa.nonlinearity, "linear or relu")->capture_default_str();
    synth->add_option("--overlap", sa.overlap, "Inner product between planted directions")->capture_default_str();
    synth->add_option("--out", sa.out, "Output directory")->required();

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "Train an encoder");
    trn->add_option("--data", ta.data, "Directory holding train/ and val/")->check(CLI::ExistingDirectory);
    trn->add_option("--train", ta.train_dir, "Training dataset directory")->check(CLI::ExistingDirectory);
    trn->add_option("--val", ta.val_dir, "Validation dataset directory")->check(CLI::ExistingDirectory);
    trn->add_option("--hidden", ta.hidden, "Hidden widths")->capture_default_str();
    trn->add_option("--lr", ta.lr, "AdamW learning rate")->capture_default_str();
    trn->add_option("--max-epochs", ta.max_epochs, "Epoch limit")->capture_default_str();
    trn->add_option("--patience", ta.patience, "Early-stopping patience")->capture_default_str();
    trn->add_option("--batch-size", ta.batch_size, "Mini-batch size")->capture_default_str();
    trn->add_option("--weight-decay", ta.weight_decay, "Decoupled weight decay")->capture_default_str();
    trn->add_option("--seed", ta.seed, "Random seed")->capture_default_str();
    trn->add_option("--out", ta.out, "Checkpoint directory")->required();

    OptimizeArgs oa;
    auto* opt = app.add_subcommand("optimize", "Optimize embeddings under a neural objective");
    opt->add_option("--model", oa.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
    opt->add_option("--atlas", oa.atlas, "Atlas file")->required()->check(CLI::ExistingFile);
    opt->add_option("--objective", oa.objective, "Objective, e.g. \"+FFA -PPA:0.5\"")->required();
    opt->add_option("--steps", oa.steps, "Optimizer steps")->capture_default_str();
    opt->add_option("--lr", oa.lr, "Adam learning rate")->capture_default_str();
    auto* seed_opt = opt->add_option("--seed", oa.seed, "Seed of the random start (first of --num-seeds)")->capture_default_str();
    opt->add_option("--seed-embedding", oa.seed_embedding, "Start from this embedding file")
        ->check(CLI::ExistingFile)
        ->excludes(seed_opt);
    opt->add_option("--num-seeds", oa.num_seeds, "Independent random starts")->capture_default_str();
    opt->add_option("--jobs", oa.jobs, "Parallel runs (capped by NVOLVE_THREADS)")->capture_default_str();
    opt->add_option("--record-every", oa.record_every, "Embedding recording stride")->capture_default_str();
    opt->add_option("--fractions", oa.fractions, "Also sample at these progress fractions");
    opt->add_option("--out", oa.out, "Output directory")->required();

    SampleArgs sma;
    auto* smp = app.add_subcommand("sample", "Sample a trajectory at progress fractions");
    smp->add_option("--trajectory", sma.trajectory, "Trajectory directory")->required()->check(CLI::ExistingDirectory);
    smp->add_option("--fractions", sma.fractions, "Progress fractions in (0, 1]")->capture_default_str();
    smp->add_option("--out", sma.out, "Output directory (default TRAJECTORY/samples)");

    EvalArgs ea;
    auto* evl = app.add_subcommand("eval", "Compare predicted activations of pool and generated embeddings");
    evl->add_option("--model", ea.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
    evl->add_option("--atlas", ea.atlas, "Atlas file")->required()->check(CLI::ExistingFile);
    evl->add_option("--region", ea.regions, "Region to report (repeatable; default all)");
    evl->add_option("--pool", ea.pool, "Pool embeddings (dataset dir or NVTF)")->required()->check(CLI::ExistingPath);
    evl->add_option("--generated", ea.generated, "Generated embeddings (trajectory dirs or NVTF)")
        ->required()
        ->check(CLI::ExistingPath);
    evl->add_option("--k", ea.k, "Top-k size")->capture_default_str();
    evl->add_flag("--plot", ea.plot, "Also write report.svg");
    evl->add_option("--out", ea.out, "Output directory")->required();

    ExportArgs xa;
    auto* exp = app.add_subcommand("export", "Re-export a trajectory for rendering");
    exp->add_option("--trajectory", xa.trajectory, "Trajectory directory")->required()->check(CLI::ExistingDirectory);
    exp->add_option("--dtype", xa.dtype, "f32 or f64")->capture_default_str();
    exp->add_option("--stride", xa.stride, "Keep embeddings every N steps")->capture_default_str();
    exp->add_option("--out", xa.out, "Output directory")->required();

    std::string replay_manifest, replay_out;
    auto* rep = app.add_subcommand("replay", "Re-run a command from its run_manifest.txt");
    rep->add_option("manifest", replay_manifest, "Run manifest")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", replay_out, "Override the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*synth) return cmd_synth(sa, *synth);
        if (*trn) return cmd_train(ta, *trn);
        if (*opt) return cmd_optimize(oa, *opt);
        if (*smp) return cmd_sample(sma, *smp);
        if (*evl) return cmd_eval(ea, *evl);
        if (*exp) return cmd_export(xa, *exp);
        if (*rep) return cmd_replay(replay_manifest, replay_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
