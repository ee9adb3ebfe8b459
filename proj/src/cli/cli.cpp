#include "flowsentinel/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "flowsentinel/binary_io.hpp"
#include "flowsentinel/csv.hpp"
#include "flowsentinel/dataset.hpp"
#include "flowsentinel/fixture.hpp"
#include "flowsentinel/forest.hpp"
#include "flowsentinel/kernels.hpp"
#include "flowsentinel/training.hpp"

namespace flowsentinel::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Flag values as parsed; unset flags leave the config untouched.
struct Flags {
    std::string config;
    std::vector<std::string> data;
    std::string cache;
    std::string mode;
    std::string arch;
    std::string features;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> split_seed;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<double> lr;
    std::optional<std::size_t> top_k;
    std::optional<std::size_t> trees;
    std::optional<double> subsample;
    bool recompute = false;
    std::string out;

    std::string model;
    std::string input;
    std::optional<std::size_t> rows;
    std::size_t malformed = 0;
    std::string path;
};

void add_pipeline_flags(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "JSON run config or run manifest; flags override it");
    cmd.add_option("--data", f.data, "CSV files or directories");
    cmd.add_option("--cache", f.cache, "Dataset cache (default <out>/dataset.fsds)");
    cmd.add_option("--mode", f.mode, "binary | grouped | multi");
    cmd.add_option("--arch", f.arch, "cnn | lstm");
    cmd.add_option("--features", f.features, "Feature list file, or 'canonical'");
    cmd.add_option("--seed", f.seed, "Seed for subsampling, forest, initialization and training");
    cmd.add_option("--split-seed", f.split_seed, "Seed of the train/test split");
    cmd.add_option("--epochs", f.epochs);
    cmd.add_option("--batch-size", f.batch_size);
    cmd.add_option("--lr", f.lr, "Learning rate (default 1e-3 cnn, 1e-4 lstm)");
    cmd.add_option("--top-k", f.top_k, "Number of features to keep");
    cmd.add_option("--trees", f.trees, "Random forest size for importance ranking");
    cmd.add_flag("--recompute-importance", f.recompute, "Rank features with a random forest instead of the canonical list");
    cmd.add_option("--subsample", f.subsample, "Per-class sampling fraction at ingest, e.g. 0.1");
    cmd.add_option("--out", f.out, "Output directory");
}

RunConfig resolve(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);
    if (!f.data.empty()) c.data = f.data;
    if (!f.cache.empty()) c.cache = f.cache;
    if (!f.mode.empty()) c.mode = parse_mode(f.mode);
    if (!f.arch.empty()) c.arch = parse_architecture(f.arch);
    if (!f.features.empty()) c.features = f.features;
    if (f.seed) c.seed = *f.seed;
    if (f.split_seed) c.split_seed = *f.split_seed;
    if (f.epochs) c.epochs = *f.epochs;
    if (f.batch_size) c.batch_size = *f.batch_size;
    if (f.lr) c.learning_rate = *f.lr;
    if (f.top_k) c.top_k = *f.top_k;
    if (f.trees) c.forest_trees = *f.trees;
    if (f.subsample) c.subsample = *f.subsample;
    if (f.recompute) c.recompute_importance = true;
    if (!f.out.empty()) c.out = f.out;
    c.validate();
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::IoError, "write failed: " + path.string());
}

FlowDataset load_cache(const RunConfig& c) {
    const auto path = c.cache_path();
    if (!fs::is_regular_file(path))
        fail(ErrorKind::FileNotFound, "missing cache " + path.string() + " (run `flowsentinel ingest` first)");
    return read_dataset_cache(path);
}

std::vector<std::string> feature_list(const RunConfig& c) {
    if (c.features == "canonical") return canonical_top20();
    if (!fs::is_regular_file(c.features)) fail(ErrorKind::FileNotFound, "feature list not found: " + c.features);
    auto names = load_feature_list(c.features);
    if (names.empty()) fail(ErrorKind::EmptyInput, "feature list is empty: " + c.features);
    return names;
}

json metrics_summary(const MetricsReport& r) {
    return {{"accuracy", r.accuracy},
            {"loss", r.loss},
            {"total", r.total},
            {"macro", {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}}},
            {"weighted", {{"precision", r.weighted.precision}, {"recall", r.weighted.recall}, {"f1", r.weighted.f1}}}};
}

// ---- commands ---------------------------------------------------------------

int cmd_fixture(const Flags& f, std::ostream& out) {
    FixtureOptions opt;
    if (f.rows) opt.rows = *f.rows;
    if (f.seed) opt.seed = *f.seed;
    const fs::path dir = f.out.empty() ? "fixture" : f.out;
    fs::create_directories(dir);
    const auto table = make_fixture(opt);
    const auto path = dir / "fixture.csv";
    write_fixture_csv(table, path, f.malformed);
    out << "wrote " << table.rows() << " rows (" << f.malformed << " malformed) to " << path.string() << "\n";
    return kExitOk;
}

int cmd_ingest(const RunConfig& c, std::ostream& out) {
    std::vector<fs::path> paths;
    for (const auto& entry : c.data) {
        if (fs::is_directory(entry)) {
            for (auto& p : list_csv_files(entry)) paths.push_back(p);
        } else if (fs::is_regular_file(entry)) {
            paths.emplace_back(entry);
        } else {
            fail(ErrorKind::FileNotFound, "input not found: " + entry);
        }
    }
    if (paths.empty()) fail(ErrorKind::EmptyInput, "no input files");

    CsvOptions options;
    options.schema = ciciot2023_feature_columns();
    auto [table, report] = load_csv(paths, options);
    const auto mode = c.mode.value_or(ClassificationMode::Binary);
    const auto vocab = build_vocabulary(table.label_names, mode);
    auto data = label_records(table, vocab, report);
    if (c.subsample < 1.0) {
        Rng rng(c.seed);
        data = subsample(data, c.subsample, rng, &report);
    }
    report.rows_retained = data.rows();
    report.class_histogram.clear();
    const auto counts = data.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k) report.class_histogram[data.classes[k]] = counts[k];

    const auto cache = c.cache_path();
    if (cache.has_parent_path()) fs::create_directories(cache.parent_path());
    write_dataset_cache(cache, data);

    json j;
    j["files"] = report.files;
    j["mode"] = std::string(to_string(mode));
    j["subsample"] = c.subsample;
    j["seed"] = c.seed;
    j["rows_read"] = report.rows_read;
    j["rows_retained"] = report.rows_retained;
    j["rows_dropped"] = report.rows_dropped;
    j["total_dropped"] = report.total_dropped();
    j["class_histogram"] = report.class_histogram;
    j["notes"] = report.notes;
    j["cache"] = cache.string();
    j["cache_hash"] = content_hash(cache);
    write_text(fs::path(c.out) / "ingest_report.json", j.dump(2) + "\n");

    out << "ingested " << report.rows_read << " rows from " << paths.size() << " file(s); kept " << data.rows()
        << ", dropped " << report.total_dropped() << "\n";
    for (const auto& [reason, n] : report.rows_dropped) out << "  dropped " << n << " (" << reason << ")\n";
    out << "cache: " << cache.string() << "\n";
    return kExitOk;
}

int cmd_select(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto data = load_cache(c);
    ForestConfig fc;
    fc.n_trees = c.forest_trees;
    fc.seed = c.seed;
    fc.max_samples = c.forest_max_samples;
    err << "ranking " << data.cols() << " features with " << fc.n_trees << " trees on " << data.rows() << " rows\n";
    const auto ranking = rank_features(data, fc);

    std::vector<std::string> chosen;
    if (c.recompute_importance) {
        chosen = select_top_k(ranking, c.top_k);
    } else {
        const auto& canonical = canonical_top20();
        if (c.top_k > canonical.size())
            fail(ErrorKind::KTooLarge, "top_k " + std::to_string(c.top_k) + " exceeds the " +
                                           std::to_string(canonical.size()) + " canonical features");
        chosen.assign(canonical.begin(), canonical.begin() + static_cast<std::ptrdiff_t>(c.top_k));
        for (const auto& name : chosen)
            if (std::find(data.feature_names.begin(), data.feature_names.end(), name) == data.feature_names.end())
                fail(ErrorKind::MissingColumn, "cache has no column '" + name + "'");
    }

    const fs::path dir = c.out;
    fs::create_directories(dir);
    std::string text;
    for (const auto& name : chosen) text += name + "\n";
    write_text(dir / "features.txt", text);
    write_importance_csv(ranking, dir / "importance.csv");
    out << (c.recompute_importance ? "recomputed" : "canonical") << " top-" << chosen.size() << " features -> "
        << (dir / "features.txt").string() << "\n";
    if (ranking.degenerate) err << "warning: forest made no splits; importances are all zero\n";
    return kExitOk;
}

int cmd_train(RunConfig c, std::ostream& out, std::ostream& err) {
    const auto data = load_cache(c);
    if (c.mode && *c.mode != data.mode)
        fail(ErrorKind::ModeMismatch, "requested mode " + std::string(to_string(*c.mode)) + " but the cache is " +
                                          std::string(to_string(data.mode)));
    c.mode = data.mode;
    const auto features = feature_list(c);
    const auto prep = prepare_data(data, features, c.split_fraction, c.split_seed);

    auto spec = ModelSpec::make(c.arch, data.mode);
    spec.input_features = features.size();
    auto model = Model<float>::build(spec, c.seed);
    model.metadata.feature_names = features;
    model.metadata.classes = data.classes;
    model.metadata.normalizer = prep.normalizer;
    model.metadata.init_seed = c.seed;
    model.metadata.split_seed = c.split_seed;
    model.metadata.split_fraction = c.split_fraction;

    TrainConfig tc = TrainConfig::defaults_for(c.arch);
    tc.epochs = c.epochs;
    tc.batch_size = c.batch_size;
    tc.learning_rate = c.resolved_learning_rate();
    tc.seed = c.seed;
    tc.validation_fraction = c.validation_fraction;
    tc.gradient_shards = c.gradient_shards;

    err << "training " << to_string(c.arch) << "/" << to_string(data.mode) << " on " << prep.train.rows()
        << " rows, " << features.size() << " features\n";
    const auto history = train(model, prep.train, tc, [&](const EpochRecord& r) {
        char line[160];
        std::snprintf(line, sizeof line, "epoch %zu/%zu  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f  (%.1fs)\n",
                      r.epoch, tc.epochs, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.seconds);
        err << line << std::flush;
    });
    const auto metrics = evaluate(model, prep.test);

    const fs::path dir = c.out;
    fs::create_directories(dir);
    const auto model_path = dir / "model.fsnn";
    save_model(model, model_path);
    export_history(history, dir / "history.csv");

    json m;
    m["tool"] = "flowsentinel";
    m["version"] = FLOWSENTINEL_VERSION;
    m["command"] = "train";
    m["config"] = json::parse(c.to_json());
    m["seeds"] = {{"init", c.seed}, {"train", c.seed}, {"split", c.split_seed}};
    m["kernels"] = std::string(kernels::to_string(kernels::active_isa()));
    m["dataset"] = {{"cache", c.cache_path().string()},
                    {"hash", content_hash(c.cache_path())},
                    {"mode", std::string(to_string(data.mode))},
                    {"classes", data.classes}};
    m["rows"] = {{"cache", data.rows()},
                 {"train_split", prep.train.rows()},
                 {"test_split", prep.test.rows()},
                 {"fit", history.train_rows},
                 {"validation", history.validation_rows}};
    m["features"] = features;
    m["model"] = {{"path", model_path.string()},
                  {"hash", content_hash(model_path)},
                  {"parameter_count", model.parameter_count()}};
    const auto& last = history.epochs.back();
    m["history"] = {{"epochs", history.epochs.size()},
                    {"optimizer_steps", history.optimizer_steps},
                    {"final_train_loss", last.train_loss},
                    {"final_train_accuracy", last.train_accuracy},
                    {"final_val_loss", last.val_loss},
                    {"final_val_accuracy", last.val_accuracy}};
    m["metrics"] = metrics_summary(metrics);
    write_text(dir / "manifest.json", m.dump(2) + "\n");

    char line[128];
    std::snprintf(line, sizeof line, "test accuracy %.4f  macro F1 %.4f  (%llu rows)\n", metrics.accuracy,
                  metrics.macro.f1, static_cast<unsigned long long>(metrics.total));
    out << line;
    out << "artifacts: " << model_path.string() << ", " << (dir / "history.csv").string() << ", "
        << (dir / "manifest.json").string() << "\n";
    return kExitOk;
}

Model<float> open_model(const std::string& path) {
    if (path.empty()) fail(ErrorKind::InvalidConfig, "--model is required");
    return load_model(path);
}

int cmd_evaluate(const RunConfig& c, const Flags& f, std::ostream& out) {
    const auto model = open_model(f.model);
    const auto data = load_cache(c);
    if (model.spec().mode != data.mode)
        fail(ErrorKind::ModeMismatch, "model is " + std::string(to_string(model.spec().mode)) + " but the cache is " +
                                          std::string(to_string(data.mode)));
    if (model.metadata.classes != data.classes)
        fail(ErrorKind::ModeMismatch, "model and cache class lists differ");

    const auto split = stratified_split(data.y, model.metadata.split_fraction, model.metadata.split_seed);
    const auto test = model_inputs(model, take_rows(data, split.test));
    const auto report = evaluate(model, test);
    out << report.to_table();
    if (!f.out.empty() || !f.config.empty()) {
        const auto path = fs::path(c.out) / "metrics.json";
        write_text(path, report.to_json() + "\n");
        out << "metrics: " << path.string() << "\n";
    }
    return kExitOk;
}

int cmd_predict(const RunConfig& c, const Flags& f, std::ostream& out, std::ostream& err) {
    const auto model = open_model(f.model);
    if (f.input.empty()) fail(ErrorKind::InvalidConfig, "--input is required");
    std::ifstream in(f.input, std::ios::binary);
    if (!fs::is_regular_file(f.input) || !in) fail(ErrorKind::FileNotFound, "input not found: " + f.input);

    const auto& names = model.metadata.feature_names;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::EmptyInput, f.input + ": no header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    std::vector<std::size_t> position;
    for (const auto& name : names) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) fail(ErrorKind::MissingColumn, f.input + ": missing feature column '" + name + "'");
        position.push_back(static_cast<std::size_t>(it - header.begin()));
    }

    FlowDataset rows;
    rows.mode = model.spec().mode;
    rows.feature_names = names;
    rows.classes = model.metadata.classes;
    std::vector<std::size_t> ids;
    std::size_t skipped = 0;
    // row_id counts non-empty data lines from 0, skipped ones included.
    for (std::size_t next_id = 0; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t row_id = next_id++;
        const auto fields = split_csv_line(line);
        std::vector<float> values;
        bool ok = fields.size() == header.size();
        for (std::size_t k = 0; ok && k < position.size(); ++k) {
            const auto& s = fields[position[k]];
            float v = 0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            ok = r.ec == std::errc{} && r.ptr == s.data() + s.size() && std::isfinite(v);
            values.push_back(v);
        }
        if (!ok) {
            ++skipped;
            continue;
        }
        rows.X.insert(rows.X.end(), values.begin(), values.end());
        rows.y.push_back(0);
        ids.push_back(row_id);
    }
    if (skipped) err << "warning: skipped " << skipped << " unparseable row(s)\n";

    const fs::path dir = f.out.empty() && f.config.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    const auto path = dir / "predictions.csv";
    std::string csv = "row_id,predicted_class,confidence\n";
    if (!ids.empty()) {
        const auto scored = score(model, model_inputs(model, rows));
        const std::size_t units = model.spec().output_units;
        char buf[64];
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto cls = scored.predictions[i];
            const double confidence =
                units == 1 ? scored.probabilities[i] : scored.probabilities[i * units + cls];
            std::snprintf(buf, sizeof buf, "%.6f", confidence);
            csv += std::to_string(ids[i]) + ',' + rows.classes[cls] + ',' + buf + '\n';
        }
    }
    write_text(path, csv);
    out << "wrote " << ids.size() << " prediction(s) to " << path.string() << "\n";
    return kExitOk;
}

int cmd_inspect(const Flags& f, std::ostream& out) {
    if (!fs::is_regular_file(f.path)) fail(ErrorKind::FileNotFound, "not found: " + f.path);
    std::ifstream in(f.path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    const std::string tag(magic, static_cast<std::size_t>(in.gcount()));
    if (tag == "FSNN") {
        const auto model = load_model(f.path);
        out << model_header_json(model, 2) << "\n";
        for (const auto& [name, p] : model.parameters())
            out << "  " << name << " " << shape_string(p->shape()) << "\n";
        out << "parameters: " << model.parameter_count() << "\n";
        return kExitOk;
    }
    if (tag == "FSDS") {
        const auto data = read_dataset_cache(f.path);
        json j;
        j["mode"] = std::string(to_string(data.mode));
        j["rows"] = data.rows();
        j["features"] = data.feature_names;
        const auto counts = data.class_counts();
        json hist = json::object();
        for (std::size_t k = 0; k < counts.size(); ++k) hist[data.classes[k]] = counts[k];
        j["class_histogram"] = hist;
        j["hash"] = content_hash(f.path);
        out << j.dump(2) << "\n";
        return kExitOk;
    }
    in.seekg(0);
    try {
        out << json::parse(in).dump(2) << "\n";
    } catch (const json::exception&) {
        fail(ErrorKind::CorruptCache, f.path + ": not a model, dataset cache or JSON document");
    }
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flow-based intrusion detection: ingest, select, train, evaluate, predict", "flowsentinel"};
    app.set_version_flag("--version", FLOWSENTINEL_VERSION);
    app.require_subcommand(1);
    Flags f;

    auto* fixture = app.add_subcommand("fixture", "Write the seeded synthetic 34-class CSV fixture");
    fixture->add_option("--out", f.out, "Output directory (default ./fixture)");
    fixture->add_option("--rows", f.rows, "Row count (default 5000)");
    fixture->add_option("--seed", f.seed, "Generator seed (default 2023)");
    fixture->add_option("--malformed", f.malformed, "Rows to corrupt on purpose");

    auto* ingest = app.add_subcommand("ingest", "Parse CSVs, map labels and write the dataset cache");
    auto* select = app.add_subcommand("select", "Write the feature list and the importance ranking");
    auto* trainc = app.add_subcommand("train", "Train a model; writes model, history and manifest");
    auto* evaluatec = app.add_subcommand("evaluate", "Score a model on the held-out split of a cache");
    auto* predict = app.add_subcommand("predict", "Classify the rows of a CSV file");
    for (auto* cmd : {ingest, select, trainc, evaluatec, predict}) add_pipeline_flags(*cmd, f);
    for (auto* cmd : {evaluatec, predict}) cmd->add_option("--model", f.model, "Model file (.fsnn)");
    predict->add_option("--input", f.input, "CSV with the model's feature columns");

    auto* inspect = app.add_subcommand("inspect", "Describe a model, dataset cache or JSON file");
    inspect->add_option("path", f.path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (fixture->parsed()) return cmd_fixture(f, out);
        if (inspect->parsed()) return cmd_inspect(f, out);
        const auto config = resolve(f);
        if (ingest->parsed()) return cmd_ingest(config, out);
        if (select->parsed()) return cmd_select(config, out, err);
        if (trainc->parsed()) return cmd_train(config, out, err);
        if (evaluatec->parsed()) return cmd_evaluate(config, f, out);
        if (predict->parsed()) return cmd_predict(config, f, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace flowsentinel::cli
