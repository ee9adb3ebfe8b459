#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include <unistd.h>

#include "flowsentinel/binary_io.hpp"
#include "flowsentinel/cli.hpp"
#include "flowsentinel/fixture.hpp"
#include "flowsentinel/training.hpp"

using namespace flowsentinel;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "flowsentinel");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string fmt(float v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

// One fixture, cache and trained binary CNN shared by the whole suite.
class Cli : public ::testing::Test {
protected:
    static inline fs::path root;

    static void SetUpTestSuite() {
        root = fs::temp_directory_path() / ("fs_cli_" + std::to_string(getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        ASSERT_EQ(run({"fixture", "--out", (root / "fx").string()}).code, 0);
        ASSERT_EQ(run({"ingest", "--data", (root / "fx").string(), "--mode", "binary", "--out", s("run")}).code, 0);
        const auto r = run({"train", "--arch", "cnn", "--mode", "binary", "--out", s("run")});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    static void TearDownTestSuite() { fs::remove_all(root); }

    static std::string s(const std::string& rel) { return (root / rel).string(); }
};

}  // namespace

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(cli::exit_code_for(ErrorKind::InvalidConfig), 1);
    EXPECT_EQ(cli::exit_code_for(ErrorKind::KTooLarge), 1);
    EXPECT_EQ(cli::exit_code_for(ErrorKind::FileNotFound), 2);
    EXPECT_EQ(cli::exit_code_for(ErrorKind::EmptyInput), 2);
    EXPECT_EQ(cli::exit_code_for(ErrorKind::MissingColumn), 3);
    EXPECT_EQ(cli::exit_code_for(ErrorKind::CorruptModel), 3);
    EXPECT_EQ(cli::exit_code_for(ErrorKind::NonFiniteLoss), 4);
    EXPECT_EQ(cli::exit_code_for(ErrorKind::ModeMismatch), 5);
}

TEST(ExitCodes, BadArguments) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"train", "--no-such-flag"}).code, 1);
    EXPECT_EQ(run({"train", "--arch", "transformer"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, IngestMalformedRows) {
    FixtureOptions opt;
    opt.rows = 100;
    opt.min_per_class = 2;
    fs::create_directories(root / "small");
    write_fixture_csv(make_fixture(opt), root / "small" / "part.csv", 5);
    const auto r = run({"ingest", "--data", s("small"), "--mode", "multi", "--out", s("small_run")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_dataset_cache(root / "small_run" / "dataset.fsds").rows(), 95u);
    const auto report = json::parse(slurp(root / "small_run" / "ingest_report.json"));
    EXPECT_EQ(report["total_dropped"], 5);
    EXPECT_EQ(report["rows_read"], 100);

    const auto first = slurp(root / "small_run" / "dataset.fsds");
    ASSERT_EQ(run({"ingest", "--data", s("small"), "--mode", "multi", "--out", s("small_run")}).code, 0);
    EXPECT_EQ(slurp(root / "small_run" / "dataset.fsds"), first);
}

TEST_F(Cli, IngestErrors) {
    fs::create_directories(root / "empty");
    auto r = run({"ingest", "--data", s("empty"), "--out", s("x")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("no input files"), std::string::npos);

    EXPECT_EQ(run({"ingest", "--data", s("nope"), "--out", s("x")}).code, 2);

    fs::create_directories(root / "bad");
    {
        std::ofstream f(root / "bad" / "a.csv");
        f << "Rate,label\n1,Benign\n";
    }
    r = run({"ingest", "--data", s("bad"), "--out", s("x")});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("flow_duration"), std::string::npos) << r.err;
}

TEST_F(Cli, SubsampleAtIngest) {
    const auto r = run({"ingest", "--data", s("fx"), "--mode", "multi", "--subsample", "0.1", "--out", s("sub")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto data = read_dataset_cache(root / "sub" / "dataset.fsds");
    const auto full = read_dataset_cache(root / "run" / "dataset.fsds");
    EXPECT_LT(data.rows(), 600u);
    EXPECT_GT(data.rows(), 400u);
    for (auto n : data.class_counts()) EXPECT_GE(n, 1u);
    EXPECT_EQ(full.rows(), 5000u);
    EXPECT_EQ(run({"ingest", "--data", s("fx"), "--subsample", "0", "--out", s("sub")}).code, 1);
}

TEST_F(Cli, SelectCanonicalAndTopK) {
    auto r = run({"select", "--out", s("run")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(root / "run" / "features.txt"), load_feature_list(fs::path(FLOWSENTINEL_DATA_DIR) / "canonical_top20.txt"));
    EXPECT_EQ(lines(root / "run" / "importance.csv").size(), 47u);

    r = run({"select", "--cache", s("run/dataset.fsds"), "--top-k", "5", "--out", s("top5")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(root / "top5" / "features.txt").size(), 5u);

    EXPECT_EQ(run({"select", "--cache", s("run/dataset.fsds"), "--top-k", "21", "--out", s("top5")}).code, 1);
    EXPECT_EQ(run({"select", "--out", s("nothing_here")}).code, 2);
}

TEST_F(Cli, SelectRecomputeIsDeterministic) {
    const std::vector<std::string> base{"select", "--cache", s("run/dataset.fsds"), "--recompute-importance",
                                        "--trees", "20", "--seed", "9"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", s("rc_a")});
    b.insert(b.end(), {"--out", s("rc_b")});
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    EXPECT_EQ(slurp(root / "rc_a" / "features.txt"), slurp(root / "rc_b" / "features.txt"));
    EXPECT_EQ(slurp(root / "rc_a" / "importance.csv"), slurp(root / "rc_b" / "importance.csv"));
    EXPECT_EQ(lines(root / "rc_a" / "features.txt").size(), 20u);
}

TEST_F(Cli, TrainEmitsThreeArtifacts) {
    for (const char* name : {"model.fsnn", "history.csv", "manifest.json"}) EXPECT_TRUE(fs::is_regular_file(root / "run" / name)) << name;
    EXPECT_EQ(lines(root / "run" / "history.csv").size(), 21u);
    const auto m = json::parse(slurp(root / "run" / "manifest.json"));
    EXPECT_EQ(m["config"]["arch"], "cnn");
    EXPECT_EQ(m["config"]["mode"], "binary");
    EXPECT_EQ(m["features"].size(), 20u);
    EXPECT_EQ(m["rows"]["cache"], 5000);
    EXPECT_EQ(m["rows"]["test_split"], 1000);
    EXPECT_EQ(m["dataset"]["hash"], cli::content_hash(root / "run" / "dataset.fsds"));
    EXPECT_EQ(m["model"]["hash"], cli::content_hash(root / "run" / "model.fsnn"));
    const double acc = m["metrics"]["accuracy"];
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 1.0);
}

TEST_F(Cli, TrainIsDeterministicAndReplays) {
    const auto r = run({"train", "--arch", "cnn", "--mode", "binary", "--cache", s("run/dataset.fsds"), "--out", s("again")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(root / "again" / "model.fsnn"), slurp(root / "run" / "model.fsnn"));

    const auto replay = run({"train", "--config", s("run/manifest.json"), "--out", s("replay")});
    ASSERT_EQ(replay.code, 0) << replay.err;
    const auto a = json::parse(slurp(root / "run" / "manifest.json"));
    const auto b = json::parse(slurp(root / "replay" / "manifest.json"));
    EXPECT_EQ(a["metrics"], b["metrics"]);
    EXPECT_EQ(a["model"]["hash"], b["model"]["hash"]);
}

TEST_F(Cli, TrainErrors) {
    EXPECT_EQ(run({"train", "--epochs", "0", "--out", s("run")}).code, 1);
    EXPECT_EQ(run({"train", "--out", s("no_cache")}).code, 2);
    const auto r = run({"train", "--mode", "multi", "--cache", s("run/dataset.fsds"), "--out", s("x")});
    EXPECT_EQ(r.code, 5);

    {
        std::ofstream f(root / "cfg_bad.json");
        f << R"({"epochs": 2, "bogus": 1})";
    }
    EXPECT_EQ(run({"train", "--config", s("cfg_bad.json")}).code, 1);
    EXPECT_EQ(run({"train", "--config", s("cfg_missing.json")}).code, 2);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
    {
        std::ofstream f(root / "cfg.json");
        f << json{{"cache", s("run/dataset.fsds")}, {"arch", "lstm"}, {"epochs", 0}, {"out", s("cfg_out")}}.dump();
    }
    EXPECT_EQ(run({"train", "--config", s("cfg.json")}).code, 1);
    const auto r = run({"train", "--config", s("cfg.json"), "--epochs", "1", "--batch-size", "512"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = json::parse(slurp(root / "cfg_out" / "manifest.json"));
    EXPECT_EQ(m["config"]["arch"], "lstm");
    EXPECT_EQ(m["config"]["epochs"], 1);
    EXPECT_EQ(m["config"]["lr"], 1e-4);
}

TEST_F(Cli, Evaluate) {
    auto r = run({"evaluate", "--model", s("run/model.fsnn"), "--cache", s("run/dataset.fsds"), "--out", s("ev1")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("accuracy"), std::string::npos);
    const auto metrics = json::parse(slurp(root / "ev1" / "metrics.json"));
    ASSERT_TRUE(metrics.contains("accuracy"));
    EXPECT_GE(metrics["accuracy"].get<double>(), 0.0);
    EXPECT_LE(metrics["accuracy"].get<double>(), 1.0);
    EXPECT_EQ(metrics["total"], 1000);
    const auto manifest = json::parse(slurp(root / "run" / "manifest.json"));
    EXPECT_EQ(metrics["accuracy"], manifest["metrics"]["accuracy"]);

    r = run({"evaluate", "--model", s("run/model.fsnn"), "--cache", s("run/dataset.fsds"), "--out", s("ev2")});
    EXPECT_EQ(slurp(root / "ev1" / "metrics.json"), slurp(root / "ev2" / "metrics.json"));

    EXPECT_EQ(run({"evaluate", "--model", s("missing.fsnn"), "--cache", s("run/dataset.fsds")}).code, 2);
}

TEST_F(Cli, EvaluateModeMismatch) {
    ASSERT_EQ(run({"ingest", "--data", s("fx"), "--mode", "multi", "--out", s("multi")}).code, 0);
    const auto r = run({"evaluate", "--model", s("run/model.fsnn"), "--cache", s("multi/dataset.fsds")});
    EXPECT_EQ(r.code, 5);
    EXPECT_NE(r.err.find("binary"), std::string::npos);
    EXPECT_NE(r.err.find("multi"), std::string::npos);
}

TEST_F(Cli, PredictMatchesEvaluation) {
    const auto model = load_model(root / "run" / "model.fsnn");
    const auto data = read_dataset_cache(root / "run" / "dataset.fsds");
    const auto split = stratified_split(data.y, model.metadata.split_fraction, model.metadata.split_seed);
    const auto expected = score(model, model_inputs(model, take_rows(data, split.test)));

    {
        std::ofstream f(root / "test_rows.csv");
        for (std::size_t c = 0; c < data.cols(); ++c) f << data.feature_names[c] << ',';
        f << "label\n";
        for (auto row : split.test) {
            for (float v : data.row(row)) f << fmt(v) << ',';
            f << data.classes[data.y[row]] << '\n';
        }
    }
    const auto r = run({"predict", "--model", s("run/model.fsnn"), "--input", s("test_rows.csv"), "--out", s("pred")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto out = lines(root / "pred" / "predictions.csv");
    ASSERT_EQ(out.size(), split.test.size() + 1);
    EXPECT_EQ(out[0], "row_id,predicted_class,confidence");
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        std::stringstream ss(out[i + 1]);
        std::string id, cls, conf;
        std::getline(ss, id, ',');
        std::getline(ss, cls, ',');
        std::getline(ss, conf, ',');
        EXPECT_EQ(std::stoul(id), i);
        EXPECT_EQ(cls, data.classes[expected.predictions[i]]);
        EXPECT_NEAR(std::stod(conf), expected.probabilities[i], 1e-6);
    }
}

TEST_F(Cli, PredictOneRowAndMissingColumn) {
    const auto data = read_dataset_cache(root / "run" / "dataset.fsds");
    {
        std::ofstream f(root / "one.csv");
        for (std::size_t c = 0; c < data.cols(); ++c) f << (c ? "," : "") << data.feature_names[c];
        f << '\n';
        for (std::size_t c = 0; c < data.cols(); ++c) f << (c ? "," : "") << fmt(data.row(0)[c]);
        f << '\n';
    }
    ASSERT_EQ(run({"predict", "--model", s("run/model.fsnn"), "--input", s("one.csv"), "--out", s("one")}).code, 0);
    EXPECT_EQ(lines(root / "one" / "predictions.csv").size(), 2u);

    {
        std::ofstream f(root / "no_srate.csv");
        bool first = true;
        for (const auto& name : data.feature_names)
            if (name != "Srate") {
                f << (first ? "" : ",") << name;
                first = false;
            }
        f << '\n';
    }
    const auto r = run({"predict", "--model", s("run/model.fsnn"), "--input", s("no_srate.csv"), "--out", s("one")});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("Srate"), std::string::npos);
}

TEST_F(Cli, Inspect) {
    auto r = run({"inspect", s("run/model.fsnn")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("\"architecture\": \"cnn\""), std::string::npos);
    EXPECT_NE(r.out.find("parameters: 6529"), std::string::npos);
    r = run({"inspect", s("run/dataset.fsds")});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("\"rows\": 5000"), std::string::npos);
    EXPECT_EQ(run({"inspect", s("run/manifest.json")}).code, 0);
    EXPECT_EQ(run({"inspect", s("nope.bin")}).code, 2);
}
