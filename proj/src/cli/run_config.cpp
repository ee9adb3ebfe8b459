#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>

#include "flowsentinel/cli.hpp"
#include "flowsentinel/training.hpp"

namespace flowsentinel::cli {

namespace {

using nlohmann::json;

template <class T>
void read(const json& j, const char* key, T& target) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidConfig, std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::FileNotFound:
        case ErrorKind::MissingCache:
        case ErrorKind::EmptyInput:
        case ErrorKind::IoError:
            return kExitMissingInput;
        case ErrorKind::MissingColumn:
        case ErrorKind::UnknownLabel:
        case ErrorKind::InvalidLabel:
        case ErrorKind::CorruptCache:
        case ErrorKind::CorruptModel:
        case ErrorKind::ShapeMismatch:
        case ErrorKind::ClassTooSmall:
            return kExitSchema;
        case ErrorKind::NonFiniteValue:
        case ErrorKind::NonFiniteGradient:
        case ErrorKind::NonFiniteLoss:
            return kExitNumeric;
        case ErrorKind::ModeMismatch:
            return kExitModeMismatch;
        default:
            return kExitConfig;
    }
}

void RunConfig::validate() const {
    if (!(subsample > 0.0 && subsample <= 1.0)) fail(ErrorKind::InvalidConfig, "subsample must lie in (0, 1]");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        fail(ErrorKind::InvalidConfig, "split_fraction must lie in (0, 1)");
    if (top_k == 0) fail(ErrorKind::InvalidConfig, "top_k must be at least 1");
    if (forest_trees == 0) fail(ErrorKind::InvalidConfig, "forest_trees must be at least 1");
    if (out.empty()) fail(ErrorKind::InvalidConfig, "out must not be empty");
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.learning_rate = resolved_learning_rate();
    t.validation_fraction = validation_fraction;
    t.gradient_shards = gradient_shards;
    t.validate();
}

std::string RunConfig::to_json(int indent) const {
    json j;
    j["data"] = data;
    j["cache"] = cache_path().string();
    j["mode"] = mode ? json(std::string(to_string(*mode))) : json(nullptr);
    j["features"] = features;
    j["recompute_importance"] = recompute_importance;
    j["top_k"] = top_k;
    j["forest_trees"] = forest_trees;
    j["forest_max_samples"] = forest_max_samples;
    j["subsample"] = subsample;
    j["split_fraction"] = split_fraction;
    j["split_seed"] = split_seed;
    j["arch"] = std::string(to_string(arch));
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["lr"] = resolved_learning_rate();
    j["validation_fraction"] = validation_fraction;
    j["gradient_shards"] = gradient_shards;
    j["seed"] = seed;
    j["out"] = out;
    return j.dump(indent);
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) fail(ErrorKind::FileNotFound, "config file not found: " + path.string());
    std::ifstream in(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
    // A run manifest carries the resolved config under "config".
    const json& j = doc.contains("config") && doc["config"].is_object() ? doc["config"] : doc;
    if (!j.is_object()) fail(ErrorKind::InvalidConfig, path.string() + ": expected a JSON object");

    static const std::set<std::string> known{
        "data",   "cache",          "mode",       "features",           "recompute_importance", "top_k",
        "forest_trees", "forest_max_samples", "subsample", "split_fraction", "split_seed", "arch",
        "epochs", "batch_size",     "lr",         "validation_fraction", "gradient_shards",     "seed",
        "out"};
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) fail(ErrorKind::InvalidConfig, path.string() + ": unknown key '" + key + "'");

    RunConfig c;
    if (j.contains("data") && j["data"].is_string())
        c.data = {j["data"].get<std::string>()};
    else
        read(j, "data", c.data);
    read(j, "cache", c.cache);
    if (j.contains("mode") && !j["mode"].is_null()) {
        std::string m;
        read(j, "mode", m);
        c.mode = parse_mode(m);
    }
    read(j, "features", c.features);
    read(j, "recompute_importance", c.recompute_importance);
    read(j, "top_k", c.top_k);
    read(j, "forest_trees", c.forest_trees);
    read(j, "forest_max_samples", c.forest_max_samples);
    read(j, "subsample", c.subsample);
    read(j, "split_fraction", c.split_fraction);
    read(j, "split_seed", c.split_seed);
    if (j.contains("arch")) {
        std::string a;
        read(j, "arch", a);
        c.arch = parse_architecture(a);
    }
    read(j, "epochs", c.epochs);
    read(j, "batch_size", c.batch_size);
    if (j.contains("lr") && !j["lr"].is_null()) {
        double lr = 0;
        read(j, "lr", lr);
        c.learning_rate = lr;
    }
    read(j, "validation_fraction", c.validation_fraction);
    read(j, "gradient_shards", c.gradient_shards);
    read(j, "seed", c.seed);
    read(j, "out", c.out);
    return c;
}

std::filesystem::path RunConfig::cache_path() const {
    return cache.empty() ? std::filesystem::path(out) / "dataset.fsds" : std::filesystem::path(cache);
}

double RunConfig::resolved_learning_rate() const {
    return learning_rate ? *learning_rate : TrainConfig::defaults_for(arch).learning_rate;
}

std::string content_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::FileNotFound, "cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + hex;
}

}  // namespace flowsentinel::cli
