#include <json.hpp>

#include "flowsentinel/binary_io.hpp"
#include "flowsentinel/error.hpp"
#include "flowsentinel/model.hpp"

namespace flowsentinel {

namespace {

using nlohmann::json;

json stats_json(const Normalizer& norm) {
    json min = json::array(), max = json::array(), mean = json::array(), std_dev = json::array();
    for (const auto& s : norm.stats) {
        min.push_back(s.min);
        max.push_back(s.max);
        mean.push_back(s.mean);
        std_dev.push_back(s.std);
    }
    return {{"scaling", to_string(norm.scaling)}, {"min", min}, {"max", max}, {"mean", mean}, {"std", std_dev}};
}

Normalizer stats_from_json(const json& j) {
    Normalizer norm;
    norm.scaling = parse_scaling(j.at("scaling").get<std::string>());
    const auto& min = j.at("min");
    const auto& max = j.at("max");
    const auto& mean = j.at("mean");
    const auto& std_dev = j.at("std");
    if (max.size() != min.size() || mean.size() != min.size() || std_dev.size() != min.size())
        fail(ErrorKind::CorruptModel, "normalizer arrays differ in length");
    for (std::size_t i = 0; i < min.size(); ++i)
        norm.stats.push_back({min[i].get<double>(), max[i].get<double>(), mean[i].get<double>(), std_dev[i].get<double>()});
    return norm;
}

json header_json(const Model<float>& model) {
    const auto& s = model.spec();
    json j;
    j["format"] = "flowsentinel-model";
    j["writer_version"] = FLOWSENTINEL_VERSION;
    j["architecture"] = to_string(s.architecture);
    j["mode"] = to_string(s.mode);
    j["input_features"] = s.input_features;
    j["conv1_filters"] = s.conv1_filters;
    j["conv2_filters"] = s.conv2_filters;
    j["kernel_size"] = s.kernel_size;
    j["pool_size"] = s.pool_size;
    j["lstm_units"] = s.lstm_units;
    j["dropout_rate"] = s.dropout_rate;
    j["output_units"] = s.output_units;
    j["output_activation"] = to_string(s.output_activation);
    j["parameter_count"] = model.parameter_count();
    const auto& m = model.metadata;
    j["feature_names"] = m.feature_names;
    j["classes"] = m.classes;
    j["normalizer"] = m.normalizer ? stats_json(*m.normalizer) : json(nullptr);
    j["init_seed"] = m.init_seed;
    j["split"] = {{"seed", m.split_seed}, {"fraction", m.split_fraction}};
    return j;
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.architecture = parse_architecture(j.at("architecture").get<std::string>());
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.input_features = j.at("input_features").get<std::size_t>();
    s.conv1_filters = j.at("conv1_filters").get<std::size_t>();
    s.conv2_filters = j.at("conv2_filters").get<std::size_t>();
    s.kernel_size = j.at("kernel_size").get<std::size_t>();
    s.pool_size = j.at("pool_size").get<std::size_t>();
    s.lstm_units = j.at("lstm_units").get<std::size_t>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.output_units = j.at("output_units").get<std::size_t>();
    const auto act = j.at("output_activation").get<std::string>();
    if (act != "sigmoid" && act != "softmax") fail(ErrorKind::CorruptModel, "unknown output activation '" + act + "'");
    s.output_activation = act == "sigmoid" ? OutputActivation::Sigmoid : OutputActivation::Softmax;
    return s;
}

}  // namespace

std::string model_header_json(const Model<float>& model, int indent) { return header_json(model).dump(indent); }

void save_model(const Model<float>& model, const std::filesystem::path& path) {
    ByteWriter w;
    w.raw("FSNN");
    w.u8(kModelFormatVersion);
    w.str(header_json(model).dump());
    const auto params = model.parameters();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, p] : params) {
        w.str(name);
        w.u8(static_cast<std::uint8_t>(p->value.rank()));
        for (auto d : p->shape()) w.u32(static_cast<std::uint32_t>(d));
        for (float v : p->value.data()) w.f32(v);
    }
    w.u32(crc32(w.bytes()));
    write_file_bytes(path, w.bytes());
}

Model<float> load_model(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) fail(ErrorKind::FileNotFound, "model file not found: " + path.string());
    const auto bytes = read_file_bytes(path);
    const std::string where = path.string() + ": ";
    if (bytes.size() < 9) fail(ErrorKind::CorruptModel, where + "file too short");
    ByteReader r(bytes, ErrorKind::CorruptModel);
    if (r.raw(4) != "FSNN") fail(ErrorKind::CorruptModel, where + "bad magic");
    const auto version = r.u8();
    if (version != kModelFormatVersion)
        fail(ErrorKind::CorruptModel, where + "unsupported format version " + std::to_string(version));

    const std::span<const std::uint8_t> body(bytes.data(), bytes.size() - 4);
    ByteReader trailer(std::span<const std::uint8_t>(bytes).subspan(bytes.size() - 4), ErrorKind::CorruptModel);
    if (crc32(body) != trailer.u32()) fail(ErrorKind::CorruptModel, where + "checksum mismatch");

    ByteReader in(body, ErrorKind::CorruptModel);
    (void)in.raw(5);
    json header;
    ModelSpec spec;
    try {
        header = json::parse(in.str());
        spec = spec_from_json(header);
    } catch (const json::exception& e) {
        fail(ErrorKind::CorruptModel, where + "bad header: " + e.what());
    } catch (const Error& e) {
        fail(ErrorKind::CorruptModel, where + "bad header: " + e.what());
    }

    Model<float> model = [&] {
        try {
            return Model<float>::build(spec, header.value("init_seed", std::uint64_t{0}));
        } catch (const Error& e) {
            fail(ErrorKind::CorruptModel, where + e.what());
        }
    }();
    try {
        auto& m = model.metadata;
        m.feature_names = header.at("feature_names").get<std::vector<std::string>>();
        m.classes = header.at("classes").get<std::vector<std::string>>();
        if (!header.at("normalizer").is_null()) m.normalizer = stats_from_json(header.at("normalizer"));
        m.split_seed = header.at("split").at("seed").get<std::uint64_t>();
        m.split_fraction = header.at("split").at("fraction").get<double>();
    } catch (const json::exception& e) {
        fail(ErrorKind::CorruptModel, where + "bad header: " + e.what());
    } catch (const Error& e) {
        fail(ErrorKind::CorruptModel, where + "bad header: " + e.what());
    }

    auto params = model.parameters();
    if (in.u32() != params.size()) fail(ErrorKind::CorruptModel, where + "parameter count disagrees with spec");
    for (auto& [name, p] : params) {
        const auto stored = in.str();
        if (stored != name) fail(ErrorKind::CorruptModel, where + "expected parameter '" + name + "', found '" + stored + "'");
        const auto rank = in.u8();
        Shape shape;
        for (std::uint8_t d = 0; d < rank; ++d) shape.push_back(in.u32());
        if (shape != p->shape())
            fail(ErrorKind::CorruptModel, where + "parameter '" + name + "' has shape " + shape_string(p->shape()) +
                                              " in the spec but a different shape in the file");
        for (auto& v : p->value.data()) v = in.f32();
    }
    if (in.remaining() != 0) fail(ErrorKind::CorruptModel, where + "trailing bytes after parameters");
    return model;
}

}  // namespace flowsentinel
