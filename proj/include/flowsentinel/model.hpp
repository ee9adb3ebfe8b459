#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowsentinel/dataset.hpp"
#include "flowsentinel/labels.hpp"
#include "flowsentinel/layers.hpp"
#include "flowsentinel/lstm.hpp"
#include "flowsentinel/parameter.hpp"
#include "flowsentinel/rng.hpp"
#include "flowsentinel/tensor.hpp"

namespace flowsentinel {

enum class Architecture : std::uint8_t { CnnIds = 0, LstmIds = 1 };
enum class OutputActivation : std::uint8_t { Sigmoid = 0, Softmax = 1 };

std::string_view to_string(Architecture arch);
/// Accepts "cnn" / "lstm". Throws InvalidConfig.
Architecture parse_architecture(std::string_view text);
std::string_view to_string(OutputActivation act);

/// CnnIds:  conv(f1, k) relu -> pool -> conv(f2, k) relu -> pool -> flatten -> dense(units)
/// LstmIds: lstm(h, sequences) -> dropout -> lstm(h, last) -> dropout -> dense(units)
/// The CNN reads the features as a 1-channel signal, the LSTM as a
/// univariate sequence with one step per feature.
struct ModelSpec {
    Architecture architecture = Architecture::CnnIds;
    ClassificationMode mode = ClassificationMode::Binary;
    std::size_t input_features = 20;
    std::size_t conv1_filters = 32;
    std::size_t conv2_filters = 64;
    std::size_t kernel_size = 3;
    std::size_t pool_size = 2;
    std::size_t lstm_units = 64;
    double dropout_rate = 0.2;
    std::size_t output_units = 1;
    OutputActivation output_activation = OutputActivation::Sigmoid;

    /// Default spec for an architecture and mode (output head derived from mode).
    static ModelSpec make(Architecture arch, ClassificationMode mode);

    /// Throws InvalidSpec.
    void validate() const;
    /// CNN length after the second pool times conv2_filters (192 by default).
    std::size_t cnn_flatten_size() const;
    /// Closed-form count, without building anything.
    std::size_t parameter_count() const;

    bool operator==(const ModelSpec&) const = default;
};

/// Everything needed to run the model on raw feature rows.
struct ModelMetadata {
    std::vector<std::string> feature_names;
    std::vector<std::string> classes;
    std::optional<Normalizer> normalizer;
    std::uint64_t init_seed = 0;
    std::uint64_t split_seed = 0;
    double split_fraction = 0.8;
};

template <class T>
struct NamedParameter {
    std::string name;
    Parameter<T>* param;
};

template <class T>
struct NamedConstParameter {
    std::string name;
    const Parameter<T>* param;
};

template <class T>
struct CnnNet {
    explicit CnnNet(const ModelSpec& spec);
    Conv1d<T> conv1;
    Relu<T> relu1;
    MaxPool1d<T> pool1;
    Conv1d<T> conv2;
    Relu<T> relu2;
    MaxPool1d<T> pool2;
    Dense<T> dense;
    Shape pooled_shape;
};

template <class T>
struct LstmNet {
    explicit LstmNet(const ModelSpec& spec);
    Lstm<T> lstm1;
    Dropout<T> drop1;
    Lstm<T> lstm2;
    Dropout<T> drop2;
    Dense<T> dense;
};

template <class T>
class Model {
public:
    /// Glorot-uniform weights, zero biases, LSTM forget bias 1. Deterministic
    /// under `seed`. Throws InvalidSpec.
    static Model build(const ModelSpec& spec, std::uint64_t seed);

    const ModelSpec& spec() const noexcept { return spec_; }
    ModelMetadata metadata;

    /// Fixed order: conv1.weight, conv1.bias, conv2.weight, conv2.bias,
    /// dense.weight, dense.bias (CNN); lstm1.{w_input,w_recurrent,bias},
    /// lstm2.{...}, dense.{weight,bias} (LSTM).
    std::vector<NamedParameter<T>> parameters();
    std::vector<NamedConstParameter<T>> parameters() const;
    std::size_t parameter_count() const;

    /// Inference on [B x input_features] -> probabilities [B x output_units].
    /// Dropout is inert. Touches no layer caches, so concurrent calls are safe.
    Tensor<T> forward(const Tensor<T>& batch) const;
    /// Probabilities for one sample; same contract as forward().
    std::vector<T> forward_sample(std::span<const T> features) const;
    std::vector<std::uint16_t> predict(const Tensor<T>& batch) const;

    /// Stateful single-sample pass used for training: caches activations and
    /// applies dropout when `training`. Returns probabilities.
    std::vector<T> forward_train(std::span<const T> features, Rng& rng, bool training = true);
    /// Backward from d loss / d logits (pre-activation of the head).
    /// Accumulates into parameter gradients and clears the caches.
    void backward(std::span<const T> grad_logits);
    void zero_grad();

    /// Same architecture and parameters in another precision.
    template <class U>
    Model<U> cast() const;

private:
    template <class>
    friend class Model;
    Model(const ModelSpec& spec, std::variant<CnnNet<T>, LstmNet<T>> net) : spec_(spec), net_(std::move(net)) {}

    std::vector<T> logits_stateless(std::span<const T> features) const;
    void head(std::vector<T>& logits) const;

    ModelSpec spec_;
    std::variant<CnnNet<T>, LstmNet<T>> net_;
};

/// Binary: p >= 0.5 -> 1. Categorical: argmax, ties to the lowest index.
std::vector<std::uint16_t> predict_classes(std::span<const float> probabilities, std::size_t units);
std::vector<std::uint16_t> predict_classes(std::span<const double> probabilities, std::size_t units);

// ---- model file (FSNN) ---------------------------------------------------
//
//   "FSNN" | u8 version (1) | u32 len, JSON spec + metadata
//   | u32 parameter count | per parameter: u32 len name, u8 rank,
//     rank x u32 dim, f32 LE values
//   | u32 CRC-32 of every preceding byte

inline constexpr std::uint8_t kModelFormatVersion = 1;

void save_model(const Model<float>& model, const std::filesystem::path& path);
/// Throws FileNotFound, CorruptModel (bad magic/version/checksum, truncated,
/// parameter names or shapes that disagree with the spec).
Model<float> load_model(const std::filesystem::path& path);

/// The JSON document embedded in a model file.
std::string model_header_json(const Model<float>& model, int indent = -1);

}  // namespace flowsentinel
