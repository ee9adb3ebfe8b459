#include "flowsentinel/model.hpp"

#include <algorithm>
#include <cmath>

#include "flowsentinel/activations.hpp"
#include "flowsentinel/error.hpp"

namespace flowsentinel {

std::string_view to_string(Architecture arch) { return arch == Architecture::CnnIds ? "cnn" : "lstm"; }

Architecture parse_architecture(std::string_view text) {
    if (text == "cnn") return Architecture::CnnIds;
    if (text == "lstm") return Architecture::LstmIds;
    fail(ErrorKind::InvalidConfig, "unknown architecture '" + std::string(text) + "' (expected cnn or lstm)");
}

std::string_view to_string(OutputActivation act) { return act == OutputActivation::Sigmoid ? "sigmoid" : "softmax"; }

ModelSpec ModelSpec::make(Architecture arch, ClassificationMode mode) {
    ModelSpec spec;
    spec.architecture = arch;
    spec.mode = mode;
    const bool binary = mode == ClassificationMode::Binary;
    spec.output_units = binary ? 1 : class_count(mode);
    spec.output_activation = binary ? OutputActivation::Sigmoid : OutputActivation::Softmax;
    return spec;
}

namespace {

std::size_t after_conv_pool(std::size_t length, std::size_t kernel, std::size_t pool) {
    if (length < kernel) return 0;
    return (length - kernel + 1) / pool;
}

}  // namespace

std::size_t ModelSpec::cnn_flatten_size() const {
    const std::size_t p1 = after_conv_pool(input_features, kernel_size, pool_size);
    const std::size_t p2 = after_conv_pool(p1, kernel_size, pool_size);
    return p2 * conv2_filters;
}

void ModelSpec::validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorKind::InvalidSpec, msg); };
    const bool binary = mode == ClassificationMode::Binary;
    const std::size_t want_units = binary ? 1 : class_count(mode);
    if (output_units != want_units)
        bad("mode " + std::string(to_string(mode)) + " needs " + std::to_string(want_units) + " output units, spec has " +
            std::to_string(output_units));
    if (output_activation != (binary ? OutputActivation::Sigmoid : OutputActivation::Softmax))
        bad("mode " + std::string(to_string(mode)) + " needs a " + (binary ? "sigmoid" : "softmax") + " head");
    if (input_features == 0) bad("input_features must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad("dropout_rate must be in [0, 1)");
    if (architecture == Architecture::CnnIds) {
        if (conv1_filters == 0 || conv2_filters == 0 || kernel_size == 0 || pool_size == 0)
            bad("CNN filter, kernel and pool sizes must be positive");
        if (cnn_flatten_size() == 0)
            bad(std::to_string(input_features) + " input features are too few for two conv(k=" +
                std::to_string(kernel_size) + ") + pool(" + std::to_string(pool_size) + ") stages");
    } else if (lstm_units == 0) {
        bad("lstm_units must be positive");
    }
}

std::size_t ModelSpec::parameter_count() const {
    validate();
    if (architecture == Architecture::CnnIds) {
        const std::size_t conv1 = conv1_filters * kernel_size + conv1_filters;
        const std::size_t conv2 = conv2_filters * conv1_filters * kernel_size + conv2_filters;
        const std::size_t dense = cnn_flatten_size() * output_units + output_units;
        return conv1 + conv2 + dense;
    }
    const std::size_t h = lstm_units;
    return 4 * h * (1 + h + 1) + 4 * h * (h + h + 1) + h * output_units + output_units;
}

template <class T>
CnnNet<T>::CnnNet(const ModelSpec& spec)
    : conv1(1, spec.conv1_filters, spec.kernel_size),
      pool1(spec.pool_size),
      conv2(spec.conv1_filters, spec.conv2_filters, spec.kernel_size),
      pool2(spec.pool_size),
      dense(spec.cnn_flatten_size(), spec.output_units),
      pooled_shape{spec.conv2_filters, spec.cnn_flatten_size() / spec.conv2_filters} {}

template <class T>
LstmNet<T>::LstmNet(const ModelSpec& spec)
    : lstm1(1, spec.lstm_units),
      drop1(spec.dropout_rate),
      lstm2(spec.lstm_units, spec.lstm_units),
      drop2(spec.dropout_rate),
      dense(spec.lstm_units, spec.output_units) {}

template <class T>
Model<T> Model<T>::build(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::variant<CnnNet<T>, LstmNet<T>> net = [&]() -> std::variant<CnnNet<T>, LstmNet<T>> {
        if (spec.architecture == Architecture::CnnIds) {
            CnnNet<T> cnn(spec);
            cnn.conv1.init(rng);
            cnn.conv2.init(rng);
            cnn.dense.init(rng);
            return cnn;
        }
        LstmNet<T> lstm(spec);
        lstm.lstm1.init(rng);
        lstm.lstm2.init(rng);
        lstm.dense.init(rng);
        return lstm;
    }();
    Model model(spec, std::move(net));
    model.metadata.init_seed = seed;
    return model;
}

template <class T>
std::vector<NamedParameter<T>> Model<T>::parameters() {
    if (auto* cnn = std::get_if<CnnNet<T>>(&net_))
        return {{"conv1.weight", &cnn->conv1.weight}, {"conv1.bias", &cnn->conv1.bias},
                {"conv2.weight", &cnn->conv2.weight}, {"conv2.bias", &cnn->conv2.bias},
                {"dense.weight", &cnn->dense.weight}, {"dense.bias", &cnn->dense.bias}};
    auto& lstm = std::get<LstmNet<T>>(net_);
    return {{"lstm1.w_input", &lstm.lstm1.w_input}, {"lstm1.w_recurrent", &lstm.lstm1.w_recurrent},
            {"lstm1.bias", &lstm.lstm1.bias},       {"lstm2.w_input", &lstm.lstm2.w_input},
            {"lstm2.w_recurrent", &lstm.lstm2.w_recurrent}, {"lstm2.bias", &lstm.lstm2.bias},
            {"dense.weight", &lstm.dense.weight},   {"dense.bias", &lstm.dense.bias}};
}

template <class T>
std::vector<NamedConstParameter<T>> Model<T>::parameters() const {
    std::vector<NamedConstParameter<T>> out;
    for (auto& [name, p] : const_cast<Model*>(this)->parameters()) out.push_back({name, p});
    return out;
}

template <class T>
std::size_t Model<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.param->size();
    return n;
}

template <class T>
void Model<T>::head(std::vector<T>& logits) const {
    if (spec_.output_activation == OutputActivation::Sigmoid)
        for (auto& v : logits) v = sigmoid(v);
    else
        softmax_inplace(std::span<T>(logits));
}

template <class T>
std::vector<T> Model<T>::logits_stateless(std::span<const T> features) const {
    if (features.size() != spec_.input_features)
        fail(ErrorKind::ShapeMismatch, "model expects " + std::to_string(spec_.input_features) + " features, got " +
                                           std::to_string(features.size()));
    if (const auto* cnn = std::get_if<CnnNet<T>>(&net_)) {
        Tensor<T> x({1, features.size()}, std::vector<T>(features.begin(), features.end()));
        x = maxpool1d_forward(relu(conv1d_forward(x, cnn->conv1.weight.value, cnn->conv1.bias.value)), spec_.pool_size);
        x = maxpool1d_forward(relu(conv1d_forward(x, cnn->conv2.weight.value, cnn->conv2.bias.value)), spec_.pool_size);
        const auto flat = std::move(x).reshaped({x.size()});
        const auto out = dense_forward(flat, cnn->dense.weight.value, cnn->dense.bias.value);
        return out.storage();
    }
    const auto& net = std::get<LstmNet<T>>(net_);
    const std::size_t h = spec_.lstm_units;
    const auto w1 = net.lstm1.weights();
    const auto w2 = net.lstm2.weights();
    Tensor<T> h1({h}), c1({h}), h2({h}), c2({h});
    Tensor<T> x({1});
    // Layer 2 consumes layer 1's output at each step, so both can advance together.
    for (std::size_t t = 0; t < features.size(); ++t) {
        x[0] = features[t];
        std::tie(h1, c1) = lstm_step(x, h1, c1, w1);
        std::tie(h2, c2) = lstm_step(h1, h2, c2, w2);
    }
    return dense_forward(h2, net.dense.weight.value, net.dense.bias.value).storage();
}

template <class T>
std::vector<T> Model<T>::forward_sample(std::span<const T> features) const {
    auto out = logits_stateless(features);
    head(out);
    return out;
}

template <class T>
Tensor<T> Model<T>::forward(const Tensor<T>& batch) const {
    if (batch.rank() != 2 || batch.dim(1) != spec_.input_features)
        fail(ErrorKind::ShapeMismatch, "model expects [B x " + std::to_string(spec_.input_features) + "], got " +
                                           shape_string(batch.shape()));
    const std::size_t rows = batch.dim(0), units = spec_.output_units;
    Tensor<T> out({rows, units});
    for (std::size_t i = 0; i < rows; ++i) {
        const auto p = forward_sample(batch.row(i));
        std::copy(p.begin(), p.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * units));
    }
    return out;
}

template <class T>
std::vector<std::uint16_t> Model<T>::predict(const Tensor<T>& batch) const {
    const auto probs = forward(batch);
    return predict_classes(std::span<const T>(probs.storage()), spec_.output_units);
}

template <class T>
std::vector<T> Model<T>::forward_train(std::span<const T> features, Rng& rng, bool training) {
    if (features.size() != spec_.input_features)
        fail(ErrorKind::ShapeMismatch, "model expects " + std::to_string(spec_.input_features) + " features, got " +
                                           std::to_string(features.size()));
    std::vector<T> logits;
    if (auto* cnn = std::get_if<CnnNet<T>>(&net_)) {
        Tensor<T> x({1, features.size()}, std::vector<T>(features.begin(), features.end()));
        x = cnn->pool1.forward(cnn->relu1.forward(cnn->conv1.forward(x)));
        x = cnn->pool2.forward(cnn->relu2.forward(cnn->conv2.forward(x)));
        logits = cnn->dense.forward(std::move(x).reshaped({cnn->dense.weight.shape()[1]})).storage();
    } else {
        auto& net = std::get<LstmNet<T>>(net_);
        Tensor<T> seq({features.size(), 1}, std::vector<T>(features.begin(), features.end()));
        auto s1 = net.drop1.forward(net.lstm1.forward(seq, true), rng, training);
        auto s2 = net.drop2.forward(net.lstm2.forward(s1, false), rng, training);
        logits = net.dense.forward(s2).storage();
    }
    head(logits);
    return logits;
}

template <class T>
void Model<T>::backward(std::span<const T> grad_logits) {
    if (grad_logits.size() != spec_.output_units)
        fail(ErrorKind::ShapeMismatch, "backward: expected " + std::to_string(spec_.output_units) + " logit gradients");
    Tensor<T> g({grad_logits.size()}, std::vector<T>(grad_logits.begin(), grad_logits.end()));
    if (auto* cnn = std::get_if<CnnNet<T>>(&net_)) {
        auto x = cnn->dense.backward(g).reshaped(cnn->pooled_shape);
        x = cnn->conv2.backward(cnn->relu2.backward(cnn->pool2.backward(x)));
        (void)cnn->conv1.backward(cnn->relu1.backward(cnn->pool1.backward(x)));
        return;
    }
    auto& net = std::get<LstmNet<T>>(net_);
    auto x = net.drop2.backward(net.dense.backward(g));
    x = net.drop1.backward(net.lstm2.backward(x));
    (void)net.lstm1.backward(x);
}

template <class T>
void Model<T>::zero_grad() {
    for (auto& p : parameters()) p.param->zero_grad();
}

template <class T>
template <class U>
Model<U> Model<T>::cast() const {
    Model<U> out = Model<U>::build(spec_, metadata.init_seed);
    out.metadata = metadata;
    const auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i].param->value = src[i].param->value.template cast<U>();
    return out;
}

namespace {

template <class T>
std::vector<std::uint16_t> classes_from(std::span<const T> probs, std::size_t units) {
    if (units == 0 || probs.size() % units != 0)
        fail(ErrorKind::ShapeMismatch, "probability buffer is not a whole number of rows");
    std::vector<std::uint16_t> out(probs.size() / units);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto row = probs.subspan(i * units, units);
        if (units == 1) {
            out[i] = row[0] >= T(0.5) ? 1 : 0;
        } else {
            // max_element returns the first maximum: ties go to the lowest index.
            out[i] = static_cast<std::uint16_t>(std::max_element(row.begin(), row.end()) - row.begin());
        }
    }
    return out;
}

}  // namespace

std::vector<std::uint16_t> predict_classes(std::span<const float> probabilities, std::size_t units) {
    return classes_from(probabilities, units);
}

std::vector<std::uint16_t> predict_classes(std::span<const double> probabilities, std::size_t units) {
    return classes_from(probabilities, units);
}

template struct CnnNet<float>;
template struct CnnNet<double>;
template struct LstmNet<float>;
template struct LstmNet<double>;
template class Model<float>;
template class Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace flowsentinel
