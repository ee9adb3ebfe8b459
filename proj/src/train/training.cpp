#include "flowsentinel/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "flowsentinel/adam.hpp"
#include "flowsentinel/error.hpp"
#include "flowsentinel/losses.hpp"
#include "flowsentinel/parallel.hpp"

namespace flowsentinel {

namespace {

// Substream ids under Rng(config.seed).
constexpr std::uint64_t kValidationStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kDropoutStream = 3;

void check_compatible(const ModelSpec& spec, const FlowDataset& data, const char* what) {
    if (data.mode != spec.mode)
        fail(ErrorKind::ModeMismatch, std::string(what) + ": model is " + std::string(to_string(spec.mode)) +
                                          " but the data is " + std::string(to_string(data.mode)));
    const std::size_t classes = spec.output_activation == OutputActivation::Sigmoid ? 2 : spec.output_units;
    if (data.num_classes() != classes)
        fail(ErrorKind::ModeMismatch, std::string(what) + ": model has " + std::to_string(classes) +
                                          " classes, data has " + std::to_string(data.num_classes()));
    if (data.cols() != spec.input_features)
        fail(ErrorKind::ShapeMismatch, std::string(what) + ": model expects " + std::to_string(spec.input_features) +
                                           " features, data has " + std::to_string(data.cols()));
}

struct SampleResult {
    double loss;
    bool correct;
};

// Loss and d loss / d logits for one sample; the head is sigmoid + BCE or
// softmax + sparse CE, so both gradients reduce to p - target.
SampleResult sample_loss(std::span<const float> probs, std::uint16_t y, bool binary, std::vector<float>& grad) {
    grad.assign(probs.begin(), probs.end());
    if (binary) {
        grad[0] -= static_cast<float>(y);
        const bool predicted = probs[0] >= 0.5f;
        return {binary_cross_entropy(static_cast<double>(probs[0]), y), predicted == (y == 1)};
    }
    grad[y] -= 1.0f;
    const auto pred = predict_classes(probs, probs.size());
    return {sparse_categorical_cross_entropy<float>(probs, y), pred[0] == y};
}

void copy_values(const Model<float>& from, Model<float>& to) {
    const auto src = from.parameters();
    auto dst = to.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i].param->value = src[i].param->value;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

PreparedData prepare_data(const FlowDataset& data, const std::vector<std::string>& features, double train_fraction,
                          std::uint64_t split_seed, Scaling scaling) {
    PreparedData out;
    const auto selected = select_columns(data, features);
    out.split = stratified_split(selected.y, train_fraction, split_seed);
    out.normalizer = fit_normalizer(selected, out.split.train, scaling);
    out.train = apply_normalizer(take_rows(selected, out.split.train), out.normalizer);
    out.test = apply_normalizer(take_rows(selected, out.split.test), out.normalizer);
    return out;
}

FlowDataset model_inputs(const Model<float>& model, const FlowDataset& data) {
    const auto& names = model.metadata.feature_names;
    auto selected = names.empty() ? data : select_columns(data, names);
    if (model.metadata.normalizer) selected = apply_normalizer(selected, *model.metadata.normalizer);
    return selected;
}

TrainConfig TrainConfig::defaults_for(Architecture arch) {
    TrainConfig c;
    c.learning_rate = arch == Architecture::LstmIds ? 1e-4 : 1e-3;
    return c;
}

void TrainConfig::validate() const {
    if (epochs < 1) fail(ErrorKind::InvalidConfig, "epochs must be at least 1");
    if (batch_size < 1) fail(ErrorKind::InvalidConfig, "batch_size must be at least 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        fail(ErrorKind::InvalidConfig, "validation_fraction must lie in [0, 1)");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        fail(ErrorKind::InvalidConfig, "learning_rate must be positive and finite");
    if (gradient_shards < 1) fail(ErrorKind::InvalidConfig, "gradient_shards must be at least 1");
}

TrainHistory train(Model<float>& model, const FlowDataset& data, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
    config.validate();
    check_compatible(model.spec(), data, "train");
    if (data.rows() == 0) fail(ErrorKind::EmptyInput, "train: no rows");

    const Rng root(config.seed);
    Rng val_rng = root.substream(kValidationStream);
    SplitIndices carve;
    if (config.validation_fraction > 0.0) {
        carve = stratified_split(data.y, 1.0 - config.validation_fraction, val_rng.next_u64());
    } else {
        carve.train.resize(data.rows());
        std::iota(carve.train.begin(), carve.train.end(), std::size_t{0});
    }
    const auto& train_rows = carve.train;
    const auto& val_rows = carve.test;

    TrainHistory history;
    history.train_rows = train_rows.size();
    history.validation_rows = val_rows.size();

    const bool binary = model.spec().output_activation == OutputActivation::Sigmoid;
    const std::size_t n = train_rows.size();
    const std::size_t shards = std::min(config.gradient_shards, config.batch_size);
    const Rng dropout_root = root.substream(kDropoutStream);

    std::vector<Model<float>> replicas(shards, model);
    auto master = model.parameters();
    std::vector<Parameter<float>*> master_ptrs;
    for (auto& p : master) master_ptrs.push_back(p.param);
    Adam<float> adam(AdamConfig{config.learning_rate});

    std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
    std::vector<double> shard_loss(shards);
    std::vector<std::size_t> shard_correct(shards);
    std::size_t last_good = 0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (config.shuffle) {
            order.assign(train_rows.begin(), train_rows.end());
            Rng shuffle_rng = root.substream(kShuffleStream).substream(epoch);
            shuffle_rng.shuffle(std::span<std::size_t>(order));
        }

        double epoch_loss = 0;
        std::size_t epoch_correct = 0;
        for (std::size_t start = 0, batch = 0; start < n; start += config.batch_size, ++batch) {
            const std::size_t b = std::min(config.batch_size, n - start);
            const float scale = 1.0f / static_cast<float>(b);

            parallel_for(shards, [&](std::size_t s) {
                auto& replica = replicas[s];
                copy_values(model, replica);
                replica.zero_grad();
                const std::size_t lo = start + s * b / shards;
                const std::size_t hi = start + (s + 1) * b / shards;
                double loss = 0;
                std::size_t correct = 0;
                std::vector<float> grad;
                for (std::size_t i = lo; i < hi; ++i) {
                    const std::size_t row = order[i];
                    Rng drop = dropout_root.substream((epoch - 1) * n + i);
                    const auto probs = replica.forward_train(data.row(row), drop, true);
                    const auto r = sample_loss(probs, data.y[row], binary, grad);
                    for (auto& g : grad) g *= scale;
                    replica.backward(grad);
                    loss += r.loss;
                    correct += r.correct ? 1 : 0;
                }
                shard_loss[s] = loss;
                shard_correct[s] = correct;
            });

            double batch_loss = 0;
            for (std::size_t s = 0; s < shards; ++s) {
                batch_loss += shard_loss[s];
                epoch_correct += shard_correct[s];
            }
            if (!std::isfinite(batch_loss))
                fail(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " +
                                                   std::to_string(batch + 1) + ": loss is not finite; last good epoch: " +
                                                   std::to_string(last_good));
            epoch_loss += batch_loss;

            for (std::size_t pi = 0; pi < master.size(); ++pi) {
                auto g = master[pi].param->grad.data();
                std::fill(g.begin(), g.end(), 0.0f);
                for (std::size_t s = 0; s < shards; ++s) {
                    const auto rp = replicas[s].parameters();
                    const auto src = rp[pi].param->grad.data();
                    for (std::size_t k = 0; k < g.size(); ++k) g[k] += src[k];
                }
            }
            try {
                adam.step(master_ptrs);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NonFiniteGradient) throw;
                fail(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " +
                                                   std::to_string(batch + 1) + ": " + e.what() +
                                                   "; last good epoch: " + std::to_string(last_good));
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(n);
        rec.train_accuracy = static_cast<double>(epoch_correct) / static_cast<double>(n);
        if (!val_rows.empty()) {
            const auto v = score(model, data, val_rows);
            rec.val_loss = v.loss;
            rec.val_accuracy = v.accuracy;
            if (!std::isfinite(v.loss))
                fail(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) +
                                                   ": validation loss is not finite; last good epoch: " +
                                                   std::to_string(last_good));
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(rec);
        last_good = epoch;
        if (on_epoch) on_epoch(rec);
    }
    history.optimizer_steps = adam.steps_taken();
    return history;
}

std::string history_csv(const TrainHistory& history) {
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,seconds\n";
    for (const auto& r : history.epochs) {
        out += std::to_string(r.epoch) + ',' + fmt6(r.train_loss) + ',' + fmt6(r.train_accuracy) + ',' +
               fmt6(r.val_loss) + ',' + fmt6(r.val_accuracy) + ',' + fmt6(r.seconds) + '\n';
    }
    return out;
}

void export_history(const TrainHistory& history, const std::filesystem::path& path) {
    if (history.epochs.empty()) fail(ErrorKind::EmptyInput, "history has no epochs");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
    out << history_csv(history);
    if (!out) fail(ErrorKind::IoError, "write failed: " + path.string());
}

Scored score(const Model<float>& model, const FlowDataset& data, std::span<const std::size_t> rows) {
    check_compatible(model.spec(), data, "evaluate");
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(data.rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
        rows = all;
    }
    if (rows.empty()) fail(ErrorKind::EmptyInput, "evaluate: no rows");
    for (auto r : rows)
        if (r >= data.rows()) fail(ErrorKind::IndexOutOfRange, "row " + std::to_string(r) + " out of range");

    const std::size_t units = model.spec().output_units;
    const bool binary = model.spec().output_activation == OutputActivation::Sigmoid;
    Scored out;
    out.probabilities.resize(rows.size() * units);
    std::vector<double> losses(rows.size());

    constexpr std::size_t kChunk = 64;
    const std::size_t chunks = (rows.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        std::vector<float> grad;
        for (std::size_t i = c * kChunk; i < std::min(rows.size(), (c + 1) * kChunk); ++i) {
            const auto probs = model.forward_sample(data.row(rows[i]));
            std::copy(probs.begin(), probs.end(), out.probabilities.begin() + static_cast<std::ptrdiff_t>(i * units));
            losses[i] = sample_loss(probs, data.y[rows[i]], binary, grad).loss;
        }
    });

    out.predictions = predict_classes(std::span<const float>(out.probabilities), units);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.loss += losses[i];
        correct += out.predictions[i] == data.y[rows[i]] ? 1 : 0;
    }
    out.loss /= static_cast<double>(rows.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
    return out;
}

MetricsReport evaluate(const Model<float>& model, const FlowDataset& data, std::span<const std::size_t> rows) {
    const auto s = score(model, data, rows);
    std::vector<std::uint16_t> truth;
    truth.reserve(s.predictions.size());
    if (rows.empty())
        truth = data.y;
    else
        for (auto r : rows) truth.push_back(data.y[r]);
    auto report = metrics_from_predictions(truth, s.predictions, data.num_classes(), data.classes);
    report.loss = s.loss;
    return report;
}

}  // namespace flowsentinel
