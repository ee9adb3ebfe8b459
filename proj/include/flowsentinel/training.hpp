#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowsentinel/dataset.hpp"
#include "flowsentinel/model.hpp"

namespace flowsentinel {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    /// Stratified share of the training rows held out for validation. 0 trains
    /// on every row and leaves the validation columns of the history at 0.
    double validation_fraction = 0.1;
    bool shuffle = true;
    /// Each batch is cut into this many contiguous slices whose gradients are
    /// summed in slice order. Results depend on this value, never on the
    /// thread count.
    std::size_t gradient_shards = 8;

    /// Learning rate per architecture: 1e-3 for the CNN, 1e-4 for the LSTM.
    static TrainConfig defaults_for(Architecture arch);

    /// Throws InvalidConfig.
    void validate() const;
};

/// Train/test partition of one dataset, restricted to the model features and
/// scaled with statistics fitted on the training rows only.
struct PreparedData {
    FlowDataset train;
    FlowDataset test;
    Normalizer normalizer;
    SplitIndices split;  // row indices into the source dataset
};

/// Throws MissingColumn, ClassTooSmall, InvalidConfig.
PreparedData prepare_data(const FlowDataset& data, const std::vector<std::string>& features, double train_fraction,
                          std::uint64_t split_seed, Scaling scaling = Scaling::MinMax);

/// Rows of `data` transformed exactly as `model` expects them: its feature
/// list, then its stored normalizer (if any).
FlowDataset model_inputs(const Model<float>& model, const FlowDataset& data);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0;
    double train_accuracy = 0;
    double val_loss = 0;
    double val_accuracy = 0;
    double seconds = 0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t train_rows = 0;
    std::size_t validation_rows = 0;
    std::uint64_t optimizer_steps = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Carves a stratified validation set out of `data`, then runs mini-batch
/// Adam for config.epochs epochs. `data` must already be normalized and
/// carry the model's features in order.
///
/// Throws InvalidConfig, ModeMismatch (regime or class count differ from the
/// model), ShapeMismatch (feature count), NonFiniteLoss (message names the
/// epoch, the batch and the last epoch that finished cleanly).
TrainHistory train(Model<float>& model, const FlowDataset& data, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Header `epoch,train_loss,train_acc,val_loss,val_acc,seconds`, six decimals.
/// Throws EmptyInput, IoError.
void export_history(const TrainHistory& history, const std::filesystem::path& path);
std::string history_csv(const TrainHistory& history);

struct ClassMetrics {
    std::string name;
    std::uint64_t support = 0;    // true count
    std::uint64_t predicted = 0;  // predicted count
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    // Zero denominators give 0 and set the flag instead of NaN.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct AveragedMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct MetricsReport {
    std::vector<std::string> classes;
    std::vector<std::vector<std::uint64_t>> confusion;  // [true][predicted]
    std::uint64_t total = 0;
    double accuracy = 0;
    std::vector<ClassMetrics> per_class;
    /// Unweighted mean over classes that occur in the truth or the predictions.
    AveragedMetrics macro;
    /// Mean weighted by true support.
    AveragedMetrics weighted;
    /// Mean cross-entropy; only set by evaluate().
    double loss = 0;

    std::string to_json(int indent = 2) const;
    std::string to_table() const;
};

/// Throws EmptyInput for an all-zero matrix, ShapeMismatch for a ragged one.
MetricsReport metrics_from_confusion(std::vector<std::vector<std::uint64_t>> confusion,
                                     std::vector<std::string> classes = {});
MetricsReport metrics_from_predictions(std::span<const std::uint16_t> truth, std::span<const std::uint16_t> predicted,
                                       std::size_t num_classes, std::vector<std::string> classes = {});

struct Scored {
    std::vector<float> probabilities;  // [rows x output_units]
    std::vector<std::uint16_t> predictions;
    double loss = 0;  // mean cross-entropy
    double accuracy = 0;
};

/// Inference over `rows` of `data` (all rows when empty), parallel across
/// samples and deterministic. Throws EmptyInput, ModeMismatch, ShapeMismatch.
Scored score(const Model<float>& model, const FlowDataset& data, std::span<const std::size_t> rows = {});

MetricsReport evaluate(const Model<float>& model, const FlowDataset& data, std::span<const std::size_t> rows = {});

}  // namespace flowsentinel
