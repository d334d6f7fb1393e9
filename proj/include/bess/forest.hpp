#pragma once

// Bootstrap-aggregated regression trees mapping operator forecasts plus
// cyclical time features to corrected price predictions.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bess/accuracy.hpp"
#include "bess/forecast_weighting.hpp"
#include "bess/market_data.hpp"

namespace bess {

struct FeatureVector {
    double operator_price = 0.0;
    double hours_ahead = 0.0;
    double tod_sin = 0.0;
    double tod_cos = 0.0;
    double dow_sin = 0.0;
    double dow_cos = 0.0;

    std::array<double, 6> as_array() const {
        return {operator_price, hours_ahead, tod_sin, tod_cos, dow_sin, dow_cos};
    }
};

FeatureVector engineer_features(const ForecastRecord& record);

struct ForestHyperparams {
    int n_trees = 100;
    int max_depth = 10;
    int min_split = 2;
    int min_leaf = 2;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double predict(const std::array<double, 6>& x) const;
};

struct TrainingRow {
    FeatureVector features;
    double target = 0.0;  // actual 30-minute price
    Timestamp settlement_time;
};

class EnsembleModel {
public:
    double predict(const FeatureVector& features) const;

    const ForestHyperparams& hyperparams() const { return hyperparams_; }
    std::uint64_t seed() const { return seed_; }
    double training_rmse() const { return training_rmse_; }
    Timestamp train_start() const { return train_start_; }
    Timestamp train_end() const { return train_end_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

    void save(const std::filesystem::path& path) const;
    static EnsembleModel load(const std::filesystem::path& path);

private:
    friend EnsembleModel train(std::span<const TrainingRow>, const ForestHyperparams&,
                               std::uint64_t, int);
    ForestHyperparams hyperparams_;
    std::uint64_t seed_ = 0;
    double training_rmse_ = 0.0;
    Timestamp train_start_{};
    Timestamp train_end_{};
    std::vector<RegressionTree> trees_;
};

// One row per matched (forecast, actual) pair with settlement_time inside
// [start, end]; sample_every keeps every Nth row to bound training cost.
std::vector<TrainingRow> make_training_rows(const AlignedDataset& dataset, Timestamp start,
                                            Timestamp end, std::size_t sample_every = 1);

// Deterministic for a given seed; jobs == 1 trains serially, otherwise trees
// train in parallel with identical results.
EnsembleModel train(std::span<const TrainingRow> rows, const ForestHyperparams& hyperparams,
                    std::uint64_t seed, int jobs = 0);

// Maps every forecast record through the model once; drop-in source for
// run_milp_backtest.
ForecastSource enhanced_source(const EnsembleModel& model, const AlignedDataset& dataset,
                               int jobs = 0);

// Error records with the operator prediction replaced by the model output.
// Rejects test data whose settlement range overlaps the training range.
std::vector<ErrorRecord> accuracy_report(const EnsembleModel& model, const AlignedDataset& test);

}  // namespace bess
