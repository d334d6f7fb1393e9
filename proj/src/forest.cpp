#include "bess/forest.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bess/binio.hpp"
#include "bess/rng.hpp"

namespace bess {

namespace {

constexpr int kNumFeatures = 6;
constexpr int kFeaturesPerSplit = 3;  // ceil(sqrt(6))
constexpr char kModelMagic[4] = {'B', 'F', 'O', 'R'};
constexpr std::uint32_t kModelVersion = 1;

struct TreeBuilder {
    std::span<const TrainingRow> rows;
    const ForestHyperparams& hp;
    Rng rng;
    std::vector<TreeNode> nodes;
    std::vector<std::uint32_t> sample;           // bootstrap indices, partitioned in place
    std::vector<std::pair<double, double>> scratch;  // (feature value, target)

    TreeBuilder(std::span<const TrainingRow> r, const ForestHyperparams& h, std::uint64_t seed)
        : rows(r), hp(h), rng(seed) {}

    double target(std::uint32_t i) const { return rows[i].target; }

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = -1.0;
    };

    // Variance-reduction split with candidate thresholds at midpoints of
    // consecutive distinct feature values. Inspects features in a random
    // order; keeps going past the per-split feature budget until at least
    // one valid split has been seen, like the usual ensemble splitters.
    Split find_split(std::size_t begin, std::size_t end) {
        std::array<int, kNumFeatures> order{0, 1, 2, 3, 4, 5};
        for (int i = kNumFeatures - 1; i > 0; --i) {
            std::swap(order[static_cast<std::size_t>(i)],
                      order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
        }

        const auto n = end - begin;
        double total_sum = 0.0;
        for (std::size_t k = begin; k < end; ++k) total_sum += target(sample[k]);

        Split best;
        int inspected_with_candidates = 0;
        for (const int feature : order) {
            if (inspected_with_candidates >= kFeaturesPerSplit && best.feature >= 0) break;

            scratch.clear();
            for (std::size_t k = begin; k < end; ++k) {
                const auto x = rows[sample[k]].features.as_array();
                scratch.emplace_back(x[static_cast<std::size_t>(feature)], target(sample[k]));
            }
            std::sort(scratch.begin(), scratch.end());
            if (scratch.front().first == scratch.back().first) continue;  // constant feature

            bool any_candidate = false;
            double left_sum = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_sum += scratch[k].second;
                if (scratch[k].first == scratch[k + 1].first) continue;
                const auto n_left = k + 1;
                const auto n_right = n - n_left;
                if (n_left < static_cast<std::size_t>(hp.min_leaf) ||
                    n_right < static_cast<std::size_t>(hp.min_leaf)) {
                    continue;
                }
                any_candidate = true;
                const double right_sum = total_sum - left_sum;
                // Maximizing sum_l^2/n_l + sum_r^2/n_r maximizes variance reduction.
                const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                    right_sum * right_sum / static_cast<double>(n_right);
                if (gain > best.gain) {
                    // The midpoint of two adjacent representable values can
                    // round up to the larger one; fall back to the lower value
                    // so the partition is never empty.
                    double threshold = 0.5 * (scratch[k].first + scratch[k + 1].first);
                    if (threshold >= scratch[k + 1].first) threshold = scratch[k].first;
                    best.gain = gain;
                    best.feature = feature;
                    best.threshold = threshold;
                }
            }
            if (any_candidate) ++inspected_with_candidates;
        }
        return best;
    }

    std::int32_t build(std::size_t begin, std::size_t end, int depth) {
        const auto n = end - begin;
        double sum = 0.0;
        for (std::size_t k = begin; k < end; ++k) sum += target(sample[k]);
        const double mean = sum / static_cast<double>(n);

        const auto make_leaf = [&] {
            nodes.push_back({-1, 0.0, -1, -1, mean});
            return static_cast<std::int32_t>(nodes.size() - 1);
        };

        if (depth >= hp.max_depth || n < static_cast<std::size_t>(hp.min_split)) {
            return make_leaf();
        }
        double sse = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            const double d = target(sample[k]) - mean;
            sse += d * d;
        }
        if (sse <= 1e-12) return make_leaf();

        const Split split = find_split(begin, end);
        if (split.feature < 0) return make_leaf();

        const auto mid = static_cast<std::size_t>(
            std::stable_partition(sample.begin() + static_cast<std::ptrdiff_t>(begin),
                                  sample.begin() + static_cast<std::ptrdiff_t>(end),
                                  [&](std::uint32_t i) {
                                      const auto x = rows[i].features.as_array();
                                      return x[static_cast<std::size_t>(split.feature)] <=
                                             split.threshold;
                                  }) -
            sample.begin());
        if (mid == begin || mid == end) return make_leaf();

        const auto node_index = static_cast<std::int32_t>(nodes.size());
        nodes.push_back({static_cast<std::int32_t>(split.feature), split.threshold, -1, -1, 0.0});
        const std::int32_t left = build(begin, mid, depth + 1);
        const std::int32_t right = build(mid, end, depth + 1);
        nodes[static_cast<std::size_t>(node_index)].left = left;
        nodes[static_cast<std::size_t>(node_index)].right = right;
        return node_index;
    }

    RegressionTree run() {
        const auto n = rows.size();
        sample.resize(n);
        for (auto& s : sample) {
            s = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(n)));
        }
        nodes.clear();
        nodes.reserve(2 * n);
        build(0, n, 0);
        return RegressionTree{std::move(nodes)};
    }
};

}  // namespace

FeatureVector engineer_features(const ForecastRecord& record) {
    FeatureVector f;
    f.operator_price = record.predicted_price;
    f.hours_ahead = record.hours_ahead;
    const double day_fraction =
        static_cast<double>(minute_of_day(record.settlement_time)) / (24.0 * 60.0);
    f.tod_sin = std::sin(2.0 * std::numbers::pi * day_fraction);
    f.tod_cos = std::cos(2.0 * std::numbers::pi * day_fraction);
    const double week_fraction =
        static_cast<double>(weekday(date_of(record.settlement_time))) / 7.0;
    f.dow_sin = std::sin(2.0 * std::numbers::pi * week_fraction);
    f.dow_cos = std::cos(2.0 * std::numbers::pi * week_fraction);
    return f;
}

double RegressionTree::predict(const std::array<double, 6>& x) const {
    std::int32_t i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

double EnsembleModel::predict(const FeatureVector& features) const {
    const auto x = features.as_array();
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict(x);
    return sum / static_cast<double>(trees_.size());
}

std::vector<TrainingRow> make_training_rows(const AlignedDataset& dataset, Timestamp start,
                                            Timestamp end, std::size_t sample_every) {
    if (sample_every == 0) sample_every = 1;
    std::vector<TrainingRow> rows;
    std::size_t matched = 0;
    for (const auto& f : dataset.forecasts) {
        if (f.settlement_time < start || f.settlement_time > end) continue;
        const auto actual = dataset.actual_price(f.settlement_time);
        if (!actual) continue;
        // Hash-thinned rather than strided: a fixed stride aliases with the
        // per-day (period x horizon) record cycle and drops entire cells of
        // the feature space from training.
        const std::size_t index = matched++;
        if (sample_every > 1 && splitmix64(index) % sample_every != 0) continue;
        rows.push_back({engineer_features(f), *actual, f.settlement_time});
    }
    return rows;
}

EnsembleModel train(std::span<const TrainingRow> rows, const ForestHyperparams& hyperparams,
                    std::uint64_t seed, int jobs) {
    if (hyperparams.n_trees <= 0 || hyperparams.max_depth <= 0 || hyperparams.min_split < 2 ||
        hyperparams.min_leaf < 1) {
        throw std::invalid_argument("invalid forest hyperparameters");
    }
    if (rows.size() < 2 * static_cast<std::size_t>(hyperparams.min_split)) {
        throw std::invalid_argument("too few training rows");
    }
    for (const auto& r : rows) {
        for (const double v : r.features.as_array()) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature");
        }
        if (!std::isfinite(r.target)) throw std::invalid_argument("non-finite target");
    }

    EnsembleModel model;
    model.hyperparams_ = hyperparams;
    model.seed_ = seed;
    model.trees_.resize(static_cast<std::size_t>(hyperparams.n_trees));
    model.train_start_ = rows.front().settlement_time;
    model.train_end_ = rows.front().settlement_time;
    for (const auto& r : rows) {
        model.train_start_ = std::min(model.train_start_, r.settlement_time);
        model.train_end_ = std::max(model.train_end_, r.settlement_time);
    }

    // Each tree draws from its own derived seed, so the parallel and serial
    // paths produce identical forests.
    if (jobs == 1) {
        for (int t = 0; t < hyperparams.n_trees; ++t) {
            TreeBuilder builder(rows, hyperparams, derive_seed(seed, static_cast<std::uint64_t>(t)));
            model.trees_[static_cast<std::size_t>(t)] = builder.run();
        }
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : omp_get_max_threads())
        for (int t = 0; t < hyperparams.n_trees; ++t) {
            TreeBuilder builder(rows, hyperparams, derive_seed(seed, static_cast<std::uint64_t>(t)));
            model.trees_[static_cast<std::size_t>(t)] = builder.run();
        }
    }

    double sse = 0.0;
    for (const auto& r : rows) {
        const double d = model.predict(r.features) - r.target;
        sse += d * d;
    }
    model.training_rmse_ = std::sqrt(sse / static_cast<double>(rows.size()));
    return model;
}

ForecastSource enhanced_source(const EnsembleModel& model, const AlignedDataset& dataset,
                               int jobs) {
    std::vector<double> corrected(dataset.forecasts.size());
    const auto n = static_cast<std::int64_t>(dataset.forecasts.size());
    if (jobs == 1) {
        for (std::int64_t i = 0; i < n; ++i) {
            corrected[static_cast<std::size_t>(i)] =
                model.predict(engineer_features(dataset.forecasts[static_cast<std::size_t>(i)]));
        }
    } else {
#pragma omp parallel for schedule(static) num_threads(jobs > 0 ? jobs : omp_get_max_threads())
        for (std::int64_t i = 0; i < n; ++i) {
            corrected[static_cast<std::size_t>(i)] =
                model.predict(engineer_features(dataset.forecasts[static_cast<std::size_t>(i)]));
        }
    }
    return ForecastSource::corrected(std::move(corrected));
}

std::vector<ErrorRecord> accuracy_report(const EnsembleModel& model, const AlignedDataset& test) {
    if (test.settlements.empty()) throw DataError("accuracy_report: empty test dataset");
    const Timestamp test_start = test.settlements.front().settlement_time;
    const Timestamp test_end = test.settlements.back().settlement_time;
    if (test_start <= model.train_end() && model.train_start() <= test_end) {
        throw DataError("accuracy_report: test range overlaps training range");
    }
    std::vector<ErrorRecord> out;
    out.reserve(test.forecasts.size());
    for (const auto& f : test.forecasts) {
        const auto actual = test.actual_price(f.settlement_time);
        if (!actual) continue;
        const double predicted = model.predict(engineer_features(f));
        ErrorRecord e;
        e.region = f.region;
        e.settlement_time = f.settlement_time;
        e.hours_ahead = f.hours_ahead;
        e.abs_error = predicted - *actual;
        if (std::abs(*actual) >= 1.0) e.pct_error = 100.0 * (predicted - *actual) / *actual;
        out.push_back(e);
    }
    return out;
}

void EnsembleModel::save(const std::filesystem::path& path) const {
    ByteSink sink;
    sink.put(kModelVersion);
    sink.put(seed_);
    sink.put(static_cast<std::int32_t>(hyperparams_.n_trees));
    sink.put(static_cast<std::int32_t>(hyperparams_.max_depth));
    sink.put(static_cast<std::int32_t>(hyperparams_.min_split));
    sink.put(static_cast<std::int32_t>(hyperparams_.min_leaf));
    sink.put(training_rmse_);
    sink.put(train_start_.mins);
    sink.put(train_end_.mins);
    sink.put(static_cast<std::uint32_t>(trees_.size()));
    for (const auto& tree : trees_) {
        sink.put(static_cast<std::uint32_t>(tree.nodes.size()));
        for (const auto& node : tree.nodes) {
            sink.put(node.feature);
            sink.put(node.threshold);
            sink.put(node.left);
            sink.put(node.right);
            sink.put(node.value);
        }
    }
    write_checksummed(path, kModelMagic, sink);
}

EnsembleModel EnsembleModel::load(const std::filesystem::path& path) {
    const auto raw = read_checksummed(path, kModelMagic);
    ByteSource src{raw.data(), raw.data() + raw.size()};
    const auto version = src.get<std::uint32_t>();
    if (version != kModelVersion) {
        throw CacheError("unsupported model version " + std::to_string(version));
    }
    EnsembleModel model;
    model.seed_ = src.get<std::uint64_t>();
    model.hyperparams_.n_trees = src.get<std::int32_t>();
    model.hyperparams_.max_depth = src.get<std::int32_t>();
    model.hyperparams_.min_split = src.get<std::int32_t>();
    model.hyperparams_.min_leaf = src.get<std::int32_t>();
    model.training_rmse_ = src.get<double>();
    model.train_start_.mins = src.get<std::int64_t>();
    model.train_end_.mins = src.get<std::int64_t>();
    const auto n_trees = src.get<std::uint32_t>();
    model.trees_.resize(n_trees);
    for (auto& tree : model.trees_) {
        const auto n_nodes = src.get<std::uint32_t>();
        tree.nodes.resize(n_nodes);
        for (auto& node : tree.nodes) {
            node.feature = src.get<std::int32_t>();
            node.threshold = src.get<double>();
            node.left = src.get<std::int32_t>();
            node.right = src.get<std::int32_t>();
            node.value = src.get<double>();
        }
    }
    if (!src.exhausted()) throw CacheError("trailing bytes in " + path.string());
    return model;
}

}  // namespace bess
