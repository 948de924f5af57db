#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "taib/binning.hpp"
#include "taib/ranking.hpp"

namespace taib {

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

/// Disjoint row sets, each sorted ascending.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    [[nodiscard]] std::vector<std::size_t> train_and_validation() const;
    friend bool operator==(const SplitIndices&, const SplitIndices&) = default;
};

/// Stratified, seeded split. Validation and test sizes are exactly
/// round(ratio * N); each class contributes at least one row to every part.
/// Requires N >= 20 and at least 3 members per class.
SplitIndices split(std::span<const Label> labels, std::uint64_t seed, const SplitRatios& ratios = {});
SplitIndices split(const Cohort& cohort, std::uint64_t seed, const SplitRatios& ratios = {});

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
};

/// Fitted on training rows only: null cells are imputed with the column's
/// training mean, then every column is standardized with training mean and
/// standard deviation (constant columns map to 0).
class Preprocessor {
public:
    static Preprocessor fit(const FeatureMatrix& matrix, std::span<const std::size_t> train_rows);
    [[nodiscard]] DenseMatrix transform(const FeatureMatrix& matrix,
                                        std::span<const std::size_t> rows) const;

private:
    std::vector<double> impute_;
    std::vector<double> center_;
    std::vector<double> scale_;
};

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t max_epochs = 2000;
    std::size_t patience = 50;
    /// Defaults to 1 / N_train when unset.
    std::optional<double> l2_lambda;
    std::uint64_t init_seed = 0;
    double init_scale = 0.01;
};

struct TrainingMeta {
    std::size_t epochs = 0;
    double learning_rate = 0.0;
    double l2_lambda = 0.0;
    std::array<double, 2> class_weights{1.0, 1.0};
};

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    TrainingMeta meta;

    [[nodiscard]] double probability(std::span<const double> x) const;
};

/// N / (2 * N_c) for c in {negative, positive}.
std::array<double, 2> class_weights(std::span<const Label> labels);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> weights;
    double bias = 0.0;
};

/// Class-weighted mean binary cross-entropy plus (lambda / 2) * |w|^2, and
/// its gradient. The bias is not penalized.
LossGradient loss_and_gradient(const DenseMatrix& x, std::span<const Label> y,
                               std::span<const double> weights, double bias,
                               const std::array<double, 2>& class_weight, double l2_lambda);

/// Full-batch gradient descent. When validation rows are given, stops after
/// `patience` epochs without validation-loss improvement and returns the
/// best parameters seen. Throws DivergenceError on a non-finite loss.
LinearModel train_classifier(const DenseMatrix& x, std::span<const Label> y,
                             const DenseMatrix* validation_x, std::span<const Label> validation_y,
                             const TrainConfig& config);

/// 1 where probability >= 0.5.
std::vector<std::uint8_t> predict(const LinearModel& model, const DenseMatrix& x);

/// F1 of the positive class; 0 when precision + recall = 0.
double f1(std::span<const std::uint8_t> predictions, std::span<const Label> labels);

enum class DatasetKind { all, dw };

struct SweepConfig {
    DatasetKind dataset = DatasetKind::all;
    std::size_t w = 1;
    /// Ranking used for D_w. Computed on train + validation rows when unset.
    std::optional<TaibReport> report;
    std::vector<std::size_t> taib_grid{1, 2, 3, 5, 8, 12, 20, 30, 45, 60, 90};
    std::vector<std::size_t> grid;
    std::size_t runs = 40;
    std::uint64_t seed = 0;
    TrainConfig train;
    unsigned threads = 0;
};

struct SweepPoint {
    std::size_t L = 1;
    std::size_t V = 0;
    std::size_t runs = 0;
    double f1_mean = 0.0;
    double f1_std = 0.0;  ///< sample standard deviation; 0 for one run
    double f1_min = 0.0;
    double f1_max = 0.0;
    std::vector<double> f1;  ///< per run, in run order
};

struct SweepResult {
    DatasetKind dataset = DatasetKind::all;
    std::size_t w = 0;
    std::vector<std::size_t> grid;
    std::size_t runs = 0;
    std::uint64_t seed = 0;
    std::string report_digest;  ///< empty for D_All
    SplitIndices split;
    std::vector<SweepPoint> points;

    [[nodiscard]] const SweepPoint& at(std::size_t L) const;
};

/// For each L: build the dataset, train `runs` freshly initialized models on
/// one fixed split, and summarize test-set F1. Deterministic for a fixed seed
/// and independent of `threads`.
SweepResult sweep(const Cohort& cohort, const SweepConfig& config);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
std::string sweep_to_json(const SweepResult& result);

}  // namespace taib
