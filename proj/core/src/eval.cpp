#include "taib/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "taib/error.hpp"
#include "taib/featureset.hpp"
#include "taib/io_util.hpp"
#include "taib/parallel.hpp"
#include "taib/random.hpp"

namespace taib {

std::vector<std::size_t> SplitIndices::train_and_validation() const {
    std::vector<std::size_t> rows = train;
    rows.insert(rows.end(), validation.begin(), validation.end());
    std::sort(rows.begin(), rows.end());
    return rows;
}

namespace {

/// Splits `target` rows across the two classes proportionally (largest
/// remainder), with at least one row per class.
std::array<std::size_t, 2> apportion(std::size_t target, const std::array<std::size_t, 2>& sizes) {
    const auto total = static_cast<double>(sizes[0] + sizes[1]);
    std::array<double, 2> quota{};
    std::array<std::size_t, 2> out{};
    for (std::size_t c = 0; c < 2; ++c) {
        quota[c] = static_cast<double>(target) * static_cast<double>(sizes[c]) / total;
        out[c] = static_cast<std::size_t>(std::floor(quota[c]));
    }
    std::size_t assigned = out[0] + out[1];
    if (assigned < target) {
        const double f0 = quota[0] - std::floor(quota[0]);
        const double f1v = quota[1] - std::floor(quota[1]);
        const std::size_t first = f1v > f0 ? 1 : 0;
        out[first] += 1;
        ++assigned;
        if (assigned < target) out[1 - first] += 1;
    }
    for (std::size_t c = 0; c < 2; ++c) {
        if (out[c] == 0) {
            out[c] = 1;
            if (out[1 - c] > 1) out[1 - c] -= 1;
        }
    }
    return out;
}

}  // namespace

SplitIndices split(std::span<const Label> labels, std::uint64_t seed, const SplitRatios& ratios) {
    if (ratios.train <= 0.0 || ratios.validation <= 0.0 || ratios.test <= 0.0 ||
        std::fabs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
        throw ValidationError("split ratios must be positive and sum to 1");
    }
    const std::size_t n = labels.size();
    if (n < 20) throw ValidationError("split needs at least 20 rows, got " + std::to_string(n));
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    const std::array<std::size_t, 2> sizes{by_class[0].size(), by_class[1].size()};
    if (sizes[0] < 3 || sizes[1] < 3) {
        throw ValidationError("each class needs at least 3 rows to stratify (negatives: " +
                              std::to_string(sizes[0]) + ", positives: " + std::to_string(sizes[1]) + ")");
    }
    const auto n_val = static_cast<std::size_t>(std::llround(ratios.validation * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::llround(ratios.test * static_cast<double>(n)));
    const auto val = apportion(n_val, sizes);
    const auto test = apportion(n_test, sizes);

    auto eng = rng::make_engine(seed, "split");
    SplitIndices out;
    for (std::size_t c = 0; c < 2; ++c) {
        auto& rows = by_class[c];
        if (val[c] + test[c] >= rows.size()) {
            throw ValidationError("class too small to fill train, validation and test");
        }
        rng::shuffle(rows.begin(), rows.end(), eng);
        const auto v_end = rows.begin() + static_cast<std::ptrdiff_t>(val[c]);
        const auto t_end = v_end + static_cast<std::ptrdiff_t>(test[c]);
        out.validation.insert(out.validation.end(), rows.begin(), v_end);
        out.test.insert(out.test.end(), v_end, t_end);
        out.train.insert(out.train.end(), t_end, rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitIndices split(const Cohort& cohort, std::uint64_t seed, const SplitRatios& ratios) {
    const auto labels = cohort.labels();
    return split(labels, seed, ratios);
}

Preprocessor Preprocessor::fit(const FeatureMatrix& matrix, std::span<const std::size_t> train_rows) {
    if (train_rows.empty()) throw ValidationError("preprocessor needs training rows");
    Preprocessor p;
    p.impute_.assign(matrix.cols, 0.0);
    p.center_.assign(matrix.cols, 0.0);
    p.scale_.assign(matrix.cols, 1.0);
    const auto n = static_cast<double>(train_rows.size());
    for (std::size_t c = 0; c < matrix.cols; ++c) {
        double sum = 0.0;
        std::size_t observed = 0;
        for (auto r : train_rows) {
            if (!matrix.is_null(r, c)) {
                sum += matrix.at(r, c);
                ++observed;
            }
        }
        p.impute_[c] = observed ? sum / static_cast<double>(observed) : 0.0;
        double mean = 0.0;
        for (auto r : train_rows) mean += matrix.is_null(r, c) ? p.impute_[c] : matrix.at(r, c);
        mean /= n;
        double ss = 0.0;
        for (auto r : train_rows) {
            const double x = matrix.is_null(r, c) ? p.impute_[c] : matrix.at(r, c);
            ss += (x - mean) * (x - mean);
        }
        const double sd = std::sqrt(ss / n);
        p.center_[c] = mean;
        p.scale_[c] = sd < 1e-12 ? 0.0 : 1.0 / sd;
    }
    return p;
}

DenseMatrix Preprocessor::transform(const FeatureMatrix& matrix,
                                    std::span<const std::size_t> rows) const {
    DenseMatrix out{rows.size(), matrix.cols, std::vector<double>(rows.size() * matrix.cols)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < matrix.cols; ++c) {
            const double x = matrix.is_null(rows[i], c) ? impute_[c] : matrix.at(rows[i], c);
            out.data[i * matrix.cols + c] = (x - center_[c]) * scale_[c];
        }
    }
    return out;
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double weighted_bce(const DenseMatrix& x, std::span<const Label> y, std::span<const double> w,
                    double b, const std::array<double, 2>& cw) {
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double z = dot(x.row(r), w) + b;
        const double target = y[r] == Label::positive ? 1.0 : 0.0;
        loss += cw[static_cast<std::size_t>(y[r])] * (softplus(z) - target * z);
    }
    return loss / static_cast<double>(x.rows);
}

}  // namespace

double LinearModel::probability(std::span<const double> x) const {
    return sigmoid(dot(x, weights) + bias);
}

std::array<double, 2> class_weights(std::span<const Label> labels) {
    std::array<std::size_t, 2> counts{0, 0};
    for (auto l : labels) ++counts[static_cast<std::size_t>(l)];
    if (counts[0] == 0 || counts[1] == 0) throw ValidationError("training data needs both classes");
    const auto n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

LossGradient loss_and_gradient(const DenseMatrix& x, std::span<const Label> y,
                               std::span<const double> weights, double bias,
                               const std::array<double, 2>& class_weight, double l2_lambda) {
    LossGradient g{0.0, std::vector<double>(x.cols, 0.0), 0.0};
    const auto n = static_cast<double>(x.rows);
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const auto row = x.row(r);
        const double z = dot(row, weights) + bias;
        const double target = y[r] == Label::positive ? 1.0 : 0.0;
        const double cw = class_weight[static_cast<std::size_t>(y[r])];
        loss += cw * (softplus(z) - target * z);
        const double dz = cw * (sigmoid(z) - target) / n;
        g.bias += dz;
        for (std::size_t c = 0; c < x.cols; ++c) g.weights[c] += dz * row[c];
    }
    double penalty = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) {
        penalty += weights[c] * weights[c];
        g.weights[c] += l2_lambda * weights[c];
    }
    g.loss = loss / n + 0.5 * l2_lambda * penalty;
    return g;
}

LinearModel train_classifier(const DenseMatrix& x, std::span<const Label> y,
                             const DenseMatrix* validation_x, std::span<const Label> validation_y,
                             const TrainConfig& config) {
    if (x.rows == 0 || x.rows != y.size()) throw ValidationError("training rows and labels mismatch");
    if (validation_x && validation_x->rows != validation_y.size()) {
        throw ValidationError("validation rows and labels mismatch");
    }
    const auto cw = class_weights(y);
    const double lambda = config.l2_lambda.value_or(1.0 / static_cast<double>(x.rows));

    LinearModel model;
    model.weights.resize(x.cols);
    auto eng = rng::Engine(config.init_seed);
    for (auto& w : model.weights) w = config.init_scale * rng::standard_normal(eng);
    model.meta = {0, config.learning_rate, lambda, cw};

    const bool early_stop = validation_x && validation_x->rows > 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_w = model.weights;
    double best_b = model.bias;
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        auto g = loss_and_gradient(x, y, model.weights, model.bias, cw, lambda);
        if (!std::isfinite(g.loss)) {
            throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch) +
                                  "; try a smaller learning rate");
        }
        for (std::size_t c = 0; c < x.cols; ++c) model.weights[c] -= config.learning_rate * g.weights[c];
        model.bias -= config.learning_rate * g.bias;
        model.meta.epochs = epoch + 1;

        if (early_stop) {
            const double val = weighted_bce(*validation_x, validation_y, model.weights, model.bias, cw);
            if (!std::isfinite(val)) {
                throw DivergenceError("validation loss became non-finite; try a smaller learning rate");
            }
            if (val < best_val - 1e-12) {
                best_val = val;
                best_w = model.weights;
                best_b = model.bias;
                since_best = 0;
            } else if (++since_best >= config.patience) {
                break;
            }
        }
    }
    if (early_stop) {
        model.weights = std::move(best_w);
        model.bias = best_b;
    }
    return model;
}

std::vector<std::uint8_t> predict(const LinearModel& model, const DenseMatrix& x) {
    std::vector<std::uint8_t> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = model.probability(x.row(r)) >= 0.5 ? 1 : 0;
    return out;
}

double f1(std::span<const std::uint8_t> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size()) throw ValidationError("f1: length mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool truth = labels[i] == Label::positive;
        const bool pred = predictions[i] != 0;
        if (pred && truth) ++tp;
        else if (pred) ++fp;
        else if (truth) ++fn;
    }
    if (tp == 0) return 0.0;  // P + R = 0
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

const SweepPoint& SweepResult::at(std::size_t L) const {
    for (const auto& p : points) {
        if (p.L == L) return p;
    }
    throw ValidationError("sweep has no point at L = " + std::to_string(L));
}

namespace {

std::vector<Label> pick(const std::vector<Label>& labels, std::span<const std::size_t> rows) {
    std::vector<Label> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(labels[r]);
    return out;
}

struct PreparedDataset {
    std::size_t V = 0;
    DenseMatrix train, validation, test;
};

}  // namespace

SweepResult sweep(const Cohort& cohort, const SweepConfig& config) {
    if (config.grid.empty()) throw ValidationError("sweep grid is empty");
    if (config.runs == 0) throw ValidationError("sweep needs at least one run");
    for (auto L : config.grid) {
        if (L == 0) throw ValidationError("sweep grid values must be >= 1");
    }

    SweepResult result;
    result.dataset = config.dataset;
    result.grid = config.grid;
    result.runs = config.runs;
    result.seed = config.seed;
    result.split = split(cohort, config.seed);
    result.w = config.dataset == DatasetKind::all ? cohort.schema.size() : config.w;

    std::optional<TaibReport> report = config.report;
    if (config.dataset == DatasetKind::dw) {
        if (config.w > cohort.schema.size()) {
            throw ValidationError("w = " + std::to_string(config.w) + " exceeds K = " +
                                  std::to_string(cohort.schema.size()));
        }
        if (!report) {
            report = rank_features(cohort.subset(result.split.train_and_validation()),
                                   ResolutionGrid(config.taib_grid), config.threads);
        }
        result.report_digest = io::digest_hex(report_to_json(*report));
    }

    const auto labels = cohort.labels();
    const auto y_train = pick(labels, result.split.train);
    const auto y_val = pick(labels, result.split.validation);
    const auto y_test = pick(labels, result.split.test);

    std::vector<PreparedDataset> datasets(config.grid.size());
    parallel_for(config.grid.size(), config.threads, [&](std::size_t g) {
        const auto L = config.grid[g];
        const auto matrix = config.dataset == DatasetKind::all
                                ? build_feature_matrix(cohort, BinSpec::uniform(cohort.schema, L))
                                : build_dw(cohort, *report, DwConfig{config.w, L});
        const auto pre = Preprocessor::fit(matrix, result.split.train);
        datasets[g] = {matrix.cols, pre.transform(matrix, result.split.train),
                       pre.transform(matrix, result.split.validation),
                       pre.transform(matrix, result.split.test)};
    });

    std::vector<double> scores(config.grid.size() * config.runs);
    parallel_for(scores.size(), config.threads, [&](std::size_t task) {
        const auto g = task / config.runs;
        const auto run = task % config.runs;
        const auto& ds = datasets[g];
        TrainConfig tc = config.train;
        tc.init_seed = rng::derive_seed(config.seed, "model-init", run);
        const auto model = train_classifier(ds.train, y_train, &ds.validation, y_val, tc);
        scores[task] = f1(predict(model, ds.test), y_test);
    });

    for (std::size_t g = 0; g < config.grid.size(); ++g) {
        SweepPoint p;
        p.L = config.grid[g];
        p.V = datasets[g].V;
        p.runs = config.runs;
        p.f1.assign(scores.begin() + static_cast<std::ptrdiff_t>(g * config.runs),
                    scores.begin() + static_cast<std::ptrdiff_t>((g + 1) * config.runs));
        double sum = 0.0;
        for (double s : p.f1) sum += s;
        p.f1_mean = sum / static_cast<double>(p.runs);
        double ss = 0.0;
        for (double s : p.f1) ss += (s - p.f1_mean) * (s - p.f1_mean);
        p.f1_std = p.runs > 1 ? std::sqrt(ss / static_cast<double>(p.runs - 1)) : 0.0;
        p.f1_min = *std::min_element(p.f1.begin(), p.f1.end());
        p.f1_max = *std::max_element(p.f1.begin(), p.f1.end());
        result.points.push_back(std::move(p));
    }
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "L,runs,f1_mean,f1_std,f1_min,f1_max\n";
    for (const auto& p : result.points) {
        out << p.L << ',' << p.runs << ',' << io::format_double(p.f1_mean) << ','
            << io::format_double(p.f1_std) << ',' << io::format_double(p.f1_min) << ','
            << io::format_double(p.f1_max) << '\n';
    }
}

std::string sweep_to_json(const SweepResult& result) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cfg;
    cfg["dataset"] = result.dataset == DatasetKind::all ? "all" : "dw";
    cfg["w"] = result.w;
    cfg["grid"] = result.grid;
    cfg["runs"] = result.runs;
    cfg["seed"] = result.seed;
    if (!result.report_digest.empty()) cfg["report_digest"] = result.report_digest;
    cfg["split_sizes"] = {result.split.train.size(), result.split.validation.size(),
                          result.split.test.size()};
    j["config"] = std::move(cfg);
    auto points = nlohmann::ordered_json::array();
    for (const auto& p : result.points) {
        nlohmann::ordered_json e;
        e["L"] = p.L;
        e["V"] = p.V;
        e["runs"] = p.runs;
        e["f1_mean"] = p.f1_mean;
        e["f1_std"] = p.f1_std;
        e["f1_min"] = p.f1_min;
        e["f1_max"] = p.f1_max;
        e["f1"] = p.f1;
        points.push_back(std::move(e));
    }
    j["points"] = std::move(points);
    return j.dump(2) + "\n";
}

}  // namespace taib
