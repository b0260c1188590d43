#pragma once

// Small value network and its trainer.
//
// A two-layer MLP (softplus hidden layer, linear output) regresses the
// noiseless terminal reward from a fixed-length state summary. Training is
// plain mini-batch gradient descent on summed squared error with decoupled
// weight decay and a cosine learning-rate schedule annealing to zero. All
// randomness (init, shuffling) comes from one seeded stream, so a fixed
// (dataset, hyper) pair always yields bit-identical parameters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqplan/core.hpp"
#include "seqplan/reward.hpp"
#include "seqplan/rng.hpp"
#include "seqplan/textio.hpp"
#include "seqplan/trace.hpp"

namespace seqplan {

using FeatureVector = std::vector<double>;

// ---------------------------------------------------------------------------
// featurization
// ---------------------------------------------------------------------------

inline constexpr std::int32_t kFeatureNgramOrder = 3;
inline constexpr std::int32_t kFeatureCountCap = 4;

/// Feature layout, dimension vocab_size + 3:
///   [0, vocab)  per-token count capped at 4, divided by max_length
///   [vocab]     length / max_length
///   [vocab+1]   coverage fraction
///   [vocab+2]   redundancy score (n-gram order 3)
/// Every entry lies in [0, 1]; the empty state maps to the zero vector.
inline FeatureVector featurize(const SequenceState& state, const WorldInstance& world) {
    FeatureVector features(world.vocab_size + 3, 0.0);
    const double inv_len = 1.0 / static_cast<double>(world.max_length);
    std::vector<std::int32_t> counts(world.vocab_size, 0);
    for (TokenId t : state.tokens) counts[t] += 1;
    for (std::int32_t v = 0; v < world.vocab_size; ++v) {
        features[v] = std::min(counts[v], kFeatureCountCap) * inv_len;
    }
    features[world.vocab_size] = state.length() * inv_len;
    features[world.vocab_size + 1] = coverage_quality(state, world);
    features[world.vocab_size + 2] = redundancy_penalty(state, kFeatureNgramOrder);
    return features;
}

// ---------------------------------------------------------------------------
// network
// ---------------------------------------------------------------------------

struct ValueNetParams {
    std::int32_t input_dim = 0;
    std::int32_t hidden_dim = 0;
    std::vector<double> w1;  // hidden_dim x input_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // hidden_dim
    double b2 = 0.0;
};

namespace detail {

inline double softplus(double z) {
    if (z > 30.0) return z;
    if (z < -30.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double uniform_signed(Rng& rng, double bound) {
    return (2.0 * rng.uniform01() - 1.0) * bound;
}

}  // namespace detail

inline ValueNetParams zero_value_net(std::int32_t input_dim, std::int32_t hidden_dim) {
    ValueNetParams params;
    params.input_dim = input_dim;
    params.hidden_dim = hidden_dim;
    params.w1.assign(static_cast<std::size_t>(hidden_dim) * input_dim, 0.0);
    params.b1.assign(hidden_dim, 0.0);
    params.w2.assign(hidden_dim, 0.0);
    return params;
}

/// Uniform init in +-1/sqrt(fan_in), drawn in a fixed order from rng.
inline ValueNetParams init_value_net(std::int32_t input_dim, std::int32_t hidden_dim,
                                     Rng& rng) {
    if (input_dim < 1 || hidden_dim < 1) {
        throw ValidationError("init_value_net: dimensions must be >= 1");
    }
    ValueNetParams params = zero_value_net(input_dim, hidden_dim);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (double& w : params.w1) w = detail::uniform_signed(rng, bound1);
    for (double& b : params.b1) b = detail::uniform_signed(rng, bound1);
    for (double& w : params.w2) w = detail::uniform_signed(rng, bound2);
    params.b2 = detail::uniform_signed(rng, bound2);
    return params;
}

inline ValueNetParams init_value_net(std::int32_t input_dim, std::int32_t hidden_dim,
                                     std::uint64_t seed) {
    Rng rng(seed);
    return init_value_net(input_dim, hidden_dim, rng);
}

inline double predict(const ValueNetParams& params, const FeatureVector& features) {
    if (static_cast<std::int32_t>(features.size()) != params.input_dim) {
        throw ValidationError("predict: feature dimension " +
                              std::to_string(features.size()) +
                              " does not match input_dim " +
                              std::to_string(params.input_dim));
    }
    double output = params.b2;
    for (std::int32_t i = 0; i < params.hidden_dim; ++i) {
        double z = params.b1[i];
        const double* row = params.w1.data() + static_cast<std::size_t>(i) * params.input_dim;
        for (std::int32_t j = 0; j < params.input_dim; ++j) z += row[j] * features[j];
        output += params.w2[i] * detail::softplus(z);
    }
    return output;
}

/// Convex blend of the model's coarse value and the network estimate:
/// lambda_v * model_value + (1 - lambda_v) * net_value.
inline double fuse_value(double model_value, double net_value, double lambda_v) {
    if (lambda_v < 0.0 || lambda_v > 1.0) {
        throw ValidationError("fuse_value: lambda_v must be in [0, 1]");
    }
    return lambda_v * model_value + (1.0 - lambda_v) * net_value;
}

// ---------------------------------------------------------------------------
// training data
// ---------------------------------------------------------------------------

struct TrainingPair {
    FeatureVector features;
    double target = 0.0;
};

struct CollectResult {
    std::vector<TrainingPair> pairs;
    std::int32_t skipped_traces = 0;  // traces without a terminal reward record
};

/// One pair per intermediate state per trace, all targeting that trace's
/// noiseless terminal total. Traces missing the final reward are skipped.
inline CollectResult collect_training_data(const std::vector<RunTrace>& traces,
                                           const WorldInstance& world) {
    CollectResult result;
    for (const RunTrace& trace : traces) {
        if (!trace.has_final_reward) {
            result.skipped_traces += 1;
            continue;
        }
        for (const std::vector<TokenId>& tokens : trace.intermediate_tokens) {
            SequenceState state;
            state.tokens = tokens;
            result.pairs.push_back({featurize(state, world), trace.final_reward.total});
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct TrainingHyper {
    double learning_rate = 1e-4;
    double weight_decay = 0.01;
    std::int32_t batch_size = 256;
    std::int32_t epochs = 10;
    std::int32_t hidden_dim = 32;
    std::uint64_t train_seed = 0;
};

struct ValueNetGrads {
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
};

/// Summed squared error over the batch and its analytic gradient.
inline double value_net_loss_and_grads(const ValueNetParams& params,
                                       const std::vector<TrainingPair>& pairs,
                                       const std::vector<std::size_t>& batch,
                                       ValueNetGrads& grads) {
    const std::int32_t F = params.input_dim;
    const std::int32_t H = params.hidden_dim;
    grads.w1.assign(params.w1.size(), 0.0);
    grads.b1.assign(params.b1.size(), 0.0);
    grads.w2.assign(params.w2.size(), 0.0);
    grads.b2 = 0.0;
    std::vector<double> z(H), a(H);
    double loss = 0.0;
    for (std::size_t index : batch) {
        const TrainingPair& pair = pairs[index];
        if (static_cast<std::int32_t>(pair.features.size()) != F) {
            throw ValidationError("train: inconsistent feature dimension in dataset");
        }
        double pred = params.b2;
        for (std::int32_t i = 0; i < H; ++i) {
            double zi = params.b1[i];
            const double* row = params.w1.data() + static_cast<std::size_t>(i) * F;
            for (std::int32_t j = 0; j < F; ++j) zi += row[j] * pair.features[j];
            z[i] = zi;
            a[i] = detail::softplus(zi);
            pred += params.w2[i] * a[i];
        }
        const double residual = pred - pair.target;
        loss += residual * residual;
        const double dpred = 2.0 * residual;
        grads.b2 += dpred;
        for (std::int32_t i = 0; i < H; ++i) {
            grads.w2[i] += dpred * a[i];
            const double dz = dpred * params.w2[i] * detail::sigmoid(z[i]);
            grads.b1[i] += dz;
            double* grow = grads.w1.data() + static_cast<std::size_t>(i) * F;
            for (std::int32_t j = 0; j < F; ++j) grow[j] += dz * pair.features[j];
        }
    }
    return loss;
}

inline double mean_squared_error(const ValueNetParams& params,
                                 const std::vector<TrainingPair>& pairs) {
    double total = 0.0;
    for (const TrainingPair& pair : pairs) {
        const double residual = predict(params, pair.features) - pair.target;
        total += residual * residual;
    }
    return total / static_cast<double>(pairs.size());
}

struct TrainResult {
    ValueNetParams params;
    std::vector<double> loss_curve;  // dataset mean MSE after each epoch
};

inline TrainResult train(const std::vector<TrainingPair>& pairs,
                         const TrainingHyper& hyper) {
    if (pairs.empty()) {
        throw ValidationError("train: dataset is empty");
    }
    if (hyper.learning_rate <= 0.0 || hyper.weight_decay < 0.0 ||
        hyper.batch_size < 1 || hyper.epochs < 0 || hyper.hidden_dim < 1) {
        throw ValidationError("train: bad hyperparameters");
    }
    const std::size_t n = pairs.size();
    const std::int32_t input_dim = static_cast<std::int32_t>(pairs[0].features.size());

    Rng rng(hyper.train_seed);
    TrainResult result;
    result.params = init_value_net(input_dim, hyper.hidden_dim, rng);
    ValueNetParams& params = result.params;

    const std::size_t batch_size =
        std::min<std::size_t>(static_cast<std::size_t>(hyper.batch_size), n);
    const std::size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
    const std::size_t total_steps =
        static_cast<std::size_t>(hyper.epochs) * steps_per_epoch;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    ValueNetGrads grads;
    std::size_t step = 0;
    for (std::int32_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t offset = 0; offset < n; offset += batch_size) {
            const std::size_t end = std::min(offset + batch_size, n);
            std::vector<std::size_t> batch(order.begin() + offset, order.begin() + end);
            const double lr =
                hyper.learning_rate * 0.5 *
                (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                static_cast<double>(total_steps)));
            value_net_loss_and_grads(params, pairs, batch, grads);
            const double decay = 1.0 - lr * hyper.weight_decay;
            for (std::size_t i = 0; i < params.w1.size(); ++i) {
                params.w1[i] = params.w1[i] * decay - lr * grads.w1[i];
            }
            for (std::size_t i = 0; i < params.b1.size(); ++i) {
                params.b1[i] = params.b1[i] * decay - lr * grads.b1[i];
            }
            for (std::size_t i = 0; i < params.w2.size(); ++i) {
                params.w2[i] = params.w2[i] * decay - lr * grads.w2[i];
            }
            params.b2 = params.b2 * decay - lr * grads.b2;
            step += 1;
        }
        result.loss_curve.push_back(mean_squared_error(params, pairs));
    }
    return result;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

inline nlohmann::json value_net_to_json(const ValueNetParams& params) {
    return {{"input_dim", params.input_dim},
            {"hidden_dim", params.hidden_dim},
            {"w1", params.w1},
            {"b1", params.b1},
            {"w2", params.w2},
            {"b2", params.b2}};
}

inline ValueNetParams value_net_from_json(const nlohmann::json& j) {
    detail::require_keys(j, {"input_dim", "hidden_dim", "w1", "b1", "w2", "b2"},
                         {}, "value_net");
    ValueNetParams params;
    params.input_dim = j.at("input_dim").get<std::int32_t>();
    params.hidden_dim = j.at("hidden_dim").get<std::int32_t>();
    params.w1 = j.at("w1").get<std::vector<double>>();
    params.b1 = j.at("b1").get<std::vector<double>>();
    params.w2 = j.at("w2").get<std::vector<double>>();
    params.b2 = j.at("b2").get<double>();
    const std::size_t expected_w1 =
        static_cast<std::size_t>(params.hidden_dim) * params.input_dim;
    if (params.w1.size() != expected_w1 ||
        params.b1.size() != static_cast<std::size_t>(params.hidden_dim) ||
        params.w2.size() != static_cast<std::size_t>(params.hidden_dim)) {
        throw ValidationError("value_net: parameter sizes do not match dimensions");
    }
    return params;
}

inline void write_dataset_csv(const std::vector<TrainingPair>& pairs, std::ostream& out) {
    if (pairs.empty()) {
        throw ValidationError("write_dataset_csv: dataset is empty");
    }
    const std::size_t dim = pairs[0].features.size();
    for (std::size_t j = 0; j < dim; ++j) out << "f" << j << ",";
    out << "target\n";
    for (const TrainingPair& pair : pairs) {
        for (double f : pair.features) out << format_double(f) << ",";
        out << format_double(pair.target) << "\n";
    }
}

inline std::vector<TrainingPair> read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("read_dataset_csv: missing header");
    }
    const std::size_t columns = split(line, ',').size();
    if (columns < 2) {
        throw ValidationError("read_dataset_csv: header needs features and target");
    }
    std::vector<TrainingPair> pairs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells = split(line, ',');
        if (cells.size() != columns) {
            throw ValidationError("read_dataset_csv: row width does not match header");
        }
        TrainingPair pair;
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            pair.features.push_back(parse_double(cells[i]));
        }
        pair.target = parse_double(cells.back());
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace seqplan
