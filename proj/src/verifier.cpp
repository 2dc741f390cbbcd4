#include "coin/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "coin/rng.hpp"

namespace coin {

using nlohmann::json;

RoundDecision rule_verdict(std::span<const MatchScorePair> scores, double tau) {
    if (scores.empty()) return RoundDecision::reject;
    double sum_tb = 0.0, sum_ba = 0.0;
    for (const auto& pair : scores) {
        sum_tb += pair.s_tb;
        sum_ba += pair.s_ba;
    }
    const double n = static_cast<double>(scores.size());
    return (sum_tb / n > tau && sum_ba / n > tau) ? RoundDecision::accept
                                                  : RoundDecision::reject;
}

// ---------------------------------------------------------------------------
// DeepSets
// ---------------------------------------------------------------------------

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<std::array<double, 2>> canonical_elements(std::span<const MatchScorePair> scores) {
    std::vector<std::array<double, 2>> elements;
    elements.reserve(scores.size());
    for (const auto& pair : scores) elements.push_back({pair.s_tb, pair.s_ba});
    std::sort(elements.begin(), elements.end());
    return elements;
}

}  // namespace

DeepSetsModel::DeepSetsModel(size_t hidden)
    : phi_w1(hidden * 2, 0.0), phi_b1(hidden, 0.0), phi_w2(hidden * hidden, 0.0),
      phi_b2(hidden, 0.0), rho_w1(hidden * hidden, 0.0), rho_b1(hidden, 0.0),
      rho_w2(hidden, 0.0), hidden_(hidden) {
    if (hidden == 0) throw std::invalid_argument("DeepSetsModel: zero hidden size");
}

void DeepSetsModel::init_weights(uint64_t seed) {
    Rng rng(mix_key(seed, 0x4453));
    auto init = [&rng](std::vector<double>& w, size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : w) v = rng.uniform(-bound, bound);
    };
    init(phi_w1, 2);
    init(phi_w2, hidden_);
    init(rho_w1, hidden_);
    init(rho_w2, hidden_);
    std::fill(phi_b1.begin(), phi_b1.end(), 0.0);
    std::fill(phi_b2.begin(), phi_b2.end(), 0.0);
    std::fill(rho_b1.begin(), rho_b1.end(), 0.0);
    rho_b2 = 0.0;
}

double DeepSetsModel::forward(std::span<const MatchScorePair> scores) const {
    if (scores.empty()) {
        throw std::invalid_argument("DeepSetsModel::forward: empty score set");
    }
    const auto elements = canonical_elements(scores);
    const size_t H = hidden_;
    std::vector<double> pooled(H, 0.0), h1(H);
    for (const auto& x : elements) {
        for (size_t j = 0; j < H; ++j) {
            const double z = phi_w1[2 * j] * x[0] + phi_w1[2 * j + 1] * x[1] + phi_b1[j];
            h1[j] = z > 0.0 ? z : 0.0;
        }
        for (size_t j = 0; j < H; ++j) {
            const double* row = phi_w2.data() + j * H;
            double z = phi_b2[j];
            for (size_t i = 0; i < H; ++i) z += row[i] * h1[i];
            if (z > 0.0) pooled[j] += z;
        }
    }
    double z_out = rho_b2;
    for (size_t j = 0; j < H; ++j) {
        const double* row = rho_w1.data() + j * H;
        double z = rho_b1[j];
        for (size_t i = 0; i < H; ++i) z += row[i] * pooled[i];
        if (z > 0.0) z_out += rho_w2[j] * z;
    }
    return sigmoid(z_out);
}

double DeepSetsModel::loss_and_gradients(std::span<const MatchScorePair> scores, int label,
                                         Gradients& grads) const {
    if (scores.empty()) {
        throw std::invalid_argument("DeepSetsModel::loss_and_gradients: empty score set");
    }
    const auto elements = canonical_elements(scores);
    const size_t H = hidden_;
    const size_t count = elements.size();

    // Forward pass, keeping per-element activations.
    std::vector<double> h1_all(count * H), h2_all(count * H);
    std::vector<double> pooled(H, 0.0);
    for (size_t e = 0; e < count; ++e) {
        const auto& x = elements[e];
        double* h1 = h1_all.data() + e * H;
        double* h2 = h2_all.data() + e * H;
        for (size_t j = 0; j < H; ++j) {
            const double z = phi_w1[2 * j] * x[0] + phi_w1[2 * j + 1] * x[1] + phi_b1[j];
            h1[j] = z > 0.0 ? z : 0.0;
        }
        for (size_t j = 0; j < H; ++j) {
            const double* row = phi_w2.data() + j * H;
            double z = phi_b2[j];
            for (size_t i = 0; i < H; ++i) z += row[i] * h1[i];
            h2[j] = z > 0.0 ? z : 0.0;
            pooled[j] += h2[j];
        }
    }
    std::vector<double> r1(H);
    for (size_t j = 0; j < H; ++j) {
        const double* row = rho_w1.data() + j * H;
        double z = rho_b1[j];
        for (size_t i = 0; i < H; ++i) z += row[i] * pooled[i];
        r1[j] = z > 0.0 ? z : 0.0;
    }
    double z_out = rho_b2;
    for (size_t j = 0; j < H; ++j) z_out += rho_w2[j] * r1[j];
    const double confidence = sigmoid(z_out);

    constexpr double eps = 1e-12;
    const double y = static_cast<double>(label);
    const double loss = -(y * std::log(std::max(confidence, eps)) +
                          (1.0 - y) * std::log(std::max(1.0 - confidence, eps)));

    // Backward.
    grads.phi_w1.assign(phi_w1.size(), 0.0);
    grads.phi_b1.assign(phi_b1.size(), 0.0);
    grads.phi_w2.assign(phi_w2.size(), 0.0);
    grads.phi_b2.assign(phi_b2.size(), 0.0);
    grads.rho_w1.assign(rho_w1.size(), 0.0);
    grads.rho_b1.assign(rho_b1.size(), 0.0);
    grads.rho_w2.assign(rho_w2.size(), 0.0);

    const double dz_out = confidence - y;  // BCE through the logistic output
    grads.rho_b2 = dz_out;
    std::vector<double> dr1(H, 0.0), dpooled(H, 0.0);
    for (size_t j = 0; j < H; ++j) {
        grads.rho_w2[j] = dz_out * r1[j];
        dr1[j] = r1[j] > 0.0 ? dz_out * rho_w2[j] : 0.0;
    }
    for (size_t j = 0; j < H; ++j) {
        if (dr1[j] == 0.0) continue;
        grads.rho_b1[j] = dr1[j];
        double* grow = grads.rho_w1.data() + j * H;
        const double* row = rho_w1.data() + j * H;
        for (size_t i = 0; i < H; ++i) {
            grow[i] = dr1[j] * pooled[i];
            dpooled[i] += dr1[j] * row[i];
        }
    }
    std::vector<double> dh1(H);
    for (size_t e = 0; e < count; ++e) {
        const auto& x = elements[e];
        const double* h1 = h1_all.data() + e * H;
        const double* h2 = h2_all.data() + e * H;
        std::fill(dh1.begin(), dh1.end(), 0.0);
        for (size_t j = 0; j < H; ++j) {
            if (h2[j] <= 0.0) continue;
            const double dz = dpooled[j];  // sum pooling passes gradients through
            grads.phi_b2[j] += dz;
            double* grow = grads.phi_w2.data() + j * H;
            const double* row = phi_w2.data() + j * H;
            for (size_t i = 0; i < H; ++i) {
                grow[i] += dz * h1[i];
                dh1[i] += dz * row[i];
            }
        }
        for (size_t j = 0; j < H; ++j) {
            if (h1[j] <= 0.0 || dh1[j] == 0.0) continue;
            grads.phi_b1[j] += dh1[j];
            grads.phi_w1[2 * j] += dh1[j] * x[0];
            grads.phi_w1[2 * j + 1] += dh1[j] * x[1];
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

json weights_to_json(const std::vector<double>& values) {
    json arr = json::array();
    for (double v : values) arr.push_back(static_cast<double>(static_cast<float>(v)));
    return arr;
}

std::vector<double> weights_from_json(const json& arr) {
    std::vector<double> values;
    values.reserve(arr.size());
    for (const auto& v : arr) values.push_back(static_cast<double>(static_cast<float>(v.get<double>())));
    return values;
}

}  // namespace

std::string DeepSetsModel::to_json_string() const {
    json envelope{
        {"kind", "deepsets"},
        {"H", hidden_},
        {"phi_w1", weights_to_json(phi_w1)},
        {"phi_b1", weights_to_json(phi_b1)},
        {"phi_w2", weights_to_json(phi_w2)},
        {"phi_b2", weights_to_json(phi_b2)},
        {"rho_w1", weights_to_json(rho_w1)},
        {"rho_b1", weights_to_json(rho_b1)},
        {"rho_w2", weights_to_json(rho_w2)},
        {"rho_b2", static_cast<double>(static_cast<float>(rho_b2))},
        {"train_meta", json::object()},
    };
    return envelope.dump();
}

DeepSetsModel DeepSetsModel::from_json_string(const std::string& text) {
    json envelope = json::parse(text);
    if (envelope.at("kind").get<std::string>() != "deepsets") {
        throw std::runtime_error("DeepSetsModel: wrong envelope kind");
    }
    DeepSetsModel model(envelope.at("H").get<size_t>());
    model.phi_w1 = weights_from_json(envelope.at("phi_w1"));
    model.phi_b1 = weights_from_json(envelope.at("phi_b1"));
    model.phi_w2 = weights_from_json(envelope.at("phi_w2"));
    model.phi_b2 = weights_from_json(envelope.at("phi_b2"));
    model.rho_w1 = weights_from_json(envelope.at("rho_w1"));
    model.rho_b1 = weights_from_json(envelope.at("rho_b1"));
    model.rho_w2 = weights_from_json(envelope.at("rho_w2"));
    model.rho_b2 = static_cast<double>(static_cast<float>(envelope.at("rho_b2").get<double>()));
    const size_t H = model.hidden();
    if (model.phi_w1.size() != 2 * H || model.phi_w2.size() != H * H ||
        model.rho_w1.size() != H * H || model.rho_w2.size() != H) {
        throw std::runtime_error("DeepSetsModel: inconsistent weight shapes");
    }
    return model;
}

void DeepSetsModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << to_json_string() << '\n';
}

DeepSetsModel DeepSetsModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

void adam_update(std::vector<double>& params, AdamState& state,
                 const std::vector<double>& grad, double lr, double bias1, double bias2) {
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * grad[i];
        state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        params[i] -= lr * (state.m[i] / bias1) / (std::sqrt(state.v[i] / bias2) + kEps);
    }
}

}  // namespace

DeepSetsModel train_deepsets(const std::vector<LabeledScoreSet>& data,
                             const DeepSetsTrainConfig& config, size_t hidden,
                             std::vector<double>* epoch_losses) {
    if (data.empty()) {
        throw std::invalid_argument("train_deepsets: empty dataset");
    }
    const bool has_pos = std::any_of(data.begin(), data.end(),
                                     [](const auto& s) { return s.label == 1; });
    const bool has_neg = std::any_of(data.begin(), data.end(),
                                     [](const auto& s) { return s.label == 0; });
    if (!has_pos || !has_neg) {
        throw std::invalid_argument("train_deepsets: dataset needs both labels");
    }

    DeepSetsModel model(hidden);
    model.init_weights(config.seed);

    std::vector<std::vector<double>*> params = {
        &model.phi_w1, &model.phi_b1, &model.phi_w2, &model.phi_b2,
        &model.rho_w1, &model.rho_b1, &model.rho_w2};
    std::vector<AdamState> states;
    for (auto* p : params) states.emplace_back(p->size());
    AdamState state_b2(1);

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(mix_key(config.seed, 0x6473));

    DeepSetsModel::Gradients sample;
    std::vector<std::vector<double>> batch(params.size());
    std::vector<double> b2_param(1, 0.0), b2_grad(1, 0.0);
    size_t step = 0;
    if (epoch_losses) epoch_losses->clear();
    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffler.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t end = std::min(order.size(), start + config.batch_size);
            for (size_t i = 0; i < params.size(); ++i) batch[i].assign(params[i]->size(), 0.0);
            b2_grad[0] = 0.0;
            const double inv = 1.0 / static_cast<double>(end - start);
            for (size_t s = start; s < end; ++s) {
                const auto& item = data[order[s]];
                epoch_loss += model.loss_and_gradients(item.scores, item.label, sample);
                const std::vector<double>* grads[] = {
                    &sample.phi_w1, &sample.phi_b1, &sample.phi_w2, &sample.phi_b2,
                    &sample.rho_w1, &sample.rho_b1, &sample.rho_w2};
                for (size_t g = 0; g < params.size(); ++g) {
                    for (size_t i = 0; i < batch[g].size(); ++i) batch[g][i] += inv * (*grads[g])[i];
                }
                b2_grad[0] += inv * sample.rho_b2;
            }
            ++step;
            const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (size_t g = 0; g < params.size(); ++g) {
                adam_update(*params[g], states[g], batch[g], config.learning_rate, bias1, bias2);
            }
            b2_param[0] = model.rho_b2;
            adam_update(b2_param, state_b2, b2_grad, config.learning_rate, bias1, bias2);
            model.rho_b2 = b2_param[0];
        }
        if (epoch_losses) {
            epoch_losses->push_back(epoch_loss / static_cast<double>(order.size()));
        }
    }
    return model;
}

}  // namespace coin
