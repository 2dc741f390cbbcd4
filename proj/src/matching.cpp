#include "coin/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "coin/rng.hpp"

namespace coin {

using nlohmann::json;

const char* to_string(HeadKind kind) {
    return kind == HeadKind::token_to_block ? "token_to_block" : "block_to_answer";
}

MatchFeature build_features(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("build_features: dimension mismatch");
    }
    const size_t d = a.size();
    MatchFeature h;
    h.reserve(4 * d + 1);
    h.insert(h.end(), a.begin(), a.end());
    h.insert(h.end(), b.begin(), b.end());
    for (size_t i = 0; i < d; ++i) h.push_back(a[i] - b[i]);
    for (size_t i = 0; i < d; ++i) h.push_back(a[i] * b[i]);
    h.push_back(static_cast<float>(cosine_similarity(a, b)));
    return h;
}

double focal_loss(double p, int label, double gamma_f, double alpha_f) {
    constexpr double eps = 1e-7;
    p = std::clamp(p, eps, 1.0 - eps);
    const double p_t = label == 1 ? p : 1.0 - p;
    const double alpha_t = label == 1 ? alpha_f : 1.0 - alpha_f;
    return -alpha_t * std::pow(1.0 - p_t, gamma_f) * std::log(p_t);
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// dL/dp for the configured loss (bce is the gamma = 0, alpha = 0.5 focal
// case scaled by 2).
double loss_grad_p(double p, int label, const TrainConfig& config) {
    constexpr double eps = 1e-7;
    const bool bce = config.loss == LossKind::bce;
    const double gamma = bce ? 0.0 : config.focal_gamma;
    const double alpha = bce ? 0.5 : config.focal_alpha;
    const double pc = std::clamp(p, eps, 1.0 - eps);
    const double p_t = label == 1 ? pc : 1.0 - pc;
    const double alpha_t = label == 1 ? alpha : 1.0 - alpha;
    const double one_minus = 1.0 - p_t;
    // d/dp_t of -alpha_t (1-p_t)^gamma log(p_t)
    double d_pt = -alpha_t * std::pow(one_minus, gamma) / p_t;
    if (gamma != 0.0) {
        d_pt += alpha_t * gamma * std::pow(one_minus, gamma - 1.0) * std::log(p_t);
    }
    if (bce) d_pt *= 2.0;
    return label == 1 ? d_pt : -d_pt;
}

double loss_value(double p, int label, const TrainConfig& config) {
    if (config.loss == LossKind::bce) {
        return 2.0 * focal_loss(p, label, 0.0, 0.5);
    }
    return focal_loss(p, label, config.focal_gamma, config.focal_alpha);
}

}  // namespace

// ---------------------------------------------------------------------------
// MatchingHead
// ---------------------------------------------------------------------------

MatchingHead::MatchingHead(HeadKind kind, size_t embedding_dim, size_t hidden)
    : kind_(kind), embedding_dim_(embedding_dim), hidden_(hidden),
      w1_(hidden * (4 * embedding_dim + 1), 0.0), b1_(hidden, 0.0), w2_(hidden, 0.0) {
    if (embedding_dim == 0 || hidden == 0) {
        throw std::invalid_argument("MatchingHead: zero-sized layer");
    }
}

void MatchingHead::init_weights(uint64_t seed) {
    Rng rng(mix_key(seed, 0x4d48));  // per-head stream
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim()));
    for (auto& w : w1_) w = rng.uniform(-bound1, bound1);
    std::fill(b1_.begin(), b1_.end(), 0.0);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (auto& w : w2_) w = rng.uniform(-bound2, bound2);
    b2_ = 0.0;
}

double MatchingHead::logit(const MatchFeature& feature, std::vector<double>* hidden_out) const {
    if (feature.size() != input_dim()) {
        throw std::invalid_argument("MatchingHead: feature length mismatch");
    }
    const size_t in = input_dim();
    double z2 = b2_;
    if (hidden_out) hidden_out->assign(hidden_, 0.0);
    for (size_t j = 0; j < hidden_; ++j) {
        const double* row = w1_.data() + j * in;
        double z = b1_[j];
        for (size_t i = 0; i < in; ++i) z += row[i] * static_cast<double>(feature[i]);
        const double a = z > 0.0 ? z : 0.0;
        if (hidden_out) (*hidden_out)[j] = a;
        z2 += w2_[j] * a;
    }
    return z2;
}

double MatchingHead::inflated_probability(const MatchFeature& feature) const {
    return sigmoid(logit(feature, nullptr));
}

double MatchingHead::forward(const MatchFeature& feature) const {
    return 1.0 - inflated_probability(feature);
}

double MatchingHead::loss_and_gradients(const MatchFeature& feature, int label,
                                        const TrainConfig& config, HeadGradients& grads) const {
    std::vector<double> hidden_act;
    const double z2 = logit(feature, &hidden_act);
    const double p = sigmoid(z2);
    const double loss = loss_value(p, label, config);
    const double dz2 = loss_grad_p(p, label, config) * p * (1.0 - p);

    const size_t in = input_dim();
    grads.w1.assign(hidden_ * in, 0.0);
    grads.b1.assign(hidden_, 0.0);
    grads.w2.assign(hidden_, 0.0);
    grads.b2 = dz2;
    for (size_t j = 0; j < hidden_; ++j) {
        grads.w2[j] = dz2 * hidden_act[j];
        if (hidden_act[j] > 0.0) {
            const double dz1 = dz2 * w2_[j];
            grads.b1[j] = dz1;
            double* row = grads.w1.data() + j * in;
            for (size_t i = 0; i < in; ++i) {
                row[i] = dz1 * static_cast<double>(feature[i]);
            }
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Persistence: JSON envelope with 32-bit-precision weight values.
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

std::string MatchingHead::to_json_string() const {
    json envelope{
        {"kind", to_string(kind_)},
        {"d", embedding_dim_},
        {"H", hidden_},
        {"layer1", weights_to_json(w1_)},
        {"bias1", weights_to_json(b1_)},
        {"layer2", weights_to_json(w2_)},
        {"bias2", static_cast<double>(static_cast<float>(b2_))},
        {"train_meta", json::object()},
    };
    return envelope.dump();
}

MatchingHead MatchingHead::from_json_string(const std::string& text) {
    json envelope = json::parse(text);
    const std::string kind_name = envelope.at("kind").get<std::string>();
    HeadKind kind;
    if (kind_name == "token_to_block") {
        kind = HeadKind::token_to_block;
    } else if (kind_name == "block_to_answer") {
        kind = HeadKind::block_to_answer;
    } else {
        throw std::runtime_error("MatchingHead: unknown kind " + kind_name);
    }
    MatchingHead head(kind, envelope.at("d").get<size_t>(), envelope.at("H").get<size_t>());
    head.w1_ = weights_from_json(envelope.at("layer1"));
    head.b1_ = weights_from_json(envelope.at("bias1"));
    head.w2_ = weights_from_json(envelope.at("layer2"));
    head.b2_ = static_cast<double>(static_cast<float>(envelope.at("bias2").get<double>()));
    if (head.w1_.size() != head.hidden() * head.input_dim() ||
        head.b1_.size() != head.hidden() || head.w2_.size() != head.hidden()) {
        throw std::runtime_error("MatchingHead: inconsistent weight shapes");
    }
    return head;
}

void MatchingHead::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << to_json_string() << '\n';
}

MatchingHead MatchingHead::load(const std::string& path) {
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
    std::vector<double> m;
    std::vector<double> v;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(std::vector<double>& params, AdamState& state,
                 const std::vector<double>& grad, double lr, double bias1, double bias2) {
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bias1;
        const double v_hat = state.v[i] / bias2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
}

}  // namespace

MatchingHead train_matching_head(HeadKind kind, size_t embedding_dim,
                                 const std::vector<LabeledFeature>& data,
                                 const TrainConfig& config, size_t hidden,
                                 std::vector<double>* epoch_losses) {
    if (data.empty()) {
        throw std::invalid_argument("train_matching_head: empty dataset");
    }
    const bool has_pos = std::any_of(data.begin(), data.end(),
                                     [](const auto& s) { return s.label == 1; });
    const bool has_neg = std::any_of(data.begin(), data.end(),
                                     [](const auto& s) { return s.label == 0; });
    if (!has_pos || !has_neg) {
        throw std::invalid_argument("train_matching_head: dataset needs both labels");
    }

    MatchingHead head(kind, embedding_dim, hidden);
    head.init_weights(config.seed);

    AdamState st_w1(head.w1().size()), st_b1(head.b1().size()), st_w2(head.w2().size());
    AdamState st_b2(1);
    std::vector<double> g_w1(head.w1().size()), g_b1(head.b1().size()), g_w2(head.w2().size());
    std::vector<double> b2_param(1, 0.0), g_b2(1, 0.0);

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(mix_key(config.seed, 0x7368));

    HeadGradients sample;
    size_t step = 0;
    if (epoch_losses) epoch_losses->clear();
    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffler.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t end = std::min(order.size(), start + config.batch_size);
            std::fill(g_w1.begin(), g_w1.end(), 0.0);
            std::fill(g_b1.begin(), g_b1.end(), 0.0);
            std::fill(g_w2.begin(), g_w2.end(), 0.0);
            g_b2[0] = 0.0;
            const double inv = 1.0 / static_cast<double>(end - start);
            for (size_t s = start; s < end; ++s) {
                const auto& item = data[order[s]];
                epoch_loss += head.loss_and_gradients(item.feature, item.label, config, sample);
                for (size_t i = 0; i < g_w1.size(); ++i) g_w1[i] += inv * sample.w1[i];
                for (size_t i = 0; i < g_b1.size(); ++i) g_b1[i] += inv * sample.b1[i];
                for (size_t i = 0; i < g_w2.size(); ++i) g_w2[i] += inv * sample.w2[i];
                g_b2[0] += inv * sample.b2;
            }
            ++step;
            const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
            const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
            adam_update(head.w1(), st_w1, g_w1, config.learning_rate, bias1, bias2);
            adam_update(head.b1(), st_b1, g_b1, config.learning_rate, bias1, bias2);
            adam_update(head.w2(), st_w2, g_w2, config.learning_rate, bias1, bias2);
            b2_param[0] = head.b2();
            adam_update(b2_param, st_b2, g_b2, config.learning_rate, bias1, bias2);
            head.b2() = b2_param[0];
        }
        if (epoch_losses) {
            epoch_losses->push_back(epoch_loss / static_cast<double>(order.size()));
        }
    }
    return head;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

double score_token_to_block(const MatchingHead& head,
                            const std::vector<Embedding>& sampled_token_embeddings,
                            const Embedding& block_embedding) {
    if (sampled_token_embeddings.empty()) {
        throw std::invalid_argument("score_token_to_block: no sampled tokens");
    }
    const Embedding mean = average_embeddings(sampled_token_embeddings);
    return head.forward(build_features(mean, block_embedding));
}

double score_block_to_answer(const MatchingHead& head, const Embedding& block_embedding,
                             const Embedding& answer_embedding) {
    return head.forward(build_features(block_embedding, answer_embedding));
}

}  // namespace coin
