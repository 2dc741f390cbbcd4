#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coin/embedding.hpp"

namespace coin {

// Pair feature [a; b; a-b; a*b; cos_sim], length 4d+1.
using MatchFeature = std::vector<float>;

MatchFeature build_features(const Embedding& a, const Embedding& b);

enum class HeadKind { token_to_block, block_to_answer };

const char* to_string(HeadKind kind);

enum class LossKind { focal, bce };

struct TrainConfig {
    double learning_rate = 2e-5;
    size_t batch_size = 128;
    size_t epochs = 3;
    LossKind loss = LossKind::focal;
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;
    uint64_t seed = 42;
};

// Standard focal loss on a predicted inflated-probability p and label
// y in {0,1}; p is clamped to [1e-7, 1-1e-7]. gamma_f = 0, alpha_f = 0.5
// reduces to half the binary cross-entropy.
double focal_loss(double p, int label, double gamma_f = 2.0, double alpha_f = 0.25);

struct HeadGradients {
    std::vector<double> w1;  // hidden x input, row-major
    std::vector<double> b1;
    std::vector<double> w2;  // hidden
    double b2 = 0.0;
};

// Two-layer feedforward scorer: input (4d+1) -> hidden (rectifier) -> 1
// (logistic). The network is trained to predict p = P(inflated); the match
// score is S = 1 - p so that larger S means better semantic alignment and
// the verifier keeps its "exceeds tau" acceptance rule.
class MatchingHead {
public:
    MatchingHead(HeadKind kind, size_t embedding_dim, size_t hidden = 384);

    HeadKind kind() const { return kind_; }
    size_t embedding_dim() const { return embedding_dim_; }
    size_t input_dim() const { return 4 * embedding_dim_ + 1; }
    size_t hidden() const { return hidden_; }

    // Match score S in (0, 1).
    double forward(const MatchFeature& feature) const;
    // Raw classifier output p = P(inflated) in (0, 1).
    double inflated_probability(const MatchFeature& feature) const;

    // Loss and analytic parameter gradients for one labeled feature.
    double loss_and_gradients(const MatchFeature& feature, int label,
                              const TrainConfig& config, HeadGradients& grads) const;

    void init_weights(uint64_t seed);

    void save(const std::string& path) const;
    static MatchingHead load(const std::string& path);

    std::string to_json_string() const;
    static MatchingHead from_json_string(const std::string& text);

    // Flat parameter access (tests, optimizer).
    std::vector<double>& w1() { return w1_; }
    std::vector<double>& b1() { return b1_; }
    std::vector<double>& w2() { return w2_; }
    double& b2() { return b2_; }
    const std::vector<double>& w1() const { return w1_; }
    const std::vector<double>& b1() const { return b1_; }
    const std::vector<double>& w2() const { return w2_; }
    double b2() const { return b2_; }

private:
    double logit(const MatchFeature& feature, std::vector<double>* hidden_out) const;

    HeadKind kind_;
    size_t embedding_dim_;
    size_t hidden_;
    std::vector<double> w1_;
    std::vector<double> b1_;
    std::vector<double> w2_;
    double b2_ = 0.0;
};

struct LabeledFeature {
    MatchFeature feature;
    int label = 0;  // 0 benign, 1 inflated
};

// Mini-batch Adam over shuffled epochs; deterministic under config.seed.
// When epoch_losses is given it receives the mean training loss per epoch.
MatchingHead train_matching_head(HeadKind kind, size_t embedding_dim,
                                 const std::vector<LabeledFeature>& data,
                                 const TrainConfig& config, size_t hidden = 384,
                                 std::vector<double>* epoch_losses = nullptr);

// Eq.-style scoring entry points.
double score_token_to_block(const MatchingHead& head,
                            const std::vector<Embedding>& sampled_token_embeddings,
                            const Embedding& block_embedding);
double score_block_to_answer(const MatchingHead& head, const Embedding& block_embedding,
                             const Embedding& answer_embedding);

}  // namespace coin
