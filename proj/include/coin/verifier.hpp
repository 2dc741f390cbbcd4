#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace coin {

// Evidence unit: the two relevance scores of one audited block.
struct MatchScorePair {
    double s_tb = 0.0;
    double s_ba = 0.0;
    uint64_t block_index = 0;
};

enum class RoundDecision { accept, reject };

// Accept iff both score means exceed tau. An empty evidence set rejects.
RoundDecision rule_verdict(std::span<const MatchScorePair> scores, double tau);

struct DeepSetsTrainConfig {
    double learning_rate = 1e-3;
    size_t batch_size = 128;
    size_t epochs = 5;
    uint64_t seed = 42;
};

// Permutation-invariant set scorer over (s_tb, s_ba) pairs:
// rho(sum_i phi(pair_i)) with phi: 2 -> H -> H and rho: H -> H -> 1, both
// rectified, logistic output. The output is the confidence that the audited
// evidence is benign, so the audit accepts iff confidence > tau. Elements
// are summed in canonical (sorted-by-value) order, which makes permutation
// invariance exact rather than up to float rounding.
class DeepSetsModel {
public:
    explicit DeepSetsModel(size_t hidden = 256);

    size_t hidden() const { return hidden_; }

    // Confidence in (0, 1); throws on an empty set (the protocol rejects
    // empty evidence without evaluating the model).
    double forward(std::span<const MatchScorePair> scores) const;

    void init_weights(uint64_t seed);

    void save(const std::string& path) const;
    static DeepSetsModel load(const std::string& path);
    std::string to_json_string() const;
    static DeepSetsModel from_json_string(const std::string& text);

    struct Gradients;
    double loss_and_gradients(std::span<const MatchScorePair> scores, int label,
                              Gradients& grads) const;

    struct Gradients {
        std::vector<double> phi_w1, phi_b1, phi_w2, phi_b2;
        std::vector<double> rho_w1, rho_b1, rho_w2;
        double rho_b2 = 0.0;
    };

    // Parameters (phi: 2 -> H -> H, rho: H -> H -> 1), row-major.
    std::vector<double> phi_w1, phi_b1, phi_w2, phi_b2;
    std::vector<double> rho_w1, rho_b1, rho_w2;
    double rho_b2 = 0.0;

private:
    size_t hidden_;
};

struct LabeledScoreSet {
    std::vector<MatchScorePair> scores;
    int label = 0;  // 1 = benign (accept target), 0 = inflated
};

// Adam + binary cross-entropy over shuffled mini-batches of score sets;
// deterministic under config.seed. When epoch_losses is given it receives
// the mean training loss per epoch.
DeepSetsModel train_deepsets(const std::vector<LabeledScoreSet>& data,
                             const DeepSetsTrainConfig& config, size_t hidden = 256,
                             std::vector<double>* epoch_losses = nullptr);

}  // namespace coin
