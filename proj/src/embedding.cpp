#include "coin/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "coin/rng.hpp"

namespace coin {

// ---------------------------------------------------------------------------
// SyntheticProvider
// ---------------------------------------------------------------------------

SyntheticProvider::SyntheticProvider(uint64_t seed, size_t dimension)
    : name_("synthetic-" + std::to_string(seed)), seed_(seed), dimension_(dimension) {
    if (dimension_ == 0) throw std::invalid_argument("SyntheticProvider: dimension must be >= 1");
}

const Embedding& SyntheticProvider::token_vector(uint32_t id) const {
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(id);
        if (it != cache_.end()) return it->second;
    }
    Rng rng(mix_key(seed_, id));
    std::vector<double> raw(dimension_);
    double norm_sq = 0.0;
    for (auto& v : raw) {
        v = rng.gaussian();
        norm_sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    Embedding vec(dimension_);
    for (size_t i = 0; i < dimension_; ++i) {
        vec[i] = static_cast<float>(raw[i] * inv);
    }
    std::unique_lock lock(mutex_);
    return cache_.emplace(id, std::move(vec)).first->second;
}

Embedding SyntheticProvider::embed_token(const Token& token) const {
    return token_vector(token.id);
}

Embedding SyntheticProvider::embed_block(const TokenSeq& tokens) const {
    if (tokens.empty()) {
        throw std::invalid_argument("SyntheticProvider::embed_block: empty block");
    }
    // Accumulate count * vector over sorted distinct ids: order-free and
    // cheaper than touching every occurrence.
    std::map<uint32_t, size_t> counts;
    for (const auto& token : tokens) counts[token.id]++;

    std::vector<double> sum(dimension_, 0.0);
    for (const auto& [id, count] : counts) {
        const Embedding& vec = token_vector(id);
        const double weight = static_cast<double>(count);
        for (size_t i = 0; i < dimension_; ++i) {
            sum[i] += weight * static_cast<double>(vec[i]);
        }
    }
    const double inv_count = 1.0 / static_cast<double>(tokens.size());
    double norm_sq = 0.0;
    for (auto& v : sum) {
        v *= inv_count;
        norm_sq += v * v;
    }
    Embedding out(dimension_);
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (size_t i = 0; i < dimension_; ++i) out[i] = static_cast<float>(sum[i] * inv);
    }
    return out;
}

// ---------------------------------------------------------------------------
// SubprocessProvider
// ---------------------------------------------------------------------------

namespace {

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

}  // namespace

SubprocessProvider::SubprocessProvider(const std::string& command, std::string name)
    : name_(std::move(name)) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
        throw ProviderUnavailable("embedding subprocess: pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        throw ProviderUnavailable("embedding subprocess: fork failed");
    }
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    child_pid_ = pid;
    to_child_ = to_child[1];
    from_child_ = from_child[0];
    ::close(to_child[0]);
    ::close(from_child[1]);

    // Dimension negotiation: embed one empty string.
    auto probe = embed_texts({""});
    if (probe.size() != 1 || probe[0].empty()) {
        throw ProviderUnavailable("embedding subprocess: bad handshake response");
    }
    dimension_ = probe[0].size();
}

SubprocessProvider::~SubprocessProvider() {
    close_fd(to_child_);
    close_fd(from_child_);
    if (child_pid_ > 0) {
        ::kill(child_pid_, SIGTERM);
        int status = 0;
        ::waitpid(child_pid_, &status, 0);
    }
}

std::vector<Embedding> SubprocessProvider::embed_texts(const std::vector<std::string>& texts) const {
    std::lock_guard lock(transport_mutex_);
    nlohmann::json request{{"texts", texts}};
    std::string line = request.dump();
    line.push_back('\n');

    size_t written = 0;
    while (written < line.size()) {
        const ssize_t rc = ::write(to_child_, line.data() + written, line.size() - written);
        if (rc <= 0) throw ProviderUnavailable("embedding subprocess: write failed");
        written += static_cast<size_t>(rc);
    }

    // Read one response line.
    std::string response;
    for (;;) {
        const size_t newline = read_buffer_.find('\n');
        if (newline != std::string::npos) {
            response = read_buffer_.substr(0, newline);
            read_buffer_.erase(0, newline + 1);
            break;
        }
        char chunk[4096];
        const ssize_t rc = ::read(from_child_, chunk, sizeof(chunk));
        if (rc <= 0) throw ProviderUnavailable("embedding subprocess: read failed");
        read_buffer_.append(chunk, static_cast<size_t>(rc));
    }

    nlohmann::json parsed = nlohmann::json::parse(response, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("vectors")) {
        throw ProviderUnavailable("embedding subprocess: malformed response");
    }
    std::vector<Embedding> vectors;
    for (const auto& item : parsed["vectors"]) {
        Embedding vec;
        vec.reserve(item.size());
        for (const auto& v : item) vec.push_back(v.get<float>());
        if (dimension_ != 0 && vec.size() != dimension_) {
            throw ProviderUnavailable("embedding subprocess: dimension changed mid-stream");
        }
        vectors.push_back(std::move(vec));
    }
    if (vectors.size() != texts.size()) {
        throw ProviderUnavailable("embedding subprocess: response count mismatch");
    }
    return vectors;
}

Embedding SubprocessProvider::embed_token(const Token& token) const {
    return embed_texts({token.surface})[0];
}

Embedding SubprocessProvider::embed_block(const TokenSeq& tokens) const {
    if (tokens.empty()) {
        throw std::invalid_argument("SubprocessProvider::embed_block: empty block");
    }
    std::string text;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) text.push_back(' ');
        text += tokens[i].surface;
    }
    return embed_texts({text})[0];
}

// ---------------------------------------------------------------------------
// Vector ops
// ---------------------------------------------------------------------------

Embedding average_embeddings(const std::vector<Embedding>& embeddings) {
    if (embeddings.empty()) {
        throw std::invalid_argument("average_embeddings: empty input");
    }
    const size_t dim = embeddings.front().size();
    std::vector<double> sum(dim, 0.0);
    for (const auto& vec : embeddings) {
        if (vec.size() != dim) {
            throw std::invalid_argument("average_embeddings: dimension mismatch");
        }
        for (size_t i = 0; i < dim; ++i) sum[i] += static_cast<double>(vec[i]);
    }
    const double inv = 1.0 / static_cast<double>(embeddings.size());
    Embedding out(dim);
    for (size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(sum[i] * inv);
    return out;
}

double cosine_similarity(const Embedding& a, const Embedding& b, bool* degenerate) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    }
    if (degenerate) *degenerate = false;
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    bool equal = true, opposite = true;
    for (size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
        equal = equal && (x == y);
        opposite = opposite && (x == -y);
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    // Exact results for the aligned cases the feature map relies on.
    if (equal) return 1.0;
    if (opposite) return -1.0;
    const double cos = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
    return std::clamp(cos, -1.0, 1.0);
}

}  // namespace coin
