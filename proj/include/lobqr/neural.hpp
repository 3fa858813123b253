#pragma once

// Small MLP engine: embeddings for categorical inputs, hidden layers
// affine -> batch norm -> tanh, and a ReLU or softmax output layer.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lobqr/features.hpp"
#include "lobqr/json_util.hpp"

namespace lobqr {

inline constexpr int kEmbeddingDim = 2;
inline constexpr double kIntensityFloor = 1e-8;
inline constexpr int kModelSchemaVersion = 1;

enum class OutputKind { Relu, Softmax };
enum class LossKind { DqrNll, MdqrNll, SizeCe };

const char* to_string(LossKind kind);

struct MlpSpec {
    InputLayout layout;
    std::vector<int> hidden;
    int outputs = 1;
    OutputKind output = OutputKind::Relu;
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;
};

/// Intermediate values of a training-mode forward pass.
struct ForwardCache {
    Eigen::MatrixXd input;                 // concatenated numeric + embeddings
    std::vector<Eigen::MatrixXd> xhat;     // normalized pre-activations per hidden layer
    std::vector<Eigen::VectorXd> inv_std;  // per hidden layer
    std::vector<Eigen::VectorXd> mean;     // batch mean per hidden layer
    std::vector<Eigen::VectorXd> var;      // batch (biased) variance per hidden layer
    std::vector<Eigen::MatrixXd> act;      // tanh outputs per hidden layer
    Eigen::MatrixXd logits;
    Eigen::MatrixXd output;
};

class Mlp {
public:
    Mlp() = default;
    /// Glorot-uniform weights, zero biases, unit BN scale, embeddings in +-0.05.
    Mlp(MlpSpec spec, std::uint64_t seed);

    const MlpSpec& spec() const { return spec_; }
    std::string feature_schema() const { return spec_.layout.schema(); }

    /// Trainable tensors in a fixed order: embeddings, then per hidden layer
    /// W, b, gamma, beta, then output W, b.
    std::vector<Eigen::MatrixXd>& params() { return params_; }
    const std::vector<Eigen::MatrixXd>& params() const { return params_; }
    std::vector<Eigen::VectorXd>& running_mean() { return running_mean_; }
    std::vector<Eigen::VectorXd>& running_var() { return running_var_; }
    const std::vector<Eigen::VectorXd>& running_mean() const { return running_mean_; }
    const std::vector<Eigen::VectorXd>& running_var() const { return running_var_; }

    std::size_t embedding_param(std::size_t c) const { return c; }
    std::size_t weight_param(std::size_t layer) const;  // layer == hidden.size() is the output layer
    std::size_t bias_param(std::size_t layer) const { return weight_param(layer) + 1; }
    std::size_t gamma_param(std::size_t layer) const { return weight_param(layer) + 2; }
    std::size_t beta_param(std::size_t layer) const { return weight_param(layer) + 3; }

    /// Batch-statistics forward pass with no side effects. Throws ShapeMismatch.
    ForwardCache forward_train(const Inputs& x) const;
    /// Running-statistics forward pass.
    Eigen::MatrixXd infer(const Inputs& x) const;
    /// Blends the batch statistics of `cache` into the running statistics.
    void update_running_stats(const ForwardCache& cache);

    /// Gradient of scale * mean loss over the batch.
    std::vector<Eigen::MatrixXd> backward(const ForwardCache& cache, const Inputs& x, LossKind loss,
                                          const std::vector<int>& label, const std::vector<double>& dt,
                                          double scale = 1.0) const;

    ordered_json to_json() const;
    /// Throws FormatError on malformed content, VersionMismatch on schema conflicts.
    static Mlp from_json(const json& j, const std::string& expected_feature_schema = "");

    void save(const std::string& path) const;
    static Mlp load(const std::string& path, const std::string& expected_feature_schema = "");

private:
    Eigen::MatrixXd assemble_input(const Inputs& x) const;

    MlpSpec spec_;
    std::vector<Eigen::MatrixXd> params_;
    std::vector<Eigen::VectorXd> running_mean_;
    std::vector<Eigen::VectorXd> running_var_;
};

/// Mean loss over the columns of `output` (intensities or probabilities).
double batch_loss(const Eigen::MatrixXd& output, LossKind loss, const std::vector<int>& label,
                  const std::vector<double>& dt);
double batch_loss(const Eigen::MatrixXd& output, LossKind loss, const std::vector<int>& label,
                  const std::vector<double>& dt, std::size_t first);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
};

void adam_step(AdamState& state, std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads,
               double lr);

struct TrainConfig {
    double lr_min = 1e-5;
    double lr_max = 1e-3;
    /// Steps per full cycle; 0 means four epochs' worth of steps.
    std::size_t cycle_steps = 0;
    std::size_t batch_size = 1024;
    std::size_t patience = 10;
    std::size_t max_epochs = 100;
    /// Epoch count used when the validation set is empty.
    std::size_t fallback_epochs = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Triangular wave: lr_min at step 0, lr_max at half a cycle, lr_min again
/// after a full cycle.
double cyclic_lr(double lr_min, double lr_max, std::size_t cycle_steps, std::size_t step);

/// Early-stopping bookkeeping: a strictly lower validation loss resets the counter.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience) : patience_(patience) {}
    /// Returns true when training should stop after this epoch.
    bool update(double val_loss);
    std::size_t best_epoch() const { return best_epoch_; }  // 1-based
    double best_loss() const { return best_; }
    std::size_t epochs() const { return epochs_; }
    bool improved() const { return improved_; }

private:
    std::size_t patience_;
    std::size_t epochs_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t since_best_ = 0;
    double best_ = 0.0;
    bool improved_ = false;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr_end = 0.0;
    bool best = false;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    std::vector<std::string> warnings;
    double seconds = 0.0;

    ordered_json to_json() const;
};

struct TrainData {
    const Inputs* inputs = nullptr;
    const std::vector<int>* label = nullptr;
    const std::vector<double>* dt = nullptr;

    std::size_t size() const { return label ? label->size() : 0; }
    static TrainData of(const Dataset& d) { return {&d.inputs, &d.label, &d.dt}; }
};

/// Minibatch Adam with cyclic learning rate; keeps the parameters of the best
/// validation epoch. With an empty validation set it trains for
/// cfg.fallback_epochs and records a warning. Throws ValueError on empty
/// training data.
TrainHistory train_early_stop(Mlp& net, const TrainData& train, const TrainData& validation, const TrainConfig& cfg,
                              LossKind loss, const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Mean loss of `net` in inference mode over a dataset (in chunks).
double evaluate_loss(const Mlp& net, const TrainData& data, LossKind loss);

}  // namespace lobqr
