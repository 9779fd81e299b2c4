#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridmarl/rng.hpp"

namespace gridmarl {

// Row-major dense matrix of doubles. All network math is 64-bit.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Fully connected network with tanh hidden layers and a linear output layer.
// weights[l] has shape [layer_dims[l+1] x layer_dims[l]].
struct MultiLayerPerceptron {
    std::vector<int> layer_dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
};

// Gradient (or Adam moment) container shaped like the network parameters.
struct ParamGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    void zero();
};

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    ParamGrads m;
    ParamGrads v;
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Network construction: Xavier-uniform weights, zero biases.
MultiLayerPerceptron make_mlp(const std::vector<int>& layer_dims, Rng& rng);
AdamState make_adam(const MultiLayerPerceptron& net, double learning_rate);
ParamGrads make_grads(const MultiLayerPerceptron& net);

std::vector<double> forward(const MultiLayerPerceptron& net, std::span<const double> input);

// Reverse-mode gradients of sum(output * output_grad) with respect to every
// weight and bias.
ParamGrads backward(const MultiLayerPerceptron& net, std::span<const double> input,
                    std::span<const double> output_grad);

struct TdLossResult {
    double loss = 0.0;
    ParamGrads grads;
};

// Squared TD error on one output head: loss = (Q(state)[action] - target)^2.
// Gradient flows through the selected output only.
TdLossResult td_loss_and_grad(const MultiLayerPerceptron& net, std::span<const double> state,
                              int action_index, double target);

// Bias-corrected Adam update in place; throws TrainingError on non-finite
// gradients.
void adam_step(MultiLayerPerceptron& net, const ParamGrads& grads, AdamState& adam);

// Batched forward/backward used by the replay training step. Activations for
// each layer are kept so the backward pass can reuse them.
struct BatchTrace {
    std::vector<Matrix> activations; // activations[0] is the input batch
};

void forward_batch(const MultiLayerPerceptron& net, const Matrix& input, BatchTrace& trace);

// Accumulates parameter gradients of sum over the batch of
// output(b) . output_grad(b) into `grads` (caller zeroes beforehand).
void backward_batch(const MultiLayerPerceptron& net, const BatchTrace& trace,
                    const Matrix& output_grad, ParamGrads& grads);

// Checkpoint container (JSON): layer_dims, row-major weights, biases, Adam
// moments and step counter. Field names are part of the file format. The
// adam-less overloads write/read a parameters-only checkpoint.
void save_checkpoint(const MultiLayerPerceptron& net, const AdamState& adam,
                     const std::string& path);
void save_checkpoint(const MultiLayerPerceptron& net, const std::string& path);
void load_checkpoint(MultiLayerPerceptron& net, AdamState& adam, const std::string& path);
void load_checkpoint(MultiLayerPerceptron& net, const std::string& path);

} // namespace gridmarl
