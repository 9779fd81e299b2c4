#include "gridmarl/nn.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace gridmarl {

namespace {

void check_dims(const MultiLayerPerceptron& net) {
    if (net.layer_dims.size() < 2) throw std::domain_error("network needs >= 2 layer dims");
    for (int d : net.layer_dims)
        if (d <= 0) throw std::domain_error("layer dims must be positive");
}

} // namespace

void ParamGrads::zero() {
    for (auto& w : weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

MultiLayerPerceptron make_mlp(const std::vector<int>& layer_dims, Rng& rng) {
    MultiLayerPerceptron net;
    net.layer_dims = layer_dims;
    check_dims(net);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const int fan_out = layer_dims[l + 1];
        Matrix w(fan_out, fan_in);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& x : w.data) x = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
    }
    return net;
}

ParamGrads make_grads(const MultiLayerPerceptron& net) {
    ParamGrads g;
    for (const auto& w : net.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

AdamState make_adam(const MultiLayerPerceptron& net, double learning_rate) {
    AdamState a;
    a.learning_rate = learning_rate;
    a.m = make_grads(net);
    a.v = make_grads(net);
    return a;
}

std::vector<double> forward(const MultiLayerPerceptron& net, std::span<const double> input) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw std::domain_error("forward: input length does not match the network input dim");

    std::vector<double> act(input.begin(), input.end());
    std::vector<double> next;
    for (int l = 0; l < net.layer_count(); ++l) {
        const Matrix& w = net.weights[static_cast<std::size_t>(l)];
        const auto& b = net.biases[static_cast<std::size_t>(l)];
        next.assign(static_cast<std::size_t>(w.rows), 0.0);
        for (int o = 0; o < w.rows; ++o) {
            const double* wr = w.row(o);
            double sum = b[static_cast<std::size_t>(o)];
            for (int k = 0; k < w.cols; ++k) sum += wr[k] * act[static_cast<std::size_t>(k)];
            next[static_cast<std::size_t>(o)] = sum;
        }
        if (l + 1 < net.layer_count())
            for (double& x : next) x = std::tanh(x);
        act.swap(next);
    }
    return act;
}

void forward_batch(const MultiLayerPerceptron& net, const Matrix& input, BatchTrace& trace) {
    if (input.cols != net.input_dim())
        throw std::domain_error("forward_batch: input width does not match the network input dim");

    const int batch = input.rows;
    trace.activations.resize(static_cast<std::size_t>(net.layer_count()) + 1);
    trace.activations[0] = input;
    for (int l = 0; l < net.layer_count(); ++l) {
        const Matrix& w = net.weights[static_cast<std::size_t>(l)];
        const auto& bias = net.biases[static_cast<std::size_t>(l)];
        const Matrix& a = trace.activations[static_cast<std::size_t>(l)];
        Matrix& z = trace.activations[static_cast<std::size_t>(l) + 1];
        z = Matrix(batch, w.rows);
        const bool hidden = l + 1 < net.layer_count();
        for (int b = 0; b < batch; ++b) {
            const double* ar = a.row(b);
            double* zr = z.row(b);
            for (int o = 0; o < w.rows; ++o) {
                const double* wr = w.row(o);
                double sum = bias[static_cast<std::size_t>(o)];
                for (int k = 0; k < w.cols; ++k) sum += wr[k] * ar[k];
                zr[o] = hidden ? std::tanh(sum) : sum;
            }
        }
    }
}

void backward_batch(const MultiLayerPerceptron& net, const BatchTrace& trace,
                    const Matrix& output_grad, ParamGrads& grads) {
    const int batch = output_grad.rows;
    if (output_grad.cols != net.output_dim())
        throw std::domain_error("backward_batch: output grad width mismatch");

    Matrix delta = output_grad; // output layer is linear
    Matrix delta_prev;
    for (int l = net.layer_count() - 1; l >= 0; --l) {
        const Matrix& w = net.weights[static_cast<std::size_t>(l)];
        const Matrix& a_in = trace.activations[static_cast<std::size_t>(l)];
        Matrix& dw = grads.weights[static_cast<std::size_t>(l)];
        auto& db = grads.biases[static_cast<std::size_t>(l)];

        for (int b = 0; b < batch; ++b) {
            const double* dr = delta.row(b);
            const double* ar = a_in.row(b);
            for (int o = 0; o < w.rows; ++o) {
                const double d = dr[o];
                if (d == 0.0) continue;
                db[static_cast<std::size_t>(o)] += d;
                double* dwr = dw.row(o);
                for (int k = 0; k < w.cols; ++k) dwr[k] += d * ar[k];
            }
        }

        if (l == 0) break;
        delta_prev = Matrix(batch, w.cols);
        for (int b = 0; b < batch; ++b) {
            const double* dr = delta.row(b);
            double* pr = delta_prev.row(b);
            for (int o = 0; o < w.rows; ++o) {
                const double d = dr[o];
                if (d == 0.0) continue;
                const double* wr = w.row(o);
                for (int k = 0; k < w.cols; ++k) pr[k] += d * wr[k];
            }
            // tanh derivative through the stored post-activation
            const double* ar = a_in.row(b);
            for (int k = 0; k < w.cols; ++k) pr[k] *= 1.0 - ar[k] * ar[k];
        }
        delta = std::move(delta_prev);
    }
}

ParamGrads backward(const MultiLayerPerceptron& net, std::span<const double> input,
                    std::span<const double> output_grad) {
    if (static_cast<int>(output_grad.size()) != net.output_dim())
        throw std::domain_error("backward: output grad length mismatch");
    Matrix x(1, net.input_dim());
    std::copy(input.begin(), input.end(), x.data.begin());
    Matrix dy(1, net.output_dim());
    std::copy(output_grad.begin(), output_grad.end(), dy.data.begin());

    BatchTrace trace;
    forward_batch(net, x, trace);
    ParamGrads g = make_grads(net);
    backward_batch(net, trace, dy, g);
    return g;
}

TdLossResult td_loss_and_grad(const MultiLayerPerceptron& net, std::span<const double> state,
                              int action_index, double target) {
    if (action_index < 0 || action_index >= net.output_dim())
        throw std::domain_error("td_loss_and_grad: action index out of range");

    Matrix x(1, net.input_dim());
    std::copy(state.begin(), state.end(), x.data.begin());
    BatchTrace trace;
    forward_batch(net, x, trace);
    const double q = trace.activations.back().at(0, action_index);
    const double err = q - target;

    Matrix dy(1, net.output_dim());
    dy.at(0, action_index) = 2.0 * err;

    TdLossResult r;
    r.loss = err * err;
    r.grads = make_grads(net);
    backward_batch(net, trace, dy, r.grads);
    return r;
}

void adam_step(MultiLayerPerceptron& net, const ParamGrads& grads, AdamState& adam) {
    adam.step += 1;
    const double b1 = adam.beta1;
    const double b2 = adam.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(adam.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(adam.step));
    const double lr = adam.learning_rate;

    auto update = [&](double* theta, const double* g, double* m, double* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi)) throw TrainingError("non-finite gradient in adam_step");
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + adam.epsilon);
        }
    };

    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        update(net.weights[l].data.data(), grads.weights[l].data.data(),
               adam.m.weights[l].data.data(), adam.v.weights[l].data.data(),
               net.weights[l].data.size());
        update(net.biases[l].data(), grads.biases[l].data(), adam.m.biases[l].data(),
               adam.v.biases[l].data(), net.biases[l].size());
    }
}

namespace {

nlohmann::json net_to_json(const MultiLayerPerceptron& net, const AdamState* adam) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["layer_dims"] = net.layer_dims;
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& w : net.weights) weights.push_back(w.data);
    j["weights"] = std::move(weights);
    j["biases"] = net.biases;
    if (adam != nullptr) {
        nlohmann::json a;
        a["learning_rate"] = adam->learning_rate;
        a["beta1"] = adam->beta1;
        a["beta2"] = adam->beta2;
        a["epsilon"] = adam->epsilon;
        a["step"] = adam->step;
        nlohmann::json mw = nlohmann::json::array();
        for (const auto& w : adam->m.weights) mw.push_back(w.data);
        a["m_weights"] = std::move(mw);
        nlohmann::json vw = nlohmann::json::array();
        for (const auto& w : adam->v.weights) vw.push_back(w.data);
        a["v_weights"] = std::move(vw);
        a["m_biases"] = adam->m.biases;
        a["v_biases"] = adam->v.biases;
        j["adam"] = std::move(a);
    }
    return j;
}

void net_from_json(const nlohmann::json& j, MultiLayerPerceptron& net, AdamState* adam,
                   const std::string& path) {
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint version in " + path);

    net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    check_dims(net);
    net.weights.clear();
    net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    const auto& weights = j.at("weights");
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        Matrix w(net.layer_dims[l + 1], net.layer_dims[l]);
        w.data = weights.at(l).get<std::vector<double>>();
        if (w.data.size() != static_cast<std::size_t>(w.rows) * w.cols)
            throw std::runtime_error("checkpoint weight size mismatch in " + path);
        net.weights.push_back(std::move(w));
    }

    if (adam == nullptr) return;
    *adam = AdamState{};
    adam->m = make_grads(net);
    adam->v = make_grads(net);
    if (!j.contains("adam")) return;
    const auto& a = j.at("adam");
    adam->learning_rate = a.at("learning_rate").get<double>();
    adam->beta1 = a.at("beta1").get<double>();
    adam->beta2 = a.at("beta2").get<double>();
    adam->epsilon = a.at("epsilon").get<double>();
    adam->step = a.at("step").get<std::int64_t>();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        adam->m.weights[l].data = a.at("m_weights").at(l).get<std::vector<double>>();
        adam->v.weights[l].data = a.at("v_weights").at(l).get<std::vector<double>>();
    }
    adam->m.biases = a.at("m_biases").get<std::vector<std::vector<double>>>();
    adam->v.biases = a.at("v_biases").get<std::vector<std::vector<double>>>();
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump();
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    return nlohmann::json::parse(in);
}

} // namespace

void save_checkpoint(const MultiLayerPerceptron& net, const AdamState& adam,
                     const std::string& path) {
    write_json_file(net_to_json(net, &adam), path);
}

void save_checkpoint(const MultiLayerPerceptron& net, const std::string& path) {
    write_json_file(net_to_json(net, nullptr), path);
}

void load_checkpoint(MultiLayerPerceptron& net, AdamState& adam, const std::string& path) {
    net_from_json(read_json_file(path), net, &adam, path);
}

void load_checkpoint(MultiLayerPerceptron& net, const std::string& path) {
    net_from_json(read_json_file(path), net, nullptr, path);
}

} // namespace gridmarl
