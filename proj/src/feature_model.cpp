#include "topic/feature_model.hpp"

#include "topic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace topic {

namespace {

void require_same_shape(const ModelParams& a, const ModelParams& b) {
    if (a.shape().input_dim != b.shape().input_dim || a.hidden_dim() != b.hidden_dim() ||
        a.feature_dim() != b.feature_dim() || a.class_count() != b.class_count()) {
        throw InputError("parameter shapes differ");
    }
}

}  // namespace

std::size_t ModelParams::parameter_count() const {
    std::size_t total = 0;
    for (auto block : blocks()) total += block.size();
    return total;
}

std::array<std::span<double>, 5> ModelParams::blocks() {
    return {std::span<double>(w1.data(), static_cast<std::size_t>(w1.size())),
            std::span<double>(b1.data(), static_cast<std::size_t>(b1.size())),
            std::span<double>(w2.data(), static_cast<std::size_t>(w2.size())),
            std::span<double>(b2.data(), static_cast<std::size_t>(b2.size())),
            std::span<double>(phi.data(), static_cast<std::size_t>(phi.size()))};
}

std::array<std::span<const double>, 5> ModelParams::blocks() const {
    return {std::span<const double>(w1.data(), static_cast<std::size_t>(w1.size())),
            std::span<const double>(b1.data(), static_cast<std::size_t>(b1.size())),
            std::span<const double>(w2.data(), static_cast<std::size_t>(w2.size())),
            std::span<const double>(b2.data(), static_cast<std::size_t>(b2.size())),
            std::span<const double>(phi.data(), static_cast<std::size_t>(phi.size()))};
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams z;
    z.w1 = Matrix::Zero(params.w1.rows(), params.w1.cols());
    z.b1 = Vector::Zero(params.b1.size());
    z.w2 = Matrix::Zero(params.w2.rows(), params.w2.cols());
    z.b2 = Vector::Zero(params.b2.size());
    z.phi = Matrix::Zero(params.phi.rows(), params.phi.cols());
    return z;
}

void axpy(double a, const ModelParams& x, ModelParams& y) {
    require_same_shape(x, y);
    y.w1 += a * x.w1;
    y.b1 += a * x.b1;
    y.w2 += a * x.w2;
    y.b2 += a * x.b2;
    y.phi += a * x.phi;
}

ModelParams init_params(const ModelShape& shape, std::uint64_t seed) {
    if (shape.input_dim == 0 || shape.hidden_dim == 0 || shape.feature_dim == 0) {
        throw InputError("model dimensions must be positive");
    }
    std::mt19937_64 rng(seed);
    const auto in = static_cast<Eigen::Index>(shape.input_dim);
    const auto hid = static_cast<Eigen::Index>(shape.hidden_dim);
    const auto feat = static_cast<Eigen::Index>(shape.feature_dim);

    std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / static_cast<double>(hid)));

    ModelParams p;
    p.w1 = Matrix(hid, in);
    for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = n1(rng);
    p.b1 = Vector::Zero(hid);
    p.w2 = Matrix(feat, hid);
    for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = n2(rng);
    p.b2 = Vector::Zero(feat);
    p.phi = Matrix(feat, 0);
    if (shape.class_count > 0) {
        p = expand_output_layer(std::move(p), shape.class_count, rng());
    }
    return p;
}

ForwardCache forward(const Vector& x, const ModelParams& params) {
    if (static_cast<std::size_t>(x.size()) != params.input_dim()) {
        throw InputError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(params.input_dim()));
    }
    ForwardCache c;
    c.x = x;
    c.pre_hidden = params.w1 * x + params.b1;
    c.hidden = c.pre_hidden.cwiseMax(0.0);
    c.feature = params.w2 * c.hidden + params.b2;
    c.logits = params.phi.transpose() * c.feature;
    return c;
}

Vector extract_feature(const Vector& x, const ModelParams& params) {
    return forward(x, params).feature;
}

Vector logits(const Vector& x, const ModelParams& params) { return forward(x, params).logits; }

Vector softmax(const Vector& o, double temperature) {
    if (o.size() == 0) return o;
    const Vector scaled = o / temperature;
    const double top = scaled.maxCoeff();
    Vector e = (scaled.array() - top).exp().matrix();
    return e / e.sum();
}

ScalarGrad softmax_cross_entropy(const Vector& o, std::size_t y) {
    if (y >= static_cast<std::size_t>(o.size())) {
        throw InputError("label " + std::to_string(y) + " out of range for " +
                         std::to_string(o.size()) + " classes");
    }
    const double top = o.maxCoeff();
    const double log_sum = top + std::log((o.array() - top).exp().sum());
    ScalarGrad out;
    out.loss = log_sum - o(static_cast<Eigen::Index>(y));
    out.grad = (o.array() - log_sum).exp().matrix();
    out.grad(static_cast<Eigen::Index>(y)) -= 1.0;
    return out;
}

void backward(const ForwardCache& cache, const Vector& grad_o, const Vector& grad_f,
              const ModelParams& params, Gradients& grads) {
    if (grad_o.size() != cache.logits.size() || grad_f.size() != cache.feature.size()) {
        throw InputError("upstream gradient dimensions do not match the forward cache");
    }
    grads.phi.noalias() += cache.feature * grad_o.transpose();
    const Vector d_feature = params.phi * grad_o + grad_f;
    grads.b2 += d_feature;
    grads.w2.noalias() += d_feature * cache.hidden.transpose();
    Vector d_pre = params.w2.transpose() * d_feature;
    for (Eigen::Index i = 0; i < d_pre.size(); ++i) {
        if (cache.pre_hidden(i) <= 0.0) d_pre(i) = 0.0;
    }
    grads.b1 += d_pre;
    grads.w1.noalias() += d_pre * cache.x.transpose();
}

Gradients backward(const ForwardCache& cache, const Vector& grad_o, const Vector& grad_f,
                   const ModelParams& params) {
    Gradients g = zeros_like(params);
    backward(cache, grad_o, grad_f, params, g);
    return g;
}

ModelParams sgd_step(ModelParams params, const Gradients& grads, double lr) {
    if (!(lr > 0.0)) throw InputError("learning rate must be positive");
    axpy(-lr, grads, params);
    return params;
}

ModelParams expand_output_layer(ModelParams params, std::size_t added, std::uint64_t seed) {
    if (added == 0) throw InputError("expand_output_layer needs at least one new class");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    const Eigen::Index old_cols = params.phi.cols();
    Matrix phi(params.phi.rows(), old_cols + static_cast<Eigen::Index>(added));
    phi.leftCols(old_cols) = params.phi;
    for (Eigen::Index c = old_cols; c < phi.cols(); ++c) {
        for (Eigen::Index r = 0; r < phi.rows(); ++r) phi(r, c) = u(rng);
    }
    params.phi = std::move(phi);
    return params;
}

GradReport finite_difference_check(const Objective& objective, const ModelParams& params,
                                   double tol) {
    const LossResult analytic = objective(params);
    if (!std::isfinite(analytic.loss)) {
        throw DivergenceError("finite_difference_check: objective is not finite at the base point");
    }
    GradReport report;
    report.tolerance = tol;

    ModelParams probe = params;
    auto probe_blocks = probe.blocks();
    const auto grad_blocks = analytic.grads.blocks();
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        if (grad_blocks[b].size() != probe_blocks[b].size()) {
            throw InputError("analytic gradient block " + std::string(kBlockNames[b]) +
                             " has the wrong size");
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < probe_blocks[b].size(); ++i) {
            double& slot = probe_blocks[b][i];
            const double saved = slot;
            slot = saved + kFiniteDifferenceStep;
            const double plus = objective(probe).loss;
            slot = saved - kFiniteDifferenceStep;
            const double minus = objective(probe).loss;
            slot = saved;
            if (!std::isfinite(plus) || !std::isfinite(minus)) {
                throw DivergenceError("finite_difference_check: non-finite loss while probing " +
                                      std::string(kBlockNames[b]) + "[" + std::to_string(i) + "]");
            }
            const double fd = (plus - minus) / (2.0 * kFiniteDifferenceStep);
            const double a = grad_blocks[b][i];
            const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
            worst = std::max(worst, err);
        }
        report.block_error[b] = worst;
        report.max_error = std::max(report.max_error, worst);
    }
    report.passed = report.max_error < tol;
    return report;
}

}  // namespace topic
