#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>

namespace topic {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ModelShape {
    std::size_t input_dim = 16;
    std::size_t hidden_dim = 32;
    std::size_t feature_dim = 8;
    std::size_t class_count = 10;
};

/// Two-layer rectifier feature extractor f(x) = W2 relu(W1 x + b1) + b2 followed
/// by a bias-free linear head o = phi^T f. The head holds one column per class
/// seen so far.
///
/// Gradients share this layout, so the same type doubles as a gradient buffer.
struct ModelParams {
    Matrix w1;   // hidden x input
    Vector b1;   // hidden
    Matrix w2;   // feature x hidden
    Vector b2;   // feature
    Matrix phi;  // feature x classes

    std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
    std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }
    std::size_t feature_dim() const { return static_cast<std::size_t>(w2.rows()); }
    std::size_t class_count() const { return static_cast<std::size_t>(phi.cols()); }
    ModelShape shape() const { return {input_dim(), hidden_dim(), feature_dim(), class_count()}; }
    std::size_t parameter_count() const;

    /// Flat views of the five parameter blocks in the order w1, b1, w2, b2, phi.
    std::array<std::span<double>, 5> blocks();
    std::array<std::span<const double>, 5> blocks() const;
};

using Gradients = ModelParams;

inline constexpr std::array<std::string_view, 5> kBlockNames = {"w1", "b1", "w2", "b2", "phi"};

ModelParams zeros_like(const ModelParams& params);

/// y += a * x, block by block. Shapes must agree.
void axpy(double a, const ModelParams& x, ModelParams& y);

/// He-style normal init for the extractor, zero biases, head columns from
/// uniform(-0.01, 0.01).
ModelParams init_params(const ModelShape& shape, std::uint64_t seed);

struct ForwardCache {
    Vector x;
    Vector pre_hidden;
    Vector hidden;
    Vector feature;
    Vector logits;
};

ForwardCache forward(const Vector& x, const ModelParams& params);
Vector extract_feature(const Vector& x, const ModelParams& params);
Vector logits(const Vector& x, const ModelParams& params);

/// Max-subtracted softmax of o / temperature.
Vector softmax(const Vector& o, double temperature = 1.0);

struct ScalarGrad {
    double loss = 0.0;
    Vector grad;
};

/// -log softmax(o)_y and its gradient softmax(o) - onehot(y).
ScalarGrad softmax_cross_entropy(const Vector& o, std::size_t y);

/// Accumulates the parameter gradient for upstream gradients on the logits
/// and on the feature. grad_o flows into phi and through it into the
/// extractor; grad_f reaches the extractor only.
void backward(const ForwardCache& cache, const Vector& grad_o, const Vector& grad_f,
              const ModelParams& params, Gradients& grads);

Gradients backward(const ForwardCache& cache, const Vector& grad_o, const Vector& grad_f,
                   const ModelParams& params);

ModelParams sgd_step(ModelParams params, const Gradients& grads, double lr);

/// Appends `added` head columns drawn from uniform(-0.01, 0.01). Existing
/// columns are copied untouched.
ModelParams expand_output_layer(ModelParams params, std::size_t added, std::uint64_t seed);

struct LossResult {
    double loss = 0.0;
    Gradients grads;
};

using Objective = std::function<LossResult(const ModelParams&)>;

struct GradReport {
    std::array<double, 5> block_error{};  // max relative error per block
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;

/// Central differences on every parameter, compared against the analytic
/// gradient returned by `objective` at `params`. Relative error is
/// |a - fd| / max(|a|, |fd|, 1e-8); passes iff the maximum is below `tol`.
GradReport finite_difference_check(const Objective& objective, const ModelParams& params,
                                   double tol);

}  // namespace topic
