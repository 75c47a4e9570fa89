#pragma once

// Dense double-precision tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle to a graph node. Leaves created with
// requires_grad = true are trainable; every op whose inputs require a gradient
// records a backward closure, and backward(loss) replays those closures in
// reverse topological order. One backward pass consumes the tape: the
// interior nodes drop their closures, so a second backward on the same loss
// throws.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iagcn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Matrix& m);

namespace detail {
struct Node;
}

class Tensor {
public:
    Tensor();
    explicit Tensor(Matrix value, bool requires_grad = false);

    static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }

    bool defined() const { return static_cast<bool>(node_); }
    const Matrix& value() const;
    // Only valid on leaves; used by optimizers and finite-difference probes.
    Matrix& mutable_value();
    const Matrix& grad() const;
    void zero_grad();

    bool requires_grad() const;
    bool is_leaf() const;
    std::string op() const;
    // Fresh leaf holding a copy of the value; shares nothing with this tensor.
    Tensor deep_copy() const;

    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    Index size() const { return value().size(); }
    std::string shape() const { return shape_string(value()); }

    // Value of a 1x1 tensor.
    double item() const;

    const detail::Node* node() const { return node_.get(); }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::Node> node_;

    friend Tensor make_op_result(Matrix value, const char* op, std::initializer_list<Tensor> inputs,
                                 std::function<void(const Matrix&)> backward);
    friend void backward(const Tensor& loss);
};

namespace detail {

struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool consumed = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Matrix&)> backward;

    void accumulate(const Matrix& g);
};

}  // namespace detail

// Thread-local switch; while disabled, ops build constants and record nothing.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Builds a node for an op result. The closure receives dLoss/dResult and must
// accumulate into the inputs' nodes; it only runs when some input needs a
// gradient.
Tensor make_op_result(Matrix value, const char* op, std::initializer_list<Tensor> inputs,
                      std::function<void(const Matrix&)> backward);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// m (r x c) plus a 1 x c row broadcast over every row.
Tensor add_row(const Tensor& m, const Tensor& row);
// Row i of m multiplied by weights[i]; weights is r x 1 or 1 x r.
Tensor scale_rows(const Tensor& m, const Tensor& weights);
Tensor transpose(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor expm1(const Tensor& a);
// Element-wise 1/sqrt(a); every entry must be positive.
Tensor inv_sqrt(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// r x 1 column of row sums.
Tensor row_sums(const Tensor& a);
// 1 x c mean over rows.
Tensor mean_rows(const Tensor& a);

struct ColumnMax {
    Tensor values;                  // 1 x n
    std::vector<Index> argmax_rows; // lowest row index wins ties
};
ColumnMax column_max(const Tensor& a);

// a, b: vectors of equal length in either orientation; result[i][j] = a[i] * b[j].
Tensor outer(const Tensor& a, const Tensor& b);

// Mean binary cross-entropy between sigmoid(logits) and 0/1 targets, in the
// stable form max(x,0) - x*y + log(1 + exp(-|x|)).
Tensor bce_with_logits(const Tensor& logits, const Matrix& targets);

// Replays the tape of `loss` (a 1x1 tensor) and accumulates gradients into
// every reachable leaf that requires one.
void backward(const Tensor& loss);

struct TapeEntry {
    std::string op;
    std::vector<std::size_t> inputs;  // indices of earlier entries
};

// Topologically ordered record of the graph reachable from `root`.
std::vector<TapeEntry> build_tape(const Tensor& root);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_tensor = 0;
    Index worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
    bool passed = false;
};

// Central-difference check of d f / d params. `f` must be scalar valued and
// deterministic; the relative error uses max(|a|, |n|, 1e-8) as denominator.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps,
                           double tol);
GradCheckReport grad_check(const std::function<Tensor()>& f, Tensor& x, double eps, double tol);

}  // namespace iagcn
