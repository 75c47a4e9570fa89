#include "iagcn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace iagcn {

namespace {

thread_local bool g_grad_enabled = true;

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a, const Matrix& b) {
    throw DimensionError(std::string(op) + ": shape mismatch (" + shape_string(a) + " vs " +
                         shape_string(b) + ")");
}

bool is_vector(const Matrix& m) { return m.rows() == 1 || m.cols() == 1; }

}  // namespace

std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void detail::Node::accumulate(const Matrix& g) {
    if (!requires_grad) return;
    if (grad.size() == 0)
        grad = g;
    else
        grad += g;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor::Tensor() = default;

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
}

const Matrix& Tensor::value() const {
    if (!node_) throw std::logic_error("Tensor: access to an undefined tensor");
    return node_->value;
}

Matrix& Tensor::mutable_value() {
    if (!node_) throw std::logic_error("Tensor: access to an undefined tensor");
    if (!is_leaf()) throw std::logic_error("Tensor: only leaves may be modified in place");
    return node_->value;
}

const Matrix& Tensor::grad() const {
    if (!node_) throw std::logic_error("Tensor: access to an undefined tensor");
    if (node_->grad.size() == 0) node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::is_leaf() const { return node_ && node_->parents.empty() && !node_->backward; }

std::string Tensor::op() const { return node_ ? node_->op : "undefined"; }

Tensor Tensor::deep_copy() const { return Tensor(value(), requires_grad()); }

double Tensor::item() const {
    const Matrix& v = value();
    if (v.size() != 1) throw DimensionError("item: expected a 1x1 tensor, got " + shape_string(v));
    return v(0, 0);
}

Tensor make_op_result(Matrix value, const char* op, std::initializer_list<Tensor> inputs,
                      std::function<void(const Matrix&)> backward_fn) {
    auto node = std::make_shared<detail::Node>();
    node->value = std::move(value);
    node->op = op;
    if (g_grad_enabled) {
        bool any = false;
        for (const Tensor& t : inputs) any = any || t.requires_grad();
        if (any) {
            node->requires_grad = true;
            for (const Tensor& t : inputs) node->parents.push_back(t.node_);
            node->backward = std::move(backward_fn);
        }
    }
    return Tensor(std::move(node));
}

// Closures below capture raw node pointers; the result node keeps its parents
// alive through `parents`.
#define IAGCN_NODE(t) const_cast<detail::Node*>((t).node())

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) shape_mismatch("matmul", a.value(), b.value());
    auto* na = IAGCN_NODE(a);
    auto* nb = IAGCN_NODE(b);
    return make_op_result(a.value() * b.value(), "matmul", {a, b}, [na, nb](const Matrix& g) {
        if (na->requires_grad) na->accumulate(g * nb->value.transpose());
        if (nb->requires_grad) nb->accumulate(na->value.transpose() * g);
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch("add", a.value(), b.value());
    auto* na = IAGCN_NODE(a);
    auto* nb = IAGCN_NODE(b);
    return make_op_result(a.value() + b.value(), "add", {a, b}, [na, nb](const Matrix& g) {
        na->accumulate(g);
        nb->accumulate(g);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch("sub", a.value(), b.value());
    auto* na = IAGCN_NODE(a);
    auto* nb = IAGCN_NODE(b);
    return make_op_result(a.value() - b.value(), "sub", {a, b}, [na, nb](const Matrix& g) {
        na->accumulate(g);
        if (nb->requires_grad) nb->accumulate(-g);
    });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        shape_mismatch("hadamard", a.value(), b.value());
    auto* na = IAGCN_NODE(a);
    auto* nb = IAGCN_NODE(b);
    return make_op_result(a.value().cwiseProduct(b.value()), "hadamard", {a, b},
                          [na, nb](const Matrix& g) {
                              if (na->requires_grad) na->accumulate(g.cwiseProduct(nb->value));
                              if (nb->requires_grad) nb->accumulate(g.cwiseProduct(na->value));
                          });
}

Tensor scale(const Tensor& a, double s) {
    auto* na = IAGCN_NODE(a);
    return make_op_result(a.value() * s, "scale", {a},
                          [na, s](const Matrix& g) { na->accumulate(g * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
    auto* na = IAGCN_NODE(a);
    return make_op_result((a.value().array() + s).matrix(), "add_scalar", {a},
                          [na](const Matrix& g) { na->accumulate(g); });
}

Tensor add_row(const Tensor& m, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != m.cols()) shape_mismatch("add_row", m.value(), row.value());
    auto* nm = IAGCN_NODE(m);
    auto* nr = IAGCN_NODE(row);
    Matrix out = m.value().rowwise() + row.value().row(0);
    return make_op_result(std::move(out), "add_row", {m, row}, [nm, nr](const Matrix& g) {
        nm->accumulate(g);
        if (nr->requires_grad) nr->accumulate(g.colwise().sum());
    });
}

Tensor scale_rows(const Tensor& m, const Tensor& weights) {
    if (!is_vector(weights.value()) || weights.size() != m.rows())
        shape_mismatch("scale_rows", m.value(), weights.value());
    auto* nm = IAGCN_NODE(m);
    auto* nw = IAGCN_NODE(weights);
    const Eigen::Map<const Vector> w(weights.value().data(), weights.size());
    Matrix out = w.asDiagonal() * m.value();
    return make_op_result(std::move(out), "scale_rows", {m, weights}, [nm, nw](const Matrix& g) {
        const Eigen::Map<const Vector> wv(nw->value.data(), nw->value.size());
        if (nm->requires_grad) nm->accumulate(wv.asDiagonal() * g);
        if (nw->requires_grad) {
            Vector dw = g.cwiseProduct(nm->value).rowwise().sum();
            nw->accumulate(Eigen::Map<const Matrix>(dw.data(), nw->value.rows(), nw->value.cols()));
        }
    });
}

Tensor transpose(const Tensor& a) {
    auto* na = IAGCN_NODE(a);
    return make_op_result(a.value().transpose(), "transpose", {a},
                          [na](const Matrix& g) { na->accumulate(g.transpose()); });
}

Tensor relu(const Tensor& a) {
    auto* na = IAGCN_NODE(a);
    return make_op_result(a.value().cwiseMax(0.0), "relu", {a}, [na](const Matrix& g) {
        na->accumulate((na->value.array() > 0.0).select(g, 0.0));
    });
}

namespace {
double logistic(double x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& a) {
    auto* na = IAGCN_NODE(a);
    Matrix out = a.value().unaryExpr(&logistic);
    auto result = make_op_result(std::move(out), "sigmoid", {a}, nullptr);
    if (result.requires_grad()) {
        auto* nr = IAGCN_NODE(result);
        nr->backward = [na, nr](const Matrix& g) {
            const Matrix& s = nr->value;
            na->accumulate(g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
        };
    }
    return result;
}

Tensor exp(const Tensor& a) {
    auto* na = IAGCN_NODE(a);
    auto result = make_op_result(a.value().array().exp().matrix(), "exp", {a}, nullptr);
    if (result.requires_grad()) {
        auto* nr = IAGCN_NODE(result);
        nr->backward = [na, nr](const Matrix& g) { na->accumulate(g.cwiseProduct(nr->value)); };
    }
    return result;
}

Tensor expm1(const Tensor& a) {
    auto* na = IAGCN_NODE(a);
    Matrix out = a.value().unaryExpr([](double v) { return std::expm1(v); });
    auto result = make_op_result(std::move(out), "expm1", {a}, nullptr);
    if (result.requires_grad()) {
        auto* nr = IAGCN_NODE(result);
        nr->backward = [na, nr](const Matrix& g) {
            na->accumulate(g.cwiseProduct((nr->value.array() + 1.0).matrix()));
        };
    }
    return result;
}

Tensor inv_sqrt(const Tensor& a) {
    if ((a.value().array() <= 0.0).any())
        throw std::domain_error("inv_sqrt: entries must be positive");
    auto* na = IAGCN_NODE(a);
    auto result = make_op_result(a.value().array().rsqrt().matrix(), "inv_sqrt", {a}, nullptr);
    if (result.requires_grad()) {
        auto* nr = IAGCN_NODE(result);
        // d/dx x^{-1/2} = -0.5 x^{-3/2} = -0.5 r^3
        nr->backward = [na, nr](const Matrix& g) {
            na->accumulate((g.array() * -0.5 * nr->value.array().cube()).matrix());
        };
    }
    return result;
}

Tensor sum(const Tensor& a) {
    auto* na = IAGCN_NODE(a);
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return make_op_result(std::move(out), "sum", {a}, [na](const Matrix& g) {
        na->accumulate(Matrix::Constant(na->value.rows(), na->value.cols(), g(0, 0)));
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw DimensionError("mean: empty tensor");
    auto* na = IAGCN_NODE(a);
    Matrix out(1, 1);
    out(0, 0) = a.value().mean();
    return make_op_result(std::move(out), "mean", {a}, [na](const Matrix& g) {
        const double share = g(0, 0) / static_cast<double>(na->value.size());
        na->accumulate(Matrix::Constant(na->value.rows(), na->value.cols(), share));
    });
}

Tensor row_sums(const Tensor& a) {
    auto* na = IAGCN_NODE(a);
    return make_op_result(a.value().rowwise().sum(), "row_sums", {a}, [na](const Matrix& g) {
        na->accumulate(g.col(0).replicate(1, na->value.cols()));
    });
}

Tensor mean_rows(const Tensor& a) {
    if (a.rows() == 0) throw DimensionError("mean_rows: no rows");
    auto* na = IAGCN_NODE(a);
    return make_op_result(a.value().colwise().mean(), "mean_rows", {a}, [na](const Matrix& g) {
        const double inv = 1.0 / static_cast<double>(na->value.rows());
        na->accumulate(g.row(0).replicate(na->value.rows(), 1) * inv);
    });
}

ColumnMax column_max(const Tensor& a) {
    if (a.rows() == 0 || a.cols() == 0)
        throw DimensionError("column_max: empty matrix " + shape_string(a.value()));
    const Matrix& v = a.value();
    std::vector<Index> rows(static_cast<std::size_t>(v.cols()));
    Matrix out(1, v.cols());
    for (Index j = 0; j < v.cols(); ++j) {
        Index best = 0;
        for (Index i = 1; i < v.rows(); ++i)
            if (v(i, j) > v(best, j)) best = i;
        rows[static_cast<std::size_t>(j)] = best;
        out(0, j) = v(best, j);
    }
    auto* na = IAGCN_NODE(a);
    Tensor values = make_op_result(std::move(out), "column_max", {a}, [na, rows](const Matrix& g) {
        Matrix d = Matrix::Zero(na->value.rows(), na->value.cols());
        for (Index j = 0; j < d.cols(); ++j) d(rows[static_cast<std::size_t>(j)], j) = g(0, j);
        na->accumulate(d);
    });
    return {std::move(values), std::move(rows)};
}

Tensor outer(const Tensor& a, const Tensor& b) {
    if (!is_vector(a.value()) || !is_vector(b.value()) || a.size() != b.size())
        shape_mismatch("outer", a.value(), b.value());
    auto* na = IAGCN_NODE(a);
    auto* nb = IAGCN_NODE(b);
    const Eigen::Map<const Vector> av(a.value().data(), a.size());
    const Eigen::Map<const Vector> bv(b.value().data(), b.size());
    Matrix out = av * bv.transpose();
    return make_op_result(std::move(out), "outer", {a, b}, [na, nb](const Matrix& g) {
        const Eigen::Map<const Vector> x(na->value.data(), na->value.size());
        const Eigen::Map<const Vector> y(nb->value.data(), nb->value.size());
        if (na->requires_grad) {
            Vector da = g * y;
            na->accumulate(Eigen::Map<const Matrix>(da.data(), na->value.rows(), na->value.cols()));
        }
        if (nb->requires_grad) {
            Vector db = g.transpose() * x;
            nb->accumulate(Eigen::Map<const Matrix>(db.data(), nb->value.rows(), nb->value.cols()));
        }
    });
}

Tensor bce_with_logits(const Tensor& logits, const Matrix& targets) {
    const Matrix& x = logits.value();
    if (x.rows() != targets.rows() || x.cols() != targets.cols())
        shape_mismatch("bce_with_logits", x, targets);
    if (x.size() == 0) throw DimensionError("bce_with_logits: empty input");
    for (Index k = 0; k < targets.size(); ++k) {
        const double t = targets.data()[k];
        if (t != 0.0 && t != 1.0) throw std::invalid_argument("bce_with_logits: targets must be 0 or 1");
    }
    double total = 0.0;
    for (Index k = 0; k < x.size(); ++k) {
        const double v = x.data()[k];
        total += std::max(v, 0.0) - v * targets.data()[k] + std::log1p(std::exp(-std::abs(v)));
    }
    Matrix out(1, 1);
    out(0, 0) = total / static_cast<double>(x.size());
    auto* nl = IAGCN_NODE(logits);
    return make_op_result(std::move(out), "bce_with_logits", {logits}, [nl, targets](const Matrix& g) {
        const double scale = g(0, 0) / static_cast<double>(nl->value.size());
        Matrix d = nl->value.unaryExpr(&logistic) - targets;
        nl->accumulate(d * scale);
    });
}

#undef IAGCN_NODE

namespace {

std::vector<detail::Node*> topological_order(detail::Node* root) {
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    // Iterative post-order DFS: (node, next parent index).
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].get();
            if (visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

}  // namespace

void backward(const Tensor& loss) {
    if (!loss.defined()) throw std::logic_error("backward: undefined loss");
    if (loss.size() != 1)
        throw DimensionError("backward: loss must be 1x1, got " + shape_string(loss.value()));
    detail::Node* root = loss.node_.get();
    if (root->consumed) throw std::logic_error("backward: tape already consumed by a previous pass");
    if (!root->requires_grad) return;

    std::vector<detail::Node*> order = topological_order(root);
    for (detail::Node* n : order)
        if (n->consumed) throw std::logic_error("backward: tape already consumed by a previous pass");

    root->grad = Matrix::Ones(1, 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (!n->backward) continue;
        if (n->grad.size() == 0) continue;  // unreachable from the loss
        n->backward(n->grad);
    }
    for (detail::Node* n : order) {
        if (!n->backward) continue;
        n->backward = nullptr;
        n->parents.clear();
        n->consumed = true;
    }
    root->consumed = true;
}

std::vector<TapeEntry> build_tape(const Tensor& root) {
    if (!root.defined()) return {};
    auto* node = const_cast<detail::Node*>(root.node());
    std::vector<detail::Node*> order = topological_order(node);
    std::unordered_map<const detail::Node*, std::size_t> position;
    std::vector<TapeEntry> tape;
    tape.reserve(order.size());
    for (detail::Node* n : order) {
        TapeEntry entry{n->op, {}};
        for (const auto& p : n->parents) entry.inputs.push_back(position.at(p.get()));
        position[n] = tape.size();
        tape.push_back(std::move(entry));
    }
    return tape;
}

GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps,
                           double tol) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw std::invalid_argument("grad_check: eps must lie in (0, 1e-2]");

    for (Tensor& p : params) p.zero_grad();
    Tensor loss = f();
    const double base = loss.item();
    backward(loss);
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (Tensor& p : params) analytic.push_back(p.grad());

    auto evaluate = [&f]() {
        NoGradGuard guard;
        return f().item();
    };
    const double again = evaluate();
    if (std::memcmp(&again, &base, sizeof(double)) != 0)
        throw std::runtime_error("grad_check: function is not deterministic");

    GradCheckReport report;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& value = params[t].mutable_value();
        for (Index k = 0; k < value.size(); ++k) {
            const double saved = value.data()[k];
            value.data()[k] = saved + eps;
            const double plus = evaluate();
            value.data()[k] = saved - eps;
            const double minus = evaluate();
            value.data()[k] = saved;
            const double numeric = (plus - minus) / (2.0 * eps);
            const double a = analytic[t].data()[k];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            ++report.checked;
            if (rel > report.max_rel_error || report.checked == 1) {
                report.max_rel_error = rel;
                report.worst_tensor = t;
                report.worst_index = k;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    report.passed = report.max_rel_error < tol;
    return report;
}

GradCheckReport grad_check(const std::function<Tensor()>& f, Tensor& x, double eps, double tol) {
    return grad_check(f, std::span<Tensor>(&x, 1), eps, tol);
}

}  // namespace iagcn
