#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

// Reverse-mode autodiff on dense matrices. Ops evaluate eagerly and record
// vector-Jacobian closures that themselves build graph nodes, so backward
// passes are differentiable: gradients of gradients (the R1 penalty) come out
// of the same machinery. Templated on the scalar type; the training stack
// runs float32, the finite-difference oracles run double.
namespace dabf::ad {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
struct Node;

template <class T>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}
    bool defined() const { return static_cast<bool>(node_); }
    const Mat<T>& value() const { return node_->value; }
    Mat<T>& mutable_value() { return node_->value; } // optimizer use only
    Node<T>* node() const { return node_.get(); }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    T scalar() const {
        if (rows() != 1 || cols() != 1) throw std::logic_error("scalar() on non 1x1 var");
        return node_->value(0, 0);
    }

private:
    std::shared_ptr<Node<T>> node_;
};

template <class T>
struct Edge {
    Var<T> parent;
    std::function<Var<T>(const Var<T>&)> vjp; // upstream grad -> grad contribution
};

template <class T>
struct Node {
    Mat<T> value;
    bool needs_grad = false;
    std::vector<Edge<T>> edges;
};

template <class T>
Var<T> constant(Mat<T> v) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(v);
    return Var<T>(n);
}

template <class T>
Var<T> constant_scalar(T v) {
    Mat<T> m(1, 1);
    m(0, 0) = v;
    return constant<T>(std::move(m));
}

// Differentiable leaf (network parameter or input a gradient is taken w.r.t.).
template <class T>
Var<T> leaf(Mat<T> v) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(v);
    n->needs_grad = true;
    return Var<T>(n);
}

template <class T>
Var<T> detach(const Var<T>& a) {
    return constant<T>(a.value());
}

namespace detail {

template <class T>
Var<T> make_op(Mat<T> value, std::vector<Edge<T>> edges) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->edges = std::move(edges);
    n->needs_grad = !n->edges.empty();
    return Var<T>(n);
}

template <class T>
void push_edge(std::vector<Edge<T>>& edges, const Var<T>& parent,
               std::function<Var<T>(const Var<T>&)> vjp) {
    if (parent.node()->needs_grad) edges.push_back(Edge<T>{parent, std::move(vjp)});
}

template <class T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::logic_error(std::string(op) + ": shape mismatch");
}

} // namespace detail

template <class T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> scale(const Var<T>& a, T s);
template <class T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> divide(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> transpose(const Var<T>& a);
template <class T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
template <class T> Var<T> sum_all(const Var<T>& a);
template <class T> Var<T> fill(const Var<T>& s, Eigen::Index rows, Eigen::Index cols);
template <class T> Var<T> broadcast_col(const Var<T>& v, Eigen::Index cols);
template <class T> Var<T> sum_cols(const Var<T>& a);
template <class T> Var<T> slice_rows(const Var<T>& a, Eigen::Index r0, Eigen::Index n);
template <class T> Var<T> pad_rows(const Var<T>& a, Eigen::Index r0, Eigen::Index total);
template <class T> Var<T> sigmoid(const Var<T>& a);
template <class T> Var<T> clamp(const Var<T>& a, T lo, T hi);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    detail::check_same_shape(a, b, "add");
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [](const Var<T>& g) { return g; });
    detail::push_edge<T>(edges, b, [](const Var<T>& g) { return g; });
    return detail::make_op<T>(a.value() + b.value(), std::move(edges));
}

template <class T>
Var<T> neg(const Var<T>& a) {
    return scale(a, T(-1));
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    detail::check_same_shape(a, b, "sub");
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [](const Var<T>& g) { return g; });
    detail::push_edge<T>(edges, b, [](const Var<T>& g) { return neg(g); });
    return detail::make_op<T>(a.value() - b.value(), std::move(edges));
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [s](const Var<T>& g) { return scale(g, s); });
    return detail::make_op<T>(Mat<T>(a.value() * s), std::move(edges));
}

template <class T>
Var<T> add_scalar(const Var<T>& a, T s) {
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [](const Var<T>& g) { return g; });
    return detail::make_op<T>(Mat<T>(a.value().array() + s), std::move(edges));
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    detail::check_same_shape(a, b, "mul");
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [b](const Var<T>& g) { return mul(g, b); });
    detail::push_edge<T>(edges, b, [a](const Var<T>& g) { return mul(g, a); });
    return detail::make_op<T>(Mat<T>(a.value().cwiseProduct(b.value())), std::move(edges));
}

template <class T>
Var<T> divide(const Var<T>& a, const Var<T>& b) {
    detail::check_same_shape(a, b, "divide");
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [b](const Var<T>& g) { return divide(g, b); });
    detail::push_edge<T>(edges, b, [a, b](const Var<T>& g) {
        return neg(divide(mul(g, a), mul(b, b)));
    });
    return detail::make_op<T>(Mat<T>(a.value().cwiseQuotient(b.value())), std::move(edges));
}

template <class T>
Var<T> square(const Var<T>& a) {
    return mul(a, a);
}

template <class T>
Var<T> transpose(const Var<T>& a) {
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [](const Var<T>& g) { return transpose(g); });
    return detail::make_op<T>(Mat<T>(a.value().transpose()), std::move(edges));
}

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    if (a.cols() != b.rows()) throw std::logic_error("matmul: inner dims mismatch");
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [b](const Var<T>& g) { return matmul(g, transpose(b)); });
    detail::push_edge<T>(edges, b, [a](const Var<T>& g) { return matmul(transpose(a), g); });
    return detail::make_op<T>(Mat<T>(a.value() * b.value()), std::move(edges));
}

template <class T>
Var<T> sum_all(const Var<T>& a) {
    const Eigen::Index r = a.rows(), c = a.cols();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [r, c](const Var<T>& g) { return fill(g, r, c); });
    Mat<T> v(1, 1);
    v(0, 0) = a.value().sum();
    return detail::make_op<T>(std::move(v), std::move(edges));
}

template <class T>
Var<T> fill(const Var<T>& s, Eigen::Index rows, Eigen::Index cols) {
    if (s.rows() != 1 || s.cols() != 1) throw std::logic_error("fill: source must be 1x1");
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, s, [](const Var<T>& g) { return sum_all(g); });
    return detail::make_op<T>(Mat<T>(Mat<T>::Constant(rows, cols, s.value()(0, 0))),
                              std::move(edges));
}

template <class T>
Var<T> broadcast_col(const Var<T>& v, Eigen::Index cols) {
    if (v.cols() != 1) throw std::logic_error("broadcast_col: source must be a column");
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, v, [](const Var<T>& g) { return sum_cols(g); });
    return detail::make_op<T>(Mat<T>(v.value().replicate(1, cols)), std::move(edges));
}

template <class T>
Var<T> sum_cols(const Var<T>& a) {
    const Eigen::Index c = a.cols();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [c](const Var<T>& g) { return broadcast_col(g, c); });
    return detail::make_op<T>(Mat<T>(a.value().rowwise().sum()), std::move(edges));
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw std::logic_error("concat_rows: empty");
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw std::logic_error("concat_rows: column mismatch");
        rows += p.rows();
    }
    Mat<T> v(rows, cols);
    std::vector<Edge<T>> edges;
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        v.middleRows(at, p.rows()) = p.value();
        const Eigen::Index r0 = at, n = p.rows();
        detail::push_edge<T>(edges, p, [r0, n](const Var<T>& g) { return slice_rows(g, r0, n); });
        at += p.rows();
    }
    return detail::make_op<T>(std::move(v), std::move(edges));
}

template <class T>
Var<T> slice_rows(const Var<T>& a, Eigen::Index r0, Eigen::Index n) {
    const Eigen::Index total = a.rows();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a,
                         [r0, total](const Var<T>& g) { return pad_rows(g, r0, total); });
    return detail::make_op<T>(Mat<T>(a.value().middleRows(r0, n)), std::move(edges));
}

template <class T>
Var<T> pad_rows(const Var<T>& a, Eigen::Index r0, Eigen::Index total) {
    const Eigen::Index n = a.rows();
    Mat<T> v = Mat<T>::Zero(total, a.cols());
    v.middleRows(r0, n) = a.value();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [r0, n](const Var<T>& g) { return slice_rows(g, r0, n); });
    return detail::make_op<T>(std::move(v), std::move(edges));
}

template <class T>
Var<T> relu(const Var<T>& a) {
    Mat<T> mask = (a.value().array() > T(0)).template cast<T>();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [m = constant<T>(mask)](const Var<T>& g) { return mul(g, m); });
    return detail::make_op<T>(Mat<T>(a.value().cwiseMax(T(0))), std::move(edges));
}

template <class T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
    Mat<T> mask =
        ((a.value().array() > T(0)).template cast<T>() * (T(1) - slope) + slope).matrix();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [m = constant<T>(mask)](const Var<T>& g) { return mul(g, m); });
    return detail::make_op<T>(Mat<T>(a.value().cwiseProduct(mask)), std::move(edges));
}

// vjp rebuilds sigma(a) from the input so second-order gradients stay exact.
template <class T>
Var<T> sigmoid(const Var<T>& a) {
    Mat<T> v = (T(1) / (T(1) + (-a.value().array()).exp())).matrix();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [a](const Var<T>& g) {
        auto s = sigmoid(a);
        return mul(g, mul(s, add_scalar(neg(s), T(1))));
    });
    return detail::make_op<T>(std::move(v), std::move(edges));
}

template <class T>
Var<T> abs_val(const Var<T>& a) {
    Mat<T> sign =
        (a.value().array() > T(0)).template cast<T>() - (a.value().array() < T(0)).template cast<T>();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [m = constant<T>(sign)](const Var<T>& g) { return mul(g, m); });
    return detail::make_op<T>(Mat<T>(a.value().cwiseAbs()), std::move(edges));
}

template <class T>
Var<T> clamp(const Var<T>& a, T lo, T hi) {
    Mat<T> mask = ((a.value().array() > lo) && (a.value().array() < hi)).template cast<T>();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [m = constant<T>(mask)](const Var<T>& g) { return mul(g, m); });
    return detail::make_op<T>(Mat<T>(a.value().cwiseMax(lo).cwiseMin(hi)), std::move(edges));
}

template <class T>
Var<T> log_op(const Var<T>& a) {
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a, [a](const Var<T>& g) { return divide(g, a); });
    return detail::make_op<T>(Mat<T>(a.value().array().log().matrix()), std::move(edges));
}

// Elementwise Huber: 0.5 x^2 inside |x| <= delta, delta (|x| - 0.5 delta) outside.
template <class T>
Var<T> huber_elem(const Var<T>& a, T delta) {
    const auto x = a.value().array();
    const auto inside = (x.abs() <= delta).template cast<T>();
    Mat<T> v = (inside * (T(0.5) * x * x) +
                (T(1) - inside) * (delta * (x.abs() - T(0.5) * delta)))
                   .matrix();
    std::vector<Edge<T>> edges;
    detail::push_edge<T>(edges, a,
                         [a, delta](const Var<T>& g) { return mul(g, clamp(a, -delta, delta)); });
    return detail::make_op<T>(std::move(v), std::move(edges));
}

template <class T>
class GradMap {
public:
    bool contains(const Var<T>& v) const { return grads_.count(v.node()) > 0; }

    // Gradient of the root w.r.t. v; zero matrix if the root does not depend on it.
    Var<T> get(const Var<T>& v) const {
        auto it = grads_.find(v.node());
        if (it != grads_.end()) return it->second;
        return constant<T>(Mat<T>::Zero(v.rows(), v.cols()));
    }

    Var<T> at(const Var<T>& v) const { return at_node(v.node()); }

    Var<T> at_node(const Node<T>* n) const {
        auto it = grads_.find(n);
        if (it == grads_.end()) throw std::logic_error("GradMap: no gradient for this var");
        return it->second;
    }

    void accumulate(Node<T>* n, const Var<T>& g) {
        auto it = grads_.find(n);
        if (it == grads_.end())
            grads_.emplace(n, g);
        else
            it->second = add(it->second, g);
    }

private:
    std::unordered_map<const Node<T>*, Var<T>> grads_;
};

// Reverse-mode sweep from a 1x1 root. The returned gradients are themselves
// graph nodes, so a second backward over any function of them is valid.
template <class T>
GradMap<T> backward(const Var<T>& root) {
    if (root.rows() != 1 || root.cols() != 1)
        throw std::logic_error("backward: root must be a 1x1 scalar");

    std::vector<Node<T>*> order;
    if (root.node()->needs_grad) {
        std::unordered_set<const Node<T>*> visited;
        struct Item {
            Node<T>* n;
            std::size_t next_edge;
        };
        std::vector<Item> stack;
        stack.push_back({root.node(), 0});
        visited.insert(root.node());
        while (!stack.empty()) {
            Item& top = stack.back();
            if (top.next_edge < top.n->edges.size()) {
                Node<T>* parent = top.n->edges[top.next_edge].parent.node();
                ++top.next_edge;
                if (visited.insert(parent).second) stack.push_back({parent, 0});
            } else {
                order.push_back(top.n);
                stack.pop_back();
            }
        }
    }

    GradMap<T> grads;
    grads.accumulate(root.node(), constant<T>(Mat<T>::Ones(1, 1)));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        const Var<T> g = grads.at_node(n);
        for (const Edge<T>& e : n->edges) grads.accumulate(e.parent.node(), e.vjp(g));
    }
    return grads;
}

} // namespace dabf::ad
