#include "pignn/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pignn::ad {

namespace {

std::string shape_str(const Mat& m) {
  return "(" + std::to_string(m.rows()) + " x " + std::to_string(m.cols()) + ")";
}

[[noreturn]] void shape_fail(const char* op, const Mat& a, const Mat& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                              shape_str(b));
}

}  // namespace

void SparseMap::apply(const Mat& x, Mat& y) const {
  y.setZero(rows, x.cols());
  for (int r = 0; r < rows; ++r) {
    auto out = y.row(r);
    for (int k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k)
      out += vals[static_cast<size_t>(k)] * x.row(col_idx[static_cast<size_t>(k)]);
  }
}

void SparseMap::apply_transpose_add(const Mat& g, Mat& acc) const {
  for (int r = 0; r < rows; ++r) {
    const auto grow = g.row(r);
    for (int k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k)
      acc.row(col_idx[static_cast<size_t>(k)]) += vals[static_cast<size_t>(k)] * grow;
  }
}

int Tensor::rows() const { return static_cast<int>(tape->value(*this).rows()); }
int Tensor::cols() const { return static_cast<int>(tape->value(*this).cols()); }

Tensor Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Tensor{this, static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::at(Tensor t) {
  if (t.tape != this || t.id < 0 || t.id >= size())
    throw std::invalid_argument("tape: tensor does not belong to this tape");
  return nodes_[static_cast<size_t>(t.id)];
}

const Tape::Node& Tape::at(Tensor t) const {
  if (t.tape != this || t.id < 0 || t.id >= size())
    throw std::invalid_argument("tape: tensor does not belong to this tape");
  return nodes_[static_cast<size_t>(t.id)];
}

const Mat& Tape::value(Tensor t) const { return at(t).value; }

bool Tape::has_grad(Tensor t) const { return at(t).grad.size() > 0; }

const Mat& Tape::grad(Tensor t) const {
  const Node& n = at(t);
  if (n.grad.size() == 0) throw std::runtime_error("tape: no gradient recorded for tensor");
  return n.grad;
}

Mat& Tape::grad_buffer(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

Tensor Tape::leaf(Mat value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Tensor Tape::scalar(double v, bool requires_grad) {
  Mat m(1, 1);
  m(0, 0) = v;
  return leaf(std::move(m), requires_grad);
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.cols() != nb.value.rows()) shape_fail("matmul", na.value, nb.value);
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value.resize(na.value.rows(), nb.value.cols());
  n.value.noalias() = na.value * nb.value;
  return push(std::move(n));
}

Tensor Tape::add(Tensor a, Tensor b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols())
    shape_fail("add", na.value, nb.value);
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value = na.value + nb.value;
  return push(std::move(n));
}

Tensor Tape::sub(Tensor a, Tensor b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols())
    shape_fail("sub", na.value, nb.value);
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value = na.value - nb.value;
  return push(std::move(n));
}

Tensor Tape::mul(Tensor a, Tensor b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.rows() != nb.value.rows() || na.value.cols() != nb.value.cols())
    shape_fail("mul", na.value, nb.value);
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value = na.value.cwiseProduct(nb.value);
  return push(std::move(n));
}

Tensor Tape::add_broadcast(Tensor a, Tensor row) {
  const Node& na = at(a);
  const Node& nr = at(row);
  if (nr.value.rows() != 1 || nr.value.cols() != na.value.cols())
    shape_fail("add_broadcast", na.value, nr.value);
  Node n;
  n.op = Op::AddBroadcast;
  n.a = a.id;
  n.b = row.id;
  n.requires_grad = na.requires_grad || nr.requires_grad;
  n.value = na.value.rowwise() + nr.value.row(0);
  return push(std::move(n));
}

Tensor Tape::concat_columns(Tensor a, Tensor b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.value.rows() != nb.value.rows()) shape_fail("concat_columns", na.value, nb.value);
  Node n;
  n.op = Op::ConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = na.requires_grad || nb.requires_grad;
  n.value.resize(na.value.rows(), na.value.cols() + nb.value.cols());
  n.value.leftCols(na.value.cols()) = na.value;
  n.value.rightCols(nb.value.cols()) = nb.value;
  return push(std::move(n));
}

Tensor Tape::relu(Tensor a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::Relu;
  n.a = a.id;
  n.requires_grad = na.requires_grad;
  n.value = na.value.cwiseMax(0.0);
  return push(std::move(n));
}

Tensor Tape::gather_rows(Tensor a, std::shared_ptr<const std::vector<int>> idx) {
  const Node& na = at(a);
  for (int i : *idx)
    if (i < 0 || i >= na.value.rows())
      throw std::invalid_argument("gather_rows: index " + std::to_string(i) + " out of range");
  Node n;
  n.op = Op::GatherRows;
  n.a = a.id;
  n.idx = idx;
  n.requires_grad = na.requires_grad;
  n.value.resize(static_cast<Eigen::Index>(idx->size()), na.value.cols());
  for (size_t k = 0; k < idx->size(); ++k)
    n.value.row(static_cast<Eigen::Index>(k)) = na.value.row((*idx)[k]);
  return push(std::move(n));
}

Tensor Tape::scatter_sum_rows(Tensor a, std::shared_ptr<const std::vector<int>> idx,
                              int out_rows) {
  const Node& na = at(a);
  if (static_cast<Eigen::Index>(idx->size()) != na.value.rows())
    throw std::invalid_argument("scatter_sum_rows: index count " + std::to_string(idx->size()) +
                                " != row count " + std::to_string(na.value.rows()));
  for (int i : *idx)
    if (i < 0 || i >= out_rows)
      throw std::invalid_argument("scatter_sum_rows: index " + std::to_string(i) +
                                  " out of range");
  Node n;
  n.op = Op::ScatterSumRows;
  n.a = a.id;
  n.idx = idx;
  n.i0 = out_rows;
  n.requires_grad = na.requires_grad;
  n.value.setZero(out_rows, na.value.cols());
  for (size_t k = 0; k < idx->size(); ++k)
    n.value.row((*idx)[k]) += na.value.row(static_cast<Eigen::Index>(k));
  return push(std::move(n));
}

Tensor Tape::square(Tensor a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::Square;
  n.a = a.id;
  n.requires_grad = na.requires_grad;
  n.value = na.value.cwiseProduct(na.value);
  return push(std::move(n));
}

Tensor Tape::mean_all(Tensor a) {
  const Node& na = at(a);
  if (na.value.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  Node n;
  n.op = Op::MeanAll;
  n.a = a.id;
  n.requires_grad = na.requires_grad;
  n.value.resize(1, 1);
  n.value(0, 0) = na.value.sum() / static_cast<double>(na.value.size());
  return push(std::move(n));
}

Tensor Tape::sum_all(Tensor a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::SumAll;
  n.a = a.id;
  n.requires_grad = na.requires_grad;
  n.value.resize(1, 1);
  n.value(0, 0) = na.value.sum();
  return push(std::move(n));
}

Tensor Tape::scale(Tensor a, double c) {
  const Node& na = at(a);
  Node n;
  n.op = Op::Scale;
  n.a = a.id;
  n.c = c;
  n.requires_grad = na.requires_grad;
  n.value = na.value * c;
  return push(std::move(n));
}

Tensor Tape::add_const(Tensor a, double c) {
  const Node& na = at(a);
  Node n;
  n.op = Op::AddConst;
  n.a = a.id;
  n.c = c;
  n.requires_grad = na.requires_grad;
  n.value = na.value.array() + c;
  return push(std::move(n));
}

Tensor Tape::scalar_mul(Tensor s, Tensor a) {
  const Node& ns = at(s);
  const Node& na = at(a);
  if (ns.value.rows() != 1 || ns.value.cols() != 1) shape_fail("scalar_mul", ns.value, na.value);
  Node n;
  n.op = Op::ScalarMul;
  n.a = s.id;
  n.b = a.id;
  n.requires_grad = ns.requires_grad || na.requires_grad;
  n.value = na.value * ns.value(0, 0);
  return push(std::move(n));
}

Tensor Tape::sin(Tensor a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::Sin;
  n.a = a.id;
  n.requires_grad = na.requires_grad;
  n.value = na.value.array().sin();
  return push(std::move(n));
}

Tensor Tape::cos(Tensor a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::Cos;
  n.a = a.id;
  n.requires_grad = na.requires_grad;
  n.value = na.value.array().cos();
  return push(std::move(n));
}

Tensor Tape::slice_columns(Tensor a, int start, int count) {
  const Node& na = at(a);
  if (start < 0 || count < 1 || start + count > na.value.cols())
    throw std::invalid_argument("slice_columns: range [" + std::to_string(start) + ", " +
                                std::to_string(start + count) + ") outside " +
                                std::to_string(na.value.cols()) + " columns");
  Node n;
  n.op = Op::SliceCols;
  n.a = a.id;
  n.i0 = start;
  n.i1 = count;
  n.requires_grad = na.requires_grad;
  n.value = na.value.middleCols(start, count);
  return push(std::move(n));
}

Tensor Tape::slice_rows(Tensor a, int start, int count) {
  const Node& na = at(a);
  if (start < 0 || count < 1 || start + count > na.value.rows())
    throw std::invalid_argument("slice_rows: range [" + std::to_string(start) + ", " +
                                std::to_string(start + count) + ") outside " +
                                std::to_string(na.value.rows()) + " rows");
  Node n;
  n.op = Op::SliceRows;
  n.a = a.id;
  n.i0 = start;
  n.i1 = count;
  n.requires_grad = na.requires_grad;
  n.value = na.value.middleRows(start, count);
  return push(std::move(n));
}

Tensor Tape::sparse_apply(std::shared_ptr<const SparseMap> map, Tensor a) {
  const Node& na = at(a);
  if (map->cols != na.value.rows())
    throw std::invalid_argument("sparse_apply: map has " + std::to_string(map->cols) +
                                " columns but operand has " + std::to_string(na.value.rows()) +
                                " rows");
  Node n;
  n.op = Op::SparseApply;
  n.a = a.id;
  n.map = map;
  n.requires_grad = na.requires_grad;
  map->apply(na.value, n.value);
  return push(std::move(n));
}

Tensor Tape::detach(Tensor a) { return leaf(at(a).value, false); }

void Tape::backprop_node(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.requires_grad || n.grad.size() == 0 || n.op == Op::Leaf) return;
  const Mat& g = n.grad;
  const bool need_a = n.a >= 0 && nodes_[static_cast<size_t>(n.a)].requires_grad;
  const bool need_b = n.b >= 0 && nodes_[static_cast<size_t>(n.b)].requires_grad;

  switch (n.op) {
    case Op::MatMul: {
      if (need_a) grad_buffer(n.a).noalias() += g * nodes_[static_cast<size_t>(n.b)].value.transpose();
      if (need_b) grad_buffer(n.b).noalias() += nodes_[static_cast<size_t>(n.a)].value.transpose() * g;
      break;
    }
    case Op::Add:
      if (need_a) grad_buffer(n.a) += g;
      if (need_b) grad_buffer(n.b) += g;
      break;
    case Op::Sub:
      if (need_a) grad_buffer(n.a) += g;
      if (need_b) grad_buffer(n.b) -= g;
      break;
    case Op::Mul:
      if (need_a) grad_buffer(n.a) += g.cwiseProduct(nodes_[static_cast<size_t>(n.b)].value);
      if (need_b) grad_buffer(n.b) += g.cwiseProduct(nodes_[static_cast<size_t>(n.a)].value);
      break;
    case Op::AddBroadcast:
      if (need_a) grad_buffer(n.a) += g;
      if (need_b) grad_buffer(n.b).row(0) += g.colwise().sum();
      break;
    case Op::ConcatCols: {
      const Eigen::Index ca = nodes_[static_cast<size_t>(n.a)].value.cols();
      if (need_a) grad_buffer(n.a) += g.leftCols(ca);
      if (need_b) grad_buffer(n.b) += g.rightCols(g.cols() - ca);
      break;
    }
    case Op::Relu:
      if (need_a) {
        const Mat& x = nodes_[static_cast<size_t>(n.a)].value;
        grad_buffer(n.a).array() += (x.array() > 0.0).cast<double>() * g.array();
      }
      break;
    case Op::GatherRows:
      if (need_a) {
        Mat& ga = grad_buffer(n.a);
        for (size_t k = 0; k < n.idx->size(); ++k)
          ga.row((*n.idx)[k]) += g.row(static_cast<Eigen::Index>(k));
      }
      break;
    case Op::ScatterSumRows:
      if (need_a) {
        Mat& ga = grad_buffer(n.a);
        for (size_t k = 0; k < n.idx->size(); ++k)
          ga.row(static_cast<Eigen::Index>(k)) += g.row((*n.idx)[k]);
      }
      break;
    case Op::Square:
      if (need_a)
        grad_buffer(n.a) += 2.0 * g.cwiseProduct(nodes_[static_cast<size_t>(n.a)].value);
      break;
    case Op::MeanAll:
      if (need_a) {
        const Mat& x = nodes_[static_cast<size_t>(n.a)].value;
        grad_buffer(n.a).array() += g(0, 0) / static_cast<double>(x.size());
      }
      break;
    case Op::SumAll:
      if (need_a) grad_buffer(n.a).array() += g(0, 0);
      break;
    case Op::Scale:
      if (need_a) grad_buffer(n.a) += n.c * g;
      break;
    case Op::AddConst:
      if (need_a) grad_buffer(n.a) += g;
      break;
    case Op::ScalarMul: {
      const Mat& x = nodes_[static_cast<size_t>(n.b)].value;
      const double s = nodes_[static_cast<size_t>(n.a)].value(0, 0);
      if (need_a) grad_buffer(n.a)(0, 0) += g.cwiseProduct(x).sum();
      if (need_b) grad_buffer(n.b) += s * g;
      break;
    }
    case Op::Sin:
      if (need_a)
        grad_buffer(n.a).array() +=
            g.array() * nodes_[static_cast<size_t>(n.a)].value.array().cos();
      break;
    case Op::Cos:
      if (need_a)
        grad_buffer(n.a).array() -=
            g.array() * nodes_[static_cast<size_t>(n.a)].value.array().sin();
      break;
    case Op::SliceCols:
      if (need_a) grad_buffer(n.a).middleCols(n.i0, n.i1) += g;
      break;
    case Op::SliceRows:
      if (need_a) grad_buffer(n.a).middleRows(n.i0, n.i1) += g;
      break;
    case Op::SparseApply:
      if (need_a) n.map->apply_transpose_add(g, grad_buffer(n.a));
      break;
    case Op::Leaf:
      break;
  }
}

void Tape::backward(Tensor loss) {
  const Node& n = at(loss);
  if (n.value.rows() != 1 || n.value.cols() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(n.value));
  if (!n.requires_grad)
    throw std::invalid_argument("backward: tensor is not on a differentiable path");
  Mat seed(1, 1);
  seed(0, 0) = 1.0;
  backward_from(loss, seed);
}

void Tape::backward_from(Tensor t, const Mat& seed) {
  const Node& n = at(t);
  if (swept_) throw std::runtime_error("backward: tape already swept");
  if (!n.requires_grad)
    throw std::invalid_argument("backward_from: tensor is not on a differentiable path");
  if (seed.rows() != n.value.rows() || seed.cols() != n.value.cols())
    shape_fail("backward_from", n.value, seed);
  swept_ = true;
  grad_buffer(t.id) += seed;
  for (int id = t.id; id >= 0; --id) backprop_node(id);
}

}  // namespace pignn::ad
