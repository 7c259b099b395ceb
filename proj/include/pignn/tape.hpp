#ifndef PIGNN_TAPE_HPP
#define PIGNN_TAPE_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace pignn::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Constant sparse linear map (CSR), applied column-wise to dense operands.
struct SparseMap {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // rows + 1
  std::vector<int> col_idx;
  std::vector<double> vals;

  void apply(const Mat& x, Mat& y) const;                // y = S x
  void apply_transpose_add(const Mat& g, Mat& acc) const;  // acc += S^T g
};

class Tape;

/// Handle to a value recorded on a tape.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  int rows() const;
  int cols() const;
};

/// Append-only record of the forward computation; inputs always precede
/// outputs, so reverse traversal visits each node once. Single-threaded.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Mat value, bool requires_grad = false);
  Tensor constant(Mat value) { return leaf(std::move(value), false); }
  Tensor scalar(double v, bool requires_grad = false);

  Tensor matmul(Tensor a, Tensor b);
  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);             // elementwise
  Tensor add_broadcast(Tensor a, Tensor row);  // row: 1 x cols, added to every row
  Tensor concat_columns(Tensor a, Tensor b);
  Tensor relu(Tensor a);
  Tensor gather_rows(Tensor a, std::shared_ptr<const std::vector<int>> idx);
  Tensor scatter_sum_rows(Tensor a, std::shared_ptr<const std::vector<int>> idx, int out_rows);
  Tensor square(Tensor a);
  Tensor mean_all(Tensor a);
  Tensor sum_all(Tensor a);
  Tensor scale(Tensor a, double c);
  Tensor add_const(Tensor a, double c);
  Tensor scalar_mul(Tensor s, Tensor a);  // s: 1x1, broadcast multiply
  Tensor sin(Tensor a);
  Tensor cos(Tensor a);
  Tensor slice_columns(Tensor a, int start, int count);
  Tensor slice_rows(Tensor a, int start, int count);
  Tensor sparse_apply(std::shared_ptr<const SparseMap> map, Tensor a);

  /// Same values, but disconnected: gradients never flow through the result.
  Tensor detach(Tensor a);

  /// Reverse sweep seeding d(loss)/d(loss) = 1. Loss must be scalar and on
  /// a differentiable path. One sweep per tape.
  void backward(Tensor loss);
  /// Reverse sweep from an arbitrary tensor with an explicit seed.
  void backward_from(Tensor t, const Mat& seed);

  const Mat& value(Tensor t) const;
  bool has_grad(Tensor t) const;
  const Mat& grad(Tensor t) const;

  int size() const { return static_cast<int>(nodes_.size()); }
  void reserve(size_t n) { nodes_.reserve(n); }

 private:
  enum class Op {
    Leaf, MatMul, Add, Sub, Mul, AddBroadcast, ConcatCols, Relu, GatherRows,
    ScatterSumRows, Square, MeanAll, SumAll, Scale, AddConst, ScalarMul, Sin,
    Cos, SliceCols, SliceRows, SparseApply,
  };

  struct Node {
    Op op = Op::Leaf;
    int a = -1;
    int b = -1;
    double c = 0.0;
    int i0 = 0;
    int i1 = 0;
    std::shared_ptr<const std::vector<int>> idx;
    std::shared_ptr<const SparseMap> map;
    Mat value;
    Mat grad;
    bool requires_grad = false;
  };

  Tensor push(Node n);
  Node& at(Tensor t);
  const Node& at(Tensor t) const;
  Mat& grad_buffer(int id);
  void backprop_node(int id);

  std::vector<Node> nodes_;
  bool swept_ = false;

  friend struct Tensor;
};

}  // namespace pignn::ad

#endif
