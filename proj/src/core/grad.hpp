#pragma once

#include <memory>
#include <vector>

#include "core/types.hpp"

namespace gp {

using IndexVec = std::shared_ptr<const std::vector<int>>;

// Reverse-mode tape over dense double matrices. Nodes are appended in
// evaluation order, so backward() is a single reverse sweep. Shapes are
// checked at graph build time; gradients are allocated lazily.
class Tape {
 public:
  // Leaves. Parameters receive gradients, inputs do not.
  int param(const Mat& m);
  int input(const Mat& m);
  int input(Mat&& m);

  int matmul(int a, int b);
  int add(int a, int b);                 // same shape
  int add_rowvec(int a, int b);          // [N,D] + [1,D]
  int sub(int a, int b);
  int hadamard(int a, int b);            // elementwise, same shape
  int rowscale(int a, int s);            // [N,D] scaled per-row by [N,1]
  int emax(int a, int b);                // elementwise max, same shape
  int concat_cols(const std::vector<int>& parts);
  int concat_rows(int a, int b);
  int gather_rows(int a, IndexVec idx);
  int segment_sum(int a, IndexVec idx, int out_rows);
  int tanh_(int a);
  int exp_(int a);
  int scale_shift(int a, double mul, double shift);  // mul * a + shift
  int clamp(int a, double lo, double hi);
  int wrap_to_pi(int a);                 // wraps to (-pi, pi], gradient 1
  int mean_all(int a);                   // [1,1]
  // mean over elements of smooth_l1(a - b); quadratic within |x| < delta.
  int smooth_l1_mean(int a, int b, double delta = 1.0);
  int axpby(double alpha, int a, double beta, int b);  // alpha*a + beta*b

  void backward(int root);

  const Mat& val(int id) const { return nodes_[id].val; }
  const Mat& grad(int id) const { return nodes_[id].grad; }
  bool has_grad(int id) const { return !nodes_[id].grad.v.empty(); }
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Op {
    leaf, matmul, add_rowvec, hadamard, rowscale, emax, concat_cols,
    concat_rows, gather, segsum, tanh, exp, scale_shift, clamp, wrap,
    mean, smooth_l1, axpby
  };
  struct Node {
    Op op = Op::leaf;
    int a = -1, b = -1;
    std::vector<int> many;
    IndexVec idx;
    double c0 = 0.0, c1 = 0.0;
    Mat val;
    Mat grad;
    bool needs_grad = false;
  };

  int push(Node&& n);
  Mat& grad_buf(int id);
  bool needs(int id) const { return id >= 0 && nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
};

// Adam with decoupled weight decay and multiplicative per-epoch learning
// rate decay: lr_t = lr * (1 - lr_decay)^epoch.
struct AdamConfig {
  double lr = 5e-5;
  double lr_decay = 1e-3;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Mat*> params, const AdamConfig& cfg);
  // grads aligned with the params passed at construction.
  void step(const std::vector<const Mat*>& grads, int epoch);

 private:
  std::vector<Mat*> params_;
  std::vector<Mat> m_, v_;
  AdamConfig cfg_;
  long long t_ = 0;
};

}  // namespace gp
