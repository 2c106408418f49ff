#include "core/grad.hpp"

#include <Eigen/Dense>
#include <cassert>
#include <cmath>

#include "core/errors.hpp"

namespace gp {
namespace {

using EMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CEMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

EMap emap(Mat& m) { return EMap(m.v.data(), m.rows, m.cols); }
CEMap emap(const Mat& m) { return CEMap(m.v.data(), m.rows, m.cols); }

#ifndef NDEBUG
void check_finite(const Mat& m) {
  for (double x : m.v) assert(std::isfinite(x) && "non-finite value on tape");
}
#else
void check_finite(const Mat&) {}
#endif

}  // namespace

int Tape::push(Node&& n) {
  check_finite(n.val);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.v.empty()) n.grad = Mat(n.val.rows, n.val.cols);
  return n.grad;
}

int Tape::param(const Mat& m) {
  Node n;
  n.val = m;
  n.needs_grad = true;
  return push(std::move(n));
}

int Tape::input(const Mat& m) {
  Node n;
  n.val = m;
  return push(std::move(n));
}

int Tape::input(Mat&& m) {
  Node n;
  n.val = std::move(m);
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (A.cols != B.rows) fail_usage("matmul: inner dimensions differ");
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.val = Mat(A.rows, B.cols);
  emap(n.val) = emap(A) * emap(B);
  n.needs_grad = needs(a) || needs(b);
  return push(std::move(n));
}

int Tape::add(int a, int b) { return axpby(1.0, a, 1.0, b); }
int Tape::sub(int a, int b) { return axpby(1.0, a, -1.0, b); }

int Tape::axpby(double alpha, int a, double beta, int b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (!A.same_shape(B)) fail_usage("axpby: shape mismatch");
  Node n;
  n.op = Op::axpby;
  n.a = a;
  n.b = b;
  n.c0 = alpha;
  n.c1 = beta;
  n.val = Mat(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) n.val.v[i] = alpha * A.v[i] + beta * B.v[i];
  n.needs_grad = needs(a) || needs(b);
  return push(std::move(n));
}

int Tape::add_rowvec(int a, int b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (B.rows != 1 || B.cols != A.cols) fail_usage("add_rowvec: expected [1,D] bias");
  Node n;
  n.op = Op::add_rowvec;
  n.a = a;
  n.b = b;
  n.val = A;
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) n.val(r, c) += B(0, c);
  n.needs_grad = needs(a) || needs(b);
  return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (!A.same_shape(B)) fail_usage("hadamard: shape mismatch");
  Node n;
  n.op = Op::hadamard;
  n.a = a;
  n.b = b;
  n.val = Mat(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) n.val.v[i] = A.v[i] * B.v[i];
  n.needs_grad = needs(a) || needs(b);
  return push(std::move(n));
}

int Tape::rowscale(int a, int s) {
  const Mat& A = nodes_[a].val;
  const Mat& S = nodes_[s].val;
  if (S.rows != A.rows || S.cols != 1) fail_usage("rowscale: expected [N,1] scale");
  Node n;
  n.op = Op::rowscale;
  n.a = a;
  n.b = s;
  n.val = Mat(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) n.val(r, c) = A(r, c) * S(r, 0);
  n.needs_grad = needs(a) || needs(s);
  return push(std::move(n));
}

int Tape::emax(int a, int b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (!A.same_shape(B)) fail_usage("emax: shape mismatch");
  Node n;
  n.op = Op::emax;
  n.a = a;
  n.b = b;
  n.val = Mat(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) n.val.v[i] = std::max(A.v[i], B.v[i]);
  n.needs_grad = needs(a) || needs(b);
  return push(std::move(n));
}

int Tape::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) fail_usage("concat_cols: no inputs");
  int rows = nodes_[parts[0]].val.rows;
  int cols = 0;
  bool ng = false;
  for (int p : parts) {
    if (nodes_[p].val.rows != rows) fail_usage("concat_cols: row mismatch");
    cols += nodes_[p].val.cols;
    ng = ng || needs(p);
  }
  Node n;
  n.op = Op::concat_cols;
  n.many = parts;
  n.val = Mat(rows, cols);
  int at = 0;
  for (int p : parts) {
    const Mat& P = nodes_[p].val;
    for (int r = 0; r < rows; ++r)
      std::copy(P.row(r), P.row(r) + P.cols, n.val.row(r) + at);
    at += P.cols;
  }
  n.needs_grad = ng;
  return push(std::move(n));
}

int Tape::concat_rows(int a, int b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (A.cols != B.cols) fail_usage("concat_rows: column mismatch");
  Node n;
  n.op = Op::concat_rows;
  n.a = a;
  n.b = b;
  n.val = Mat(A.rows + B.rows, A.cols);
  std::copy(A.v.begin(), A.v.end(), n.val.v.begin());
  std::copy(B.v.begin(), B.v.end(), n.val.v.begin() + A.size());
  n.needs_grad = needs(a) || needs(b);
  return push(std::move(n));
}

int Tape::gather_rows(int a, IndexVec idx) {
  const Mat& A = nodes_[a].val;
  Node n;
  n.op = Op::gather;
  n.a = a;
  n.idx = std::move(idx);
  n.val = Mat(static_cast<int>(n.idx->size()), A.cols);
  for (size_t r = 0; r < n.idx->size(); ++r) {
    const int src = (*n.idx)[r];
    if (src < 0 || src >= A.rows) fail_usage("gather_rows: index out of range");
    std::copy(A.row(src), A.row(src) + A.cols, n.val.row(static_cast<int>(r)));
  }
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::segment_sum(int a, IndexVec idx, int out_rows) {
  const Mat& A = nodes_[a].val;
  if (static_cast<int>(idx->size()) != A.rows)
    fail_usage("segment_sum: one index per input row required");
  Node n;
  n.op = Op::segsum;
  n.a = a;
  n.idx = std::move(idx);
  n.val = Mat(out_rows, A.cols);
  for (int r = 0; r < A.rows; ++r) {
    const int dst = (*n.idx)[r];
    if (dst < 0 || dst >= out_rows) fail_usage("segment_sum: index out of range");
    double* out = n.val.row(dst);
    const double* in = A.row(r);
    for (int c = 0; c < A.cols; ++c) out[c] += in[c];
  }
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::tanh_(int a) {
  Node n;
  n.op = Op::tanh;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& x : n.val.v) x = std::tanh(x);
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::exp_(int a) {
  Node n;
  n.op = Op::exp;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& x : n.val.v) x = std::exp(x);
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::scale_shift(int a, double mul, double shift) {
  Node n;
  n.op = Op::scale_shift;
  n.a = a;
  n.c0 = mul;
  n.c1 = shift;
  n.val = nodes_[a].val;
  for (double& x : n.val.v) x = mul * x + shift;
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::clamp(int a, double lo, double hi) {
  Node n;
  n.op = Op::clamp;
  n.a = a;
  n.c0 = lo;
  n.c1 = hi;
  n.val = nodes_[a].val;
  for (double& x : n.val.v) x = std::min(hi, std::max(lo, x));
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::wrap_to_pi(int a) {
  Node n;
  n.op = Op::wrap;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& x : n.val.v) x = wrap_angle(x);
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::mean_all(int a) {
  const Mat& A = nodes_[a].val;
  if (A.size() == 0) fail_usage("mean_all: empty input");
  Node n;
  n.op = Op::mean;
  n.a = a;
  n.val = Mat(1, 1);
  double s = 0.0;
  for (double x : A.v) s += x;
  n.val(0, 0) = s / static_cast<double>(A.size());
  n.needs_grad = needs(a);
  return push(std::move(n));
}

int Tape::smooth_l1_mean(int a, int b, double delta) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (!A.same_shape(B)) fail_usage("smooth_l1: shape mismatch");
  if (A.size() == 0) fail_usage("smooth_l1: empty input");
  Node n;
  n.op = Op::smooth_l1;
  n.a = a;
  n.b = b;
  n.c0 = delta;
  n.val = Mat(1, 1);
  double s = 0.0;
  for (size_t i = 0; i < A.size(); ++i) {
    const double x = A.v[i] - B.v[i];
    const double ax = std::abs(x);
    s += ax < delta ? 0.5 * x * x / delta : ax - 0.5 * delta;
  }
  n.val(0, 0) = s / static_cast<double>(A.size());
  n.needs_grad = needs(a) || needs(b);
  return push(std::move(n));
}

void Tape::backward(int root) {
  Node& r = nodes_[root];
  if (r.val.rows != 1 || r.val.cols != 1) fail_usage("backward: root must be scalar");
  grad_buf(root)(0, 0) = 1.0;
  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.v.empty()) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul: {
        const Mat& A = nodes_[n.a].val;
        const Mat& B = nodes_[n.b].val;
        if (needs(n.a)) emap(grad_buf(n.a)) += emap(g) * emap(B).transpose();
        if (needs(n.b)) emap(grad_buf(n.b)) += emap(A).transpose() * emap(g);
        break;
      }
      case Op::axpby: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga.v[i] += n.c0 * g.v[i];
        }
        if (needs(n.b)) {
          Mat& gb = grad_buf(n.b);
          for (size_t i = 0; i < g.size(); ++i) gb.v[i] += n.c1 * g.v[i];
        }
        break;
      }
      case Op::add_rowvec: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
        }
        if (needs(n.b)) {
          Mat& gb = grad_buf(n.b);
          for (int r2 = 0; r2 < g.rows; ++r2)
            for (int c = 0; c < g.cols; ++c) gb(0, c) += g(r2, c);
        }
        break;
      }
      case Op::hadamard: {
        const Mat& A = nodes_[n.a].val;
        const Mat& B = nodes_[n.b].val;
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * B.v[i];
        }
        if (needs(n.b)) {
          Mat& gb = grad_buf(n.b);
          for (size_t i = 0; i < g.size(); ++i) gb.v[i] += g.v[i] * A.v[i];
        }
        break;
      }
      case Op::rowscale: {
        const Mat& A = nodes_[n.a].val;
        const Mat& S = nodes_[n.b].val;
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (int r2 = 0; r2 < g.rows; ++r2)
            for (int c = 0; c < g.cols; ++c) ga(r2, c) += g(r2, c) * S(r2, 0);
        }
        if (needs(n.b)) {
          Mat& gs = grad_buf(n.b);
          for (int r2 = 0; r2 < g.rows; ++r2) {
            double acc = 0.0;
            for (int c = 0; c < g.cols; ++c) acc += g(r2, c) * A(r2, c);
            gs(r2, 0) += acc;
          }
        }
        break;
      }
      case Op::emax: {
        const Mat& A = nodes_[n.a].val;
        const Mat& B = nodes_[n.b].val;
        // Ties route the gradient to the first argument.
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i)
            if (A.v[i] >= B.v[i]) ga.v[i] += g.v[i];
        }
        if (needs(n.b)) {
          Mat& gb = grad_buf(n.b);
          for (size_t i = 0; i < g.size(); ++i)
            if (A.v[i] < B.v[i]) gb.v[i] += g.v[i];
        }
        break;
      }
      case Op::concat_cols: {
        int at = 0;
        for (int p : n.many) {
          const int pc = nodes_[p].val.cols;
          if (needs(p)) {
            Mat& gp = grad_buf(p);
            for (int r2 = 0; r2 < g.rows; ++r2)
              for (int c = 0; c < pc; ++c) gp(r2, c) += g(r2, at + c);
          }
          at += pc;
        }
        break;
      }
      case Op::concat_rows: {
        const Mat& A = nodes_[n.a].val;
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < A.size(); ++i) ga.v[i] += g.v[i];
        }
        if (needs(n.b)) {
          Mat& gb = grad_buf(n.b);
          for (size_t i = 0; i < gb.size(); ++i) gb.v[i] += g.v[A.size() + i];
        }
        break;
      }
      case Op::gather: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t r2 = 0; r2 < n.idx->size(); ++r2) {
            double* out = ga.row((*n.idx)[r2]);
            const double* in = g.row(static_cast<int>(r2));
            for (int c = 0; c < g.cols; ++c) out[c] += in[c];
          }
        }
        break;
      }
      case Op::segsum: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (int r2 = 0; r2 < ga.rows; ++r2) {
            const double* in = g.row((*n.idx)[r2]);
            double* out = ga.row(r2);
            for (int c = 0; c < g.cols; ++c) out[c] += in[c];
          }
        }
        break;
      }
      case Op::tanh: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i)
            ga.v[i] += g.v[i] * (1.0 - n.val.v[i] * n.val.v[i]);
        }
        break;
      }
      case Op::exp: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * n.val.v[i];
        }
        break;
      }
      case Op::scale_shift: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * n.c0;
        }
        break;
      }
      case Op::clamp: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          const Mat& A = nodes_[n.a].val;
          for (size_t i = 0; i < g.size(); ++i)
            if (A.v[i] > n.c0 && A.v[i] < n.c1) ga.v[i] += g.v[i];
        }
        break;
      }
      case Op::wrap: {
        // Shifts by multiples of 2*pi; derivative 1 almost everywhere.
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          for (size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
        }
        break;
      }
      case Op::mean: {
        if (needs(n.a)) {
          Mat& ga = grad_buf(n.a);
          const double s = g(0, 0) / static_cast<double>(ga.size());
          for (double& x : ga.v) x += s;
        }
        break;
      }
      case Op::smooth_l1: {
        const Mat& A = nodes_[n.a].val;
        const Mat& B = nodes_[n.b].val;
        const double inv = g(0, 0) / static_cast<double>(A.size());
        for (size_t i = 0; i < A.size(); ++i) {
          const double x = A.v[i] - B.v[i];
          double d;
          if (std::abs(x) < n.c0) {
            d = x / n.c0;
          } else {
            d = x > 0 ? 1.0 : -1.0;
          }
          if (needs(n.a)) grad_buf(n.a).v[i] += inv * d;
          if (needs(n.b)) grad_buf(n.b).v[i] -= inv * d;
        }
        break;
      }
    }
  }
}

Adam::Adam(std::vector<Mat*> params, const AdamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Mat* p : params_) {
    m_.emplace_back(p->rows, p->cols);
    v_.emplace_back(p->rows, p->cols);
  }
}

void Adam::step(const std::vector<const Mat*>& grads, int epoch) {
  if (grads.size() != params_.size()) fail_usage("adam: gradient count mismatch");
  ++t_;
  const double lr = cfg_.lr * std::pow(1.0 - cfg_.lr_decay, epoch);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Mat& p = *params_[k];
    const Mat& g = *grads[k];
    for (size_t i = 0; i < p.size(); ++i) {
      m_[k].v[i] = cfg_.beta1 * m_[k].v[i] + (1.0 - cfg_.beta1) * g.v[i];
      v_[k].v[i] = cfg_.beta2 * v_[k].v[i] + (1.0 - cfg_.beta2) * g.v[i] * g.v[i];
      const double mh = m_[k].v[i] / bc1;
      const double vh = v_[k].v[i] / bc2;
      p.v[i] -= lr * (mh / (std::sqrt(vh) + cfg_.eps) + cfg_.weight_decay * p.v[i]);
    }
  }
}

}  // namespace gp
