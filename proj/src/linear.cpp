#include "vai/linear.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "vai/core.hpp"

namespace vai {

void LinearFunction::set_weights(std::vector<double> w) {
  if (w.size() != w_.size()) throw InvalidInput("weight vector dimension mismatch");
  w_ = std::move(w);
}

namespace {
constexpr std::size_t kDenseLimit = 2048;
constexpr std::size_t kTripletFlush = 1u << 21;
}  // namespace

struct LstdSystem::Impl {
  std::size_t dim;
  bool dense;
  Eigen::MatrixXd a_dense;
  Eigen::SparseMatrix<double> a_sparse;
  std::vector<Eigen::Triplet<double>> pending;
  Eigen::VectorXd b;

  void flush() {
    if (pending.empty()) return;
    Eigen::SparseMatrix<double> chunk(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    chunk.setFromTriplets(pending.begin(), pending.end());
    a_sparse += chunk;
    pending.clear();
  }
};

LstdSystem::LstdSystem(std::size_t dim) : impl_(new Impl) {
  impl_->dim = dim;
  impl_->dense = dim <= kDenseLimit;
  const auto n = static_cast<Eigen::Index>(dim);
  if (impl_->dense) {
    impl_->a_dense = Eigen::MatrixXd::Zero(n, n);
  } else {
    impl_->a_sparse.resize(n, n);
  }
  impl_->b = Eigen::VectorXd::Zero(n);
}

LstdSystem::~LstdSystem() { delete impl_; }

void LstdSystem::add(std::span<const Feature> phi, std::span<const Feature> phi_next, double gamma, double c) {
  ++samples_;
  auto& m = *impl_;
  for (const auto& f : phi) {
    m.b(f.index) += f.value * c;
    if (m.dense) {
      for (const auto& g : phi) m.a_dense(f.index, g.index) += f.value * g.value;
      for (const auto& g : phi_next) m.a_dense(f.index, g.index) -= gamma * f.value * g.value;
    } else {
      for (const auto& g : phi) m.pending.emplace_back(f.index, g.index, f.value * g.value);
      for (const auto& g : phi_next) m.pending.emplace_back(f.index, g.index, -gamma * f.value * g.value);
    }
  }
  if (!m.dense && m.pending.size() >= kTripletFlush) m.flush();
}

std::vector<double> LstdSystem::solve(double ridge) const {
  auto& m = *impl_;
  Eigen::VectorXd x;
  if (m.dense) {
    Eigen::MatrixXd a = m.a_dense;
    a.diagonal().array() += ridge;
    x = a.partialPivLu().solve(m.b);
  } else {
    m.flush();
    Eigen::SparseMatrix<double> a = m.a_sparse;
    Eigen::SparseMatrix<double> eye(a.rows(), a.cols());
    eye.setIdentity();
    a += ridge * eye;
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("LSTD factorization failed");
    x = lu.solve(m.b);
  }
  return {x.data(), x.data() + x.size()};
}

}  // namespace vai
