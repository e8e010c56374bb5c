#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dbyz/core.hpp"
#include "dbyz/rng.hpp"

namespace dbyz {

/// A federated objective. Every client in [0, n) has a local objective;
/// the global objective f averages the honest ones only.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual Eigen::Index dim() const = 0;
  virtual int num_clients() const = 0;
  /// Smoothness constant L of every local objective.
  virtual double smoothness() const = 0;

  virtual ParamVector stochastic_grad(ClientId i, const ParamVector& x, RngStream& rng) const = 0;
  virtual ParamVector global_grad(const ParamVector& x) const = 0;
  virtual double global_loss(const ParamVector& x) const = 0;
  virtual std::optional<double> accuracy(const ParamVector&) const { return std::nullopt; }

  virtual bool has_labels() const { return false; }
  /// Client i's pipeline with labels flipped y -> (C-1) - y.
  virtual ParamVector flipped_label_grad(ClientId i, const ParamVector& x, RngStream& rng) const;

  virtual ParamVector initial_point() const { return ParamVector::Zero(dim()); }

  const std::vector<bool>& honest() const { return honest_; }
  int num_honest() const;
  void set_honest(std::vector<bool> honest);

 protected:
  virtual void on_honest_changed() {}

  std::vector<bool> honest_;
};

/// f_i(x) = (mu/2)|x|^2 - b_i^T x, with isotropic Gaussian gradient noise of
/// total variance sigma^2.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(double mu, std::vector<ParamVector> b, double sigma);

  Eigen::Index dim() const override { return b_.front().size(); }
  int num_clients() const override { return static_cast<int>(b_.size()); }
  double smoothness() const override { return mu_; }

  ParamVector local_grad(ClientId i, const ParamVector& x) const;
  ParamVector stochastic_grad(ClientId i, const ParamVector& x, RngStream& rng) const override;
  ParamVector global_grad(const ParamVector& x) const override;
  double global_loss(const ParamVector& x) const override;

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  const std::vector<ParamVector>& linear_terms() const { return b_; }
  /// Mean linear term over honest clients.
  ParamVector honest_mean_b() const;
  /// bbar / mu.
  ParamVector optimum() const { return honest_mean_b() / mu_; }
  /// (1/G) sum_{i in G} |b_i - bbar|^2, the exact gradient heterogeneity.
  double heterogeneity() const;

 private:
  double mu_;
  std::vector<ParamVector> b_;
  double sigma_;
};

/// Draws n linear terms whose spread (1/n) sum |b_i - bbar|^2 equals zeta^2
/// exactly. bbar is a random direction of norm `bbar_norm`.
QuadraticProblem make_hetero_quadratic(int n, int d, double zeta, double sigma, double mu,
                                       RngStream& rng, double bbar_norm = 1.0);

/// Dense labelled data: one sample per row.
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int classes = 10;

  Eigen::Index size() const { return features.rows(); }
};

/// Gaussian class clusters: class c is centred at a random point of norm
/// `separation`, with unit-variance isotropic noise.
Dataset make_gaussian_classes(int classes, int per_class, int d, double separation, RngStream& rng);

/// Multinomial logistic regression with an affine model per class.
/// Parameters are a row-major (C x (d+1)) matrix flattened to a vector.
class LogRegProblem final : public Problem {
 public:
  /// shards[i] lists the training rows owned by client i; an empty shard means
  /// the client samples from the whole training set (Byzantine clients).
  LogRegProblem(std::shared_ptr<const Dataset> train, std::vector<std::vector<std::size_t>> shards,
                double l2_reg, int batch_size, std::shared_ptr<const Dataset> test = nullptr);

  Eigen::Index dim() const override;
  int num_clients() const override { return static_cast<int>(shards_.size()); }
  double smoothness() const override { return smoothness_; }

  ParamVector stochastic_grad(ClientId i, const ParamVector& x, RngStream& rng) const override;
  ParamVector global_grad(const ParamVector& x) const override;
  double global_loss(const ParamVector& x) const override;
  std::optional<double> accuracy(const ParamVector& x) const override;

  bool has_labels() const override { return true; }
  ParamVector flipped_label_grad(ClientId i, const ParamVector& x, RngStream& rng) const override;

  /// Average loss and gradient over the given rows, optionally flipping labels.
  double loss_and_grad(const ParamVector& x, const std::vector<std::size_t>& rows, bool flip,
                       ParamVector* grad) const;

  int classes() const { return train_->classes; }

 private:
  void on_honest_changed() override;
  std::vector<std::size_t> draw_batch(ClientId i, RngStream& rng) const;
  const std::vector<std::size_t>& honest_rows() const { return honest_rows_; }

  std::shared_ptr<const Dataset> train_;
  std::shared_ptr<const Dataset> test_;
  std::vector<std::vector<std::size_t>> shards_;
  std::vector<std::size_t> honest_rows_;
  double l2_reg_;
  int batch_size_;
  double smoothness_;
};

/// Non-IID split: stable sort by label, cut into G contiguous shards (the last
/// absorbs the remainder), then shuffle each shard with `rng`.
std::vector<std::vector<std::size_t>> partition_noniid(const std::vector<int>& labels, int shards,
                                                       RngStream& rng);

/// IID split: shuffle all indices, then cut into equal contiguous shards.
std::vector<std::vector<std::size_t>> partition_iid(std::size_t count, int shards, RngStream& rng);

}  // namespace dbyz
