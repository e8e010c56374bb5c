#include "dbyz/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dbyz {

// ---------------------------------------------------------------- Problem

ParamVector Problem::flipped_label_grad(ClientId, const ParamVector&, RngStream&) const {
  throw std::invalid_argument("attack unsupported for problem");
}

int Problem::num_honest() const {
  return static_cast<int>(std::count(honest_.begin(), honest_.end(), true));
}

void Problem::set_honest(std::vector<bool> honest) {
  if (static_cast<int>(honest.size()) != num_clients())
    throw std::invalid_argument("honest mask must cover every client");
  if (std::none_of(honest.begin(), honest.end(), [](bool h) { return h; }))
    throw std::invalid_argument("at least one honest client is required");
  honest_ = std::move(honest);
  on_honest_changed();
}

// -------------------------------------------------------------- Quadratic

QuadraticProblem::QuadraticProblem(double mu, std::vector<ParamVector> b, double sigma)
    : mu_(mu), b_(std::move(b)), sigma_(sigma) {
  if (!(mu_ > 0)) throw std::invalid_argument("mu must be > 0");
  if (!(sigma_ >= 0)) throw std::invalid_argument("sigma must be >= 0");
  if (b_.empty()) throw std::invalid_argument("quadratic needs at least one client");
  check_same_dim<double>(b_);
  honest_.assign(b_.size(), true);
}

ParamVector QuadraticProblem::local_grad(ClientId i, const ParamVector& x) const {
  return mu_ * x - b_.at(i);
}

ParamVector QuadraticProblem::stochastic_grad(ClientId i, const ParamVector& x, RngStream& rng) const {
  ParamVector g = local_grad(i, x);
  if (sigma_ > 0) {
    const double scale = sigma_ / std::sqrt(static_cast<double>(x.size()));
    for (Eigen::Index k = 0; k < g.size(); ++k) g[k] += scale * rng.normal();
  }
  return g;
}

ParamVector QuadraticProblem::honest_mean_b() const {
  ParamVector acc = ParamVector::Zero(dim());
  int count = 0;
  for (std::size_t i = 0; i < b_.size(); ++i) {
    if (!honest_[i]) continue;
    acc += b_[i];
    ++count;
  }
  return acc / static_cast<double>(count);
}

ParamVector QuadraticProblem::global_grad(const ParamVector& x) const {
  return mu_ * x - honest_mean_b();
}

double QuadraticProblem::global_loss(const ParamVector& x) const {
  return 0.5 * mu_ * x.squaredNorm() - honest_mean_b().dot(x);
}

double QuadraticProblem::heterogeneity() const {
  const ParamVector bbar = honest_mean_b();
  double total = 0;
  int count = 0;
  for (std::size_t i = 0; i < b_.size(); ++i) {
    if (!honest_[i]) continue;
    total += (b_[i] - bbar).squaredNorm();
    ++count;
  }
  return total / count;
}

QuadraticProblem make_hetero_quadratic(int n, int d, double zeta, double sigma, double mu,
                                       RngStream& rng, double bbar_norm) {
  if (n < 2) throw std::invalid_argument("make_hetero_quadratic requires n >= 2");
  if (d < 1) throw std::invalid_argument("make_hetero_quadratic requires d >= 1");
  if (!(zeta >= 0)) throw std::invalid_argument("zeta must be >= 0");

  auto random_direction = [&] {
    ParamVector u(d);
    do {
      for (int k = 0; k < d; ++k) u[k] = rng.normal();
    } while (u.norm() == 0.0);
    return ParamVector(u / u.norm());
  };

  const ParamVector bbar = bbar_norm * random_direction();

  std::vector<ParamVector> centred;
  double spread = 0;
  // Unit directions can coincide (e.g. d = 1), leaving nothing after centring.
  while (spread == 0.0) {
    centred.clear();
    for (int i = 0; i < n; ++i) centred.push_back(random_direction());
    const ParamVector m = mean(centred);
    spread = 0;
    for (auto& c : centred) {
      c -= m;
      spread += c.squaredNorm();
    }
    spread /= n;
  }

  const double scale = zeta / std::sqrt(spread);
  std::vector<ParamVector> b;
  b.reserve(n);
  for (const auto& c : centred) b.push_back(bbar + scale * c);
  return QuadraticProblem(mu, std::move(b), sigma);
}

// ----------------------------------------------------------------- LogReg

Dataset make_gaussian_classes(int classes, int per_class, int d, double separation, RngStream& rng) {
  if (classes < 2 || per_class < 1 || d < 1) throw std::invalid_argument("bad synthetic dataset shape");
  Dataset ds;
  ds.classes = classes;
  ds.features.resize(static_cast<Eigen::Index>(classes) * per_class, d);
  ds.labels.resize(static_cast<std::size_t>(classes) * per_class);
  Eigen::MatrixXd centres(classes, d);
  for (int c = 0; c < classes; ++c) {
    for (int k = 0; k < d; ++k) centres(c, k) = rng.normal();
    centres.row(c) *= separation / centres.row(c).norm();
  }
  Eigen::Index row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (int k = 0; k < d; ++k) ds.features(row, k) = centres(c, k) + rng.normal();
      ds.labels[row] = c;
    }
  }
  return ds;
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

LogRegProblem::LogRegProblem(std::shared_ptr<const Dataset> train,
                             std::vector<std::vector<std::size_t>> shards, double l2_reg,
                             int batch_size, std::shared_ptr<const Dataset> test)
    : train_(std::move(train)),
      test_(std::move(test)),
      shards_(std::move(shards)),
      l2_reg_(l2_reg),
      batch_size_(batch_size) {
  if (!train_ || train_->size() == 0) throw std::invalid_argument("logreg needs training data");
  if (shards_.empty()) throw std::invalid_argument("logreg needs at least one client");
  if (batch_size_ < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(l2_reg_ >= 0)) throw std::invalid_argument("l2_reg must be >= 0");
  if (static_cast<std::size_t>(train_->features.rows()) != train_->labels.size())
    throw std::invalid_argument("feature/label count mismatch");
  for (int y : train_->labels)
    if (y < 0 || y >= train_->classes) throw std::invalid_argument("label out of range");

  // Softmax cross-entropy has Hessian norm at most |a|^2 / 2 per sample.
  const double max_sq = train_->features.rowwise().squaredNorm().maxCoeff() + 1.0;
  smoothness_ = 0.5 * max_sq + l2_reg_;

  std::vector<bool> honest(shards_.size());
  for (std::size_t i = 0; i < shards_.size(); ++i) honest[i] = !shards_[i].empty();
  if (std::none_of(honest.begin(), honest.end(), [](bool h) { return h; }))
    throw std::invalid_argument("at least one client must own data");
  honest_ = honest;
  on_honest_changed();
}

void LogRegProblem::on_honest_changed() {
  honest_rows_.clear();
  for (std::size_t i = 0; i < shards_.size(); ++i)
    if (honest_[i]) honest_rows_.insert(honest_rows_.end(), shards_[i].begin(), shards_[i].end());
  if (honest_rows_.empty()) {
    honest_rows_.resize(train_->size());
    std::iota(honest_rows_.begin(), honest_rows_.end(), std::size_t{0});
  }
}

Eigen::Index LogRegProblem::dim() const {
  return static_cast<Eigen::Index>(train_->classes) * (train_->features.cols() + 1);
}

double LogRegProblem::loss_and_grad(const ParamVector& x, const std::vector<std::size_t>& rows,
                                    bool flip, ParamVector* grad) const {
  const int classes = train_->classes;
  const Eigen::Index d = train_->features.cols();
  Eigen::Map<const RowMajor> w(x.data(), classes, d + 1);

  Eigen::MatrixXd feats(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) feats.row(r) = train_->features.row(rows[r]);

  Eigen::MatrixXd logits = feats * w.leftCols(d).transpose();
  logits.rowwise() += w.col(d).transpose();

  RowMajor gw;
  if (grad) gw = RowMajor::Zero(classes, d + 1);
  double loss = 0;
  Eigen::VectorXd prob(classes);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int y = train_->labels[rows[r]];
    if (flip) y = classes - 1 - y;
    const double top = logits.row(r).maxCoeff();
    prob = (logits.row(r).array() - top).exp().transpose();
    const double z = prob.sum();
    loss += std::log(z) + top - logits(r, y);
    if (grad) {
      prob /= z;
      prob[y] -= 1.0;
      gw.leftCols(d).noalias() += prob * feats.row(r);
      gw.col(d) += prob;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  loss = loss * inv + 0.5 * l2_reg_ * x.squaredNorm();
  if (grad) {
    *grad = Eigen::Map<const ParamVector>(gw.data(), x.size()) * inv + l2_reg_ * x;
  }
  return loss;
}

std::vector<std::size_t> LogRegProblem::draw_batch(ClientId i, RngStream& rng) const {
  const auto& shard = shards_.at(i);
  const std::size_t pool = shard.empty() ? static_cast<std::size_t>(train_->size()) : shard.size();
  std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
  std::vector<std::size_t> rows(batch_size_);
  for (auto& r : rows) {
    const std::size_t k = pick(rng);
    r = shard.empty() ? k : shard[k];
  }
  return rows;
}

ParamVector LogRegProblem::stochastic_grad(ClientId i, const ParamVector& x, RngStream& rng) const {
  ParamVector g;
  loss_and_grad(x, draw_batch(i, rng), false, &g);
  return g;
}

ParamVector LogRegProblem::flipped_label_grad(ClientId i, const ParamVector& x, RngStream& rng) const {
  ParamVector g;
  loss_and_grad(x, draw_batch(i, rng), true, &g);
  return g;
}

ParamVector LogRegProblem::global_grad(const ParamVector& x) const {
  ParamVector g;
  loss_and_grad(x, honest_rows(), false, &g);
  return g;
}

double LogRegProblem::global_loss(const ParamVector& x) const {
  return loss_and_grad(x, honest_rows(), false, nullptr);
}

std::optional<double> LogRegProblem::accuracy(const ParamVector& x) const {
  const Dataset& eval = test_ ? *test_ : *train_;
  const int classes = eval.classes;
  const Eigen::Index d = eval.features.cols();
  Eigen::Map<const RowMajor> w(x.data(), classes, d + 1);
  Eigen::MatrixXd logits = eval.features * w.leftCols(d).transpose();
  logits.rowwise() += w.col(d).transpose();
  std::size_t correct = 0;
  auto score = [&](Eigen::Index r) {
    Eigen::Index arg;
    logits.row(r).maxCoeff(&arg);
    if (static_cast<int>(arg) == eval.labels[r]) ++correct;
  };
  if (test_) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) score(r);
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
  }
  for (std::size_t r : honest_rows()) score(static_cast<Eigen::Index>(r));
  return static_cast<double>(correct) / static_cast<double>(honest_rows().size());
}

// ------------------------------------------------------------- partitions

std::vector<std::vector<std::size_t>> partition_noniid(const std::vector<int>& labels, int shards,
                                                       RngStream& rng) {
  if (shards < 1) throw std::invalid_argument("shard count must be >= 1");
  if (static_cast<std::size_t>(shards) > labels.size())
    throw std::invalid_argument("more shards than samples");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  const std::size_t base = labels.size() / shards;
  std::vector<std::vector<std::size_t>> out(shards);
  for (int s = 0; s < shards; ++s) {
    const auto begin = order.begin() + static_cast<std::ptrdiff_t>(s * base);
    const auto end = (s == shards - 1) ? order.end() : begin + static_cast<std::ptrdiff_t>(base);
    out[s].assign(begin, end);
    std::shuffle(out[s].begin(), out[s].end(), rng);
  }
  return out;
}

std::vector<std::vector<std::size_t>> partition_iid(std::size_t count, int shards, RngStream& rng) {
  if (shards < 1 || static_cast<std::size_t>(shards) > count)
    throw std::invalid_argument("bad shard count");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t base = count / shards;
  std::vector<std::vector<std::size_t>> out(shards);
  for (int s = 0; s < shards; ++s) {
    const auto begin = order.begin() + static_cast<std::ptrdiff_t>(s * base);
    const auto end = (s == shards - 1) ? order.end() : begin + static_cast<std::ptrdiff_t>(base);
    out[s].assign(begin, end);
  }
  return out;
}

}  // namespace dbyz
