#include "motionmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "motionmix/error.hpp"
#include "motionmix/model.hpp"

namespace motionmix {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd stack_inputs(const ExtractorParams& ex, std::span<const MotionSequence> motions) {
  MatrixXd x(ex.input_size, static_cast<Eigen::Index>(motions.size()));
  for (std::size_t j = 0; j < motions.size(); ++j) {
    auto v = motions[j].values();
    require(static_cast<int>(v.size()) == ex.input_size, "extractor input size mismatch");
    for (int i = 0; i < ex.input_size; ++i) x(i, j) = (v[i] - ex.input_mean[i]) / ex.input_std[i];
  }
  return x;
}

MatrixXd hidden(const ExtractorParams& ex, const MatrixXd& x) {
  MatrixXd z = ex.w1 * x;
  z.colwise() += ex.b1;
  return z.array().tanh().matrix();
}

// Flat parameter vector <-> matrices, for Adam.
std::vector<double> pack(const ExtractorParams& ex) {
  std::vector<double> v;
  v.reserve(ex.w1.size() + ex.b1.size() + ex.w2.size() + ex.b2.size());
  v.insert(v.end(), ex.w1.data(), ex.w1.data() + ex.w1.size());
  v.insert(v.end(), ex.b1.data(), ex.b1.data() + ex.b1.size());
  v.insert(v.end(), ex.w2.data(), ex.w2.data() + ex.w2.size());
  v.insert(v.end(), ex.b2.data(), ex.b2.data() + ex.b2.size());
  return v;
}

void unpack(const std::vector<double>& v, ExtractorParams& ex) {
  const double* p = v.data();
  std::copy_n(p, ex.w1.size(), ex.w1.data());
  p += ex.w1.size();
  std::copy_n(p, ex.b1.size(), ex.b1.data());
  p += ex.b1.size();
  std::copy_n(p, ex.w2.size(), ex.w2.data());
  p += ex.w2.size();
  std::copy_n(p, ex.b2.size(), ex.b2.data());
}

MatrixXd covariance(const MatrixXd& feats, const VectorXd& mean) {
  const MatrixXd centered = feats.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(feats.rows() - 1);
}

MatrixXd sym_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
  const VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

ExtractorParams train_feature_extractor(const Corpus& clean_labeled, std::uint64_t seed,
                                        const ExtractorConfig& cfg) {
  require(!clean_labeled.empty(), "extractor needs a non-empty corpus");
  require(cfg.hidden_width >= 1 && cfg.batch_size >= 1, "invalid extractor config");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < clean_labeled.size(); ++i) {
    require(clean_labeled[i].label >= 0, "extractor labels must be non-negative");
    by_class[clean_labeled[i].label].push_back(i);
  }
  require(by_class.size() >= 2, "extractor needs at least 2 classes");
  for (const auto& [label, idx] : by_class)
    require(idx.size() >= 20, fmt::format("class {} has fewer than 20 examples", label));

  ExtractorParams ex;
  ex.input_size = static_cast<int>(clean_labeled.front().motion.size());
  ex.feature_dim = cfg.hidden_width;
  ex.num_classes = by_class.rbegin()->first + 1;
  const int P = ex.input_size;
  const int F = ex.feature_dim;
  const int K = ex.num_classes;

  Rng rng = make_rng(seed, streams::kExtractor);
  std::vector<std::size_t> train_idx, hold_idx;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_hold = static_cast<std::size_t>(std::lround(cfg.holdout_fraction * idx.size()));
    hold_idx.insert(hold_idx.end(), idx.begin(), idx.begin() + n_hold);
    train_idx.insert(train_idx.end(), idx.begin() + n_hold, idx.end());
  }
  require(!hold_idx.empty(), "extractor holdout split is empty");

  // Input standardization per flattened coordinate, fitted on the train split.
  ex.input_mean.assign(P, 0.0);
  ex.input_std.assign(P, 0.0);
  for (std::size_t i : train_idx) {
    auto v = clean_labeled[i].motion.values();
    require(static_cast<int>(v.size()) == P, "extractor corpus motions differ in size");
    for (int k = 0; k < P; ++k) ex.input_mean[k] += v[k];
  }
  for (double& m : ex.input_mean) m /= static_cast<double>(train_idx.size());
  for (std::size_t i : train_idx) {
    auto v = clean_labeled[i].motion.values();
    for (int k = 0; k < P; ++k) ex.input_std[k] += (v[k] - ex.input_mean[k]) * (v[k] - ex.input_mean[k]);
  }
  for (double& s : ex.input_std) {
    s = std::sqrt(s / static_cast<double>(train_idx.size()));
    if (s < 1e-8) s = 1.0;
  }

  auto init = [&rng](MatrixXd& m, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  ex.w1.resize(F, P);
  ex.w2.resize(K, F);
  init(ex.w1, 1.0 / std::sqrt(static_cast<double>(P)));
  init(ex.w2, 1.0 / std::sqrt(static_cast<double>(F)));
  ex.b1 = VectorXd::Zero(F);
  ex.b2 = VectorXd::Zero(K);

  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<MotionSequence> m;
    std::vector<int> y;
    for (std::size_t i : idx) {
      m.push_back(clean_labeled[i].motion);
      y.push_back(clean_labeled[i].label);
    }
    return std::pair{m, y};
  };
  const auto [train_m, train_y] = gather(train_idx);
  const auto [hold_m, hold_y] = gather(hold_idx);
  const MatrixXd x_train = stack_inputs(ex, train_m);
  const MatrixXd x_hold = stack_inputs(ex, hold_m);

  std::vector<double> flat = pack(ex);
  OptimizerState opt = OptimizerState::for_size(flat.size(), {cfg.learning_rate, 0.9, 0.999, 1e-8});
  std::vector<double> grads(flat.size());
  std::vector<Eigen::Index> order(train_idx.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  constexpr int kMinEpochs = 40;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto len = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.batch_size, order.size() - start));
      MatrixXd xb(P, len);
      MatrixXd onehot = MatrixXd::Zero(K, len);
      for (Eigen::Index j = 0; j < len; ++j) {
        xb.col(j) = x_train.col(order[start + j]);
        onehot(train_y[order[start + j]], j) = 1.0;
      }
      const MatrixXd h = hidden(ex, xb);
      MatrixXd logits = ex.w2 * h;
      logits.colwise() += ex.b2;
      MatrixXd prob = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
      prob.array().rowwise() /= prob.colwise().sum().array();
      const MatrixXd dlogits = (prob - onehot) / static_cast<double>(len);
      const MatrixXd dw2 = dlogits * h.transpose();
      const VectorXd db2 = dlogits.rowwise().sum();
      const MatrixXd dz = ((ex.w2.transpose() * dlogits).array() * (1.0 - h.array().square())).matrix();
      const MatrixXd dw1 = dz * xb.transpose();
      const VectorXd db1 = dz.rowwise().sum();

      double* g = grads.data();
      g = std::copy_n(dw1.data(), dw1.size(), g);
      g = std::copy_n(db1.data(), db1.size(), g);
      g = std::copy_n(dw2.data(), dw2.size(), g);
      std::copy_n(db2.data(), db2.size(), g);
      adam_update(flat, grads, opt);
      unpack(flat, ex);
    }
    if (epoch >= kMinEpochs) {
      MatrixXd logits = ex.w2 * hidden(ex, x_hold);
      logits.colwise() += ex.b2;
      ex.holdout_accuracy = accuracy_from_logits(logits.transpose(), hold_y);
      if (ex.holdout_accuracy >= cfg.target_accuracy) {
        ex.trained = true;
        return ex;
      }
    }
  }
  throw NumericError(fmt::format("feature extractor reached only {:.3f} held-out accuracy (target {:.2f})",
                                 ex.holdout_accuracy, cfg.target_accuracy));
}

Eigen::MatrixXd extract_features(const ExtractorParams& ex, std::span<const MotionSequence> motions) {
  require(ex.trained, "feature extractor is not trained");
  return hidden(ex, stack_inputs(ex, motions)).transpose();
}

Eigen::MatrixXd classify_logits(const ExtractorParams& ex, std::span<const MotionSequence> motions) {
  require(ex.trained, "feature extractor is not trained");
  MatrixXd logits = ex.w2 * hidden(ex, stack_inputs(ex, motions));
  logits.colwise() += ex.b2;
  return logits.transpose();
}

double frechet_distance(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b) {
  require(feats_a.cols() == feats_b.cols() && feats_a.cols() >= 1,
          "frechet_distance: feature dimensions differ");
  require(feats_a.rows() >= 2 && feats_b.rows() >= 2,
          "frechet_distance: each set needs at least 2 samples");
  const Eigen::Index F = feats_a.cols();
  const VectorXd mu_a = feats_a.colwise().mean();
  const VectorXd mu_b = feats_b.colwise().mean();
  MatrixXd cov_a = covariance(feats_a, mu_a);
  MatrixXd cov_b = covariance(feats_b, mu_b);
  if (feats_a.rows() < 4 * F) cov_a += 1e-6 * MatrixXd::Identity(F, F);
  if (feats_b.rows() < 4 * F) cov_b += 1e-6 * MatrixXd::Identity(F, F);

  const MatrixXd root_a = sym_sqrt(cov_a);
  MatrixXd inner = root_a * cov_b * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  const double tr_cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_cross;
}

double accuracy_from_logits(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  require(logits.rows() > 0, "accuracy: empty input");
  require(static_cast<std::size_t>(logits.rows()) == labels.size(), "accuracy: label count mismatch");
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    require(labels[i] >= 0 && labels[i] < logits.cols(), "accuracy: label out of range");
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double accuracy(const ExtractorParams& ex, std::span<const MotionSequence> motions,
                std::span<const int> labels) {
  require(!motions.empty(), "accuracy: empty input");
  return accuracy_from_logits(classify_logits(ex, motions), labels);
}

double diversity(const Eigen::MatrixXd& feats, int num_pairs, Rng& rng) {
  require(num_pairs >= 1, "diversity: num_pairs must be positive");
  require(feats.rows() >= 2 * static_cast<Eigen::Index>(num_pairs),
          fmt::format("diversity: need {} features, have {}", 2 * num_pairs, feats.rows()));
  std::vector<Eigen::Index> perm(feats.rows());
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  double total = 0.0;
  for (int i = 0; i < num_pairs; ++i) total += (feats.row(perm[i]) - feats.row(perm[i + num_pairs])).norm();
  return total / num_pairs;
}

double multimodality_from_features(const std::vector<Eigen::MatrixXd>& per_condition_feats,
                                   int pairs_per_condition, Rng& rng) {
  require(!per_condition_feats.empty(), "multimodality: no conditions");
  double total = 0.0;
  for (const auto& feats : per_condition_feats) total += diversity(feats, pairs_per_condition, rng);
  return total / static_cast<double>(per_condition_feats.size());
}

double multimodality(const ExtractorParams& ex,
                     const std::vector<std::vector<MotionSequence>>& per_condition_sets,
                     int pairs_per_condition, Rng& rng) {
  std::vector<Eigen::MatrixXd> feats;
  feats.reserve(per_condition_sets.size());
  for (const auto& set : per_condition_sets) {
    require(set.size() >= 2 * static_cast<std::size_t>(pairs_per_condition),
            "multimodality: condition set too small");
    feats.push_back(extract_features(ex, set));
  }
  return multimodality_from_features(feats, pairs_per_condition, rng);
}

MetricsReport evaluate_generated(const ExtractorParams& ex, const Eigen::MatrixXd& real_features,
                                 std::span<const MotionSequence> generated,
                                 std::span<const int> labels, std::uint64_t seed,
                                 const EvalSettings& settings) {
  require(generated.size() == labels.size(), "evaluate: label count mismatch");
  require(!generated.empty(), "evaluate: nothing generated");
  const MatrixXd feats = extract_features(ex, generated);
  MetricsReport r;
  r.fid = frechet_distance(real_features, feats);
  r.accuracy = accuracy(ex, generated, labels);
  Rng rng = make_rng(seed, streams::kMetrics);
  r.diversity = diversity(feats, settings.diversity_pairs, rng);

  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  std::vector<MatrixXd> per_condition;
  for (const auto& [label, idx] : groups) {
    MatrixXd m(static_cast<Eigen::Index>(idx.size()), feats.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = feats.row(idx[k]);
    per_condition.push_back(std::move(m));
  }
  r.multimodality = multimodality_from_features(per_condition, settings.multimodality_pairs, rng);
  r.num_generated = static_cast<int>(generated.size());
  r.num_real = static_cast<int>(real_features.rows());
  r.seed = seed;
  return r;
}

std::string metrics_csv_header() {
  return "fid,accuracy,diversity,multimodality,num_generated,num_real,seed";
}

std::string to_csv_row(const MetricsReport& r) {
  return fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{},{},{}", r.fid, r.accuracy, r.diversity,
                     r.multimodality, r.num_generated, r.num_real, r.seed);
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      s += fmt::format("{:<{}}", cell, width[c]);
      if (c + 1 < width.size()) s += "  ";
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

}  // namespace motionmix
