#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "motionmix/dataset.hpp"
#include "motionmix/rng.hpp"

namespace motionmix {

struct ExtractorConfig {
  int hidden_width = 32;
  int max_epochs = 200;
  int batch_size = 64;
  double learning_rate = 3e-3;
  double holdout_fraction = 0.2;
  double target_accuracy = 0.95;
};

// One-hidden-layer classifier; the tanh hidden layer is the feature map.
struct ExtractorParams {
  int input_size = 0;
  int feature_dim = 0;
  int num_classes = 0;
  std::vector<double> input_mean;  // per flattened coordinate
  std::vector<double> input_std;
  Eigen::MatrixXd w1;  // F x P
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // K x F
  Eigen::VectorXd b2;
  bool trained = false;
  double holdout_accuracy = 0.0;
};

// Softmax cross-entropy with Adam; throws when held-out accuracy stays below
// the target after max_epochs.
ExtractorParams train_feature_extractor(const Corpus& clean_labeled, std::uint64_t seed,
                                        const ExtractorConfig& cfg = {});

// Rows are motions.
Eigen::MatrixXd extract_features(const ExtractorParams& ex, std::span<const MotionSequence> motions);
Eigen::MatrixXd classify_logits(const ExtractorParams& ex, std::span<const MotionSequence> motions);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2)
double frechet_distance(const Eigen::MatrixXd& feats_a, const Eigen::MatrixXd& feats_b);

double accuracy(const ExtractorParams& ex, std::span<const MotionSequence> motions,
                std::span<const int> labels);
double accuracy_from_logits(const Eigen::MatrixXd& logits, std::span<const int> labels);

// Mean distance over num_pairs disjoint random pairs of rows.
double diversity(const Eigen::MatrixXd& feats, int num_pairs, Rng& rng);

double multimodality(const ExtractorParams& ex,
                     const std::vector<std::vector<MotionSequence>>& per_condition_sets,
                     int pairs_per_condition, Rng& rng);
double multimodality_from_features(const std::vector<Eigen::MatrixXd>& per_condition_feats,
                                   int pairs_per_condition, Rng& rng);

struct MetricsReport {
  double fid = 0.0;
  double accuracy = 0.0;
  double diversity = 0.0;
  double multimodality = 0.0;
  int num_generated = 0;
  int num_real = 0;
  std::uint64_t seed = 0;
};

struct EvalSettings {
  int diversity_pairs = 300;
  int multimodality_pairs = 20;
};

// `generated` must be grouped by label; labels index the per-condition sets.
MetricsReport evaluate_generated(const ExtractorParams& ex, const Eigen::MatrixXd& real_features,
                                 std::span<const MotionSequence> generated,
                                 std::span<const int> labels, std::uint64_t seed,
                                 const EvalSettings& settings = {});

std::string metrics_csv_header();
std::string to_csv_row(const MetricsReport& r);
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

}  // namespace motionmix
