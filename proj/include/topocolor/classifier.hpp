#pragma once

// Fully connected ReLU classifier with softmax output, trained by mini-batch
// Adam on cross-entropy.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace topocolor {

/// Seeded uniform source with a fixed mapping from the engine output, so
/// sequences do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t phase1_epochs = 50;  // epochs run at lr1, the rest at lr2
  double lr1 = 1e-2;
  double lr2 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool standardize = false;  // per-feature z-score fitted on the training set

  double learning_rate(std::size_t epoch) const { return epoch < phase1_epochs ? lr1 : lr2; }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

enum class Activation : std::uint32_t { relu = 1 };

struct MlpModel {
  std::vector<std::size_t> sizes;  // input, hidden..., classes
  std::vector<DenseLayer> layers;
  Activation activation = Activation::relu;
  std::vector<std::string> classes;
  Eigen::VectorXd input_mean;     // applied as (x - mean) .* scale
  Eigen::VectorXd input_scale;
  TrainConfig train_config;

  std::size_t input_dim() const { return sizes.front(); }
  std::size_t n_classes() const { return sizes.back(); }
};

inline const std::vector<std::size_t> kDefaultHidden{512, 256, 128, 64};

/// He-style uniform fan-in initialization, biases zero. Class names default
/// to "0", "1", ...
MlpModel mlp_init(std::size_t input_dim, std::size_t n_classes, std::uint64_t seed,
                  const std::vector<std::size_t>& hidden = kDefaultHidden);
MlpModel mlp_init(std::size_t input_dim, std::vector<std::string> classes, std::uint64_t seed,
                  const std::vector<std::size_t>& hidden = kDefaultHidden);

/// Class probabilities for one input.
Eigen::VectorXd forward(const MlpModel& model, std::span<const double> x);
/// Probabilities for each row of x, one column per sample (classes x samples).
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x);

struct TrainReport {
  std::vector<double> loss;      // mean cross-entropy per epoch
  std::vector<double> accuracy;  // training accuracy per epoch, measured during the epoch
};

/// Rows of x are samples, labels index model.classes.
TrainReport train(MlpModel& model, const Eigen::MatrixXd& x, std::span<const std::size_t> labels,
                  const TrainConfig& config);

double cross_entropy(const MlpModel& model, std::span<const double> x, std::size_t label);

struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

Gradients backprop(const MlpModel& model, std::span<const double> x, std::size_t label);

struct GradientCheckOptions {
  double step = 1e-5;
  std::size_t samples_per_layer = 64;  // parameters checked per layer (all if fewer)
  std::uint64_t seed = 0;
  std::function<void(Gradients&)> tamper;  // applied to the analytic gradient, for mutation tests
};

/// Largest relative difference between backprop and central differences over
/// sampled parameters. Parameters whose perturbation flips a ReLU are skipped.
double gradient_check(const MlpModel& model, std::span<const double> x, std::size_t label,
                      const GradientCheckOptions& options = {});

enum class ModelId : std::uint8_t { m1 = 1, m2 = 2 };

struct FusedPrediction {
  std::size_t label = 0;
  double confidence = 0.0;
  ModelId winner = ModelId::m2;
};

/// Argmax of the vector with the larger maximum; exact ties go to p2.
FusedPrediction fuse_predictions(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2);

void save_model(const MlpModel& model, std::ostream& out);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(std::istream& in);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace topocolor
