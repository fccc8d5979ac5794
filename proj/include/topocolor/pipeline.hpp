#pragma once

// End-to-end orchestration: configuration, training of the TOPS and TOPS2
// classifiers, scene recognition and evaluation reports.

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "topocolor/classifier.hpp"
#include "topocolor/color_network.hpp"
#include "topocolor/descriptor.hpp"
#include "topocolor/image.hpp"
#include "topocolor/pointcloud.hpp"
#include "topocolor/synth.hpp"

namespace topocolor::pipeline {

struct PreprocessConfig {
  bool enabled = true;
  double voxel = 0.0125;  // in scaled units
  std::size_t outlier_k = 20;
  double outlier_std_ratio = 2.0;

  friend bool operator==(const PreprocessConfig&, const PreprocessConfig&) = default;
};

struct SynthConfig {
  double polar_step = std::numbers::pi / 6.0;
  double azimuth_step = std::numbers::pi / 6.0;
  synth::SamplingOptions sampling;
  std::vector<synth::ShapeSpec> shapes = synth::desk_suite();
};

struct PipelineConfig {
  static constexpr int kVersion = 1;

  double sigma_s = 2.5;
  DescriptorParams descriptor;
  PreprocessConfig preprocess;
  bool mirror = true;
  bool mirror_double = false;
  std::string network_path = "color_network.txt";
  ColorNetworkParams network;
  TrainConfig train;
  std::vector<std::size_t> hidden = kDefaultHidden;
  CameraIntrinsics camera;
  SynthConfig synth;

  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::istream& in);
void save_config(const PipelineConfig& config, std::ostream& out);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

/// Scale, optional voxel/outlier cleanup, view normalization and, when
/// occluded, the pi turn about z.
ColoredPointCloud prepare_cloud(const ColoredPointCloud& raw, const PipelineConfig& config, bool occluded);

/// Ordered class table: labels in order of first appearance.
std::vector<std::string> class_table(const std::vector<synth::LabeledCloud>& clouds);

struct DescriptorMatrix {
  Eigen::MatrixXd tops;   // one row per sample
  Eigen::MatrixXd tops2;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> source;  // index of the originating cloud
};

/// Descriptors of every cloud (and its mirrors when `augment`), computed in
/// parallel and stored in input order. DescriptorOverflow names the sample.
DescriptorMatrix describe(const std::vector<synth::LabeledCloud>& clouds, const std::vector<std::string>& classes,
                          const ColorNetwork& network, const PipelineConfig& config, bool augment, unsigned jobs);

struct TrainedModels {
  MlpModel tops;
  MlpModel tops2;
  TrainReport tops_report;
  TrainReport tops2_report;
  std::size_t samples = 0;
};

TrainedModels train_models(const std::vector<synth::LabeledCloud>& clouds, const ColorNetwork& network,
                           const PipelineConfig& config, unsigned jobs);

void save_models(const TrainedModels& models, const std::filesystem::path& dir);
struct ModelPair {
  MlpModel tops;
  MlpModel tops2;
};
ModelPair load_models(const std::filesystem::path& dir);

struct ObjectResult {
  std::uint16_t instance_id = 0;
  std::string label;
  double confidence = 0.0;
  bool occluded = false;
  ModelId winner = ModelId::m2;
  std::size_t points = 0;
};

struct Warning {
  std::uint16_t instance_id = 0;
  std::string message;
};

struct RecognitionResult {
  std::vector<ObjectResult> objects;  // by instance id
  std::vector<Warning> warnings;
};

/// Classification of one prepared cloud with both models.
ObjectResult classify(const ColoredPointCloud& prepared, const ModelPair& models, const ColorNetwork& network,
                      const PipelineConfig& config);

RecognitionResult recognize_scene(const RgbImage& rgb, const DepthImage& depth, const LabelImage& labels,
                                  const ModelPair& models, const ColorNetwork& network,
                                  const PipelineConfig& config, unsigned jobs);

void write_recognition_report(std::ostream& summary, std::ostream& csv, const RecognitionResult& result);

struct SamplePrediction {
  std::size_t index = 0;
  std::string truth;
  std::string fused;
  std::string tops;
  std::string tops2;
  double confidence = 0.0;
  ModelId winner = ModelId::m2;
};

struct ClassAccuracy {
  std::string label;
  std::size_t total = 0;
  std::size_t fused = 0;
  std::size_t tops = 0;
  std::size_t tops2 = 0;
};

struct EvaluationReport {
  std::vector<SamplePrediction> predictions;
  std::vector<ClassAccuracy> per_class;
  double fused_accuracy = 0.0;
  double tops_accuracy = 0.0;
  double tops2_accuracy = 0.0;
  std::vector<double> fold_accuracies;  // five-fold mode only
  double fold_mean = 0.0;
  double fold_std = 0.0;
};

/// Accuracy of the models on a labeled set. Occlusion state comes from each
/// cloud's `occluded` flag.
EvaluationReport evaluate(const std::vector<synth::LabeledCloud>& clouds, const ModelPair& models,
                          const ColorNetwork& network, const PipelineConfig& config, unsigned jobs);

/// Stratified, seeded k-fold cross-validation: retrains per fold.
EvaluationReport cross_validate(const std::vector<synth::LabeledCloud>& clouds, const ColorNetwork& network,
                                const PipelineConfig& config, std::size_t folds, unsigned jobs);

void write_evaluation_report(std::ostream& summary, std::ostream& csv, const EvaluationReport& report);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace topocolor::pipeline
