#include "topocolor/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "shape_json.hpp"
#include "topocolor/error.hpp"

namespace topocolor::pipeline {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

// Reads keys from a JSON object and rejects keys nobody asked for, so typos in
// config files surface as errors instead of silently using defaults.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw DataError("config: '" + name_ + "' must be an object");
  }

  template <class T>
  void read(const char* key, T& value) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      value = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw DataError("config: bad value for " + name_ + "." + key + ": " + e.what());
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, name_ + "." + key);
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw DataError("config: unknown key " + name_ + "." + key);
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

void PipelineConfig::validate() const {
  const auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("config: " + what);
  };
  need(sigma_s > 0.0, "sigma_s must be positive");
  need(descriptor.sigma1 > 0.0 && descriptor.sigma2 > 0.0, "sigma1 and sigma2 must be positive");
  need(descriptor.max_slices >= 1 && descriptor.n_s_max >= 1, "max_slices and n_s_max must be >= 1");
  need(descriptor.image_height >= 1 && descriptor.image_width >= 1, "image grid must be at least 1x1");
  need(!preprocess.enabled || preprocess.voxel > 0.0, "voxel size must be positive");
  need(!preprocess.enabled || preprocess.outlier_k >= 1, "outlier_k must be >= 1");
  need(train.epochs >= 1 && train.batch_size >= 1, "epochs and batch_size must be >= 1");
  need(train.lr1 > 0.0 && train.lr2 > 0.0, "learning rates must be positive");
  need(camera.fx > 0.0 && camera.fy > 0.0 && camera.depth_scale > 0.0, "invalid camera intrinsics");
  need(network.intervals[0] >= 1 && network.intervals[1] >= 1, "network intervals must be >= 1");
  need(network.grid_step >= 1, "network grid_step must be >= 1");
  for (auto h : hidden) need(h >= 1, "hidden widths must be >= 1");
}

PipelineConfig parse_config(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  Section root(j, "config");
  std::string format = "topocolor-config";
  int version = PipelineConfig::kVersion;
  root.read("format", format);
  root.read("version", version);
  if (format != "topocolor-config") throw DataError("config: unexpected format '" + format + "'");
  if (version != PipelineConfig::kVersion)
    throw VersionMismatch("config version " + std::to_string(version) + ", expected " +
                          std::to_string(PipelineConfig::kVersion));
  root.read("sigma_s", c.sigma_s);
  {
    auto d = root.sub("descriptor");
    auto& p = c.descriptor;
    d.read("sigma1", p.sigma1);
    d.read("sigma2", p.sigma2);
    d.read("alpha", p.alpha);
    d.read("max_slices", p.max_slices);
    d.read("n_s_max", p.n_s_max);
    d.read("image_height", p.image_height);
    d.read("image_width", p.image_width);
    d.read("filtration_radius", p.filtration_radius);
    d.read("kernel_sigma", p.kernel_sigma);
    d.read("image_range", p.image_range);
    d.finish();
  }
  {
    auto p = root.sub("preprocess");
    p.read("enabled", c.preprocess.enabled);
    p.read("voxel", c.preprocess.voxel);
    p.read("outlier_k", c.preprocess.outlier_k);
    p.read("outlier_std_ratio", c.preprocess.outlier_std_ratio);
    p.finish();
  }
  {
    auto m = root.sub("mirror");
    m.read("enabled", c.mirror);
    m.read("include_double", c.mirror_double);
    m.finish();
  }
  {
    auto n = root.sub("network");
    auto& p = c.network;
    n.read("path", c.network_path);
    n.read("xi", p.xi);
    n.read("intervals", p.intervals);
    n.read("gains", p.gains);
    n.read("eps", p.eps);
    n.read("min_pts", p.min_pts);
    n.read("count_self", p.count_self);
    n.read("merge_threshold", p.merge_threshold);
    n.read("grid_step", p.grid_step);
    n.finish();
  }
  {
    auto t = root.sub("train");
    auto& p = c.train;
    t.read("epochs", p.epochs);
    t.read("phase1_epochs", p.phase1_epochs);
    t.read("lr1", p.lr1);
    t.read("lr2", p.lr2);
    t.read("beta1", p.beta1);
    t.read("beta2", p.beta2);
    t.read("adam_eps", p.adam_eps);
    t.read("batch_size", p.batch_size);
    t.read("seed", p.seed);
    t.read("standardize", p.standardize);
    t.read("hidden", c.hidden);
    t.finish();
  }
  {
    auto k = root.sub("camera");
    k.read("fx", c.camera.fx);
    k.read("fy", c.camera.fy);
    k.read("cx", c.camera.cx);
    k.read("cy", c.camera.cy);
    k.read("depth_scale", c.camera.depth_scale);
    k.finish();
  }
  {
    auto s = root.sub("synth");
    auto& p = c.synth;
    s.read("polar_step", p.polar_step);
    s.read("azimuth_step", p.azimuth_step);
    s.read("spacing", p.sampling.spacing);
    s.read("jitter", p.sampling.jitter);
    s.read("seed", p.sampling.seed);
    s.read("depth_quantum", p.sampling.depth_quantum);
    s.read("camera_radius", p.sampling.camera_radius);
    if (s.has("shapes")) {
      p.shapes.clear();
      for (const auto& shape : s.at("shapes")) p.shapes.push_back(synth::shape_from_json(shape));
    }
    s.finish();
  }
  root.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  return parse_config(in);
}

void save_config(const PipelineConfig& c, std::ostream& out) {
  json shapes = json::array();
  for (const auto& s : c.synth.shapes) shapes.push_back(synth::shape_to_json(s));
  const auto& d = c.descriptor;
  const auto& n = c.network;
  const auto& t = c.train;
  const json j = {
      {"format", "topocolor-config"},
      {"version", PipelineConfig::kVersion},
      {"sigma_s", c.sigma_s},
      {"descriptor",
       {{"sigma1", d.sigma1},
        {"sigma2", d.sigma2},
        {"alpha", d.alpha},
        {"max_slices", d.max_slices},
        {"n_s_max", d.n_s_max},
        {"image_height", d.image_height},
        {"image_width", d.image_width},
        {"filtration_radius", d.filtration_radius},
        {"kernel_sigma", d.kernel_sigma},
        {"image_range", d.image_range}}},
      {"preprocess",
       {{"enabled", c.preprocess.enabled},
        {"voxel", c.preprocess.voxel},
        {"outlier_k", c.preprocess.outlier_k},
        {"outlier_std_ratio", c.preprocess.outlier_std_ratio}}},
      {"mirror", {{"enabled", c.mirror}, {"include_double", c.mirror_double}}},
      {"network",
       {{"path", c.network_path},
        {"xi", n.xi},
        {"intervals", n.intervals},
        {"gains", n.gains},
        {"eps", n.eps},
        {"min_pts", n.min_pts},
        {"count_self", n.count_self},
        {"merge_threshold", n.merge_threshold},
        {"grid_step", n.grid_step}}},
      {"train",
       {{"epochs", t.epochs},
        {"phase1_epochs", t.phase1_epochs},
        {"lr1", t.lr1},
        {"lr2", t.lr2},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"adam_eps", t.adam_eps},
        {"batch_size", t.batch_size},
        {"seed", t.seed},
        {"standardize", t.standardize},
        {"hidden", c.hidden}}},
      {"camera",
       {{"fx", c.camera.fx},
        {"fy", c.camera.fy},
        {"cx", c.camera.cx},
        {"cy", c.camera.cy},
        {"depth_scale", c.camera.depth_scale}}},
      {"synth",
       {{"polar_step", c.synth.polar_step},
        {"azimuth_step", c.synth.azimuth_step},
        {"spacing", c.synth.sampling.spacing},
        {"jitter", c.synth.sampling.jitter},
        {"seed", c.synth.sampling.seed},
        {"depth_quantum", c.synth.sampling.depth_quantum},
        {"camera_radius", c.synth.sampling.camera_radius},
        {"shapes", shapes}}}};
  out << j.dump(2) << '\n';
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  save_config(config, out);
}

// ---------------------------------------------------------------------------
// Parallel helper

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Training

ColoredPointCloud prepare_cloud(const ColoredPointCloud& raw, const PipelineConfig& config, bool occluded) {
  if (raw.empty()) throw DataError("empty point cloud");
  auto c = scale(raw, config.sigma_s);
  if (config.preprocess.enabled) {
    c = voxel_downsample(c, config.preprocess.voxel);
    c = remove_outliers(c, config.preprocess.outlier_k, config.preprocess.outlier_std_ratio);
  }
  if (c.empty()) throw DataError("no points left after preprocessing");
  return reorient_if_occluded(view_normalize(c).cloud, occluded);
}

std::vector<std::string> class_table(const std::vector<synth::LabeledCloud>& clouds) {
  std::vector<std::string> out;
  for (const auto& c : clouds)
    if (std::find(out.begin(), out.end(), c.label) == out.end()) out.push_back(c.label);
  return out;
}

namespace {

std::size_t class_index(const std::vector<std::string>& classes, const std::string& label) {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) throw DataError("label '" + label + "' is not in the model's class table");
  return static_cast<std::size_t>(it - classes.begin());
}

std::string describe_sample(std::size_t i, const synth::LabeledCloud& c) {
  std::ostringstream s;
  s << "sample " << i << " (" << c.label << ", polar " << c.polar << ", azimuth " << c.azimuth << ")";
  return s.str();
}

TrainedModels train_with_classes(const std::vector<synth::LabeledCloud>& clouds,
                                 const std::vector<std::string>& classes, const ColorNetwork& network,
                                 const PipelineConfig& config, unsigned jobs) {
  if (clouds.empty()) throw DataError("train: empty dataset");
  const auto data = describe(clouds, classes, network, config, config.mirror, jobs);
  TrainedModels out;
  out.samples = data.labels.size();
  out.tops = mlp_init(static_cast<std::size_t>(data.tops.cols()), classes, config.train.seed, config.hidden);
  out.tops_report = train(out.tops, data.tops, data.labels, config.train);
  out.tops2 = mlp_init(static_cast<std::size_t>(data.tops2.cols()), classes, config.train.seed, config.hidden);
  out.tops2_report = train(out.tops2, data.tops2, data.labels, config.train);
  return out;
}

}  // namespace

DescriptorMatrix describe(const std::vector<synth::LabeledCloud>& clouds, const std::vector<std::string>& classes,
                          const ColorNetwork& network, const PipelineConfig& config, bool augment, unsigned jobs) {
  std::vector<std::vector<DescriptorPair>> per(clouds.size());
  std::vector<std::size_t> labels(clouds.size());
  for (std::size_t i = 0; i < clouds.size(); ++i) labels[i] = class_index(classes, clouds[i].label);
  parallel_for(clouds.size(), jobs, [&](std::size_t i) {
    try {
      const auto prepared = prepare_cloud(clouds[i].cloud, config, clouds[i].occluded);
      const auto variants = augment ? mirror_augment(prepared, config.mirror_double)
                                    : std::vector<ColoredPointCloud>{prepared};
      for (const auto& v : variants) per[i].push_back(compute_descriptors(v, network, config.descriptor));
    } catch (const DescriptorOverflow& e) {
      throw DescriptorOverflow(describe_sample(i, clouds[i]) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(describe_sample(i, clouds[i]) + ": " + e.what());
    }
  });
  std::size_t rows = 0;
  for (const auto& p : per) rows += p.size();
  DescriptorMatrix m;
  if (rows == 0) return m;
  const auto n1 = static_cast<Eigen::Index>(per.front().front().tops.values.size());
  const auto n2 = static_cast<Eigen::Index>(per.front().front().tops2.values.size());
  m.tops.resize(static_cast<Eigen::Index>(rows), n1);
  m.tops2.resize(static_cast<Eigen::Index>(rows), n2);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < per.size(); ++i) {
    for (const auto& d : per[i]) {
      m.tops.row(r) = Eigen::Map<const Eigen::RowVectorXd>(d.tops.values.data(), n1);
      m.tops2.row(r) = Eigen::Map<const Eigen::RowVectorXd>(d.tops2.values.data(), n2);
      m.labels.push_back(labels[i]);
      m.source.push_back(i);
      ++r;
    }
  }
  return m;
}

TrainedModels train_models(const std::vector<synth::LabeledCloud>& clouds, const ColorNetwork& network,
                           const PipelineConfig& config, unsigned jobs) {
  return train_with_classes(clouds, class_table(clouds), network, config, jobs);
}

void save_models(const TrainedModels& models, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_model(models.tops, dir / "tops.model");
  save_model(models.tops2, dir / "tops2.model");
}

ModelPair load_models(const std::filesystem::path& dir) {
  ModelPair m{load_model(dir / "tops.model"), load_model(dir / "tops2.model")};
  if (m.tops.classes != m.tops2.classes) throw DataError("models in " + dir.string() + " have different class tables");
  return m;
}

// ---------------------------------------------------------------------------
// Recognition

ObjectResult classify(const ColoredPointCloud& prepared, const ModelPair& models, const ColorNetwork& network,
                      const PipelineConfig& config) {
  if (models.tops.classes != models.tops2.classes) throw DataError("models have different class tables");
  const auto d = compute_descriptors(prepared, network, config.descriptor);
  if (d.tops.values.size() != models.tops.input_dim() || d.tops2.values.size() != models.tops2.input_dim())
    throw DataError("descriptor length does not match the models (config differs from training)");
  const auto fused = fuse_predictions(forward(models.tops, d.tops.values), forward(models.tops2, d.tops2.values));
  ObjectResult r;
  r.label = models.tops.classes[fused.label];
  r.confidence = fused.confidence;
  r.winner = fused.winner;
  r.points = prepared.size();
  return r;
}

RecognitionResult recognize_scene(const RgbImage& rgb, const DepthImage& depth, const LabelImage& labels,
                                  const ModelPair& models, const ColorNetwork& network,
                                  const PipelineConfig& config, unsigned jobs) {
  if (rgb.width != depth.width || rgb.height != depth.height || rgb.width != labels.width ||
      rgb.height != labels.height)
    throw DataError("scene images have different sizes");
  std::set<std::uint16_t> present(labels.data.begin(), labels.data.end());
  present.erase(0);
  const std::vector<std::uint16_t> ids(present.begin(), present.end());
  RecognitionResult result;
  if (ids.empty()) {
    result.warnings.push_back({0, "segmentation contains no object instances"});
    return result;
  }
  std::vector<std::optional<ObjectResult>> objects(ids.size());
  std::vector<std::string> problems(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t k) {
    const auto id = ids[k];
    try {
      const auto raw = backproject(depth, rgb, labels, id, config.camera);
      const bool occluded = detect_occlusion(labels, depth, id);
      auto r = classify(prepare_cloud(raw, config, occluded), models, network, config);
      r.instance_id = id;
      r.occluded = occluded;
      objects[k] = r;
    } catch (const DataError& e) {
      problems[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (objects[k]) result.objects.push_back(*objects[k]);
    else result.warnings.push_back({ids[k], "skipped: " + problems[k]});
  }
  return result;
}

namespace {

const char* winner_name(ModelId m) { return m == ModelId::m1 ? "tops" : "tops2"; }

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_recognition_report(std::ostream& summary, std::ostream& csv, const RecognitionResult& result) {
  summary << "report: recognition\nobjects: " << result.objects.size() << "\nwarnings: " << result.warnings.size()
          << '\n';
  for (const auto& o : result.objects)
    summary << "object " << o.instance_id << ": " << o.label << " confidence=" << fixed(o.confidence)
            << " occluded=" << (o.occluded ? "yes" : "no") << " model=" << winner_name(o.winner) << '\n';
  for (const auto& w : result.warnings) summary << "warning " << w.instance_id << ": " << w.message << '\n';
  csv << "instance_id,label,confidence,occluded,model,points\n";
  for (const auto& o : result.objects)
    csv << o.instance_id << ',' << csv_field(o.label) << ',' << fixed(o.confidence) << ',' << (o.occluded ? 1 : 0)
        << ',' << winner_name(o.winner) << ',' << o.points << '\n';
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

void tally(EvaluationReport& r, const std::vector<std::string>& classes) {
  r.per_class.clear();
  for (const auto& c : classes) r.per_class.push_back({c});
  std::size_t f = 0, t1 = 0, t2 = 0;
  for (const auto& p : r.predictions) {
    auto it = std::find_if(r.per_class.begin(), r.per_class.end(), [&](const auto& c) { return c.label == p.truth; });
    if (it == r.per_class.end()) {
      r.per_class.push_back({p.truth});
      it = std::prev(r.per_class.end());
    }
    ++it->total;
    if (p.fused == p.truth) ++it->fused, ++f;
    if (p.tops == p.truth) ++it->tops, ++t1;
    if (p.tops2 == p.truth) ++it->tops2, ++t2;
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, r.predictions.size()));
  r.fused_accuracy = static_cast<double>(f) / n;
  r.tops_accuracy = static_cast<double>(t1) / n;
  r.tops2_accuracy = static_cast<double>(t2) / n;
}

}  // namespace

EvaluationReport evaluate(const std::vector<synth::LabeledCloud>& clouds, const ModelPair& models,
                          const ColorNetwork& network, const PipelineConfig& config, unsigned jobs) {
  if (clouds.empty()) throw DataError("evaluate: empty dataset");
  if (models.tops.classes != models.tops2.classes) throw DataError("models have different class tables");
  const auto& classes = models.tops.classes;
  for (const auto& c : clouds) class_index(classes, c.label);
  EvaluationReport r;
  r.predictions.resize(clouds.size());
  parallel_for(clouds.size(), jobs, [&](std::size_t i) {
    try {
      const auto prepared = prepare_cloud(clouds[i].cloud, config, clouds[i].occluded);
      const auto d = compute_descriptors(prepared, network, config.descriptor);
      if (d.tops.values.size() != models.tops.input_dim() || d.tops2.values.size() != models.tops2.input_dim())
        throw DataError("descriptor length does not match the models (config differs from training)");
      const auto p1 = forward(models.tops, d.tops.values);
      const auto p2 = forward(models.tops2, d.tops2.values);
      const auto fused = fuse_predictions(p1, p2);
      Eigen::Index a1 = 0, a2 = 0;
      p1.maxCoeff(&a1);
      p2.maxCoeff(&a2);
      r.predictions[i] = {i,
                          clouds[i].label,
                          classes[fused.label],
                          classes[static_cast<std::size_t>(a1)],
                          classes[static_cast<std::size_t>(a2)],
                          fused.confidence,
                          fused.winner};
    } catch (const DataError& e) {
      throw DataError(describe_sample(i, clouds[i]) + ": " + e.what());
    }
  });
  tally(r, classes);
  return r;
}

EvaluationReport cross_validate(const std::vector<synth::LabeledCloud>& clouds, const ColorNetwork& network,
                                const PipelineConfig& config, std::size_t folds, unsigned jobs) {
  if (clouds.empty()) throw DataError("cross-validation: empty dataset");
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  const auto classes = class_table(clouds);
  std::vector<std::size_t> fold_of(clouds.size());
  Rng rng(config.train.seed);
  for (const auto& label : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < clouds.size(); ++i)
      if (clouds[i].label == label) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) fold_of[members[k]] = k % folds;
  }
  EvaluationReport total;
  total.predictions.resize(clouds.size());
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<synth::LabeledCloud> train_set, test_set;
    std::vector<std::size_t> test_index;
    for (std::size_t i = 0; i < clouds.size(); ++i) {
      if (fold_of[i] == f) {
        test_set.push_back(clouds[i]);
        test_index.push_back(i);
      } else {
        train_set.push_back(clouds[i]);
      }
    }
    if (test_set.empty()) throw DataError("cross-validation: fold " + std::to_string(f) + " is empty");
    const auto trained = train_with_classes(train_set, classes, network, config, jobs);
    const auto fold = evaluate(test_set, {trained.tops, trained.tops2}, network, config, jobs);
    total.fold_accuracies.push_back(fold.fused_accuracy);
    for (std::size_t k = 0; k < test_index.size(); ++k) {
      total.predictions[test_index[k]] = fold.predictions[k];
      total.predictions[test_index[k]].index = test_index[k];
    }
  }
  tally(total, classes);
  const double k = static_cast<double>(folds);
  double mean = 0.0;
  for (double a : total.fold_accuracies) mean += a;
  mean /= k;
  double var = 0.0;
  for (double a : total.fold_accuracies) var += (a - mean) * (a - mean);
  total.fold_mean = mean;
  total.fold_std = std::sqrt(var / (k - 1.0));
  return total;
}

void write_evaluation_report(std::ostream& summary, std::ostream& csv, const EvaluationReport& r) {
  summary << "report: evaluation\nsamples: " << r.predictions.size() << "\naccuracy_fused: " << fixed(r.fused_accuracy)
          << "\naccuracy_tops: " << fixed(r.tops_accuracy) << "\naccuracy_tops2: " << fixed(r.tops2_accuracy) << '\n';
  for (const auto& c : r.per_class) {
    const double n = static_cast<double>(std::max<std::size_t>(1, c.total));
    summary << "class " << c.label << ": total=" << c.total << " fused=" << fixed(c.fused / n)
            << " tops=" << fixed(c.tops / n) << " tops2=" << fixed(c.tops2 / n) << '\n';
  }
  if (!r.fold_accuracies.empty()) {
    summary << "folds: " << r.fold_accuracies.size() << '\n';
    for (std::size_t f = 0; f < r.fold_accuracies.size(); ++f)
      summary << "fold " << f << ": " << fixed(r.fold_accuracies[f]) << '\n';
    summary << "fold_mean: " << fixed(r.fold_mean) << "\nfold_std: " << fixed(r.fold_std) << '\n';
  }
  csv << "index,truth,fused,tops,tops2,confidence,model\n";
  for (const auto& p : r.predictions)
    csv << p.index << ',' << csv_field(p.truth) << ',' << csv_field(p.fused) << ',' << csv_field(p.tops) << ','
        << csv_field(p.tops2) << ',' << fixed(p.confidence) << ',' << winner_name(p.winner) << '\n';
}

}  // namespace topocolor::pipeline
