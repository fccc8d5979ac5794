#include "topocolor/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#if defined(__SSE2__)
#include <immintrin.h>
#endif

#include "topocolor/error.hpp"

namespace topocolor {

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw InvalidArgument("Rng::below: empty range");
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

MlpModel mlp_init(std::size_t input_dim, std::size_t n_classes, std::uint64_t seed,
                  const std::vector<std::size_t>& hidden) {
  std::vector<std::string> classes(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) classes[i] = std::to_string(i);
  return mlp_init(input_dim, std::move(classes), seed, hidden);
}

MlpModel mlp_init(std::size_t input_dim, std::vector<std::string> classes, std::uint64_t seed,
                  const std::vector<std::size_t>& hidden) {
  if (input_dim < 1 || classes.empty()) throw InvalidArgument("mlp_init: dimensions must be >= 1");
  for (auto h : hidden)
    if (h < 1) throw InvalidArgument("mlp_init: hidden width must be >= 1");
  MlpModel m;
  m.sizes.push_back(input_dim);
  m.sizes.insert(m.sizes.end(), hidden.begin(), hidden.end());
  m.sizes.push_back(classes.size());
  m.classes = std::move(classes);
  m.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_dim));
  m.input_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(input_dim));
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(m.sizes[l]), out = static_cast<Eigen::Index>(m.sizes[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    // Column-major fill order is part of the seeded contract.
    for (Eigen::Index j = 0; j < in; ++j)
      for (Eigen::Index i = 0; i < out; ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

namespace {

// Flushes subnormal results and inputs to zero while alive; restores the
// previous floating-point mode on destruction.
class FlushSubnormals {
 public:
  FlushSubnormals() {
#if defined(__SSE2__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);  // FTZ | DAZ
#endif
  }
  ~FlushSubnormals() {
#if defined(__SSE2__)
    _mm_setcsr(saved_);
#endif
  }
  FlushSubnormals(const FlushSubnormals&) = delete;
  FlushSubnormals& operator=(const FlushSubnormals&) = delete;

 private:
  unsigned saved_ = 0;
};

void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

Eigen::MatrixXd standardized(const MlpModel& m, const Eigen::MatrixXd& x_rows) {
  // Samples become columns.
  Eigen::MatrixXd a = x_rows.transpose();
  a.colwise() -= m.input_mean;
  a.array().colwise() *= m.input_scale.array();
  return a;
}

void check_input(const MlpModel& m, Eigen::Index dim) {
  if (static_cast<std::size_t>(dim) != m.input_dim())
    throw InvalidArgument("forward: input has " + std::to_string(dim) + " features, model expects " +
                          std::to_string(m.input_dim()));
}

// Activations of every layer for a batch of column samples; the last entry
// holds probabilities.
std::vector<Eigen::MatrixXd> forward_all(const MlpModel& m, Eigen::MatrixXd a0) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(m.layers.size() + 1);
  acts.push_back(std::move(a0));
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    Eigen::MatrixXd z = m.layers[l].weight * acts.back();
    z.colwise() += m.layers[l].bias;
    if (l + 1 < m.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  softmax_columns(acts.back());
  return acts;
}

Eigen::MatrixXd column_input(const MlpModel& m, std::span<const double> x) {
  check_input(m, static_cast<Eigen::Index>(x.size()));
  Eigen::MatrixXd row = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return standardized(m, row);
}

// Gradients of the summed loss over the batch, scaled by `scale`.
Gradients backward(const MlpModel& m, const std::vector<Eigen::MatrixXd>& acts,
                   std::span<const std::size_t> labels, double scale) {
  const std::size_t nl = m.layers.size();
  Gradients g;
  g.weight.resize(nl);
  g.bias.resize(nl);
  Eigen::MatrixXd delta = acts.back();
  for (std::size_t s = 0; s < labels.size(); ++s) delta(static_cast<Eigen::Index>(labels[s]), static_cast<Eigen::Index>(s)) -= 1.0;
  delta *= scale;
  for (std::size_t l = nl; l-- > 0;) {
    g.weight[l] = delta * acts[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = m.layers[l].weight.transpose() * delta;
    // ReLU derivative: zero where the activation was clamped.
    delta = (acts[l].array() > 0.0).select(back, 0.0);
  }
  return g;
}

}  // namespace

Eigen::VectorXd forward(const MlpModel& model, std::span<const double> x) {
  return forward_all(model, column_input(model, x)).back().col(0);
}

Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x) {
  check_input(model, x.cols());
  return forward_all(model, standardized(model, x)).back();
}

double cross_entropy(const MlpModel& model, std::span<const double> x, std::size_t label) {
  if (label >= model.n_classes()) throw InvalidArgument("cross_entropy: label out of range");
  const auto p = forward(model, x);
  return -std::log(std::max(p(static_cast<Eigen::Index>(label)), std::numeric_limits<double>::min()));
}

Gradients backprop(const MlpModel& model, std::span<const double> x, std::size_t label) {
  if (label >= model.n_classes()) throw InvalidArgument("backprop: label out of range");
  const auto acts = forward_all(model, column_input(model, x));
  const std::size_t labels[1] = {label};
  return backward(model, acts, labels, 1.0);
}

TrainReport train(MlpModel& model, const Eigen::MatrixXd& x, std::span<const std::size_t> labels,
                  const TrainConfig& cfg) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw DataError("train: empty dataset");
  if (labels.size() != n) throw InvalidArgument("train: label count differs from sample count");
  check_input(model, x.cols());
  if (cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr1 > 0.0) || !(cfg.lr2 > 0.0))
    throw InvalidArgument("train: epochs, batch size and learning rates must be positive");
  std::vector<std::size_t> per_class(model.n_classes(), 0);
  for (auto y : labels) {
    if (y >= model.n_classes()) throw InvalidArgument("train: label out of range");
    ++per_class[y];
  }
  if (std::count_if(per_class.begin(), per_class.end(), [](std::size_t c) { return c > 0; }) < 2)
    throw DataError("train: dataset contains a single class");

  const auto dim = x.cols();
  model.input_mean = Eigen::VectorXd::Zero(dim);
  model.input_scale = Eigen::VectorXd::Ones(dim);
  if (cfg.standardize) {
    model.input_mean = x.colwise().mean().transpose();
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double var = (x.col(j).array() - model.input_mean(j)).square().mean();
      model.input_scale(j) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
    }
  }
  model.train_config = cfg;

  // Features that are constant over the training set and zero after
  // standardization get exactly zero gradients, so their first-layer weights
  // never move. Training runs on the remaining columns only.
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const bool constant = (x.col(j).array() == x(0, j)).all();
    if (!constant || (!cfg.standardize && x(0, j) != 0.0)) active.push_back(j);
  }
  if (active.empty()) active.push_back(0);
  MlpModel work;
  work.sizes = model.sizes;
  work.sizes.front() = active.size();
  work.layers = model.layers;
  work.layers.front().weight = model.layers.front().weight(Eigen::all, active);
  work.input_mean = model.input_mean(active);
  work.input_scale = model.input_scale(active);

  const std::size_t nl = work.layers.size();
  Gradients m1, m2;
  for (std::size_t l = 0; l < nl; ++l) {
    m1.weight.push_back(Eigen::MatrixXd::Zero(work.layers[l].weight.rows(), work.layers[l].weight.cols()));
    m1.bias.push_back(Eigen::VectorXd::Zero(work.layers[l].bias.size()));
  }
  m2 = m1;

  const FlushSubnormals flush;
  const Eigen::MatrixXd xs = standardized(work, x(Eigen::all, active));  // features x samples
  const auto wdim = static_cast<Eigen::Index>(active.size());
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainReport report;
  std::uint64_t step = 0;
  std::vector<std::size_t> batch_labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const double lr = cfg.learning_rate(epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      Eigen::MatrixXd a0(wdim, static_cast<Eigen::Index>(b));
      batch_labels.resize(b);
      for (std::size_t s = 0; s < b; ++s) {
        a0.col(static_cast<Eigen::Index>(s)) = xs.col(static_cast<Eigen::Index>(order[start + s]));
        batch_labels[s] = labels[order[start + s]];
      }
      const auto acts = forward_all(work, std::move(a0));
      const auto& p = acts.back();
      for (std::size_t s = 0; s < b; ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        loss_sum -= std::log(std::max(p(static_cast<Eigen::Index>(batch_labels[s]), col),
                                      std::numeric_limits<double>::min()));
        Eigen::Index arg = 0;
        p.col(col).maxCoeff(&arg);
        if (static_cast<std::size_t>(arg) == batch_labels[s]) ++correct;
      }
      const auto g = backward(work, acts, batch_labels, 1.0 / static_cast<double>(b));
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const auto adam = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
        mom = cfg.beta1 * mom + (1.0 - cfg.beta1) * grad;
        vel = cfg.beta2 * vel + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
        param.array() -= lr * (mom.array() / c1) / ((vel.array() / c2).sqrt() + cfg.adam_eps);
      };
      for (std::size_t l = 0; l < nl; ++l) {
        adam(work.layers[l].weight, m1.weight[l], m2.weight[l], g.weight[l]);
        adam(work.layers[l].bias, m1.bias[l], m2.bias[l], g.bias[l]);
      }
    }
    report.loss.push_back(loss_sum / static_cast<double>(n));
    report.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }
  Eigen::MatrixXd first = std::move(model.layers.front().weight);
  first(Eigen::all, active) = work.layers.front().weight;
  model.layers = std::move(work.layers);
  model.layers.front().weight = std::move(first);
  return report;
}

double gradient_check(const MlpModel& model, std::span<const double> x, std::size_t label,
                      const GradientCheckOptions& opt) {
  Gradients g = backprop(model, x, label);
  if (opt.tamper) opt.tamper(g);
  MlpModel probe = model;
  const Eigen::MatrixXd a0 = column_input(model, x);

  const auto masks = [&](const MlpModel& m) {
    const auto acts = forward_all(m, a0);
    std::vector<Eigen::Array<bool, Eigen::Dynamic, 1>> out;
    for (std::size_t l = 1; l + 1 < acts.size(); ++l) out.push_back(acts[l].col(0).array() > 0.0);
    return out;
  };
  const auto loss = [&](const MlpModel& m) {
    const auto p = forward_all(m, a0).back();
    return -std::log(std::max(p(static_cast<Eigen::Index>(label), 0), std::numeric_limits<double>::min()));
  };

  Rng rng(opt.seed);
  double worst = 0.0;
  const auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + opt.step;
    const double up = loss(probe);
    const auto mask_up = masks(probe);
    param = saved - opt.step;
    const double down = loss(probe);
    const auto mask_down = masks(probe);
    param = saved;
    for (std::size_t k = 0; k < mask_up.size(); ++k)
      if ((mask_up[k] != mask_down[k]).any()) return;
    const double numeric = (up - down) / (2.0 * opt.step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& w = probe.layers[l].weight;
    auto& b = probe.layers[l].bias;
    const std::size_t nw = static_cast<std::size_t>(w.size()), nb = static_cast<std::size_t>(b.size());
    const std::size_t total = nw + nb;
    std::vector<std::size_t> picks(total);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    if (total > opt.samples_per_layer) {
      rng.shuffle(picks);
      picks.resize(opt.samples_per_layer);
    }
    for (auto k : picks) {
      if (k < nw) check(w.data()[k], g.weight[l].data()[k]);
      else check(b.data()[k - nw], g.bias[l].data()[k - nw]);
    }
  }
  return worst;
}

FusedPrediction fuse_predictions(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2) {
  if (p1.size() != p2.size() || p1.size() == 0)
    throw InvalidArgument("fuse_predictions: class tables differ");
  Eigen::Index a1 = 0, a2 = 0;
  const double c1 = p1.maxCoeff(&a1);
  const double c2 = p2.maxCoeff(&a2);
  if (c1 > c2) return {static_cast<std::size_t>(a1), c1, ModelId::m1};
  return {static_cast<std::size_t>(a2), c2, ModelId::m2};
}

// ---------------------------------------------------------------------------
// Model file

namespace {

constexpr char kMagic[8] = {'T', 'C', 'M', 'L', 'P', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("model file is truncated or corrupt");
  return v;
}

void put_reals(std::ostream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_reals(std::istream& in, double* p, std::size_t n) {
  if (!in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double))))
    throw DataError("model file is truncated or corrupt");
}

constexpr std::uint64_t kLimit = std::uint64_t{1} << 32;

}  // namespace

void save_model(const MlpModel& m, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, m.sizes.size());
  for (auto s : m.sizes) put<std::uint64_t>(out, s);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.activation));
  for (const auto& c : m.classes) {
    put<std::uint64_t>(out, c.size());
    out.write(c.data(), static_cast<std::streamsize>(c.size()));
  }
  const auto& t = m.train_config;
  put<std::uint64_t>(out, t.epochs);
  put<std::uint64_t>(out, t.phase1_epochs);
  put(out, t.lr1);
  put(out, t.lr2);
  put(out, t.beta1);
  put(out, t.beta2);
  put(out, t.adam_eps);
  put<std::uint64_t>(out, t.batch_size);
  put<std::uint64_t>(out, t.seed);
  put<std::uint8_t>(out, t.standardize ? 1 : 0);
  put_reals(out, m.input_mean.data(), static_cast<std::size_t>(m.input_mean.size()));
  put_reals(out, m.input_scale.data(), static_cast<std::size_t>(m.input_scale.size()));
  for (const auto& layer : m.layers) {
    put_reals(out, layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    put_reals(out, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  out.write("END!", 4);
  if (!out) throw DataError("model: write failed");
}

MlpModel load_model(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DataError("not a model file");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw VersionMismatch("model format version " + std::to_string(version) + ", expected " +
                          std::to_string(kVersion));
  MlpModel m;
  const auto count = get<std::uint64_t>(in);
  if (count < 2 || count > 64) throw DataError("model file is corrupt: layer count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto s = get<std::uint64_t>(in);
    if (s < 1 || s >= kLimit) throw DataError("model file is corrupt: layer size");
    m.sizes.push_back(s);
  }
  const auto act = get<std::uint32_t>(in);
  if (act != static_cast<std::uint32_t>(Activation::relu)) throw DataError("model file: unknown activation");
  for (std::size_t c = 0; c < m.sizes.back(); ++c) {
    const auto len = get<std::uint64_t>(in);
    if (len > 4096) throw DataError("model file is corrupt: class name");
    std::string name(len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(len))) throw DataError("model file is truncated or corrupt");
    m.classes.push_back(std::move(name));
  }
  auto& t = m.train_config;
  t.epochs = get<std::uint64_t>(in);
  t.phase1_epochs = get<std::uint64_t>(in);
  t.lr1 = get<double>(in);
  t.lr2 = get<double>(in);
  t.beta1 = get<double>(in);
  t.beta2 = get<double>(in);
  t.adam_eps = get<double>(in);
  t.batch_size = get<std::uint64_t>(in);
  t.seed = get<std::uint64_t>(in);
  t.standardize = get<std::uint8_t>(in) != 0;
  const auto dim = static_cast<Eigen::Index>(m.sizes.front());
  m.input_mean.resize(dim);
  m.input_scale.resize(dim);
  get_reals(in, m.input_mean.data(), m.sizes.front());
  get_reals(in, m.input_scale.data(), m.sizes.front());
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    DenseLayer layer{Eigen::MatrixXd(static_cast<Eigen::Index>(m.sizes[l + 1]), static_cast<Eigen::Index>(m.sizes[l])),
                     Eigen::VectorXd(static_cast<Eigen::Index>(m.sizes[l + 1]))};
    get_reals(in, layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    get_reals(in, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    m.layers.push_back(std::move(layer));
  }
  char end[4];
  if (!in.read(end, 4) || std::memcmp(end, "END!", 4) != 0) throw DataError("model file is truncated or corrupt");
  return m;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  save_model(model, out);
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace topocolor
