#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <sstream>

#include "topocolor/error.hpp"
#include "topocolor/pipeline.hpp"

using namespace topocolor;
using namespace topocolor::pipeline;

namespace {

constexpr double kPi = std::numbers::pi;

ColorNetwork toy_network() {
  ColorNetworkParams p;
  p.grid_step = 85;
  const Srgb red{255, 0, 0}, blue{0, 0, 255}, yellow{255, 255, 0};
  std::vector<ColorNode> nodes(3);
  nodes[0].members = {red.packed()};
  nodes[1].members = {blue.packed()};
  nodes[2].members = {yellow.packed()};
  for (auto& n : nodes) n.mean = mean_color(n.members);
  Eigen::MatrixXd delta(3, 3);
  delta << 1, 0.2, 0.3, 0.2, 1, 0.1, 0.3, 0.1, 1;
  return ColorNetwork(p, nodes, {}, delta);
}

// Two boxes of equal geometry and different color plus a cylinder; small
// sampling grid and a narrow network keep this fast.
PipelineConfig small_config() {
  PipelineConfig c;
  auto suite = synth::desk_suite();
  c.synth.shapes = {suite[0], suite[1], suite[2]};
  c.synth.polar_step = kPi / 4;
  c.synth.azimuth_step = kPi / 2;
  c.synth.sampling.spacing = 0.006;
  c.hidden = {32, 16};
  c.train.epochs = 60;
  c.train.phase1_epochs = 40;
  c.train.batch_size = 8;
  return c;
}

std::vector<synth::LabeledCloud> small_set(const PipelineConfig& c) {
  return synth::generate_training_set(c.synth.shapes, {c.synth.polar_step, c.synth.azimuth_step},
                                      c.synth.sampling, 2);
}

}  // namespace

TEST_CASE("config round trip") {
  PipelineConfig c;
  c.sigma_s = 3.0;
  c.descriptor.max_slices = 9;
  c.train.seed = 77;
  c.train.standardize = true;
  c.hidden = {16, 8};
  c.network.intervals = {2, 6};
  c.synth.shapes.resize(2);
  c.synth.shapes[1].scheme = synth::ColorScheme::two_tone;
  std::stringstream ss;
  save_config(c, ss);
  const auto r = parse_config(ss);
  CHECK(r.sigma_s == 3.0);
  CHECK(r.descriptor == c.descriptor);
  CHECK(r.preprocess == c.preprocess);
  CHECK(r.network == c.network);
  CHECK(r.train == c.train);
  CHECK(r.hidden == c.hidden);
  CHECK(r.mirror == c.mirror);
  CHECK(r.network_path == c.network_path);
  REQUIRE(r.synth.shapes.size() == 2);
  CHECK(r.synth.shapes[1].scheme == synth::ColorScheme::two_tone);
  CHECK(r.synth.shapes[1].label == c.synth.shapes[1].label);
}

TEST_CASE("config errors") {
  SUBCASE("partial config keeps defaults") {
    std::istringstream in(R"({"sigma_s": 2.0, "train": {"epochs": 5}})");
    const auto c = parse_config(in);
    CHECK(c.sigma_s == 2.0);
    CHECK(c.train.epochs == 5);
    CHECK(c.descriptor == DescriptorParams{});
  }
  SUBCASE("unknown key") {
    std::istringstream in(R"({"train": {"epoch": 5}})");
    CHECK_THROWS_AS(parse_config(in), DataError);
  }
  SUBCASE("wrong type") {
    std::istringstream in(R"({"sigma_s": "big"})");
    CHECK_THROWS_AS(parse_config(in), DataError);
  }
  SUBCASE("invalid value") {
    std::istringstream in(R"({"descriptor": {"sigma1": 0}})");
    CHECK_THROWS_AS(parse_config(in), DataError);
  }
  SUBCASE("version") {
    std::istringstream in(R"({"format": "topocolor-config", "version": 2})");
    CHECK_THROWS_AS(parse_config(in), VersionMismatch);
  }
  SUBCASE("not json") {
    std::istringstream in("sigma_s = 2");
    CHECK_THROWS_AS(parse_config(in), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), DataError);
  }
}

TEST_CASE("parallel_for runs every index and rethrows the first failure") {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 30) throw DataError("fail " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()) == "fail 7");
  }
}

TEST_CASE("prepare cloud") {
  const auto cfg = small_config();
  const auto view = synth::render_view(cfg.synth.shapes[0], synth::camera_direction(kPi / 3, 0.4), cfg.synth.sampling);
  const auto a = prepare_cloud(view, cfg, false);
  const auto b = prepare_cloud(view, cfg, true);
  CHECK(a.size() == b.size());
  CHECK(a.size() < view.size());
  const auto ba = bounding_box(a), bb = bounding_box(b);
  CHECK(ba.min.norm() < 1e-12);
  CHECK((ba.extents() - bb.extents()).norm() < 1e-9);
  CHECK(ba.extents().x() >= ba.extents().y());
  CHECK(ba.extents().y() >= ba.extents().z());
  CHECK_THROWS_AS(prepare_cloud(ColoredPointCloud{}, cfg, false), DataError);
}

TEST_CASE("class table follows first appearance") {
  std::vector<synth::LabeledCloud> c(4);
  c[0].label = "b";
  c[1].label = "a";
  c[2].label = "b";
  c[3].label = "c";
  CHECK(class_table(c) == std::vector<std::string>{"b", "a", "c"});
}

TEST_CASE("train, save, evaluate and recognize") {
  const auto cfg = small_config();
  const auto net = toy_network();
  const auto clouds = small_set(cfg);
  const auto classes = class_table(clouds);
  REQUIRE(classes.size() == 3);

  const auto m = describe(clouds, classes, net, cfg, true, 2);
  CHECK(static_cast<std::size_t>(m.tops.rows()) == 3 * clouds.size());
  CHECK(m.tops.rows() == m.tops2.rows());
  CHECK(static_cast<std::size_t>(m.tops.cols()) == cfg.descriptor.max_slices * 256);
  CHECK(static_cast<std::size_t>(m.tops2.cols()) == cfg.descriptor.max_slices * (256 + 3 * 16));
  for (std::size_t r = 0; r < m.labels.size(); ++r) CHECK(m.labels[r] == clouds[m.source[r]].shape_index);

  const auto trained = train_models(clouds, net, cfg, 2);
  CHECK(trained.samples == m.labels.size());
  CHECK(trained.tops.classes == classes);
  CHECK(trained.tops2_report.loss.back() < trained.tops2_report.loss.front());

  const auto dir = std::filesystem::temp_directory_path() / "topocolor_test_models";
  std::filesystem::remove_all(dir);
  save_models(trained, dir);
  const auto models = load_models(dir);
  CHECK(models.tops.classes == classes);

  const auto report = evaluate(clouds, models, net, cfg, 2);
  CHECK(report.predictions.size() == clouds.size());
  CHECK(report.tops2_accuracy >= 0.9);
  CHECK(report.fused_accuracy >= 0.9);
  REQUIRE(report.per_class.size() == 3);
  std::size_t total = 0;
  for (const auto& c : report.per_class) total += c.total;
  CHECK(total == clouds.size());

  std::ostringstream summary, csv;
  write_evaluation_report(summary, csv, report);
  CHECK(summary.str().rfind("report: evaluation\nsamples: " + std::to_string(clouds.size()) + "\n", 0) == 0);
  CHECK(csv.str().rfind("index,truth,fused,tops,tops2,confidence,model\n", 0) == 0);
  const auto rows = csv.str();
  CHECK(std::count(rows.begin(), rows.end(), '\n') == static_cast<long>(clouds.size() + 1));

  SUBCASE("background only scene") {
    RgbImage rgb(8, 6, 3);
    DepthImage depth(8, 6);
    LabelImage labels(8, 6);
    const auto r = recognize_scene(rgb, depth, labels, models, net, cfg, 1);
    CHECK(r.objects.empty());
    REQUIRE(r.warnings.size() == 1);
    std::ostringstream s, c;
    write_recognition_report(s, c, r);
    CHECK(s.str() == "report: recognition\nobjects: 0\nwarnings: 1\nwarning 0: segmentation contains no object instances\n");
    CHECK(c.str() == "instance_id,label,confidence,occluded,model,points\n");
    CHECK_THROWS_AS(recognize_scene(rgb, DepthImage(4, 4), labels, models, net, cfg, 1), DataError);
  }
  SUBCASE("rendered scene") {
    const std::vector<synth::SceneObject> objs{
        {cfg.synth.shapes[2], synth::upright_pose(0.0), {-0.15, 0.0, 0.9}, 4},
        {cfg.synth.shapes[0], synth::upright_pose(0.5), {0.15, 0.0, 0.9}, 9}};
    auto camera = cfg.camera;
    camera.cx = 159.5;
    camera.cy = 119.5;
    const auto scene = synth::render_scene(objs, camera, 320, 240);
    const auto r = recognize_scene(scene.rgb, scene.depth, scene.labels, models, net, cfg, 2);
    REQUIRE(r.objects.size() == 2);
    CHECK(r.objects[0].instance_id == 4);
    CHECK(r.objects[1].instance_id == 9);
    for (const auto& o : r.objects) {
      CHECK(o.points > 0);
      CHECK(o.confidence > 0.0);
      CHECK(o.confidence <= 1.0);
    }
  }
  SUBCASE("descriptor length mismatch") {
    auto other = cfg;
    other.descriptor.max_slices = 20;
    const auto prepared = prepare_cloud(clouds[0].cloud, other, false);
    CHECK_THROWS_AS(classify(prepared, models, net, other), DataError);
  }
  std::filesystem::remove_all(dir);
}
