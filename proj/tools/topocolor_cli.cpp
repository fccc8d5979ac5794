// Command-line front end: network build, synth generate, descriptor compute,
// train, recognize, evaluate.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "topocolor/error.hpp"
#include "topocolor/pipeline.hpp"
#include "topocolor/ply.hpp"

namespace fs = std::filesystem;
using namespace topocolor;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

pipeline::PipelineConfig resolve(const Common& c) {
  auto cfg = c.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(c.config);
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.synth.sampling.seed = *c.seed;
  }
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_seed = true) {
  app->add_option("--config", c.config, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
  if (with_seed) app->add_option("--seed", c.seed, "Override the training and sampling seeds");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

ColorNetwork network_for(const pipeline::PipelineConfig& cfg, const std::string& override_path) {
  const fs::path path = override_path.empty() ? fs::path(cfg.network_path) : fs::path(override_path);
  if (!fs::exists(path))
    throw DataError("color network file " + path.string() + " not found; run 'topocolor network build' first");
  auto net = load_network(path);
  if (!(net.params() == cfg.network))
    std::fprintf(stderr, "warning: %s was built with parameters that differ from the config\n", path.c_str());
  return net;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological shape and color descriptors for occlusion-robust object recognition"};
  app.require_subcommand(1);
  Common common;

  // network build
  auto* network = app.add_subcommand("network", "Color network commands");
  network->require_subcommand(1);
  auto* network_build = network->add_subcommand("build", "Build the color network and its similarity matrix");
  add_common(network_build, common, false);
  std::string out;
  network_build->add_option("--out", out, "Output file (default: network.path from the config)");

  // synth generate
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic data commands");
  synth_cmd->require_subcommand(1);
  auto* synth_generate = synth_cmd->add_subcommand("generate", "Render labeled views of the configured shapes");
  add_common(synth_generate, common);
  synth_generate->add_option("--out", out, "Dataset directory")->required();
  double occlusion = 0.0;
  std::string end = "top";
  double azimuth_offset = 0.0;
  synth_generate->add_option("--occlusion", occlusion, "Fraction of the height to remove")->check(CLI::Range(0.0, 0.999));
  synth_generate->add_option("--end", end, "Occluded end")->check(CLI::IsMember({"top", "bottom", "both"}));
  synth_generate->add_option("--azimuth-offset", azimuth_offset, "Shift of every camera azimuth (radians)");

  // descriptor compute
  auto* descriptor = app.add_subcommand("descriptor", "Descriptor commands");
  descriptor->require_subcommand(1);
  auto* descriptor_compute = descriptor->add_subcommand("compute", "Compute the TOPS or TOPS2 descriptor of a PLY cloud");
  add_common(descriptor_compute, common, false);
  std::string input, network_path, kind = "tops2";
  bool occluded = false, text = false;
  descriptor_compute->add_option("--input", input, "Input PLY")->required()->check(CLI::ExistingFile);
  descriptor_compute->add_option("--out", out, "Output file")->required();
  descriptor_compute->add_option("--network", network_path, "Color network file");
  descriptor_compute->add_option("--kind", kind, "tops or tops2")->check(CLI::IsMember({"tops", "tops2"}));
  descriptor_compute->add_flag("--occluded", occluded, "Apply the occlusion reorientation");
  descriptor_compute->add_flag("--text", text, "Write a text dump instead of the binary record");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the TOPS and TOPS2 classifiers");
  add_common(train_cmd, common);
  std::string data;
  train_cmd->add_option("--data", data, "Dataset directory (manifest.json)")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--network", network_path, "Color network file");
  train_cmd->add_option("--out", out, "Model directory")->required();

  // recognize
  auto* recognize = app.add_subcommand("recognize", "Recognize the objects of an RGB-D scene");
  add_common(recognize, common, false);
  std::string models, rgb, depth, labels;
  recognize->add_option("--models", models, "Model directory")->required()->check(CLI::ExistingDirectory);
  recognize->add_option("--network", network_path, "Color network file");
  recognize->add_option("--rgb", rgb, "RGB PNG")->required()->check(CLI::ExistingFile);
  recognize->add_option("--depth", depth, "16-bit depth PNG")->required()->check(CLI::ExistingFile);
  recognize->add_option("--labels", labels, "Instance segmentation PNG")->required()->check(CLI::ExistingFile);
  recognize->add_option("--out", out, "Report directory")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy report on a labeled dataset");
  add_common(evaluate, common);
  std::size_t folds = 0;
  evaluate->add_option("--data", data, "Dataset directory (manifest.json)")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--models", models, "Model directory (not used with --folds)");
  evaluate->add_option("--network", network_path, "Color network file");
  evaluate->add_option("--folds", folds, "Stratified cross-validation with this many folds");
  evaluate->add_option("--out", out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const auto cfg = resolve(common);
    if (network_build->parsed()) {
      const fs::path path = out.empty() ? fs::path(cfg.network_path) : fs::path(out);
      const auto net = generate_color_network(cfg.network, common.jobs);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      save_network(net, path);
      std::printf("network: %s\nnodes: %zu\nedges: %zu\nconnected: %s\nmax_regions_per_color: %zu\n",
                  path.c_str(), net.size(), net.edges().size(), net.is_connected() ? "yes" : "no",
                  net.max_region_count());
    } else if (synth_generate->parsed()) {
      synth::CameraGrid grid{cfg.synth.polar_step, cfg.synth.azimuth_step};
      auto clouds = synth::generate_training_set(cfg.synth.shapes, grid, cfg.synth.sampling, common.jobs);
      for (auto& c : clouds) {
        if (azimuth_offset != 0.0) {
          c.azimuth += azimuth_offset;
          c.cloud = synth::render_view(cfg.synth.shapes[c.shape_index], synth::camera_direction(c.polar, c.azimuth),
                                       cfg.synth.sampling);
        }
        if (occlusion > 0.0) {
          c.cloud = synth::occlude(c.cloud, occlusion, synth::parse_occlusion_end(end));
          c.occluded = true;
        }
      }
      synth::write_dataset(out, cfg.synth.shapes, clouds);
      pipeline::save_config(cfg, fs::path(out) / "config.json");
      std::printf("dataset: %s\nclouds: %zu\nshapes: %zu\n", out.c_str(), clouds.size(), cfg.synth.shapes.size());
    } else if (descriptor_compute->parsed()) {
      const auto net = network_for(cfg, network_path);
      const auto prepared = pipeline::prepare_cloud(read_ply(fs::path(input)), cfg, occluded);
      const auto d = compute_descriptors(prepared, net, cfg.descriptor);
      const auto& chosen = kind == "tops" ? d.tops : d.tops2;
      if (text) {
        auto os = open_out(out);
        dump_descriptor(os, chosen);
      } else {
        write_descriptor(fs::path(out), chosen);
      }
      std::printf("descriptor: %s\nkind: %s\nlength: %zu\nslices_used: %zu\n", out.c_str(), kind.c_str(),
                  chosen.values.size(), chosen.used_slices);
    } else if (train_cmd->parsed()) {
      const auto net = network_for(cfg, network_path);
      const auto dataset = synth::read_dataset(data);
      const auto trained = pipeline::train_models(dataset.clouds, net, cfg, common.jobs);
      pipeline::save_models(trained, out);
      pipeline::save_config(cfg, fs::path(out) / "config.json");
      auto report = open_out(fs::path(out) / "train_report.txt");
      report << "report: training\nclouds: " << dataset.clouds.size() << "\nsamples: " << trained.samples
             << "\nclasses: " << trained.tops.classes.size() << '\n';
      report << "final_accuracy_tops: " << trained.tops_report.accuracy.back()
             << "\nfinal_accuracy_tops2: " << trained.tops2_report.accuracy.back() << '\n';
      report << "epoch,loss_tops,loss_tops2,accuracy_tops,accuracy_tops2\n";
      for (std::size_t e = 0; e < trained.tops_report.loss.size(); ++e)
        report << e + 1 << ',' << trained.tops_report.loss[e] << ',' << trained.tops2_report.loss[e] << ','
               << trained.tops_report.accuracy[e] << ',' << trained.tops2_report.accuracy[e] << '\n';
      std::printf("models: %s\nsamples: %zu\nfinal_accuracy_tops: %.4f\nfinal_accuracy_tops2: %.4f\n", out.c_str(),
                  trained.samples, trained.tops_report.accuracy.back(), trained.tops2_report.accuracy.back());
    } else if (recognize->parsed()) {
      const auto net = network_for(cfg, network_path);
      const auto pair = pipeline::load_models(models);
      const auto result = pipeline::recognize_scene(read_rgb_png(rgb), read_depth_png(depth), read_label_png(labels),
                                                    pair, net, cfg, common.jobs);
      fs::create_directories(out);
      auto summary = open_out(fs::path(out) / "summary.txt");
      auto csv = open_out(fs::path(out) / "objects.csv");
      write_recognition_report(summary, csv, result);
      pipeline::save_config(cfg, fs::path(out) / "config.json");
      std::ostringstream discard;
      write_recognition_report(std::cout, discard, result);
      for (const auto& w : result.warnings) std::fprintf(stderr, "warning: instance %u: %s\n", w.instance_id, w.message.c_str());
    } else if (evaluate->parsed()) {
      const auto net = network_for(cfg, network_path);
      const auto dataset = synth::read_dataset(data);
      pipeline::EvaluationReport report;
      if (folds > 0) {
        report = pipeline::cross_validate(dataset.clouds, net, cfg, folds, common.jobs);
      } else {
        if (models.empty()) throw InvalidArgument("evaluate needs --models or --folds");
        report = pipeline::evaluate(dataset.clouds, pipeline::load_models(models), net, cfg, common.jobs);
      }
      fs::create_directories(out);
      auto summary = open_out(fs::path(out) / "summary.txt");
      auto csv = open_out(fs::path(out) / "predictions.csv");
      write_evaluation_report(summary, csv, report);
      pipeline::save_config(cfg, fs::path(out) / "config.json");
      std::ostringstream discard;
      write_evaluation_report(std::cout, discard, report);
    }
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  }
  return kOk;
}
