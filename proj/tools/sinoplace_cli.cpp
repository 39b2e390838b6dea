// sinoplace: build, query, train and evaluate sinogram place descriptors.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sinoplace/errors.hpp"
#include "sinoplace/evaluation.hpp"
#include "sinoplace/oneshot.hpp"
#include "sinoplace/parallel.hpp"
#include "sinoplace/retrieval.hpp"
#include "sinoplace/run_config.hpp"
#include "sinoplace/weights_io.hpp"

namespace fs = std::filesystem;
using namespace sinoplace;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 0;
  bool threads_given = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value settings file");
  cmd->add_option("--set", c.sets, "override one setting, key=value (repeatable)");
  cmd->add_option_function<std::uint64_t>("--seed", [&c](const std::uint64_t& v) {
    c.seed = v;
    c.seed_given = true;
  }, "random seed");
  cmd->add_option_function<unsigned>("--threads", [&c](const unsigned& v) {
    c.threads = v;
    c.threads_given = true;
  }, "worker thread cap (0 = all cores)");
}

// Config file, then --set, then --seed / --threads.
RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) cfg = load_run_config(c.config);
  for (const std::string& s : c.sets) cfg.set(s);
  if (c.seed_given) cfg.set("seed", std::to_string(c.seed));
  if (c.threads_given) cfg.threads = c.threads;
  cfg.validate();
  set_thread_limit(cfg.threads);
  return cfg;
}

fs::path scan_path(const fs::path& dir, std::uint64_t id) {
  char name[32];
  std::snprintf(name, sizeof name, "%06llu.bin", static_cast<unsigned long long>(id));
  return dir / name;
}

PointCloud load_scan(const fs::path& path) {
  LoadedCloud lc = load_point_cloud(path, CloudFormat::bin_xyzi);
  if (lc.dropped_count > 0) {
    std::cerr << "warning: " << path.string() << ": dropped " << lc.dropped_count << " non-finite points\n";
  }
  return std::move(lc.cloud);
}

double alpha_degrees(long bin, std::size_t n_theta) {
  return static_cast<double>(bin) * 360.0 / static_cast<double>(n_theta);
}

// ---- build-db

struct BuildDbArgs {
  std::string scans, poses, weights, out;
};

int cmd_build_db(const Common& common, const BuildDbArgs& a) {
  const RunConfig cfg = resolve(common);
  const Network net = load_network(a.weights);
  const std::vector<FramePose> frames = load_pose_csv(a.poses);
  const fs::path dir = a.scans;
  const PlaceDatabase db = build_database(
      frames, [&](const FramePose& f) { return load_scan(scan_path(dir, f.id)); }, net, cfg.pipeline,
      cfg.sampling_dist);
  save_database(db, a.out);
  std::cout << "kept " << db.size() << "/" << frames.size() << "\n";
  return 0;
}

// ---- query

struct QueryArgs {
  std::string db, scan, weights;
  std::size_t k = 0;
};

int cmd_query(const Common& common, const QueryArgs& a) {
  RunConfig cfg = resolve(common);
  if (a.k > 0) cfg.top_k = a.k;
  const Network net = load_network(a.weights);
  const PlaceDatabase db = load_database(a.db, network_fingerprint(net));
  if (db.meta.fingerprint_mismatch) {
    std::cerr << "error: " << a.db << " was built with different weights (fingerprint "
              << std::hex << db.meta.fingerprint << ", weights " << network_fingerprint(net) << std::dec
              << ")\n";
    return 1;
  }
  const Descriptor q = cfg.pipeline.describe(load_scan(a.scan), net);
  const std::vector<QueryHit> hits = query_topk(db, q, cfg.top_k);
  std::cout << std::fixed << std::setprecision(6);
  for (const QueryHit& h : hits) {
    std::cout << h.frame_id << ' ' << h.score << ' ' << std::setprecision(2)
              << alpha_degrees(h.alpha_bin, db.meta.n_theta) << std::setprecision(6) << '\n';
  }
  return 0;
}

// ---- train

struct TrainArgs {
  std::string scans, poses, out, loss_csv, init;
};

int cmd_train(const Common& common, const TrainArgs& a) {
  const RunConfig cfg = resolve(common);
  const std::vector<FramePose> frames = load_pose_csv(a.poses);
  const fs::path dir = a.scans;

  TrainingSet data;
  data.frames = frames;
  std::vector<Sinogram> sinos(frames.size());
  parallel_for(frames.size(), [&](std::size_t i) {
    sinos[i] = cfg.pipeline.sinogram(load_scan(scan_path(dir, frames[i].id)));
  });
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (sum(sinos[i].data()) == 0.0) {
      throw EmptyInput(scan_path(dir, frames[i].id).string() + ": no points inside the grid window");
    }
    data.store.sinograms[frames[i].id] = std::move(sinos[i]);
  }

  // Singleton classes get queries from a random planar motion of the scan.
  const DescriptorPipeline pipeline = cfg.pipeline;
  data.store.augment = [pipeline, dir](std::uint64_t id, Rng& rng) {
    std::uniform_real_distribution<double> yaw(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> shift(-2.0, 2.0);
    const Se2Pose t(shift(rng), shift(rng), yaw(rng));
    return pipeline.sinogram(apply_se2(load_scan(scan_path(dir, id)), t));
  };

  std::size_t last_epoch = 0;
  double epoch_sum = 0.0;
  std::size_t epoch_count = 0;
  auto report = [&](const LossRecord& r) {
    if (r.epoch != last_epoch && epoch_count > 0) {
      std::cout << "epoch " << last_epoch << " mean_loss " << epoch_sum / static_cast<double>(epoch_count) << "\n";
      epoch_sum = 0.0;
      epoch_count = 0;
    }
    last_epoch = r.epoch;
    epoch_sum += r.loss;
    ++epoch_count;
  };

  TrainResult result = a.init.empty() ? train(data, cfg.train, network_config_for(cfg), report)
                                      : train(data, cfg.train, load_network(a.init), report);
  if (epoch_count > 0) {
    std::cout << "epoch " << last_epoch << " mean_loss " << epoch_sum / static_cast<double>(epoch_count) << "\n";
  }
  save_checkpoint(a.out, result.net, result.head);
  if (!a.loss_csv.empty()) write_loss_csv(a.loss_csv, result.history);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// ---- evaluate

struct EvaluateArgs {
  std::string db, queries, query_poses, weights, summary, pr_csv;
};

int cmd_evaluate(const Common& common, const EvaluateArgs& a) {
  const RunConfig cfg = resolve(common);
  const Network net = load_network(a.weights);
  const PlaceDatabase db = load_database(a.db, network_fingerprint(net));
  if (db.meta.fingerprint_mismatch) {
    std::cerr << "error: " << a.db << " was built with different weights\n";
    return 1;
  }
  const std::vector<FramePose> frames = load_pose_csv(a.query_poses);
  const fs::path dir = a.queries;

  std::vector<QueryOutcome> outcomes(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Descriptor q = cfg.pipeline.describe(load_scan(scan_path(dir, frames[i].id)), net);
    const std::vector<QueryHit> hits = query_topk(db, q, 1);
    QueryOutcome& o = outcomes[i];
    o.query_id = frames[i].id;
    if (!hits.empty()) {
      o.top1 = hits.front().frame_id;
      o.score = hits.front().score;
    }
    o.truth = ground_truth(frames[i].pose, db, cfg.pos_thresh);
  }

  EvalSummary s;
  s.queries = outcomes.size();
  for (const QueryOutcome& o : outcomes) s.with_truth += o.has_truth() ? 1 : 0;
  s.recall_at_1 = recall_at_1(outcomes);
  const PrCurve curve = pr_curve(scored_results(outcomes));
  s.max_f1 = curve.max_f1;
  s.auc = curve.auc;

  std::cout << format_summary(s);
  if (!a.summary.empty()) write_summary(a.summary, s);
  if (!a.pr_csv.empty()) write_pr_csv(a.pr_csv, curve);
  return 0;
}

// ---- case-study

struct CaseStudyArgs {
  std::string scan, weights;
  double tx = 5.0, ty = 3.0, yaw_deg = 30.0;
  std::uint64_t scene_seed = 7;
};

int cmd_case_study(const Common& common, const CaseStudyArgs& a) {
  const RunConfig cfg = resolve(common);
  const PointCloud pc = a.scan.empty() ? synth_scene(a.scene_seed, 12, 0.7 * cfg.pipeline.grid.extent)
                                       : load_scan(a.scan);
  ConvKernel kernel;
  if (a.weights.empty()) {
    NetworkConfig nc;
    nc.layers = {{4, 5, Activation::none}};
    kernel = init_network(nc, cfg.seed).layers.front().kernel;
  } else {
    kernel = load_network(a.weights).layers.front().kernel;
  }
  CaseStudyParams params;
  params.grid = cfg.pipeline.grid;
  params.n_theta = cfg.pipeline.n_theta;
  params.n_tau = cfg.pipeline.n_tau;
  const PointCloud filtered =
      cfg.pipeline.remove_ground ? remove_ground(pc, cfg.pipeline.z_min, cfg.pipeline.z_max) : pc;
  const CaseStudyReport rep =
      case_study(filtered, Se2Pose(a.tx, a.ty, a.yaw_deg * std::numbers::pi / 180.0), kernel, params);
  std::cout << std::setprecision(6) << "sg_diff=" << rep.sg_diff << "\npg_diff=" << rep.pg_diff << "\n";
  return 0;
}

// ---- synth

struct SynthArgs {
  std::string out, mode = "places";
  std::size_t count = 10;
  std::size_t queries_per_place = 0;
  double spacing = 100.0;
  double length = 100.0;
  double step = 5.0;
  double max_translation = 5.0;
  int clusters = 12;
  double scene_extent = 0.0;
  std::string identity_weights;
};

// World points seen from `pose`, cropped to the sensor window.
PointCloud observe(const PointCloud& world, const Se2Pose& pose, double extent) {
  PointCloud local = apply_se2(world, pose.inverse());
  std::erase_if(local.points, [extent](const Point& p) { return std::abs(p.x) >= extent || std::abs(p.y) >= extent; });
  local.pose = pose;
  return local;
}

int cmd_synth(const Common& common, const SynthArgs& a) {
  const RunConfig cfg = resolve(common);
  const double extent = cfg.pipeline.grid.extent;
  const double scene_extent = a.scene_extent > 0.0 ? a.scene_extent : 0.7 * extent;
  const fs::path out = a.out;
  fs::create_directories(out / "scans");

  std::vector<FramePose> frames;
  std::vector<FramePose> query_frames;
  if (a.mode == "places") {
    if (a.queries_per_place > 0) fs::create_directories(out / "queries");
    std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uint64_t qid = 0;
    for (std::size_t i = 0; i < a.count; ++i) {
      const PointCloud scene = synth_scene(cfg.seed * 1000003ULL + i, a.clusters, scene_extent);
      const Se2Pose place(static_cast<double>(i) * a.spacing, 0.0, 0.0);
      save_point_cloud_bin(scan_path(out / "scans", i), scene);
      frames.push_back({i, place});
      for (std::size_t j = 0; j < a.queries_per_place; ++j) {
        // Content motion t; the sensor moved by its inverse.
        const double r = a.max_translation * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const Se2Pose t(r * std::cos(phi), r * std::sin(phi), 2.0 * std::numbers::pi * unit(rng));
        save_point_cloud_bin(scan_path(out / "queries", qid), apply_se2(scene, t));
        query_frames.push_back({qid, compose(place, t.inverse())});
        ++qid;
      }
    }
  } else if (a.mode == "trajectory") {
    if (!(a.step > 0.0) || !(a.length >= 0.0)) throw InvalidArgument("--step must be positive");
    const double half = 0.5 * a.length + extent;
    const int clusters = std::max(1, static_cast<int>(a.clusters * std::ceil(half / scene_extent)));
    const PointCloud world = apply_se2(synth_scene(cfg.seed, clusters, half), Se2Pose(0.5 * a.length, 0.0, 0.0));
    const auto n = static_cast<std::size_t>(std::floor(a.length / a.step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
      const Se2Pose pose(static_cast<double>(i) * a.step, 0.0, 0.0);
      save_point_cloud_bin(scan_path(out / "scans", i), observe(world, pose, extent));
      frames.push_back({i, pose});
    }
  } else {
    throw InvalidArgument("--mode must be places or trajectory");
  }
  save_pose_csv(out / "poses.csv", frames);
  if (!query_frames.empty()) save_pose_csv(out / "query_poses.csv", query_frames);
  if (!a.identity_weights.empty()) save_network(a.identity_weights, identity_network());
  std::cout << "wrote " << frames.size() << " scans";
  if (!query_frames.empty()) std::cout << " and " << query_frames.size() << " queries";
  std::cout << " to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sinoplace: rotation-equivariant sinogram descriptors for lidar place recognition"};
  app.require_subcommand(1);
  Common common;

  BuildDbArgs bd;
  auto* build_db = app.add_subcommand("build-db", "describe keyframes of a posed scan sequence into a database");
  add_common(build_db, common);
  build_db->add_option("--scans", bd.scans, "directory of NNNNNN.bin scans")->required();
  build_db->add_option("--poses", bd.poses, "pose CSV (id,x,y,yaw)")->required();
  build_db->add_option("--weights", bd.weights, "weights or checkpoint file")->required();
  build_db->add_option("--out", bd.out, "database file to write")->required();

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "rank database entries against one scan");
  add_common(query, common);
  query->add_option("--db", qa.db, "database file")->required();
  query->add_option("--scan", qa.scan, "query scan (.bin)")->required();
  query->add_option("--weights", qa.weights, "weights used to build the database")->required();
  query->add_option("-k,--k", qa.k, "number of results");

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "episodic one-shot training");
  add_common(trainc, common);
  trainc->add_option("--scans", ta.scans, "directory of NNNNNN.bin scans")->required();
  trainc->add_option("--poses", ta.poses, "pose CSV")->required();
  trainc->add_option("--out", ta.out, "checkpoint to write")->required();
  trainc->add_option("--loss-csv", ta.loss_csv, "per-episode loss history");
  trainc->add_option("--init", ta.init, "start from these weights instead of a fresh init");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Recall@1 and PR curve of a query set against a database");
  add_common(evaluate, common);
  evaluate->add_option("--db", ea.db, "database file")->required();
  evaluate->add_option("--queries", ea.queries, "directory of query scans")->required();
  evaluate->add_option("--query-poses", ea.query_poses, "query pose CSV")->required();
  evaluate->add_option("--weights", ea.weights, "weights used to build the database")->required();
  evaluate->add_option("--summary", ea.summary, "key=value summary file");
  evaluate->add_option("--pr-csv", ea.pr_csv, "PR curve CSV");

  CaseStudyArgs ca;
  auto* case_cmd = app.add_subcommand("case-study", "sinogram vs polar gram difference under a planar motion");
  add_common(case_cmd, common);
  case_cmd->add_option("--scan", ca.scan, "scan to use instead of the synthetic scene");
  case_cmd->add_option("--scene-seed", ca.scene_seed, "synthetic scene seed");
  case_cmd->add_option("--weights", ca.weights, "take the first layer kernel from these weights");
  case_cmd->add_option("--tx", ca.tx, "translation x (m)");
  case_cmd->add_option("--ty", ca.ty, "translation y (m)");
  case_cmd->add_option("--yaw-deg", ca.yaw_deg, "rotation (degrees)");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "write synthetic scans and poses");
  add_common(synth, common);
  synth->add_option("--out", sa.out, "output directory")->required();
  synth->add_option("--mode", sa.mode, "places or trajectory")->check(CLI::IsMember({"places", "trajectory"}));
  synth->add_option("--count", sa.count, "places mode: number of places");
  synth->add_option("--spacing", sa.spacing, "places mode: distance between places (m)");
  synth->add_option("--queries-per-place", sa.queries_per_place, "places mode: perturbed copies per place");
  synth->add_option("--max-translation", sa.max_translation, "places mode: query translation bound (m)");
  synth->add_option("--length", sa.length, "trajectory mode: path length (m)");
  synth->add_option("--step", sa.step, "trajectory mode: frame spacing (m)");
  synth->add_option("--clusters", sa.clusters, "object clusters per scene");
  synth->add_option("--scene-extent", sa.scene_extent, "half-width of generated scenes (m)");
  synth->add_option("--identity-weights", sa.identity_weights, "also write an identity network here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*build_db) return cmd_build_db(common, bd);
    if (*query) return cmd_query(common, qa);
    if (*trainc) return cmd_train(common, ta);
    if (*evaluate) return cmd_evaluate(common, ea);
    if (*case_cmd) return cmd_case_study(common, ca);
    if (*synth) return cmd_synth(common, sa);
  } catch (const BadConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
