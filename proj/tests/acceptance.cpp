// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sinoplace/errors.hpp"
#include "sinoplace/evaluation.hpp"
#include "sinoplace/featnet.hpp"
#include "sinoplace/matcher.hpp"
#include "sinoplace/oneshot.hpp"
#include "sinoplace/retrieval.hpp"
#include "sinoplace/sinogram.hpp"
#include "sinoplace/weights_io.hpp"

using namespace sinoplace;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

FeatureMap shift_feature_rows(const FeatureMap& f, long k) {
  FeatureMap out(f.channels(), f.rows(), f.cols());
  const auto n = static_cast<long>(f.rows());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    for (long r = 0; r < n; ++r) {
      const auto dst = static_cast<std::size_t>(((r + k) % n + n) % n);
      for (std::size_t j = 0; j < f.cols(); ++j) out.at(c, dst, j) = f.at(c, static_cast<std::size_t>(r), j);
    }
  }
  return out;
}

Sinogram shift_tau(const Sinogram& s, long m) {
  Grid g(s.n_theta(), s.n_tau());
  const auto n = static_cast<long>(s.n_tau());
  for (std::size_t r = 0; r < s.n_theta(); ++r) {
    for (long j = 0; j < n; ++j) g(r, static_cast<std::size_t>(((j + m) % n + n) % n)) = s.data()(r, static_cast<std::size_t>(j));
  }
  return Sinogram(g, s.tau_step());
}

// Random small stack with random biases on top of the seeded init.
Network random_network(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> layers(1, 3), chans(1, 4), kidx(0, 2);
  std::bernoulli_distribution relu(0.5);
  NetworkConfig cfg;
  const int n = layers(rng);
  for (int i = 0; i < n; ++i) {
    cfg.layers.push_back({static_cast<std::size_t>(chans(rng)), static_cast<std::size_t>(1 + 2 * kidx(rng)),
                          relu(rng) ? Activation::relu : Activation::none});
  }
  Network net = init_network(cfg, rng());
  std::normal_distribution<double> b(0.0, 0.3);
  for (Layer& l : net.layers) {
    for (double& v : l.kernel.bias) v = b(rng);
  }
  return net;
}

// Catmull-Rom resample of a row moved right by `bins` (fractional), zero outside.
std::vector<double> shift_cubic(std::span<const double> row, double bins) {
  const auto n = static_cast<long>(row.size());
  auto at = [&](long i) { return i < 0 || i >= n ? 0.0 : row[static_cast<std::size_t>(i)]; };
  std::vector<double> out(row.size());
  for (long k = 0; k < n; ++k) {
    const double src = static_cast<double>(k) - bins;
    const double fl = std::floor(src);
    const long i = static_cast<long>(fl);
    const double t = src - fl;
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    out[static_cast<std::size_t>(k)] =
        p1 + 0.5 * t * (p2 - p0 + t * (2 * p0 - 5 * p1 + 4 * p2 - p3 + t * (3 * (p1 - p2) + p3 - p0)));
  }
  return out;
}

long circular_bin_distance(long a, long b, long n) {
  const long d = ((a - b) % n + n) % n;
  return std::min(d, n - d);
}

// ---- 1
Outcome rotation_equivariance() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const GridSpec spec{};
  std::uniform_int_distribution<long> kb(1, 119);
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < 50; ++i) {
    BevImage img;
    switch (i % 3) {
      case 0: img = rasterize_bev(synth_scene(1000 + i, 12, 45.0), spec); break;
      case 1: img = oracle::random_disc_image(rng, spec, 0.3, 0.95); break;
      default: img = oracle::random_disc_image(rng, spec, 0.05, 0.95); break;
    }
    const long k = kb(rng);
    const double alpha = kTwoPi * static_cast<double>(k) / 120.0;
    const double e = relative_l2(circular_shift_rows(radon(img), k).data(), radon(rotate_bev(img, alpha)).data());
    worst = std::max(worst, e);
    ok = ok && e <= 0.08;
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 30.0, fmt("worst relative L2 %.4f over 50 fixtures (limit 0.08), %.1f s", worst, secs)};
}

// ---- 2
Outcome translation_law() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(102);
  const GridSpec spec{};
  const double p = spec.pillar();
  std::uniform_int_distribution<int> d(-6, 6);
  double worst_fixture = 0.0;
  double worst_row = 0.0;
  std::size_t rows_used = 0;
  std::size_t rows_clipped = 0;
  for (int i = 0; i < 12; ++i) {
    const PointCloud pc = synth_scene(2000 + i, 12, 40.0);
    int dx = 0, dy = 0;
    while (dx == 0 && dy == 0) {
      dx = d(rng);
      dy = d(rng);
    }
    const Sinogram a = radon(rasterize_bev(pc, spec));
    const Sinogram b = radon(rasterize_bev(apply_se2(pc, Se2Pose(dx * p, dy * p, 0.0)), spec));
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < a.n_theta(); ++r) {
      const auto row = a.data().row(r);
      const double bins = expected_tau_shift(dx * p, dy * p, a.theta(r)) / a.tau_step();
      // support of the row, moved by the predicted shift, must stay inside
      long lo = -1, hi = -1;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] > 0.0) {
          if (lo < 0) lo = static_cast<long>(j);
          hi = static_cast<long>(j);
        }
      }
      if (lo < 0) continue;
      if (lo + bins < 2.0 || hi + bins > static_cast<double>(row.size()) - 3.0) {
        ++rows_clipped;
        continue;
      }
      const auto pred = shift_cubic(row, bins);
      double n2 = 0.0, d2 = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double e = b.data()(r, j) - pred[j];
        n2 += e * e;
        d2 += b.data()(r, j) * b.data()(r, j);
      }
      if (d2 > 0.0) worst_row = std::max(worst_row, std::sqrt(n2 / d2));
      num += n2;
      den += d2;
      ++rows_used;
    }
    worst_fixture = std::max(worst_fixture, std::sqrt(num / den));
  }
  const double secs = seconds_since(t0);
  return {worst_fixture <= 0.08 && secs < 30.0,
          fmt("worst per-fixture relative L2 %.4f (limit 0.08), worst single row %.4f, %zu rows used, %zu "
              "clipped, %.1f s",
              worst_fixture, worst_row, rows_used, rows_clipped, secs)};
}

// ---- 3
Outcome conv_equivariance() {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<long> shift(1, 23);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Network net = random_network(rng);
    const Sinogram s(testing::random_grid(rng, 24, 30, -1.0, 1.0), 1.0);
    const long k = shift(rng);
    const FeatureMap a = extract_features(net, circular_shift_rows(s, k));
    const FeatureMap b = shift_feature_rows(extract_features(net, s), k);
    for (std::size_t j = 0; j < a.values().size(); ++j) worst = std::max(worst, std::abs(a.values()[j] - b.values()[j]));
  }
  return {worst <= 1e-9, fmt("max abs difference %.3g over 20 nets (limit 1e-9)", worst)};
}

// ---- 4
Outcome dft_invariance() {
  std::mt19937_64 rng(104);
  std::uniform_int_distribution<long> shift(1, 40);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Network net = random_network(rng);
    const std::size_t n_tau = i % 2 == 0 ? 32 : 27;
    const Sinogram s(testing::random_grid(rng, 16, n_tau), 1.0);
    const Descriptor a = forward(net, s).descriptor;
    const Descriptor b = forward(net, shift_tau(s, shift(rng))).descriptor;
    worst = std::max(worst, testing::max_abs_diff(a.data, b.data));
  }
  return {worst <= 1e-9, fmt("max abs difference %.3g over 20 nets and shifts (limit 1e-9)", worst)};
}

// ---- 5
Outcome correlation_oracle() {
  std::mt19937_64 rng(105);
  double worst = 0.0;
  double worst_sym = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t rows = 8 + 2 * static_cast<std::size_t>(i % 12);
    const Descriptor a = normalize_descriptor({testing::random_grid(rng, rows, 9), false});
    const Descriptor b = normalize_descriptor({testing::random_grid(rng, rows, 9), false});
    const MatchResult ab = correlate(a, b);
    const MatchResult ba = correlate(b, a);
    const auto ref = oracle::correlation_profile(a.data, b.data);
    for (std::size_t s = 0; s < rows; ++s) {
      worst = std::max(worst, std::abs(ab.profile[s] - ref[s]));
      worst_sym = std::max(worst_sym, std::abs(ab.profile[s] - ba.profile[(rows - s) % rows]));
    }
    worst_sym = std::max(worst_sym, std::abs(ab.score - ba.score));
  }
  return {worst <= 1e-9 && worst_sym <= 1e-12,
          fmt("oracle max diff %.3g (limit 1e-9), symmetry max diff %.3g (limit 1e-12)", worst, worst_sym)};
}

// ---- 6
Outcome gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(106);
  const Network net = init_network(parse_network_config("layer 3 3 relu; layer 2 3 none"), 6);
  Episode ep;
  ep.n_way = 2;
  const Sinogram a(testing::random_grid(rng, 16, 16), 1.0), b(testing::random_grid(rng, 16, 16), 1.0);
  ep.support = {{0, 0, false, a}, {1, 1, false, b}};
  Sinogram qa = circular_shift_rows(a, 5), qb = circular_shift_rows(b, 11);
  std::uniform_real_distribution<double> jitter(0.0, 0.2);
  for (double& v : qa.data().values()) v += jitter(rng);
  for (double& v : qb.data().values()) v += jitter(rng);
  ep.queries = {{0, 2, false, qa}, {1, 3, false, qb}};
  const GradCheckReport r = grad_check(net, ClassifierHead{5.0, 0.3}, ep, 1e-5);
  const double secs = seconds_since(t0);
  return {r.max_rel_error <= 1e-4 && r.checked > 0 && secs < 60.0,
          fmt("max relative error %.3g over %zu parameters (limit 1e-4), %.1f s", r.max_rel_error, r.checked, secs)};
}

// ---- 7
Outcome end_to_end() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(107);
  const DescriptorPipeline pipe;
  const Network net = identity_network();
  std::vector<PosedScan> places;
  for (std::uint64_t i = 0; i < 50; ++i) places.push_back({i, Se2Pose(100.0 * i, 0, 0), synth_scene(5000 + i, 12, 45.0)});
  const PlaceDatabase db = build_database(places, net, pipe, 1.0);

  std::uniform_real_distribution<double> yaw(0.0, kTwoPi), u(0.0, 1.0);
  std::vector<QueryOutcome> outcomes;
  std::size_t rot_ok = 0;
  for (const PosedScan& place : places) {
    const double r = 5.0 * std::sqrt(u(rng));
    const double phi = yaw(rng);
    const Se2Pose t(r * std::cos(phi), r * std::sin(phi), yaw(rng));
    const PointCloud q = apply_se2(place.cloud, t);
    const auto hits = query_topk(db, pipe.describe(q, net), 1);
    const Se2Pose q_pose = compose(place.pose, t.inverse());
    outcomes.push_back({place.id, hits[0].frame_id, hits[0].score, ground_truth(q_pose, db)});
    const long k = expected_row_shift(t.yaw(), 120);
    const long got = hits[0].alpha_bin;
    if (std::min(circular_bin_distance(got, k, 120), circular_bin_distance(got, k + 60, 120)) <= 1) ++rot_ok;
  }
  const double recall = recall_at_1(outcomes);
  const double rot_frac = static_cast<double>(rot_ok) / static_cast<double>(outcomes.size());
  const double secs = seconds_since(t0);
  return {recall == 1.0 && rot_frac >= 0.95 && secs < 120.0,
          fmt("Recall@1 %.3f (need 1.00), rotation within 1 bin for %.0f%% (need 95%%), %.1f s", recall,
              100.0 * rot_frac, secs)};
}

// ---- 8
DescriptorPipeline small_pipeline() {
  DescriptorPipeline pipe;
  pipe.grid = GridSpec{32, 20.0};
  pipe.n_theta = 32;
  pipe.n_tau = 32;
  return pipe;
}

// 30 classes, three views each: random yaw and up to 1.5 m offset per view.
const TrainingSet& training_set() {
  static const TrainingSet ts = [] {
    const DescriptorPipeline pipe = small_pipeline();
    TrainingSet out;
    std::mt19937_64 rng(108);
    std::uniform_real_distribution<double> off(-1.5, 1.5), yaw(0.0, kTwoPi);
    std::uint64_t id = 0;
    for (std::size_t c = 0; c < 30; ++c) {
      const PointCloud scene = synth_scene(8000 + c, 8, 14.0);
      const Se2Pose anchor(100.0 * static_cast<double>(c), 0.0, 0.0);
      for (int m = 0; m < 3; ++m) {
        // the sensor sits at anchor * t^-1 and sees apply_se2(scene, t)
        const Se2Pose t(off(rng), off(rng), yaw(rng));
        out.frames.push_back({id, compose(anchor, t.inverse())});
        out.store.sinograms[id] = pipe.sinogram(apply_se2(scene, t));
        ++id;
      }
    }
    return out;
  }();
  return ts;
}

TrainConfig scaled_train_config() {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.episodes_per_epoch = 20;
  cfg.seed = 8;
  return cfg;
}

NetworkConfig head_config(Aggregation a) {
  NetworkConfig c = a == Aggregation::multi_gap ? widen_last_layer(default_network_config(), 16)
                                                : default_network_config();
  c.aggregation = a;
  return c;
}

// Trained once per head and shared between criteria.
const TrainResult& trained(Aggregation a) {
  static std::map<Aggregation, TrainResult> cache;
  auto it = cache.find(a);
  if (it == cache.end()) it = cache.emplace(a, train(training_set(), scaled_train_config(), head_config(a))).first;
  return it->second;
}

Outcome training_effectiveness() {
  const auto t0 = Clock::now();
  const TrainResult& a = trained(Aggregation::dft_mag);
  const TrainResult b = train(training_set(), scaled_train_config(), head_config(Aggregation::dft_mag));
  const std::size_t epochs = scaled_train_config().epochs;
  auto epoch_mean = [&](std::size_t e) {
    double s = 0.0;
    std::size_t n = 0;
    for (const LossRecord& r : a.history) {
      if (r.epoch == e) {
        s += r.loss;
        ++n;
      }
    }
    return s / static_cast<double>(n);
  };
  const double first = epoch_mean(0);
  const double last = epoch_mean(epochs - 1);
  const bool same = a.history == b.history && a.net == b.net && a.head == b.head;
  const double secs = seconds_since(t0);
  return {last <= 0.5 * first && same,
          fmt("mean CE first epoch %.4f, last epoch %.4f (ratio %.3f, limit 0.5), rerun bit-identical: %s, %.1f s",
              first, last, last / first, same ? "yes" : "no", secs)};
}

// ---- 9
Outcome case_study_sweep() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(109);
  const CaseStudyParams params;
  const double p = params.grid.pillar();
  const ConvKernel kernel = init_network(default_network_config(), 0).layers.front().kernel;
  std::uniform_real_distribution<double> mag(2.0 * p, 8.0), ang(0.0, kTwoPi);
  std::size_t wins = 0;
  double worst_sg = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PointCloud pc = remove_ground(synth_scene(9000 + i, 12, 0.7 * params.grid.extent));
    const double m = mag(rng), dir = ang(rng);
    const Se2Pose t(m * std::cos(dir), m * std::sin(dir), ang(rng));
    const CaseStudyReport r = case_study(pc, t, kernel, params);
    if (r.sg_diff < r.pg_diff) ++wins;
    worst_sg = std::max(worst_sg, r.sg_diff);
  }
  const double secs = seconds_since(t0);
  return {wins >= 95, fmt("sg_diff < pg_diff on %zu/100 fixtures (need 95), worst sg_diff %.4f, %.1f s", wins, worst_sg, secs)};
}

// ---- 10
// Each head is trained with the same data and budget as criterion 8, then
// ranked on 200 unseen scenes at three fixed query degradation levels.
struct Degradation {
  const char* name;
  double dropout;
  double max_offset;
  int clutter;
};

double heldout_recall(const Network& net, const Degradation& deg) {
  const DescriptorPipeline pipe = small_pipeline();
  const int n = 200;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> yaw(0.0, kTwoPi), u(0.0, 1.0), spot(-14.0, 14.0);
  std::uniform_real_distribution<double> off(-deg.max_offset, deg.max_offset);
  std::vector<DatabaseEntry> entries;
  std::vector<Sinogram> queries;
  for (int i = 0; i < n; ++i) {
    const PointCloud scene = synth_scene(12000 + static_cast<std::uint64_t>(i), 8, 14.0);
    entries.push_back({static_cast<std::uint64_t>(i), Se2Pose(), forward(net, pipe.sinogram(scene)).descriptor});
    const PointCloud moved = apply_se2(scene, Se2Pose(off(rng), off(rng), yaw(rng)));
    PointCloud q;
    for (const Point& p : moved.points) {
      if (u(rng) >= deg.dropout) q.points.push_back(p);
    }
    for (int c = 0; c < deg.clutter; ++c) q.points.push_back({spot(rng), spot(rng), 1.0, 0.0});
    queries.push_back(pipe.sinogram(q));
  }
  const PlaceDatabase db = make_database(std::move(entries), 0);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const auto h = query_topk(db, normalize_descriptor(forward(net, queries[static_cast<std::size_t>(i)]).descriptor), 1);
    if (h[0].frame_id == static_cast<std::uint64_t>(i)) ++hits;
  }
  return static_cast<double>(hits) / n;
}

Outcome ablation_order() {
  const auto t0 = Clock::now();
  const Aggregation order[] = {Aggregation::dft_mag, Aggregation::multi_gap, Aggregation::gap, Aggregation::gmp};
  const Degradation levels[] = {{"mild", 0.3, 1.5, 0}, {"moderate", 0.5, 3.0, 30}, {"heavy", 0.6, 4.0, 60}};
  const double slack = 0.02;
  bool ok = true;
  std::string detail;
  for (const Degradation& deg : levels) {
    double r[4];
    for (int h = 0; h < 4; ++h) r[h] = heldout_recall(trained(order[h]).net, deg);
    const bool level_ok = r[0] + slack >= r[1] && r[1] + slack >= r[2] && r[2] + slack >= r[3];
    ok = ok && level_ok;
    detail += fmt("%s%s dft_mag %.3f multi_gap %.3f gap %.3f gmp %.3f%s", detail.empty() ? "" : "; ", deg.name, r[0],
                  r[1], r[2], r[3], level_ok ? "" : " (order broken)");
  }
  const double secs = seconds_since(t0);
  return {ok, fmt("Recall@1 %s (slack 0.02), %.1f s", detail.c_str(), secs)};
}

// ---- 11
template <typename F>
bool rejects_corrupt(F&& load) {
  try {
    load();
  } catch (const CorruptFile&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome persistence() {
  testing::TempDir dir("accept");
  std::mt19937_64 rng(111);
  std::vector<DatabaseEntry> entries;
  for (std::uint64_t i = 0; i < 12; ++i) {
    entries.push_back({i * 3 + 1, Se2Pose(rng() % 1000 * 0.37, rng() % 1000 * -0.11, 0.1 * static_cast<double>(i)),
                       normalize_descriptor({testing::random_grid(rng, 120, 61), false})});
  }
  const Network net = init_network(default_network_config(), 3);
  const PlaceDatabase db = make_database(std::move(entries), network_fingerprint(net));
  save_database(db, dir / "a.drdb");
  const PlaceDatabase db2 = load_database(dir / "a.drdb", network_fingerprint(net));
  save_database(db2, dir / "b.drdb");
  const bool db_ok = db2.entries == db.entries && db2.meta.fingerprint == db.meta.fingerprint &&
                     !db2.meta.fingerprint_mismatch &&
                     read_file_bytes(dir / "a.drdb") == read_file_bytes(dir / "b.drdb");

  save_network(dir / "w.drnw", net);
  const Network net2 = load_network(dir / "w.drnw");
  save_network(dir / "w2.drnw", net2);
  const bool w_ok = net2 == net && read_file_bytes(dir / "w.drnw") == read_file_bytes(dir / "w2.drnw");

  bool corrupt_ok = true;
  for (const char* name : {"a.drdb", "w.drnw"}) {
    const bool is_db = name[0] == 'a';
    const auto bytes = read_file_bytes(dir / name);
    auto load = [&](const std::filesystem::path& p) {
      return [&, p] {
        if (is_db) load_database(p);
        else load_network(p);
      };
    };
    const auto trunc = dir / "trunc.bin";
    write_file_bytes(trunc, std::span(bytes.data(), bytes.size() - 5));
    corrupt_ok = corrupt_ok && rejects_corrupt(load(trunc));
    auto bad = bytes;
    bad[1] ^= 0x20;
    write_file_bytes(dir / "magic.bin", bad);
    corrupt_ok = corrupt_ok && rejects_corrupt(load(dir / "magic.bin"));
    auto longer = bytes;
    longer.push_back(1);
    write_file_bytes(dir / "long.bin", longer);
    corrupt_ok = corrupt_ok && rejects_corrupt(load(dir / "long.bin"));
  }
  return {db_ok && w_ok && corrupt_ok,
          fmt("database round trip %s, weights round trip %s, corrupted files rejected %s", db_ok ? "exact" : "DIFFERS",
              w_ok ? "exact" : "DIFFERS", corrupt_ok ? "yes" : "NO")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sinogram rotation equivariance", rotation_equivariance},
      {"sinogram translation law", translation_law},
      {"circular conv row-shift equivariance", conv_equivariance},
      {"dft magnitude tau-shift invariance", dft_invariance},
      {"correlation oracle and symmetry", correlation_oracle},
      {"episode loss gradient check", gradient_check},
      {"end-to-end synthetic place recognition", end_to_end},
      {"training effectiveness and determinism", training_effectiveness},
      {"sinogram vs polar gram case study", case_study_sweep},
      {"aggregation head ordering", ablation_order},
      {"persistence round trip and corruption", persistence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
