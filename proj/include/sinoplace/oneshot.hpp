#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sinoplace/featnet.hpp"
#include "sinoplace/ingest.hpp"
#include "sinoplace/sinogram.hpp"

namespace sinoplace {

using Rng = std::mt19937_64;

struct PlaceClass {
  std::size_t class_id = 0;
  Se2Pose anchor;
  std::vector<std::uint64_t> members;  // frame ids, trajectory order
};

struct ClassTable {
  std::vector<PlaceClass> classes;
  std::vector<std::uint64_t> buffered;  // frames in the (same, diff] band, never used
};

/// Greedy anchor clustering in trajectory order. A frame joins the nearest
/// anchor within same_thresh; a frame whose nearest anchor lies in
/// (same_thresh, diff_thresh] is buffered; anything farther founds a class.
ClassTable build_classes(std::span<const FramePose> frames, double same_thresh = 10.0,
                         double diff_thresh = 20.0);

enum class LossKind { cross_entropy, triplet, triplet_2dft };
const char* to_string(LossKind k);
LossKind parse_loss_kind(const std::string& name);  // throws BadConfig

struct TrainConfig {
  std::size_t n_way = 24;
  std::size_t n_query = 6;  // per episode, spread over the ways round-robin
  std::size_t epochs = 20;
  std::size_t episodes_per_epoch = 60;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::vector<std::size_t> lr_milestones{5, 12};
  double lr_gamma = 0.1;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::cross_entropy;
  double triplet_margin = 0.5;
  double same_thresh = 10.0;
  double diff_thresh = 20.0;
  // Starting softmax scale. Correlations of normalized descriptors lie in
  // [-1, 1], so small scales cap how peaked the softmax can get.
  double head_init_w = 30.0;

  void validate() const;  // throws BadConfig
};

// Learning rate in effect during `epoch` (zero-based) under the step schedule.
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

/// softmax(w * C + b) over a correlation vector.
struct ClassifierHead {
  double w = 30.0;
  double b = 0.0;

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

std::vector<double> classify(const ClassifierHead& head, std::span<const double> corr);

/// Sinograms keyed by frame id. `augment`, when set, produces a perturbed
/// sinogram of a frame; it is used for query ways whose class has a single
/// member.
struct SinogramStore {
  std::map<std::uint64_t, Sinogram> sinograms;
  std::function<Sinogram(std::uint64_t frame_id, Rng& rng)> augment;
};

struct EpisodeItem {
  std::size_t class_id = 0;
  std::uint64_t frame_id = 0;
  bool augmented = false;
  Sinogram sinogram;
};

struct Episode {
  std::vector<EpisodeItem> support;  // one shot per way
  std::vector<EpisodeItem> queries;
  std::size_t n_way = 0;

  // Index into `support` of the way whose class matches queries[q].
  std::size_t label(std::size_t q) const;
};

Episode sample_episode(std::span<const PlaceClass> classes, const SinogramStore& store,
                       const TrainConfig& cfg, Rng& rng);

struct HeadGradients {
  double w = 0.0;
  double b = 0.0;
};

struct LossResult {
  double value = 0.0;
  NetworkGradients net;
  HeadGradients head;
};

/// Mean loss over the episode's queries and its exact gradient.
///   cross_entropy: -log softmax(w * C + b)[true way], C the correlation
///     vector; gradients flow through each correlation's argmax shift.
///   triplet: max(0, |a - p| - |a - n| + margin) on flattened normalized
///     descriptors, n the nearest support of another way.
///   triplet_2dft: the same on dft2_mag descriptors.
LossResult episode_loss(const Network& net, const ClassifierHead& head, const Episode& ep,
                        LossKind loss, double triplet_margin = 0.5);
double episode_loss_value(const Network& net, const ClassifierHead& head, const Episode& ep,
                          LossKind loss, double triplet_margin = 0.5);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;  // entries with |g| > 1e-6
};

// Central differences over every network and head parameter.
GradCheckReport grad_check(const Network& net, const ClassifierHead& head, const Episode& ep,
                           double step, LossKind loss = LossKind::cross_entropy,
                           double triplet_margin = 0.5);

struct TrainingSet {
  std::vector<FramePose> frames;
  SinogramStore store;
};

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t episode = 0;
  double loss = 0.0;
  double lr = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

struct TrainResult {
  Network net;
  ClassifierHead head;
  std::vector<LossRecord> history;
};

using TrainProgress = std::function<void(const LossRecord&)>;

/// Adam with decoupled weight decay on conv weights, step learning-rate
/// schedule, one update per episode. Deterministic for a fixed cfg.seed.
TrainResult train(const TrainingSet& data, const TrainConfig& cfg, Network initial,
                  const TrainProgress& progress = {});
TrainResult train(const TrainingSet& data, const TrainConfig& cfg, const NetworkConfig& net_cfg,
                  const TrainProgress& progress = {});

// "epoch,episode,loss,lr" with a header row.
void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> history);

// DRNW weights followed by the head scalars w, b as float64.
void save_checkpoint(const std::filesystem::path& path, const Network& net, const ClassifierHead& head);

struct Checkpoint {
  Network net;
  ClassifierHead head;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sinoplace
