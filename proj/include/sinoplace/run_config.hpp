#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sinoplace/oneshot.hpp"
#include "sinoplace/retrieval.hpp"

namespace sinoplace {

/// Flat key=value settings shared by the command-line tools. Unknown keys
/// and malformed values throw BadConfig as soon as they are applied;
/// cross-field checks run in validate(), which parsing calls at the end.
///
/// Keys:
///   grid.cells grid.extent sino.n_theta sino.n_tau
///   ground.enabled ground.z_min ground.z_max
///   net.config (path to a network config file)
///   train.n_way train.n_query train.epochs train.episodes train.lr
///   train.weight_decay train.milestones (comma list) train.gamma
///   train.loss train.margin train.head_init_w
///   class.same_thresh class.diff_thresh
///   db.sampling_dist eval.pos_thresh query.k seed threads
struct RunConfig {
  DescriptorPipeline pipeline;
  std::string net_config_path;
  TrainConfig train;
  double sampling_dist = 20.0;
  double pos_thresh = 10.0;
  std::size_t top_k = 5;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void set(const std::string& key, const std::string& value);
  // "key=value" form, as given on the command line.
  void set(const std::string& assignment);
  void validate() const;

  static std::vector<std::string> keys();
};

// '#' starts a comment; blank lines are skipped. Errors name the line.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// Network config from net.config, or the default stack when unset.
NetworkConfig network_config_for(const RunConfig& cfg);

}  // namespace sinoplace
