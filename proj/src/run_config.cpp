#include "sinoplace/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sinoplace/errors.hpp"

namespace sinoplace {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw BadConfig(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw BadConfig(key + ": expected a real number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw BadConfig(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_unsigned<std::size_t>(key, trim(item)));
  return out;
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
  return {"grid.cells",       "grid.extent",       "sino.n_theta",   "sino.n_tau",
          "ground.enabled",   "ground.z_min",      "ground.z_max",   "net.config",
          "train.n_way",      "train.n_query",     "train.epochs",   "train.episodes",
          "train.lr",         "train.weight_decay", "train.milestones", "train.gamma",
          "train.loss",       "train.margin",      "train.head_init_w", "class.same_thresh",
          "class.diff_thresh", "db.sampling_dist", "eval.pos_thresh", "query.k",
          "seed",             "threads"};
}

void RunConfig::set(const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string v = trim(value_in);
  if (key == "grid.cells") pipeline.grid.size_cells = parse_unsigned<std::size_t>(key, v);
  else if (key == "grid.extent") pipeline.grid.extent = parse_real(key, v);
  else if (key == "sino.n_theta") pipeline.n_theta = parse_unsigned<std::size_t>(key, v);
  else if (key == "sino.n_tau") pipeline.n_tau = parse_unsigned<std::size_t>(key, v);
  else if (key == "ground.enabled") pipeline.remove_ground = parse_bool(key, v);
  else if (key == "ground.z_min") pipeline.z_min = parse_real(key, v);
  else if (key == "ground.z_max") pipeline.z_max = parse_real(key, v);
  else if (key == "net.config") net_config_path = v;
  else if (key == "train.n_way") train.n_way = parse_unsigned<std::size_t>(key, v);
  else if (key == "train.n_query") train.n_query = parse_unsigned<std::size_t>(key, v);
  else if (key == "train.epochs") train.epochs = parse_unsigned<std::size_t>(key, v);
  else if (key == "train.episodes") train.episodes_per_epoch = parse_unsigned<std::size_t>(key, v);
  else if (key == "train.lr") train.lr = parse_real(key, v);
  else if (key == "train.weight_decay") train.weight_decay = parse_real(key, v);
  else if (key == "train.milestones") train.lr_milestones = parse_list(key, v);
  else if (key == "train.gamma") train.lr_gamma = parse_real(key, v);
  else if (key == "train.loss") {
    try {
      train.loss = parse_loss_kind(v);
    } catch (const Error&) {
      throw BadConfig(key + ": unknown loss '" + v + "'");
    }
  }
  else if (key == "train.margin") train.triplet_margin = parse_real(key, v);
  else if (key == "train.head_init_w") train.head_init_w = parse_real(key, v);
  else if (key == "class.same_thresh") train.same_thresh = parse_real(key, v);
  else if (key == "class.diff_thresh") train.diff_thresh = parse_real(key, v);
  else if (key == "db.sampling_dist") sampling_dist = parse_real(key, v);
  else if (key == "eval.pos_thresh") pos_thresh = parse_real(key, v);
  else if (key == "query.k") top_k = parse_unsigned<std::size_t>(key, v);
  else if (key == "seed") {
    seed = parse_unsigned<std::uint64_t>(key, v);
    train.seed = seed;
  }
  else if (key == "threads") threads = parse_unsigned<unsigned>(key, v);
  else throw BadConfig("unknown key '" + key + "'");
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw BadConfig("expected key=value, got '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::validate() const {
  try {
    pipeline.grid.validate();
  } catch (const Error& e) {
    throw BadConfig(e.what());
  }
  if (pipeline.n_theta < 8 || pipeline.n_theta % 2 != 0) throw BadConfig("sino.n_theta must be even and >= 8");
  if (pipeline.n_tau < 8) throw BadConfig("sino.n_tau must be >= 8");
  if (!(pipeline.z_min < pipeline.z_max)) throw BadConfig("ground.z_min must be below ground.z_max");
  train.validate();
  if (!(sampling_dist > 0.0)) throw BadConfig("db.sampling_dist must be positive");
  if (!(pos_thresh > 0.0)) throw BadConfig("eval.pos_thresh must be positive");
  if (top_k == 0) throw BadConfig("query.k must be >= 1");
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      base.set(line);
    } catch (const BadConfig& e) {
      throw BadConfig("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str(), std::move(base));
  } catch (const BadConfig& e) {
    throw BadConfig(path.string() + ": " + e.what());
  }
}

NetworkConfig network_config_for(const RunConfig& cfg) {
  if (cfg.net_config_path.empty()) return default_network_config();
  std::ifstream in(cfg.net_config_path);
  if (!in) throw IoError("cannot open network config " + cfg.net_config_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network_config(ss.str());
}

}  // namespace sinoplace
