#include "sinoplace/oneshot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "sinoplace/errors.hpp"
#include "sinoplace/matcher.hpp"
#include "sinoplace/parallel.hpp"
#include "sinoplace/weights_io.hpp"

namespace sinoplace {

ClassTable build_classes(std::span<const FramePose> frames, double same_thresh, double diff_thresh) {
  if (frames.empty()) throw EmptyInput("build_classes: no frames");
  if (!(same_thresh < diff_thresh)) throw InvalidArgument("same_thresh must be below diff_thresh");
  ClassTable table;
  for (const FramePose& f : frames) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t c = 0; c < table.classes.size(); ++c) {
      const double d = planar_distance(f.pose, table.classes[c].anchor);
      if (d < best) {
        best = d;
        best_idx = c;
      }
    }
    if (best <= same_thresh) {
      table.classes[best_idx].members.push_back(f.id);
    } else if (best <= diff_thresh) {
      table.buffered.push_back(f.id);
    } else {
      table.classes.push_back({table.classes.size(), f.pose, {f.id}});
    }
  }
  return table;
}

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::triplet: return "triplet";
    case LossKind::triplet_2dft: return "triplet_2dft";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  for (auto k : {LossKind::cross_entropy, LossKind::triplet, LossKind::triplet_2dft}) {
    if (name == to_string(k)) return k;
  }
  throw BadConfig("unknown loss '" + name + "'");
}

void TrainConfig::validate() const {
  if (n_way < 1 || n_query < 1 || epochs < 1 || episodes_per_epoch < 1) {
    throw BadConfig("n_way, n_query, epochs and episodes_per_epoch must all be >= 1");
  }
  if (!(lr > 0.0)) throw BadConfig("lr must be positive");
  if (!(weight_decay >= 0.0)) throw BadConfig("weight_decay must be non-negative");
  if (!(lr_gamma > 0.0 && lr_gamma <= 1.0)) throw BadConfig("lr_gamma must lie in (0, 1]");
  if (!(triplet_margin >= 0.0)) throw BadConfig("triplet_margin must be non-negative");
  if (!(same_thresh < diff_thresh)) throw BadConfig("same_thresh must be below diff_thresh");
  if (!std::isfinite(head_init_w)) throw BadConfig("head_init_w must be finite");
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.lr;
  for (std::size_t m : cfg.lr_milestones) {
    if (epoch >= m) lr *= cfg.lr_gamma;
  }
  return lr;
}

std::vector<double> classify(const ClassifierHead& head, std::span<const double> corr) {
  std::vector<double> p(corr.size());
  if (corr.empty()) return p;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < corr.size(); ++i) {
    p[i] = head.w * corr[i] + head.b;
    mx = std::max(mx, p[i]);
  }
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t Episode::label(std::size_t q) const {
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i].class_id == queries.at(q).class_id) return i;
  }
  throw ShapeMismatch("query class " + std::to_string(queries[q].class_id) + " missing from support");
}

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

const Sinogram& lookup(const SinogramStore& store, std::uint64_t id) {
  auto it = store.sinograms.find(id);
  if (it == store.sinograms.end()) throw InvalidArgument("no sinogram for frame " + std::to_string(id));
  return it->second;
}

}  // namespace

Episode sample_episode(std::span<const PlaceClass> classes, const SinogramStore& store,
                       const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!classes[i].members.empty()) order.push_back(i);
  }
  std::shuffle(order.begin(), order.end(), rng);

  // Greedily keep classes that are far enough from every class already chosen.
  std::vector<std::size_t> ways;
  for (std::size_t idx : order) {
    if (ways.size() == cfg.n_way) break;
    const bool far = std::all_of(ways.begin(), ways.end(), [&](std::size_t w) {
      return planar_distance(classes[w].anchor, classes[idx].anchor) > cfg.diff_thresh;
    });
    if (far) ways.push_back(idx);
  }
  if (ways.size() < cfg.n_way) {
    throw InsufficientClasses("need " + std::to_string(cfg.n_way) + " mutually separated classes, found " +
                              std::to_string(ways.size()));
  }

  Episode ep;
  ep.n_way = cfg.n_way;
  std::vector<std::size_t> shot_member(cfg.n_way);
  for (std::size_t w = 0; w < cfg.n_way; ++w) {
    const PlaceClass& pc = classes[ways[w]];
    shot_member[w] = uniform_index(rng, pc.members.size());
    const std::uint64_t id = pc.members[shot_member[w]];
    ep.support.push_back({pc.class_id, id, false, lookup(store, id)});
  }
  for (std::size_t q = 0; q < cfg.n_query; ++q) {
    const std::size_t w = q % cfg.n_way;
    const PlaceClass& pc = classes[ways[w]];
    if (pc.members.size() >= 2) {
      // Any member other than the shot.
      std::size_t m = uniform_index(rng, pc.members.size() - 1);
      if (m >= shot_member[w]) ++m;
      const std::uint64_t id = pc.members[m];
      ep.queries.push_back({pc.class_id, id, false, lookup(store, id)});
    } else {
      if (!store.augment) {
        throw InsufficientClasses("class " + std::to_string(pc.class_id) +
                                  " has a single member and no augmentation is configured");
      }
      const std::uint64_t id = pc.members.front();
      ep.queries.push_back({pc.class_id, id, true, store.augment(id, rng)});
    }
  }
  return ep;
}

namespace {

struct MemberPass {
  ForwardResult forward;
  Descriptor normalized;
};

std::vector<MemberPass> run_members(const Network& net, const Episode& ep, LossKind loss) {
  const std::size_t n = ep.support.size() + ep.queries.size();
  std::vector<MemberPass> passes(n);
  const Aggregation agg = loss == LossKind::triplet_2dft ? Aggregation::dft2_mag : net.aggregation;
  parallel_for(n, [&](std::size_t i) {
    const EpisodeItem& item = i < ep.support.size() ? ep.support[i] : ep.queries[i - ep.support.size()];
    passes[i].forward = forward(net, item.sinogram, agg);
    passes[i].normalized = normalize_descriptor(passes[i].forward.descriptor);
  });
  return passes;
}

double distance(const Grid& a, const Grid& b) {
  double acc = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc);
}

// grad += scale * (a - b) / |a - b|
void add_unit_direction(Grid& grad, const Grid& a, const Grid& b, double dist, double scale) {
  if (dist == 0.0) return;
  auto g = grad.values();
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * (x[i] - y[i]) / dist;
}

// Loss value and gradients with respect to the normalized descriptors.
double loss_on_descriptors(const std::vector<MemberPass>& passes, const ClassifierHead& head,
                           const Episode& ep, LossKind loss, double margin,
                           std::vector<Grid>* grads, HeadGradients* head_grad) {
  const std::size_t n_way = ep.support.size();
  const std::size_t n_q = ep.queries.size();
  if (n_q == 0 || n_way == 0) throw ShapeMismatch("episode has no queries or no support");
  const double inv_q = 1.0 / static_cast<double>(n_q);
  double total = 0.0;

  for (std::size_t q = 0; q < n_q; ++q) {
    const std::size_t label = ep.label(q);
    const Descriptor& qd = passes[n_way + q].normalized;

    if (loss == LossKind::cross_entropy) {
      std::vector<double> scores(n_way);
      std::vector<long> shifts(n_way);
      for (std::size_t i = 0; i < n_way; ++i) {
        const MatchResult m = correlate(qd, passes[i].normalized, false);
        scores[i] = m.score;
        shifts[i] = m.alpha_bin;
      }
      const std::vector<double> p = classify(head, scores);
      // -log p via log-sum-exp for accuracy near saturation.
      double mx = -std::numeric_limits<double>::infinity();
      for (double s : scores) mx = std::max(mx, head.w * s + head.b);
      double lse = 0.0;
      for (double s : scores) lse += std::exp(head.w * s + head.b - mx);
      total += (mx + std::log(lse)) - (head.w * scores[label] + head.b);

      if (!grads) continue;
      const std::size_t rows = qd.data.rows();
      const std::size_t cols = qd.data.cols();
      for (std::size_t i = 0; i < n_way; ++i) {
        const double dz = (p[i] - (i == label ? 1.0 : 0.0)) * inv_q;
        head_grad->w += dz * scores[i];
        head_grad->b += dz;
        const double ds = head.w * dz;
        if (ds == 0.0) continue;
        // score = sum_t q(t) s(t + shift)
        const Grid& sd = passes[i].normalized.data;
        Grid& gq = (*grads)[n_way + q];
        Grid& gs = (*grads)[i];
        for (std::size_t t = 0; t < rows; ++t) {
          const std::size_t u = (t + static_cast<std::size_t>(shifts[i])) % rows;
          for (std::size_t w = 0; w < cols; ++w) {
            gq(t, w) += ds * sd(u, w);
            gs(u, w) += ds * qd.data(t, w);
          }
        }
      }
    } else {
      if (n_way < 2) throw ShapeMismatch("triplet loss needs at least two ways");
      const Grid& a = qd.data;
      const Grid& pos = passes[label].normalized.data;
      const double d_ap = distance(a, pos);
      std::size_t neg = n_way;
      double d_an = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n_way; ++i) {
        if (i == label) continue;
        const double d = distance(a, passes[i].normalized.data);
        if (d < d_an) {
          d_an = d;
          neg = i;
        }
      }
      const double l = d_ap - d_an + margin;
      if (l <= 0.0) continue;
      total += l;
      if (!grads) continue;
      const Grid& nd = passes[neg].normalized.data;
      add_unit_direction((*grads)[n_way + q], a, pos, d_ap, inv_q);
      add_unit_direction((*grads)[label], a, pos, d_ap, -inv_q);
      add_unit_direction((*grads)[n_way + q], a, nd, d_an, -inv_q);
      add_unit_direction((*grads)[neg], a, nd, d_an, inv_q);
    }
  }
  return total * inv_q;
}

}  // namespace

LossResult episode_loss(const Network& net, const ClassifierHead& head, const Episode& ep,
                        LossKind loss, double triplet_margin) {
  const std::vector<MemberPass> passes = run_members(net, ep, loss);
  std::vector<Grid> grads;
  grads.reserve(passes.size());
  for (const MemberPass& p : passes) {
    grads.emplace_back(p.normalized.data.rows(), p.normalized.data.cols());
  }
  LossResult result;
  result.value = loss_on_descriptors(passes, head, ep, loss, triplet_margin, &grads, &result.head);

  std::vector<NetworkGradients> member_grads(passes.size());
  parallel_for(passes.size(), [&](std::size_t i) {
    const Grid raw_grad = normalize_backward(passes[i].forward.descriptor, grads[i]);
    member_grads[i] = backward(net, passes[i].forward.tape, raw_grad);
  });
  result.net = NetworkGradients::zeros_like(net);
  for (const NetworkGradients& g : member_grads) result.net += g;
  return result;
}

double episode_loss_value(const Network& net, const ClassifierHead& head, const Episode& ep,
                          LossKind loss, double triplet_margin) {
  const std::vector<MemberPass> passes = run_members(net, ep, loss);
  return loss_on_descriptors(passes, head, ep, loss, triplet_margin, nullptr, nullptr);
}

GradCheckReport grad_check(const Network& net, const ClassifierHead& head, const Episode& ep,
                           double step, LossKind loss, double triplet_margin) {
  const LossResult analytic = episode_loss(net, head, ep, loss, triplet_margin);
  GradCheckReport report;
  auto compare = [&](double g_analytic, double g_numeric) {
    if (std::abs(g_analytic) <= 1e-6 && std::abs(g_numeric) <= 1e-6) return;
    const double denom = std::max(std::abs(g_analytic), std::abs(g_numeric));
    report.max_rel_error = std::max(report.max_rel_error, std::abs(g_analytic - g_numeric) / denom);
    ++report.checked;
  };

  Network probe = net;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto check_params = [&](std::vector<double>& params, const std::vector<double>& grads) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        params[i] = orig + step;
        const double up = episode_loss_value(probe, head, ep, loss, triplet_margin);
        params[i] = orig - step;
        const double down = episode_loss_value(probe, head, ep, loss, triplet_margin);
        params[i] = orig;
        compare(grads[i], (up - down) / (2.0 * step));
      }
    };
    check_params(probe.layers[l].kernel.weights, analytic.net.weights[l]);
    check_params(probe.layers[l].kernel.bias, analytic.net.biases[l]);
  }
  ClassifierHead h = head;
  for (double* param : {&h.w, &h.b}) {
    const double orig = *param;
    *param = orig + step;
    const double up = episode_loss_value(net, h, ep, loss, triplet_margin);
    *param = orig - step;
    const double down = episode_loss_value(net, h, ep, loss, triplet_margin);
    *param = orig;
    compare(param == &h.w ? analytic.head.w : analytic.head.b, (up - down) / (2.0 * step));
  }
  return report;
}

namespace {

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Adam(const Network& net) {
    for (const Layer& l : net.layers) {
      weights_.push_back({std::vector<double>(l.kernel.weights.size()),
                          std::vector<double>(l.kernel.weights.size())});
      biases_.push_back({std::vector<double>(l.kernel.bias.size()),
                         std::vector<double>(l.kernel.bias.size())});
    }
    head_.m.assign(2, 0.0);
    head_.v.assign(2, 0.0);
  }

  void step(Network& net, ClassifierHead& head, const LossResult& g, double lr, double decay) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto update = [&](double& p, double grad, double& m, double& v, double wd) {
      m = kBeta1 * m + (1.0 - kBeta1) * grad;
      v = kBeta2 * v + (1.0 - kBeta2) * grad * grad;
      const double m_hat = m / c1;
      const double v_hat = v / c2;
      p -= lr * (m_hat / (std::sqrt(v_hat) + kEps) + wd * p);
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& k = net.layers[l].kernel;
      for (std::size_t i = 0; i < k.weights.size(); ++i) {
        update(k.weights[i], g.net.weights[l][i], weights_[l].m[i], weights_[l].v[i], decay);
      }
      for (std::size_t i = 0; i < k.bias.size(); ++i) {
        update(k.bias[i], g.net.biases[l][i], biases_[l].m[i], biases_[l].v[i], 0.0);
      }
    }
    update(head.w, g.head.w, head_.m[0], head_.v[0], 0.0);
    update(head.b, g.head.b, head_.m[1], head_.v[1], 0.0);
  }

 private:
  std::vector<AdamMoments> weights_;
  std::vector<AdamMoments> biases_;
  AdamMoments head_;
  long t_ = 0;
};

}  // namespace

TrainResult train(const TrainingSet& data, const TrainConfig& cfg, Network initial,
                  const TrainProgress& progress) {
  cfg.validate();
  initial.validate();
  const ClassTable table = build_classes(data.frames, cfg.same_thresh, cfg.diff_thresh);
  if (table.classes.size() < cfg.n_way) {
    throw InsufficientClasses("training data has " + std::to_string(table.classes.size()) +
                              " classes; n_way is " + std::to_string(cfg.n_way));
  }

  TrainResult result{std::move(initial), ClassifierHead{cfg.head_init_w, 0.0}, {}};
  Adam adam(result.net);
  Rng rng(cfg.seed);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    for (std::size_t e = 0; e < cfg.episodes_per_epoch; ++e) {
      const Episode ep = sample_episode(table.classes, data.store, cfg, rng);
      const LossResult g = episode_loss(result.net, result.head, ep, cfg.loss, cfg.triplet_margin);
      adam.step(result.net, result.head, g, lr, cfg.weight_decay);
      result.history.push_back({epoch, e, g.value, lr});
      if (progress) progress(result.history.back());
    }
  }
  return result;
}

TrainResult train(const TrainingSet& data, const TrainConfig& cfg, const NetworkConfig& net_cfg,
                  const TrainProgress& progress) {
  return train(data, cfg, init_network(net_cfg, cfg.seed), progress);
}

void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "epoch,episode,loss,lr\n";
  for (const LossRecord& r : history) {
    out << r.epoch << ',' << r.episode << ',' << r.loss << ',' << r.lr << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const ClassifierHead& head) {
  std::vector<std::uint8_t> bytes = serialize_network(net);
  wire::Writer tail;
  tail.f64(head.w);
  tail.f64(head.b);
  bytes.insert(bytes.end(), tail.data().begin(), tail.data().end());
  write_file_bytes(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t used = 0;
  Checkpoint ck{deserialize_network(bytes, &used), {}};
  if (bytes.size() - used != kCheckpointTailBytes) throw CorruptFile(path.string() + ": missing classifier head scalars");
  wire::Reader r(std::span<const std::uint8_t>(bytes).subspan(used));
  ck.head.w = r.f64();
  ck.head.b = r.f64();
  return ck;
}

}  // namespace sinoplace
