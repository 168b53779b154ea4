#include "lfo/ddpg.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "lfo/util.hpp"

namespace lfo {

void AgentConfig::validate() const {
  if (obs_dim <= 0 || action_dim <= 0)
    throw ConfigError("agent dimensions must be positive");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("hidden layer sizes must be positive");
  if (gamma < 0.0 || gamma > 1.0)
    throw ConfigError("discount factor must lie in [0, 1]");
  if (buffer_capacity < 1) throw ConfigError("replay capacity must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (warmup < batch_size)
    throw ConfigError("warmup must cover at least one batch");
  if (lr_actor <= 0 || lr_critic <= 0)
    throw ConfigError("learning rates must be positive");
  if (target_mode == TargetMode::Soft && (tau <= 0.0 || tau > 1.0))
    throw ConfigError("soft target blend must lie in (0, 1]");
  if (target_mode == TargetMode::HardPeriodic && target_period < 1)
    throw ConfigError("hard target period must be >= 1");
  if (ou_theta < 0.0 || ou_theta > 1.0)
    throw ConfigError("noise mean-reversion must lie in [0, 1]");
  if (sigma_start < 0 || sigma_end < 0)
    throw ConfigError("noise scales must be non-negative");
  if (decay_episodes < 1) throw ConfigError("noise decay length must be >= 1");
  if (!(action_low < action_high))
    throw ConfigError("action bounds must satisfy low < high");
  if (reward_scale <= 0) throw ConfigError("reward scale must be positive");
  if (obs_scale.size() != 0 && obs_scale.size() != obs_dim)
    throw ConfigError("observation scale length must match obs_dim");
  for (int i = 0; i < obs_scale.size(); ++i)
    if (obs_scale[i] <= 0)
      throw ConfigError("observation scales must be positive");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : cap_(capacity) {
  if (capacity < 1) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffer::push(Experience e) {
  if (store_.size() < cap_) {
    store_.push_back(std::move(e));
  } else {
    store_[next_] = std::move(e);
  }
  next_ = (next_ + 1) % cap_;
}

std::vector<std::size_t> ReplayBuffer::sample(int m,
                                              std::mt19937_64& rng) const {
  if (m < 1 || static_cast<std::size_t>(m) > store_.size() * 1000000)
    throw ConfigError("bad sample count");
  if (store_.empty()) throw ConfigError("cannot sample an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, store_.size() - 1);
  std::vector<std::size_t> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = pick(rng);
  return idx;
}

Eigen::MatrixXd squash_actions(const Eigen::MatrixXd& y, double lo, double hi) {
  return ((y.array() + 1.0) * (0.5 * (hi - lo)) + lo).matrix();
}

double critic_loss_grad(const Mlp& critic, const Eigen::MatrixXd& sa,
                        const Eigen::VectorXd& targets, Mlp::Grad& g) {
  const int m = static_cast<int>(sa.cols());
  if (targets.size() != m)
    throw ConfigError("one target per state-action column required");
  Mlp::Tape tape;
  Eigen::MatrixXd q = critic.forward(sa, tape);  // 1 x m
  Eigen::RowVectorXd err = q.row(0) - targets.transpose();
  double loss = err.squaredNorm() / m;
  Eigen::MatrixXd upstream = (2.0 / m) * err;
  critic.backward(tape, upstream, g);
  return loss;
}

double actor_objective_grad(const Mlp& actor, const Mlp& critic,
                            const Eigen::MatrixXd& states, double lo, double hi,
                            Mlp::Grad& g) {
  const int m = static_cast<int>(states.cols());
  Mlp::Tape tape_a;
  Eigen::MatrixXd y = actor.forward(states, tape_a);
  Eigen::MatrixXd a = squash_actions(y, lo, hi);

  Eigen::MatrixXd sa(states.rows() + a.rows(), m);
  sa << states, a;
  Mlp::Tape tape_c;
  Eigen::MatrixXd q = critic.forward(sa, tape_c);
  double objective = q.row(0).sum() / m;

  // gradient of the batch mean through the critic inputs; the critic's own
  // parameter gradients are discarded
  Mlp::Grad scratch = critic.make_grad();
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Constant(1, m, 1.0 / m);
  Eigen::MatrixXd dsa = critic.backward(tape_c, upstream, scratch);
  Eigen::MatrixXd dq_da = dsa.bottomRows(a.rows());

  actor.backward(tape_a, (0.5 * (hi - lo)) * dq_da, g);
  return objective;
}

double actor_ascent_step(Mlp& actor, Adam& opt, const Eigen::MatrixXd& states,
                         const Eigen::MatrixXd& dq_da, double lo, double hi) {
  Mlp::Tape tape;
  actor.forward(states, tape);
  Mlp::Grad g = actor.make_grad();
  actor.backward(tape, (0.5 * (hi - lo)) * dq_da, g);
  double norm = std::sqrt(g.squared_norm());
  // the optimizer minimizes; flip the sign to ascend
  for (Eigen::MatrixXd& w : g.w) w = -w;
  for (Eigen::VectorXd& b : g.b) b = -b;
  opt.step(actor, g);
  return norm;
}

namespace {

constexpr std::uint64_t kInitSalt = 0x5DEECE66DULL;
constexpr std::uint64_t kNoiseSalt = 0xB5297A4D3F84C2E1ULL;
constexpr std::uint64_t kSampleSalt = 0x68E31DA4A22DBF59ULL;

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s;
  s.push_back(in);
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

DdpgAgent::DdpgAgent(AgentConfig cfg)
    : cfg_(std::move(cfg)), replay_(std::max<std::size_t>(cfg_.buffer_capacity, 1)) {
  cfg_.validate();
  actor_ = Mlp(net_sizes(cfg_.obs_dim, cfg_.hidden, cfg_.action_dim),
               Act::Relu, Act::Tanh);
  critic_ = Mlp(net_sizes(cfg_.obs_dim + cfg_.action_dim, cfg_.hidden, 1),
                Act::Relu, Act::Identity);

  std::mt19937_64 rng_init(mix_seed(cfg_.seed, kInitSalt));
  actor_.init_uniform(rng_init);
  actor_.init_last_layer(3e-3, rng_init);  // start near the midpoint action
  critic_.init_uniform(rng_init);
  actor_t_ = actor_;
  critic_t_ = critic_;

  opt_actor_ = Adam(cfg_.lr_actor);
  opt_critic_ = Adam(cfg_.lr_critic);
  opt_actor_.attach(actor_);
  opt_critic_.attach(critic_);

  rng_noise_ = std::mt19937_64(mix_seed(cfg_.seed, kNoiseSalt));
  rng_sample_ = std::mt19937_64(mix_seed(cfg_.seed, kSampleSalt));
  noise_ = Eigen::VectorXd::Zero(cfg_.action_dim);
}

Eigen::VectorXd DdpgAgent::scaled(const Eigen::VectorXd& obs) const {
  if (obs.size() != cfg_.obs_dim)
    throw ConfigError("observation has wrong dimension");
  if (cfg_.obs_scale.size() == 0) return obs;
  return obs.cwiseProduct(cfg_.obs_scale);
}

double DdpgAgent::sigma_for_episode(int episode) const {
  if (episode <= 0) return cfg_.sigma_start;
  if (episode >= cfg_.decay_episodes) return cfg_.sigma_end;
  double f = static_cast<double>(episode) / cfg_.decay_episodes;
  return cfg_.sigma_start + (cfg_.sigma_end - cfg_.sigma_start) * f;
}

void DdpgAgent::noise_reset() { noise_.setZero(); }

Eigen::VectorXd DdpgAgent::select_action(const Eigen::VectorXd& obs,
                                         int episode, bool explore) {
  Eigen::VectorXd a =
      squash_actions(actor_.forward(scaled(obs)), cfg_.action_low,
                     cfg_.action_high);
  if (!explore) return a;

  double sigma = sigma_for_episode(episode);
  std::normal_distribution<double> nd(0.0, 1.0);
  if (cfg_.noise == NoiseKind::Ou) {
    for (int i = 0; i < noise_.size(); ++i)
      noise_[i] += -cfg_.ou_theta * noise_[i] + sigma * nd(rng_noise_);
    a += noise_;
  } else {
    for (int i = 0; i < a.size(); ++i) a[i] += sigma * nd(rng_noise_);
  }
  return a.cwiseMax(cfg_.action_low).cwiseMin(cfg_.action_high);
}

void DdpgAgent::push_experience(const Eigen::VectorXd& obs,
                                const Eigen::VectorXd& action, double reward,
                                const Eigen::VectorXd& next_obs, bool done) {
  if (action.size() != cfg_.action_dim)
    throw ConfigError("action has wrong dimension");
  if (!obs.allFinite() || !action.allFinite() || !next_obs.allFinite() ||
      !std::isfinite(reward))
    throw ConfigError("experience must be finite");
  Experience e;
  e.s = scaled(obs);
  e.a = action;
  e.r = reward * cfg_.reward_scale;
  e.s_next = scaled(next_obs);
  e.done = done;
  replay_.push(std::move(e));
}

bool DdpgAgent::ready() const {
  return replay_.size() >=
         static_cast<std::size_t>(std::max(cfg_.warmup, cfg_.batch_size));
}

void DdpgAgent::gather(const std::vector<std::size_t>& idx, Eigen::MatrixXd& s,
                       Eigen::MatrixXd& a, Eigen::VectorXd& r,
                       Eigen::MatrixXd& s2, Eigen::VectorXd& done) const {
  const int m = static_cast<int>(idx.size());
  s.resize(cfg_.obs_dim, m);
  a.resize(cfg_.action_dim, m);
  r.resize(m);
  s2.resize(cfg_.obs_dim, m);
  done.resize(m);
  for (int i = 0; i < m; ++i) {
    const Experience& e = replay_.at(idx[i]);
    s.col(i) = e.s;
    a.col(i) = e.a;
    r[i] = e.r;
    s2.col(i) = e.s_next;
    done[i] = e.done ? 1.0 : 0.0;
  }
}

double DdpgAgent::critic_update() {
  if (replay_.size() < static_cast<std::size_t>(cfg_.batch_size))
    throw ConfigError("not enough stored experience for a batch");
  std::vector<std::size_t> idx = replay_.sample(cfg_.batch_size, rng_sample_);
  Eigen::MatrixXd s, a, s2;
  Eigen::VectorXd r, done;
  gather(idx, s, a, r, s2, done);

  // bootstrap through the frozen target networks
  Eigen::MatrixXd a2 = squash_actions(actor_t_.forward(s2), cfg_.action_low,
                                      cfg_.action_high);
  Eigen::MatrixXd sa2(s2.rows() + a2.rows(), s2.cols());
  sa2 << s2, a2;
  Eigen::RowVectorXd q2 = critic_t_.forward(sa2).row(0);
  Eigen::VectorXd y =
      r + cfg_.gamma * (1.0 - done.array()).matrix().cwiseProduct(
                           q2.transpose());

  Eigen::MatrixXd sa(s.rows() + a.rows(), s.cols());
  sa << s, a;
  Mlp::Grad g = critic_.make_grad();
  double loss = critic_loss_grad(critic_, sa, y, g);
  opt_critic_.step(critic_, g);
  return loss;
}

double DdpgAgent::actor_update() {
  if (replay_.size() < static_cast<std::size_t>(cfg_.batch_size))
    throw ConfigError("not enough stored experience for a batch");
  std::vector<std::size_t> idx = replay_.sample(cfg_.batch_size, rng_sample_);
  Eigen::MatrixXd s, a, s2;
  Eigen::VectorXd r, done;
  gather(idx, s, a, r, s2, done);

  Mlp::Grad g = actor_.make_grad();
  actor_objective_grad(actor_, critic_, s, cfg_.action_low, cfg_.action_high,
                       g);
  double norm = std::sqrt(g.squared_norm());
  for (Eigen::MatrixXd& w : g.w) w = -w;
  for (Eigen::VectorXd& b : g.b) b = -b;
  opt_actor_.step(actor_, g);
  return norm;
}

void DdpgAgent::update_targets() {
  ++round_;
  if (cfg_.target_mode == TargetMode::Soft) {
    soft_update(actor_, actor_t_, cfg_.tau);
    soft_update(critic_, critic_t_, cfg_.tau);
  } else if (round_ % cfg_.target_period == 0) {
    actor_t_ = actor_;
    critic_t_ = critic_;
  }
}

double DdpgAgent::initial_q(const Eigen::VectorXd& obs) const {
  Eigen::VectorXd s = scaled(obs);
  Eigen::VectorXd a = squash_actions(actor_.forward(s), cfg_.action_low,
                                     cfg_.action_high);
  Eigen::VectorXd sa(s.size() + a.size());
  sa << s, a;
  return critic_.forward(sa)[0];
}

// ---------------------------------------------------------------------------
// checkpoint serialization

namespace {

std::uint32_t crc32_bytes(const std::string& data) {
  static std::uint32_t table[256];
  static bool built = false;
  if (!built) {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    built = true;
  }
  std::uint32_t crc = 0xFFFFFFFFu;
  for (unsigned char byte : data)
    crc = table[(crc ^ byte) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

struct Writer {
  std::string buf;

  template <class T>
  void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T));
  }
  void doubles(const double* p, std::size_t n) {
    buf.append(reinterpret_cast<const char*>(p), n * sizeof(double));
  }
  void mat(const Eigen::MatrixXd& m) { doubles(m.data(), m.size()); }
  void vec(const Eigen::VectorXd& v) { doubles(v.data(), v.size()); }
  void net(const Mlp& n) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(n.sizes().size()));
    for (int s : n.sizes()) pod<std::int32_t>(s);
    pod<std::uint8_t>(static_cast<std::uint8_t>(n.hidden_act()));
    pod<std::uint8_t>(static_cast<std::uint8_t>(n.output_act()));
    for (std::size_t l = 0; l < n.weights().size(); ++l) {
      mat(n.weights()[l]);
      vec(n.biases()[l]);
    }
  }
  void adam(const Adam& o) {
    pod<std::int64_t>(o.t_);
    for (std::size_t l = 0; l < o.mw_.size(); ++l) {
      mat(o.mw_[l]);
      mat(o.vw_[l]);
      vec(o.mb_[l]);
      vec(o.vb_[l]);
    }
  }
};

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw ConfigError("corrupt checkpoint: truncated");
  }
  template <class T>
  T pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  void doubles(double* p, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(p, buf.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
  }
  void into_net(Mlp& n) {
    std::uint32_t ns = pod<std::uint32_t>();
    if (ns < 2 || ns > 64) throw ConfigError("corrupt checkpoint: bad layout");
    std::vector<int> sizes(ns);
    for (auto& s : sizes) {
      s = pod<std::int32_t>();
      if (s <= 0 || s > 1000000)
        throw ConfigError("corrupt checkpoint: bad layer size");
    }
    std::uint8_t hid = pod<std::uint8_t>(), out = pod<std::uint8_t>();
    if (hid > 2 || out > 2)
      throw ConfigError("corrupt checkpoint: bad activation");
    n = Mlp(sizes, static_cast<Act>(hid), static_cast<Act>(out));
    for (std::size_t l = 0; l < n.weights().size(); ++l) {
      doubles(n.weights()[l].data(), n.weights()[l].size());
      doubles(n.biases()[l].data(), n.biases()[l].size());
    }
  }
  void into_adam(Adam& o, const Mlp& net) {
    o.attach(net);
    o.t_ = pod<std::int64_t>();
    for (std::size_t l = 0; l < o.mw_.size(); ++l) {
      doubles(o.mw_[l].data(), o.mw_[l].size());
      doubles(o.vw_[l].data(), o.vw_[l].size());
      doubles(o.mb_[l].data(), o.mb_[l].size());
      doubles(o.vb_[l].data(), o.vb_[l].size());
    }
  }
};

constexpr char kMagic[4] = {'L', 'F', 'O', '1'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void DdpgAgent::save(const std::string& path) const {
  Writer w;
  w.buf.append(kMagic, 4);
  w.pod<std::uint32_t>(kVersion);

  w.pod<std::int32_t>(cfg_.obs_dim);
  w.pod<std::int32_t>(cfg_.action_dim);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(cfg_.hidden.size()));
  for (int h : cfg_.hidden) w.pod<std::int32_t>(h);
  w.pod<double>(cfg_.gamma);
  w.pod<std::uint64_t>(cfg_.buffer_capacity);
  w.pod<std::int32_t>(cfg_.batch_size);
  w.pod<std::int32_t>(cfg_.warmup);
  w.pod<double>(cfg_.lr_actor);
  w.pod<double>(cfg_.lr_critic);
  w.pod<std::uint8_t>(static_cast<std::uint8_t>(cfg_.target_mode));
  w.pod<std::int32_t>(cfg_.target_period);
  w.pod<double>(cfg_.tau);
  w.pod<std::uint8_t>(static_cast<std::uint8_t>(cfg_.noise));
  w.pod<double>(cfg_.ou_theta);
  w.pod<double>(cfg_.sigma_start);
  w.pod<double>(cfg_.sigma_end);
  w.pod<std::int32_t>(cfg_.decay_episodes);
  w.pod<double>(cfg_.action_low);
  w.pod<double>(cfg_.action_high);
  w.pod<double>(cfg_.reward_scale);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(cfg_.obs_scale.size()));
  w.doubles(cfg_.obs_scale.data(), cfg_.obs_scale.size());
  w.pod<std::uint64_t>(cfg_.seed);

  w.net(actor_);
  w.net(critic_);
  w.net(actor_t_);
  w.net(critic_t_);
  w.adam(opt_actor_);
  w.adam(opt_critic_);
  w.pod<std::int64_t>(round_);
  w.pod<std::uint32_t>(crc32_bytes(w.buf));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw ConfigError("short write on checkpoint: " + path);
}

DdpgAgent DdpgAgent::load(const std::string& path, int expect_obs,
                          int expect_act) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw ConfigError("not a checkpoint file: " + path);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  std::string payload = buf.substr(0, buf.size() - 4);
  if (crc32_bytes(payload) != stored_crc)
    throw ConfigError("corrupt checkpoint: checksum mismatch");

  Reader r{payload, 4};
  std::uint32_t version = r.pod<std::uint32_t>();
  if (version != kVersion)
    throw ConfigError("unsupported checkpoint version " +
                      std::to_string(version));

  AgentConfig cfg;
  cfg.obs_dim = r.pod<std::int32_t>();
  cfg.action_dim = r.pod<std::int32_t>();
  std::uint32_t nh = r.pod<std::uint32_t>();
  if (nh > 62) throw ConfigError("corrupt checkpoint: bad layout");
  cfg.hidden.assign(nh, 0);
  for (auto& h : cfg.hidden) h = r.pod<std::int32_t>();
  cfg.gamma = r.pod<double>();
  cfg.buffer_capacity = r.pod<std::uint64_t>();
  cfg.batch_size = r.pod<std::int32_t>();
  cfg.warmup = r.pod<std::int32_t>();
  cfg.lr_actor = r.pod<double>();
  cfg.lr_critic = r.pod<double>();
  cfg.target_mode = static_cast<TargetMode>(r.pod<std::uint8_t>());
  cfg.target_period = r.pod<std::int32_t>();
  cfg.tau = r.pod<double>();
  cfg.noise = static_cast<NoiseKind>(r.pod<std::uint8_t>());
  cfg.ou_theta = r.pod<double>();
  cfg.sigma_start = r.pod<double>();
  cfg.sigma_end = r.pod<double>();
  cfg.decay_episodes = r.pod<std::int32_t>();
  cfg.action_low = r.pod<double>();
  cfg.action_high = r.pod<double>();
  cfg.reward_scale = r.pod<double>();
  std::uint32_t nscale = r.pod<std::uint32_t>();
  if (nscale > 1000000) throw ConfigError("corrupt checkpoint: bad layout");
  cfg.obs_scale.resize(nscale);
  r.doubles(cfg.obs_scale.data(), nscale);
  cfg.seed = r.pod<std::uint64_t>();

  if (expect_obs >= 0 && cfg.obs_dim != expect_obs)
    throw ConfigError("checkpoint observation dimension does not match");
  if (expect_act >= 0 && cfg.action_dim != expect_act)
    throw ConfigError("checkpoint action dimension does not match");

  DdpgAgent agent(cfg);
  r.into_net(agent.actor_);
  r.into_net(agent.critic_);
  r.into_net(agent.actor_t_);
  r.into_net(agent.critic_t_);
  r.into_adam(agent.opt_actor_, agent.actor_);
  r.into_adam(agent.opt_critic_, agent.critic_);
  agent.round_ = r.pod<std::int64_t>();
  if (r.pos != payload.size())
    throw ConfigError("corrupt checkpoint: trailing bytes");

  if (agent.actor_.input_dim() != cfg.obs_dim ||
      agent.actor_.output_dim() != cfg.action_dim ||
      agent.critic_.input_dim() != cfg.obs_dim + cfg.action_dim)
    throw ConfigError("corrupt checkpoint: network shapes disagree");
  return agent;
}

}  // namespace lfo
