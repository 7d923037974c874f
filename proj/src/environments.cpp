#include "hybandit/environments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "json.hpp"

namespace hybandit {

using nlohmann::json;
using nlohmann::ordered_json;

Vector sample_unit_ball(std::size_t d, CounterRng& rng, double radius) {
  if (d == 0) throw std::invalid_argument("sample_unit_ball: d must be >= 1");
  Vector v(d);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& c : v) {
      c = rng.normal();
      sq += c * c;
    }
  } while (sq == 0.0);
  const double r =
      radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(sq);
  for (double& c : v) c *= r;
  // Rounding can push the norm a hair past the radius.
  const double n = norm2(v);
  if (n > radius)
    for (double& c : v) c *= radius / n;
  return v;
}

void SyntheticEnvConfig::validate() const {
  hybandit::validate(dims);
  if (T == 0) throw std::invalid_argument("T must be positive");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw std::invalid_argument("noise_std must be nonnegative");
  if (!(S > 0.0)) throw std::invalid_argument("S must be positive");
  if (n_trials == 0) throw std::invalid_argument("n_trials must be positive");
}

SyntheticEnvironment::SyntheticEnvironment(SyntheticEnvConfig cfg)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  CounterRng rng(cfg_.env_seed, 0, 0, Purpose::Params);
  params_.S = cfg_.S;
  params_.theta = sample_unit_ball(cfg_.dims.d1, rng, cfg_.S);
  params_.betas.reserve(cfg_.dims.K);
  for (std::size_t i = 0; i < cfg_.dims.K; ++i)
    params_.betas.push_back(sample_unit_ball(cfg_.dims.d2, rng, cfg_.S));
}

ContextRound SyntheticEnvironment::context(std::size_t t) const {
  if (t >= cfg_.T) throw std::out_of_range("context: round beyond horizon");
  CounterRng rng(cfg_.env_seed, 0, t, Purpose::Context);
  ContextRound round;
  round.arms.reserve(cfg_.dims.K);
  for (std::size_t i = 0; i < cfg_.dims.K; ++i) {
    ArmFeatures f;
    f.x = sample_unit_ball(cfg_.dims.d1, rng);
    f.z = sample_unit_ball(cfg_.dims.d2, rng);
    round.arms.push_back(std::move(f));
  }
  return round;
}

SyntheticEnvironment generate_environment(const SyntheticEnvConfig& cfg) {
  return SyntheticEnvironment(cfg);
}

double draw_reward(const HybridParams& p, std::size_t arm, const Vector& x,
                   const Vector& z, double noise_std, CounterRng& rng) {
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
  const double mean = mean_reward(p, arm, x, z);
  if (noise_std == 0.0) return mean;
  return mean + noise_std * rng.normal();
}

ArmFeatures build_features(std::span<const double> user,
                           std::span<const double> arm) {
  ArmFeatures f;
  f.x.reserve(user.size() * arm.size());
  for (double u : user)
    for (double v : arm) f.x.push_back(u * v);
  f.z.assign(arm.begin(), arm.end());
  return f;
}

LearnedModel hybrid_least_squares(std::span<const Observation> data,
                                  std::size_t num_arms,
                                  const LeastSquaresOptions& opts) {
  if (data.empty()) throw std::invalid_argument("hybrid_least_squares: no data");
  if (num_arms == 0) throw std::invalid_argument("hybrid_least_squares: K must be positive");
  if (!(opts.ridge >= 0.0) || (opts.ridge == 0.0 && !opts.allow_zero_ridge))
    throw std::invalid_argument(
        "hybrid_least_squares: ridge must be positive (set allow_zero_ridge for 0)");

  const std::size_t d1 = data.front().x.size();
  const std::size_t d2 = data.front().z.size();
  if (d1 == 0 || d2 == 0)
    throw std::invalid_argument("hybrid_least_squares: empty feature vectors");
  const Dims dims{d1, d2, num_arms};

  Matrix xx(d1, d1);
  std::vector<Matrix> zz(num_arms, Matrix(d2, d2));
  std::vector<Matrix> xz(num_arms, Matrix(d1, d2));
  std::vector<std::size_t> pulls(num_arms, 0);
  Vector rhs(dims.hybrid_dim(), 0.0);

  for (const auto& o : data) {
    if (o.arm >= num_arms)
      throw std::invalid_argument("hybrid_least_squares: arm index out of range");
    if (o.x.size() != d1 || o.z.size() != d2)
      throw std::invalid_argument("hybrid_least_squares: ragged feature vectors");
    if (!std::isfinite(o.y))
      throw std::invalid_argument("hybrid_least_squares: non-finite target");
    add_outer(xx, o.x, o.x);
    add_outer(zz[o.arm], o.z, o.z);
    add_outer(xz[o.arm], o.x, o.z);
    ++pulls[o.arm];
    for (std::size_t k = 0; k < d1; ++k) rhs[k] += o.y * o.x[k];
    double* slot = rhs.data() + d1 + o.arm * d2;
    for (std::size_t k = 0; k < d2; ++k) slot[k] += o.y * o.z[k];
  }

  const BlockDesign design = BlockDesign::from_sums(
      xx, std::move(zz), std::move(xz), std::move(pulls), opts.ridge);
  const Vector phi = design.solve(rhs);

  LearnedModel m;
  m.params = unflatten(FlatParams{phi}, dims);
  double s = norm2(m.params.theta);
  for (const auto& b : m.params.betas) s = std::max(s, norm2(b));
  m.params.S = s > 0.0 ? s : 1.0;

  double sse = 0.0;
  for (const auto& o : data) {
    const double e = mean_reward(m.params, o.arm, o.x, o.z) - o.y;
    sse += e * e;
  }
  m.fit_residual = sse / static_cast<double>(data.size());
  return m;
}

// ---------------------------------------------------------------------------
// Replay logs

ReplayLogError::ReplayLogError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

namespace {

Vector number_array(const json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string(field) + " must be an array");
  Vector v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw std::invalid_argument(std::string(field) + " must hold numbers");
    const double d = e.get<double>();
    if (!std::isfinite(d)) throw std::invalid_argument(std::string(field) + " holds a non-finite value");
    v.push_back(d);
  }
  return v;
}

ReplayRecord parse_record(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("record must be a JSON object");
  for (const char* key : {"user", "arms", "displayed", "click"})
    if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");

  ReplayRecord r;
  r.user = number_array(j.at("user"), "user");
  const json& arms = j.at("arms");
  if (!arms.is_array() || arms.empty())
    throw std::invalid_argument("arms must be a nonempty array");
  for (const auto& a : arms) r.arms.push_back(number_array(a, "arms"));

  const json& disp = j.at("displayed");
  if (!disp.is_number_integer()) throw std::invalid_argument("displayed must be an integer");
  const auto d = disp.get<long long>();
  if (d < 1 || d > static_cast<long long>(r.arms.size()))
    throw std::invalid_argument("displayed=" + std::to_string(d) +
                                " outside [1, " + std::to_string(r.arms.size()) + "]");
  r.displayed = static_cast<std::size_t>(d - 1);

  const json& click = j.at("click");
  if (!click.is_number_integer() || (click.get<long long>() != 0 && click.get<long long>() != 1))
    throw std::invalid_argument("click must be 0 or 1");
  r.click = click.get<int>();
  return r;
}

}  // namespace

std::vector<ReplayRecord> parse_replay_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay log " + path.string());

  std::vector<ReplayRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    ReplayRecord r;
    try {
      r = parse_record(line);
    } catch (const json::exception& e) {
      throw ReplayLogError(lineno, std::string("malformed JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ReplayLogError(lineno, e.what());
    }
    if (!out.empty()) {
      const ReplayRecord& first = out.front();
      if (r.arms.size() != first.arms.size())
        throw ReplayLogError(lineno, "expected K=" + std::to_string(first.arms.size()) +
                                         " arms, got " + std::to_string(r.arms.size()));
      if (r.user.size() != first.user.size())
        throw ReplayLogError(lineno, "user feature dimension changed");
    }
    const std::size_t dv = out.empty() ? r.arms.front().size() : out.front().arms.front().size();
    for (const auto& a : r.arms)
      if (a.size() != dv) throw ReplayLogError(lineno, "arm feature dimension mismatch");
    out.push_back(std::move(r));
  }
  if (in.bad()) throw std::runtime_error("read error on " + path.string());
  return out;
}

void write_replay_log(const std::filesystem::path& path,
                      std::span<const ReplayRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write replay log " + path.string());
  for (const auto& r : records) {
    ordered_json j;
    j["user"] = r.user;
    j["arms"] = r.arms;
    j["displayed"] = r.displayed + 1;
    j["click"] = r.click;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write error on " + path.string());
}

SyntheticLog generate_replay_log(const SyntheticLogConfig& cfg) {
  if (cfg.user_dim == 0 || cfg.arm_dim == 0 || cfg.K == 0)
    throw std::invalid_argument("generate_replay_log: dimensions must be positive");
  SyntheticLog log;
  CounterRng prng(cfg.seed, 0, 0, Purpose::Params);
  log.params.S = cfg.param_radius;
  log.params.theta = sample_unit_ball(cfg.user_dim * cfg.arm_dim, prng, cfg.param_radius);
  for (std::size_t i = 0; i < cfg.K; ++i)
    log.params.betas.push_back(sample_unit_ball(cfg.arm_dim, prng, cfg.param_radius));

  log.records.reserve(cfg.n_records);
  for (std::size_t n = 0; n < cfg.n_records; ++n) {
    CounterRng rng(cfg.seed, 0, n, Purpose::ReplayLog);
    ReplayRecord r;
    r.user = sample_unit_ball(cfg.user_dim, rng);
    for (std::size_t i = 0; i < cfg.K; ++i) r.arms.push_back(sample_unit_ball(cfg.arm_dim, rng));
    r.displayed = std::min<std::size_t>(
        cfg.K - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(cfg.K)));
    const ArmFeatures f = build_features(r.user, r.arms[r.displayed]);
    const double p = std::clamp(0.5 + 0.5 * mean_reward(log.params, r.displayed, f.x, f.z), 0.0, 1.0);
    r.click = rng.uniform() < p ? 1 : 0;
    log.records.push_back(std::move(r));
  }
  return log;
}

ReplayEnvironment::ReplayEnvironment(LearnedModel model,
                                     std::vector<ContextRound> contexts,
                                     double noise_std, FeatureScaling scaling)
    : model_(std::move(model)),
      contexts_(std::move(contexts)),
      noise_std_(noise_std),
      scaling_(scaling) {
  if (!(noise_std_ >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
}

ReplayEnvironment semi_synthetic_environment(std::span<const ReplayRecord> log,
                                             std::size_t train_n,
                                             double noise_std,
                                             const LeastSquaresOptions& opts) {
  if (train_n == 0) throw std::invalid_argument("train_n must be positive");
  if (log.size() <= train_n)
    throw std::invalid_argument("replay log has " + std::to_string(log.size()) +
                                " records; need more than train_n=" +
                                std::to_string(train_n));
  const std::size_t K = log.front().arms.size();

  FeatureScaling scaling;
  for (const auto& r : log) {
    const double un = norm2(r.user);
    for (const auto& a : r.arms) {
      const double an = norm2(a);
      scaling.x_divisor = std::max(scaling.x_divisor, un * an);
      scaling.z_divisor = std::max(scaling.z_divisor, an);
    }
  }
  auto features = [&](const ReplayRecord& r, std::size_t arm) {
    ArmFeatures f = build_features(r.user, r.arms[arm]);
    for (double& v : f.x) v /= scaling.x_divisor;
    for (double& v : f.z) v /= scaling.z_divisor;
    return f;
  };

  std::vector<Observation> train;
  train.reserve(train_n);
  for (std::size_t n = 0; n < train_n; ++n) {
    const ReplayRecord& r = log[n];
    ArmFeatures f = features(r, r.displayed);
    train.push_back({r.displayed, std::move(f.x), std::move(f.z),
                     static_cast<double>(r.click)});
  }
  LearnedModel model = hybrid_least_squares(train, K, opts);

  std::vector<ContextRound> contexts;
  contexts.reserve(log.size() - train_n);
  for (std::size_t n = train_n; n < log.size(); ++n) {
    ContextRound round;
    round.arms.reserve(K);
    for (std::size_t i = 0; i < K; ++i) round.arms.push_back(features(log[n], i));
    contexts.push_back(std::move(round));
  }
  return ReplayEnvironment(std::move(model), std::move(contexts), noise_std, scaling);
}

std::string environment_dump(const SyntheticEnvironment& env) {
  const auto& c = env.config();
  ordered_json j;
  j["d1"] = c.dims.d1;
  j["d2"] = c.dims.d2;
  j["K"] = c.dims.K;
  j["T"] = c.T;
  j["S"] = c.S;
  j["noise_std"] = c.noise_std;
  j["env_seed"] = c.env_seed;
  j["theta"] = env.params().theta;
  j["betas"] = env.params().betas;
  return j.dump(2) + "\n";
}

}  // namespace hybandit
