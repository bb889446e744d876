#include "cfd/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace cfd {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Object view that remembers which keys were read, so leftovers can be
// reported as typos.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw InputError(path_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw InputError(path_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  Vec vec(const std::string& key) {
    const auto v = get<std::vector<double>>(key);
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  Section sub(const std::string& key) { return Section(at(key), path_ + "." + key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw InputError(path_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

ObservationMode parse_mode(const std::string& s) {
  if (s == "full-state") return ObservationMode::full_state;
  if (s == "noisy-first-coordinate") return ObservationMode::noisy_first_coordinate;
  throw InputError("inference.mode: expected full-state or noisy-first-coordinate, got '" + s + "'");
}

std::string mode_name(ObservationMode m) {
  return m == ObservationMode::full_state ? "full-state" : "noisy-first-coordinate";
}

// Array in documented order, or an object keyed by parameter name.
Vec theta_vector(Section& parent, const std::string& key, const std::vector<std::string>& names) {
  const auto n = static_cast<Eigen::Index>(names.size());
  if (parent.at(key).is_array()) {
    const Vec v = parent.vec(key);
    require_dim(v, n, key.c_str());
    return v;
  }
  Section s = parent.sub(key);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = s.get<double>(names[static_cast<std::size_t>(i)]);
  s.finish();
  return v;
}

std::array<double, 2> pair_of(Section& s, const std::string& key) {
  const auto v = s.get<std::vector<double>>(key);
  if (v.size() != 2) throw InputError(key + ": expected [lo, hi]");
  if (!(v[0] < v[1])) throw InputError(key + ": lo must be below hi");
  return {v[0], v[1]};
}

}  // namespace

std::vector<std::string> theta_names_for(const ModelSpec& spec) {
  ModelSpec proto = spec;
  if (spec.name == "fhn" || spec.name == "fhn-partial") {
    proto.theta = Vec::Ones(4);
  } else if (spec.name == "langevin") {
    proto.theta = Vec::Ones(2);
  } else if (spec.name == "ou") {
    proto.theta = Vec::Ones(3);
  } else if (spec.name == "linear") {
    require(spec.dim > 0 && spec.n_noise > 0, "model: linear needs positive dim and n_noise");
    proto.theta = Vec::Zero(spec.dim * spec.dim + spec.dim + spec.dim * spec.n_noise);
  } else {
    throw InputError("model: unknown name '" + spec.name + "'");
  }
  return make_model(proto)->theta_names();
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  Section top(root, "config");
  ExperimentConfig c;

  {
    Section m = top.sub("model");
    c.model.name = m.get<std::string>("name");
    c.model.stimulus = m.get_or("stimulus", 0.0);
    c.model.stiffness = m.get_or("stiffness", 1.0);
    c.model.dim = m.get_or("dim", 0);
    c.model.n_noise = m.get_or("n_noise", 0);
    const auto names = theta_names_for(c.model);
    c.model.theta = theta_vector(m, "theta", names);
    m.finish();
  }
  const ModelPtr model = make_model(c.model);

  if (top.has("expansion")) {
    Section e = top.sub("expansion");
    c.expansion.order_j = e.get_or("order_j", c.expansion.order_j);
    c.expansion.taylor_order = e.get_or("taylor_order", c.expansion.taylor_order);
    c.expansion.variant =
        e.has("variant") ? parse_variant(e.get<std::string>("variant")) : default_variant(*model);
    if (e.has("orders")) c.orders = e.get<std::vector<int>>("orders");
    e.finish();
  } else {
    c.expansion.variant = default_variant(*model);
  }
  validate(c.expansion);
  require(c.expansion.variant == default_variant(*model), "expansion.variant: " + to_string(c.expansion.variant) +
                                                              " does not apply to model '" + c.model.name + "'");
  require(!c.orders.empty(), "expansion.orders: need at least one order");
  for (int j : c.orders) {
    CorrectionSpec s = c.expansion;
    s.order_j = j;
    validate(s);
  }

  c.dt = top.get<double>("dt");
  require(c.dt > 0 && std::isfinite(c.dt), "dt must be positive");
  c.x0 = top.has("x0") ? top.vec("x0") : Vec(Vec::Zero(model->dim()));
  require_dim(c.x0, model->dim(), "x0");

  if (top.has("grid")) {
    Section g = top.sub("grid");
    c.grid.nx = g.get_or("nx", c.grid.nx);
    c.grid.ny = g.get_or("ny", c.grid.ny);
    if (g.has("x_range")) c.grid.x_range = pair_of(g, "x_range");
    if (g.has("y_range")) c.grid.y_range = pair_of(g, "y_range");
    c.grid.half_width_sd = g.get_or("half_width_sd", c.grid.half_width_sd);
    g.finish();
  }
  require(c.grid.nx >= 2 && c.grid.ny >= 2, "grid: nx and ny must be >= 2");
  require(c.grid.half_width_sd > 0, "grid: half_width_sd must be positive");

  if (top.has("simulation")) {
    Section s = top.sub("simulation");
    c.simulation.n_paths = s.get_or("n_paths", c.simulation.n_paths);
    c.simulation.substeps = s.get_or("substeps", c.simulation.substeps);
    c.simulation.seed = s.get_or("seed", c.simulation.seed);
    c.sim_steps = s.get_or("n_steps", c.sim_steps);
    s.finish();
  }
  validate(c.simulation);
  require(c.sim_steps >= 1, "simulation.n_steps must be >= 1");

  if (top.has("kde")) {
    Section k = top.sub("kde");
    if (k.has("bandwidth")) {
      const auto b = k.get<std::vector<double>>("bandwidth");
      require(b.size() == 2 && b[0] > 0 && b[1] > 0, "kde.bandwidth: expected two positive numbers");
      c.kde.bandwidth = std::array<double, 2>{b[0], b[1]};
    }
    k.finish();
  }

  if (top.has("benchmark")) c.benchmark = top.get<std::string>("benchmark");

  if (top.has("inference")) {
    Section s = top.sub("inference");
    auto& inf = c.inference;
    if (s.has("mode")) inf.mode = parse_mode(s.get<std::string>("mode"));
    if (s.has("data")) inf.data = s.get<std::string>("data");
    inf.n_obs = s.get_or("n_obs", inf.n_obs);
    inf.noise_sd = s.get_or("noise_sd", inf.noise_sd);
    if (s.has("init")) inf.init_theta = theta_vector(s, "init", model->theta_names());
    inf.max_evals = s.get_or("max_evals", inf.max_evals);
    inf.augmentation = s.get_or("augmentation", inf.augmentation);
    auto& o = inf.mcmc;
    o.n_iters = s.get_or("iterations", o.n_iters);
    o.n_warmup = s.get_or("warmup", o.n_warmup);
    o.n_chains = s.get_or("chains", o.n_chains);
    o.seed = s.get_or("seed", o.seed);
    o.window = s.get_or("window", o.window);
    o.stride = s.get_or("stride", o.stride);
    o.target_accept = s.get_or("target_accept", o.target_accept);
    o.centred_theta_moves = s.get_or("centred_theta_moves", o.centred_theta_moves);
    o.joint_moves = s.get_or("joint_moves", o.joint_moves);
    o.laplace_iterations = s.get_or("laplace_iterations", o.laplace_iterations);
    if (s.has("latent_move")) o.latent_move = parse_latent_move(s.get<std::string>("latent_move"));
    if (s.has("priors")) {
      Section p = s.sub("priors");
      Priors pr = default_priors(*model);
      if (p.has("log_mean")) pr.log_mean = p.vec("log_mean");
      if (p.has("log_sd")) pr.log_sd = p.vec("log_sd");
      if (p.has("x0_mean")) pr.x0_mean = p.vec("x0_mean");
      if (p.has("x0_sd")) pr.x0_sd = p.vec("x0_sd");
      p.finish();
      validate(pr, *model);
      inf.priors = pr;
    }
    s.finish();
    require(inf.n_obs >= 2, "inference.n_obs must be >= 2");
    require(inf.noise_sd > 0, "inference.noise_sd must be positive");
    require(inf.max_evals >= 1, "inference.max_evals must be >= 1");
    require(inf.augmentation >= 1, "inference.augmentation must be >= 1");
    require(o.laplace_iterations >= 1, "inference.laplace_iterations must be >= 1");
    validate(o);
  }

  c.output_dir = top.get_or<std::string>("output_dir", c.output_dir);
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string resolved_config_json(const ExperimentConfig& c) {
  const ModelPtr model = make_model(c.model);
  ordered_json j;
  ordered_json m;
  m["name"] = c.model.name;
  m["theta"] = to_std(c.model.theta);
  m["stimulus"] = c.model.stimulus;
  m["stiffness"] = c.model.stiffness;
  if (c.model.name == "linear") {
    m["dim"] = c.model.dim;
    m["n_noise"] = c.model.n_noise;
  }
  j["model"] = m;
  j["expansion"] = {{"variant", to_string(c.expansion.variant)},
                    {"order_j", c.expansion.order_j},
                    {"taylor_order", c.expansion.taylor_order},
                    {"orders", c.orders}};
  j["dt"] = c.dt;
  j["x0"] = to_std(c.x0);
  ordered_json g;
  g["nx"] = c.grid.nx;
  g["ny"] = c.grid.ny;
  if (c.grid.x_range) g["x_range"] = *c.grid.x_range;
  if (c.grid.y_range) g["y_range"] = *c.grid.y_range;
  g["half_width_sd"] = c.grid.half_width_sd;
  j["grid"] = g;
  j["simulation"] = {{"n_paths", c.simulation.n_paths},
                     {"substeps", c.simulation.substeps},
                     {"seed", c.simulation.seed},
                     {"n_steps", c.sim_steps}};
  ordered_json k = ordered_json::object();
  if (c.kde.bandwidth) k["bandwidth"] = *c.kde.bandwidth;
  j["kde"] = k;
  if (c.benchmark) j["benchmark"] = *c.benchmark;

  const auto& inf = c.inference;
  ordered_json s;
  s["mode"] = mode_name(inf.mode);
  if (inf.data) s["data"] = *inf.data;
  s["n_obs"] = inf.n_obs;
  s["noise_sd"] = inf.noise_sd;
  if (inf.init_theta) s["init"] = to_std(*inf.init_theta);
  s["max_evals"] = inf.max_evals;
  s["augmentation"] = inf.augmentation;
  s["iterations"] = inf.mcmc.n_iters;
  s["warmup"] = inf.mcmc.n_warmup;
  s["chains"] = inf.mcmc.n_chains;
  s["seed"] = inf.mcmc.seed;
  s["window"] = inf.mcmc.window;
  s["stride"] = inf.mcmc.stride;
  s["target_accept"] = inf.mcmc.target_accept;
  s["centred_theta_moves"] = inf.mcmc.centred_theta_moves;
  s["joint_moves"] = inf.mcmc.joint_moves;
  s["laplace_iterations"] = inf.mcmc.laplace_iterations;
  s["latent_move"] = to_string(inf.mcmc.latent_move);
  const Priors pr = inf.priors ? *inf.priors : default_priors(*model);
  s["priors"] = {{"log_mean", to_std(pr.log_mean)},
                 {"log_sd", to_std(pr.log_sd)},
                 {"x0_mean", to_std(pr.x0_mean)},
                 {"x0_sd", to_std(pr.x0_sd)}};
  j["inference"] = s;
  j["output_dir"] = c.output_dir;
  return j.dump(2);
}

}  // namespace cfd
