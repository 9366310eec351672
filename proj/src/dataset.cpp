#include "koop/dataset.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

#include "koop/rng.hpp"

namespace koop::data {

std::string to_string(Segmentation s) {
  return s == Segmentation::overlapping ? "overlapping" : "disjoint";
}

std::string to_string(SystemKind s) {
  switch (s) {
    case SystemKind::rigid: return "rigid";
    case SystemKind::rigid_pd: return "rigid-pd";
    case SystemKind::soft: return "soft";
  }
  return "rigid";
}

SystemKind system_kind_from_string(const std::string& s) {
  if (s == "rigid") return SystemKind::rigid;
  if (s == "rigid-pd") return SystemKind::rigid_pd;
  if (s == "soft") return SystemKind::soft;
  throw std::invalid_argument("unknown system: " + s + " (expected rigid|rigid-pd|soft)");
}

Eigen::MatrixXd Normalization::apply(const Eigen::MatrixXd& raw) const {
  if (empty()) return raw;
  return (raw.colwise() - shift).array().colwise() / scale.array();
}

Eigen::MatrixXd Normalization::invert(const Eigen::MatrixXd& normalized) const {
  if (empty()) return normalized;
  return (normalized.array().colwise() * scale.array()).colwise() + shift.array();
}

Eigen::VectorXd SnapshotDataset::state_mask() const {
  const int d = step_dim();
  Eigen::VectorXd m = Eigen::VectorXd::Ones(embed_dim());
  for (int j = 0; j < nt; ++j) m[j * d + (d - 1)] = 0.0;  // control channel is last
  return m;
}

const SnapshotSplit& SnapshotDataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "validation") return validation;
  if (name == "evaluation") return evaluation;
  throw std::invalid_argument("unknown split: " + name);
}

EmbeddingPairs embed(const sim::Trajectory& traj, int nt, Segmentation mode) {
  if (nt < 1) throw std::invalid_argument("embed: nt must be >= 1");
  EmbeddingPairs out;
  const int len = traj.length();
  const int d = traj.sample_dim();
  if (len < nt + 1) {
    std::cerr << "warning: trajectory of length " << len << " too short for nt=" << nt
              << ", yielding no pairs\n";
    out.X.resize(d * nt, 0);
    out.Xprime.resize(d * nt, 0);
    return out;
  }
  const int stride = mode == Segmentation::overlapping ? 1 : nt;
  std::vector<int> starts;
  for (int s = 0; s + nt <= len - 1; s += stride) starts.push_back(s);

  out.X.resize(d * nt, static_cast<int>(starts.size()));
  out.Xprime.resize(d * nt, static_cast<int>(starts.size()));
  for (std::size_t c = 0; c < starts.size(); ++c) {
    const int s = starts[c];
    for (int j = 0; j < nt; ++j) {
      out.X.col(c).segment(j * d, d) = traj.samples.col(s + j);
      out.Xprime.col(c).segment(j * d, d) = traj.samples.col(s + j + 1);
    }
    out.starts.push_back(s);
  }
  return out;
}

void DataGenConfig::validate() const {
  if (nt < 1) throw std::invalid_argument("nt must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(q0_range[0] < q0_range[1])) throw std::invalid_argument("q0 range degenerate");
  if (!(qdot0_range[0] < qdot0_range[1])) throw std::invalid_argument("qdot0 range degenerate");
  if (n_train < 1 || n_validation < 1 || n_evaluation < 1)
    throw std::invalid_argument("split counts must be >= 1");
  if (steps_per_traj < nt + 1)
    throw std::invalid_argument("steps_per_traj must be >= nt + 1");
}

DataGenConfig datagen_from_config(Config& cfg, const std::string& system_override) {
  DataGenConfig c;
  const std::string sys = !system_override.empty() ? system_override : cfg.get_string("system", "rigid");
  c.system = system_kind_from_string(sys);
  c.nt = static_cast<int>(cfg.get_int("nt", c.nt));
  c.dt = cfg.get_double("dt", c.dt);
  c.q0_range[0] = cfg.get_double("q0_min", c.q0_range[0]);
  c.q0_range[1] = cfg.get_double("q0_max", c.q0_range[1]);
  c.qdot0_range[0] = cfg.get_double("qdot0_min", c.qdot0_range[0]);
  c.qdot0_range[1] = cfg.get_double("qdot0_max", c.qdot0_range[1]);
  c.n_train = static_cast<int>(cfg.get_int("n_train", c.n_train));
  c.n_validation = static_cast<int>(cfg.get_int("n_validation", c.n_validation));
  c.n_evaluation = static_cast<int>(cfg.get_int("n_evaluation", c.n_evaluation));
  c.steps_per_traj = static_cast<int>(cfg.get_int("steps_per_traj", c.steps_per_traj));
  const std::string seg = cfg.get_string("segmentation", "overlapping");
  if (seg == "overlapping") c.segmentation = Segmentation::overlapping;
  else if (seg == "disjoint") c.segmentation = Segmentation::disjoint;
  else cfg.require_error("key `segmentation`: expected overlapping|disjoint, got " + seg);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
  c.substeps = static_cast<int>(cfg.get_int("substeps", c.substeps));
  c.retry_cap = static_cast<int>(cfg.get_int("retry_cap", c.retry_cap));

  c.controller = cfg.get_string("controller", c.system == SystemKind::rigid ? "none" : "pd-regulator");
  if (c.system == SystemKind::soft && !cfg.has("controller")) c.controller = "schedule";
  c.pd.kp = cfg.get_double("kp", c.pd.kp);
  c.pd.kd = cfg.get_double("kd", c.pd.kd);
  c.pd.target = cfg.get_double("target", c.pd.target);

  // schedule entries: "kp,kd,target1,target2,...;..." — the excitation sweep.
  const std::string sched = cfg.get_string("pd_schedule",
                                           "0.3,0.1,0,0.8,-0.8;"
                                           "0.3,0.2,0,0.1,-0.1;"
                                           "0.1,0.2,0,0.8,-0.8;"
                                           "0.1,0.3,0,0.8,-0.8");
  c.schedule.clear();
  std::istringstream in(sched);
  std::string entry;
  while (std::getline(in, entry, ';')) {
    if (entry.empty()) continue;
    std::vector<double> vals;
    std::istringstream ein(entry);
    std::string tok;
    while (std::getline(ein, tok, ',')) {
      if (!tok.empty()) vals.push_back(std::strtod(tok.c_str(), nullptr));
    }
    if (vals.size() < 3) {
      cfg.require_error("key `pd_schedule`: entry needs kp,kd,target...: " + entry);
      continue;
    }
    PDScheduleEntry e;
    e.kp = vals[0];
    e.kd = vals[1];
    e.targets.assign(vals.begin() + 2, vals.end());
    c.schedule.push_back(e);
  }

  c.rigid_params.gravity = cfg.get_double("gravity", c.rigid_params.gravity);
  c.rigid_params.rod_length = cfg.get_double("rod_length", c.rigid_params.rod_length);
  c.rigid_params.mass = cfg.get_double("mass", c.rigid_params.mass);
  c.rigid_params.viscous_friction = cfg.get_double("viscous_friction", c.rigid_params.viscous_friction);

  c.duffing_params.alpha = cfg.get_double("alpha", c.duffing_params.alpha);
  c.duffing_params.beta = cfg.get_double("beta", c.duffing_params.beta);
  c.duffing_params.delta = cfg.get_double("delta", c.duffing_params.delta);
  c.duffing_params.kappa = cfg.get_double("kappa", c.duffing_params.kappa);
  c.duffing_params.u_limit = cfg.get_double("u_limit", c.duffing_params.u_limit);
  return c;
}

Config datagen_to_config(const DataGenConfig& c) {
  Config cfg;
  cfg.set("system", to_string(c.system));
  cfg.set("nt", static_cast<long long>(c.nt));
  cfg.set("dt", c.dt);
  cfg.set("q0_min", c.q0_range[0]);
  cfg.set("q0_max", c.q0_range[1]);
  cfg.set("qdot0_min", c.qdot0_range[0]);
  cfg.set("qdot0_max", c.qdot0_range[1]);
  cfg.set("n_train", static_cast<long long>(c.n_train));
  cfg.set("n_validation", static_cast<long long>(c.n_validation));
  cfg.set("n_evaluation", static_cast<long long>(c.n_evaluation));
  cfg.set("steps_per_traj", static_cast<long long>(c.steps_per_traj));
  cfg.set("segmentation", to_string(c.segmentation));
  cfg.set("seed", static_cast<long long>(c.seed));
  cfg.set("substeps", static_cast<long long>(c.substeps));
  cfg.set("retry_cap", static_cast<long long>(c.retry_cap));
  cfg.set("controller", c.controller);
  cfg.set("kp", c.pd.kp);
  cfg.set("kd", c.pd.kd);
  cfg.set("target", c.pd.target);
  std::string sched;
  for (const auto& e : c.schedule) {
    if (!sched.empty()) sched += ";";
    sched += format_double(e.kp) + "," + format_double(e.kd);
    for (const double t : e.targets) sched += "," + format_double(t);
  }
  cfg.set("pd_schedule", sched);
  cfg.set("gravity", c.rigid_params.gravity);
  cfg.set("rod_length", c.rigid_params.rod_length);
  cfg.set("mass", c.rigid_params.mass);
  cfg.set("viscous_friction", c.rigid_params.viscous_friction);
  cfg.set("alpha", c.duffing_params.alpha);
  cfg.set("beta", c.duffing_params.beta);
  cfg.set("delta", c.duffing_params.delta);
  cfg.set("kappa", c.duffing_params.kappa);
  cfg.set("u_limit", c.duffing_params.u_limit);
  return cfg;
}

std::unique_ptr<sim::System> make_system(const DataGenConfig& c) {
  if (c.system == SystemKind::soft)
    return std::make_unique<sim::DuffingSoftPendulum>(c.duffing_params);
  return std::make_unique<sim::RigidPendulum>(c.rigid_params);
}

namespace {

struct TrajSetup {
  Eigen::VectorXd x0;
  sim::Controller controller;
};

TrajSetup setup_trajectory(const DataGenConfig& c, Rng& rng, int traj_index) {
  TrajSetup s;
  if (c.system == SystemKind::soft) {
    s.x0 = Eigen::VectorXd::Zero(3);
    s.x0[0] = rng.uniform(c.q0_range[0], c.q0_range[1]);      // theta0
    s.x0[1] = rng.uniform(c.qdot0_range[0], c.qdot0_range[1]);  // thetadot0
    s.x0[2] = 0.0;                                              // joint starts at origin
  } else {
    s.x0 = Eigen::VectorXd::Zero(2);
    s.x0[0] = rng.uniform(c.q0_range[0], c.q0_range[1]);
    s.x0[1] = rng.uniform(c.qdot0_range[0], c.qdot0_range[1]);
  }

  if (c.controller == "none") {
    s.controller = sim::zero_controller();
  } else if (c.controller == "pd-regulator") {
    s.controller = sim::pd_regulator(c.pd);
  } else if (c.controller == "pd-exciter") {
    s.controller = sim::pd_exciter(c.pd);
  } else if (c.controller == "schedule") {
    // Cycle through every (gains, target) combination of the sweep.
    std::vector<sim::PDGains> combos;
    for (const auto& e : c.schedule)
      for (const double t : e.targets) combos.push_back({e.kp, e.kd, t});
    if (combos.empty()) throw std::invalid_argument("controller=schedule but pd_schedule is empty");
    s.controller = sim::pd_exciter(combos[traj_index % combos.size()]);
  } else {
    throw std::invalid_argument("unknown controller spec: " + c.controller);
  }
  return s;
}

void generate_split(const DataGenConfig& c, const sim::System& system, const std::string& label,
                    int want, SnapshotSplit& out) {
  const int edim = (system.ode_dim() + 1) * c.nt;
  out.X.resize(edim, want);
  out.Xprime.resize(edim, want);
  out.traj_id.clear();
  out.start.clear();

  int got = 0;
  int traj_index = 0;
  int accepted = 0;
  int failures = 0;
  while (got < want) {
    Rng rng(derive_seed(c.seed, "data/" + label, static_cast<std::uint64_t>(traj_index)));
    const TrajSetup setup = setup_trajectory(c, rng, traj_index);
    ++traj_index;
    sim::Trajectory traj;
    try {
      traj = sim::rollout(system, setup.controller, setup.x0, c.steps_per_traj, c.dt, c.substeps);
    } catch (const sim::DivergenceError&) {
      if (++failures > c.retry_cap)
        throw std::runtime_error("dataset generation: divergent rollouts exceeded retry cap in split " + label);
      continue;
    }
    const EmbeddingPairs pairs = embed(traj, c.nt, c.segmentation);
    for (int k = 0; k < pairs.X.cols() && got < want; ++k, ++got) {
      out.X.col(got) = pairs.X.col(k);
      out.Xprime.col(got) = pairs.Xprime.col(k);
      out.traj_id.push_back(accepted);
      out.start.push_back(pairs.starts[k]);
    }
    ++accepted;
  }
}

}  // namespace

SnapshotDataset generate_dataset(const DataGenConfig& config) {
  config.validate();
  const auto system = make_system(config);

  SnapshotDataset ds;
  ds.channels = system->channels();
  ds.nt = config.nt;
  ds.dt = config.dt;
  ds.segmentation = config.segmentation;
  ds.config_echo = ordered_json::parse("{}");
  for (const auto& [k, v] : datagen_to_config(config).entries()) ds.config_echo[k] = v;

  generate_split(config, *system, "train", config.n_train, ds.train);
  generate_split(config, *system, "validation", config.n_validation, ds.validation);
  generate_split(config, *system, "evaluation", config.n_evaluation, ds.evaluation);
  return ds;
}

void normalize_dataset(SnapshotDataset& ds) {
  const Eigen::MatrixXd& X = ds.train.X;
  if (X.cols() < 1) throw std::runtime_error("normalize: empty training split");
  Eigen::VectorXd mean = X.rowwise().mean();
  Eigen::VectorXd var = (X.colwise() - mean).array().square().rowwise().mean();
  Eigen::VectorXd scale(var.size());
  for (int i = 0; i < var.size(); ++i) {
    const double sd = std::sqrt(var[i]);
    scale[i] = sd > 1e-12 ? sd : 1.0;
  }
  ds.norm.shift = mean;
  ds.norm.scale = scale;
  for (SnapshotSplit* s : {&ds.train, &ds.validation, &ds.evaluation}) {
    s->X = ds.norm.apply(s->X);
    s->Xprime = ds.norm.apply(s->Xprime);
  }
}

namespace {

void append_matrix_rowmajor(std::vector<double>& blob, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) blob.push_back(m(r, c));
}

Eigen::MatrixXd read_matrix_rowmajor(const std::vector<double>& blob, std::size_t& off,
                                     Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = blob.at(off++);
  return m;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const SnapshotDataset& ds) {
  BinContainer bin;
  ordered_json& h = bin.header;
  h["format"] = "koopds-v1";
  h["channels"] = ds.channels;
  h["nt"] = ds.nt;
  h["dt"] = ds.dt;
  h["segmentation"] = to_string(ds.segmentation);
  h["config"] = ds.config_echo;
  if (!ds.norm.empty()) {
    h["normalization"]["shift"] = std::vector<double>(ds.norm.shift.data(), ds.norm.shift.data() + ds.norm.shift.size());
    h["normalization"]["scale"] = std::vector<double>(ds.norm.scale.data(), ds.norm.scale.data() + ds.norm.scale.size());
  } else {
    h["normalization"] = nullptr;
  }
  ordered_json splits = ordered_json::object();
  const std::pair<std::string, const SnapshotSplit*> named[] = {
      {"train", &ds.train}, {"validation", &ds.validation}, {"evaluation", &ds.evaluation}};
  for (const auto& [name, s] : named) {
    splits[name]["count"] = s->count();
    splits[name]["traj_id"] = s->traj_id;
    splits[name]["start"] = s->start;
  }
  h["splits"] = splits;
  for (const auto& [name, s] : named) {
    append_matrix_rowmajor(bin.blob, s->X);
    append_matrix_rowmajor(bin.blob, s->Xprime);
  }
  write_container(path, bin);
}

SnapshotDataset load_dataset(const std::filesystem::path& path) {
  const BinContainer bin = read_container(path);
  const ordered_json& h = bin.header;
  if (h.value("format", "") != "koopds-v1")
    throw std::runtime_error("not a koopds-v1 dataset: " + path.string());

  SnapshotDataset ds;
  ds.channels = h.at("channels").get<std::vector<std::string>>();
  ds.nt = h.at("nt").get<int>();
  ds.dt = h.at("dt").get<double>();
  ds.segmentation = h.at("segmentation").get<std::string>() == "disjoint" ? Segmentation::disjoint
                                                                          : Segmentation::overlapping;
  ds.config_echo = h.at("config");
  if (!h.at("normalization").is_null()) {
    const auto shift = h.at("normalization").at("shift").get<std::vector<double>>();
    const auto scale = h.at("normalization").at("scale").get<std::vector<double>>();
    ds.norm.shift = Eigen::Map<const Eigen::VectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size()));
    ds.norm.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  }

  const int edim = ds.embed_dim();
  std::size_t off = 0;
  const std::pair<std::string, SnapshotSplit*> named[] = {
      {"train", &ds.train}, {"validation", &ds.validation}, {"evaluation", &ds.evaluation}};
  for (const auto& [name, s] : named) {
    const auto& js = h.at("splits").at(name);
    const int n = js.at("count").get<int>();
    s->traj_id = js.at("traj_id").get<std::vector<std::int32_t>>();
    s->start = js.at("start").get<std::vector<std::int32_t>>();
    s->X = read_matrix_rowmajor(bin.blob, off, edim, n);
    s->Xprime = read_matrix_rowmajor(bin.blob, off, edim, n);
  }
  return ds;
}

std::string split_csv(const SnapshotDataset& ds, const std::string& split_name) {
  const SnapshotSplit& s = ds.split(split_name);
  std::string out = "# schema: col,traj,start,then X row-major then Xprime row-major per column\n";
  out += "col,traj,start";
  for (int j = 0; j < ds.nt; ++j)
    for (const auto& c : ds.channels) out += ",x_" + std::to_string(j) + "_" + c;
  for (int j = 0; j < ds.nt; ++j)
    for (const auto& c : ds.channels) out += ",xp_" + std::to_string(j) + "_" + c;
  out += "\n";
  char buf[64];
  for (int n = 0; n < s.count(); ++n) {
    out += std::to_string(n) + "," + std::to_string(s.traj_id[n]) + "," + std::to_string(s.start[n]);
    for (int r = 0; r < s.X.rows(); ++r) {
      std::snprintf(buf, sizeof(buf), ",%.17g", s.X(r, n));
      out += buf;
    }
    for (int r = 0; r < s.Xprime.rows(); ++r) {
      std::snprintf(buf, sizeof(buf), ",%.17g", s.Xprime(r, n));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace koop::data
