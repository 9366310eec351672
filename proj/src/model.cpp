#include "koop/model.hpp"

#include "koop/dkn.hpp"
#include "koop/fcn.hpp"

namespace koop::model {

Eigen::VectorXd ModelMeta::state_mask() const {
  const int d = step_dim();
  Eigen::VectorXd m = Eigen::VectorXd::Ones(embed_dim());
  for (int j = 0; j < nt; ++j) m[j * d + (d - 1)] = 0.0;
  return m;
}

Eigen::MatrixXd predict_embedding(const LatentModel& m, const Eigen::VectorXd& raw_embedding, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("predict_embedding: n_steps must be >= 1");
  if (raw_embedding.size() != m.meta().embed_dim())
    throw std::invalid_argument("predict_embedding: embedding dimension mismatch");
  Eigen::MatrixXd y = m.encode(m.meta().norm.apply(raw_embedding));
  Eigen::MatrixXd out(raw_embedding.size(), n_steps);
  for (int i = 0; i < n_steps; ++i) {
    y = m.latent_step(y);
    out.col(i) = m.meta().norm.invert(m.decode(y));
  }
  return out;
}

namespace {

ordered_json net_layout(const net::Mlp& mlp) {
  ordered_json layers = ordered_json::array();
  for (const auto& l : mlp.layers) {
    ordered_json j;
    j["rows"] = l.W.rows();
    j["cols"] = l.W.cols();
    j["act"] = net::to_string(l.act);
    layers.push_back(j);
  }
  return layers;
}

net::Mlp net_from_layout(const ordered_json& layout) {
  net::Mlp mlp;
  for (const auto& j : layout) {
    net::Layer l;
    l.W = Eigen::MatrixXd::Zero(j.at("rows").get<int>(), j.at("cols").get<int>());
    l.b = Eigen::VectorXd::Zero(j.at("rows").get<int>());
    l.act = net::activation_from_string(j.at("act").get<std::string>());
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct NetTriple {
  const net::Mlp* enc;
  const net::Mlp* dec;
  const net::Mlp* core;
  std::string core_name;
};

NetTriple nets_of(const LatentModel& m) {
  if (const auto* d = dynamic_cast<const dkn::DKNModel*>(&m))
    return {&d->encoder(), &d->decoder(), &d->auxiliary(), "auxiliary"};
  if (const auto* f = dynamic_cast<const fcn::FCNModel*>(&m))
    return {&f->encoder(), &f->decoder(), &f->inner(), "inner"};
  throw std::logic_error("save_model: unknown model kind");
}

}  // namespace

void save_model(const std::filesystem::path& path, const LatentModel& m) {
  const ModelMeta& meta = m.meta();
  const NetTriple nets = nets_of(m);

  BinContainer bin;
  ordered_json& h = bin.header;
  h["format"] = "koopckpt-v1";
  h["kind"] = meta.kind;
  h["channels"] = meta.channels;
  h["nt"] = meta.nt;
  h["dt"] = meta.dt;
  h["n_pairs"] = meta.n_pairs;
  h["init"] = "uniform-sqrt6-over-fansum, zero bias";
  h["config"] = meta.config_echo;
  h["normalization"]["shift"] = to_vec(meta.norm.shift);
  h["normalization"]["scale"] = to_vec(meta.norm.scale);
  h["nets"]["encoder"] = net_layout(*nets.enc);
  h["nets"]["decoder"] = net_layout(*nets.dec);
  h["nets"][nets.core_name] = net_layout(*nets.core);

  const Eigen::VectorXd flat = net::flatten_params({nets.enc, nets.dec, nets.core});
  bin.blob.assign(flat.data(), flat.data() + flat.size());
  write_container(path, bin);
}

std::unique_ptr<LatentModel> load_model(const std::filesystem::path& path) {
  const BinContainer bin = read_container(path);
  const ordered_json& h = bin.header;
  if (h.value("format", "") != "koopckpt-v1")
    throw std::runtime_error("not a koopckpt-v1 checkpoint: " + path.string());

  ModelMeta meta;
  meta.kind = h.at("kind").get<std::string>();
  meta.channels = h.at("channels").get<std::vector<std::string>>();
  meta.nt = h.at("nt").get<int>();
  meta.dt = h.at("dt").get<double>();
  meta.n_pairs = h.at("n_pairs").get<int>();
  meta.config_echo = h.at("config");
  meta.norm.shift = from_vec(h.at("normalization").at("shift").get<std::vector<double>>());
  meta.norm.scale = from_vec(h.at("normalization").at("scale").get<std::vector<double>>());

  // The echoed training config (string-valued entries) restores weights,
  // aux_input and friends.
  Config cfg_echo;
  for (const auto& [k, v] : meta.config_echo.items())
    if (v.is_string()) cfg_echo.set(k, v.get<std::string>());
  dkn::TrainConfig cfg = dkn::train_config_from(cfg_echo);
  cfg.dt = meta.dt;

  const std::string core_name = meta.kind == "dkn" ? "auxiliary" : "inner";
  net::Mlp enc = net_from_layout(h.at("nets").at("encoder"));
  net::Mlp dec = net_from_layout(h.at("nets").at("decoder"));
  net::Mlp core = net_from_layout(h.at("nets").at(core_name));

  const Eigen::VectorXd flat = from_vec(bin.blob);
  net::unflatten_params(flat, {&enc, &dec, &core});

  if (meta.kind == "dkn")
    return std::make_unique<dkn::DKNModel>(std::move(meta), cfg, std::move(enc), std::move(dec),
                                           std::move(core));
  if (meta.kind == "fcn")
    return std::make_unique<fcn::FCNModel>(std::move(meta), cfg, std::move(enc), std::move(dec),
                                           std::move(core));
  throw std::runtime_error("unknown model kind: " + meta.kind);
}

}  // namespace koop::model
