#include "mvlift/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvlift/error.hpp"

namespace mvlift {

using nlohmann::json;

const char* to_string(TrainMode m) { return m == TrainMode::kWeak ? "weak" : "strong"; }

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "weak") return TrainMode::kWeak;
  if (s == "strong") return TrainMode::kStrong;
  throw Error(ErrorCode::kInvalidInput, "unknown training mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::kInvalidInput, "lambda must be in [0, 1]");
  if (epochs < 1 || frames_per_batch < 1 || views_per_frame < 1 || hidden_dim < 1 || patience < 0 ||
      warmup_epochs < 0) {
    throw Error(ErrorCode::kInvalidInput, "training counts must be >= 1");
  }
  if (!(huber_delta > 0.0)) throw Error(ErrorCode::kInvalidInput, "huber delta must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::kInvalidInput, "dropout must be in [0, 1)");
  if (!(alpha0 > 0.0 && gamma > 0.0)) throw Error(ErrorCode::kInvalidInput, "learning rate must be positive");
  if (root < 0) throw Error(ErrorCode::kInvalidInput, "root index must be >= 0");
}

Architecture architecture_for(const TrainConfig& config, int num_joints) {
  Architecture a;
  a.input_dim = 2 * num_joints;
  a.output_dim = 3 * num_joints;
  a.hidden_dim = config.hidden_dim;
  a.dropout = config.dropout;
  return a;
}

Eigen::VectorXd model_input(const View& view, const NormStats& stats, int root) {
  const Pose2D rel = to_relative(view.detections, root);
  return flatten<2>(normalize_2d(rel, stats).joints);
}

Pose3D predict_relative(const Model& model, const View& view) {
  const Eigen::VectorXd out = predict(model.params, model_input(view, model.stats, model.config.root));
  Pose3D normalized(model.stats.num_joints(), Flavor::kRelative);
  normalized.joints = unflatten<3>(out);
  return unnormalize_3d(normalized, model.stats, model.config.root);
}

Pose3D camera_relative(const Pose3D& world_abs, const CameraParams& cam, int root) {
  const Pose3D rel = to_relative(world_abs, root);
  Pose3D out = rel;
  out.frame = PoseFrame::kCamera;
  out.joints = rel.joints * cam.R.transpose();
  return fill_missing(out);
}

namespace {

json config_json(const TrainConfig& c) {
  return json{{"mode", to_string(c.mode)},
              {"lambda", c.lambda},
              {"alpha0", c.alpha0},
              {"gamma", c.gamma},
              {"epochs", c.epochs},
              {"frames_per_batch", c.frames_per_batch},
              {"views_per_frame", c.views_per_frame},
              {"hidden_dim", c.hidden_dim},
              {"dropout", c.dropout},
              {"weight_decay", c.weight_decay},
              {"huber_delta", c.huber_delta},
              {"warmup_epochs", c.warmup_epochs},
              {"patience", c.patience},
              {"root", c.root},
              {"seed", c.seed},
              {"bn_momentum", c.bn_momentum},
              {"detach_mean", c.detach_mean},
              {"cache_root", c.cache_root},
              {"output_init_scale", c.output_init_scale}};
}

TrainConfig config_from(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "training config must be a JSON object");
  TrainConfig c;
  const json defaults = config_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw Error(ErrorCode::kParse, "unknown training config field '" + key + "'");
  }
  try {
    if (j.contains("mode")) c.mode = train_mode_from_string(j["mode"].get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("lambda", c.lambda);
    get("alpha0", c.alpha0);
    get("gamma", c.gamma);
    get("epochs", c.epochs);
    get("frames_per_batch", c.frames_per_batch);
    get("views_per_frame", c.views_per_frame);
    get("hidden_dim", c.hidden_dim);
    get("dropout", c.dropout);
    get("weight_decay", c.weight_decay);
    get("huber_delta", c.huber_delta);
    get("warmup_epochs", c.warmup_epochs);
    get("patience", c.patience);
    get("root", c.root);
    get("seed", c.seed);
    get("bn_momentum", c.bn_momentum);
    get("detach_mean", c.detach_mean);
    get("cache_root", c.cache_root);
    get("output_init_scale", c.output_init_scale);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j, Eigen::Index expected, const std::string& name) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw Error(ErrorCode::kParse, "tensor '" + name + "' has wrong length");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
    throw Error(ErrorCode::kParse, "tensor '" + name + "' has wrong shape");
  }
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::kParse, "tensor '" + name + "' has wrong length");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[r * cols + c].get<double>();
  }
  return m;
}

}  // namespace

std::string config_to_json(const TrainConfig& config) { return config_json(config).dump(2); }

TrainConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("training config: ") + e.what());
  }
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string model_to_json(const Model& model) {
  const auto& p = model.params;
  const auto& a = p.arch;
  json j;
  j["format"] = "mvlift-model";
  j["version"] = 1;
  j["architecture"] = {{"input_dim", a.input_dim}, {"hidden_dim", a.hidden_dim}, {"output_dim", a.output_dim},
                       {"num_blocks", a.num_blocks}, {"dropout", a.dropout},     {"bn_eps", a.bn_eps}};
  json linears = json::array();
  for (const auto& l : p.linears) linears.push_back({{"W", matrix_json(l.W)}, {"b", vec_json(l.b)}});
  j["linears"] = std::move(linears);
  json norms = json::array();
  for (const auto& n : p.norms) {
    norms.push_back({{"gamma", vec_json(n.gamma)},
                     {"beta", vec_json(n.beta)},
                     {"running_mean", vec_json(n.running_mean)},
                     {"running_var", vec_json(n.running_var)}});
  }
  j["batchnorms"] = std::move(norms);
  const auto& s = model.stats;
  j["norm_stats"] = {{"mu_x", matrix_json(s.mu_x)},
                     {"sigma_x", matrix_json(s.sigma_x)},
                     {"mu_X", matrix_json(s.mu_X)},
                     {"sigma_X", matrix_json(s.sigma_X)}};
  j["config"] = config_json(model.config);
  return j.dump();
}

Model model_from_json(const std::string& text) {
  Model m;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "mvlift-model") throw Error(ErrorCode::kParse, "not an mvlift model file");
    const auto& ja = j.at("architecture");
    Architecture a;
    a.input_dim = ja.at("input_dim").get<int>();
    a.hidden_dim = ja.at("hidden_dim").get<int>();
    a.output_dim = ja.at("output_dim").get<int>();
    a.num_blocks = ja.at("num_blocks").get<int>();
    a.dropout = ja.at("dropout").get<double>();
    a.bn_eps = ja.at("bn_eps").get<double>();
    m.params = init_zero(a);
    const auto& jl = j.at("linears");
    const auto& jn = j.at("batchnorms");
    if (jl.size() != m.params.linears.size() || jn.size() != m.params.norms.size()) {
      throw Error(ErrorCode::kParse, "layer count disagrees with architecture");
    }
    for (std::size_t i = 0; i < jl.size(); ++i) {
      auto& l = m.params.linears[i];
      const std::string name = "linear" + std::to_string(i);
      l.W = matrix_from(jl[i].at("W"), l.W.rows(), l.W.cols(), name + ".W");
      l.b = vec_from(jl[i].at("b"), l.b.size(), name + ".b");
    }
    for (std::size_t i = 0; i < jn.size(); ++i) {
      auto& n = m.params.norms[i];
      const std::string name = "bn" + std::to_string(i);
      n.gamma = vec_from(jn[i].at("gamma"), n.gamma.size(), name + ".gamma");
      n.beta = vec_from(jn[i].at("beta"), n.beta.size(), name + ".beta");
      n.running_mean = vec_from(jn[i].at("running_mean"), n.running_mean.size(), name + ".running_mean");
      n.running_var = vec_from(jn[i].at("running_var"), n.running_var.size(), name + ".running_var");
    }
    const int nj = a.input_dim / 2;
    const auto& js = j.at("norm_stats");
    m.stats.mu_x = matrix_from(js.at("mu_x"), nj, 2, "mu_x");
    m.stats.sigma_x = matrix_from(js.at("sigma_x"), nj, 2, "sigma_x");
    m.stats.mu_X = matrix_from(js.at("mu_X"), nj, 3, "mu_X");
    m.stats.sigma_X = matrix_from(js.at("sigma_X"), nj, 3, "sigma_X");
    m.config = config_from(j.at("config"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model file: ") + e.what());
  }
  return m;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model '" + path + "'");
  out << model_to_json(model) << '\n';
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace mvlift
