#include "leafpipe/elm.hpp"

#include "leafpipe/errors.hpp"
#include "leafpipe/random.hpp"

#include <Eigen/QR>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace leafpipe {

std::string to_string(ElmMode m) { return m == ElmMode::closed_form ? "closed_form" : "iterative"; }

ElmMode elm_mode_from_string(const std::string& s) {
  if (s == "closed_form") return ElmMode::closed_form;
  if (s == "iterative") return ElmMode::iterative;
  throw ArgumentError("unknown ELM training mode '" + s + "'");
}

ElmConfig ElmConfig::fadm(int input_dim, std::uint64_t seed) {
  ElmConfig c;
  c.input_dim = input_dim;
  c.hidden_dim = 2 * input_dim;
  c.seed = seed;
  return c;
}

ElmConfig ElmConfig::dicdm(int image_side, std::uint64_t seed) {
  ElmConfig c;
  c.input_dim = image_side * image_side;
  c.hidden_dim = kDicdmHidden;
  c.seed = seed;
  return c;
}

Eigen::MatrixXd elm_hidden(const ElmModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_dim)
    throw ArgumentError("elm: input has " + std::to_string(x.cols()) + " columns, model expects " +
                        std::to_string(model.input_dim));
  Eigen::MatrixXd z = x * model.input_weights.transpose();
  z.rowwise() += model.hidden_bias.transpose();
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd p = scores.colwise() - scores.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  return p.array().colwise() / p.rowwise().sum().array();
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace {

Eigen::MatrixXd one_hot(const std::vector<int>& labels, int classes) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return t;
}

double cross_entropy(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& targets) {
  const Eigen::VectorXd mx = scores.rowwise().maxCoeff();
  const Eigen::VectorXd lse = ((scores.colwise() - mx).array().exp().rowwise().sum().log()).matrix() + mx;
  const Eigen::VectorXd picked = (scores.array() * targets.array()).rowwise().sum();
  return (lse - picked).mean();
}

Eigen::MatrixXd solve_closed_form(const Eigen::MatrixXd& h, const Eigen::MatrixXd& t, double ridge) {
  const Eigen::Index n = h.rows(), l = h.cols();
  Eigen::MatrixXd a(n + l, l);
  a.topRows(n) = h;
  a.bottomRows(l) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(l, l);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + l, t.cols());
  b.topRows(n) = t;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const auto r = qr.matrixQR().topLeftCorner(l, l).diagonal().cwiseAbs();
  if (r.size() > 0 && !(r.minCoeff() > 0)) throw SolverError("elm: singular regularized system");
  Eigen::MatrixXd beta = qr.solve(b);
  if (!beta.allFinite()) throw SolverError("elm: non-finite output weights");
  return beta;
}

void train_iterative(ElmModel& model, const Eigen::MatrixXd& h, const Eigen::MatrixXd& t, const ElmConfig& cfg) {
  const Eigen::Index n = h.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, {2}));
  rng.shuffle(order);
  Eigen::Index n_val = static_cast<Eigen::Index>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
  n_val = std::clamp<Eigen::Index>(n_val, n >= 2 ? 1 : 0, n - 1);
  const std::vector<Eigen::Index> val(order.begin(), order.begin() + n_val);
  std::vector<Eigen::Index> train(order.begin() + n_val, order.end());
  const Eigen::MatrixXd h_val = h(val, Eigen::all);
  const Eigen::MatrixXd t_val = t(val, Eigen::all);

  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(h.cols(), t.cols());
  Eigen::MatrixXd m1 = beta, m2 = beta, best = beta;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train);
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min<std::size_t>(cfg.batch_size, train.size() - start);
      const std::vector<Eigen::Index> idx(train.begin() + static_cast<long>(start),
                                          train.begin() + static_cast<long>(start + len));
      const Eigen::MatrixXd hb = h(idx, Eigen::all);
      const Eigen::MatrixXd grad =
          hb.transpose() * (softmax_rows(hb * beta) - t(idx, Eigen::all)) / static_cast<double>(len);
      ++step;
      m1 = b1 * m1 + (1 - b1) * grad;
      m2 = b2 * m2 + (1 - b2) * grad.cwiseProduct(grad);
      const double c1 = 1 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1 - std::pow(b2, static_cast<double>(step));
      beta.array() -= cfg.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
    }
    const double loss = n_val > 0 ? cross_entropy(h_val * beta, t_val) : 0.0;
    if (!std::isfinite(loss)) throw DivergenceError("elm: non-finite validation loss", epoch);
    model.validation_loss.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = beta;
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.output_weights = best;
}

}  // namespace

ElmModel elm_train(const Eigen::MatrixXd& x, const std::vector<int>& labels, const ElmConfig& config) {
  if (config.input_dim != x.cols())
    throw ArgumentError("elm: config input_dim " + std::to_string(config.input_dim) + " but data has " +
                        std::to_string(x.cols()) + " columns");
  if (config.hidden_dim < 1 || config.classes < 2) throw ArgumentError("elm: invalid dimensions");
  if (static_cast<Eigen::Index>(labels.size()) != x.rows() || x.rows() == 0)
    throw ArgumentError("elm: label count must match a non-empty row count");
  for (int y : labels)
    if (y < 0 || y >= config.classes) throw ArgumentError("elm: label " + std::to_string(y) + " out of range");

  ElmModel model;
  model.input_dim = config.input_dim;
  model.hidden_dim = config.hidden_dim;
  model.mode = config.mode;
  model.seed = config.seed;
  Rng rng(derive_seed(config.seed, {1}));
  model.input_weights.resize(config.hidden_dim, config.input_dim);
  for (Eigen::Index i = 0; i < model.input_weights.rows(); ++i)
    for (Eigen::Index j = 0; j < model.input_weights.cols(); ++j) model.input_weights(i, j) = rng.uniform(-1, 1);
  model.hidden_bias.resize(config.hidden_dim);
  for (Eigen::Index i = 0; i < model.hidden_bias.size(); ++i) model.hidden_bias(i) = rng.uniform(-1, 1);
  for (int c = 0; c < config.classes; ++c) model.class_names.push_back("class" + std::to_string(c));

  const Eigen::MatrixXd h = elm_hidden(model, x);
  const Eigen::MatrixXd t = one_hot(labels, config.classes);
  if (config.mode == ElmMode::closed_form)
    model.output_weights = solve_closed_form(h, t, config.ridge);
  else
    train_iterative(model, h, t, config);
  return model;
}

Eigen::MatrixXd elm_scores(const ElmModel& model, const Eigen::MatrixXd& x) {
  if (model.standardization) return elm_hidden(model, model.standardization->apply(x)) * model.output_weights;
  return elm_hidden(model, x) * model.output_weights;
}

Eigen::MatrixXd elm_predict_proba(const ElmModel& model, const Eigen::MatrixXd& x) {
  return softmax_rows(elm_scores(model, x));
}

std::vector<int> elm_predict(const ElmModel& model, const Eigen::MatrixXd& x) {
  return argmax_rows(elm_scores(model, x));
}

namespace {

void write_array(std::ostream& os, const double* data, Eigen::Index n) {
  char buf[40];
  os << '[';
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data[i]);
    if (i) os << ',';
    os << buf;
  }
  os << ']';
}

template <typename Dense>
void write_row_major(std::ostream& os, const Dense& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_array(os, rm.data(), rm.size());
}

Eigen::MatrixXd read_matrix(const nlohmann::json& j, const char* key, Eigen::Index rows, Eigen::Index cols) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw LoadError(std::string("model: '") + key + "' has the wrong size");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = arr[static_cast<std::size_t>(i * cols + k)].get<double>();
  return m;
}

}  // namespace

std::string model_to_string(const ElmModel& model, const std::string& config_hash) {
  std::ostringstream os;
  os << "{\"schema_version\":" << kModelSchemaVersion << ",\"kind\":\"elm\""
     << ",\"config_hash\":" << nlohmann::json(config_hash).dump()
     << ",\"training_mode\":\"" << to_string(model.mode) << "\""
     << ",\"input_dim\":" << model.input_dim << ",\"hidden_dim\":" << model.hidden_dim
     << ",\"classes\":" << model.classes() << ",\"seed\":" << model.seed
     << ",\"hidden_activation\":\"sigmoid\",\"output_activation\":\"softmax\""
     << ",\"class_names\":" << nlohmann::json(model.class_names).dump()
     << ",\n\"feature_names\":" << nlohmann::json(model.feature_names).dump() << ",\n\"input_weights\":";
  write_row_major(os, model.input_weights);
  os << ",\n\"hidden_bias\":";
  write_array(os, model.hidden_bias.data(), model.hidden_bias.size());
  os << ",\n\"output_weights\":";
  write_row_major(os, model.output_weights);
  os << ",\n\"standardization\":";
  if (model.standardization) {
    os << "{\"mean\":";
    write_array(os, model.standardization->mean.data(), model.standardization->mean.size());
    os << ",\"std\":";
    write_array(os, model.standardization->std.data(), model.standardization->std.size());
    os << '}';
  } else {
    os << "null";
  }
  os << "}\n";
  return os.str();
}

ElmModel model_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model: malformed document: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("schema_version")) throw LoadError("model: missing schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw VersionError("model: schema_version " + std::to_string(version) + ", expected " +
                         std::to_string(kModelSchemaVersion));
    ElmModel m;
    m.mode = elm_mode_from_string(j.at("training_mode").get<std::string>());
    m.input_dim = j.at("input_dim").get<int>();
    m.hidden_dim = j.at("hidden_dim").get<int>();
    const int classes = j.at("classes").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (!m.feature_names.empty() && static_cast<int>(m.feature_names.size()) != m.input_dim)
      throw LoadError("model: feature_names does not match input_dim");
    m.input_weights = read_matrix(j, "input_weights", m.hidden_dim, m.input_dim);
    m.hidden_bias = read_matrix(j, "hidden_bias", m.hidden_dim, 1).col(0);
    m.output_weights = read_matrix(j, "output_weights", m.hidden_dim, classes);
    if (!j.at("standardization").is_null()) {
      const auto& s = j.at("standardization");
      Standardization st;
      st.mean = read_matrix(s, "mean", 1, m.input_dim).row(0);
      st.std = read_matrix(s, "std", 1, m.input_dim).row(0);
      m.standardization = st;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model: ") + e.what());
  }
}

void model_save(const ElmModel& model, const std::filesystem::path& path, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << model_to_string(model, config_hash);
  if (!out) throw IoError("write failed: " + path.string());
}

ElmModel model_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_string(ss.str());
}

}  // namespace leafpipe
