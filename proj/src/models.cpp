#include "ocdm/models.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace ocdm {

Prediction OutputLayout::to_prediction(const Eigen::Ref<const Vec>& out) const {
  if (out.size() != size()) throw ConfigError("model output length does not match layout");
  if (identity_consumption) return {out, Mat::Identity(d, m)};
  return unflatten(out, d, m);
}

Vec OutputLayout::target(const Vec& r, const Mat& V) const {
  return identity_consumption ? r : flatten(r, V);
}

Mat OutputLayout::cost_map(const Vec& s) const {
  if (identity_consumption) return Mat::Identity(d, d);
  Mat A(d, size());
  A.leftCols(d).setIdentity();
  for (int j = 0; j < m; ++j) {
    A.middleCols(static_cast<Eigen::Index>(d) * (j + 1), d) = -s[j] * Mat::Identity(d, d);
  }
  return A;
}

Vec OutputLayout::cost_offset(const Vec& s) const {
  // V_hat = I contributes the constant -s.
  if (identity_consumption) return -s;
  return Vec::Zero(d);
}

Mat OutputLayout::apply_cost(const Eigen::Ref<const Mat>& out, const Vec& s) const {
  if (identity_consumption) return out.colwise() - s;
  Mat c = out.topRows(d);
  for (int j = 0; j < m; ++j) c -= s[j] * out.middleRows(static_cast<Eigen::Index>(d) * (j + 1), d);
  return c;
}

Mat OutputLayout::apply_cost_transpose(const Eigen::Ref<const Mat>& g, const Vec& s) const {
  if (identity_consumption) return g;
  Mat out(size(), g.cols());
  out.topRows(d) = g;
  for (int j = 0; j < m; ++j) out.middleRows(static_cast<Eigen::Index>(d) * (j + 1), d) = -s[j] * g;
  return out;
}

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kLinear ? "linear" : "mlp";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "mlp" || name == "nn") return ModelKind::kMlp;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

Vec Model::forward(const Eigen::Ref<const Vec>& x) const {
  if (x.size() != input_dim()) throw ConfigError("forward: feature length mismatch");
  return forward_batch(x, nullptr).col(0);
}

Vec Model::backward(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& g_out) const {
  Cache cache;
  forward_batch(x, &cache);
  return backward_batch(x, cache, g_out);
}

LinearModel::LinearModel(int p, int out) : p_(p), out_(out) {
  if (p < 1 || out < 1) throw ConfigError("linear model: dimensions must be positive");
  params_ = Vec::Zero(static_cast<Eigen::Index>(out) * (p + 1));
}

Mat LinearModel::forward_batch(const Eigen::Ref<const Mat>& X, Cache*) const {
  if (X.rows() != p_) throw ConfigError("forward: feature length mismatch");
  Mat out = weight() * X;
  out.colwise() += bias();
  return out;
}

Vec LinearModel::backward_batch(const Eigen::Ref<const Mat>& X, const Cache&,
                                const Eigen::Ref<const Mat>& G_out) const {
  Vec grad(params_.size());
  Eigen::Map<Mat>(grad.data(), out_, p_).noalias() = G_out * X.transpose();
  grad.tail(out_) = G_out.rowwise().sum();
  return grad;
}

MlpModel::MlpModel(int p, int out, int hidden) : p_(p), out_(out), h_(hidden) {
  if (p < 1 || out < 1 || hidden < 1) throw ConfigError("mlp: dimensions must be positive");
  params_ = Vec::Zero(off_b2() + out_);
}

Mat MlpModel::forward_batch(const Eigen::Ref<const Mat>& X, Cache* cache) const {
  if (X.rows() != p_) throw ConfigError("forward: feature length mismatch");
  Mat pre = w1() * X;
  pre.colwise() += b1();
  Mat hidden = pre.cwiseMax(0.0);
  Mat out = w2() * hidden;
  out.colwise() += b2();
  if (cache != nullptr) {
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Vec MlpModel::backward_batch(const Eigen::Ref<const Mat>& X, const Cache& cache,
                             const Eigen::Ref<const Mat>& G_out) const {
  Vec grad(params_.size());
  Eigen::Map<Mat>(grad.data() + off_w2(), out_, h_).noalias() = G_out * cache.hidden.transpose();
  grad.segment(off_b2(), out_) = G_out.rowwise().sum();
  Mat g_hidden = w2().transpose() * G_out;
  g_hidden = (cache.hidden_pre.array() > 0.0).select(g_hidden, 0.0);
  Eigen::Map<Mat>(grad.data(), h_, p_).noalias() = g_hidden * X.transpose();
  grad.segment(off_b1(), h_) = g_hidden.rowwise().sum();
  return grad;
}

std::unique_ptr<Model> make_model(ModelKind kind, int p, int out) {
  if (kind == ModelKind::kLinear) return std::make_unique<LinearModel>(p, out);
  return std::make_unique<MlpModel>(p, out);
}

void initialize(Model& model, Philox& rng) {
  auto fill = [&](double* data, Eigen::Index count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < count; ++i) data[i] = rng.uniform(-bound, bound);
  };
  Vec& params = model.params();
  const int p = model.input_dim();
  if (model.kind() == ModelKind::kLinear) {
    fill(params.data(), params.size(), p);
    return;
  }
  const int h = static_cast<const MlpModel&>(model).hidden_dim();
  const Eigen::Index first = static_cast<Eigen::Index>(h) * (p + 1);
  fill(params.data(), first, p);
  fill(params.data() + first, params.size() - first, h);
}

void save_model(const Model& model, std::ostream& os) {
  const int hidden =
      model.kind() == ModelKind::kMlp ? static_cast<const MlpModel&>(model).hidden_dim() : 0;
  os << "ocdm-model " << to_string(model.kind()) << ' ' << model.input_dim() << ' '
     << model.output_dim() << ' ' << hidden << ' ' << model.num_params() << '\n';
  char buf[32];
  for (double v : model.params()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
}

std::unique_ptr<Model> load_model(std::istream& is) {
  std::string magic, kind;
  int p = 0, out = 0, hidden = 0;
  long count = 0;
  if (!(is >> magic >> kind >> p >> out >> hidden >> count) || magic != "ocdm-model") {
    throw ConfigError("load_model: bad header");
  }
  std::unique_ptr<Model> model;
  if (parse_model_kind(kind) == ModelKind::kLinear) {
    model = std::make_unique<LinearModel>(p, out);
  } else {
    model = std::make_unique<MlpModel>(p, out, hidden);
  }
  if (count != model->num_params()) throw ConfigError("load_model: parameter count mismatch");
  for (double& v : model->params()) {
    std::string token;
    if (!(is >> token)) throw ConfigError("load_model: truncated parameters");
    v = std::stod(token);
  }
  return model;
}

void adam_step(Vec& params, const Eigen::Ref<const Vec>& grad, AdamState& s) {
  if (grad.size() != params.size()) throw ConfigError("adam_step: gradient shape mismatch");
  if (s.m.size() != params.size()) {
    s.m = Vec::Zero(params.size());
    s.v = Vec::Zero(params.size());
  }
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  params.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

namespace {

// Surrogate objective at fixed duals. The realized cost vectors and, for SPO+,
// their optimal decisions do not depend on the model and are computed once.
class Objective {
 public:
  Objective(const TrainingSet& data, const OutputLayout& layout, const DualPair& omega,
            double zeta, LossKind loss, const FeasibleRegion& region)
      : data_(data), layout_(layout), loss_(loss), region_(region) {
    if (data.Y.rows() != layout.size() || data.X.cols() != data.Y.cols()) {
      throw ConfigError("training set shape does not match layout");
    }
    if (loss == LossKind::kLsPred) return;
    const Vec s = price_vector(omega, zeta);
    if (s.size() != layout.m) throw ConfigError("dual dimension does not match layout");
    s_ = s;
    C_ = layout.apply_cost(data.Y, s_);
    if (loss == LossKind::kSpoPlus) {
      W_star_.resize(C_.rows(), C_.cols());
      for (Eigen::Index i = 0; i < C_.cols(); ++i) W_star_.col(i) = region.solve(C_.col(i));
    }
  }

  // Mean loss over the listed columns (all columns when cols is empty).
  LossAndGrad evaluate(const Model& model, const std::vector<Eigen::Index>& cols) const {
    if (cols.empty()) return evaluate_on(model, data_.X, data_.Y, C_, W_star_);
    const Mat X = data_.X(Eigen::all, cols);
    const Mat Y = loss_ == LossKind::kLsPred ? Mat(data_.Y(Eigen::all, cols)) : Mat();
    const Mat C = loss_ == LossKind::kLsPred ? Mat() : Mat(C_(Eigen::all, cols));
    const Mat W = loss_ == LossKind::kSpoPlus ? Mat(W_star_(Eigen::all, cols)) : Mat();
    return evaluate_on(model, X, Y, C, W);
  }

 private:
  LossAndGrad evaluate_on(const Model& model, const Eigen::Ref<const Mat>& X,
                          const Eigen::Ref<const Mat>& Y, const Eigen::Ref<const Mat>& C,
                          const Eigen::Ref<const Mat>& W_star) const {
    const Eigen::Index n = X.cols();
    Model::Cache cache;
    Mat G_out = model.forward_batch(X, &cache);
    const double inv_n = 1.0 / static_cast<double>(n);
    LossAndGrad result;
    switch (loss_) {
      case LossKind::kLsPred: {
        G_out -= Y;
        result.loss = G_out.squaredNorm() * inv_n;
        G_out *= 2.0 * inv_n;
        break;
      }
      case LossKind::kLsCost: {
        Mat diff = layout_.apply_cost(G_out, s_) - C;
        result.loss = diff.squaredNorm() * inv_n;
        diff *= 2.0 * inv_n;
        G_out = layout_.apply_cost_transpose(diff, s_);
        break;
      }
      case LossKind::kSpoPlus: {
        const Mat shifted = 2.0 * layout_.apply_cost(G_out, s_) - C;
        Mat G_c(C.rows(), n);
        const double scale = spo_plus_subgrad_sign() * inv_n;
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const Vec w_shifted = region_.solve(shifted.col(i));
          total += shifted.col(i).dot(w_shifted) - shifted.col(i).dot(W_star.col(i));
          G_c.col(i) = scale * (w_shifted - W_star.col(i));
        }
        result.loss = total * inv_n;
        G_out = layout_.apply_cost_transpose(G_c, s_);
        break;
      }
    }
    result.grad = model.backward_batch(X, cache, G_out);
    return result;
  }

  const TrainingSet& data_;
  OutputLayout layout_;
  LossKind loss_;
  const FeasibleRegion& region_;
  Vec s_;
  Mat C_;
  Mat W_star_;
};

}  // namespace

LossAndGrad empirical_loss(const Model& model, const TrainingSet& data, const OutputLayout& layout,
                           const DualPair& omega, double zeta, LossKind loss,
                           const FeasibleRegion& region) {
  if (data.X.cols() == 0) throw ConfigError("empirical_loss: empty training set");
  return Objective(data, layout, omega, zeta, loss, region).evaluate(model, {});
}

std::optional<double> fit_erm(Model& model, AdamState& adam, const TrainingSet& data,
                              const OutputLayout& layout, const DualPair& omega, double zeta,
                              LossKind loss, const FeasibleRegion& region,
                              const TrainOptions& options, Philox& rng) {
  if (data.X.cols() == 0 || options.steps <= 0) return std::nullopt;
  const Objective objective(data, layout, omega, zeta, loss, region);
  const Eigen::Index n = data.X.cols();
  const bool minibatch = options.batch_size > 0 && options.batch_size < n;
  std::vector<Eigen::Index> cols;
  double last = 0.0;
  for (int step = 0; step < options.steps; ++step) {
    if (minibatch) {
      cols.resize(static_cast<std::size_t>(options.batch_size));
      for (auto& c : cols) c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    const LossAndGrad lg = objective.evaluate(model, cols);
    last = lg.loss;
    adam_step(model.params(), lg.grad, adam);
  }
  return last;
}

std::string_view to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::kSaa:
      return "saa";
    case BenchmarkKind::kTrueModel:
      return "true_model";
    case BenchmarkKind::kHindsight:
      return "hindsight";
  }
  return "?";
}

BenchmarkKind parse_benchmark_kind(std::string_view name) {
  if (name == "saa") return BenchmarkKind::kSaa;
  if (name == "true_model" || name == "true") return BenchmarkKind::kTrueModel;
  if (name == "hindsight") return BenchmarkKind::kHindsight;
  throw ConfigError("unknown benchmark '" + std::string(name) + "'");
}

void SaaPredictor::observe(const Arrival& a) {
  sum_r_ += a.r;
  sum_V_ += a.V;
  ++count_;
}

Prediction SaaPredictor::predict() const {
  if (count_ == 0) return {Vec::Zero(sum_r_.size()), Mat::Zero(sum_V_.rows(), sum_V_.cols())};
  const double n = static_cast<double>(count_);
  return {sum_r_ / n, sum_V_ / n};
}

Prediction benchmark_predict(BenchmarkKind kind, const Vec& x, const SaaPredictor& saa,
                             const Arrival& current, const ConditionalMean& true_mean) {
  switch (kind) {
    case BenchmarkKind::kSaa:
      return saa.predict();
    case BenchmarkKind::kTrueModel:
      if (!true_mean) throw ConfigError("true_model benchmark needs a synthetic instance");
      return true_mean(x);
    case BenchmarkKind::kHindsight:
      return {current.r, current.V};
  }
  throw ConfigError("unknown benchmark");
}

}  // namespace ocdm
