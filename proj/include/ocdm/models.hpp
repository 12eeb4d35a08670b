// Prediction models g: x -> (r_hat, V_hat), Adam training, empirical risk
// minimization against a surrogate loss, and the benchmark predictors.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string_view>

#include "ocdm/core.hpp"
#include "ocdm/losses.hpp"
#include "ocdm/oracles.hpp"
#include "ocdm/rng.hpp"

namespace ocdm {

// Maps a flat model output to a Prediction and to the cost vector.
//
// Full layout: out = vec(r, V), length d(m+1) (see flatten()).
// Identity-consumption layout: out = r, length d, and V_hat = I (m == d).
struct OutputLayout {
  int d = 0;
  int m = 0;
  bool identity_consumption = false;

  int size() const { return identity_consumption ? d : d * (m + 1); }
  Prediction to_prediction(const Eigen::Ref<const Vec>& out) const;
  // Regression target for an observed (r, V).
  Vec target(const Vec& r, const Mat& V) const;
  // Linear map A with c = A out + offset for the price vector s.
  Mat cost_map(const Vec& s) const;
  Vec cost_offset(const Vec& s) const;
  // Column-wise A out + offset and A^T g without forming A.
  Mat apply_cost(const Eigen::Ref<const Mat>& out, const Vec& s) const;
  Mat apply_cost_transpose(const Eigen::Ref<const Mat>& g, const Vec& s) const;
};

enum class ModelKind { kLinear, kMlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Parameters live in one flat vector so Adam and finite-difference checks can
// treat every model uniformly.
class Model {
 public:
  struct Cache {
    Mat hidden_pre;  // MLP pre-activations, hidden x N
    Mat hidden;      // MLP activations, hidden x N
  };

  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;

  // X is p x N; returns out x N. cache may be null.
  virtual Mat forward_batch(const Eigen::Ref<const Mat>& X, Cache* cache) const = 0;
  // Gradient of sum_i G_out(:, i)^T out_i with respect to the parameters.
  virtual Vec backward_batch(const Eigen::Ref<const Mat>& X, const Cache& cache,
                             const Eigen::Ref<const Mat>& G_out) const = 0;

  Vec forward(const Eigen::Ref<const Vec>& x) const;
  Vec backward(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& g_out) const;

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  Eigen::Index num_params() const { return params_.size(); }

 protected:
  Vec params_;
};

// out = W x + b. Parameters: W (column-major, out x p), then b.
class LinearModel final : public Model {
 public:
  LinearModel(int p, int out);

  ModelKind kind() const override { return ModelKind::kLinear; }
  int input_dim() const override { return p_; }
  int output_dim() const override { return out_; }
  std::unique_ptr<Model> clone() const override { return std::make_unique<LinearModel>(*this); }
  Mat forward_batch(const Eigen::Ref<const Mat>& X, Cache* cache) const override;
  Vec backward_batch(const Eigen::Ref<const Mat>& X, const Cache& cache,
                     const Eigen::Ref<const Mat>& G_out) const override;

  Eigen::Map<Mat> weight() { return {params_.data(), out_, p_}; }
  Eigen::Map<const Mat> weight() const { return {params_.data(), out_, p_}; }
  Eigen::Map<Vec> bias() { return {params_.data() + out_ * p_, out_}; }
  Eigen::Map<const Vec> bias() const { return {params_.data() + out_ * p_, out_}; }

 private:
  int p_;
  int out_;
};

// out = W2 relu(W1 x + b1) + b2. Parameters: W1, b1, W2, b2 (column-major).
class MlpModel final : public Model {
 public:
  static constexpr int kDefaultHidden = 128;

  MlpModel(int p, int out, int hidden = kDefaultHidden);

  ModelKind kind() const override { return ModelKind::kMlp; }
  int input_dim() const override { return p_; }
  int output_dim() const override { return out_; }
  int hidden_dim() const { return h_; }
  std::unique_ptr<Model> clone() const override { return std::make_unique<MlpModel>(*this); }
  Mat forward_batch(const Eigen::Ref<const Mat>& X, Cache* cache) const override;
  Vec backward_batch(const Eigen::Ref<const Mat>& X, const Cache& cache,
                     const Eigen::Ref<const Mat>& G_out) const override;

  Eigen::Map<const Mat> w1() const { return {params_.data(), h_, p_}; }
  Eigen::Map<const Vec> b1() const { return {params_.data() + off_b1(), h_}; }
  Eigen::Map<const Mat> w2() const { return {params_.data() + off_w2(), out_, h_}; }
  Eigen::Map<const Vec> b2() const { return {params_.data() + off_b2(), out_}; }

 private:
  Eigen::Index off_b1() const { return static_cast<Eigen::Index>(h_) * p_; }
  Eigen::Index off_w2() const { return off_b1() + h_; }
  Eigen::Index off_b2() const { return off_w2() + static_cast<Eigen::Index>(out_) * h_; }

  int p_;
  int out_;
  int h_;
};

std::unique_ptr<Model> make_model(ModelKind kind, int p, int out);

// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void initialize(Model& model, Philox& rng);

// Checkpoint text format:
//   ocdm-model <linear|mlp> <p> <out> <hidden> <num_params>
//   <one parameter per line, %.17g>
void save_model(const Model& model, std::ostream& os);
std::unique_ptr<Model> load_model(std::istream& is);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vec m;
  Vec v;
  long step = 0;
};

void adam_step(Vec& params, const Eigen::Ref<const Vec>& grad, AdamState& state);

// Training data in column form: X is p x N, Y holds OutputLayout::target
// columns, both owned by the caller. Columns [0, n) are used.
struct TrainingSet {
  Eigen::Ref<const Mat> X;
  Eigen::Ref<const Mat> Y;
};

struct TrainOptions {
  int steps = 50;
  int batch_size = 0;  // 0: full batch
};

// Mean surrogate loss over the columns and its parameter gradient.
struct LossAndGrad {
  double loss = 0.0;
  Vec grad;
};

LossAndGrad empirical_loss(const Model& model, const TrainingSet& data, const OutputLayout& layout,
                           const DualPair& omega, double zeta, LossKind loss,
                           const FeasibleRegion& region);

// Runs options.steps Adam steps on the empirical surrogate risk at the given
// duals, warm-starting from the current parameters. Returns the loss at the
// last step (or nullopt when nothing was trained).
std::optional<double> fit_erm(Model& model, AdamState& adam, const TrainingSet& data,
                              const OutputLayout& layout, const DualPair& omega, double zeta,
                              LossKind loss, const FeasibleRegion& region,
                              const TrainOptions& options, Philox& rng);

enum class BenchmarkKind { kSaa, kTrueModel, kHindsight };

std::string_view to_string(BenchmarkKind kind);
BenchmarkKind parse_benchmark_kind(std::string_view name);

// Context-free running mean of the observed (r, V).
class SaaPredictor {
 public:
  SaaPredictor(int d, int m) : sum_r_(Vec::Zero(d)), sum_V_(Mat::Zero(d, m)) {}

  void observe(const Arrival& a);
  // Zeros before the first observation.
  Prediction predict() const;
  long count() const { return count_; }

 private:
  Vec sum_r_;
  Mat sum_V_;
  long count_ = 0;
};

using ConditionalMean = std::function<Prediction(const Vec& x)>;

// SAA: running mean; TRUE_MODEL: true_mean(x); HINDSIGHT: the current arrival.
// TRUE_MODEL without a conditional mean throws ConfigError.
Prediction benchmark_predict(BenchmarkKind kind, const Vec& x, const SaaPredictor& saa,
                             const Arrival& current, const ConditionalMean& true_mean);

}  // namespace ocdm
