#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alphainv/activations.hpp"
#include "alphainv/fields.hpp"
#include "alphainv/image.hpp"
#include "alphainv/scene.hpp"
#include "alphainv/transmittance_init.hpp"

namespace alphainv {

/// Oracle-rendered pixels of every camera of a scene, in camera-major order.
struct TrainingSet {
  std::vector<Ray> rays;
  std::vector<Vec3> colors;
  std::vector<double> transmittance;
};

TrainingSet make_training_set(const SceneSpec& scene, std::size_t resolution = kDefaultOracleResolution,
                              int threads = 1);

enum class OptimizerKind { Sgd, Adam };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

class Adam {
 public:
  Adam(std::size_t n, double learning_rate, AdamParams params = {});
  void step(std::span<double> theta, std::span<const double> grad);
  std::size_t steps_taken() const { return t_; }

 private:
  double lr_;
  AdamParams p_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

class Sgd {
 public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}
  void step(std::span<double> theta, std::span<const double> grad) const;

 private:
  double lr_;
};

/// Project-wide Adam learning rates (tuned on the k = 1 control, never varied with k).
inline constexpr double kVoxelLearningRate = 5e-2;
inline constexpr double kMlpLearningRate = 1e-3;

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_rays = 256;
  double learning_rate = kVoxelLearningRate;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamParams adam;
  ActivationConfig activation;
  /// When set, activation.offset is replaced by the high-transmittance offset
  /// for this spec before training.
  std::optional<InitSpec> init;
  SamplerSpec sampler{SamplerKind::Stratified, 64, 0, 0, Contraction::None};
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t log_every = 100;

  void validate() const;
};

/// Activation actually used by train() for cfg.
ActivationConfig resolve_activation(const TrainConfig& cfg);

struct LossRecord {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  Field field;
  ActivationConfig activation;
  std::vector<LossRecord> loss_curve;
  bool diverged = false;
};

/// Number of fixed gradient partitions per batch. Each partition accumulates its
/// rays in order and partitions are summed in index order, so results do not
/// depend on the worker count.
inline constexpr std::size_t kGradientChunks = 8;

/// Minimizes the mean squared color error against the oracle pixels over random
/// ray batches. A non-finite loss stops training with diverged = true.
TrainResult train(const TrainingSet& data, Field field, const TrainConfig& cfg);

/// Mean squared color error of one ray plus its gradient, scaled by loss_scale,
/// accumulated into grad. Returns the unscaled squared error summed over channels.
double ray_loss_and_grad(const Field& field, const ActivationConfig& act, const Ray& ray,
                         const RaySamples& samples, const Vec3& target, double loss_scale, Contraction contraction,
                         std::span<double> grad);

/// Renders every ray of data with a Uniform sampler of n_samples.
struct Rendered {
  std::vector<Vec3> colors;
  std::vector<double> transmittance;
  std::vector<double> depth;
};
Rendered render_rays(const Field& field, const ActivationConfig& act, std::span<const Ray> rays,
                     const SamplerSpec& sampler, int threads = 1);

Image render_view(const Field& field, const ActivationConfig& act, const SceneSpec& scene, std::size_t camera,
                  const SamplerSpec& sampler, int threads = 1);
Image ground_truth_view(const SceneSpec& scene, std::size_t camera,
                        std::size_t resolution = kDefaultOracleResolution, int threads = 1);

/// Uniform-sampler PSNR of field over all pixels of data.
double evaluate_psnr(const Field& field, const ActivationConfig& act, const TrainingSet& data,
                     std::size_t n_samples, Contraction contraction = Contraction::None, int threads = 1);

// ---------------------------------------------------------------------------
// Scaling sweep

enum class InitMode { None, HighT };

std::string_view to_string(InitMode mode);

struct Recipe {
  ActivationKind activation = ActivationKind::ExpGumbel;
  InitMode init = InitMode::HighT;

  friend bool operator==(const Recipe&, const Recipe&) = default;
};

/// "exp_gumbel:high_t", "relu:none", ...
Recipe parse_recipe(std::string_view text);
std::string to_string(const Recipe& r);

/// Per-cell step budget of the default sweep.
inline constexpr std::size_t kSweepSteps = 1500;

struct SweepConfig {
  FieldKind field_kind = FieldKind::VoxelGrid;
  std::vector<std::uint32_t> field_metadata{32};
  double field_tau = 1.0;
  double T_prime = 0.99;
  std::size_t init_samples = kDefaultInitSamples;
  std::size_t oracle_resolution = kDefaultOracleResolution;
  /// Steps, batch size, learning rate, sampler and threads; activation/init/seed are per cell.
  TrainConfig train = default_sweep_train();

  static TrainConfig default_sweep_train() {
    TrainConfig t;
    t.steps = kSweepSteps;
    return t;
  }
};

struct SweepRow {
  std::string scene;
  double k = 1.0;
  Recipe recipe;
  std::uint64_t seed = 0;
  double psnr_db = 0.0;
  double init_mean_transmittance = 1.0;
  double final_loss = 0.0;
  double offset = 0.0;
  bool diverged = false;
};

struct SweepReport {
  std::vector<SweepRow> rows;

  std::string to_csv() const;
};

/// PSNR below this at the end of training counts as divergence.
inline constexpr double kDivergedPsnr = 5.0;

/// Everything needed to set up one sweep cell.
struct CellSetup {
  SceneSpec scene;        // scaled
  Field field;            // initialized
  ActivationConfig act;   // with offset applied
  double L = 0.0;
};

CellSetup prepare_cell(const SceneSpec& base, double k, const Recipe& recipe, std::uint64_t seed,
                       const SweepConfig& cfg);

using SweepCallback = std::function<void(const SweepRow&, const TrainResult&)>;

/// For every (k, recipe, seed): scale the scene, derive L from the scaled scene,
/// initialize the field, apply the recipe's offset, train, and record PSNR and
/// the mean transmittance at initialization. n_samples is held fixed across k.
SweepReport scaling_sweep(const SceneSpec& base, std::span<const Recipe> recipes, std::span<const double> ks,
                          std::span<const std::uint64_t> seeds, const SweepConfig& cfg,
                          const SweepCallback& on_cell = {});

std::string loss_curve_csv(std::span<const LossRecord> curve);

}  // namespace alphainv
