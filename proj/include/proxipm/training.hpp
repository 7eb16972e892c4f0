#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "proxipm/unfolded.hpp"

namespace proxipm {

struct LrDecay {
  double factor = 0.9;
  int every_n_epochs = 10;
};

struct TrainConfig {
  int epochs_per_layer = 40;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 4;
  std::uint64_t seed = 0;
  int K = 10;
  LrDecay lr_decay;
  int workers = 0;  // 0 = automatic bounded pool

  void validate() const;
};

struct AdamState {
  Eigen::ArrayXd m;
  Eigen::ArrayXd v;
  long t = 0;

  explicit AdamState(Eigen::Index n = 0)
      : m(Eigen::ArrayXd::Zero(n)), v(Eigen::ArrayXd::Zero(n)) {}
};

/// Standard Adam update with bias correction; params updated in place.
void adam_step(AdamState& state, Eigen::ArrayXd& params,
               const Eigen::ArrayXd& grads, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

struct TrainEpochRow {
  int layer = 0;
  int epoch = 0;
  double mean_train_ssim = 0.0;
  double loss = 0.0;  // mean per-step training loss (negative SSIM)
};

struct TrainLayerRow {
  int layer = 0;
  double ssim_before = 0.0;
  double ssim_after = 0.0;
};

struct TrainReport {
  std::vector<TrainEpochRow> epochs;
  std::vector<TrainLayerRow> layers;
  double initial_ssim = 0.0;  // mean SSIM of the clamped inputs
};

void write_train_report_csv(const std::string& path,
                            const TrainReport& report);

/// Greedy layer-wise training: layer k is initialized from trained layer
/// k-1, minimizes the negative SSIM of its outputs against the ground truth
/// over the saved outputs of layer k-1, then materializes its outputs as the
/// next layer's inputs. Deterministic given the config seed.
std::pair<UnfoldedNetwork, TrainReport> train_greedy(
    const Eigen::ArrayXXd& kernel, double delta, Box box,
    const std::vector<std::pair<ImageTensor, ImageTensor>>&
        dataset,  // (truth, degraded)
    const TrainConfig& cfg);

TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

}  // namespace proxipm
